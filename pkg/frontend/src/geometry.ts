/** Small vector helpers and the camera-selection rule.
 *
 * The ranking here must match the reconstruction side decision-for-
 * decision: cameras sorted by distance from the virtual viewpoint's
 * optical center, ties broken toward the lower camera id.
 */

export type Vec3 = [number, number, number];

export interface RigCamera {
  id: number;
  imageSize: [number, number];
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  /** world-to-camera rotation, row-major 3x3 */
  rotation: number[][];
  translation: Vec3;
  /** optical center in world coordinates: C = -R^T t */
  center: Vec3;
}

export function cameraCenter(rotation: number[][], translation: number[]): Vec3 {
  const c: Vec3 = [0, 0, 0];
  for (let i = 0; i < 3; i++) {
    let acc = 0;
    for (let r = 0; r < 3; r++) {
      acc -= rotation[r]![i]! * translation[r]!;
    }
    c[i as 0 | 1 | 2] = acc;
  }
  return c;
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

/** Camera ids sorted by distance from `pos`; ties -> lower id. */
export function rankCameras(pos: Vec3, cameras: readonly RigCamera[]): number[] {
  return cameras
    .map((cam) => ({ id: cam.id, d2: dot(sub(cam.center, pos), sub(cam.center, pos)) }))
    .sort((a, b) => (a.d2 !== b.d2 ? a.d2 - b.d2 : a.id - b.id))
    .map((e) => e.id);
}

/** Position on the orbit sphere around `target` (z-up, degrees). */
export function orbitPosition(
  target: Vec3,
  azimuthDeg: number,
  elevationDeg: number,
  radius: number,
): Vec3 {
  const az = (azimuthDeg * Math.PI) / 180;
  const el = (elevationDeg * Math.PI) / 180;
  return [
    target[0] + radius * Math.cos(el) * Math.cos(az),
    target[1] + radius * Math.cos(el) * Math.sin(az),
    target[2] + radius * Math.sin(el),
  ];
}
