/** Viewer state: orbit pose, active reference camera, overlay toggles.
 *
 * Pose updates recompute the camera ranking with the same rule as the
 * reconstruction side; overlay toggles are presentation-only and never
 * touch pose or selection.
 */

import { LoadedBundle } from "./bundle";
import { norm, orbitPosition, rankCameras, sub, Vec3 } from "./geometry";

export interface OrbitPose {
  target: Vec3;
  azimuthDeg: number;
  elevationDeg: number;
  radiusMm: number;
}

export interface Overlays {
  sourceMap: boolean;
  occlusion: boolean;
  wireframe: boolean;
}

export class ViewerState {
  readonly bundle: LoadedBundle;
  pose: OrbitPose;
  overlays: Overlays = { sourceMap: false, occlusion: false, wireframe: false };
  private rankingCache: number[];

  constructor(bundle: LoadedBundle, pose?: OrbitPose) {
    this.bundle = bundle;
    this.pose = pose ?? ViewerState.framingPose(bundle);
    this.rankingCache = rankCameras(this.position, bundle.cameras);
  }

  /** Initial orbit framing the stage box: its center, seen from far
   * enough out that the whole diagonal fits a ~50 degree view. */
  static framingPose(bundle: LoadedBundle): OrbitPose {
    const { stageLo: lo, stageHi: hi } = bundle;
    const target: Vec3 = [
      (lo[0] + hi[0]) / 2,
      (lo[1] + hi[1]) / 2,
      (lo[2] + hi[2]) / 2,
    ];
    const diagonal = norm(sub(hi, lo));
    return {
      target,
      azimuthDeg: 0,
      elevationDeg: 20,
      radiusMm: Math.max(1.2 * diagonal, 1),
    };
  }

  get position(): Vec3 {
    return orbitPosition(
      this.pose.target,
      this.pose.azimuthDeg,
      this.pose.elevationDeg,
      this.pose.radiusMm,
    );
  }

  get ranking(): readonly number[] {
    return this.rankingCache;
  }

  get activeCamera(): number {
    const first = this.rankingCache[0];
    if (first === undefined) throw new Error("rig has no cameras");
    return first;
  }

  updateViewpoint(delta: Partial<OrbitPose>): void {
    this.pose = { ...this.pose, ...delta };
    this.pose.elevationDeg = Math.min(89, Math.max(-89, this.pose.elevationDeg));
    this.pose.radiusMm = Math.max(1, this.pose.radiusMm);
    this.rankingCache = rankCameras(this.position, this.bundle.cameras);
  }

  toggleOverlay(name: keyof Overlays): void {
    this.overlays = { ...this.overlays, [name]: !this.overlays[name] };
  }
}
