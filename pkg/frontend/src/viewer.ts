/** three.js presentation layer.
 *
 * Texturing is approximated per triangle: faces are tinted by their
 * selected source camera (first ranked camera that sees the triangle)
 * rather than resampling camera frames per pixel; the selection rule,
 * not shading fidelity, is the contract this surface exposes.
 */

import * as THREE from "three";
import { LoadedBundle } from "./bundle";
import { ParsedMesh } from "./ply";
import { ViewerState } from "./state";

const OBJECT_PALETTE = [0x8dd3c7, 0xbebada, 0xfb8072, 0x80b1d3, 0xfdb462, 0xb3de69];
const CAMERA_PALETTE = [
  0xe41a1c, 0x377eb8, 0x4daf4a, 0x984ea3, 0xff7f00, 0xf2d11f, 0xa65628, 0xf781bf,
  0x999999, 0x66c2a5, 0xfc8d62, 0x8da0cb,
];
const FALLBACK_GREY = 0x808080;
const OCCLUDED_RED = 0xcc2222;

function mergedGeometry(meshes: ParsedMesh[]): THREE.BufferGeometry {
  // de-indexed so every triangle owns its vertices and can be colored flat
  let totalTris = 0;
  for (const m of meshes) totalTris += m.objectIds.length;
  const pos = new Float32Array(totalTris * 9);
  const objectOfTri = new Int32Array(totalTris);
  let t = 0;
  for (const m of meshes) {
    for (let f = 0; f < m.objectIds.length; f++, t++) {
      objectOfTri[t] = m.objectIds[f]!;
      for (let k = 0; k < 3; k++) {
        const v = m.indices[3 * f + k]!;
        pos.set(m.positions.subarray(3 * v, 3 * v + 3), 9 * t + 3 * k);
      }
    }
  }
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.BufferAttribute(pos, 3));
  geo.setAttribute("color", new THREE.BufferAttribute(new Float32Array(totalTris * 9), 3));
  geo.userData.objectOfTri = objectOfTri;
  geo.computeVertexNormals();
  return geo;
}

/** First camera in `ranking` whose visibility flag for the triangle is set. */
export function triangleSource(
  ranking: readonly number[],
  visibility: Map<number, Uint8Array>,
  tri: number,
): number {
  for (const camId of ranking) {
    const flags = visibility.get(camId);
    if (flags && flags[tri]) return camId;
  }
  return -1;
}

export class Viewer {
  readonly state: ViewerState;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly geometry: THREE.BufferGeometry;
  private readonly material: THREE.MeshLambertMaterial;
  private readonly hud: HTMLElement;

  constructor(state: ViewerState, canvas: HTMLCanvasElement, hud: HTMLElement) {
    this.state = state;
    this.hud = hud;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, canvas.width / canvas.height, 10, 1e6);
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.65));
    const sun = new THREE.DirectionalLight(0xffffff, 1.1);
    sun.position.set(1, 1, 2);
    this.scene.add(sun);

    this.geometry = mergedGeometry(state.bundle.meshes);
    this.material = new THREE.MeshLambertMaterial({ vertexColors: true });
    const mesh = new THREE.Mesh(this.geometry, this.material);
    this.scene.add(mesh);
    for (const cam of state.bundle.cameras) {
      const marker = new THREE.Mesh(
        new THREE.SphereGeometry(60),
        new THREE.MeshBasicMaterial({ color: CAMERA_PALETTE[cam.id % CAMERA_PALETTE.length] }),
      );
      marker.position.set(...cam.center);
      this.scene.add(marker);
    }
    this.attachControls(canvas);
    this.refresh();
  }

  private attachControls(canvas: HTMLCanvasElement): void {
    let dragging = false;
    canvas.addEventListener("pointerdown", () => (dragging = true));
    window.addEventListener("pointerup", () => (dragging = false));
    canvas.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      this.state.updateViewpoint({
        azimuthDeg: this.state.pose.azimuthDeg - 0.4 * ev.movementX,
        elevationDeg: this.state.pose.elevationDeg + 0.3 * ev.movementY,
      });
      this.refresh();
    });
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.state.updateViewpoint({
        radiusMm: this.state.pose.radiusMm * Math.exp(0.001 * ev.deltaY),
      });
      this.refresh();
    });
  }

  toggleOverlay(name: "sourceMap" | "occlusion" | "wireframe"): void {
    this.state.toggleOverlay(name);
    this.refresh();
  }

  private triangleColor(tri: number): number {
    const { overlays, ranking, activeCamera, bundle } = this.state;
    if (overlays.occlusion) {
      const flags = bundle.visibility.get(activeCamera);
      return flags && flags[tri] ? OBJECT_PALETTE[0]! : OCCLUDED_RED;
    }
    if (overlays.sourceMap) {
      const source = triangleSource(ranking, bundle.visibility, tri);
      return source < 0 ? FALLBACK_GREY : CAMERA_PALETTE[source % CAMERA_PALETTE.length]!;
    }
    const objectOfTri = this.geometry.userData.objectOfTri as Int32Array;
    return OBJECT_PALETTE[objectOfTri[tri]! % OBJECT_PALETTE.length]!;
  }

  refresh(): void {
    const colorAttr = this.geometry.getAttribute("color") as THREE.BufferAttribute;
    const colors = colorAttr.array as Float32Array;
    const nTris = colors.length / 9;
    const c = new THREE.Color();
    for (let t = 0; t < nTris; t++) {
      c.setHex(this.triangleColor(t));
      for (let k = 0; k < 3; k++) colors.set([c.r, c.g, c.b], 9 * t + 3 * k);
    }
    colorAttr.needsUpdate = true;
    this.material.wireframe = this.state.overlays.wireframe;

    const [x, y, z] = this.state.position;
    this.camera.position.set(x, y, z);
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(...this.state.pose.target);
    this.renderer.render(this.scene, this.camera);

    const pose = this.state.pose;
    this.hud.textContent =
      `active camera: ${this.state.activeCamera}  |  ` +
      `az ${pose.azimuthDeg.toFixed(1)}°  el ${pose.elevationDeg.toFixed(1)}°  ` +
      `r ${(pose.radiusMm / 1000).toFixed(2)} m  |  ` +
      `ranking: [${this.state.ranking.join(", ")}]`;
  }
}
