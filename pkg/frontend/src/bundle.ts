/** Scene-bundle loading and validation.
 *
 * The loader is I/O-agnostic: callers supply a FileProvider that
 * resolves bundle-relative paths (fetch in the browser, fs in tests).
 */

import { cameraCenter, RigCamera, Vec3 } from "./geometry";
import { ParsedMesh, parsePly } from "./ply";

export type FileProvider = (relPath: string) => Promise<ArrayBuffer>;

export const SCHEMA_VERSION = 1;

export class BundleError extends Error {}

interface MeshEntry {
  object_id: number;
  file: string;
  triangles: number;
}

export interface Manifest {
  schema_version: number;
  frame_id: number;
  rig: string;
  stage: { lo: Vec3 | null; hi: Vec3 | null };
  meshes: MeshEntry[];
  textures: Record<string, string>;
  visibility: Record<string, { file: string; triangles: number }>;
  stats: Record<string, number>;
}

export interface LoadedBundle {
  manifest: Manifest;
  cameras: RigCamera[];
  /** one mesh per object, manifest order */
  meshes: ParsedMesh[];
  /** camera id -> per-triangle flags over the merged mesh */
  visibility: Map<number, Uint8Array>;
  /** camera id -> raw PNG bytes */
  textures: Map<number, ArrayBuffer>;
  stageLo: Vec3;
  stageHi: Vec3;
  totalTriangles: number;
}

async function readJson(files: FileProvider, path: string): Promise<unknown> {
  let buf: ArrayBuffer;
  try {
    buf = await files(path);
  } catch (e) {
    throw new BundleError(`missing bundle file: ${path}`);
  }
  try {
    return JSON.parse(new TextDecoder().decode(buf));
  } catch (e) {
    throw new BundleError(`malformed JSON in ${path}`);
  }
}

function parseRig(raw: unknown): RigCamera[] {
  const cams = (raw as { cameras?: unknown[] }).cameras;
  if (!Array.isArray(cams) || cams.length === 0) {
    throw new BundleError("rig manifest has no cameras");
  }
  const seen = new Set<number>();
  return cams.map((c) => {
    const d = c as Record<string, unknown>;
    const id = Number(d.id);
    if (!Number.isInteger(id) || seen.has(id)) {
      throw new BundleError(`bad or duplicate camera id ${String(d.id)}`);
    }
    seen.add(id);
    const rotation = d.rotation as number[][];
    const translation = d.translation as Vec3;
    return {
      id,
      imageSize: d.image_size as [number, number],
      fx: Number(d.fx),
      fy: Number(d.fy),
      cx: Number(d.cx),
      cy: Number(d.cy),
      rotation,
      translation,
      center: cameraCenter(rotation, translation),
    };
  });
}

export async function loadBundle(files: FileProvider): Promise<LoadedBundle> {
  const manifest = (await readJson(files, "manifest.json")) as Manifest;
  if (manifest.schema_version !== SCHEMA_VERSION) {
    throw new BundleError(
      `unsupported bundle schema version ${manifest.schema_version} (viewer supports ${SCHEMA_VERSION})`,
    );
  }
  const cameras = parseRig(await readJson(files, manifest.rig));

  const meshes: ParsedMesh[] = [];
  let totalTriangles = 0;
  for (const entry of manifest.meshes) {
    let buf: ArrayBuffer;
    try {
      buf = await files(entry.file);
    } catch (e) {
      throw new BundleError(`missing mesh file: ${entry.file}`);
    }
    const mesh = parsePly(buf);
    if (mesh.objectIds.length !== entry.triangles) {
      throw new BundleError(
        `${entry.file}: ${mesh.objectIds.length} triangles, manifest says ${entry.triangles}`,
      );
    }
    meshes.push(mesh);
    totalTriangles += entry.triangles;
  }

  const visibility = new Map<number, Uint8Array>();
  for (const [camId, entry] of Object.entries(manifest.visibility)) {
    let buf: ArrayBuffer;
    try {
      buf = await files(entry.file);
    } catch (e) {
      throw new BundleError(`missing visibility file: ${entry.file}`);
    }
    const flags = new Uint8Array(buf);
    if (flags.length !== totalTriangles) {
      throw new BundleError(
        `${entry.file}: ${flags.length} flags for ${totalTriangles} triangles`,
      );
    }
    visibility.set(Number(camId), flags);
  }

  const textures = new Map<number, ArrayBuffer>();
  for (const [camId, rel] of Object.entries(manifest.textures)) {
    try {
      textures.set(Number(camId), await files(rel));
    } catch (e) {
      throw new BundleError(`missing texture file: ${rel}`);
    }
  }

  const stageLo = manifest.stage.lo ?? [0, 0, 0];
  const stageHi = manifest.stage.hi ?? [0, 0, 0];
  return { manifest, cameras, meshes, visibility, textures, stageLo, stageHi, totalTriangles };
}
