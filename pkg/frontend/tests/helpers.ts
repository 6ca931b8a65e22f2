import { readFile } from "node:fs/promises";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { FileProvider } from "../src/bundle";

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
export const BUNDLE_DIR = join(FIXTURES, "bundle");

export const fsProvider =
  (root: string): FileProvider =>
  async (rel) => {
    const data = await readFile(join(root, rel));
    return data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength);
  };

/** fsProvider with per-path overrides; `null` simulates a missing file. */
export const patchedProvider = (
  root: string,
  patches: Record<string, ArrayBuffer | string | null>,
): FileProvider => {
  const base = fsProvider(root);
  return async (rel) => {
    if (rel in patches) {
      const p = patches[rel];
      if (p === null || p === undefined) throw new Error(`missing: ${rel}`);
      return typeof p === "string" ? new TextEncoder().encode(p).buffer as ArrayBuffer : p;
    }
    return base(rel);
  };
};

export interface OrbitFixture {
  target: [number, number, number];
  poses: {
    azimuth_deg: number;
    elevation_deg: number;
    radius_mm: number;
    position: [number, number, number];
    ranking: number[];
    active_camera: number;
  }[];
}

export async function loadOrbitFixture(): Promise<OrbitFixture> {
  const raw = await readFile(join(FIXTURES, "orbit.json"), "utf-8");
  return JSON.parse(raw) as OrbitFixture;
}
