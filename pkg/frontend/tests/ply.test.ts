import { readFile } from "node:fs/promises";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { parsePly, PlyError } from "../src/ply";
import { BUNDLE_DIR } from "./helpers";

const toArrayBuffer = (b: Buffer): ArrayBuffer =>
  b.buffer.slice(b.byteOffset, b.byteOffset + b.byteLength) as ArrayBuffer;

describe("parsePly", () => {
  it("parses a bundle mesh and matches the manifest triangle count", async () => {
    const manifest = JSON.parse(await readFile(join(BUNDLE_DIR, "manifest.json"), "utf-8"));
    const entry = manifest.meshes[0];
    const mesh = parsePly(toArrayBuffer(await readFile(join(BUNDLE_DIR, entry.file))));

    expect(mesh.objectIds.length).toBe(entry.triangles);
    expect(mesh.indices.length).toBe(3 * entry.triangles);
    expect(mesh.positions.length % 3).toBe(0);
    expect(mesh.positions.length).toBeGreaterThan(0);
    // every triangle carries the object id the file is named for
    expect(new Set(mesh.objectIds)).toEqual(new Set([entry.object_id]));
    // indices are in range (parser validates, but pin the bound too)
    const nVertex = mesh.positions.length / 3;
    for (const idx of mesh.indices) expect(idx).toBeLessThan(nVertex);
  });

  it("parses vertices as finite millimeter coordinates", async () => {
    const manifest = JSON.parse(await readFile(join(BUNDLE_DIR, "manifest.json"), "utf-8"));
    for (const entry of manifest.meshes) {
      const mesh = parsePly(toArrayBuffer(await readFile(join(BUNDLE_DIR, entry.file))));
      for (const v of mesh.positions) expect(Number.isFinite(v)).toBe(true);
    }
  });

  it("rejects non-PLY data", () => {
    expect(() => parsePly(new TextEncoder().encode("obj\nnope").buffer as ArrayBuffer)).toThrow(
      PlyError,
    );
  });

  it("rejects ascii PLY", () => {
    const ascii =
      "ply\nformat ascii 1.0\nelement vertex 0\nelement face 0\nend_header\n";
    expect(() => parsePly(new TextEncoder().encode(ascii).buffer as ArrayBuffer)).toThrow(
      /binary_little_endian/,
    );
  });

  it("rejects truncated bodies", async () => {
    const manifest = JSON.parse(await readFile(join(BUNDLE_DIR, "manifest.json"), "utf-8"));
    const whole = toArrayBuffer(await readFile(join(BUNDLE_DIR, manifest.meshes[0].file)));
    expect(() => parsePly(whole.slice(0, whole.byteLength - 16))).toThrow(/truncated/);
  });
});
