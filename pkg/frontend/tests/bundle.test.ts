import { readFile } from "node:fs/promises";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { BundleError, loadBundle } from "../src/bundle";
import { BUNDLE_DIR, fsProvider, patchedProvider } from "./helpers";

describe("loadBundle", () => {
  it("loads the two-object fixture bundle", async () => {
    const b = await loadBundle(fsProvider(BUNDLE_DIR));
    expect(b.meshes.length).toBe(2);
    expect(b.cameras.length).toBe(8);
    expect(b.totalTriangles).toBe(
      b.meshes.reduce((n, m) => n + m.objectIds.length, 0),
    );
    expect(b.visibility.size).toBe(8);
    for (const flags of b.visibility.values()) {
      expect(flags.length).toBe(b.totalTriangles);
    }
    expect(b.textures.size).toBe(8);
    expect(b.stageLo).toEqual([-1000, -1000, 0]);
    expect(b.stageHi).toEqual([1000, 1000, 1000]);
    // camera centers derived from R, t are finite and distinct
    const keys = new Set(b.cameras.map((c) => c.center.join(",")));
    expect(keys.size).toBe(8);
  });

  it("rejects unknown schema versions", async () => {
    const manifest = JSON.parse(await readFile(join(BUNDLE_DIR, "manifest.json"), "utf-8"));
    manifest.schema_version = 999;
    const provider = patchedProvider(BUNDLE_DIR, {
      "manifest.json": JSON.stringify(manifest),
    });
    await expect(loadBundle(provider)).rejects.toThrow(/schema version 999/);
  });

  it("surfaces a missing mesh file by name", async () => {
    const provider = patchedProvider(BUNDLE_DIR, {
      "meshes/object_001.ply": null,
    });
    await expect(loadBundle(provider)).rejects.toThrow(
      /missing mesh file: meshes\/object_001\.ply/,
    );
  });

  it("rejects visibility vectors of the wrong length", async () => {
    const provider = patchedProvider(BUNDLE_DIR, {
      "visibility/cam_003.bin": new ArrayBuffer(7),
    });
    await expect(loadBundle(provider)).rejects.toThrow(/7 flags/);
  });

  it("loads an empty bundle without crashing", async () => {
    const manifest = JSON.parse(await readFile(join(BUNDLE_DIR, "manifest.json"), "utf-8"));
    manifest.meshes = [];
    manifest.visibility = {};
    manifest.textures = {};
    const provider = patchedProvider(BUNDLE_DIR, {
      "manifest.json": JSON.stringify(manifest),
    });
    const b = await loadBundle(provider);
    expect(b.meshes.length).toBe(0);
    expect(b.totalTriangles).toBe(0);
  });

  it("rejects malformed manifest JSON with a BundleError", async () => {
    const provider = patchedProvider(BUNDLE_DIR, { "manifest.json": "{nope" });
    await expect(loadBundle(provider)).rejects.toThrow(BundleError);
  });
});
