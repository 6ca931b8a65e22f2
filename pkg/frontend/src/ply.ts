/** Minimal parser for the bundle's PLY flavor.
 *
 * Expects `format binary_little_endian 1.0` with float32 vertex x/y/z
 * and faces of `uchar count, 3 x int32 indices, int32 object_id`.
 */

export interface ParsedMesh {
  positions: Float32Array; // 3 per vertex
  indices: Uint32Array; // 3 per triangle
  objectIds: Int32Array; // 1 per triangle
}

export class PlyError extends Error {}

const HEADER_END = "end_header\n";
const MAX_HEADER_BYTES = 4096;

export function parsePly(buf: ArrayBuffer): ParsedMesh {
  const probe = new TextDecoder().decode(buf.slice(0, MAX_HEADER_BYTES));
  const endAt = probe.indexOf(HEADER_END);
  if (!probe.startsWith("ply\n") || endAt < 0) {
    throw new PlyError("not a PLY file");
  }
  const header = probe.slice(0, endAt);
  const lines = header.split("\n");
  if (!lines.includes("format binary_little_endian 1.0")) {
    throw new PlyError("unsupported PLY format (need binary_little_endian 1.0)");
  }
  let nVertex = -1;
  let nFace = -1;
  for (const line of lines) {
    const m = line.match(/^element (vertex|face) (\d+)$/);
    if (m) {
      if (m[1] === "vertex") nVertex = Number(m[2]);
      else nFace = Number(m[2]);
    }
  }
  if (nVertex < 0 || nFace < 0) {
    throw new PlyError("PLY header missing vertex/face elements");
  }

  const bodyStart = endAt + HEADER_END.length;
  const vertexBytes = nVertex * 3 * 4;
  const faceBytes = nFace * (1 + 3 * 4 + 4);
  if (buf.byteLength < bodyStart + vertexBytes + faceBytes) {
    throw new PlyError("PLY body truncated");
  }

  const positions = new Float32Array(buf.slice(bodyStart, bodyStart + vertexBytes));
  const indices = new Uint32Array(nFace * 3);
  const objectIds = new Int32Array(nFace);
  const view = new DataView(buf, bodyStart + vertexBytes);
  let off = 0;
  for (let t = 0; t < nFace; t++) {
    const count = view.getUint8(off);
    if (count !== 3) throw new PlyError(`face ${t} has ${count} vertices (expected 3)`);
    off += 1;
    for (let k = 0; k < 3; k++) {
      const idx = view.getInt32(off, true);
      if (idx < 0 || idx >= nVertex) {
        throw new PlyError(`face ${t} references vertex ${idx} of ${nVertex}`);
      }
      indices[3 * t + k] = idx;
      off += 4;
    }
    objectIds[t] = view.getInt32(off, true);
    off += 4;
  }
  return { positions, indices, objectIds };
}
