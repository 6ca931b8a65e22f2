import { FileProvider, loadBundle } from "./bundle";
import { ViewerState } from "./state";
import { Viewer } from "./viewer";

const fetchProvider =
  (base: string): FileProvider =>
  async (rel) => {
    const res = await fetch(`${base}/${rel}`);
    if (!res.ok) throw new Error(`${rel}: HTTP ${res.status}`);
    return res.arrayBuffer();
  };

async function boot(): Promise<void> {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const hud = document.getElementById("hud")!;
  const status = document.getElementById("status")!;
  const params = new URLSearchParams(window.location.search);
  const base = params.get("bundle") ?? "tests/fixtures/bundle";

  status.textContent = `loading ${base} …`;
  let viewer: Viewer;
  try {
    const bundle = await loadBundle(fetchProvider(base));
    viewer = new Viewer(new ViewerState(bundle), canvas, hud);
    status.textContent = `${bundle.meshes.length} objects, ${bundle.totalTriangles} triangles, ${bundle.cameras.length} cameras`;
  } catch (e) {
    status.textContent = `load failed: ${e instanceof Error ? e.message : String(e)}`;
    return;
  }

  for (const name of ["sourceMap", "occlusion", "wireframe"] as const) {
    document.getElementById(`toggle-${name}`)!.addEventListener("click", () => {
      viewer.toggleOverlay(name);
    });
  }
}

void boot();
