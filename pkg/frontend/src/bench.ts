// FPS harness: renders a 35k-node synthetic field (or the live server's
// field when reachable) under continuous scripted pan/zoom and reports the
// sustained frame rate. Open bench.html and watch the readout; the target
// is >= 30 FPS during motion.

import { ApiClient } from './api.js';
import { Camera } from './camera.js';
import { PointRenderer, packNodes } from './renderer.js';
import { Scene } from './scene.js';
import type { NodeKind, NodeRecord } from './types.js';

function syntheticField(n = 35000, seed = 7): NodeRecord[] {
  // deterministic mulberry32 so runs are comparable
  let state = seed >>> 0;
  const rand = () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  const kinds: NodeKind[] = ['author', 'dataset', 'bio_entity'];
  const nodes: NodeRecord[] = [];
  const clusters = 24;
  const centers = Array.from({ length: clusters }, () => [rand() * 80 - 40, rand() * 80 - 40]);
  for (let i = 0; i < n; i++) {
    const c = centers[i % clusters];
    const kind = i % 1000 === 0 ? kinds[1] : i % 7 === 0 ? kinds[2] : kinds[0];
    const pubs = Math.floor(rand() * 120);
    nodes.push({
      node_id: `S${i}`,
      kind,
      x: c[0] + (rand() - 0.5) * 14,
      y: c[1] + (rand() - 0.5) * 14,
      size: 2 + 1.5 * Math.log1p(pubs),
      publication_count: pubs,
      career_start_year: kind === 'author' ? 1985 + Math.floor(rand() * 38) : null,
      name: `Synthetic ${i}`,
    });
  }
  return nodes;
}

async function loadNodes(): Promise<NodeRecord[]> {
  try {
    const api = new ApiClient('/api/v1');
    const field = await api.fetchAllNodes();
    if (field.nodes.length >= 1000) return field.nodes;
  } catch {
    // fall through to the synthetic field
  }
  return syntheticField();
}

async function run(): Promise<void> {
  const canvas = document.getElementById('map') as HTMLCanvasElement;
  const readout = document.getElementById('readout')!;
  const gl = canvas.getContext('webgl2');
  if (!gl) {
    readout.textContent = 'WebGL2 unavailable';
    return;
  }
  const nodes = await loadNodes();
  const scene = new Scene(nodes);
  const renderer = new PointRenderer(gl);
  renderer.upload(packNodes(scene.nodes));

  const dpr = window.devicePixelRatio || 1;
  canvas.width = Math.round(canvas.clientWidth * dpr);
  canvas.height = Math.round(canvas.clientHeight * dpr);
  const camera = new Camera();
  camera.fitBounds(scene.bounds.x0, scene.bounds.y0, scene.bounds.x1, scene.bounds.y1,
    canvas.width, canvas.height);
  const base = camera.snapshot();

  let frames = 0;
  let windowStart = performance.now();
  const fpsLog: number[] = [];

  function frame(now: number): void {
    // scripted continuous pan/zoom: orbit the center while breathing zoom
    const t = now / 1000;
    camera.cx = base.cx + Math.cos(t * 0.7) * 12;
    camera.cy = base.cy + Math.sin(t * 0.9) * 12;
    camera.zoom = base.zoom * (1.4 + Math.sin(t * 0.5));
    renderer.draw(camera, canvas.width, canvas.height);
    frames += 1;
    if (now - windowStart >= 1000) {
      const fps = (frames * 1000) / (now - windowStart);
      fpsLog.push(fps);
      const recent = fpsLog.slice(-10);
      const avg = recent.reduce((a, b) => a + b, 0) / recent.length;
      readout.textContent =
        `${nodes.length.toLocaleString()} nodes · ${fps.toFixed(1)} FPS now · ` +
        `${avg.toFixed(1)} FPS (10s avg) · target ≥ 30`;
      frames = 0;
      windowStart = now;
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

void run();
