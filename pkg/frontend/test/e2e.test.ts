// End-to-end scripted session against a real --mock-llm server:
// search -> zoom to node -> highlight collaborators in blue -> open
// recommendations -> expand "Why Recommend?" -> teaming chat with an A/B
// vote. Every payload is checked against a golden file (floats rounded to
// 4 dp; set UPDATE_GOLDENS=1 to regenerate).
//
// The test spawns the Python CLI itself (synth -> build -> serve), so the
// talentkg package must be installed (pip install -e .. --no-build-isolation).

import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, existsSync, mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, dirname } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { Camera, FLY_MS } from '../src/camera.js';
import { ChatPane } from '../src/chat.js';
import { applyState, packNodes } from '../src/renderer.js';
import { Scene } from '../src/scene.js';

const GOLDEN_DIR = join(dirname(fileURLToPath(import.meta.url)), 'golden');
const PORT = 8771;
const SEED = 77;

function roundFloats(value: unknown): unknown {
  if (typeof value === 'number' && !Number.isInteger(value)) {
    return Math.round(value * 1e4) / 1e4;
  }
  if (Array.isArray(value)) return value.map(roundFloats);
  if (value && typeof value === 'object') {
    return Object.fromEntries(
      Object.entries(value as Record<string, unknown>).map(([k, v]) => [k, roundFloats(v)]),
    );
  }
  return value;
}

function checkGolden(name: string, payload: unknown): void {
  mkdirSync(GOLDEN_DIR, { recursive: true });
  const path = join(GOLDEN_DIR, `${name}.json`);
  const pretty = JSON.stringify(roundFloats(payload), null, 2) + '\n';
  if (!existsSync(path) || process.env.UPDATE_GOLDENS) {
    writeFileSync(path, pretty);
    return;
  }
  expect(JSON.parse(pretty), `golden mismatch: ${name}`).toEqual(JSON.parse(readFileSync(path, 'utf-8')));
}

let server: ChildProcess | null = null;
let api: ApiClient;
let scene: Scene;

async function waitForHealth(base: string, timeoutMs = 90_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${base}/healthz`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error('server never became healthy');
}

beforeAll(async () => {
  const work = mkdtempSync(join(tmpdir(), 'tkg-e2e-'));
  const corpus = join(work, 'corpus');
  const artifacts = join(work, 'artifacts');
  const run = (args: string[]) => {
    const out = spawnSync('python3', ['-m', 'talentkg.cli', '--log-level', 'warning', ...args], {
      encoding: 'utf-8',
    });
    if (out.status !== 0) {
      throw new Error(`talentkg ${args[0]} failed: ${out.stderr}`);
    }
  };
  run(['synth', corpus, '--authors', '60', '--papers', '150', '--datasets', '8',
       '--bio-entities', '10', '--seed', String(SEED)]);
  run(['build', corpus, artifacts, '--seed', '5']);
  server = spawn('python3', ['-m', 'talentkg.cli', 'serve', artifacts, '--port', String(PORT), '--mock-llm'], {
    stdio: 'ignore',
  });
  api = new ApiClient(`http://127.0.0.1:${PORT}/api/v1`);
  await waitForHealth(`http://127.0.0.1:${PORT}/api/v1`);
  const field = await api.fetchAllNodes();
  scene = new Scene(field.nodes);
}, 180_000);

afterAll(() => {
  server?.kill();
});

describe('scripted explorer session against the mock-LLM server', () => {
  let targetId = '';
  let candidateId = '';

  it('loads the full node field once at startup', () => {
    expect(scene.nodes.length).toBeGreaterThan(60);
    const kinds = new Set(scene.nodes.map((n) => n.kind));
    expect(kinds).toEqual(new Set(['author', 'dataset', 'bio_entity']));
  });

  it('step 1: search finds the author by exact name', async () => {
    const firstAuthor = scene.nodes.find((n) => n.kind === 'author')!;
    const { results } = await api.search(firstAuthor.name);
    expect(results[0].node_id).toBe(firstAuthor.node_id);
    targetId = results[0].node_id;
    checkGolden('search_author', results);
  });

  it('step 2: the camera flies to the selected node in 400ms', () => {
    const node = scene.get(targetId)!;
    scene.setSelection(targetId);
    const camera = new Camera({ cx: 0, cy: 0, zoom: 1 });
    camera.flyTo(node.x, node.y, 60, 0);
    camera.tick(0);
    expect(camera.flying).toBe(true);
    camera.tick(FLY_MS);
    expect(camera.flying).toBe(false);
    expect(camera.cx).toBeCloseTo(node.x, 9);
    expect(camera.cy).toBeCloseTo(node.y, 9);
  });

  it('step 3: collaborator highlight paints exactly the blue set', async () => {
    const payload = await api.collaborators(targetId);
    checkGolden('collaborators', payload);
    const applied = scene.setHighlights(payload.collaborator_ids);
    expect(applied).toBe(payload.collaborator_ids.filter((id) => scene.has(id)).length);
    const packed = packNodes(scene.nodes);
    applyState(packed, scene.indexOf, scene.highlights, scene.selection);
    const highlighted = scene.nodes.filter((_, i) => packed.state[i] === 1).map((n) => n.node_id);
    expect(new Set(highlighted)).toEqual(new Set([...scene.highlights].filter((id) => id !== targetId)));
    // clearing the box removes all tints
    scene.clearHighlights();
    applyState(packed, scene.indexOf, scene.highlights, scene.selection);
    expect([...packed.state].filter((s) => s === 1).length).toBe(0);
  });

  it('step 4: recommendations arrive ranked with descending scores', async () => {
    const payload = await api.recommendations(targetId);
    expect(payload.kind).toBe('collaborators');
    const scores = payload.recommendations.map((r) => r.score);
    expect(scores).toEqual([...scores].sort((a, b) => b - a));
    candidateId = payload.recommendations[0].candidate_id;
    checkGolden('recommendations', {
      ...payload,
      recommendations: payload.recommendations.slice(0, 5),
    });
  });

  it('step 5: "Why Recommend?" returns cached justification text', async () => {
    const first = await api.recommendations(targetId, candidateId);
    expect(first.justification?.candidate_id).toBe(candidateId);
    expect(first.justification?.text.length).toBeGreaterThan(0);
    const second = await api.recommendations(targetId, candidateId);
    expect(second.justification).toEqual(first.justification); // server cache
    checkGolden('justification', first.justification);
  });

  it('step 6: teaming chat returns scored candidates with paths', async () => {
    const pane = new ChatPane('e2e-chat', targetId);
    const turn = await pane.send(api, 'seeking machine learning for single cell analysis');
    expect(pane.transcript.map((t) => t.role)).toEqual(['user', 'agent']);
    expect(turn.query).toBeTruthy();
    expect(turn.candidates.length).toBeGreaterThan(0);
    for (const cand of turn.candidates) {
      expect(cand.score).toBeGreaterThanOrEqual(0);
      expect(cand.score).toBeLessThanOrEqual(100);
      if (cand.shortest_path) {
        expect(cand.distance).toBe(cand.shortest_path.length - 1);
      }
    }
    checkGolden('teaming_turn', turn);
  });

  it('step 7: A/B turn enables one vote and locks after it', async () => {
    const pane = new ChatPane('e2e-ab', targetId, true);
    const turn = await pane.send(api, 'need expertise in network biology modelling');
    expect(turn.ab).not.toBeNull();
    expect(Object.keys(turn.ab!)).toEqual(['A', 'B']);
    expect(pane.voteEnabled).toBe(true);
    await pane.vote(api, 'A');
    expect(pane.voteLocked).toBe(true);
    await expect(pane.vote(api, 'B')).rejects.toThrow(/already/);
    checkGolden('ab_turn', turn);
  });

  it('chat responses are byte-stable across identical fresh sessions', async () => {
    const a = await api.teamingMessage('stability-1', {
      message: 'graph neural networks for proteomics',
      author_id: targetId,
    });
    const b = await api.teamingMessage('stability-2', {
      message: 'graph neural networks for proteomics',
      author_id: targetId,
    });
    // same inputs, different sessions: candidate content identical
    expect(b.candidates).toEqual(a.candidates);
    expect(b.query).toBe(a.query);
  });
});
