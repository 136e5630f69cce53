// Application wiring: canvas + WebGL renderer, pan/zoom/hover/click, the
// two search boxes (locate vs highlight collaborators), filter panel with
// URL round-trip, info window with recommendations and "Why Recommend?",
// and the teaming chat pane with optional A/B voting.

import { ApiClient } from './api.js';
import { Camera } from './camera.js';
import { ChatPane } from './chat.js';
import { ALL_KINDS, defaultFilters, filtersFromQuery, filtersToQuery, isDefault } from './filters.js';
import type { FilterState } from './filters.js';
import { PointRenderer, applyState, applyVisibility, packNodes } from './renderer.js';
import { Scene } from './scene.js';
import type { CandidatePayload, NodeKind } from './types.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

async function boot(): Promise<void> {
  const api = new ApiClient('/api/v1');
  const status = $('status');
  status.textContent = 'loading node field…';

  const [meta, field] = await Promise.all([api.meta(), api.fetchAllNodes()]);
  const scene = new Scene(field.nodes);
  status.textContent = `${field.returned.toLocaleString()} nodes · snapshot ${String(
    (meta as { snapshot?: string }).snapshot ?? '?',
  )}`;

  const canvas = $('map') as unknown as HTMLCanvasElement;
  const gl = canvas.getContext('webgl2');
  if (!gl) {
    status.textContent = 'WebGL2 unavailable in this browser';
    throw new Error('webgl2 required');
  }
  const renderer = new PointRenderer(gl);
  const packed = packNodes(scene.nodes);
  renderer.upload(packed);

  const camera = new Camera();
  const fit = () => {
    camera.fitBounds(
      scene.bounds.x0, scene.bounds.y0, scene.bounds.x1, scene.bounds.y1,
      canvas.clientWidth, canvas.clientHeight,
    );
  };

  function resize(): void {
    const dpr = window.devicePixelRatio || 1;
    canvas.width = Math.round(canvas.clientWidth * dpr);
    canvas.height = Math.round(canvas.clientHeight * dpr);
  }
  window.addEventListener('resize', resize);
  resize();
  fit();

  let dirty = true;
  const redraw = () => { dirty = true; };

  function syncState(): void {
    applyState(packed, scene.indexOf, scene.highlights, scene.selection);
    renderer.updateState(packed);
    redraw();
  }

  function syncVisibility(): void {
    applyVisibility(packed, scene.visible);
    renderer.updateVisibility(packed);
    redraw();
  }

  function frame(now: number): void {
    if (camera.tick(now)) dirty = true;
    if (dirty) {
      renderer.draw(camera, canvas.width, canvas.height);
      dirty = false;
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);

  // ---------------------------------------------------------------- pan/zoom
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  const dpr = () => canvas.width / canvas.clientWidth;

  canvas.addEventListener('mousedown', (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  window.addEventListener('mouseup', () => { dragging = false; });

  const tooltip = $('tooltip');
  canvas.addEventListener('mousemove', (ev) => {
    const rect = canvas.getBoundingClientRect();
    if (dragging) {
      camera.panByPixels((ev.clientX - lastX) * dpr(), (ev.clientY - lastY) * dpr());
      lastX = ev.clientX;
      lastY = ev.clientY;
      redraw();
      return;
    }
    const [wx, wy] = camera.screenToWorld(
      (ev.clientX - rect.left) * dpr(), (ev.clientY - rect.top) * dpr(), canvas.width, canvas.height,
    );
    const hit = scene.pick(wx, wy, 12 / camera.zoom);
    scene.hover = hit;
    if (hit) {
      const node = scene.get(hit)!;
      tooltip.style.display = 'block';
      tooltip.style.left = `${ev.clientX - rect.left + 14}px`;
      tooltip.style.top = `${ev.clientY - rect.top + 14}px`;
      tooltip.textContent = `${node.name} (${node.kind}, ${node.publication_count} papers)`;
    } else {
      tooltip.style.display = 'none';
    }
  });

  canvas.addEventListener('wheel', (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    const factor = Math.exp(-ev.deltaY * 0.0015);
    camera.zoomBy(
      factor, (ev.clientX - rect.left) * dpr(), (ev.clientY - rect.top) * dpr(),
      canvas.width, canvas.height,
    );
    redraw();
  }, { passive: false });

  canvas.addEventListener('click', (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [wx, wy] = camera.screenToWorld(
      (ev.clientX - rect.left) * dpr(), (ev.clientY - rect.top) * dpr(), canvas.width, canvas.height,
    );
    const hit = scene.pick(wx, wy, 12 / camera.zoom);
    scene.setSelection(hit);
    syncState();
    if (hit) void openInfoWindow(hit);
    else $('info').innerHTML = '';
  });

  function flyToNode(id: string): void {
    const node = scene.get(id);
    if (!node) return;
    camera.flyTo(node.x, node.y, Math.max(camera.zoom, 40), performance.now());
    redraw();
  }

  // ------------------------------------------------------------- info window
  async function openInfoWindow(id: string): Promise<void> {
    const info = $('info');
    const detail = await api.node(id);
    const rows: string[] = [`<h3>${escapeHtml(detail.name)}</h3>`, `<p class="kind">${detail.kind}</p>`];
    if (detail.kind === 'author') {
      rows.push(`<p>${escapeHtml(detail.affiliation ?? '')}</p>`);
      rows.push(`<p>Publications: ${detail.publication_count}</p>`);
      if (detail.career_start_year) rows.push(`<p>Career start: ${detail.career_start_year}</p>`);
    } else if (detail.kind === 'dataset') {
      rows.push(`<p>${escapeHtml(detail.description ?? '')}</p>`);
      rows.push(`<p>Using papers: ${detail.user_paper_count}</p>`);
    }
    rows.push(
      `<p><a href="${detail.detail_url}" target="_blank">Detail</a> · ` +
      `<button id="btn-recs">Recommendations</button> · ` +
      `<button id="btn-chat">Find collaborators interactively</button></p>`,
      `<div id="recs"></div>`,
    );
    info.innerHTML = rows.join('');
    $('btn-recs').addEventListener('click', () => void openRecommendations(id));
    $('btn-chat').addEventListener('click', () => {
      if (detail.kind === 'author') chatAuthor.value = id;
      ($('chat-input') as HTMLInputElement).focus();
    });
  }

  async function openRecommendations(id: string): Promise<void> {
    const recsEl = $('recs');
    recsEl.innerHTML = '<p>loading…</p>';
    try {
      const payload = await api.recommendations(id);
      const cards = payload.recommendations.slice(0, 10).map((rec) => `
        <div class="card" data-id="${escapeHtml(rec.candidate_id)}">
          <b>${rec.rank}. ${escapeHtml(rec.name || rec.candidate_id)}</b>
          <span class="score">${rec.score.toFixed(4)}</span>
          <button class="why" data-id="${escapeHtml(rec.candidate_id)}">Why Recommend?</button>
          <div class="why-text" id="why-${escapeHtml(rec.candidate_id)}"></div>
        </div>`);
      recsEl.innerHTML = `<h4>${payload.kind}</h4>` + cards.join('');
      recsEl.querySelectorAll('button.why').forEach((btn) => {
        btn.addEventListener('click', async (ev) => {
          ev.stopPropagation();
          const cid = (btn as HTMLElement).dataset.id!;
          const target = $(`why-${cid}`);
          if (target.textContent) return; // client-side cache: second expand is instant
          target.textContent = '…';
          const just = await api.recommendations(id, cid);
          target.textContent = just.justification?.text ?? '';
        });
      });
      recsEl.querySelectorAll('div.card').forEach((card) => {
        card.addEventListener('click', () => {
          const cid = (card as HTMLElement).dataset.id!;
          if (scene.has(cid)) {
            scene.setSelection(cid);
            syncState();
            flyToNode(cid);
          }
        });
      });
    } catch (err) {
      recsEl.innerHTML = `<p class="error">${escapeHtml(String(err))}</p>`;
    }
  }

  // ------------------------------------------------------------ search boxes
  const searchBox = $('search') as unknown as HTMLInputElement;
  const searchResults = $('search-results');
  searchBox.addEventListener('input', async () => {
    const q = searchBox.value.trim();
    if (!q) {
      searchResults.innerHTML = '';
      return;
    }
    const { results } = await api.search(q);
    searchResults.innerHTML = results
      .map((r) => `<li data-id="${escapeHtml(r.node_id)}">${escapeHtml(r.name)} <i>${r.kind}</i></li>`)
      .join('');
    searchResults.querySelectorAll('li').forEach((li) => {
      li.addEventListener('click', () => {
        const id = (li as HTMLElement).dataset.id!;
        searchResults.innerHTML = '';
        if (scene.has(id)) {
          scene.setSelection(id);
          syncState();
          flyToNode(id); // camera zooms to the chosen node
          void openInfoWindow(id);
        }
      });
    });
  });

  const highlightBox = $('highlight') as unknown as HTMLInputElement;
  const highlightStatus = $('highlight-status');
  highlightBox.addEventListener('change', async () => {
    const q = highlightBox.value.trim();
    if (!q) {
      scene.clearHighlights(); // clearing the box removes all tints
      highlightStatus.textContent = '';
      syncState();
      return;
    }
    const { results } = await api.search(q, 'author');
    if (!results.length) {
      highlightStatus.textContent = 'no such author';
      return;
    }
    const { collaborator_ids } = await api.collaborators(results[0].node_id);
    const applied = scene.setHighlights(collaborator_ids);
    highlightStatus.textContent = `${applied} collaborators of ${results[0].name} in blue`;
    syncState();
  });

  // ------------------------------------------------------------ filter panel
  const kindBoxes = new Map<NodeKind, HTMLInputElement>(
    ALL_KINDS.map((k) => [k, $(`kind-${k}`) as unknown as HTMLInputElement]),
  );
  const numInputs = {
    pubsMin: $('pubs-min') as unknown as HTMLInputElement,
    pubsMax: $('pubs-max') as unknown as HTMLInputElement,
    careerMin: $('career-min') as unknown as HTMLInputElement,
    careerMax: $('career-max') as unknown as HTMLInputElement,
  };
  const countBanner = $('count-banner');

  function filtersFromPanel(): FilterState {
    const f = defaultFilters();
    f.kinds = new Set(ALL_KINDS.filter((k) => kindBoxes.get(k)!.checked));
    const num = (el: HTMLInputElement) => (el.value === '' ? null : Number.parseInt(el.value, 10));
    f.pubsMin = num(numInputs.pubsMin);
    f.pubsMax = num(numInputs.pubsMax);
    f.careerMin = num(numInputs.careerMin);
    f.careerMax = num(numInputs.careerMax);
    return f;
  }

  function panelFromFilters(f: FilterState): void {
    for (const k of ALL_KINDS) kindBoxes.get(k)!.checked = f.kinds.has(k);
    numInputs.pubsMin.value = f.pubsMin?.toString() ?? '';
    numInputs.pubsMax.value = f.pubsMax?.toString() ?? '';
    numInputs.careerMin.value = f.careerMin?.toString() ?? '';
    numInputs.careerMax.value = f.careerMax?.toString() ?? '';
  }

  function applyFilters(f: FilterState, pushUrl: boolean): void {
    const shown = scene.setFilters(f);
    syncVisibility();
    countBanner.textContent = shown === scene.nodes.length
      ? `${shown.toLocaleString()} nodes`
      : `${shown.toLocaleString()} of ${scene.nodes.length.toLocaleString()} nodes match`;
    if (pushUrl) {
      const query = filtersToQuery(f);
      history.replaceState(null, '', query ? `?${query}` : location.pathname);
    }
  }

  $('apply-filters').addEventListener('click', () => applyFilters(filtersFromPanel(), true));
  $('clear-filters').addEventListener('click', () => {
    panelFromFilters(defaultFilters());
    applyFilters(defaultFilters(), true);
  });

  // filter state round-trips through the URL query string
  const initial = filtersFromQuery(location.search.replace(/^\?/, ''));
  panelFromFilters(initial);
  if (!isDefault(initial)) applyFilters(initial, false);
  else countBanner.textContent = `${scene.nodes.length.toLocaleString()} nodes`;

  // -------------------------------------------------------------- chat pane
  const chatAuthor = $('chat-author') as unknown as HTMLInputElement;
  const chatInput = $('chat-input') as unknown as HTMLInputElement;
  const chatLog = $('chat-log');
  const chatCards = $('chat-cards');
  const abToggle = $('ab-mode') as unknown as HTMLInputElement;
  let pane: ChatPane | null = null;

  function candidateCard(cand: CandidatePayload): string {
    const mutual = cand.mutual_coauthors.length
      ? `<div>Mutual Co-Authors: ${cand.mutual_coauthors
          .map((a) => escapeHtml(scene.get(a)?.name ?? a))
          .join(', ')}</div>`
      : '';
    const dist = cand.distance !== null
      ? `<div>Distance within the Co-Authorship Network: ${cand.distance}</div>`
      : '';
    return `
    <div class="card chat-card" data-id="${escapeHtml(cand.candidate_id)}">
      <b>${escapeHtml(cand.name)} (Score: ${cand.score})</b>
      <div class="affil">${escapeHtml(cand.affiliation)}</div>
      <div>${escapeHtml(cand.justification)}</div>
      ${mutual}${dist}
    </div>`;
  }

  function renderChat(): void {
    if (!pane) return;
    chatLog.innerHTML = pane.transcript
      .map((t) => `<div class="turn ${t.role}"><pre>${escapeHtml(t.text)}</pre></div>`)
      .join('');
    chatLog.scrollTop = chatLog.scrollHeight;
    if (pane.ab) {
      const col = (label: 'A' | 'B') => `
        <div class="ab-col">
          <h4>Model ${label}</h4>
          <button class="vote" data-label="${label}" ${pane!.voteEnabled ? '' : 'disabled'}>
            ${pane!.voted === label ? 'voted' : `${label} is better`}
          </button>
          ${pane!.ab![label].map(candidateCard).join('')}
        </div>`;
      chatCards.innerHTML = `<div class="ab-wrap">${col('A')}${col('B')}</div>`;
      chatCards.querySelectorAll('button.vote').forEach((btn) => {
        btn.addEventListener('click', async () => {
          const label = (btn as HTMLElement).dataset.label as 'A' | 'B';
          await pane!.vote(api, label); // fires POST /feedback once, then locks
          renderChat();
        });
      });
    } else {
      chatCards.innerHTML = pane.cards.map(candidateCard).join('');
    }
    chatCards.querySelectorAll('div.chat-card').forEach((card) => {
      card.addEventListener('click', () => {
        const cid = (card as HTMLElement).dataset.id!;
        if (scene.has(cid)) {
          scene.setSelection(cid);
          syncState();
          flyToNode(cid);
        }
      });
    });
  }

  $('chat-send').addEventListener('click', async () => {
    const message = chatInput.value.trim();
    if (!message) return;
    const author = chatAuthor.value.trim() || null;
    if (!pane || pane.authorId !== author || pane.abMode !== abToggle.checked) {
      pane = new ChatPane(`web-${Date.now().toString(36)}`, author, abToggle.checked);
    }
    chatInput.value = '';
    try {
      await pane.send(api, message);
    } catch {
      // error turn already recorded in the transcript
    }
    renderChat();
  });
}

boot().catch((err) => {
  const status = document.getElementById('status');
  if (status) status.textContent = String(err);
  console.error(err);
});
