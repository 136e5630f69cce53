// Scene state: the loaded node field, selection, blue highlight set, hover
// target, and active filters. Picking runs against a uniform spatial grid
// so hover stays cheap at 35k nodes.

import type { FilterState } from './filters.js';
import { defaultFilters, nodePassesFilter } from './filters.js';
import type { NodeRecord } from './types.js';

export class Scene {
  readonly nodes: NodeRecord[];
  readonly indexOf: Map<string, number>;
  selection: string | null = null;
  hover: string | null = null;
  highlights: Set<string> = new Set();
  filters: FilterState = defaultFilters();
  visible: Uint8Array;
  bounds: { x0: number; y0: number; x1: number; y1: number };

  private cellSize: number;
  private grid: Map<string, number[]> = new Map();

  constructor(nodes: NodeRecord[]) {
    this.nodes = nodes;
    this.indexOf = new Map(nodes.map((n, i) => [n.node_id, i]));
    if (this.indexOf.size !== nodes.length) {
      throw new Error('duplicate node ids in scene');
    }
    this.visible = new Uint8Array(nodes.length).fill(1);
    let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
    for (const n of nodes) {
      x0 = Math.min(x0, n.x); x1 = Math.max(x1, n.x);
      y0 = Math.min(y0, n.y); y1 = Math.max(y1, n.y);
    }
    if (!nodes.length) { x0 = y0 = -1; x1 = y1 = 1; }
    this.bounds = { x0, y0, x1, y1 };
    const span = Math.max(x1 - x0, y1 - y0, 1e-9);
    this.cellSize = span / 128;
    nodes.forEach((n, i) => {
      const key = this.cellKey(n.x, n.y);
      const cell = this.grid.get(key);
      if (cell) cell.push(i);
      else this.grid.set(key, [i]);
    });
  }

  private cellKey(x: number, y: number): string {
    return `${Math.floor(x / this.cellSize)}:${Math.floor(y / this.cellSize)}`;
  }

  has(id: string): boolean {
    return this.indexOf.has(id);
  }

  get(id: string): NodeRecord | undefined {
    const i = this.indexOf.get(id);
    return i === undefined ? undefined : this.nodes[i];
  }

  setSelection(id: string | null): void {
    if (id !== null && !this.indexOf.has(id)) {
      throw new Error(`selection must reference a loaded node: ${id}`);
    }
    this.selection = id;
  }

  /** Replace the blue highlight set; unknown ids are dropped. */
  setHighlights(ids: Iterable<string>): number {
    this.highlights = new Set([...ids].filter((id) => this.indexOf.has(id)));
    return this.highlights.size;
  }

  clearHighlights(): void {
    this.highlights.clear();
  }

  setFilters(filters: FilterState): number {
    this.filters = filters;
    let shown = 0;
    this.nodes.forEach((n, i) => {
      const ok = nodePassesFilter(n, filters) ? 1 : 0;
      this.visible[i] = ok;
      shown += ok;
    });
    return shown;
  }

  visibleCount(): number {
    let count = 0;
    for (const bit of this.visible) count += bit;
    return count;
  }

  /** Nearest visible node within radiusWorld of (wx, wy), or null. */
  pick(wx: number, wy: number, radiusWorld: number): string | null {
    const reach = Math.max(1, Math.ceil(radiusWorld / this.cellSize));
    const cx = Math.floor(wx / this.cellSize);
    const cy = Math.floor(wy / this.cellSize);
    let best: number = -1;
    let bestDist = radiusWorld * radiusWorld;
    for (let gx = cx - reach; gx <= cx + reach; gx++) {
      for (let gy = cy - reach; gy <= cy + reach; gy++) {
        const cell = this.grid.get(`${gx}:${gy}`);
        if (!cell) continue;
        for (const i of cell) {
          if (!this.visible[i]) continue;
          const n = this.nodes[i];
          const dx = n.x - wx;
          const dy = n.y - wy;
          const d = dx * dx + dy * dy;
          if (d < bestDist || (d === bestDist && best >= 0 && n.node_id < this.nodes[best].node_id)) {
            best = i;
            bestDist = d;
          }
        }
      }
    }
    return best >= 0 ? this.nodes[best].node_id : null;
  }
}
