// Filter panel state: node kinds plus publication-count and career-start
// ranges. State round-trips through the URL query string so views are
// shareable.

import type { NodeKind, NodeRecord } from './types.js';

export const ALL_KINDS: NodeKind[] = ['author', 'dataset', 'bio_entity'];

export interface FilterState {
  kinds: Set<NodeKind>;
  pubsMin: number | null;
  pubsMax: number | null;
  careerMin: number | null;
  careerMax: number | null;
}

export function defaultFilters(): FilterState {
  return { kinds: new Set(ALL_KINDS), pubsMin: null, pubsMax: null, careerMin: null, careerMax: null };
}

export function filtersToQuery(f: FilterState): string {
  const params = new URLSearchParams();
  if (f.kinds.size !== ALL_KINDS.length) {
    params.set('kinds', ALL_KINDS.filter((k) => f.kinds.has(k)).join(','));
  }
  if (f.pubsMin !== null) params.set('pubs_min', String(f.pubsMin));
  if (f.pubsMax !== null) params.set('pubs_max', String(f.pubsMax));
  if (f.careerMin !== null) params.set('career_min', String(f.careerMin));
  if (f.careerMax !== null) params.set('career_max', String(f.careerMax));
  return params.toString();
}

export function filtersFromQuery(query: string): FilterState {
  const params = new URLSearchParams(query);
  const f = defaultFilters();
  const kinds = params.get('kinds');
  if (kinds) {
    const parsed = kinds
      .split(',')
      .filter((k): k is NodeKind => (ALL_KINDS as string[]).includes(k));
    if (parsed.length) f.kinds = new Set(parsed);
  }
  const int = (key: string): number | null => {
    const raw = params.get(key);
    if (raw === null || raw === '') return null;
    const value = Number.parseInt(raw, 10);
    return Number.isFinite(value) ? value : null;
  };
  f.pubsMin = int('pubs_min');
  f.pubsMax = int('pubs_max');
  f.careerMin = int('career_min');
  f.careerMax = int('career_max');
  return f;
}

export function filtersEqual(a: FilterState, b: FilterState): boolean {
  return filtersToQuery(a) === filtersToQuery(b);
}

// mirrors the server predicate: career range constrains author nodes only
export function nodePassesFilter(node: NodeRecord, f: FilterState): boolean {
  if (!f.kinds.has(node.kind)) return false;
  if (f.pubsMin !== null && node.publication_count < f.pubsMin) return false;
  if (f.pubsMax !== null && node.publication_count > f.pubsMax) return false;
  if (node.kind === 'author') {
    if (f.careerMin !== null && (node.career_start_year === null || node.career_start_year < f.careerMin)) {
      return false;
    }
    if (f.careerMax !== null && (node.career_start_year === null || node.career_start_year > f.careerMax)) {
      return false;
    }
  }
  return true;
}

export function isDefault(f: FilterState): boolean {
  return filtersToQuery(f) === '';
}
