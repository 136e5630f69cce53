export type NodeKind = 'author' | 'dataset' | 'bio_entity';

export interface NodeRecord {
  node_id: string;
  kind: NodeKind;
  x: number;
  y: number;
  size: number;
  publication_count: number;
  career_start_year: number | null;
  name: string;
}

export interface NodesResponse {
  nodes: NodeRecord[];
  total_matched: number;
  returned: number;
  decimated: boolean;
}

export interface SearchHit {
  node_id: string;
  name: string;
  kind: NodeKind;
  publication_count: number;
  match_position: number;
}

export interface RecommendationRow {
  candidate_id: string;
  name: string;
  score: number;
  rank: number;
}

export interface RecommendationsResponse {
  query_id: string;
  kind: 'collaborators' | 'dataset_users';
  recommendations: RecommendationRow[];
  justification?: { candidate_id: string; text: string };
}

export interface CandidatePayload {
  candidate_id: string;
  name: string;
  affiliation: string;
  score: number;
  justification: string;
  retrieval_score: number;
  shortest_path: string[] | null;
  mutual_coauthors: string[];
  distance: number | null;
}

export interface TeamingTurnResponse {
  session_id: string;
  query: string | null;
  thoughts: string | null;
  candidates: CandidatePayload[];
  ab: Record<'A' | 'B', CandidatePayload[]> | null;
  agent_text: string;
  history_length: number;
}

export interface PathResponse {
  from: string;
  to: string;
  path: string[] | null;
  names?: string[];
  distance: number | null;
  reason?: string;
}

export interface NodeDetail {
  kind: NodeKind;
  node_id: string;
  name: string;
  affiliation?: string;
  career_start_year?: number | null;
  publication_count?: number;
  description?: string;
  user_paper_count?: number;
  has_embedding: boolean;
  detail_url: string;
}
