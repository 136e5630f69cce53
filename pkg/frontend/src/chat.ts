// Teaming chat pane state machine: transcript, pending-turn guard,
// candidate cards, A/B columns, and the vote lifecycle (enabled only after
// an A/B turn, locked after a successful vote, re-vote allowed via reset).

import type { ApiClient } from './api.js';
import type { CandidatePayload, TeamingTurnResponse } from './types.js';

export interface TranscriptEntry {
  role: 'user' | 'agent' | 'error';
  text: string;
}

export class ChatPane {
  transcript: TranscriptEntry[] = [];
  pending = false;
  cards: CandidatePayload[] = [];
  ab: Record<'A' | 'B', CandidatePayload[]> | null = null;
  voted: 'A' | 'B' | null = null;
  voteLocked = false;
  lastQuery: string | null = null;
  lastThoughts: string | null = null;

  constructor(
    public readonly sessionId: string,
    public authorId: string | null = null,
    public abMode = false,
  ) {}

  get voteEnabled(): boolean {
    return this.ab !== null && !this.voteLocked;
  }

  async send(api: ApiClient, message: string, seedPaperId?: string): Promise<TeamingTurnResponse> {
    if (this.pending) {
      throw new Error('a turn is already in flight for this session');
    }
    if (!message.trim() && !seedPaperId) {
      throw new Error('message must not be empty');
    }
    this.pending = true;
    this.transcript.push({ role: 'user', text: message });
    try {
      const body: { message: string; author_id?: string; ab_mode?: boolean; seed_paper_id?: string } = {
        message,
      };
      if (this.authorId) body.author_id = this.authorId;
      if (this.abMode) body.ab_mode = true;
      if (seedPaperId) body.seed_paper_id = seedPaperId;
      const turn = await api.teamingMessage(this.sessionId, body);
      this.transcript.push({ role: 'agent', text: turn.agent_text });
      this.cards = turn.candidates;
      this.ab = turn.ab;
      this.lastQuery = turn.query;
      this.lastThoughts = turn.thoughts;
      if (turn.ab) {
        // a fresh A/B turn reopens voting
        this.voteLocked = false;
        this.voted = null;
      }
      return turn;
    } catch (err) {
      this.transcript.push({ role: 'error', text: String(err) });
      throw err;
    } finally {
      this.pending = false;
    }
  }

  async vote(api: ApiClient, preferred: 'A' | 'B'): Promise<void> {
    if (!this.ab) {
      throw new Error('voting requires an A/B turn');
    }
    if (this.voteLocked) {
      throw new Error('vote already submitted for this turn');
    }
    await api.feedback(this.sessionId, preferred);
    this.voted = preferred;
    this.voteLocked = true; // buttons lock after one successful vote
  }
}
