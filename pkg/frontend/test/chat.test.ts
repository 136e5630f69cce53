import { describe, expect, it } from 'vitest';

import type { ApiClient } from '../src/api.js';
import { ChatPane } from '../src/chat.js';
import type { CandidatePayload, TeamingTurnResponse } from '../src/types.js';

const candidate = (id: string, score: number): CandidatePayload => ({
  candidate_id: id,
  name: `Name ${id}`,
  affiliation: 'Inst',
  score,
  justification: `because ${id}`,
  retrieval_score: score / 100,
  shortest_path: null,
  mutual_coauthors: [],
  distance: null,
});

function fakeApi(overrides: Partial<Record<'turn' | 'ab', boolean>> = {}) {
  const calls = { message: 0, feedback: 0 };
  const api = {
    async teamingMessage(sessionId: string, body: { message: string }): Promise<TeamingTurnResponse> {
      calls.message += 1;
      const base: TeamingTurnResponse = {
        session_id: sessionId,
        query: `q:${body.message}`,
        thoughts: 'thinking',
        candidates: [candidate('X', 80), candidate('Y', 70)],
        ab: null,
        agent_text: `answer to ${body.message}`,
        history_length: calls.message * 2,
      };
      if (overrides.ab) {
        base.ab = { A: [candidate('X', 80)], B: [candidate('Z', 75)] };
      }
      return base;
    },
    async feedback() {
      calls.feedback += 1;
      return { recorded: true, preferred: 'A', backbone: 'mock-a', overwrote: null };
    },
  };
  return { api: api as unknown as ApiClient, calls };
}

describe('chat pane', () => {
  it('appends user and agent turns and stores cards', async () => {
    const { api } = fakeApi();
    const pane = new ChatPane('s1', 'A1');
    await pane.send(api, 'find me collaborators');
    expect(pane.transcript.map((t) => t.role)).toEqual(['user', 'agent']);
    expect(pane.cards.map((c) => c.candidate_id)).toEqual(['X', 'Y']);
    expect(pane.lastQuery).toBe('q:find me collaborators');
    expect(pane.pending).toBe(false);
  });

  it('allows only one in-flight turn', async () => {
    const { api } = fakeApi();
    const pane = new ChatPane('s1');
    const first = pane.send(api, 'one');
    await expect(pane.send(api, 'two')).rejects.toThrow(/already in flight/);
    await first;
  });

  it('rejects empty messages without a seed paper', async () => {
    const { api } = fakeApi();
    const pane = new ChatPane('s1');
    await expect(pane.send(api, '   ')).rejects.toThrow(/empty/);
  });

  it('records an error turn when the request fails', async () => {
    const api = {
      async teamingMessage(): Promise<never> {
        throw new Error('boom 502');
      },
    } as unknown as ApiClient;
    const pane = new ChatPane('s1');
    await expect(pane.send(api, 'hello')).rejects.toThrow('boom');
    expect(pane.transcript.map((t) => t.role)).toEqual(['user', 'error']);
    expect(pane.pending).toBe(false);
  });

  it('vote is enabled only after an A/B turn and locks after voting', async () => {
    const { api, calls } = fakeApi({ ab: true });
    const pane = new ChatPane('ab', 'A1', true);
    expect(pane.voteEnabled).toBe(false);
    await expect(pane.vote(api, 'A')).rejects.toThrow(/A\/B/);
    await pane.send(api, 'need expertise');
    expect(pane.voteEnabled).toBe(true);
    await pane.vote(api, 'A');
    expect(calls.feedback).toBe(1);
    expect(pane.voted).toBe('A');
    expect(pane.voteLocked).toBe(true);
    expect(pane.voteEnabled).toBe(false);
    await expect(pane.vote(api, 'B')).rejects.toThrow(/already/);
    expect(calls.feedback).toBe(1); // POST fired exactly once
  });

  it('a new A/B turn reopens voting', async () => {
    const { api } = fakeApi({ ab: true });
    const pane = new ChatPane('ab', 'A1', true);
    await pane.send(api, 'first');
    await pane.vote(api, 'B');
    expect(pane.voteEnabled).toBe(false);
    await pane.send(api, 'second');
    expect(pane.voteEnabled).toBe(true);
    expect(pane.voted).toBeNull();
  });

  it('plain turns never enable voting', async () => {
    const { api } = fakeApi();
    const pane = new ChatPane('s1');
    await pane.send(api, 'plain question');
    expect(pane.ab).toBeNull();
    expect(pane.voteEnabled).toBe(false);
  });
});
