/** Session state machine: cards, focus, local decisions, submission payload.
 *
 * Pure logic, no DOM. The UI never fabricates numbers: cards mirror the
 * service's CandidateContext list in service order, and every metric shown
 * comes from a service response. Undecided cards are omitted from the
 * payload so the service's conservative default (defer) applies.
 */

import type { BatchResponse, CandidateCard, Decision, LocalDecision, Verdict } from './types.js';

export type Phase = 'loading' | 'reviewing' | 'submitting' | 'complete' | 'error' | 'stale';

export interface SessionState {
  phase: Phase;
  batchToken: string | null;
  cards: CandidateCard[];
  focusIndex: number;
  /** banner message for error/stale phases; empty otherwise */
  banner: string;
}

export function initialState(): SessionState {
  return { phase: 'loading', batchToken: null, cards: [], focusIndex: 0, banner: '' };
}

export function batchLoaded(state: SessionState, batch: BatchResponse): SessionState {
  if (batch.candidates.length === 0) {
    return { ...state, phase: 'complete', batchToken: batch.batch_token, cards: [], focusIndex: 0, banner: '' };
  }
  return {
    ...state,
    phase: 'reviewing',
    batchToken: batch.batch_token,
    cards: batch.candidates.map((context) => ({ context, decision: 'undecided' as LocalDecision })),
    focusIndex: 0,
    banner: '',
  };
}

export function loadFailed(state: SessionState, detail: string): SessionState {
  // retryable banner; no partial render
  return { ...state, phase: 'error', cards: [], batchToken: null, banner: detail };
}

export function staleDetected(state: SessionState, detail: string): SessionState {
  return { ...state, phase: 'stale', banner: detail };
}

export function setDecision(state: SessionState, index: number, decision: LocalDecision): SessionState {
  if (index < 0 || index >= state.cards.length) {
    return state;
  }
  const cards = state.cards.map((card, i) => (i === index ? { ...card, decision } : card));
  return { ...state, cards };
}

export function advanceFocus(state: SessionState): SessionState {
  if (state.cards.length === 0) {
    return state;
  }
  return { ...state, focusIndex: Math.min(state.focusIndex + 1, state.cards.length - 1) };
}

export function retreatFocus(state: SessionState): SessionState {
  return { ...state, focusIndex: Math.max(state.focusIndex - 1, 0) };
}

const KEY_VERDICTS: Record<string, Verdict> = {
  a: 'approved',
  r: 'rejected',
  d: 'deferred',
};

/** Keyboard flow: a/r/d decide the focused card and advance; space skips;
 * arrows move focus. Produces exactly the same state transitions as the
 * card buttons, so the submission payload is interaction-agnostic. */
export function applyKey(state: SessionState, key: string): SessionState {
  if (state.phase !== 'reviewing') {
    return state;
  }
  const verdict = KEY_VERDICTS[key.toLowerCase()];
  if (verdict) {
    return advanceFocus(setDecision(state, state.focusIndex, verdict));
  }
  if (key === ' ' || key === 'ArrowDown') {
    return advanceFocus(state);
  }
  if (key === 'ArrowUp') {
    return retreatFocus(state);
  }
  return state;
}

/** Decisions for decided cards only; undecided default to Deferred server-side. */
export function buildPayload(state: SessionState): Decision[] {
  return state.cards
    .filter((card) => card.decision !== 'undecided')
    .map((card) => ({ phrase: card.context.phrase, verdict: card.decision as Verdict }));
}

export function decisionCounts(state: SessionState): Record<LocalDecision, number> {
  const counts: Record<LocalDecision, number> = {
    undecided: 0,
    approved: 0,
    rejected: 0,
    deferred: 0,
  };
  for (const card of state.cards) {
    counts[card.decision] += 1;
  }
  return counts;
}
