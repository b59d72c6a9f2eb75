/** DOM wiring: render the card queue, banners, and the metrics dashboard. */

import { LabelingApi } from './api.js';
import { coverageSeries, discoveriesSeries, precisionSeries, svgChart } from './chart.js';
import {
  advanceFocus,
  applyKey,
  batchLoaded,
  buildPayload,
  decisionCounts,
  initialState,
  loadFailed,
  setDecision,
  staleDetected,
} from './state.js';
import type { SessionState } from './state.js';
import { ApiError } from './types.js';
import type { LocalDecision, MetricsResponse } from './types.js';

const api = new LabelingApi('');
let state: SessionState = initialState();
let sessionId: string | null = null;

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
};

function fmt(value: number, digits = 3): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(digits);
}

function render(): void {
  const banner = el('banner');
  const cardsRoot = el('cards');
  const counts = decisionCounts(state);
  el('counts').textContent =
    `${counts.approved} approved / ${counts.rejected} rejected / ` +
    `${counts.deferred} deferred / ${counts.undecided} undecided`;

  banner.className = `banner ${state.phase}`;
  if (state.phase === 'error') {
    banner.textContent = `Service unavailable: ${state.banner}`;
    banner.appendChild(retryButton('Retry', () => void openBatch()));
    cardsRoot.replaceChildren();
    return;
  }
  if (state.phase === 'stale') {
    banner.textContent = `Batch already submitted elsewhere (${state.banner}).`;
    banner.appendChild(retryButton('Fetch new batch', () => void openBatch()));
    return;
  }
  if (state.phase === 'complete') {
    banner.textContent = 'Session complete: no unlabeled candidates remain.';
    cardsRoot.replaceChildren();
    return;
  }
  banner.textContent = state.phase === 'submitting' ? 'Submitting…' : '';

  const cards = state.cards.map((card, index) => {
    const article = document.createElement('article');
    article.className = `card ${card.decision}${index === state.focusIndex ? ' focused' : ''}`;
    const evidenceTitles = card.context.sample_titles.map((t) => `<li>${escapeHtml(t)}</li>`).join('');
    const evidenceQueries = card.context.sample_queries.map((q) => `<li>${escapeHtml(q)}</li>`).join('');
    const features = Object.entries(card.context.key_features)
      .map(([k, v]) => `<span>${escapeHtml(k)}: ${fmt(v)}</span>`)
      .join(' ');
    article.innerHTML = `
      <header>
        <h3>${escapeHtml(card.context.phrase)}</h3>
        <span class="confidence">confidence ${card.context.confidence.toFixed(3)}</span>
      </header>
      <div class="evidence">
        <div><h4>Catalog titles</h4><ul>${evidenceTitles || '<li class="none">none</li>'}</ul></div>
        <div><h4>Search queries</h4><ul>${evidenceQueries || '<li class="none">none</li>'}</ul></div>
      </div>
      <footer>
        <div class="features">${features}</div>
        <div class="actions" data-index="${index}">
          <button data-verdict="approved">Approve (a)</button>
          <button data-verdict="rejected">Reject (r)</button>
          <button data-verdict="deferred">Defer (d)</button>
        </div>
        <span class="decision-tag">${card.decision}</span>
      </footer>`;
    return article;
  });
  cardsRoot.replaceChildren(...cards);
  const focused = cardsRoot.children[state.focusIndex];
  if (focused) {
    focused.scrollIntoView({ block: 'nearest' });
  }
}

function retryButton(label: string, onClick: () => void): HTMLButtonElement {
  const button = document.createElement('button');
  button.textContent = label;
  button.addEventListener('click', onClick);
  return button;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => `&#${ch.charCodeAt(0)};`);
}

function renderMetrics(metrics: MetricsResponse): void {
  const reports = metrics.reports;
  el('precision-chart').innerHTML = svgChart([precisionSeries(reports)], undefined, 1.0);
  el('coverage-chart').innerHTML = svgChart([discoveriesSeries(reports), coverageSeries(reports)]);
  const latest = reports[reports.length - 1];
  el('latest').textContent = latest
    ? `iteration ${latest.iteration}: presented ${latest.presented}, approved ${latest.approved}, ` +
      `precision ${latest.precision.toFixed(3)}, discovered ${latest.cumulative_discovered}`
    : 'no iterations yet';
  const sizes = Object.entries(metrics.pool_sizes)
    .map(([k, v]) => `${k} ${v}`)
    .join(' · ');
  el('pools').textContent = sizes;
}

async function refreshMetrics(): Promise<void> {
  try {
    renderMetrics(await api.fetchMetrics());
  } catch (err) {
    el('latest').textContent = `metrics unavailable: ${(err as Error).message}`;
  }
}

async function openBatch(): Promise<void> {
  state = { ...initialState(), phase: 'loading' };
  render();
  try {
    if (!sessionId) {
      sessionId = await api.createSession();
    }
    const batch = await api.fetchBatch(sessionId);
    state = batchLoaded(state, batch);
  } catch (err) {
    state = loadFailed(state, (err as Error).message);
  }
  render();
}

async function submit(): Promise<void> {
  if (state.phase !== 'reviewing' || !sessionId || !state.batchToken) {
    return;
  }
  const token = state.batchToken;
  const payload = buildPayload(state);
  state = { ...state, phase: 'submitting' };
  render();
  try {
    await api.submitLabels(sessionId, token, payload);
    await refreshMetrics();
    await openBatch();
  } catch (err) {
    if (err instanceof ApiError && err.code === 'StaleBatch') {
      state = staleDetected(state, err.message);
    } else {
      state = loadFailed(state, (err as Error).message);
    }
    render();
  }
}

function wireEvents(): void {
  el('cards').addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const verdict = target.dataset.verdict as LocalDecision | undefined;
    const holder = target.closest('.actions') as HTMLElement | null;
    if (verdict && holder) {
      const index = Number(holder.dataset.index);
      state = advanceFocus(setDecision(state, index, verdict));
      render();
    }
  });
  el('submit').addEventListener('click', () => void submit());
  document.addEventListener('keydown', (event) => {
    if ((event.target as HTMLElement).tagName === 'INPUT') {
      return;
    }
    if (event.key === 'Enter' && event.shiftKey) {
      void submit();
      return;
    }
    const next = applyKey(state, event.key);
    if (next !== state) {
      event.preventDefault();
      state = next;
      render();
    }
  });
}

async function start(): Promise<void> {
  wireEvents();
  await refreshMetrics();
  await openBatch();
}

void start();
