/** Thin typed client over the labeling service endpoints. */

import { ApiError } from './types.js';
import type { BatchResponse, Decision, IterationReport, MetricsResponse } from './types.js';

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!resp.ok) {
    let code = 'HttpError';
    let detail = `${resp.status}`;
    try {
      const body = (await resp.json()) as { code?: string; detail?: string };
      code = body.code ?? code;
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(code, resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class LabelingApi {
  constructor(private readonly baseUrl: string = '') {}

  async createSession(topK?: number): Promise<string> {
    const body = topK === undefined ? {} : { top_k: topK };
    const data = await request<{ session_id: string }>(`${this.baseUrl}/api/session`, {
      method: 'POST',
      body: JSON.stringify(body),
    });
    return data.session_id;
  }

  fetchBatch(sessionId: string): Promise<BatchResponse> {
    return request<BatchResponse>(`${this.baseUrl}/api/session/${sessionId}/batch`);
  }

  submitLabels(sessionId: string, batchToken: string, decisions: Decision[]): Promise<IterationReport> {
    return request<IterationReport>(`${this.baseUrl}/api/session/${sessionId}/labels`, {
      method: 'POST',
      body: JSON.stringify({ batch_token: batchToken, decisions }),
    });
  }

  fetchMetrics(): Promise<MetricsResponse> {
    return request<MetricsResponse>(`${this.baseUrl}/api/metrics`);
  }
}
