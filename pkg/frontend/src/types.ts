/** Wire types mirroring the labeling service API. */

export type Verdict = 'approved' | 'rejected' | 'deferred';
export type LocalDecision = 'undecided' | Verdict;

export interface CandidateContext {
  phrase: string;
  confidence: number;
  sample_titles: string[];
  sample_queries: string[];
  key_features: Record<string, number>;
}

export interface BatchResponse {
  batch_token: string;
  candidates: CandidateContext[];
}

export interface IterationReport {
  iteration: number;
  presented: number;
  approved: number;
  precision: number;
  cumulative_discovered: number;
  coverage: number | null;
}

export interface MetricsResponse {
  reports: IterationReport[];
  pool_sizes: Record<string, number>;
}

export interface Decision {
  phrase: string;
  verdict: Verdict;
}

/** One reviewable card: the service context plus the expert's local decision. */
export interface CandidateCard {
  context: CandidateContext;
  decision: LocalDecision;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}
