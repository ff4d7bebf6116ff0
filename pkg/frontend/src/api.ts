/** Thin typed client for the scenario service, plus job polling. */

import type { JirfResponse, JobDoc, ModelInfo, ProblemDoc, ScenarioRequest } from './types.js';

/** Service-side rejection carrying the problem document. */
export class ApiError extends Error {
  readonly status: number;
  readonly problem: ProblemDoc;

  constructor(status: number, problem: ProblemDoc) {
    super(problem.message);
    this.status = status;
    this.problem = problem;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface PollOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  backoffFactor?: number;
  onUpdate?: (job: JobDoc) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = '', fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, '');
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    const body = await res.json();
    if (!res.ok) {
      const problem: ProblemDoc =
        body && typeof body.code === 'string'
          ? body
          : { code: 'unknown', message: JSON.stringify(body), fields: {} };
      throw new ApiError(res.status, problem);
    }
    return body as T;
  }

  model(): Promise<ModelInfo> {
    return this.request<ModelInfo>('/model');
  }

  runJirf(scenario: ScenarioRequest): Promise<JirfResponse> {
    return this.request<JirfResponse>('/jirf', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(scenario),
    });
  }

  startBootstrap(
    scenario: ScenarioRequest,
    replicates: number,
    seed = 0,
  ): Promise<{ job_id: string }> {
    return this.request<{ job_id: string }>('/jirf/bootstrap', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ ...scenario, replicates, seed }),
    });
  }

  job(jobId: string): Promise<JobDoc> {
    return this.request<JobDoc>(`/jobs/${jobId}`);
  }

  /**
   * Poll a bootstrap job with exponential backoff until it finishes.
   * Resolves with the job result; rejects when the job fails.
   */
  async pollJob(jobId: string, options: PollOptions = {}): Promise<JirfResponse> {
    const {
      initialDelayMs = 250,
      maxDelayMs = 4000,
      backoffFactor = 1.8,
      onUpdate,
      sleep = defaultSleep,
    } = options;
    let delay = initialDelayMs;
    for (;;) {
      const job = await this.job(jobId);
      onUpdate?.(job);
      if (job.status === 'done' && job.result) return job.result;
      if (job.status === 'failed') throw new Error(job.error ?? 'bootstrap job failed');
      await sleep(delay);
      delay = Math.min(delay * backoffFactor, maxDelayMs);
    }
  }
}
