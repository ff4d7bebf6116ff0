/** Wire types for the sparsevecm scenario service. */

export interface FitMeta {
  p: number;
  lam: number;
  gamma: number;
  nonzero_coefficients: number;
  rows: number;
  vma_horizon: number | null;
}

export interface ModelInfo {
  series: string[];
  commodities: string[];
  regions: string[];
  periods: Record<string, [number, number]>;
  fits: Record<string, FitMeta>;
}

export type MagnitudeSource = 'series-std' | 'residual-std' | 'user';

export interface ScenarioRequest {
  period: string;
  series: string[];
  source: MagnitudeSource;
  magnitudes?: number[];
  horizon: number;
}

export interface BootstrapLayer {
  confidence: number;
  replicates_used: number;
  dropped: number;
  mean: number[][];
  lower: number[][];
  upper: number[][];
  significant: boolean[][];
}

export interface JirfResponse {
  scenario: {
    series: string[];
    magnitudes: number[];
    source: MagnitudeSource;
    horizon: number;
    period: string | null;
  };
  horizons: number[];
  series: string[];
  responses: number[][];
  bootstrap?: BootstrapLayer;
  period?: string;
}

export interface ProblemDoc {
  code: string;
  message: string;
  fields: Record<string, string>;
}

export type JobStatus = 'queued' | 'running' | 'done' | 'failed';

export interface JobDoc {
  job_id: string;
  status: JobStatus;
  result?: JirfResponse;
  error?: string;
}
