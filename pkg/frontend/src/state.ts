/** Scenario draft state, validation, history, and run comparison.
 *
 * Everything here is pure so the explorer's behavior is unit-testable:
 * the DOM layer only reflects these values.
 */

import type { JirfResponse, ScenarioRequest } from './types.js';

export type MagnitudeMode = 'one-std' | 'custom';

export interface ScenarioDraft {
  period: string;
  selected: string[]; // series labels in model order
  magnitudeMode: MagnitudeMode;
  customMagnitudes: Record<string, number>;
  horizon: number;
  bootstrap: boolean;
  replicates: number;
}

export function emptyDraft(period: string): ScenarioDraft {
  return {
    period,
    selected: [],
    magnitudeMode: 'one-std',
    customMagnitudes: {},
    horizon: 8,
    bootstrap: false,
    replicates: 200,
  };
}

export function toggleSeries(draft: ScenarioDraft, label: string, order: string[]): ScenarioDraft {
  const selected = draft.selected.includes(label)
    ? draft.selected.filter((s) => s !== label)
    : order.filter((s) => draft.selected.includes(s) || s === label);
  return { ...draft, selected };
}

/** Field-level problems; an empty object means the draft can run. */
export function draftProblems(draft: ScenarioDraft): Record<string, string> {
  const problems: Record<string, string> = {};
  if (draft.selected.length === 0) {
    problems.series = 'select at least one series';
  }
  if (draft.magnitudeMode === 'custom') {
    for (const label of draft.selected) {
      const value = draft.customMagnitudes[label];
      if (value === undefined || !Number.isFinite(value)) {
        problems.magnitudes = 'custom magnitudes must be finite numbers for every selected series';
        break;
      }
    }
  }
  if (!Number.isInteger(draft.horizon) || draft.horizon < 0) {
    problems.horizon = 'horizon must be a nonnegative integer';
  }
  if (draft.bootstrap && (!Number.isInteger(draft.replicates) || draft.replicates < 2)) {
    problems.replicates = 'replicates must be an integer of at least 2';
  }
  return problems;
}

export function canSubmit(draft: ScenarioDraft): boolean {
  return Object.keys(draftProblems(draft)).length === 0;
}

export function toRequest(draft: ScenarioDraft): ScenarioRequest {
  const request: ScenarioRequest = {
    period: draft.period,
    series: draft.selected,
    source: draft.magnitudeMode === 'custom' ? 'user' : 'series-std',
    horizon: draft.horizon,
  };
  if (draft.magnitudeMode === 'custom') {
    request.magnitudes = draft.selected.map((label) => draft.customMagnitudes[label]);
  }
  return request;
}

let runCounter = 0;

export interface ScenarioRun {
  id: number;
  label: string;
  request: ScenarioRequest;
  result: JirfResponse;
  bootstrapPending: boolean;
}

export function recordRun(request: ScenarioRequest, result: JirfResponse): ScenarioRun {
  runCounter += 1;
  const label = `#${runCounter} ${request.period}: ${request.series.length} series, H<=${request.horizon}`;
  return { id: runCounter, label, request, result, bootstrapPending: false };
}

export interface RunDiff {
  series: string[];
  horizons: number[];
  /** b minus a, cell by cell */
  delta: number[][];
  /** b over a; null where a is zero */
  ratio: (number | null)[][];
}

/** Cell-exact comparison of two runs over their common horizon range. */
export function diffRuns(a: JirfResponse, b: JirfResponse): RunDiff {
  if (a.series.length !== b.series.length || a.series.some((s, i) => s !== b.series[i])) {
    throw new Error('runs cover different series; cannot diff');
  }
  const horizons = a.horizons.length <= b.horizons.length ? a.horizons : b.horizons;
  const delta: number[][] = [];
  const ratio: (number | null)[][] = [];
  for (let h = 0; h < horizons.length; h += 1) {
    delta.push(a.responses[h].map((va, j) => b.responses[h][j] - va));
    ratio.push(a.responses[h].map((va, j) => (va === 0 ? null : b.responses[h][j] / va)));
  }
  return { series: a.series, horizons, delta, ratio };
}
