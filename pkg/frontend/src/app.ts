/** Explorer wiring: compose a shock subset, run it, inspect responses.
 *
 * One run at a time; the horizon slider is a pure view change over the
 * cached response (no network). Bootstrap requests render the point
 * response immediately as a provisional layer, then poll the job API with
 * backoff and repaint with bands and significance shading when done.
 */

import { ApiClient, ApiError } from './api.js';
import { colorBound } from './color.js';
import { renderHeatmap } from './heatmap.js';
import {
  canSubmit,
  diffRuns,
  draftProblems,
  emptyDraft,
  recordRun,
  toRequest,
  toggleSeries,
} from './state.js';
import type { ScenarioDraft, ScenarioRun } from './state.js';
import type { JirfResponse, ModelInfo } from './types.js';

function el<T extends HTMLElement>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
}

export class ExplorerApp {
  readonly client: ApiClient;
  readonly root: HTMLElement;
  model!: ModelInfo;
  draft!: ScenarioDraft;
  runs: ScenarioRun[] = [];
  active: ScenarioRun | null = null;
  compare: number[] = []; // run ids picked for the diff view
  horizon = 0; // slider position

  constructor(root: HTMLElement, client: ApiClient) {
    this.root = root;
    this.client = client;
  }

  async start(): Promise<void> {
    this.model = await this.client.model();
    this.draft = emptyDraft(Object.keys(this.model.periods)[0]);
    this.renderControls();
    this.refreshDraftUi();
  }

  // ---- controls -----------------------------------------------------------

  private renderControls(): void {
    const periodSelect = el<HTMLSelectElement>(this.root, '#period-select');
    periodSelect.replaceChildren(
      ...Object.keys(this.model.periods).map((name) => {
        const option = this.root.ownerDocument.createElement('option');
        option.value = name;
        option.textContent = name;
        return option;
      }),
    );
    periodSelect.onchange = () => {
      this.draft = { ...this.draft, period: periodSelect.value };
      this.refreshDraftUi();
    };

    const chips = el<HTMLElement>(this.root, '#chips');
    chips.replaceChildren();
    for (const commodity of this.model.commodities) {
      const group = this.root.ownerDocument.createElement('div');
      group.className = 'chip-group';
      const all = this.root.ownerDocument.createElement('button');
      all.type = 'button';
      all.className = 'chip chip-all';
      all.textContent = `all ${commodity}`;
      all.onclick = () => this.toggleCommodity(commodity);
      group.appendChild(all);
      for (const region of this.model.regions) {
        const label = `${commodity}.${region}`;
        const chip = this.root.ownerDocument.createElement('button');
        chip.type = 'button';
        chip.className = 'chip';
        chip.dataset.series = label;
        chip.textContent = region;
        chip.onclick = () => {
          this.draft = toggleSeries(this.draft, label, this.model.series);
          this.refreshDraftUi();
        };
        group.appendChild(chip);
      }
      chips.appendChild(group);
    }

    const mode = el<HTMLSelectElement>(this.root, '#mode-select');
    mode.onchange = () => {
      this.draft = { ...this.draft, magnitudeMode: mode.value as ScenarioDraft['magnitudeMode'] };
      this.refreshDraftUi();
    };
    const horizonCap = el<HTMLInputElement>(this.root, '#horizon-cap');
    horizonCap.value = String(this.draft.horizon);
    horizonCap.onchange = () => {
      this.draft = { ...this.draft, horizon: Number(horizonCap.value) };
      this.refreshDraftUi();
    };
    const bootstrapToggle = el<HTMLInputElement>(this.root, '#bootstrap-toggle');
    bootstrapToggle.onchange = () => {
      this.draft = { ...this.draft, bootstrap: bootstrapToggle.checked };
      this.refreshDraftUi();
    };
    const replicates = el<HTMLInputElement>(this.root, '#replicates');
    replicates.value = String(this.draft.replicates);
    replicates.onchange = () => {
      this.draft = { ...this.draft, replicates: Number(replicates.value) };
      this.refreshDraftUi();
    };
    el<HTMLButtonElement>(this.root, '#run-btn').onclick = () => void this.run();
    const slider = el<HTMLInputElement>(this.root, '#horizon-slider');
    slider.oninput = () => {
      this.horizon = Number(slider.value);
      this.renderActive(); // view-only: no request leaves the page here
    };
  }

  private toggleCommodity(commodity: string): void {
    const block = this.model.series.filter((s) => s.startsWith(`${commodity}.`));
    const allIn = block.every((s) => this.draft.selected.includes(s));
    const selected = allIn
      ? this.draft.selected.filter((s) => !block.includes(s))
      : this.model.series.filter((s) => this.draft.selected.includes(s) || block.includes(s));
    this.draft = { ...this.draft, selected };
    this.refreshDraftUi();
  }

  refreshDraftUi(): void {
    for (const chip of this.root.querySelectorAll<HTMLElement>('.chip[data-series]')) {
      chip.classList.toggle('selected', this.draft.selected.includes(chip.dataset.series!));
    }
    const problems = draftProblems(this.draft);
    el<HTMLButtonElement>(this.root, '#run-btn').disabled = !canSubmit(this.draft);
    for (const span of this.root.querySelectorAll<HTMLElement>('[data-field]')) {
      span.textContent = problems[span.dataset.field!] ?? '';
    }
    const magnitudes = el<HTMLElement>(this.root, '#magnitude-inputs');
    if (this.draft.magnitudeMode === 'custom') {
      magnitudes.replaceChildren(
        ...this.draft.selected.map((label) => {
          const wrap = this.root.ownerDocument.createElement('label');
          wrap.textContent = label;
          const input = this.root.ownerDocument.createElement('input');
          input.type = 'number';
          input.step = 'any';
          input.dataset.magnitudeFor = label;
          const current = this.draft.customMagnitudes[label];
          input.value = current === undefined ? '' : String(current);
          input.onchange = () => {
            this.draft = {
              ...this.draft,
              customMagnitudes: {
                ...this.draft.customMagnitudes,
                [label]: Number(input.value),
              },
            };
            this.refreshDraftUi();
          };
          wrap.appendChild(input);
          return wrap;
        }),
      );
    } else {
      magnitudes.replaceChildren();
    }
  }

  // ---- running scenarios --------------------------------------------------

  async run(): Promise<void> {
    const request = toRequest(this.draft);
    this.clearBanner();
    let result: JirfResponse;
    try {
      result = await this.client.runJirf(request);
    } catch (err) {
      this.showFailure(err);
      return; // the draft is untouched; the user can retry as-is
    }
    const run = recordRun(request, result);
    run.bootstrapPending = this.draft.bootstrap;
    this.runs.push(run);
    this.activate(run.id);
    if (this.draft.bootstrap) {
      try {
        const started = await this.client.startBootstrap(request, this.draft.replicates);
        const full = await this.client.pollJob(started.job_id);
        run.result = full;
      } catch (err) {
        this.showFailure(err);
      } finally {
        run.bootstrapPending = false;
        this.renderHistory();
        if (this.active?.id === run.id) this.renderActive();
      }
    }
  }

  rerun(runId: number): void {
    const run = this.runs.find((r) => r.id === runId);
    if (!run) return;
    void this.client.runJirf(run.request).then((result) => {
      const fresh = recordRun(run.request, result);
      this.runs.push(fresh);
      this.activate(fresh.id);
    });
  }

  activate(runId: number): void {
    this.active = this.runs.find((r) => r.id === runId) ?? null;
    if (this.active) {
      const slider = el<HTMLInputElement>(this.root, '#horizon-slider');
      slider.max = String(this.active.result.horizons.length - 1);
      if (this.horizon > Number(slider.max)) this.horizon = 0;
      slider.value = String(this.horizon);
    }
    this.renderActive();
    this.renderHistory();
  }

  // ---- rendering ----------------------------------------------------------

  renderActive(): void {
    const grid = el<HTMLElement>(this.root, '#grid');
    const legend = el<HTMLElement>(this.root, '#legend');
    el<HTMLElement>(this.root, '#horizon-label').textContent = `H = ${this.horizon}`;
    if (!this.active) {
      grid.replaceChildren();
      legend.textContent = '';
      return;
    }
    const result = this.active.result;
    const bound = colorBound(result.responses); // fixed across horizons
    renderHeatmap(grid, {
      commodities: this.model.commodities,
      regions: this.model.regions,
      series: result.series,
      values: result.responses[this.horizon],
      significant: result.bootstrap?.significant[this.horizon],
      bound,
    });
    const parts = [`color scale: ±${bound.toPrecision(4)} (shared across horizons)`];
    if (result.bootstrap) {
      parts.push(
        `bands at ${(result.bootstrap.confidence * 100).toFixed(0)}%, ` +
          `${result.bootstrap.replicates_used} replicates; gray = not significant`,
      );
    } else if (this.active.bootstrapPending) {
      parts.push('point response (provisional); bootstrap running');
    }
    legend.textContent = parts.join(' | ');
    this.renderDiff();
  }

  renderHistory(): void {
    const list = el<HTMLElement>(this.root, '#history');
    list.replaceChildren(
      ...this.runs.map((run) => {
        const item = this.root.ownerDocument.createElement('li');
        item.dataset.runId = String(run.id);
        const open = this.root.ownerDocument.createElement('button');
        open.type = 'button';
        open.textContent = run.label + (run.bootstrapPending ? ' (bootstrap...)' : '');
        open.onclick = () => this.activate(run.id);
        const again = this.root.ownerDocument.createElement('button');
        again.type = 'button';
        again.className = 'rerun';
        again.textContent = 'rerun';
        again.onclick = () => this.rerun(run.id);
        const pick = this.root.ownerDocument.createElement('input');
        pick.type = 'checkbox';
        pick.className = 'compare-pick';
        pick.checked = this.compare.includes(run.id);
        pick.onchange = () => {
          this.compare = pick.checked
            ? [...this.compare, run.id].slice(-2)
            : this.compare.filter((id) => id !== run.id);
          this.renderHistory();
          this.renderDiff();
        };
        item.append(open, again, pick);
        return item;
      }),
    );
  }

  renderDiff(): void {
    const host = el<HTMLElement>(this.root, '#diff');
    if (this.compare.length !== 2) {
      host.replaceChildren();
      return;
    }
    const [a, b] = this.compare.map((id) => this.runs.find((r) => r.id === id)!);
    let diff;
    try {
      diff = diffRuns(a.result, b.result);
    } catch (err) {
      host.textContent = String(err);
      return;
    }
    const h = Math.min(this.horizon, diff.horizons.length - 1);
    const doc = this.root.ownerDocument;
    const caption = doc.createElement('p');
    caption.textContent = `${a.label}  vs  ${b.label}  at H = ${h}`;
    const table = doc.createElement('table');
    table.className = 'diff-table';
    const head = table.insertRow();
    for (const text of ['series', 'A', 'B', 'B − A', 'B / A']) {
      const th = doc.createElement('th');
      th.textContent = text;
      head.appendChild(th);
    }
    diff.series.forEach((label, j) => {
      const row = table.insertRow();
      row.insertCell().textContent = label;
      const va = a.result.responses[h][j];
      const vb = b.result.responses[h][j];
      row.insertCell().textContent = String(va);
      row.insertCell().textContent = String(vb);
      row.insertCell().textContent = String(diff.delta[h][j]);
      const ratioCell = row.insertCell();
      const ratio = diff.ratio[h][j];
      ratioCell.textContent = ratio === null ? '—' : String(ratio);
      ratioCell.dataset.ratio = ratio === null ? '' : String(ratio);
    });
    host.replaceChildren(caption, table);
  }

  // ---- errors -------------------------------------------------------------

  private showFailure(err: unknown): void {
    const banner = el<HTMLElement>(this.root, '#banner');
    banner.classList.add('visible');
    if (err instanceof ApiError) {
      banner.textContent = `${err.problem.code}: ${err.problem.message}`;
      for (const span of this.root.querySelectorAll<HTMLElement>('[data-field]')) {
        const message = err.problem.fields[span.dataset.field!];
        if (message) span.textContent = message;
      }
    } else {
      banner.textContent = `request failed (${String(err)}); your scenario is preserved — retry when the service is reachable`;
    }
  }

  private clearBanner(): void {
    const banner = el<HTMLElement>(this.root, '#banner');
    banner.classList.remove('visible');
    banner.textContent = '';
  }
}

export async function start(root: HTMLElement, client = new ApiClient('')): Promise<ExplorerApp> {
  const app = new ExplorerApp(root, client);
  await app.start();
  return app;
}

declare global {
  interface Window {
    explorer?: ExplorerApp;
  }
}

if (typeof document !== 'undefined' && document.getElementById('explorer-root')) {
  void start(document.getElementById('explorer-root') as HTMLElement).then((app) => {
    window.explorer = app;
  });
}
