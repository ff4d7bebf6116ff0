// @vitest-environment jsdom
import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { ExplorerApp } from '../src/app.js';
import { GRAY } from '../src/color.js';
import { makeFakeService } from './fake_service.js';
import type { FakeService } from './fake_service.js';

const HTML = readFileSync(
  join(dirname(fileURLToPath(import.meta.url)), '..', 'index.html'),
  'utf-8',
);

function mount(): HTMLElement {
  const bodyHtml = HTML.match(/<body>([\s\S]*)<\/body>/)![1].replace(
    /<script[\s\S]*?<\/script>/g,
    '',
  );
  document.body.innerHTML = bodyHtml;
  return document.getElementById('explorer-root') as HTMLElement;
}

async function boot(service: FakeService): Promise<ExplorerApp> {
  const app = new ExplorerApp(mount(), new ApiClient('http://fake', service.fetch));
  await app.start();
  return app;
}

function clickChip(root: HTMLElement, label: string): void {
  const chip = root.querySelector<HTMLButtonElement>(`.chip[data-series="${label}"]`);
  chip!.click();
}

function gridCells(root: HTMLElement): HTMLElement[] {
  return Array.from(root.querySelectorAll<HTMLElement>('#grid .heatmap-cell[data-value]'));
}

let service: FakeService;

beforeEach(() => {
  service = makeFakeService();
});

describe('composing and running a scenario', () => {
  it('disables the run button until a series is selected', async () => {
    const app = await boot(service);
    const button = app.root.querySelector<HTMLButtonElement>('#run-btn')!;
    expect(button.disabled).toBe(true);
    clickChip(app.root, 'hog.R01');
    expect(button.disabled).toBe(false);
    clickChip(app.root, 'hog.R01');
    expect(button.disabled).toBe(true);
  });

  it('renders the all-hog scenario with values equal to the service JSON', async () => {
    const app = await boot(service);
    const allHog = Array.from(app.root.querySelectorAll<HTMLButtonElement>('.chip-all')).find(
      (b) => b.textContent === 'all hog',
    )!;
    allHog.click();
    expect(app.draft.selected).toEqual(['hog.R01', 'hog.R02', 'hog.R03', 'hog.R04']);
    await app.run();

    const result = app.active!.result;
    for (let h = 0; h < result.horizons.length; h += 1) {
      app.horizon = h;
      app.renderActive();
      const cells = gridCells(app.root);
      expect(cells.length).toBe(12);
      for (const cell of cells) {
        const j = result.series.indexOf(cell.dataset.series!);
        // exact equality with the wire value, no client-side rescaling
        expect(Number(cell.dataset.value)).toBe(result.responses[h][j]);
      }
    }
  });

  it('slides across horizons without touching the network', async () => {
    const app = await boot(service);
    clickChip(app.root, 'hog.R01');
    await app.run();
    const before = service.calls.length;
    const slider = app.root.querySelector<HTMLInputElement>('#horizon-slider')!;
    for (const h of ['3', '5', '1', '8']) {
      slider.value = h;
      slider.dispatchEvent(new Event('input'));
    }
    expect(app.root.querySelector('#horizon-label')!.textContent).toBe('H = 8');
    expect(service.calls.length).toBe(before);
  });

  it('surfaces service field errors inline and preserves the draft', async () => {
    const app = await boot(service);
    clickChip(app.root, 'hog.R01');
    // bypass client-side guards to exercise the service problem document
    app.draft = { ...app.draft, selected: ['hog.Mars'] };
    await app.run();
    const banner = app.root.querySelector('#banner')!;
    expect(banner.classList.contains('visible')).toBe(true);
    expect(banner.textContent).toContain('scenario.unknown_series');
    const fieldError = app.root.querySelector<HTMLElement>('[data-field="series"]')!;
    expect(fieldError.textContent).toContain('hog.Mars');
    expect(app.draft.selected).toEqual(['hog.Mars']); // untouched for retry
  });
});

describe('scenario history and comparison', () => {
  async function runCustom(app: ExplorerApp, scale: number): Promise<void> {
    app.draft = {
      ...app.draft,
      selected: ['hog.R01', 'hog.R02'],
      magnitudeMode: 'custom',
      customMagnitudes: { 'hog.R01': 0.04 * scale, 'hog.R02': 0.03 * scale },
      horizon: 4,
    };
    await app.run();
  }

  it('shows exact 2x ratios when one scenario doubles the other', async () => {
    const app = await boot(service);
    await runCustom(app, 1);
    await runCustom(app, 2);
    expect(app.runs.length).toBe(2);
    const picks = app.root.querySelectorAll<HTMLInputElement>('#history .compare-pick');
    for (const pick of picks) {
      pick.checked = true;
      pick.dispatchEvent(new Event('change'));
    }
    const ratios = Array.from(
      app.root.querySelectorAll<HTMLElement>('#diff td[data-ratio]'),
    ).map((cell) => cell.dataset.ratio);
    expect(ratios.length).toBe(12);
    for (const r of ratios) expect(r).toBe('2'); // exact doubling, linearity end to end
  });

  it('reruns a history entry as a fresh run', async () => {
    const app = await boot(service);
    await runCustom(app, 1);
    const rerun = app.root.querySelector<HTMLButtonElement>('#history .rerun')!;
    rerun.click();
    await new Promise((r) => setTimeout(r, 0));
    expect(app.runs.length).toBe(2);
    expect(app.runs[1].result.responses).toEqual(app.runs[0].result.responses);
  });
});

describe('bootstrap layer', () => {
  it('renders provisionally, then grays exactly the non-significant cells', async () => {
    service = makeFakeService({ pollsUntilDone: 2 });
    const app = await boot(service);
    clickChip(app.root, 'hog.R01');
    app.draft = { ...app.draft, bootstrap: true, replicates: 50, horizon: 3 };

    const running = app.run();
    await new Promise((r) => setTimeout(r, 0));
    // provisional: point layer visible before the job completes
    expect(gridCells(app.root).length).toBe(12);
    expect(app.root.querySelector('#legend')!.textContent).toContain('provisional');
    await running;

    const boot_ = app.active!.result.bootstrap!;
    expect(app.root.querySelector('#legend')!.textContent).toContain('replicates');
    for (let h = 0; h < app.active!.result.horizons.length; h += 1) {
      app.horizon = h;
      app.renderActive();
      for (const cell of gridCells(app.root)) {
        const j = app.active!.result.series.indexOf(cell.dataset.series!);
        const flagged = boot_.significant[h][j];
        expect(cell.dataset.significant).toBe(String(flagged));
        const isGray = cell.style.backgroundColor === 'rgb(185, 185, 185)';
        expect(isGray).toBe(!flagged);
        void GRAY;
      }
    }
  });
});
