/** Region-by-commodity response grid for one horizon.
 *
 * Cells carry the untouched service value in `data-value` (and the tooltip);
 * the visible text is a short human rounding. Gray marks cells whose
 * bootstrap band includes zero, matching the service's significance flags
 * one to one.
 */

import { cellColor, GRAY } from './color.js';

export interface HeatmapSpec {
  commodities: string[];
  regions: string[];
  series: string[]; // commodity-major labels, commodities x regions
  values: number[]; // one row of the response matrix (length series.length)
  significant?: boolean[]; // same length, from the bootstrap layer
  bound: number; // scenario-fixed color bound
}

function shortNumber(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 0.01 && a < 1000) return v.toFixed(4);
  return v.toExponential(2);
}

export function renderHeatmap(container: HTMLElement, spec: HeatmapSpec): void {
  const index = new Map(spec.series.map((label, i) => [label, i]));
  const table = container.ownerDocument.createElement('table');
  table.className = 'heatmap';

  const head = table.insertRow();
  head.insertCell().textContent = '';
  for (const c of spec.commodities) {
    const th = container.ownerDocument.createElement('th');
    th.textContent = c;
    head.appendChild(th);
  }

  for (const region of spec.regions) {
    const row = table.insertRow();
    const th = container.ownerDocument.createElement('th');
    th.textContent = region;
    row.appendChild(th);
    for (const commodity of spec.commodities) {
      const j = index.get(`${commodity}.${region}`);
      const cell = row.insertCell();
      cell.className = 'heatmap-cell';
      if (j === undefined) {
        cell.style.backgroundColor = GRAY;
        continue;
      }
      const value = spec.values[j];
      const flag = spec.significant ? spec.significant[j] : undefined;
      cell.dataset.value = String(value);
      cell.dataset.series = `${commodity}.${region}`;
      if (flag !== undefined) cell.dataset.significant = String(flag);
      cell.title = `${commodity}.${region}: ${value}`;
      cell.textContent = shortNumber(value);
      cell.style.backgroundColor = cellColor(value, spec.bound, flag);
      if (flag === false) cell.classList.add('insignificant');
    }
  }
  container.replaceChildren(table);
}
