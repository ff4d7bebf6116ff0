/** Diverging color scale with scenario-fixed bounds.
 *
 * The bound is the largest absolute response across every horizon of a
 * scenario, so the legend stays comparable while the slider moves. Data
 * values are never rescaled; only colors are.
 */

export const GRAY = '#b9b9b9';

/** Shared color bound for a whole scenario (all horizons, all series). */
export function colorBound(responses: number[][]): number {
  let bound = 0;
  for (const row of responses) {
    for (const v of row) {
      const a = Math.abs(v);
      if (a > bound) bound = a;
    }
  }
  return bound;
}

function channel(x: number): number {
  return Math.round(Math.max(0, Math.min(255, x)));
}

/** Blue (negative) through white (zero) to red (positive). */
export function colorFor(value: number, bound: number): string {
  if (bound <= 0) return 'rgb(255,255,255)';
  const t = Math.max(-1, Math.min(1, value / bound));
  if (t >= 0) {
    const fade = 1 - t;
    return `rgb(${channel(255)},${channel(255 * fade)},${channel(255 * fade)})`;
  }
  const fade = 1 + t;
  return `rgb(${channel(255 * fade)},${channel(255 * fade)},${channel(255)})`;
}

/** Gray exactly when the significance flag is false; colored otherwise. */
export function cellColor(value: number, bound: number, significant?: boolean): string {
  if (significant === false) return GRAY;
  return colorFor(value, bound);
}
