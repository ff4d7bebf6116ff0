import { describe, expect, it } from 'vitest';

import { GRAY, cellColor, colorBound, colorFor } from '../src/color.js';

describe('color scale', () => {
  it('bound is the max magnitude across all horizons', () => {
    expect(colorBound([[0.1, -0.5], [0.3, 0.2]])).toBe(0.5);
    expect(colorBound([[0]])).toBe(0);
  });

  it('zero is white, extremes saturate', () => {
    expect(colorFor(0, 1)).toBe('rgb(255,255,255)');
    expect(colorFor(1, 1)).toBe('rgb(255,0,0)');
    expect(colorFor(-1, 1)).toBe('rgb(0,0,255)');
    expect(colorFor(5, 1)).toBe('rgb(255,0,0)'); // clamped
  });

  it('gray exactly when the significance flag is false', () => {
    expect(cellColor(0.4, 1, false)).toBe(GRAY);
    expect(cellColor(0.4, 1, true)).not.toBe(GRAY);
    expect(cellColor(0.4, 1, undefined)).not.toBe(GRAY); // no bootstrap layer
  });
});
