import { describe, expect, it } from 'vitest';

import {
  formatLabel,
  imagePointToCanvas,
  maskOverlayRgba,
  phraseColor,
  scaleBox,
} from '../src/overlay.js';

describe('geometry mapping', () => {
  it('identity scale maps mask pixel (r, c) to canvas (c, r)', () => {
    expect(imagePointToCanvas(3, 7, 1.0)).toEqual({ x: 7, y: 3 });
  });

  it('scale 2 doubles box corners', () => {
    expect(scaleBox([1, 2, 5, 9], 2.0)).toEqual({ x1: 2, y1: 4, x2: 10, y2: 18 });
  });
});

describe('mask overlay pixels', () => {
  it('colors only set bits, leaves the rest transparent', () => {
    const bits = new Uint8Array([1, 0, 0, 1]);
    const rgba = maskOverlayRgba(bits, 2, 2, [10, 20, 30], 0.5);
    expect(Array.from(rgba.slice(0, 4))).toEqual([10, 20, 30, 128]);
    expect(Array.from(rgba.slice(4, 8))).toEqual([0, 0, 0, 0]);
    expect(Array.from(rgba.slice(12, 16))).toEqual([10, 20, 30, 128]);
  });

  it('rejects mismatched dimensions', () => {
    expect(() => maskOverlayRgba(new Uint8Array(3), 2, 2, [0, 0, 0])).toThrow();
  });
});

describe('labels and colors', () => {
  it('formats phrase with two-decimal score', () => {
    expect(formatLabel('cat', 0.9)).toBe('cat 0.90');
    expect(formatLabel('cat', null)).toBe('cat');
  });

  it('phrase colors are stable', () => {
    expect(phraseColor('cat')).toEqual(phraseColor('cat'));
  });
});
