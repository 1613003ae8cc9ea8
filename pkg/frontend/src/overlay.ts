// Overlay geometry and pixel generation. Pure functions here; the DOM
// glue in main.ts only lifts these onto canvases.

export type Rgb = [number, number, number];

export interface BoxXYXY {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

// per-phrase overlay palette, assigned by stable hash
const PALETTE: Rgb[] = [
  [251, 146, 60], // orange
  [59, 130, 246], // blue
  [34, 197, 94], // green
  [168, 85, 247], // purple
  [236, 72, 153], // pink
  [6, 182, 212], // cyan
];

export function phraseColor(phrase: string): Rgb {
  let hash = 0;
  for (let i = 0; i < phrase.length; i++) {
    hash = (hash * 31 + phrase.charCodeAt(i)) >>> 0;
  }
  return PALETTE[hash % PALETTE.length];
}

/** Mask pixel (row, col) lands on canvas (col*scale, row*scale). */
export function imagePointToCanvas(
  row: number,
  col: number,
  scale: number,
): { x: number; y: number } {
  return { x: col * scale, y: row * scale };
}

export function scaleBox(box: [number, number, number, number], scale: number): BoxXYXY {
  return { x1: box[0] * scale, y1: box[1] * scale, x2: box[2] * scale, y2: box[3] * scale };
}

/**
 * RGBA buffer (width*height*4) for a semi-transparent mask overlay at the
 * image's native scale; unmasked pixels stay fully transparent.
 */
export function maskOverlayRgba(
  bits: Uint8Array,
  width: number,
  height: number,
  color: Rgb,
  alpha = 0.45,
) {
  if (bits.length !== width * height) {
    throw new Error(`bits length ${bits.length} != ${width}x${height}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  const a = Math.round(alpha * 255);
  for (let i = 0; i < bits.length; i++) {
    if (bits[i] === 1) {
      const o = i * 4;
      rgba[o] = color[0];
      rgba[o + 1] = color[1];
      rgba[o + 2] = color[2];
      rgba[o + 3] = a;
    }
  }
  return rgba;
}

export function formatLabel(phrase: string, score: number | null): string {
  return score == null ? phrase : `${phrase} ${score.toFixed(2)}`;
}
