// Client-side decoder for the mask wire format: column-major run lengths,
// alternating 0-runs and 1-runs, starting with the 0-run (may be empty).
// Must agree bit-for-bit with the service codec; both sides are held to
// the shared vector file in conformance/rle_vectors.json.

export interface RleMask {
  size: [number, number]; // [height, width]
  counts: number[];
}

export class MalformedRleError extends Error {}

/**
 * Decode to row-major bits (Uint8Array of height*width, 0/1), the layout
 * canvas ImageData wants.
 */
export function decodeRle(mask: RleMask): Uint8Array {
  const [height, width] = mask.size;
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new MalformedRleError(`bad mask size ${mask.size}`);
  }
  const counts = mask.counts;
  if (!Array.isArray(counts) || counts.length === 0) {
    throw new MalformedRleError('counts must be a non-empty array');
  }
  let total = 0;
  for (let i = 0; i < counts.length; i++) {
    const c = counts[i];
    if (!Number.isInteger(c) || c < 0) {
      throw new MalformedRleError(`bad run length ${c} at index ${i}`);
    }
    if (c === 0 && i > 0) {
      throw new MalformedRleError(`interior zero run at index ${i}`);
    }
    total += c;
  }
  if (total !== height * width) {
    throw new MalformedRleError(
      `counts sum to ${total}, expected ${height * width} for ${height}x${width}`,
    );
  }

  const bits = new Uint8Array(height * width);
  let p = 0; // linear position in column-major order
  let value = 0;
  for (const run of counts) {
    if (value === 1) {
      for (let k = 0; k < run; k++) {
        const pos = p + k;
        const row = pos % height;
        const col = (pos - row) / height;
        bits[row * width + col] = 1;
      }
    }
    p += run;
    value = 1 - value;
  }
  return bits;
}

/** Number of set pixels, straight off the odd-indexed runs. */
export function rleArea(mask: RleMask): number {
  let area = 0;
  for (let i = 1; i < mask.counts.length; i += 2) area += mask.counts[i];
  return area;
}
