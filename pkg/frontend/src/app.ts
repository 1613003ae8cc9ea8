// Review session state: load the queue, walk it, submit verdicts
// optimistically. The service owns all verdict state; on a failed submit
// the item is restored exactly where it was.

import { QueueItemWire, ServiceClient, VerdictInput, VerdictKind } from './api.js';
import { MalformedRleError, decodeRle } from './rle.js';

export interface ReviewItemView {
  datasetId: string;
  annotationId: number;
  phrase: string;
  score: number | null;
  box: [number, number, number, number];
  width: number;
  height: number;
  /** Row-major bits, or null when the payload failed to decode. */
  mask: Uint8Array | null;
  /** Non-null marks the decode-error badge; the item is never dropped. */
  decodeError: string | null;
  image: QueueItemWire['image'];
}

export class ValidationError extends Error {}

export function toView(item: QueueItemWire): ReviewItemView {
  const [height, width] = item.segmentation.size;
  let mask: Uint8Array | null = null;
  let decodeError: string | null = null;
  try {
    mask = decodeRle({ size: item.segmentation.size, counts: item.segmentation.counts });
  } catch (err) {
    if (!(err instanceof MalformedRleError)) throw err;
    decodeError = err.message;
  }
  return {
    datasetId: item.dataset_id,
    annotationId: item.annotation_id,
    phrase: item.phrase,
    score: item.score,
    box: item.box,
    width,
    height,
    mask,
    decodeError,
    image: item.image,
  };
}

export class ReviewSession {
  items: ReviewItemView[] = [];
  index = 0;
  totalUnreviewed = 0;
  datasetId: string | null = null;

  constructor(
    private client: ServiceClient,
    private reviewer: string,
  ) {}

  async load(limit: number, dataset?: string): Promise<void> {
    const queue = await this.client.fetchQueue(limit, dataset);
    this.items = queue.items.map(toView);
    this.totalUnreviewed = queue.total_unreviewed;
    this.datasetId = queue.dataset_id;
    this.index = 0;
  }

  current(): ReviewItemView | null {
    return this.items[this.index] ?? null;
  }

  /**
   * Submit one verdict for the current item. The item leaves the queue
   * immediately (focus moves to the next one) and comes back in place if
   * the service rejects the write.
   */
  async submit(verdict: VerdictKind, newCategoryName?: string): Promise<void> {
    const item = this.current();
    if (!item) throw new ValidationError('nothing to review');
    if (verdict === 'relabel' && !newCategoryName?.trim()) {
      throw new ValidationError('relabel needs a non-empty category name');
    }
    const payload: VerdictInput = {
      annotation_id: item.annotationId,
      verdict,
      reviewer: this.reviewer,
    };
    if (verdict === 'relabel') payload.new_category_name = newCategoryName!.trim();

    const position = this.index;
    this.items.splice(position, 1);
    this.totalUnreviewed -= 1;
    if (this.index >= this.items.length) this.index = Math.max(0, this.items.length - 1);
    try {
      await this.client.submitVerdicts([payload], this.datasetId ?? undefined);
    } catch (err) {
      this.items.splice(position, 0, item); // roll the optimistic update back
      this.totalUnreviewed += 1;
      this.index = position;
      throw err;
    }
  }
}
