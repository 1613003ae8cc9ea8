// Thin client for the review routes. No verdict logic lives here; the
// service owns all state.

export interface WireImage {
  image_id: string;
  width: number;
  height: number;
  file_name?: string;
  png_b64?: string;
}

export interface QueueItemWire {
  dataset_id: string;
  annotation_id: number;
  phrase: string;
  score: number | null;
  box: [number, number, number, number];
  segmentation: { size: [number, number]; counts: number[] };
  area: number;
  image: WireImage;
  current_verdict: string | null;
}

export interface QueueResponse {
  dataset_id: string;
  total_unreviewed: number;
  items: QueueItemWire[];
}

export type VerdictKind = 'accept' | 'reject' | 'relabel';

export interface VerdictInput {
  annotation_id: number;
  verdict: VerdictKind;
  reviewer: string;
  new_category_name?: string;
}

export interface CocoDocument {
  info: { provenance: Record<string, unknown> };
  images: Array<{ id: number; width: number; height: number; file_name: string }>;
  annotations: Array<Record<string, unknown>>;
  categories: Array<{ id: number; name: string }>;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = 'unknown';
  let message = response.statusText;
  try {
    const body = await response.json();
    code = body.error ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(response.status, code, message);
}

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  async fetchQueue(limit: number, dataset?: string): Promise<QueueResponse> {
    const params = new URLSearchParams({ limit: String(limit) });
    if (dataset) params.set('dataset', dataset);
    const response = await this.fetchFn(`${this.baseUrl}/v1/review/queue?${params}`);
    await raiseForStatus(response);
    return response.json();
  }

  async submitVerdicts(verdicts: VerdictInput[], dataset?: string): Promise<number> {
    const params = dataset ? `?${new URLSearchParams({ dataset })}` : '';
    const response = await this.fetchFn(`${this.baseUrl}/v1/review/verdicts${params}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(verdicts),
    });
    await raiseForStatus(response);
    const body = await response.json();
    return body.recorded as number;
  }

  async exportDataset(
    datasetId: string,
    opts: { filtered?: boolean; dropUnreviewed?: boolean } = {},
  ): Promise<CocoDocument> {
    const params = new URLSearchParams();
    if (opts.filtered) params.set('filtered', 'true');
    if (opts.dropUnreviewed) params.set('drop_unreviewed', 'true');
    const query = params.size > 0 ? `?${params}` : '';
    const response = await this.fetchFn(
      `${this.baseUrl}/v1/datasets/${encodeURIComponent(datasetId)}/export${query}`,
    );
    await raiseForStatus(response);
    return response.json();
  }
}
