// DOM glue: wires ReviewSession onto the page. All reviewing logic lives
// in app.ts/api.ts; this file only draws and forwards clicks.

import { ServiceClient } from './api.js';
import { ReviewItemView, ReviewSession, ValidationError } from './app.js';
import { formatLabel, maskOverlayRgba, phraseColor, scaleBox } from './overlay.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const serviceInput = $<HTMLInputElement>('service-url');
const datasetInput = $<HTMLInputElement>('dataset-id');
const reviewerInput = $<HTMLInputElement>('reviewer');
const loadButton = $<HTMLButtonElement>('load');
const acceptButton = $<HTMLButtonElement>('accept');
const rejectButton = $<HTMLButtonElement>('reject');
const relabelButton = $<HTMLButtonElement>('relabel');
const relabelInput = $<HTMLInputElement>('relabel-name');
const maskToggle = $<HTMLInputElement>('show-mask');
const boxToggle = $<HTMLInputElement>('show-box');
const scaleInput = $<HTMLInputElement>('scale');
const canvas = $<HTMLCanvasElement>('view');
const label = $<HTMLDivElement>('label');
const status = $<HTMLDivElement>('status');

let session: ReviewSession | null = null;

function say(message: string, isError = false): void {
  status.textContent = message;
  status.className = isError ? 'error' : '';
}

function drawBase(ctx: CanvasRenderingContext2D, item: ReviewItemView, scale: number): void {
  ctx.fillStyle = '#444';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!item.image.png_b64) {
    drawLayers(ctx, item, scale);
    return;
  }
  const img = new Image();
  img.onload = () => {
    ctx.drawImage(img, 0, 0, item.width * scale, item.height * scale);
    drawLayers(ctx, item, scale);
  };
  img.src = `data:image/png;base64,${item.image.png_b64}`;
}

function drawLayers(ctx: CanvasRenderingContext2D, item: ReviewItemView, scale: number): void {
  const color = phraseColor(item.phrase);
  if (maskToggle.checked && item.mask) {
    const overlay = new ImageData(
      maskOverlayRgba(item.mask, item.width, item.height, color),
      item.width,
      item.height,
    );
    const off = document.createElement('canvas');
    off.width = item.width;
    off.height = item.height;
    off.getContext('2d')!.putImageData(overlay, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(off, 0, 0, item.width * scale, item.height * scale);
  }
  if (boxToggle.checked) {
    const box = scaleBox(item.box, scale);
    ctx.strokeStyle = `rgb(${color[0]}, ${color[1]}, ${color[2]})`;
    ctx.lineWidth = 2;
    ctx.strokeRect(box.x1, box.y1, box.x2 - box.x1, box.y2 - box.y1);
  }
}

function render(): void {
  if (!session) return;
  const item = session.current();
  const ctx = canvas.getContext('2d')!;
  if (!item) {
    canvas.width = 480;
    canvas.height = 120;
    ctx.fillStyle = '#222';
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    label.textContent = '';
    say(`queue empty (${session.totalUnreviewed} unreviewed on the server)`);
    return;
  }
  const scale = Number(scaleInput.value) || 1;
  canvas.width = item.width * scale;
  canvas.height = item.height * scale;
  label.textContent =
    formatLabel(item.phrase, item.score) +
    (item.decodeError ? ` [MASK DECODE ERROR: ${item.decodeError}]` : '');
  drawBase(ctx, item, scale);
  say(
    `annotation ${item.annotationId} of dataset ${item.datasetId}: ` +
      `${session.items.length} in view, ${session.totalUnreviewed} unreviewed`,
  );
}

async function submit(kind: 'accept' | 'reject' | 'relabel'): Promise<void> {
  if (!session) return;
  try {
    await session.submit(kind, kind === 'relabel' ? relabelInput.value : undefined);
    render();
  } catch (err) {
    if (err instanceof ValidationError) {
      say(err.message, true);
    } else {
      say(`submit failed, nothing recorded: ${err}`, true);
      render();
    }
  }
}

loadButton.addEventListener('click', async () => {
  session = new ReviewSession(
    new ServiceClient(serviceInput.value),
    reviewerInput.value || 'reviewer',
  );
  try {
    await session.load(50, datasetInput.value || undefined);
    render();
  } catch (err) {
    say(`load failed: ${err}`, true);
  }
});
acceptButton.addEventListener('click', () => void submit('accept'));
rejectButton.addEventListener('click', () => void submit('reject'));
relabelButton.addEventListener('click', () => void submit('relabel'));
maskToggle.addEventListener('change', render);
boxToggle.addEventListener('change', render);
scaleInput.addEventListener('change', render);
