/**
 * DOM rendering for the verification session views.
 *
 * Three screens: the annotation batch table, the final-verification list, and
 * the closed/export view. A small status bar with the stop-indicator chart is
 * shared by all of them. All state shown here mirrors the last server
 * response; nothing is computed client-side.
 */

import type { BatchPayload, BatchRow, PredictionRow, SessionStatus } from './api.js';
import { chartPoints, stopHint, type RowChoice } from './logic.js';

function escapeHtml(text: string): string {
  const div = document.createElement('div');
  div.textContent = text;
  return div.innerHTML;
}

function attributeCell(row: { name: string; label: string; comment: string }): string {
  return `
    <div class="cls-name">${escapeHtml(row.name)}</div>
    <div class="cls-label">${escapeHtml(row.label || '—')}</div>
    <div class="cls-comment">${escapeHtml(row.comment || '')}</div>`;
}

export interface BatchViewHandlers {
  onChoice(index: number, choice: 0 | 1): void;
  onConfirmAll(): void;
  onSubmit(): void;
  onObserve(index: number): void;
}

export function renderStatusBar(
  container: HTMLElement,
  status: SessionStatus | null,
  banner = '',
): void {
  container.innerHTML = '';
  if (!status) return;
  const bar = document.createElement('div');
  bar.className = 'status-bar';
  bar.innerHTML = `
    <span data-role="phase">phase: <b>${escapeHtml(status.phase)}</b></span>
    <span>annotated: <b>${status.annotated}</b> / budget ${status.budget}</span>
    <span>remaining pool: ${status.remaining}</span>`;
  container.appendChild(bar);
  container.appendChild(renderStopIndicator(status.stopIndicatorHistory));
  if (banner) {
    const note = document.createElement('div');
    note.className = 'banner';
    note.textContent = banner;
    container.appendChild(note);
  }
}

export function renderStopIndicator(series: number[]): HTMLElement {
  const wrap = document.createElement('div');
  wrap.className = 'stop-indicator';
  if (series.length === 0) return wrap;
  const width = 260;
  const height = 60;
  const latest = series[series.length - 1];
  wrap.innerHTML = `
    <div class="chart-title">annotated + predicted matches: <b data-role="indicator-value">${latest}</b>
      <span data-role="indicator-count" hidden>${series.length}</span></div>
    <svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">
      <polyline fill="none" stroke="#2563eb" stroke-width="1.5"
        points="${chartPoints(series, width, height)}"></polyline>
    </svg>`;
  if (stopHint(series)) {
    const hint = document.createElement('div');
    hint.className = 'stop-hint';
    hint.dataset.role = 'stop-hint';
    hint.textContent =
      'The total has been stable for the last batches; the prediction looks settled.';
    wrap.appendChild(hint);
  }
  return wrap;
}

export function renderBatch(
  container: HTMLElement,
  batch: BatchPayload,
  choices: RowChoice[],
  handlers: BatchViewHandlers,
  disabled = false,
): void {
  container.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = `Batch ${batch.batchIndex}: decide each candidate pair`;
  container.appendChild(heading);

  const table = document.createElement('table');
  table.className = 'batch-table';
  table.innerHTML = `
    <thead><tr>
      <th>source class</th><th>target class</th>
      <th>predicted</th><th>decision</th><th></th>
    </tr></thead>`;
  const body = document.createElement('tbody');

  batch.pairs.forEach((row: BatchRow, index: number) => {
    const tr = document.createElement('tr');
    tr.dataset.pairId = row.pairId;
    const predictedText = row.predicted === 1 ? 'match' : 'no match';
    tr.innerHTML = `
      <td>${attributeCell(row.source)}</td>
      <td>${attributeCell(row.target)}</td>
      <td class="pred ${row.predicted === 1 ? 'pred-match' : 'pred-none'}">
        ${predictedText}<br><small>p = ${row.certainty.toFixed(3)}</small></td>`;

    const decide = document.createElement('td');
    decide.className = 'decide';
    const matchButton = document.createElement('button');
    matchButton.textContent = 'match';
    matchButton.dataset.role = 'choose-match';
    matchButton.className = choices[index] === 1 ? 'chosen' : '';
    matchButton.disabled = disabled;
    matchButton.onclick = () => handlers.onChoice(index, 1);
    const noButton = document.createElement('button');
    noButton.textContent = 'no match';
    noButton.dataset.role = 'choose-no';
    noButton.className = choices[index] === 0 ? 'chosen' : '';
    noButton.disabled = disabled;
    noButton.onclick = () => handlers.onChoice(index, 0);
    decide.append(matchButton, noButton);
    tr.appendChild(decide);

    const extra = document.createElement('td');
    const observe = document.createElement('button');
    observe.textContent = 'observe';
    observe.title = 'add to the observation list for a second opinion';
    observe.dataset.role = 'observe';
    observe.disabled = disabled;
    observe.onclick = () => handlers.onObserve(index);
    extra.appendChild(observe);
    tr.appendChild(extra);

    body.appendChild(tr);
  });
  table.appendChild(body);
  container.appendChild(table);

  const controls = document.createElement('div');
  controls.className = 'controls';
  const confirmAll = document.createElement('button');
  confirmAll.textContent = 'Confirm all predictions';
  confirmAll.dataset.role = 'confirm-all';
  confirmAll.disabled = disabled;
  confirmAll.onclick = () => handlers.onConfirmAll();
  const submit = document.createElement('button');
  submit.textContent = 'Submit batch';
  submit.dataset.role = 'submit-batch';
  submit.className = 'primary';
  submit.disabled = disabled || choices.some((choice) => choice === null);
  submit.onclick = () => handlers.onSubmit();
  controls.append(confirmAll, submit);
  container.appendChild(controls);
}

export interface VerificationHandlers {
  onToggle(pairId: string): void;
  onSubmit(): void;
}

export function renderVerification(
  container: HTMLElement,
  predictions: PredictionRow[],
  accepted: Set<string>,
  handlers: VerificationHandlers,
  submitted: boolean,
): void {
  container.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'Final verification: confirm the predicted matches';
  container.appendChild(heading);

  if (predictions.length === 0) {
    const empty = document.createElement('p');
    empty.dataset.role = 'no-predictions';
    empty.textContent = 'No predicted matches remain to verify.';
    container.appendChild(empty);
  } else {
    const table = document.createElement('table');
    table.className = 'batch-table';
    table.innerHTML = `
      <thead><tr><th>source class</th><th>target class</th><th>certainty</th><th>verdict</th></tr></thead>`;
    const body = document.createElement('tbody');
    for (const row of predictions) {
      const tr = document.createElement('tr');
      tr.dataset.pairId = row.pairId;
      tr.innerHTML = `
        <td>${attributeCell(row.source)}</td>
        <td>${attributeCell(row.target)}</td>
        <td>p = ${row.certainty.toFixed(3)}</td>`;
      const cell = document.createElement('td');
      const toggle = document.createElement('button');
      const keep = accepted.has(row.pairId);
      toggle.textContent = keep ? 'accept' : 'reject';
      toggle.className = keep ? 'chosen' : 'rejected';
      toggle.dataset.role = 'verdict';
      toggle.disabled = submitted;
      toggle.onclick = () => handlers.onToggle(row.pairId);
      cell.appendChild(toggle);
      tr.appendChild(cell);
      body.appendChild(tr);
    }
    table.appendChild(body);
    container.appendChild(table);
  }

  const submit = document.createElement('button');
  submit.textContent = 'Finish verification';
  submit.className = 'primary';
  submit.dataset.role = 'submit-verification';
  submit.disabled = submitted;
  submit.onclick = () => handlers.onSubmit();
  container.appendChild(submit);
}

export function renderClosed(
  container: HTMLElement,
  matches: { source: string; target: string }[],
  onDownload: () => void,
): void {
  container.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = 'Session complete';
  container.appendChild(heading);
  const summary = document.createElement('p');
  summary.dataset.role = 'final-count';
  summary.textContent = `Final alignment holds ${matches.length} matches.`;
  container.appendChild(summary);
  const download = document.createElement('button');
  download.textContent = 'Download alignment JSON';
  download.className = 'primary';
  download.dataset.role = 'download-export';
  download.onclick = onDownload;
  container.appendChild(download);
}

export function renderObservations(
  container: HTMLElement,
  observations: { pairId: string; note: string }[],
  onRemove: (pairId: string) => void,
): void {
  container.innerHTML = '';
  const heading = document.createElement('h3');
  heading.textContent = `Observation list (${observations.length})`;
  container.appendChild(heading);
  const list = document.createElement('ul');
  list.className = 'observations';
  for (const observation of observations) {
    const item = document.createElement('li');
    item.dataset.pairId = observation.pairId;
    item.textContent = `${observation.pairId.replace('||', ' ↔ ')} ${observation.note ? '— ' + observation.note : ''}`;
    const remove = document.createElement('button');
    remove.textContent = '×';
    remove.dataset.role = 'remove-observation';
    remove.onclick = () => onRemove(observation.pairId);
    item.appendChild(remove);
    list.appendChild(item);
  }
  container.appendChild(list);
}
