/**
 * Pure view logic, kept DOM-free so it can be unit tested directly.
 */

import type { BatchRow, Decision } from './api.js';

/** User's per-row choice: the label they settled on, or undecided. */
export type RowChoice = 0 | 1 | null;

/**
 * Map a decided row to the wire decision: agreeing with the prediction is a
 * confirm, anything else is an explicit revision.
 */
export function decisionFor(row: BatchRow, choice: 0 | 1): Decision {
  if (choice === row.predicted) return 'confirm';
  return choice === 1 ? 'revise-to-1' : 'revise-to-0';
}

/** Build the submission payload; null while any row is undecided. */
export function buildAnswers(
  rows: BatchRow[],
  choices: RowChoice[],
): Record<string, Decision> | null {
  if (rows.length !== choices.length) return null;
  const answers: Record<string, Decision> = {};
  for (let i = 0; i < rows.length; i++) {
    const choice = choices[i];
    if (choice === null) return null;
    answers[rows[i].pairId] = decisionFor(rows[i], choice);
  }
  return answers;
}

/** Accept every prediction as-is (the "confirm all" control). */
export function confirmAllChoices(rows: BatchRow[]): RowChoice[] {
  return rows.map((row) => row.predicted);
}

/**
 * Convergence hint: the total of annotated and predicted matches has not
 * moved across the last three verification steps.
 */
export function stopHint(series: number[], window = 3): boolean {
  if (series.length < window) return false;
  const tail = series.slice(-window);
  return tail.every((value) => value === tail[0]);
}

/** Points for the stop-indicator polyline, scaled into a width x height box. */
export function chartPoints(
  series: number[],
  width: number,
  height: number,
  pad = 4,
): string {
  if (series.length === 0) return '';
  const maxValue = Math.max(...series, 1);
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = series.length > 1 ? innerW / (series.length - 1) : 0;
  return series
    .map((value, i) => {
      const x = pad + (series.length > 1 ? i * step : innerW / 2);
      const y = pad + innerH - (value / maxValue) * innerH;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(' ');
}

/** Verification decisions payload: accepted pair ids true, rejected false. */
export function buildVerifications(
  pairIds: string[],
  accepted: Set<string>,
): Record<string, boolean> {
  const decisions: Record<string, boolean> = {};
  for (const pairId of pairIds) decisions[pairId] = accepted.has(pairId);
  return decisions;
}
