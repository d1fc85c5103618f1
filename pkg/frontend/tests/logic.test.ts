import { describe, expect, it } from 'vitest';

import type { BatchRow } from '../src/api.js';
import {
  buildAnswers,
  buildVerifications,
  chartPoints,
  confirmAllChoices,
  decisionFor,
  stopHint,
} from '../src/logic.js';

function row(pairId: string, predicted: 0 | 1): BatchRow {
  return {
    pairId,
    predicted,
    certainty: 0.5,
    source: { iri: 's', name: 'S', label: '', comment: '' },
    target: { iri: 't', name: 'T', label: '', comment: '' },
  };
}

describe('decisionFor', () => {
  it('confirms when the user agrees with the prediction', () => {
    expect(decisionFor(row('a', 1), 1)).toBe('confirm');
    expect(decisionFor(row('a', 0), 0)).toBe('confirm');
  });

  it('revises when the user flips the prediction', () => {
    expect(decisionFor(row('a', 1), 0)).toBe('revise-to-0');
    expect(decisionFor(row('a', 0), 1)).toBe('revise-to-1');
  });
});

describe('buildAnswers', () => {
  const rows = [row('a', 1), row('b', 0), row('c', 1)];

  it('is null while any row is undecided', () => {
    expect(buildAnswers(rows, [1, 0, null])).toBeNull();
    expect(buildAnswers(rows, [null, null, null])).toBeNull();
  });

  it('contains a revision for exactly the toggled row', () => {
    const answers = buildAnswers(rows, [1, 0, 0]);
    expect(answers).toEqual({ a: 'confirm', b: 'confirm', c: 'revise-to-0' });
  });

  it('confirm-all produces only confirms', () => {
    const answers = buildAnswers(rows, confirmAllChoices(rows));
    expect(Object.values(answers!)).toEqual(['confirm', 'confirm', 'confirm']);
  });
});

describe('stopHint', () => {
  it('stays quiet while the series moves', () => {
    expect(stopHint([5, 8, 9])).toBe(false);
  });

  it('fires when the last three samples are equal', () => {
    expect(stopHint([9, 9, 9])).toBe(true);
    expect(stopHint([2, 9, 9, 9])).toBe(true);
  });

  it('needs at least the window size', () => {
    expect(stopHint([9])).toBe(false);
    expect(stopHint([])).toBe(false);
  });
});

describe('chartPoints', () => {
  it('produces one point per sample inside the box', () => {
    const points = chartPoints([1, 2, 3], 100, 40);
    expect(points.split(' ')).toHaveLength(3);
    for (const pair of points.split(' ')) {
      const [x, y] = pair.split(',').map(Number);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(100);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(40);
    }
  });

  it('handles the single-point chart', () => {
    expect(chartPoints([5], 100, 40).split(' ')).toHaveLength(1);
    expect(chartPoints([], 100, 40)).toBe('');
  });
});

describe('buildVerifications', () => {
  it('mirrors per-row accept/reject choices exactly', () => {
    const decisions = buildVerifications(['a', 'b', 'c'], new Set(['a', 'c']));
    expect(decisions).toEqual({ a: true, b: false, c: true });
  });
});
