/**
 * Typed client for the dualmatch session service.
 *
 * The client never computes labels: every prediction and certainty shown in
 * the UI comes straight from these payloads.
 */

export interface ClassAttributes {
  iri: string;
  name: string;
  label: string;
  comment: string;
}

export interface BatchRow {
  pairId: string;
  source: ClassAttributes;
  target: ClassAttributes;
  predicted: 0 | 1;
  certainty: number;
}

export interface BatchPayload {
  batchToken: string;
  batchIndex: number;
  pairs: BatchRow[];
}

export interface SessionStatus {
  sessionId: string;
  taskId: string;
  phase: 'annotating' | 'verifying' | 'closed';
  annotated: number;
  remaining: number;
  budget: number;
  batchSize: number;
  stopIndicatorHistory: number[];
  responseTimeStats: { count: number; mean: number | null; max: number | null };
}

export interface PredictionRow extends BatchRow {}

export interface Observation {
  pairId: string;
  note: string;
}

export interface AlignmentExport {
  matches: { source: string; target: string }[];
}

export type Decision = 'confirm' | 'revise-to-0' | 'revise-to-1';

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(private base: string = '') {}

  listTasks(): Promise<{ tasks: { taskId: string }[] }> {
    return request(this.base, '/tasks');
  }

  uploadTask(payload: unknown): Promise<{ taskId: string }> {
    return request(this.base, '/tasks', { method: 'POST', body: JSON.stringify(payload) });
  }

  createSession(taskId: string, config: Record<string, unknown>): Promise<{ sessionId: string }> {
    return request(this.base, '/sessions', {
      method: 'POST',
      body: JSON.stringify({ taskId, config }),
    });
  }

  status(sessionId: string): Promise<SessionStatus> {
    return request(this.base, `/sessions/${sessionId}/status`);
  }

  batch(sessionId: string): Promise<BatchPayload> {
    return request(this.base, `/sessions/${sessionId}/batch`);
  }

  submitAnnotations(
    sessionId: string,
    batchToken: string,
    answers: Record<string, Decision>,
  ): Promise<{ accepted: number; phase: string; annotated: number; stopIndicator: number }> {
    return request(this.base, `/sessions/${sessionId}/annotations`, {
      method: 'POST',
      body: JSON.stringify({ batchToken, answers }),
    });
  }

  predictions(sessionId: string): Promise<{ predictions: PredictionRow[] }> {
    return request(this.base, `/sessions/${sessionId}/predictions`);
  }

  submitVerifications(
    sessionId: string,
    decisions: Record<string, boolean>,
  ): Promise<{ finalMatches: number; phase: string }> {
    return request(this.base, `/sessions/${sessionId}/verifications`, {
      method: 'POST',
      body: JSON.stringify({ decisions }),
    });
  }

  observations(sessionId: string): Promise<{ observations: Observation[] }> {
    return request(this.base, `/sessions/${sessionId}/observations`);
  }

  addObservation(sessionId: string, pairId: string, note = ''): Promise<{ added: boolean }> {
    return request(this.base, `/sessions/${sessionId}/observations`, {
      method: 'POST',
      body: JSON.stringify({ pairId, note }),
    });
  }

  removeObservation(sessionId: string, pairId: string): Promise<{ removed: boolean }> {
    return request(
      this.base,
      `/sessions/${sessionId}/observations?pairId=${encodeURIComponent(pairId)}`,
      { method: 'DELETE' },
    );
  }

  exportAlignment(sessionId: string): Promise<AlignmentExport> {
    return request(this.base, `/sessions/${sessionId}/export`);
  }
}
