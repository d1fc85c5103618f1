/**
 * Session controller: wires the API client to the views and polls status.
 *
 * The flow follows the server's phases: annotate batch by batch, then verify
 * the remaining predicted matches, then export the final alignment. Submits
 * reuse the current batch token, so a retry after a network failure cannot
 * double-apply.
 */

import { ApiError, SessionApi, type BatchPayload, type PredictionRow, type SessionStatus } from './api.js';
import { buildAnswers, buildVerifications, confirmAllChoices, type RowChoice } from './logic.js';
import {
  renderBatch,
  renderClosed,
  renderObservations,
  renderStatusBar,
  renderVerification,
} from './views.js';

const POLL_INTERVAL_MS = 2000;

export class SessionController {
  private status: SessionStatus | null = null;
  private batch: BatchPayload | null = null;
  private choices: RowChoice[] = [];
  private predictions: PredictionRow[] | null = null;
  private accepted = new Set<string>();
  private verificationSubmitted = false;
  private banner = '';
  private busy = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: SessionApi,
    private sessionId: string,
    private statusHost: HTMLElement,
    private viewHost: HTMLElement,
    private observationsHost: HTMLElement,
  ) {}

  async start(): Promise<void> {
    await this.refresh();
    this.timer = setInterval(() => {
      this.pollStatus().catch(() => undefined);
    }, POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  private async pollStatus(): Promise<void> {
    if (this.busy) return;
    const fresh = await this.api.status(this.sessionId);
    const phaseChanged = !this.status || fresh.phase !== this.status.phase;
    this.status = fresh;
    renderStatusBar(this.statusHost, this.status, this.banner);
    if (phaseChanged) await this.refresh();
  }

  async refresh(): Promise<void> {
    this.status = await this.api.status(this.sessionId);
    renderStatusBar(this.statusHost, this.status, this.banner);
    await this.renderObservationList();
    if (this.status.phase === 'annotating') {
      this.batch = await this.api.batch(this.sessionId);
      this.choices = this.batch.pairs.map(() => null);
      this.renderBatchView();
    } else if (this.status.phase === 'verifying') {
      this.predictions = (await this.api.predictions(this.sessionId)).predictions;
      this.accepted = new Set(this.predictions.map((p) => p.pairId));
      this.verificationSubmitted = false;
      if (this.predictions.length === 0) {
        // nothing to review: complete verification right away so the export
        // is immediately available
        await this.api.submitVerifications(this.sessionId, {});
        await this.showClosed();
        return;
      }
      this.renderVerificationView();
    } else {
      await this.showClosed();
    }
  }

  // -- annotation phase -------------------------------------------------

  private renderBatchView(): void {
    if (!this.batch) return;
    renderBatch(this.viewHost, this.batch, this.choices, {
      onChoice: (index, choice) => {
        this.choices[index] = choice;
        this.renderBatchView();
      },
      onConfirmAll: () => {
        this.choices = confirmAllChoices(this.batch!.pairs);
        this.renderBatchView();
      },
      onSubmit: () => {
        void this.submitBatch();
      },
      onObserve: (index) => {
        void this.addObservation(index);
      },
    }, this.busy);
  }

  private async submitBatch(): Promise<void> {
    if (!this.batch) return;
    const answers = buildAnswers(this.batch.pairs, this.choices);
    if (answers === null) return;
    this.busy = true;
    try {
      await this.api.submitAnnotations(this.sessionId, this.batch.batchToken, answers);
      this.banner = '';
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.banner = `Server state moved on (${error.message}); reloading the batch.`;
      } else {
        this.banner = `Submission failed: ${(error as Error).message}; retry will reuse the same batch token.`;
        this.busy = false;
        renderStatusBar(this.statusHost, this.status, this.banner);
        this.renderBatchView();
        return;
      }
    }
    this.busy = false;
    await this.refresh();
  }

  private async addObservation(index: number): Promise<void> {
    if (!this.batch) return;
    await this.api.addObservation(this.sessionId, this.batch.pairs[index].pairId);
    await this.renderObservationList();
  }

  private async renderObservationList(): Promise<void> {
    const { observations } = await this.api.observations(this.sessionId);
    renderObservations(this.observationsHost, observations, (pairId) => {
      void this.api.removeObservation(this.sessionId, pairId).then(() => this.renderObservationList());
    });
  }

  // -- verification phase -----------------------------------------------

  private renderVerificationView(): void {
    if (!this.predictions) return;
    renderVerification(
      this.viewHost,
      this.predictions,
      this.accepted,
      {
        onToggle: (pairId) => {
          if (this.accepted.has(pairId)) this.accepted.delete(pairId);
          else this.accepted.add(pairId);
          this.renderVerificationView();
        },
        onSubmit: () => {
          void this.submitVerification();
        },
      },
      this.verificationSubmitted,
    );
  }

  private async submitVerification(): Promise<void> {
    if (!this.predictions) return;
    const decisions = buildVerifications(
      this.predictions.map((p) => p.pairId),
      this.accepted,
    );
    await this.api.submitVerifications(this.sessionId, decisions);
    this.verificationSubmitted = true;
    await this.showClosed();
  }

  private async showClosed(): Promise<void> {
    this.status = await this.api.status(this.sessionId);
    renderStatusBar(this.statusHost, this.status, this.banner);
    const alignment = await this.api.exportAlignment(this.sessionId);
    renderClosed(this.viewHost, alignment.matches, () => {
      const blob = new Blob([JSON.stringify(alignment, null, 1)], { type: 'application/json' });
      const url = URL.createObjectURL(blob);
      const anchor = document.createElement('a');
      anchor.href = url;
      anchor.download = `alignment-${this.sessionId}.json`;
      anchor.click();
      URL.revokeObjectURL(url);
    });
  }
}

/** Landing screen: pick a task, set the batch size and budget, start. */
async function boot(): Promise<void> {
  const api = new SessionApi('');
  const statusHost = document.getElementById('status')!;
  const viewHost = document.getElementById('view')!;
  const observationsHost = document.getElementById('observations')!;

  const { tasks } = await api.listTasks();
  viewHost.innerHTML = '<h2>Start a verification session</h2>';
  const form = document.createElement('form');
  form.innerHTML = `
    <label>task:
      <select name="task">${tasks
        .map((t) => `<option value="${t.taskId}">${t.taskId}</option>`)
        .join('')}</select>
    </label>
    <label>batch size: <input name="batch" type="number" value="10" min="1"></label>
    <label>budget: <input name="budget" type="number" value="100" min="1"></label>
    <button class="primary" type="submit">Create session</button>`;
  form.onsubmit = async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const { sessionId } = await api.createSession(String(data.get('task')), {
      batch_size: Number(data.get('batch')),
      budget: Number(data.get('budget')),
    });
    const controller = new SessionController(api, sessionId, statusHost, viewHost, observationsHost);
    await controller.start();
  };
  viewHost.appendChild(form);
}

if (typeof document !== 'undefined' && document.getElementById('view')) {
  boot().catch((error) => {
    const host = document.getElementById('view');
    if (host) host.textContent = `Failed to reach the session service: ${error}`;
  });
}
