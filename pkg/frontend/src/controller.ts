/** DOM-free session controller: state refresh, polling, and observation
 * submission with a double-submit guard.
 *
 * The guard is two layered: an in-flight flag rejects a second submit while
 * the first request is still on the wire, and each submit is pinned to the
 * proposal iteration it was filled in for, so a stale form cannot observe a
 * newer proposal.
 */

import {
  ApiClient,
  ApiError,
  ObservationResult,
  Proposal,
  SessionState,
} from "./api.js";

export type SubmitOutcome =
  | { accepted: true; state: SessionState }
  | { accepted: false; reason: string };

export interface ControllerEvents {
  onState?: (state: SessionState) => void;
  onProposal?: (proposal: Proposal | null) => void;
  onError?: (error: Error) => void;
}

export class SessionController {
  private submitting = false;
  private proposal: Proposal | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    private readonly events: ControllerEvents = {},
  ) {}

  get outstandingProposal(): Proposal | null {
    return this.proposal;
  }

  async refresh(): Promise<SessionState> {
    const state = await this.api.getState(this.sessionId);
    this.proposal = state.outstanding_proposal;
    this.events.onState?.(state);
    this.events.onProposal?.(this.proposal);
    return state;
  }

  /** Ask the server for the next batch (idempotent while one is pending). */
  async fetchProposal(): Promise<Proposal> {
    const proposal = await this.api.getProposal(this.sessionId);
    this.proposal = proposal;
    this.events.onProposal?.(proposal);
    return proposal;
  }

  /** Submit results for the outstanding proposal.
   *
   * Exactly one of any overlapping submit calls reaches the server; the
   * rest resolve with accepted=false and never issue a request.
   */
  async submitObservation(
    results: ObservationResult[],
    forIteration?: number,
  ): Promise<SubmitOutcome> {
    if (this.submitting) {
      return { accepted: false, reason: "a submission is already in flight" };
    }
    if (this.proposal === null) {
      return { accepted: false, reason: "no outstanding proposal" };
    }
    if (forIteration !== undefined && forIteration !== this.proposal.iteration) {
      return { accepted: false, reason: "form is stale: proposal changed" };
    }
    if (results.length !== this.proposal.points.length) {
      return {
        accepted: false,
        reason: `expected ${this.proposal.points.length} results, got ${results.length}`,
      };
    }
    this.submitting = true;
    try {
      const state = await this.api.postObservation(this.sessionId, results);
      this.proposal = null;
      this.events.onState?.(state);
      this.events.onProposal?.(null);
      return { accepted: true, state };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else observed first; resync instead of surfacing a crash
        await this.refresh().catch(() => undefined);
        return { accepted: false, reason: err.message };
      }
      throw err;
    } finally {
      this.submitting = false;
    }
  }

  startPolling(intervalMs = 2000): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      this.refresh().catch((err) => this.events.onError?.(err as Error));
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
