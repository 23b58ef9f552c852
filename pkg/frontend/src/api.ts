/** Typed client for the losbo session HTTP API.
 *
 * Every value shown in the console comes straight out of these responses;
 * the client never recomputes optimizer math.
 */

export interface ObservationResult {
  y_f: number;
  y_g?: number | null;
  rating?: string | null;
}

export interface InitialObservation extends ObservationResult {
  x: number[];
}

export interface Proposal {
  iteration: number;
  points: number[][];
  latent_points: number[][];
  safety_bounds: number[];
  safe_set_size: number;
  fallback: boolean;
  region: { lower: number[]; upper: number[] };
}

export interface MetricRow {
  iteration: number;
  best_feasible: number | null;
  safe_ratio: number | null;
  cumulative_violation: number | null;
  trust_region_length: number;
  safe_set_size: number;
  fallback: boolean;
  n_observations: number;
}

export interface SessionState {
  session_id: string;
  status: string;
  seq: number;
  budget: number;
  n_initial: number;
  n_observations: number;
  unsafe_seed: boolean;
  incumbent: { x: number[] | null; value: number | null };
  trust_region_length: number;
  last_safe_set_size: number | null;
  metrics: MetricRow[];
  outstanding_proposal: Proposal | null;
  history: { x: number[]; y_f: number; y_g: number; iteration: number }[];
  state_hash?: string;
}

export interface SessionSummary {
  session_id: string;
  status: string;
  n_observations: number;
  budget: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly error: string,
    message: string,
    public readonly hint?: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload?.error ?? "UnknownError",
        payload?.message ?? `request failed with status ${response.status}`,
        payload?.hint,
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("GET", "/api/sessions");
  }

  createSession(
    config: Record<string, unknown>,
    initialObservations: InitialObservation[],
  ): Promise<SessionState> {
    return this.request("POST", "/api/sessions", {
      config,
      initial_observations: initialObservations,
    });
  }

  getProposal(sessionId: string): Promise<Proposal> {
    return this.request("GET", `/api/sessions/${sessionId}/proposal`);
  }

  postObservation(
    sessionId: string,
    results: ObservationResult[],
  ): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/observation`, {
      results,
    });
  }

  getState(sessionId: string, historyLimit?: number): Promise<SessionState> {
    const query = historyLimit === undefined ? "" : `?history_limit=${historyLimit}`;
    return this.request("GET", `/api/sessions/${sessionId}/state${query}`);
  }

  postNote(sessionId: string, text: string): Promise<{ seq: number }> {
    return this.request("POST", `/api/sessions/${sessionId}/note`, { text });
  }
}
