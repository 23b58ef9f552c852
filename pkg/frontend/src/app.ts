/** Browser shell: session picker, trial form, and metric charts.
 *
 * All optimizer math lives server-side; this file only renders API payloads
 * and forwards operator input through the SessionController.
 */

import { ApiClient, Proposal, SessionState } from "./api.js";
import { SessionController } from "./controller.js";
import { lineChart, metricSeries } from "./charts.js";
import { buildResult, formatNumber, formatVector, statusLabel } from "./format.js";

const api = new ApiClient("");
let controller: SessionController | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function renderSessionList(): void {
  api
    .listSessions()
    .then(({ sessions }) => {
      const list = el<HTMLUListElement>("session-list");
      list.innerHTML = "";
      for (const s of sessions) {
        const item = document.createElement("li");
        const link = document.createElement("button");
        link.textContent = `${s.session_id} — ${statusLabel(s.status)} (${s.n_observations}/${s.budget})`;
        link.addEventListener("click", () => openSession(s.session_id));
        item.appendChild(link);
        list.appendChild(item);
      }
    })
    .catch((err) => setText("banner", `cannot list sessions: ${err.message}`));
}

function renderState(state: SessionState): void {
  setText("status", statusLabel(state.status));
  setText(
    "progress",
    `${state.n_observations} / ${state.budget} observations` +
      (state.unsafe_seed ? " (bootstrapped from an unsafe seed)" : ""),
  );
  setText("incumbent-value", formatNumber(state.incumbent.value));
  setText(
    "incumbent-point",
    state.incumbent.x ? formatVector(state.incumbent.x) : "—",
  );
  setText("trust-length", formatNumber(state.trust_region_length, 4));

  const charts = el("charts");
  charts.innerHTML = [
    lineChart(metricSeries(state.metrics, "best_feasible"), {
      label: "best feasible objective",
      stroke: "#2b6cb0",
    }),
    lineChart(metricSeries(state.metrics, "safe_ratio"), {
      label: "safe ratio",
      stroke: "#2f855a",
    }),
    lineChart(metricSeries(state.metrics, "cumulative_violation"), {
      label: "cumulative violation",
      stroke: "#c53030",
    }),
  ].join("");
}

function renderProposal(proposal: Proposal | null): void {
  const panel = el("proposal-panel");
  const rows = el("trial-rows");
  rows.innerHTML = "";
  if (!proposal) {
    panel.classList.add("hidden");
    return;
  }
  panel.classList.remove("hidden");
  setText("proposal-meta", [
    `iteration ${proposal.iteration}`,
    `safe set size ${proposal.safe_set_size}`,
    proposal.fallback ? "FALLBACK: no candidate cleared the safety bound" : "",
  ].filter(Boolean).join(" · "));

  proposal.points.forEach((point, i) => {
    const row = document.createElement("div");
    row.className = "trial-row";
    row.innerHTML = `
      <span class="point">${formatVector(point)}</span>
      <span class="bound">bound ${formatNumber(proposal.safety_bounds[i], 3)}</span>
      <input type="number" step="any" class="objective" placeholder="objective y_f" />
      <input type="number" step="any" class="safety-value" placeholder="safety y_g" />
      <select class="safety-rating">
        <option value="">rating…</option>
        <option value="safe">safe</option>
        <option value="unsafe">unsafe</option>
      </select>`;
    rows.appendChild(row);
  });
}

function collectResults(): { y_f: number; y_g?: number; rating?: string }[] {
  const rows = Array.from(document.querySelectorAll<HTMLElement>(".trial-row"));
  return rows.map((row) => {
    const objective = parseFloat(
      row.querySelector<HTMLInputElement>(".objective")!.value,
    );
    if (!isFinite(objective)) throw new Error("every trial needs an objective");
    const numeric = row.querySelector<HTMLInputElement>(".safety-value")!.value;
    const rating = row.querySelector<HTMLSelectElement>(".safety-rating")!.value;
    if (numeric !== "") {
      return buildResult(objective, { kind: "numeric", value: parseFloat(numeric) });
    }
    if (rating !== "") {
      return buildResult(objective, { kind: "rating", value: rating });
    }
    throw new Error("every trial needs a numeric safety value or a rating");
  });
}

function openSession(sessionId: string): void {
  controller?.stopPolling();
  controller = new SessionController(api, sessionId, {
    onState: renderState,
    onProposal: renderProposal,
    onError: (err) => setText("banner", err.message),
  });
  setText("session-id", sessionId);
  el("session-panel").classList.remove("hidden");
  controller.refresh().catch((err) => setText("banner", err.message));
  controller.startPolling();
}

function wireActions(): void {
  el<HTMLButtonElement>("btn-propose").addEventListener("click", () => {
    controller
      ?.fetchProposal()
      .catch((err) => setText("banner", err.message));
  });

  const submit = el<HTMLButtonElement>("btn-submit");
  submit.addEventListener("click", async () => {
    if (!controller) return;
    submit.disabled = true; // visual guard; the controller enforces the real one
    try {
      const iteration = controller.outstandingProposal?.iteration;
      const outcome = await controller.submitObservation(collectResults(), iteration);
      setText(
        "banner",
        outcome.accepted ? "observation recorded" : `not recorded: ${outcome.reason}`,
      );
    } catch (err) {
      setText("banner", (err as Error).message);
    } finally {
      submit.disabled = false;
    }
  });

  el<HTMLButtonElement>("btn-refresh-sessions").addEventListener(
    "click",
    renderSessionList,
  );
}

wireActions();
renderSessionList();
