"""Serialization of configs and run records, plus replay verification.

Run records are written as an append-only JSON-lines observation log next to
a summary document (config echo, per-iteration trajectory, final metrics).
Replaying a log recomputes the metrics trajectory and must reproduce the
stored summary exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .embedding import EmbeddingMap
from .errors import ParseError
from .geometry import Box
from .gp import HyperBounds
from .optimizer import Observation, OptimizerConfig, RunRecord
from .safety import SafetyConfig, violation_metrics
from .trust_region import TrustRegionConfig

SCHEMA_VERSION = 1


def embedding_to_dict(emb: EmbeddingMap | None) -> dict | None:
    if emb is None:
        return None
    out = {
        "kind": emb.kind,
        "source_dim": emb.source_dim,
        "latent_dim": emb.latent_dim,
    }
    if emb.kind == "linear_orthonormal":
        out["weights"] = emb.weights.tolist()
        out["offset"] = emb.offset.tolist()
    return out


def embedding_from_dict(d: dict | None) -> EmbeddingMap | None:
    if d is None:
        return None
    if d["kind"] == "identity":
        return EmbeddingMap("identity", d["source_dim"], d["latent_dim"])
    return EmbeddingMap(
        d["kind"],
        d["source_dim"],
        d["latent_dim"],
        np.array(d["weights"], dtype=float),
        np.array(d["offset"], dtype=float),
    )


def config_to_dict(cfg: OptimizerConfig) -> dict:
    return {
        "domain": {
            "lower": cfg.domain.lower.tolist(),
            "upper": cfg.domain.upper.tolist(),
        },
        "budget": cfg.budget,
        "seed": cfg.seed,
        "batch_size": cfg.batch_size,
        "candidate_count": cfg.candidate_count,
        "safety": asdict(cfg.safety),
        "trust_region": asdict(cfg.trust_region),
        "embedding": embedding_to_dict(cfg.embedding),
        "kernel_bounds": {
            "lengthscale": list(cfg.kernel_bounds.lengthscale),
            "output_scale": list(cfg.kernel_bounds.output_scale),
            "noise_variance": list(cfg.kernel_bounds.noise_variance),
        },
        "kernel_family": cfg.kernel_family,
        "fit_restarts": cfg.fit_restarts,
        "fit_iterations": cfg.fit_iterations,
        "refit_stride": cfg.refit_stride,
        "search_mode": cfg.search_mode,
        "bootstrap_unsafe_seed": cfg.bootstrap_unsafe_seed,
        "data_window": cfg.data_window,
    }


def config_from_dict(d: dict) -> OptimizerConfig:
    try:
        kb = d.get("kernel_bounds", {})
        return OptimizerConfig(
            domain=Box(
                np.array(d["domain"]["lower"], dtype=float),
                np.array(d["domain"]["upper"], dtype=float),
            ),
            budget=int(d["budget"]),
            seed=int(d.get("seed", 0)),
            batch_size=int(d.get("batch_size", 10)),
            candidate_count=int(d.get("candidate_count", 2000)),
            safety=SafetyConfig(**d.get("safety", {})),
            trust_region=TrustRegionConfig(**d.get("trust_region", {})),
            embedding=embedding_from_dict(d.get("embedding")),
            kernel_bounds=HyperBounds(
                lengthscale=tuple(kb.get("lengthscale", (1e-3, 1e3))),
                output_scale=tuple(kb.get("output_scale", (1e-3, 1e3))),
                noise_variance=tuple(kb.get("noise_variance", (1e-8, 1e1))),
            ),
            kernel_family=d.get("kernel_family", "matern52"),
            fit_restarts=int(d.get("fit_restarts", 5)),
            fit_iterations=int(d.get("fit_iterations", 50)),
            refit_stride=int(d.get("refit_stride", 1)),
            search_mode=d.get("search_mode", "local"),
            bootstrap_unsafe_seed=bool(d.get("bootstrap_unsafe_seed", False)),
            data_window=d.get("data_window"),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad config document: {exc!r}") from exc


def observation_to_dict(obs: Observation) -> dict:
    return {
        "x": np.asarray(obs.x).tolist(),
        "y_f": obs.y_f,
        "y_g": obs.y_g,
        "iteration": obs.iteration,
        "timestamp": obs.timestamp,
    }


def observation_from_dict(d: dict) -> Observation:
    return Observation(
        np.array(d["x"], dtype=float),
        float(d["y_f"]),
        float(d["y_g"]),
        int(d["iteration"]),
        float(d.get("timestamp", 0.0)),
    )


def canonical_json(payload) -> str:
    """Deterministic JSON used for hashing; NaN rendered portably."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def state_hash(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def _strip_timestamps(obs_dicts: list[dict]) -> list[dict]:
    return [{k: v for k, v in d.items() if k != "timestamp"} for d in obs_dicts]


def record_hash(record: RunRecord) -> str:
    payload = {
        "config": config_to_dict(record.config),
        "observations": _strip_timestamps(
            [observation_to_dict(o) for o in record.observations]
        ),
        "trajectory": record.trajectory,
        "n_initial": record.n_initial,
        "unsafe_seed": record.unsafe_seed,
    }
    return state_hash(json.loads(canonical_json(payload)))


def save_record(record: RunRecord, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "observations.jsonl", "w") as fh:
        for obs in record.observations:
            fh.write(canonical_json(observation_to_dict(obs)) + "\n")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "config": config_to_dict(record.config),
        "n_initial": record.n_initial,
        "unsafe_seed": record.unsafe_seed,
        "trajectory": record.trajectory,
        "final_metrics": record.final_metrics(),
        "state_hash": record_hash(record),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return out


def load_record(run_dir) -> RunRecord:
    run_dir = Path(run_dir)
    try:
        summary = json.loads((run_dir / "summary.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read run summary: {exc}") from exc
    observations = []
    with open(run_dir / "observations.jsonl") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                observations.append(observation_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(
                    f"bad observation at line {line_no}: {exc!r}"
                ) from exc
    return RunRecord(
        config=config_from_dict(summary["config"]),
        observations=observations,
        trajectory=summary["trajectory"],
        n_initial=summary["n_initial"],
        unsafe_seed=summary["unsafe_seed"],
    )


def replay_record(run_dir) -> dict:
    """Recompute the metrics trajectory from the observation log.

    Returns a report with the recomputed final metrics, the stored summary,
    the state hash, and any mismatches detected.
    """
    run_dir = Path(run_dir)
    record = load_record(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text())
    h = record.config.safety.threshold

    mismatches = []
    recomputed = []
    for point in record.trajectory:
        upto = [o for o in record.observations if o.iteration <= point["iteration"]]
        y_g_run = np.array([o.y_g for o in upto[record.n_initial:]])
        safe_ratio, cum = violation_metrics(y_g_run, h)
        y_f = np.array([o.y_f for o in upto])
        g_all = np.array([o.y_g for o in upto])
        safe = g_all > h
        best = float(np.max(y_f[safe])) if np.any(safe) else float("nan")
        recomputed.append(
            {
                "iteration": point["iteration"],
                "best_feasible": best,
                "safe_ratio": safe_ratio,
                "cumulative_violation": cum,
            }
        )
        for key in ("best_feasible", "safe_ratio", "cumulative_violation"):
            stored = point[key]
            new = recomputed[-1][key]
            same = (
                (isinstance(stored, float) or isinstance(stored, int))
                and np.isnan(stored)
                and np.isnan(new)
            ) or stored == new
            if not same:
                mismatches.append(
                    {"iteration": point["iteration"], "key": key,
                     "stored": stored, "recomputed": new}
                )

    final = record.final_metrics()
    stored_final = summary["final_metrics"]
    for key, value in final.items():
        stored = stored_final.get(key)
        same = (
            isinstance(stored, float) and np.isnan(stored) and np.isnan(value)
        ) or stored == value
        if not same:
            mismatches.append({"key": f"final.{key}", "stored": stored,
                               "recomputed": value})

    return {
        "state_hash": record_hash(record),
        "stored_hash": summary.get("state_hash"),
        "final_metrics": final,
        "trajectory": recomputed,
        "mismatches": mismatches,
        "ok": not mismatches and record_hash(record) == summary.get("state_hash"),
    }
