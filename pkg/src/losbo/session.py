"""Ask-tell optimization sessions with event-sourced persistence.

Each session is an append-only JSON-lines event log; the in-memory state is
always derivable by replay, which is what makes restarts and crash recovery
exact. Proposals are persisted before they are returned, so a crash between
persist and respond is recovered by re-reading the outstanding proposal.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConflictError, InvalidInput, NotFound, ParseError, SeedUnsafe
from .geometry import Box
from .optimizer import RunState, StepProposal, init_run, observe, propose
from .records import (
    canonical_json,
    config_from_dict,
    config_to_dict,
    state_hash,
)
from .trust_region import BatchOutcome

EVENT_KINDS = ("created", "proposed", "observed", "config_note")

DEFAULT_SAFETY_VALUE_MAP = {"safe": 1.0, "unsafe": -1.0}

STATUS_READY = "ready_to_propose"
STATUS_AWAITING = "awaiting_observation"
STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"


@dataclass
class SessionEvent:
    seq: int
    kind: str
    payload: dict
    timestamp: float

    def to_json(self) -> str:
        return canonical_json(
            {
                "seq": self.seq,
                "kind": self.kind,
                "payload": self.payload,
                "timestamp": self.timestamp,
            }
        )


def read_events(path) -> tuple[list[SessionEvent], dict | None]:
    """Parse an event log; returns (events, first_error_or_None).

    Parsing stops at the first malformed or out-of-order line; the valid
    prefix is returned either way.
    """
    events: list[SessionEvent] = []
    error = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                ev = SessionEvent(
                    int(raw["seq"]), raw["kind"], raw["payload"],
                    float(raw.get("timestamp", 0.0)),
                )
                if ev.kind not in EVENT_KINDS:
                    raise ValueError(f"unknown event kind {ev.kind!r}")
                expected = events[-1].seq + 1 if events else 1
                if ev.seq != expected:
                    raise ValueError(
                        f"sequence number {ev.seq} where {expected} expected"
                    )
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                error = {
                    "line": line_no,
                    "last_valid_seq": events[-1].seq if events else 0,
                    "reason": repr(exc),
                }
                break
            events.append(ev)
    return events, error


def _proposal_to_payload(p: StepProposal) -> dict:
    return {
        "iteration": p.iteration,
        "points": p.points.tolist(),
        "latent_points": p.latent_points.tolist(),
        "safety_bounds": p.safety_bounds.tolist(),
        "safe_set_size": p.safe_set_size,
        "fallback": p.fallback,
        "region": {
            "lower": p.region.lower.tolist(),
            "upper": p.region.upper.tolist(),
        },
    }


def _proposal_from_payload(d: dict) -> StepProposal:
    return StepProposal(
        points=np.array(d["points"], dtype=float),
        latent_points=np.array(d["latent_points"], dtype=float),
        safety_bounds=np.array(d["safety_bounds"], dtype=float),
        safe_set_size=int(d["safe_set_size"]),
        region=Box(
            np.array(d["region"]["lower"], dtype=float),
            np.array(d["region"]["upper"], dtype=float),
        ),
        fallback=bool(d["fallback"]),
        iteration=int(d["iteration"]),
    )


def resolve_safety_value(item: dict, value_map: dict[str, float]) -> float:
    """Numeric y_g wins; otherwise a configured binary rating is mapped."""
    if item.get("y_g") is not None:
        return float(item["y_g"])
    rating = item.get("rating")
    if rating is None or rating not in value_map:
        raise InvalidInput("observation needs a numeric y_g or a known rating")
    return float(value_map[rating])


@dataclass
class Session:
    id: str
    config_doc: dict
    state: RunState
    log_path: Path
    seq: int = 0
    status: str = STATUS_READY
    outstanding: StepProposal | None = None
    note_count: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)

    @property
    def value_map(self) -> dict[str, float]:
        return self.config_doc.get("safety_value_map", DEFAULT_SAFETY_VALUE_MAP)

    def _completed(self) -> bool:
        return len(self.state.observations) >= self.state.config.budget

    def apply(self, event: SessionEvent) -> None:
        """Advance in-memory state by one (already validated) event."""
        if event.kind == "proposed":
            self.outstanding = _proposal_from_payload(event.payload)
            self.status = STATUS_AWAITING
        elif event.kind == "observed":
            results = event.payload["results"]
            y_f = np.array([float(r["y_f"]) for r in results])
            y_g = np.array(
                [resolve_safety_value(r, self.value_map) for r in results]
            )
            observe(self.state, self.outstanding, BatchOutcome(y_f, y_g))
            self.outstanding = None
            self.status = STATUS_COMPLETED if self._completed() else STATUS_READY
        elif event.kind == "config_note":
            self.note_count += 1
        self.seq = event.seq

    def snapshot(self, history_limit: int | None = None) -> dict:
        trust = self.state.trust
        history = [
            {
                "x": np.asarray(o.x).tolist(),
                "y_f": o.y_f,
                "y_g": o.y_g,
                "iteration": o.iteration,
            }
            for o in self.state.observations
        ]
        if history_limit is not None:
            history = history[-history_limit:]
        last_safe = (
            self.state.trajectory[-1]["safe_set_size"]
            if self.state.trajectory
            else None
        )
        return {
            "session_id": self.id,
            "status": self.status,
            "seq": self.seq,
            "budget": self.state.config.budget,
            "n_initial": self.state.n_initial,
            "n_observations": len(self.state.observations),
            "unsafe_seed": self.state.unsafe_seed,
            "incumbent": {
                "x": np.asarray(trust.incumbent_point).tolist(),
                "value": trust.incumbent_value,
            },
            "trust_region_length": trust.length,
            "last_safe_set_size": last_safe,
            "metrics": self.state.trajectory,
            "outstanding_proposal": (
                _proposal_to_payload(self.outstanding)
                if self.outstanding is not None
                else None
            ),
            "history": history,
        }

    def state_hash(self) -> str:
        return state_hash(self.snapshot())


def _session_from_events(events: list[SessionEvent], log_path: Path) -> Session:
    if not events or events[0].kind != "created":
        raise ParseError("event log does not start with a created event")
    created = events[0].payload
    config_doc = created["config"]
    cfg = config_from_dict(config_doc)
    init = created["initial_observations"]
    X = np.array([r["x"] for r in init], dtype=float)
    y_f = np.array([float(r["y_f"]) for r in init])
    value_map = config_doc.get("safety_value_map", DEFAULT_SAFETY_VALUE_MAP)
    y_g = np.array([resolve_safety_value(r, value_map) for r in init])
    state = init_run(cfg, X, y_f, y_g)
    session = Session(
        id=created["session_id"],
        config_doc=config_doc,
        state=state,
        log_path=log_path,
        seq=events[0].seq,
    )
    for ev in events[1:]:
        session.apply(ev)
    return session


class SessionStore:
    """Directory of per-session event logs with serialized writes."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        for log_path in sorted(self.data_dir.glob("*.events.jsonl")):
            events, _ = read_events(log_path)
            if events:
                session = _session_from_events(events, log_path)
                self._sessions[session.id] = session

    def _append(self, session: Session, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(session.seq + 1, kind, payload, time.time())
        with open(session.log_path, "a") as fh:
            fh.write(event.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return event

    def create_session(
        self, config_doc: dict, initial_observations: list[dict],
        session_id: str | None = None,
    ) -> Session:
        if not initial_observations:
            raise InvalidInput("initial observations must be non-empty")
        cfg = config_from_dict(config_doc)
        X = np.array([r["x"] for r in initial_observations], dtype=float)
        y_f = np.array([float(r["y_f"]) for r in initial_observations])
        value_map = config_doc.get(
            "safety_value_map", DEFAULT_SAFETY_VALUE_MAP
        )
        y_g = np.array(
            [resolve_safety_value(r, value_map) for r in initial_observations]
        )
        state = init_run(cfg, X, y_f, y_g)  # raises SeedUnsafe before persisting

        sid = session_id or uuid.uuid4().hex[:12]
        with self._store_lock:
            if sid in self._sessions:
                raise ConflictError(f"session {sid!r} already exists")
            log_path = self.data_dir / f"{sid}.events.jsonl"
            session = Session(
                id=sid, config_doc=config_doc, state=state, log_path=log_path
            )
            normalized = [
                {
                    "x": np.asarray(r["x"], dtype=float).tolist(),
                    "y_f": float(r["y_f"]),
                    "y_g": r.get("y_g"),
                    "rating": r.get("rating"),
                }
                for r in initial_observations
            ]
            event = self._append(
                session,
                "created",
                {
                    "session_id": sid,
                    "config": config_doc,
                    "initial_observations": normalized,
                },
            )
            session.seq = event.seq
            if session._completed():
                session.status = STATUS_COMPLETED
            self._sessions[sid] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise NotFound(f"unknown session {session_id!r}") from None

    def list_sessions(self) -> list[dict]:
        return [
            {
                "session_id": s.id,
                "status": s.status,
                "n_observations": len(s.state.observations),
                "budget": s.state.config.budget,
            }
            for s in self._sessions.values()
        ]

    def get_proposal(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.status == STATUS_AWAITING:
                return _proposal_to_payload(session.outstanding)
            if session.status != STATUS_READY:
                raise ConflictError(
                    f"cannot propose while session is {session.status}"
                )
            proposal = propose(session.state)
            event = self._append(
                session, "proposed", _proposal_to_payload(proposal)
            )
            session.apply(event)
            return _proposal_to_payload(proposal)

    def post_observation(self, session_id: str, results: list[dict]) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.status != STATUS_AWAITING:
                raise ConflictError(
                    f"no outstanding proposal (session is {session.status})"
                )
            if len(results) != session.outstanding.points.shape[0]:
                raise InvalidInput(
                    "results do not align with the outstanding proposal"
                )
            for r in results:
                resolve_safety_value(r, session.value_map)  # validate early
            event = self._append(session, "observed", {"results": results})
            session.apply(event)
            return session.snapshot()

    def add_note(self, session_id: str, text: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            event = self._append(session, "config_note", {"text": text})
            session.apply(event)
            return {"seq": event.seq}

    def get_state(self, session_id: str, history_limit: int | None = None) -> dict:
        session = self.get(session_id)
        with session.lock:
            return session.snapshot(history_limit)

    def state_hash(self, session_id: str) -> str:
        session = self.get(session_id)
        with session.lock:
            return session.state_hash()


def replay_session_log(path) -> dict:
    """Rebuild a session from its log alone; report hash and last valid seq."""
    events, error = read_events(path)
    if not events:
        raise ParseError(
            "no valid events in log"
            + (f" (first error at line {error['line']})" if error else "")
        )
    session = _session_from_events(events, Path(path))
    return {
        "session_id": session.id,
        "last_seq": session.seq,
        "status": session.status,
        "state_hash": session.state_hash(),
        "metrics": session.state.trajectory,
        "error": error,
    }
