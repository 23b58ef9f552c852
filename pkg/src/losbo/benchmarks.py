"""Reproducible synthetic benchmark tasks and runners.

Objective and safety oracles are two independent GP sample paths over a
low-dimensional effective subspace, realized lazily by exact sequential
conditioning so that any query sequence is jointly distributed as the prior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidInput, NumericalFailure
from .geometry import Box
from .gp import KernelSpec, kernel_matrix
from .optimizer import OptimizerConfig, RunRecord, run
from .records import config_to_dict, save_record

EFFECTIVE_DIM_MODES = ("projection", "coordinate_subset")


class LazyGpSampler:
    """Exact lazily-conditioned sample path of a GP prior.

    Every new query is drawn from the posterior given all previously returned
    (point, value) pairs and cached; re-queries return the cached value. The
    Cholesky factor of the cached Gram matrix grows incrementally.
    """

    def __init__(self, kernel: KernelSpec, rng: np.random.Generator):
        self.kernel = kernel
        self.rng = rng
        self._points: list[np.ndarray] = []
        self._values: list[float] = []
        self._chol = np.zeros((0, 0))
        self._weights = np.zeros(0)
        self._jitter = 1e-10 * kernel.output_scale

    @property
    def n_cached(self) -> int:
        return len(self._points)

    def _extend(self, z: np.ndarray, value: float) -> None:
        n = self.n_cached
        k_self = self.kernel.output_scale + self._jitter
        if n == 0:
            self._chol = np.array([[np.sqrt(k_self)]])
        else:
            Z = np.array(self._points)
            k_new = kernel_matrix(self.kernel, Z, z[None, :])[:, 0]
            b = solve_triangular(self._chol, k_new, lower=True)
            d2 = k_self - b @ b
            if d2 <= 0:
                raise NumericalFailure("lazy conditioning broke down")
            L = np.zeros((n + 1, n + 1))
            L[:n, :n] = self._chol
            L[n, :n] = b
            L[n, n] = np.sqrt(d2)
            self._chol = L
        self._points.append(z.copy())
        self._values.append(float(value))
        y = np.array(self._values)
        w = solve_triangular(self._chol, y, lower=True)
        self._weights = solve_triangular(self._chol.T, w, lower=False)

    def __call__(self, z) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        for i, cached in enumerate(self._points):
            if np.array_equal(cached, z):
                return self._values[i]
        if self.n_cached == 0:
            mean, var = 0.0, self.kernel.output_scale
        else:
            Z = np.array(self._points)
            k_new = kernel_matrix(self.kernel, Z, z[None, :])[:, 0]
            b = solve_triangular(self._chol, k_new, lower=True)
            mean = float(k_new @ self._weights)
            var = max(self.kernel.output_scale - float(b @ b), 0.0)
        value = mean + np.sqrt(var) * self.rng.standard_normal()
        self._extend(z, value)
        return value


@dataclass
class SyntheticTask:
    """GP-sampled objective/safety oracle with low effective dimension.

    The safety observation is shifted so that safe means raw >= shift:
    y_g = raw_g(z) - shift (shift defaults to -0.75).
    """

    ambient_dim: int
    effective_dim: int
    shift: float
    seed: int
    mode: str = "projection"
    kernel: KernelSpec = field(
        default_factory=lambda: KernelSpec("matern52", 0.05, 1.0)
    )
    domain: Box = None

    def __post_init__(self):
        if self.effective_dim > self.ambient_dim:
            raise InvalidInput("effective dimension exceeds ambient dimension")
        if self.mode not in EFFECTIVE_DIM_MODES:
            raise InvalidInput(f"unknown effective-dimension mode {self.mode!r}")
        if self.domain is None:
            self.domain = Box.cube(-1.0, 1.0, self.ambient_dim)
        root = np.random.SeedSequence(entropy=self.seed, spawn_key=(101,))
        s_proj, s_f, s_g, s_init = root.spawn(4)
        rng = np.random.default_rng(s_proj)
        if self.mode == "coordinate_subset":
            idx = rng.choice(self.ambient_dim, self.effective_dim, replace=False)
            P = np.zeros((self.effective_dim, self.ambient_dim))
            P[np.arange(self.effective_dim), np.sort(idx)] = 1.0
        else:
            P = rng.standard_normal((self.effective_dim, self.ambient_dim))
            P /= np.linalg.norm(P, axis=1, keepdims=True)
        self.projection = P
        self._f = LazyGpSampler(self.kernel, np.random.default_rng(s_f))
        self._g = LazyGpSampler(self.kernel, np.random.default_rng(s_g))
        self._init_rng = np.random.default_rng(s_init)

    def latent(self, x) -> np.ndarray:
        return np.atleast_2d(np.asarray(x, dtype=float)) @ self.projection.T

    def oracle(self, X) -> tuple[np.ndarray, np.ndarray]:
        Z = self.latent(X)
        y_f = np.array([self._f(z) for z in Z])
        y_g = np.array([self._g(z) - self.shift for z in Z])
        return y_f, y_g

    def initial_data(self, count: int):
        """Uniform initial design, evaluated through the task oracle."""
        X = self._init_rng.uniform(
            self.domain.lower, self.domain.upper,
            size=(count, self.ambient_dim),
        )
        y_f, y_g = self.oracle(X)
        return X, y_f, y_g


def make_task(
    ambient_dim: int,
    effective_dim: int,
    shift: float = -0.75,
    seed: int = 0,
    mode: str = "projection",
    kernel: KernelSpec | None = None,
) -> SyntheticTask:
    kwargs = {} if kernel is None else {"kernel": kernel}
    return SyntheticTask(ambient_dim, effective_dim, shift, seed, mode, **kwargs)


@dataclass
class BenchmarkReport:
    """Per-method, per-seed trajectories plus aggregate statistics."""

    methods: list[str]
    seeds: list[int]
    records: dict[str, dict[int, RunRecord]]
    failures: list[dict] = field(default_factory=list)

    def metric_matrix(self, metric: str) -> dict[str, np.ndarray]:
        return {
            name: np.array(
                [
                    per_seed[s].final_metrics()[metric]
                    for s in self.seeds
                    if s in per_seed
                ]
            )
            for name, per_seed in self.records.items()
        }

    def aggregate(self) -> list[dict]:
        rows = []
        for name in self.methods:
            if name not in self.records:
                continue
            row = {"method": name, "seeds": len(self.records[name])}
            for metric in ("objective", "safety", "violation"):
                vals = self.metric_matrix(metric)[name]
                row[f"{metric}_mean"] = float(np.mean(vals))
                row[f"{metric}_stderr"] = float(
                    np.std(vals, ddof=1) / np.sqrt(len(vals))
                ) if len(vals) > 1 else 0.0
            rows.append(row)
        return rows

    def save(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = self.aggregate()
        header = list(rows[0].keys()) if rows else ["method"]
        with open(out / "report.csv", "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(str(row[k]) for k in header) + "\n")
        for name, per_seed in self.records.items():
            for seed, record in per_seed.items():
                save_record(record, out / "runs" / f"{name}_seed{seed}")
        if self.failures:
            (out / "failures.json").write_text(
                json.dumps(self.failures, indent=2) + "\n"
            )
        return out


def run_benchmark(
    methods: dict[str, OptimizerConfig],
    task_factory,
    seeds,
    init_count: int,
) -> BenchmarkReport:
    """Run every method on every seed with paired initial data.

    `task_factory(seed)` must build a fresh, identically-seeded task clone for
    each (method, seed) pair; because the first `init_count` queries are
    identical across clones, all methods of one seed consume byte-identical
    initial observations.
    """
    seeds = list(seeds)
    records: dict[str, dict[int, RunRecord]] = {name: {} for name in methods}
    failures: list[dict] = []
    for seed in seeds:
        for name, template in methods.items():
            task = task_factory(seed)
            if init_count > template.budget:
                raise InvalidInput("init_count must not exceed the budget")
            X0, yf0, yg0 = task.initial_data(init_count)
            cfg = _with_seed(template, seed)
            try:
                records[name][seed] = run(task.oracle, cfg, X0, yf0, yg0)
            except Exception as exc:  # annotate and continue with other cells
                failures.append(
                    {"method": name, "seed": seed, "error": repr(exc)}
                )
    for name in list(records):
        if not records[name]:
            del records[name]
    return BenchmarkReport(
        methods=list(methods), seeds=seeds, records=records, failures=failures
    )


def _with_seed(cfg: OptimizerConfig, seed: int) -> OptimizerConfig:
    from .records import config_from_dict

    d = config_to_dict(cfg)
    d["seed"] = seed
    return config_from_dict(d)
