"""Command-line entry point.

Subcommands: `bench` (synthetic benchmark runs), `serve` (ask-tell session
service), `embed-diag` (distance-preservation diagnostics), `replay`
(recompute metrics and state hash from logs), `plot` (metric curves).

Exit codes: 0 success, 1 usage error, 2 runtime failure.

Config files are JSON; any key can be overridden through environment
variables of the form LOSBO_CFG_<PATH> where nested keys are joined by
double underscores (values are parsed as JSON when possible), e.g.
LOSBO_CFG_INIT_COUNT=60 or LOSBO_CFG_TASK__AMBIENT_DIM=30.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .benchmarks import make_task, run_benchmark
from .embedding import fit_pca, identity_map, isometry_diagnostics, load_map
from .errors import LosboError, ParseError
from .gp import GpDataset, KernelSpec
from .records import config_from_dict, replay_record
from .session import SessionStore, replay_session_log

ENV_PREFIX = "LOSBO_CFG_"


def _apply_env_overrides(doc: dict) -> dict:
    for name, raw in os.environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return doc


def _load_config(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed config {path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"config {path} must hold a JSON object")
    return _apply_env_overrides(doc)


def _resolve_seeds(doc) -> list[int]:
    if isinstance(doc, list):
        return [int(s) for s in doc]
    if isinstance(doc, dict):
        start = int(doc.get("start", 0))
        return list(range(start, start + int(doc["count"])))
    raise ParseError("config key 'seeds' must be a list or {count, start}")


@click.group()
@click.version_option(__version__)
def cli():
    """Safe Bayesian optimization toolkit."""


@cli.command("bench")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the seed list with a single seed.")
def cmd_bench(config_path, out_dir, seed):
    """Run the synthetic benchmark described by a config file."""
    doc = _load_config(config_path)
    for key in ("task", "methods", "seeds", "init_count"):
        if key not in doc:
            raise ParseError(f"config missing required key {key!r}")
    task_doc = dict(doc["task"])
    kernel_doc = task_doc.pop("kernel", None)
    kernel = KernelSpec(**kernel_doc) if kernel_doc else None
    seeds = [seed] if seed is not None else _resolve_seeds(doc["seeds"])
    init_count = int(doc["init_count"])

    def task_factory(s):
        return make_task(
            ambient_dim=int(task_doc["ambient_dim"]),
            effective_dim=int(task_doc["effective_dim"]),
            shift=float(task_doc.get("shift", -0.75)),
            seed=s,
            mode=task_doc.get("mode", "projection"),
            kernel=kernel,
        )

    probe = task_factory(0)
    methods = {}
    for name, method_doc in doc["methods"].items():
        method_doc = dict(method_doc)
        method_doc.setdefault(
            "domain",
            {
                "lower": probe.domain.lower.tolist(),
                "upper": probe.domain.upper.tolist(),
            },
        )
        methods[name] = config_from_dict(method_doc)

    report = run_benchmark(methods, task_factory, seeds, init_count)
    out = report.save(out_dir)
    resolved = dict(doc)
    resolved["seeds"] = seeds
    resolved["toolkit_version"] = __version__
    (out / "resolved_config.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n"
    )
    for row in report.aggregate():
        click.echo(
            f"{row['method']}: objective {row['objective_mean']:.4f}"
            f"±{row['objective_stderr']:.4f}  safety {row['safety_mean']:.4f}"
            f"  violation {row['violation_mean']:.4f}"
        )
    if report.failures:
        click.echo(f"{len(report.failures)} run(s) failed; see failures.json")
        raise LosboError("benchmark finished with failures")


@cli.command("serve")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--data-dir", default=None, type=click.Path(),
              help="Session log directory (or env LOSBO_DATA_DIR).")
@click.option("--bind", default="127.0.0.1:8765", help="host:port to listen on.")
@click.option("--static-dir", default=None, type=click.Path(),
              help="Optional operator-console asset bundle to serve at /.")
def cmd_serve(config_path, data_dir, bind, static_dir):
    """Serve the ask-tell session API until interrupted."""
    import uvicorn

    from .http_api import create_app

    doc = _load_config(config_path) if config_path else _apply_env_overrides({})
    data_dir = data_dir or doc.get("data_dir") or os.environ.get("LOSBO_DATA_DIR")
    if not data_dir:
        raise click.UsageError("--data-dir (or LOSBO_DATA_DIR) is required")
    host, _, port = bind.partition(":")
    store = SessionStore(data_dir)
    app = create_app(store, static_dir=static_dir or doc.get("static_dir"))
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765))
    except OSError as exc:  # e.g. port already in use
        raise LosboError(f"cannot bind {bind}: {exc}") from exc


@cli.command("embed-diag")
@click.option("--data", "data_path", required=True, type=click.Path(),
              help="CSV of points, one row per point.")
@click.option("--map", "map_path", type=click.Path(), default=None)
@click.option("--pca-dim", type=int, default=None)
@click.option("--lengthscale", type=float, default=1.0)
@click.option("--output-scale", type=float, default=1.0)
@click.option("--kernel-family", default="matern52")
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_embed_diag(data_path, map_path, pca_dim, lengthscale, output_scale,
                   kernel_family, out_path):
    """Distance-preservation diagnostics for a linear map or a PCA fit.

    Probe GP targets are synthesized deterministically as the Euclidean norm
    of each centered point, so the GP-gap numbers are comparable across runs.
    """
    try:
        points = np.loadtxt(data_path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read data file {data_path}: {exc}") from exc
    if map_path is not None:
        emb = load_map(map_path)
    elif pca_dim is not None:
        emb = fit_pca(points, pca_dim)
    else:
        emb = identity_map(points.shape[1])
    kernel = KernelSpec(kernel_family, lengthscale, output_scale)
    targets = np.linalg.norm(points - points.mean(axis=0), axis=1)
    probe = GpDataset(points, targets, 1e-6)
    report = isometry_diagnostics(emb, points, kernel, probe)
    payload = {
        "distance_correlation": report.distance_correlation,
        "mean_gp_mean_gap": report.mean_gp_mean_gap,
        "mean_gp_var_gap": report.mean_gp_var_gap,
        "sample_count": report.sample_count,
        "map_kind": emb.kind,
        "latent_dim": emb.latent_dim,
    }
    text = json.dumps(payload, indent=2)
    click.echo(text)
    if out_path:
        Path(out_path).write_text(text + "\n")


@cli.command("replay")
@click.argument("log_path", type=click.Path(exists=True))
def cmd_replay(log_path):
    """Recompute metrics from a run directory or session event log."""
    path = Path(log_path)
    if path.is_dir():
        result = replay_record(path)
        click.echo(f"state hash: {result['state_hash']}")
        for key, value in result["final_metrics"].items():
            click.echo(f"{key}: {value}")
        if result["mismatches"]:
            for mm in result["mismatches"]:
                click.echo(f"MISMATCH {mm}")
            raise LosboError("stored metrics disagree with the replay")
        click.echo("replay ok")
    else:
        result = replay_session_log(path)
        click.echo(f"session {result['session_id']}: seq {result['last_seq']}"
                   f" status {result['status']}")
        click.echo(f"state hash: {result['state_hash']}")
        if result["error"]:
            err = result["error"]
            click.echo(
                f"log corrupted after sequence {err['last_valid_seq']} "
                f"(line {err['line']}): {err['reason']}"
            )
            raise LosboError("event log corrupted")


@cli.command("plot")
@click.option("--report-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def cmd_plot(report_dir, out_dir):
    """Render Objective/Safety/Violation curves from saved benchmark runs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    runs_dir = Path(report_dir) / "runs"
    if not runs_dir.is_dir():
        raise ParseError(f"no runs/ directory under {report_dir}")
    series: dict[str, dict[str, list]] = {}
    for run_dir in sorted(runs_dir.iterdir()):
        summary_path = run_dir / "summary.json"
        if not summary_path.exists():
            continue
        name = run_dir.name.rsplit("_seed", 1)[0]
        summary = json.loads(summary_path.read_text())
        per_method = series.setdefault(
            name,
            {"best_feasible": [], "safe_ratio": [], "cumulative_violation": []},
        )
        for key in per_method:
            per_method[key].append(
                [pt[key] for pt in summary["trajectory"]]
            )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    titles = {
        "best_feasible": "Objective",
        "safe_ratio": "Safety",
        "cumulative_violation": "Violation",
    }
    for key, title in titles.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, per_method in sorted(series.items()):
            arr = np.array(per_method[key], dtype=float)
            mean = np.nanmean(arr, axis=0)
            sem = np.nanstd(arr, axis=0, ddof=1) / np.sqrt(arr.shape[0]) \
                if arr.shape[0] > 1 else np.zeros(arr.shape[1])
            xs = np.arange(1, mean.shape[0] + 1)
            ax.plot(xs, mean, label=name)
            ax.fill_between(xs, mean - sem, mean + sem, alpha=0.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"{key}.png", dpi=120)
        plt.close(fig)
    click.echo(f"wrote {len(titles)} figures to {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 1
    except LosboError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
