"""Small paired benchmark: local vs. global search on a synthetic task.

The task hides a 2-dim effective subspace inside a 6-dim ambient space; both
methods see the same seeds and the same initial designs, so their metric
differences are attributable to the search strategy alone.
"""

import tempfile
from pathlib import Path

from losbo import Box, OptimizerConfig, SafetyConfig
from losbo.benchmarks import make_task, run_benchmark


def method(search_mode, seed=0):
    return OptimizerConfig(
        domain=Box.cube(-1.0, 1.0, 6),
        budget=30,
        batch_size=5,
        candidate_count=128,
        safety=SafetyConfig(beta_override=2.0),
        fit_restarts=2,
        fit_iterations=12,
        seed=seed,
        search_mode=search_mode,
    )


def main():
    report = run_benchmark(
        methods={"local": method("local"), "global": method("global")},
        task_factory=lambda seed: make_task(6, 2, shift=0.3, seed=seed),
        seeds=[0, 1, 2],
        init_count=8,
    )

    print("mean +- stderr over 3 paired seeds:")
    for row in report.aggregate():
        line = "  ".join(
            f"{m}={row[f'{m}_mean']:+.3f}+-{row[f'{m}_stderr']:.3f}"
            for m in ("objective", "safety", "violation")
        )
        print(f"  {row['method']:<7} {line}")

    with tempfile.TemporaryDirectory() as tmp:
        report.save(tmp)
        files = sorted(p.relative_to(tmp) for p in Path(tmp).rglob("*") if p.is_file())
        print("\nsaved artifacts:")
        for f in files[:6]:
            print(f"  {f}")
        if len(files) > 6:
            print(f"  ... {len(files) - 6} more")


if __name__ == "__main__":
    main()
