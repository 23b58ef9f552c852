"""Safe optimization on a 1-d toy problem with a known constraint.

Maximize f(x) = -(x - 0.3)^2 subject to g(x) = 0.5 - |x| >= 0: the safe
interval is [-0.5, 0.5] and the constrained optimum sits at x = 0.3. The run
starts from a few safe samples near the origin and must expand outward
without stepping past the boundary.
"""

import numpy as np

from losbo import Box, OptimizerConfig, SafetyConfig
from losbo.optimizer import run


def oracle(X):
    x = X[:, 0]
    return -((x - 0.3) ** 2), 0.5 - np.abs(x)


def main():
    cfg = OptimizerConfig(
        domain=Box.cube(-2.0, 2.0, 1),
        budget=40,
        batch_size=3,
        candidate_count=256,
        safety=SafetyConfig(beta_override=2.0),
        fit_restarts=2,
        fit_iterations=15,
        seed=7,
    )
    init = np.array([[-0.1], [0.05], [0.15]])
    y_f, y_g = oracle(init)
    record = run(oracle, cfg, init, y_f, y_g)

    print("iteration trajectory:")
    for row in record.trajectory:
        print(
            f"  iter {row['iteration']:2d}  best_feasible={row['best_feasible']:+.4f}"
            f"  safe_ratio={row['safe_ratio']:.2f}"
            f"  trust_length={row['trust_region_length']:.3f}"
        )

    final = record.final_metrics()
    best = max(
        (o for o in record.observations if o.y_g > 0), key=lambda o: o.y_f
    )
    print(f"\nbest safe point: x={best.x[0]:+.4f} (optimum is +0.3000)")
    print(
        f"objective={final['objective']:+.4f}  safety={final['safety']:.2f}"
        f"  violation={final['violation']:.3f}"
    )


if __name__ == "__main__":
    main()
