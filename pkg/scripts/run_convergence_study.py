"""Residual versus design order for several damping levels.

Writes one convergence CSV per damping value and prints the first/last rows.

    python scripts/run_convergence_study.py --kappas 0 0.01 0.05 --out results/
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from flexsteer import WeightMatrix, convergence_sweep
from flexsteer.config import load_config
from flexsteer.propagator import PropagationConfig

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "euler_bernoulli.json"


def run(config, kappa, jobs, seed):
    spec = replace(config.system, kappa=kappa)
    system = spec.build()
    x0, x1 = config.endpoints(seed)
    M = config.truncation
    cfg = PropagationConfig(M, steps=config.steps, nodes=config.prop_nodes)
    return convergence_sweep(system, config.sweep_orders, M, config.tau,
                             WeightMatrix.scalar(config.q), x0, x1, cfg,
                             epsilon_target=config.epsilon_target,
                             panels=config.gramian_panels, nodes=config.gramian_nodes,
                             ridge=config.ridge, jobs=jobs)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(DEFAULT_CONFIG))
    parser.add_argument("--kappas", type=float, nargs="+", default=[0.0, 0.01, 0.05])
    parser.add_argument("--out", default="results")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kappa in args.kappas:
        start = time.perf_counter()
        report = run(config, kappa, args.jobs, args.seed)
        path = out / f"convergence_kappa{kappa:g}.csv"
        path.write_text(report.to_csv())
        first, last = report.rows[0], report.rows[-1]
        print(f"kappa={kappa:g}  N={first.N}: {first.full_residual:.3e}  "
              f"N={last.N}: {last.full_residual:.3e}  "
              f"product {first.product:.3e} -> {last.product:.3e}  "
              f"({time.perf_counter() - start:.1f}s) -> {path}")


if __name__ == "__main__":
    main()
