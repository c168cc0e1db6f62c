"""Command-line front end: ``flexsteer <subcommand> --config cfg.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ModelError, NumericalError
from .modal_model import gap_increments, tail_input_norm
from .propagator import PropagationConfig, sample_trajectory
from .synthesis import (WeightMatrix, control_cost, l2_norm, load_law, save_law,
                        synthesize)
from .verifier import convergence_sweep, fmt

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# increments of a convergent series decay faster than 1/K
DIVERGENCE_RATIO = 0.5


def _out_path(args, config, default):
    if args.out:
        return Path(args.out)
    if config.output:
        return Path(config.output) / default
    return Path(default)


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _setup(args):
    config = load_config(args.config)
    system = config.system.build(allow_overdamped=args.allow_overdamped)
    return config, system


def gap_table(omegas, checkpoints):
    """Rows ``(K, S_K, S_K - S_{K-1})`` and a divergence flag."""
    ks = sorted(set(int(k) for k in checkpoints))
    inc = gap_increments(omegas, ks[-1])
    partial = np.cumsum(inc)
    rows = [(k, float(partial[k - 1]), float(inc[k - 1])) for k in ks]
    K = ks[-1]
    divergent = False
    if K >= 4 and inc[K // 2 - 1] > 0:
        divergent = inc[K - 1] / inc[K // 2 - 1] > DIVERGENCE_RATIO
    return rows, divergent


def cmd_gap_check(args):
    config = load_config(args.config)
    checkpoints = ([int(k) for k in args.checkpoints.split(",")] if args.checkpoints
                   else list(config.gap_checkpoints))
    if min(checkpoints) < 1:
        raise ModelError("checkpoints must be positive")
    omegas = config.system.preset.omegas(max(checkpoints))
    rows, divergent = gap_table(omegas, checkpoints)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["K", "partial_sum", "increment"])
    for k, total, inc in rows:
        writer.writerow([k, fmt(total), fmt(inc)])
    sys.stdout.write(buf.getvalue())
    if args.out:
        _write(Path(args.out), buf.getvalue())
    if divergent:
        print("warning: gap-series increments are not vanishing; "
              "the frequency-gap series appears divergent", file=sys.stderr)
    return EXIT_OK


def cmd_synthesize(args):
    config, system = _setup(args)
    x0, x1 = config.endpoints(args.seed)
    law = synthesize(system, config.design_order, config.tau, WeightMatrix.scalar(config.q),
                     x0, x1, config.gramian_panels, config.gramian_nodes, config.ridge)
    path = _out_path(args, config, "law.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_law(law, path)
    print(f"N = {law.N}  tau = {fmt(law.tau)}")
    print(f"cost J = {fmt(control_cost(law))}")
    print(f"||u||_L2 = {fmt(l2_norm(law, config.gramian_panels, config.gramian_nodes))}")
    print(f"condition estimate = {fmt(law.condition_estimate)}")
    print(f"solver residual = {fmt(law.residual)}")
    if law.approximate:
        print("note: ridge regularization active, approximate interpolation")
    print(f"wrote {path}")
    return EXIT_OK


def trajectory_csv(system, law, x0, cfg, samples):
    times = np.linspace(0.0, law.tau, samples)
    rows = sample_trajectory(system, x0, law, times, cfg)
    header = ["t"]
    for n in range(cfg.M + 1):
        header += [f"xi_{n}", f"eta_{n}"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for t, row in zip(times, rows):
        writer.writerow([fmt(t)] + [fmt(v) for v in row])
    return buf.getvalue(), rows


def cmd_simulate(args):
    config, system = _setup(args)
    if not args.law:
        raise ModelError("simulate needs --law <path>")
    law = load_law(args.law, system)
    x0, _ = config.endpoints(args.seed)
    cfg = PropagationConfig(config.truncation, config.steps, config.prop_nodes)
    text, rows = trajectory_csv(system, law, x0, cfg, config.samples)
    path = _out_path(args, config, "trajectory.csv")
    _write(path, text)
    print(f"final state (blocks 0..{cfg.M}) norm = {fmt(float(np.linalg.norm(rows[-1])))}")
    print(f"wrote {path}")
    return EXIT_OK


def _plot_data(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["N", "projected_residual", "full_residual", "residual_plus_tail", "product"])
    for r in report.rows:
        writer.writerow([r.N, fmt(r.projected_residual), fmt(r.full_residual),
                         fmt(r.full_residual + r.tail_bound), fmt(r.product)])
    return buf.getvalue()


def _write_svg(report, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    N = report.column("N")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(N, report.column("full_residual"), "o-", label="full residual")
    ax.semilogy(N, report.column("product"), "s--", label="||Q_N B|| ||u||")
    ax.set_xlabel("N")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_converge(args):
    config, system = _setup(args)
    x0, x1 = config.endpoints(args.seed)
    M = config.truncation
    report = convergence_sweep(
        system, config.sweep_orders, M, config.tau, WeightMatrix.scalar(config.q), x0, x1,
        PropagationConfig(M, config.steps, config.prop_nodes),
        epsilon_target=config.epsilon_target, panels=config.gramian_panels,
        nodes=config.gramian_nodes, ridge=config.ridge, jobs=args.jobs,
    )
    path = _out_path(args, config, "converge.csv")
    _write(path, report.to_csv())
    plot_path = path.with_suffix(".plot.csv")
    _write(plot_path, _plot_data(report))
    sys.stdout.write(report.to_csv())
    if args.svg:
        _write_svg(report, args.svg)
    print(f"wrote {path} and {plot_path}", file=sys.stderr)
    return EXIT_OK


def cmd_info(args):
    config, system = _setup(args)
    k = system.kappa
    print(f"modes stored: {system.mode_count} (state dimension {system.dim})")
    print(f"kappa = {fmt(k)}  underdamped: {all(k < w for w in system.omegas)}")
    head = min(system.mode_count, 5)
    print("omega[1..%d] = %s" % (head, ", ".join(fmt(w) for w in system.omegas[:head])))
    print("b[1..%d]     = %s" % (head, ", ".join(fmt(b) for b in system.bs[:head])))
    N = config.design_order
    print(f"||Q_N B|| at N={N}: {fmt(tail_input_norm(system, N))}")
    print(f"unstored tail sum b_n^2: {fmt(system.tail_b_sq)}")
    print(f"fingerprint: {system.fingerprint()}")
    summary = {"mode_count": system.mode_count, "kappa": k, "fingerprint": system.fingerprint()}
    if args.out:
        _write(Path(args.out), json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "gap-check": cmd_gap_check,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "info": cmd_info,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--out", help="output path (overrides the config's output dir)")
    common.add_argument("--jobs", type=int, default=1, help="concurrent sweep rows")
    common.add_argument("--seed", type=int, default=0, help="seed for random endpoints")
    common.add_argument("--allow-overdamped", action="store_true",
                        help="accept kappa >= min omega")

    parser = argparse.ArgumentParser(prog="flexsteer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    gap = sub.add_parser("gap-check", parents=[common], help="frequency-gap series partial sums")
    gap.add_argument("--checkpoints", help="comma-separated K values, e.g. 50,100,200")
    sub.add_parser("synthesize", parents=[common], help="write a minimum-energy control law")
    sim = sub.add_parser("simulate", parents=[common], help="sample a trajectory under a law")
    sim.add_argument("--law", help="control law file from 'synthesize'")
    conv = sub.add_parser("converge", parents=[common], help="convergence sweep over N")
    conv.add_argument("--svg", help="also write a residual-vs-N chart")
    sub.add_parser("info", parents=[common], help="summarize the configured system")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
