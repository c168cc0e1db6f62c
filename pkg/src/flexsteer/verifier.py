"""Numerical evidence that truncated minimum-energy controls steer the full system.

A control designed on blocks ``0..N`` is applied to the order-``M``
truncation (``M >= N``). The blocks in between show how far the unmodelled
modes are pushed; everything beyond ``M`` is covered by an analytic bound.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ModelError, TruncationError
from .modal_model import ModalSystem, StateVector, complement, tail_input_norm
from .propagator import PropagationConfig, propagate_dense
from .synthesis import WeightMatrix, control_cost, l2_norm, synthesize

CSV_COLUMNS = (
    "N", "d_N", "projected_residual", "full_residual", "tail_bound", "qnb_norm",
    "u_l2", "product", "cost_J", "cond_estimate", "pass",
)


def fmt(value):
    """Float formatting used in every CSV output (17 significant digits)."""
    return "%.17g" % value


@dataclass(frozen=True)
class SteeringReport:
    N: int
    M: int
    projected_residual: float
    full_residual: float
    tail_bound: float
    qnb_norm: float
    u_l2: float
    product: float
    cost_J: float
    condition_estimate: float
    epsilon_target: float
    approximate: bool = False

    @property
    def d_N(self):
        return 2 * (self.N + 1)

    @property
    def passed(self):
        return self.full_residual + self.tail_bound < self.epsilon_target

    def csv_row(self):
        return [
            str(self.N), str(self.d_N), fmt(self.projected_residual), fmt(self.full_residual),
            fmt(self.tail_bound), fmt(self.qnb_norm), fmt(self.u_l2), fmt(self.product),
            fmt(self.cost_J), fmt(self.condition_estimate), "true" if self.passed else "false",
        ]


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[SteeringReport, ...]

    def __post_init__(self):
        Ns = [r.N for r in self.rows]
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("report rows must have strictly increasing N")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_row())
        return buf.getvalue()


def block_gain(omega, kappa):
    """Bound on ``sup_s ||exp(s A_n)||`` used for the remainder.

    ``omega/mu`` for underdamped blocks; 1 otherwise, which is valid for all
    blocks since ``A_n + A_n'`` is negative semidefinite.
    """
    if math.isinf(omega):
        return 1.0
    if kappa < omega:
        return omega / math.sqrt((omega - kappa) * (omega + kappa))
    return 1.0


def tail_bound(system: ModalSystem, M: int, u_l2: float, tau: float) -> float:
    """Bound on the l2 norm of the forced response in blocks beyond ``M``.

    Each such block receives at most ``|b_n| * gain_n * sqrt(tau) * ||u||``.
    Modes not stored in ``system`` enter through its ``tail_b_sq`` summary.
    """
    k = system.kappa
    stored = math.fsum(
        (b * block_gain(w, k)) ** 2 for w, b in zip(system.omegas[M:], system.bs[M:])
    )
    rest = 0.0
    if system.tail_b_sq > 0:
        rest = system.tail_b_sq * block_gain(system.tail_min_omega, k) ** 2
    total = stored + rest
    if u_l2 == 0.0:
        return 0.0
    return math.sqrt(total) * u_l2 * math.sqrt(tau)


def steer_and_verify(system: ModalSystem, N: int, M: int, tau: float, weight: WeightMatrix,
                     x0: StateVector, x1: StateVector, cfg: PropagationConfig | None = None,
                     epsilon_target: float = 1e-1, panels: int = 64, nodes: int = 8,
                     ridge: float = 0.0) -> SteeringReport:
    """Synthesize at order ``N``, simulate the order-``M`` truncation, measure.

    ``panels``/``nodes`` set the Gramian quadrature, ``cfg`` the propagation
    quadrature (its ``M`` is overridden by the argument).
    """
    if not 0 <= N <= M <= system.mode_count:
        raise ModelError(f"need 0 <= N <= M <= {system.mode_count}, got N={N}, M={M}")
    if max(x0.max_block, x1.max_block) > M:
        raise TruncationError(f"truncation too small: endpoints reach beyond block M={M}")
    cfg = PropagationConfig(M) if cfg is None else replace(cfg, M=M)
    law = synthesize(system, N, tau, weight, x0, x1, panels=panels, nodes=nodes, ridge=ridge)
    xt = propagate_dense(system, x0, law, tau, cfg)
    err = xt - x1.to_array(2 * (M + 1))
    d = 2 * (N + 1)
    projected = float(np.linalg.norm(err[:d]))
    full = float(np.linalg.norm(err))
    u_l2 = l2_norm(law, panels, nodes)
    qnb = tail_input_norm(system, N)
    return SteeringReport(
        N=N, M=M,
        projected_residual=projected,
        full_residual=full,
        tail_bound=tail_bound(system, M, u_l2, tau),
        qnb_norm=qnb,
        u_l2=u_l2,
        product=qnb * u_l2,
        cost_J=control_cost(law),
        condition_estimate=law.condition_estimate,
        epsilon_target=epsilon_target,
        approximate=law.approximate,
    )


def unmodelled_residual(system, N, M, tau, weight, x0, x1, cfg=None, panels=64, nodes=8):
    """``||Q_N (x(tau) - x1)||`` computed through the sparse state API."""
    cfg = PropagationConfig(M) if cfg is None else replace(cfg, M=M)
    law = synthesize(system, N, tau, weight, x0, x1, panels=panels, nodes=nodes)
    xt = StateVector.from_array(propagate_dense(system, x0, law, tau, cfg))
    return complement(xt - x1, N).norm()


def convergence_sweep(system: ModalSystem, N_range, M: int, tau: float, weight: WeightMatrix,
                      x0: StateVector, x1: StateVector, cfg: PropagationConfig | None = None,
                      epsilon_target: float = 1e-1, panels: int = 64, nodes: int = 8,
                      ridge: float = 0.0, jobs: int = 1) -> ConvergenceReport:
    """One :func:`steer_and_verify` row per ``N``, ordered by ``N``."""
    Ns = sorted(set(int(n) for n in N_range))
    if not Ns:
        raise ModelError("empty N range")
    if Ns[-1] > M:
        raise ModelError(f"max N={Ns[-1]} exceeds M={M}")

    def row(N):
        return steer_and_verify(system, N, M, tau, weight, x0, x1, cfg,
                                epsilon_target, panels, nodes, ridge)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row, Ns))
    else:
        rows = [row(N) for N in Ns]
    return ConvergenceReport(tuple(rows))
