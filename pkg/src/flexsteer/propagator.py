"""Blockwise semigroup and mild-solution propagation.

Every block of the generator is 2x2, so ``exp(tA)`` is assembled from
closed-form block exponentials and no global matrix is ever formed. A mode
block ``A_n = [[0, w], [-w, -2k]]`` satisfies ``(A_n + kI)^2 = (k^2 - w^2) I``,
which gives

    exp(t A_n) = exp(-k t) * (c(t) I + s(t) (A_n + k I))

with ``c, s = cos(mu t), sin(mu t)/mu`` (underdamped, ``mu^2 = w^2 - k^2``),
``1, t`` (critical) or ``cosh(nu t), sinh(nu t)/nu`` (overdamped,
``nu^2 = k^2 - w^2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ModelError, NumericalError, TruncationError
from .modal_model import ModalSystem, StateVector
from .quadrature import composite_gauss_legendre, panels_for_rate


@dataclass(frozen=True)
class PropagationConfig:
    """Truncation and quadrature settings for the forced response.

    ``steps`` is the minimum number of Gauss-Legendre panels on the horizon;
    blocks whose frequency needs more panels get them automatically.
    """

    M: int
    steps: int = 256
    nodes: int = 8

    def __post_init__(self):
        if self.M < 1:
            raise ModelError(f"M must be >= 1, got {self.M}")
        if self.steps < 1:
            raise ModelError(f"steps must be >= 1, got {self.steps}")
        if self.nodes < 2:
            raise ModelError(f"nodes must be >= 2, got {self.nodes}")


def _mode_terms(omega, kappa, t):
    """``exp(-k t) * c(t)`` and ``exp(-k t) * s(t)``, broadcast over inputs."""
    omega = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    kappa = float(kappa)
    omega, t = np.broadcast_arrays(omega, t)
    c = np.empty(t.shape)
    s = np.empty(t.shape)

    under = omega > kappa
    over = omega < kappa
    crit = ~(under | over)

    if under.any():
        mu = np.sqrt((omega[under] - kappa) * (omega[under] + kappa))
        tt = t[under]
        decay = np.exp(-kappa * tt)
        c[under] = decay * np.cos(mu * tt)
        s[under] = decay * np.sin(mu * tt) / mu
    if crit.any():
        tt = t[crit]
        decay = np.exp(-kappa * tt)
        c[crit] = decay
        s[crit] = decay * tt
    if over.any():
        nu = np.sqrt((kappa - omega[over]) * (kappa + omega[over]))
        tt = t[over]
        slow = np.exp((nu - kappa) * tt)
        fast = np.exp(-(nu + kappa) * tt)
        c[over] = 0.5 * (slow + fast)
        # sinh form near nu*t = 0 avoids cancellation in slow - fast
        small = np.abs(nu * tt) < 1.0
        s_over = np.where(
            small,
            np.exp(-kappa * tt) * np.sinh(nu * np.where(small, tt, 0.0)) / nu,
            (slow - fast) / (2.0 * nu),
        )
        s[over] = s_over
    return c, s


def _mode_entries(omega, kappa, t):
    c, s = _mode_terms(omega, kappa, t)
    omega = np.broadcast_to(np.asarray(omega, dtype=float), c.shape)
    return c + kappa * s, omega * s, -omega * s, c - kappa * s


def block_expm(t, omega=None, kappa=0.0):
    """Exponential of one generator block at time(s) ``t``.

    ``omega=None`` selects the rigid block ``[[0, 1], [0, 0]]``; otherwise the
    mode block with frequency ``omega > 0`` and damping ``kappa >= 0``.
    Returns an array of shape ``np.shape(t) + (2, 2)``.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise NumericalError("block_expm: non-finite time")
    out = np.empty(t.shape + (2, 2))
    if omega is None:
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = t
        out[..., 1, 0] = 0.0
        out[..., 1, 1] = 1.0
        return out
    if not omega > 0:
        raise ModelError(f"mode frequency must be positive, got {omega}")
    if not kappa >= 0:
        raise ModelError(f"damping must be >= 0, got {kappa}")
    e00, e01, e10, e11 = _mode_entries(omega, kappa, t)
    out[..., 0, 0] = e00
    out[..., 0, 1] = e01
    out[..., 1, 0] = e10
    out[..., 1, 1] = e11
    return out


def mode_generator(omega, kappa):
    return np.array([[0.0, omega], [-omega, -2.0 * kappa]])


def apply_blocks(omegas, kappa, t, vec, transpose=False):
    """Apply ``exp(tA)`` (or its transpose) blockwise to ``vec``.

    ``omegas`` are the mode frequencies of blocks ``1..len(omegas)``;
    ``vec`` has length ``2 * (len(omegas) + 1)``. With array ``t`` of shape
    ``(T,)`` the result has shape ``(T, len(vec))``.
    """
    omegas = np.asarray(omegas, dtype=float)
    vec = np.asarray(vec, dtype=float)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty((t.size, vec.size))

    p0, v0 = vec[0], vec[1]
    if transpose:
        out[:, 0] = p0
        out[:, 1] = t * p0 + v0
    else:
        out[:, 0] = p0 + t * v0
        out[:, 1] = v0

    if omegas.size:
        e00, e01, e10, e11 = _mode_entries(omegas[None, :], kappa, t[:, None])
        if transpose:
            e01, e10 = e10, e01
        xi = vec[2::2][None, :]
        eta = vec[3::2][None, :]
        out[:, 2::2] = e00 * xi + e01 * eta
        out[:, 3::2] = e10 * xi + e11 * eta
    return out[0] if scalar else out


def _check_support(system, M, *vectors):
    if M > system.mode_count:
        raise ModelError(f"M={M} exceeds the {system.mode_count} stored modes")
    for x in vectors:
        if x.max_block > M:
            raise TruncationError(
                f"truncation too small: state has support in block {x.max_block} > M={M}"
            )


def transition(system: ModalSystem, t: float, M: int, x: StateVector) -> StateVector:
    """Free evolution ``exp(tA) x`` over blocks ``0..M``."""
    if not math.isfinite(t):
        raise NumericalError("transition: non-finite time")
    _check_support(system, M, x)
    dense = x.to_array(2 * (M + 1))
    return StateVector.from_array(_free_dense(system, M, t, dense))


def _free_dense(system, M, t, dense):
    return apply_blocks(system.omegas[:M], system.kappa, float(t), dense)


def _evaluate_control(u, s):
    try:
        vals = np.asarray(u(s), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != s.shape:
        vals = np.array([float(np.squeeze(u(si))) for si in s])
    if not np.all(np.isfinite(vals)):
        raise NumericalError("control produced non-finite values")
    return vals


def forced_response(system, M, u, t0, t1, steps, nodes):
    """Dense ``int_{t0}^{t1} exp((t1 - s)A) B u(s) ds`` over blocks ``0..M``.

    Each block gets its own composite Gauss-Legendre grid, refined past
    ``steps`` panels when the block oscillates faster than ~2 rad/panel.
    """
    length = t1 - t0
    out = np.zeros(2 * (M + 1))
    if length == 0:
        return out
    kappa = system.kappa
    omegas = np.asarray(system.omegas[:M], dtype=float)
    bs = np.asarray(system.bs[:M], dtype=float)
    rates = np.concatenate([[0.0], omegas + 2.0 * kappa])
    panels = [panels_for_rate(steps, r, length) for r in rates]

    grids = {}
    for P in sorted(set(panels)):
        s, w = composite_gauss_legendre(t0, t1, P, nodes)
        grids[P] = (s, w * _evaluate_control(u, s))

    s, wu = grids[panels[0]]
    out[0] = np.dot(t1 - s, wu)
    out[1] = np.sum(wu)
    by_grid = {}
    for n, P in enumerate(panels[1:], start=1):
        by_grid.setdefault(P, []).append(n)
    for P, blocks in by_grid.items():
        s, wu = grids[P]
        idx = np.asarray(blocks) - 1
        # second column of exp((t1 - s) A_n), scaled by b_n
        _, e01, _, e11 = _mode_entries(omegas[idx][None, :], kappa, (t1 - s)[:, None])
        out[2 * idx + 2] = bs[idx] * (wu @ e01)
        out[2 * idx + 3] = bs[idx] * (wu @ e11)
    return out


def propagate(system: ModalSystem, x0: StateVector, u: Callable, tau: float,
              cfg: PropagationConfig, t0: float = 0.0) -> StateVector:
    """Mild solution at ``tau`` started from ``x0`` at ``t0``.

    ``u`` maps an array of times to an array of control values.
    """
    return StateVector.from_array(propagate_dense(system, x0, u, tau, cfg, t0))


def propagate_dense(system, x0, u, tau, cfg, t0=0.0):
    if not (math.isfinite(tau) and math.isfinite(t0)):
        raise NumericalError("propagate: non-finite horizon")
    if tau < t0:
        raise ModelError(f"horizon {tau} precedes start time {t0}")
    M = cfg.M
    _check_support(system, M, x0)
    free = _free_dense(system, M, tau - t0, x0.to_array(2 * (M + 1)))
    return free + forced_response(system, M, u, t0, tau, cfg.steps, cfg.nodes)


def sample_trajectory(system, x0, u, times, cfg):
    """States at increasing ``times`` (``times[0]`` is the start), shape ``(T, 2(M+1))``.

    Steps from sample to sample; each interval gets its share of
    ``cfg.steps`` panels.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise ModelError("sample times must be strictly increasing")
    M = cfg.M
    _check_support(system, M, x0)
    span = times[-1] - times[0]
    rows = np.empty((times.size, 2 * (M + 1)))
    rows[0] = x0.to_array(2 * (M + 1))
    for k in range(1, times.size):
        a, b = times[k - 1], times[k]
        steps = max(1, math.ceil(cfg.steps * (b - a) / span))
        rows[k] = _free_dense(system, M, b - a, rows[k - 1]) + forced_response(
            system, M, u, a, b, steps, cfg.nodes
        )
    return rows
