"""Minimum-energy steering of the truncated modal system.

For the reduced pair ``(A_N, B_N)`` and weight ``Q`` the control of least
``int u'Qu dt`` moving ``x0`` to ``x1`` in time ``tau`` is

    u(t) = Q^{-1} B_N' exp((tau - t) A_N') nu,
    W nu = x1 - exp(tau A_N) x0,
    W = int_0^tau exp(s A_N) B_N Q^{-1} B_N' exp(s A_N') ds,

and its cost is ``nu' W nu``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import GramianSingularError, ModelError, NumericalError
from .modal_model import ModalSystem, StateVector, project
from .propagator import apply_blocks
from .quadrature import composite_gauss_legendre, panels_for_rate


@dataclass(frozen=True)
class ReducedSystem:
    """Blocks ``0..N`` of the modal system as a dense pair ``(A, B)``."""

    N: int
    kappa: float
    omegas: tuple[float, ...]
    bs: tuple[float, ...]
    A: np.ndarray = field(repr=False, compare=False)
    B: np.ndarray = field(repr=False, compare=False)

    @property
    def d(self):
        return 2 * (self.N + 1)

    @property
    def max_rate(self):
        """Largest modulus of a generator eigenvalue."""
        if not self.omegas:
            return 0.0
        return max(self.omegas) + 2.0 * self.kappa

    def expm_apply(self, t, vec, transpose=False):
        return apply_blocks(self.omegas, self.kappa, t, vec, transpose=transpose)


def reduced_matrices(system: ModalSystem, N: int) -> ReducedSystem:
    if N < 0 or N > system.mode_count:
        raise ModelError(f"truncation order {N} outside 0..{system.mode_count}")
    A = system.generator(N)
    B = system.input_vector(N)[:, None]
    return ReducedSystem(N, system.kappa, system.omegas[:N], system.bs[:N], A, B)


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric positive definite control weight ``Q`` (``m x m``)."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ModelError(f"weight must be square, got shape {Q.shape}")
        if not np.array_equal(Q, Q.T):
            raise ModelError("weight matrix must be exactly symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise ModelError("weight matrix must be positive definite") from None
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def scalar(cls, q=1.0):
        return cls(np.array([[float(q)]]))

    @property
    def m(self):
        return self.Q.shape[0]

    @property
    def inverse(self):
        return linalg.inv(self.Q)

    def to_list(self):
        return self.Q.tolist()


@dataclass(frozen=True)
class Gramian:
    W: np.ndarray
    condition_estimate: float
    min_eigenvalue: float
    tau: float
    panels: int
    nodes: int


def _gramian_grid(reduced, tau, panels, nodes):
    P = panels_for_rate(panels, 2.0 * reduced.max_rate, tau)
    s, w = composite_gauss_legendre(0.0, tau, P, nodes)
    return s, w, P


def _input_images(reduced, s):
    # exp(s A) B for every input column, shape (len(s), d, m)
    cols = [reduced.expm_apply(s, reduced.B[:, j]) for j in range(reduced.B.shape[1])]
    return np.stack(cols, axis=-1)


def gramian(reduced: ReducedSystem, tau: float, weight: WeightMatrix,
            panels: int = 64, nodes: int = 8) -> Gramian:
    """Controllability Gramian by composite Gauss-Legendre quadrature.

    ``panels`` is raised when needed so each panel spans at most ~2 rad of
    the fastest product frequency ``2 * max_rate``.
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ModelError(f"horizon must be positive and finite, got {tau}")
    if weight.m != reduced.B.shape[1]:
        raise ModelError(f"weight is {weight.m}x{weight.m}, input has {reduced.B.shape[1]} columns")
    s, w, P = _gramian_grid(reduced, tau, panels, nodes)
    V = _input_images(reduced, s)
    Qinv = weight.inverse
    W = np.einsum("k,kim,mn,kjn->ij", w, V, Qinv, V, optimize=True)
    W = 0.5 * (W + W.T)
    if not np.all(np.isfinite(W)):
        raise NumericalError("Gramian quadrature produced non-finite entries")
    eig = np.linalg.eigvalsh(W)
    lo, hi = float(eig[0]), float(eig[-1])
    cond = hi / lo if lo > 0 else math.inf
    return Gramian(W, cond, lo, float(tau), P, int(nodes))


@dataclass(frozen=True)
class ControlLaw:
    """Synthesized open-loop control ``u(t) = Q^{-1} B' exp((tau-t)A') nu``."""

    nu: np.ndarray
    tau: float
    N: int
    weight: WeightMatrix
    reduced: ReducedSystem
    residual: float = 0.0
    condition_estimate: float = math.nan
    fingerprint: str = ""
    approximate: bool = False
    gramian: Gramian | None = field(default=None, repr=False, compare=False)

    def __call__(self, t):
        return eval_control(self, t)

    @property
    def is_zero(self):
        return not np.any(self.nu)


def synthesize(system: ModalSystem, N: int, tau: float, weight: WeightMatrix,
               x0: StateVector, x1: StateVector, panels: int = 64, nodes: int = 8,
               ridge: float = 0.0) -> ControlLaw:
    """Minimum-energy control steering ``P_N x0`` to ``P_N x1`` in time ``tau``.

    ``ridge > 0`` adds ``ridge * max(diag W)`` to the diagonal before the
    solve; the law is then flagged ``approximate`` since the endpoint is no
    longer hit exactly.
    """
    reduced = reduced_matrices(system, N)
    gram = gramian(reduced, tau, weight, panels, nodes)
    d = reduced.d
    start = project(x0, N).to_array(d)
    target = project(x1, N).to_array(d)
    rhs = target - reduced.expm_apply(tau, start)
    common = dict(
        tau=float(tau), N=N, weight=weight, reduced=reduced,
        condition_estimate=gram.condition_estimate,
        fingerprint=system.fingerprint(), gramian=gram,
    )
    if not np.any(rhs):
        return ControlLaw(nu=np.zeros(d), residual=0.0, approximate=ridge > 0, **common)

    W = gram.W
    if ridge < 0:
        raise ModelError(f"ridge must be >= 0, got {ridge}")
    A = W + ridge * np.max(np.diag(W)) * np.eye(d) if ridge > 0 else W
    nu = _spd_solve(A, rhs, gram, system, N, tau)
    residual = float(np.linalg.norm(W @ nu - rhs) / np.linalg.norm(rhs))
    return ControlLaw(nu=nu, residual=residual, approximate=ridge > 0, **common)


def _spd_solve(W, rhs, gram, system, N, tau):
    # Jacobi scaling then Cholesky, plus one step of iterative refinement
    scale = 1.0 / np.sqrt(np.diag(W))
    Ws = W * scale[:, None] * scale[None, :]
    message = (f"Gramian singular at this (N, tau, kappa) = ({N}, {tau}, {system.kappa}); "
               f"condition estimate {gram.condition_estimate:.3e}")
    if gram.min_eigenvalue <= 0 or not np.all(np.isfinite(scale)):
        raise GramianSingularError(message, gram.condition_estimate)
    try:
        factor = linalg.cho_factor(Ws, lower=True, check_finite=True)
    except linalg.LinAlgError:
        raise GramianSingularError(message, gram.condition_estimate) from None
    nu = scale * linalg.cho_solve(factor, scale * rhs)
    nu = nu + scale * linalg.cho_solve(factor, scale * (rhs - W @ nu))
    if not np.all(np.isfinite(nu)):
        raise GramianSingularError(message, gram.condition_estimate)
    return nu


def eval_control(law: ControlLaw, t):
    """Control value(s) at ``t`` in ``[0, tau]``.

    Scalar input models return shape ``np.shape(t)``; general ``m`` appends
    a trailing axis of length ``m``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > law.tau):
        raise ValueError(f"control evaluated outside [0, {law.tau}]")
    flat = np.atleast_1d(t).ravel()
    m = law.weight.m
    if law.is_zero:
        vals = np.zeros((flat.size, m))
    else:
        lam = law.reduced.expm_apply(law.tau - flat, law.nu, transpose=True)
        vals = lam @ law.reduced.B @ law.weight.inverse.T
    if m == 1:
        return vals[:, 0].reshape(t.shape)
    return vals.reshape(t.shape + (m,))


def control_cost(law: ControlLaw) -> float:
    """Closed-form cost ``nu' W nu``."""
    if law.is_zero:
        return 0.0
    W = _gramian_of(law).W
    return float(law.nu @ W @ law.nu)


def _gramian_of(law):
    if law.gramian is not None:
        return law.gramian
    return gramian(law.reduced, law.tau, law.weight)


def _law_grid(law, panels, nodes):
    P = panels_for_rate(panels, 2.0 * law.reduced.max_rate, law.tau)
    return composite_gauss_legendre(0.0, law.tau, P, nodes)


def l2_norm(law: ControlLaw, panels: int = 64, nodes: int = 8) -> float:
    """``(int_0^tau |u(t)|^2 dt)^(1/2)`` by quadrature on the control."""
    if law.is_zero:
        return 0.0
    s, w = _law_grid(law, panels, nodes)
    u = eval_control(law, s).reshape(len(s), -1)
    return math.sqrt(float(np.dot(w, np.sum(u * u, axis=1))))


def integrated_cost(law: ControlLaw, panels: int = 64, nodes: int = 8) -> float:
    """``int_0^tau u'Qu dt`` by quadrature (independent of the closed form)."""
    if law.is_zero:
        return 0.0
    s, w = _law_grid(law, panels, nodes)
    u = eval_control(law, s).reshape(len(s), -1)
    return float(np.dot(w, np.einsum("ki,ij,kj->k", u, law.weight.Q, u)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def law_to_dict(law: ControlLaw) -> dict:
    return {
        "N": law.N,
        "tau": law.tau,
        "nu": [float(v) for v in law.nu],
        "Q": law.weight.to_list(),
        "system_fingerprint": law.fingerprint,
        "solver_residual": law.residual,
        "condition_estimate": law.condition_estimate,
        "approximate": law.approximate,
    }


LAW_FIELDS = {"N", "tau", "nu", "Q", "system_fingerprint", "solver_residual",
              "condition_estimate", "approximate"}


def law_from_dict(data: dict, system: ModalSystem) -> ControlLaw:
    """Rebuild a law against ``system``; the fingerprints must match."""
    unknown = set(data) - LAW_FIELDS
    missing = {"N", "tau", "nu", "Q"} - set(data)
    if unknown or missing:
        raise ModelError(f"bad control-law record: unknown {sorted(unknown)}, missing {sorted(missing)}")
    fp = data.get("system_fingerprint", "")
    if fp and fp != system.fingerprint():
        raise ModelError("control law was synthesized for a different system (fingerprint mismatch)")
    N = int(data["N"])
    reduced = reduced_matrices(system, N)
    nu = np.asarray(data["nu"], dtype=float)
    if nu.shape != (reduced.d,):
        raise ModelError(f"nu has {nu.size} entries, expected {reduced.d}")
    return ControlLaw(
        nu=nu,
        tau=float(data["tau"]),
        N=N,
        weight=WeightMatrix(np.asarray(data["Q"], dtype=float)),
        reduced=reduced,
        residual=float(data.get("solver_residual", 0.0)),
        condition_estimate=float(data.get("condition_estimate", math.nan)),
        fingerprint=system.fingerprint(),
        approximate=bool(data.get("approximate", False)),
    )


def save_law(law: ControlLaw, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    with open(path, "w") as fh:
        json.dump(law_to_dict(law), fh, indent=2, allow_nan=True)
        fh.write("\n")


def load_law(path, system: ModalSystem) -> ControlLaw:
    with open(path) as fh:
        return law_from_dict(json.load(fh), system)
