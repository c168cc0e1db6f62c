"""Damped flexible-structure model in modal coordinates.

The state lives in l2 and is grouped into 2-component blocks. Block 0 is
the rigid body (a double integrator), block ``n >= 1`` is the ``n``-th
vibration mode with generator ``[[0, w_n], [-w_n, -2*kappa]]``. The single
input enters as ``B = (0, 1, 0, b_1, 0, b_2, ...)``.

State index ``2n`` is the position-like coordinate of block ``n`` and
``2n + 1`` its velocity-like coordinate.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.special import zeta

from .errors import DegenerateSpectrumError, ModelError


# ---------------------------------------------------------------------------
# State vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateVector:
    """Finitely supported element of l2, stored as ``{index: value}``.

    Zero entries are dropped, so two vectors compare equal iff they are
    equal as sequences.
    """

    entries: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.entries).items():
            k = int(k)
            if k < 0:
                raise ModelError(f"state index must be >= 0, got {k}")
            v = float(v)
            if not math.isfinite(v):
                raise ModelError(f"non-finite state entry at index {k}")
            if v != 0.0:
                clean[k] = v
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(clean.items()))))

    @classmethod
    def zeros(cls):
        return cls({})

    @classmethod
    def from_array(cls, values):
        return cls({i: v for i, v in enumerate(np.asarray(values, dtype=float))})

    @classmethod
    def from_pairs(cls, pairs):
        out = {}
        for idx, val in pairs:
            idx = int(idx)
            if idx in out:
                raise ModelError(f"duplicate state index {idx}")
            out[idx] = float(val)
        return cls(out)

    def to_pairs(self):
        return [[k, v] for k, v in self.entries.items()]

    @property
    def max_index(self):
        """Largest index in the support, or -1 for the zero vector."""
        return max(self.entries, default=-1)

    @property
    def max_block(self):
        return self.max_index // 2 if self.entries else -1

    def to_array(self, dim):
        if self.max_index >= dim:
            raise ModelError(f"vector support reaches index {self.max_index}, dimension is {dim}")
        out = np.zeros(dim)
        for k, v in self.entries.items():
            out[k] = v
        return out

    def norm(self):
        return math.sqrt(math.fsum(v * v for v in self.entries.values()))

    def __getitem__(self, index):
        return self.entries.get(index, 0.0)

    def __add__(self, other):
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return StateVector(out)

    def __sub__(self, other):
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) - v
        return StateVector(out)

    def __neg__(self):
        return StateVector({k: -v for k, v in self.entries.items()})

    def __hash__(self):
        return hash(tuple(self.entries.items()))

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)


def project(x: StateVector, N: int) -> StateVector:
    """Keep blocks ``0..N`` (indices ``<= 2N+1``), zero the rest."""
    cut = 2 * N + 1
    return StateVector({k: v for k, v in x.entries.items() if k <= cut})


def complement(x: StateVector, N: int) -> StateVector:
    """``x - project(x, N)``: the part of ``x`` in blocks beyond ``N``."""
    cut = 2 * N + 1
    return StateVector({k: v for k, v in x.entries.items() if k > cut})


# ---------------------------------------------------------------------------
# Frequency presets
# ---------------------------------------------------------------------------

PRESET_KINDS = ("euler_bernoulli", "harmonic", "explicit")


@dataclass(frozen=True)
class FrequencyPreset:
    """Rule generating ``(w_n, b_n)`` for ``n = 1, 2, ...``.

    ``euler_bernoulli`` gives ``w_n = scale * n**2``, ``harmonic`` gives
    ``w_n = scale * n``, ``explicit`` reads ``omega``. Coefficients follow
    the power law ``b_n = beta * n**(-p)`` unless ``b`` is given.
    """

    kind: str = "euler_bernoulli"
    scale: float = 1.0
    beta: float = 1.0
    p: float = 2.0
    omega: tuple[float, ...] | None = None
    b: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in PRESET_KINDS:
            raise ModelError(f"unknown preset kind {self.kind!r}; expected one of {PRESET_KINDS}")
        if self.omega is not None:
            object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if self.b is not None:
            object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if self.kind == "explicit":
            if self.omega is None:
                raise ModelError("explicit preset needs an 'omega' list")
        elif not (self.scale > 0 and math.isfinite(self.scale)):
            raise ModelError(f"preset scale must be positive, got {self.scale}")
        if self.b is None:
            if self.beta == 0 or not math.isfinite(self.beta):
                raise ModelError("power-law coefficient beta must be nonzero and finite")
            if not (self.p >= 0 and math.isfinite(self.p)):
                raise ModelError(f"power-law exponent p must be >= 0, got {self.p}")

    @property
    def max_count(self):
        """Number of modes the preset can produce (None for unbounded)."""
        counts = [len(s) for s in (self.omega, self.b) if s is not None]
        return min(counts) if counts else None

    def omegas(self, count):
        self._check_count(count)
        n = np.arange(1, count + 1, dtype=float)
        if self.kind == "euler_bernoulli":
            return self.scale * n**2
        if self.kind == "harmonic":
            return self.scale * n
        return np.asarray(self.omega[:count], dtype=float)

    def coefficients(self, count):
        self._check_count(count)
        if self.b is not None:
            return np.asarray(self.b[:count], dtype=float)
        n = np.arange(1, count + 1, dtype=float)
        return self.beta * n ** (-self.p)

    def tail_b_squared(self, count):
        """Sum of ``b_n**2`` over ``n > count`` (inf if it diverges)."""
        limit = self.max_count
        if limit is not None:
            return math.fsum(v * v for v in self.coefficients(limit)[count:])
        if 2 * self.p <= 1:
            return math.inf
        return float(self.beta**2 * zeta(2 * self.p, count + 1))

    def tail_min_omega(self, count):
        """Lower bound on ``w_n`` for ``n > count`` (inf if there are none)."""
        limit = self.max_count
        if limit is not None:
            rest = self.omegas(limit)[count:]
            return float(min(rest)) if len(rest) else math.inf
        return float(self.omegas(count + 1)[-1])

    def _check_count(self, count):
        if count < 0:
            raise ModelError(f"mode count must be >= 0, got {count}")
        limit = self.max_count
        if limit is not None and count > limit:
            raise ModelError(f"preset lists only {limit} modes, {count} requested")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "explicit":
            out["omega"] = list(self.omega)
        else:
            out["scale"] = self.scale
        if self.b is not None:
            out["b"] = list(self.b)
        else:
            out["b_rule"] = {"beta": self.beta, "p": self.p}
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        allowed = {"kind", "scale", "b_rule", "omega", "b"}
        unknown = set(data) - allowed
        if unknown:
            raise ModelError(f"unknown preset fields: {sorted(unknown)}")
        kind = data.get("kind", "explicit" if "omega" in data else "euler_bernoulli")
        rule = data.get("b_rule", {})
        unknown = set(rule) - {"beta", "p"}
        if unknown:
            raise ModelError(f"unknown b_rule fields: {sorted(unknown)}")
        if "b" in data and "b_rule" in data:
            raise ModelError("give either 'b' or 'b_rule', not both")
        return cls(
            kind=kind,
            scale=float(data.get("scale", 1.0)),
            beta=float(rule.get("beta", 1.0)),
            p=float(rule.get("p", 2.0)),
            omega=data.get("omega"),
            b=data.get("b"),
        )


# ---------------------------------------------------------------------------
# Modal system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModalSystem:
    """Rigid block plus ``len(omegas)`` damped modes.

    ``tail_b_sq`` and ``tail_min_omega`` describe the modes *not* stored
    (``n > mode_count``) when a generating rule is known; they only enter
    the remainder bound used by the verifier.
    """

    kappa: float
    omegas: tuple[float, ...]
    bs: tuple[float, ...]
    allow_overdamped: bool = False
    tail_b_sq: float = 0.0
    tail_min_omega: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "bs", tuple(float(b) for b in self.bs))
        kappa = float(self.kappa)
        object.__setattr__(self, "kappa", kappa)
        if not (kappa >= 0 and math.isfinite(kappa)):
            raise ModelError(f"damping kappa must be >= 0 and finite, got {self.kappa}")
        if len(self.omegas) != len(self.bs):
            raise ModelError(f"{len(self.omegas)} frequencies but {len(self.bs)} coefficients")
        for n, (w, b) in enumerate(zip(self.omegas, self.bs), start=1):
            if not (w > 0 and math.isfinite(w)):
                raise ModelError(f"omega_{n} must be positive and finite, got {w}")
            if b == 0 or not math.isfinite(b):
                raise ModelError(f"b_{n} must be nonzero and finite, got {b}")
        if len(set(self.omegas)) != len(self.omegas):
            raise DegenerateSpectrumError("degenerate spectrum: repeated modal frequency")
        if self.omegas and not self.allow_overdamped and kappa >= min(self.omegas):
            raise ModelError(
                f"not underdamped: kappa={kappa} >= min omega={min(self.omegas)} "
                "(pass allow_overdamped to override)"
            )

    has_rigid_block = True

    @property
    def mode_count(self):
        return len(self.omegas)

    @property
    def dim(self):
        """Dimension of the stored truncation (rigid block included)."""
        return 2 * (self.mode_count + 1)

    def input_vector(self, N=None):
        """First ``2(N+1)`` entries of ``B`` (all stored modes by default)."""
        N = self.mode_count if N is None else N
        self._check_order(N)
        out = np.zeros(2 * (N + 1))
        out[1] = 1.0
        out[3::2] = self.bs[:N]
        return out

    def generator(self, N=None):
        """Dense block-diagonal generator restricted to blocks ``0..N``."""
        N = self.mode_count if N is None else N
        self._check_order(N)
        A = np.zeros((2 * (N + 1), 2 * (N + 1)))
        A[0, 1] = 1.0
        for n, w in enumerate(self.omegas[:N], start=1):
            i = 2 * n
            A[i, i + 1] = w
            A[i + 1, i] = -w
            A[i + 1, i + 1] = -2.0 * self.kappa
        return A

    def truncated(self, N):
        """Same system keeping only the first ``N`` modes."""
        self._check_order(N)
        tail = math.fsum(b * b for b in self.bs[N:]) + self.tail_b_sq
        tail_min = min(self.omegas[N:] + (self.tail_min_omega,))
        return ModalSystem(
            self.kappa, self.omegas[:N], self.bs[:N], self.allow_overdamped, tail, tail_min
        )

    def fingerprint(self):
        """Stable short hash of the stored model, used to pair control files with systems."""
        payload = json.dumps(
            {"kappa": self.kappa, "omega": list(self.omegas), "b": list(self.bs)},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def _check_order(self, N):
        if N < 0 or N > self.mode_count:
            raise ModelError(f"truncation order {N} outside 0..{self.mode_count}")


def build_system(preset: FrequencyPreset, mode_count: int, kappa: float,
                 allow_overdamped: bool = False) -> ModalSystem:
    if mode_count < 1:
        raise ModelError(f"mode_count must be >= 1, got {mode_count}")
    return ModalSystem(
        kappa=kappa,
        omegas=tuple(preset.omegas(mode_count)),
        bs=tuple(preset.coefficients(mode_count)),
        allow_overdamped=allow_overdamped,
        tail_b_sq=preset.tail_b_squared(mode_count),
        tail_min_omega=preset.tail_min_omega(mode_count),
    )


def tail_input_norm(system: ModalSystem, N: int) -> float:
    """l2 norm of the part of ``B`` beyond block ``N`` (stored modes only)."""
    system._check_order(N)
    return math.sqrt(math.fsum(b * b for b in system.bs[N:]))


# ---------------------------------------------------------------------------
# Frequency-gap series
# ---------------------------------------------------------------------------


class GapSum(NamedTuple):
    total: float
    increment: float


def gap_increments(omegas, K, chunk=512):
    # increments[k-1] = S_k - S_{k-1} = 2 * sum_{i<k} 1/(w_k - w_i)^2
    w = np.asarray(omegas[:K], dtype=float)
    if len(w) < K:
        raise ModelError(f"need {K} frequencies, got {len(w)}")
    if len(np.unique(w)) != K:
        raise DegenerateSpectrumError(
            "degenerate spectrum: repeated frequency among the first "
            f"{K}, gap series term undefined"
        )
    inc = np.zeros(K)
    for start in range(0, K, chunk):
        rows = w[start:start + chunk]
        d = rows[:, None] - w[None, :]
        mask = np.arange(K)[None, :] < np.arange(start, start + len(rows))[:, None]
        terms = np.where(mask, 1.0 / np.where(mask, d, 1.0) ** 2, 0.0)
        inc[start:start + len(rows)] = 2.0 * terms.sum(axis=1)
    return inc


def gap_series_partial_sum(omegas: Sequence[float], K: int) -> GapSum:
    """Partial sum of ``1/(w_i - w_j)^2`` over ordered pairs ``i != j <= K``.

    Returns the sum together with its last increment ``S_K - S_{K-1}``.
    """
    if K < 1:
        raise ModelError(f"K must be >= 1, got {K}")
    inc = gap_increments(omegas, K)
    return GapSum(float(np.cumsum(inc)[-1]), float(inc[-1]))


def gap_series_checkpoints(omegas: Sequence[float], checkpoints: Sequence[int]) -> list[GapSum]:
    """Partial sums at several ``K`` from one pass over the increments."""
    ks = [int(k) for k in checkpoints]
    if not ks or min(ks) < 1:
        raise ModelError("checkpoints must be positive integers")
    inc = gap_increments(omegas, max(ks))
    partial = np.cumsum(inc)
    return [GapSum(float(partial[k - 1]), float(inc[k - 1])) for k in ks]
