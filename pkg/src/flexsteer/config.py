"""Experiment configuration files (JSON).

Example::

    {
      "system": {"kappa": 0.01, "mode_count": 64,
                 "preset": {"kind": "euler_bernoulli", "scale": 1.0,
                            "b_rule": {"beta": 1.0, "p": 2.0}}},
      "tau": 5.0, "q": 1.0, "N_range": [2, 10], "M": 64,
      "x0": [], "x1": [[0, 1.0]], "epsilon_target": 0.1
    }

Unknown keys are rejected at every level. See README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .modal_model import FrequencyPreset, ModalSystem, StateVector, build_system


def _reject_unknown(data, allowed, where):
    if not isinstance(data, dict):
        raise ModelError(f"{where}: expected an object, got {type(data).__name__}")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ModelError(f"{where}: unknown fields {sorted(unknown)}")


@dataclass(frozen=True)
class SystemSpec:
    kappa: float
    mode_count: int
    preset: FrequencyPreset
    allow_overdamped: bool = False

    def build(self, allow_overdamped: bool = False) -> ModalSystem:
        return build_system(self.preset, self.mode_count, self.kappa,
                            allow_overdamped or self.allow_overdamped)

    @classmethod
    def from_dict(cls, data):
        _reject_unknown(data, {"kappa", "mode_count", "preset", "omega", "b", "allow_overdamped"},
                        "system")
        if "preset" in data and ("omega" in data or "b" in data):
            raise ModelError("system: give either 'preset' or explicit 'omega'/'b' arrays")
        if "preset" in data:
            preset = FrequencyPreset.from_dict(data["preset"])
        elif "omega" in data:
            if "b" not in data:
                raise ModelError("system: explicit 'omega' needs a matching 'b' array")
            preset = FrequencyPreset(kind="explicit", omega=data["omega"], b=data["b"])
        else:
            raise ModelError("system: missing 'preset' (or explicit 'omega'/'b')")
        if "kappa" not in data:
            raise ModelError("system: missing 'kappa'")
        count = data.get("mode_count", preset.max_count)
        if count is None:
            raise ModelError("system: 'mode_count' is required for generated presets")
        return cls(float(data["kappa"]), int(count), preset, bool(data.get("allow_overdamped", False)))

    def to_dict(self):
        out = {"kappa": self.kappa, "mode_count": self.mode_count, "preset": self.preset.to_dict()}
        if self.allow_overdamped:
            out["allow_overdamped"] = True
        return out


@dataclass(frozen=True)
class RandomEndpoint:
    """Endpoint drawn at run time: i.i.d. normal entries on ``blocks`` blocks."""

    blocks: int
    scale: float = 1.0

    def draw(self, rng) -> StateVector:
        return StateVector.from_array(self.scale * rng.standard_normal(2 * self.blocks))


def _parse_endpoint(value, where):
    if isinstance(value, dict):
        _reject_unknown(value, {"random_blocks", "scale"}, where)
        if "random_blocks" not in value:
            raise ModelError(f"{where}: random endpoint needs 'random_blocks'")
        return RandomEndpoint(int(value["random_blocks"]), float(value.get("scale", 1.0)))
    if not isinstance(value, list):
        raise ModelError(f"{where}: expected a list of [index, value] pairs")
    pairs = []
    for item in value:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ModelError(f"{where}: entries must be [index, value] pairs")
        idx, val = item
        if isinstance(idx, bool) or not isinstance(idx, int) or idx < 0:
            raise ModelError(f"{where}: index must be a nonnegative integer, got {idx!r}")
        pairs.append((idx, float(val)))
    StateVector.from_pairs(pairs)  # duplicate check
    return tuple(pairs)


def _emit_endpoint(value):
    if isinstance(value, RandomEndpoint):
        return {"random_blocks": value.blocks, "scale": value.scale}
    return [[i, v] for i, v in value]


def _endpoint_extent(value):
    if isinstance(value, RandomEndpoint):
        return 2 * value.blocks - 1
    return max((i for i, _ in value), default=-1)


TOP_LEVEL = {"system", "tau", "q", "N", "N_range", "M", "x0", "x1", "epsilon_target",
             "gramian", "propagation", "samples", "ridge", "gap_checkpoints", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    tau: float = 5.0
    q: float = 1.0
    N: int | None = None
    N_range: tuple[int, int] | None = None
    M: int | None = None
    x0: tuple | RandomEndpoint = ()
    x1: tuple | RandomEndpoint = ((0, 1.0),)
    epsilon_target: float = 0.1
    gramian_panels: int = 64
    gramian_nodes: int = 8
    steps: int = 256
    prop_nodes: int = 8
    samples: int = 201
    ridge: float = 0.0
    gap_checkpoints: tuple[int, ...] = (50, 100, 200)
    output: str | None = field(default=None)

    def __post_init__(self):
        if not self.tau > 0:
            raise ModelError(f"tau must be positive, got {self.tau}")
        if not self.q > 0:
            raise ModelError(f"q must be positive, got {self.q}")
        M = self.truncation
        if not 1 <= M <= self.system.mode_count:
            raise ModelError(f"M={M} outside 1..{self.system.mode_count}")
        if self.N is not None and not 0 <= self.N <= M:
            raise ModelError(f"N={self.N} outside 0..M={M}")
        if self.N_range is not None:
            lo, hi = self.N_range
            if not 0 <= lo <= hi <= M:
                raise ModelError(f"N_range {list(self.N_range)} must satisfy 0 <= lo <= hi <= M={M}")
        for name in ("x0", "x1"):
            if _endpoint_extent(getattr(self, name)) > 2 * M + 1:
                raise ModelError(f"{name} references an index beyond 2M+1={2 * M + 1}")
        if self.samples < 2:
            raise ModelError("samples must be >= 2")
        if self.ridge < 0:
            raise ModelError("ridge must be >= 0")

    @property
    def truncation(self):
        return self.system.mode_count if self.M is None else self.M

    @property
    def design_order(self):
        """Order used by single-law commands."""
        if self.N is not None:
            return self.N
        if self.N_range is not None:
            return self.N_range[1]
        return min(self.truncation, 4)

    @property
    def sweep_orders(self):
        if self.N_range is not None:
            return list(range(self.N_range[0], self.N_range[1] + 1))
        return [self.design_order]

    def endpoints(self, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for value in (self.x0, self.x1):
            out.append(value.draw(rng) if isinstance(value, RandomEndpoint)
                       else StateVector.from_pairs(value))
        return tuple(out)

    @classmethod
    def from_dict(cls, data):
        _reject_unknown(data, TOP_LEVEL, "config")
        if "system" not in data:
            raise ModelError("config: missing 'system'")
        kw = {"system": SystemSpec.from_dict(data["system"])}
        for key in ("tau", "q", "epsilon_target", "ridge"):
            if key in data:
                kw[key] = float(data[key])
        for key in ("N", "M", "samples"):
            if key in data and data[key] is not None:
                kw[key] = int(data[key])
        if data.get("N_range") is not None:
            rng = data["N_range"]
            if not (isinstance(rng, list) and len(rng) == 2):
                raise ModelError("config: N_range must be [lo, hi] (inclusive)")
            kw["N_range"] = (int(rng[0]), int(rng[1]))
        for key in ("x0", "x1"):
            if key in data:
                kw[key] = _parse_endpoint(data[key], key)
        if "gramian" in data:
            _reject_unknown(data["gramian"], {"panels", "nodes"}, "gramian")
            kw["gramian_panels"] = int(data["gramian"].get("panels", 64))
            kw["gramian_nodes"] = int(data["gramian"].get("nodes", 8))
        if "propagation" in data:
            _reject_unknown(data["propagation"], {"steps", "nodes"}, "propagation")
            kw["steps"] = int(data["propagation"].get("steps", 256))
            kw["prop_nodes"] = int(data["propagation"].get("nodes", 8))
        if "gap_checkpoints" in data:
            kw["gap_checkpoints"] = tuple(int(k) for k in data["gap_checkpoints"])
        if data.get("output") is not None:
            kw["output"] = str(data["output"])
        return cls(**kw)

    def to_dict(self):
        out = {
            "system": self.system.to_dict(),
            "tau": self.tau,
            "q": self.q,
            "N": self.N,
            "N_range": list(self.N_range) if self.N_range is not None else None,
            "M": self.M,
            "x0": _emit_endpoint(self.x0),
            "x1": _emit_endpoint(self.x1),
            "epsilon_target": self.epsilon_target,
            "gramian": {"panels": self.gramian_panels, "nodes": self.gramian_nodes},
            "propagation": {"steps": self.steps, "nodes": self.prop_nodes},
            "samples": self.samples,
            "ridge": self.ridge,
            "gap_checkpoints": list(self.gap_checkpoints),
            "output": self.output,
        }
        return {k: v for k, v in out.items() if v is not None}


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"
