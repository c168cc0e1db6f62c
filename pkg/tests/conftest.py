import time
from functools import lru_cache

import numpy as np
import pytest

from flexsteer import (FrequencyPreset, PropagationConfig, StateVector, WeightMatrix,
                       build_system, convergence_sweep)

EB_TAU = 5.0
EB_M = 64
EB_RANGE = range(2, 11)
EB_SWEEP_SECONDS = {}
ACCEPTANCE_LINES = []


def euler_bernoulli(mode_count, kappa):
    return build_system(FrequencyPreset("euler_bernoulli", 1.0, beta=1.0, p=2.0), mode_count, kappa)


@lru_cache(maxsize=None)
def eb_sweep(kappa):
    """The reference sweep: w_n = n^2, b_n = n^-2, tau = 5, x1 = unit xi_0, M = 64."""
    start = time.perf_counter()
    system = euler_bernoulli(EB_M, kappa)
    report = convergence_sweep(system, EB_RANGE, EB_M, EB_TAU, WeightMatrix.scalar(1.0),
                               StateVector(), StateVector({0: 1.0}), PropagationConfig(EB_M))
    EB_SWEEP_SECONDS[kappa] = time.perf_counter() - start
    return report


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_instance(rng, n_modes, kappa_max=0.05, spread=1.0):
    """Euler-Bernoulli-like frequencies with jitter and random coefficients."""
    base = np.arange(1, n_modes + 1, dtype=float) ** 2
    omegas = base * (1.0 + 0.1 * spread * rng.uniform(-1, 1, n_modes))
    omegas = np.sort(omegas)
    signs = rng.choice([-1.0, 1.0], n_modes)
    bs = signs * rng.uniform(0.5, 1.5, n_modes) / np.arange(1, n_modes + 1) ** 2
    kappa = rng.uniform(0.0, kappa_max)
    return omegas, bs, kappa


def random_state(rng, blocks, scale=1.0):
    return StateVector.from_array(scale * rng.standard_normal(2 * (blocks + 1)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: l.split("|")[0]):
            terminalreporter.write_line(line)
