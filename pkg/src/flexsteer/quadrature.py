"""Composite Gauss-Legendre rules on an interval."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _reference_rule(nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(a, b, panels, nodes):
    """Return points and weights of a composite rule on [a, b].

    The interval is split into ``panels`` equal panels, each carrying an
    ``nodes``-point Gauss-Legendre rule (exact for polynomials of degree
    ``2*nodes - 1`` per panel). Points are returned in increasing order.
    """
    if panels < 1:
        raise ValueError(f"panels must be >= 1, got {panels}")
    if nodes < 1:
        raise ValueError(f"nodes must be >= 1, got {nodes}")
    x, w = _reference_rule(int(nodes))
    edges = np.linspace(a, b, int(panels) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    points = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return points, weights


def panels_for_rate(base_panels, rate, length, phase_per_panel=2.0):
    """Panel count resolving oscillation/decay ``rate`` over ``length``.

    ``base_panels`` is a floor; the count is raised so that each panel spans
    at most ``phase_per_panel`` radians of the fastest mode.
    """
    needed = int(np.ceil(abs(rate) * abs(length) / phase_per_panel))
    return max(int(base_panels), needed, 1)
