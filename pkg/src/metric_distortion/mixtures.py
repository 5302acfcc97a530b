"""Maximal Lotteries mixed with a continuum of threshold rules.

A threshold rule compares margins against ``beta`` only, so its output is
constant between consecutive realized margin values.  Integrating over
``beta`` therefore reduces to a finite sum over a :class:`BetaPartition`, with
each piece weighted by the exact mass of the density on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .election import CandidateDistribution, ElectionInstance, pairwise_margins
from .rules import maximal_lotteries, radius, rcb

__all__ = [
    "RCB",
    "RADIUS",
    "UNIFORM",
    "RHO_RADIUS",
    "RCB_P",
    "RCB_B",
    "RADIUS_B",
    "BetaPartition",
    "beta_partition",
    "integrate_rule_over_beta",
    "radius_mix_p",
    "mix_ml_rcb",
    "mix_ml_radius",
    "distortion_bound_curve",
    "minimize_bound",
]

RCB, RADIUS = "rcb", "radius"
UNIFORM, RHO_RADIUS = "uniform", "rho_radius"

RCB_P = 1 / math.sqrt(2)
RCB_B = math.sqrt(2) - 0.5
RADIUS_B = 0.876353

_RULES = {RCB: rcb, RADIUS: radius}


def _check_B(B) -> float:
    B = float(B)
    if not 0.5 < B < 1:
        raise ValueError(f"B must lie strictly between 1/2 and 1, got {B}")
    return B


@dataclass(frozen=True)
class BetaPartition:
    """Cut points ``1/2 = b_0 < b_1 < ... < b_n = B``; every margin in ``(1/2, B)`` is a cut."""

    breakpoints: tuple[float, ...]

    def intervals(self):
        return list(zip(self.breakpoints, self.breakpoints[1:]))

    def midpoints(self):
        return [(a + b) / 2 for a, b in self.intervals()]


def beta_partition(E: ElectionInstance, B) -> BetaPartition:
    B = _check_B(B)
    cuts = {float(v) for v in pairwise_margins(E).distinct_values()}
    inner = sorted(v for v in cuts if 0.5 < v < B)
    return BetaPartition(tuple([0.5] + inner + [B]))


def _artanh(b: float) -> float:
    return 0.5 * math.log((1 + b) / (1 - b))


def radius_mix_p(B) -> float:
    """``1 / (1 + int_{1/2}^B dbeta / (1 - beta^2))``."""
    B = _check_B(B)
    return 1.0 / (1.0 + _artanh(B) - _artanh(0.5))


def _interval_mass(a: float, b: float, density: str, B: float) -> float:
    if density == UNIFORM:
        return (b - a) / (B - 0.5)
    if density == RHO_RADIUS:
        p = radius_mix_p(B)
        return p / (1 - p) * (_artanh(b) - _artanh(a))
    raise ValueError(f"unknown density {density!r}")


def integrate_rule_over_beta(E: ElectionInstance, kind: str, density: str, B) -> CandidateDistribution:
    """``int rule_beta(E) rho(beta) dbeta`` over ``(1/2, B)``, computed piecewise."""
    if kind not in _RULES:
        raise ValueError(f"unknown rule kind {kind!r}")
    B = _check_B(B)
    rule = _RULES[kind]
    part = beta_partition(E, B)
    parts = [
        (_interval_mass(a, b, density, B), rule(E, mid))
        for (a, b), mid in zip(part.intervals(), part.midpoints())
    ]
    return _normalized_mixture(parts, E.m)


def _normalized_mixture(parts, m: int) -> CandidateDistribution:
    total = np.zeros(m)
    for w, D in parts:
        total += w * D.as_array()
    return CandidateDistribution(tuple(float(v) for v in total / total.sum()))


def mix_ml_rcb(E: ElectionInstance) -> CandidateDistribution:
    """ML with probability ``1/sqrt 2``, else RCB at a uniform ``beta`` in ``(1/2, sqrt 2 - 1/2)``."""
    tail = integrate_rule_over_beta(E, RCB, UNIFORM, RCB_B)
    return _normalized_mixture([(RCB_P, maximal_lotteries(E)), (1 - RCB_P, tail)], E.m)


def mix_ml_radius(E: ElectionInstance, B=RADIUS_B) -> CandidateDistribution:
    """ML with probability ``p(B)``, else RaDiUS at ``beta`` drawn with density ``~ 1/(1 - beta^2)``."""
    p = radius_mix_p(B)
    tail = integrate_rule_over_beta(E, RADIUS, RHO_RADIUS, B)
    return _normalized_mixture([(p, maximal_lotteries(E)), (1 - p, tail)], E.m)


def distortion_bound_curve(B, kind: str) -> float:
    """Guaranteed distortion of the mixture with cutoff ``B``."""
    B = _check_B(B)
    if kind == RCB:
        return 1 + 2 * (1 / (B + 0.5) + 0.5 * (B - 0.5))
    if kind == RADIUS:
        num = math.log(2 / 3) + math.log(1 + B)
        den = 1 - 0.5 * math.log(3) + 0.5 * (math.log(1 + B) - math.log(1 - B))
        return 1 + 2 * (1 - num / den)
    raise ValueError(f"unknown rule kind {kind!r}")


def minimize_bound(kind: str, tol: float = 1e-9) -> tuple[float, float]:
    """Golden-section search for the best cutoff; returns ``(B, bound)``."""
    grid = np.linspace(0.501, 0.999, 499)
    vals = [distortion_bound_curve(b, kind) for b in grid]
    i = int(np.clip(np.argmin(vals), 1, len(grid) - 2))
    res = minimize_scalar(
        lambda b: distortion_bound_curve(b, kind),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": tol},
    )
    return float(res.x), float(res.fun)
