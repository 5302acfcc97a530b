"""Candidate-voter distances, social cost, and biased metrics.

A :class:`MetricSpace` stores only candidate-to-voter-block distances.  A
matrix is the restriction of some pseudometric exactly when every entry obeys
the four-point inequality ``d[i][u] <= d[i][v] + d[j][v] + d[j][u]``; longer
alternating paths then follow by induction, so the shortest-path closure of
the bipartite graph reproduces ``d``.

Biased metrics are parameterized by a nonnegative vector ``x`` with
``x[i_star] == 0``.  For them the two integrals

    R    = int_0^inf r(t) dt       (equal to 2 SC(i*))
    L(D) = int_0^inf l(D, t) dt    (equal to sum_j p_j (SC(j) - SC(i*)))

are computed here from step functions built directly from the ballots, so
they double as a check on :func:`biased_metric`.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .election import (
    CandidateDistribution,
    ElectionInstance,
    ParseError,
    as_rational,
    pairwise_margins,
)

__all__ = [
    "MetricSpace",
    "BiasedVector",
    "StepFunction",
    "social_cost",
    "social_costs",
    "is_consistent",
    "biased_metric",
    "r_curve",
    "ell_curve",
    "alpha_of_beta",
    "check_ab_consistent",
    "check_ab_consistent_pairwise",
    "meets",
    "load_metric",
    "dump_metric",
]

FLOAT_TOL = 1e-12


def meets(value, beta) -> bool:
    """``value >= beta``, with a 1e-12 allowance when ``beta`` is a float."""
    if isinstance(beta, float):
        return value >= beta - FLOAT_TOL
    return value >= beta


@dataclass(frozen=True)
class MetricSpace:
    """``d[c][v]``: distance from candidate ``c`` to voter block ``v``."""

    d: tuple[tuple, ...]

    @classmethod
    def from_array(cls, arr) -> "MetricSpace":
        return cls(tuple(tuple(row) for row in arr))

    @property
    def m(self) -> int:
        return len(self.d)

    @property
    def k(self) -> int:
        return len(self.d[0]) if self.d else 0

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.d])

    @property
    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for row in self.d for x in row)

    def closure_violation(self):
        """``max(d[i][u] - d[i][v] - d[j][v] - d[j][u])`` over all quadruples (0 if none)."""
        if self.is_exact:
            m, k, d = self.m, self.k, self.d
            via = [[min(d[i][v] + d[j][v] for v in range(k)) for j in range(m)] for i in range(m)]
            worst = Fraction(0)
            for i in range(m):
                for u in range(k):
                    best = min(via[i][j] + d[j][u] for j in range(m))
                    worst = max(worst, d[i][u] - best)
            return worst
        D = self.as_array()
        via = (D[:, None, :] + D[None, :, :]).min(axis=2)  # via[i, j]
        best = (via[:, :, None] + D[None, :, :]).min(axis=1)  # best[i, u]
        return max(0.0, float((D - best).max()))

    def is_closed(self, tol: float = 0.0) -> bool:
        return self.closure_violation() <= tol

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for row in self.d for x in row)


@dataclass(frozen=True)
class BiasedVector:
    """Offsets ``x`` of each candidate from the optimum ``i_star`` (where x is 0)."""

    x: tuple
    i_star: int

    def __post_init__(self):
        if not 0 <= self.i_star < len(self.x):
            raise ValueError("i_star out of range")
        if self.x[self.i_star] != 0:
            raise ValueError("x[i_star] must be 0")
        if any(v < 0 for v in self.x):
            raise ValueError("x must be nonnegative")

    @classmethod
    def of(cls, x: Sequence, i_star: int) -> "BiasedVector":
        return cls(tuple(x), int(i_star))

    @property
    def m(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function on ``[0, inf)``.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])``; the function
    is 0 from ``breakpoints[-1]`` on.  ``breakpoints[0]`` is always 0.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) - 1:
            raise ValueError("need exactly one level per interval")
        if self.breakpoints[0] != 0:
            raise ValueError("first breakpoint must be 0")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, t):
        if t < 0:
            raise ValueError("step functions live on t >= 0")
        idx = bisect.bisect_right(self.breakpoints, t) - 1
        return self.values[idx] if idx < len(self.values) else 0

    @property
    def integral(self):
        total = 0
        for lo, hi, level in zip(self.breakpoints, self.breakpoints[1:], self.values):
            total += level * (hi - lo)
        return total

    def intervals(self):
        """``(start, end, level)`` triples, ending with ``(last, inf, 0)``."""
        out = list(zip(self.breakpoints, self.breakpoints[1:], self.values))
        out.append((self.breakpoints[-1], float("inf"), 0))
        return out


def _check_dims(E: ElectionInstance, d: MetricSpace):
    if d.m != E.m or d.k != E.k:
        raise ValueError(f"metric is {d.m}x{d.k}, instance needs {E.m}x{E.k}")


def social_cost(E: ElectionInstance, d: MetricSpace, i: int):
    _check_dims(E, d)
    return sum(w * dist for w, dist in zip(E.weights, d.d[i]))


def social_costs(E: ElectionInstance, d: MetricSpace) -> list:
    _check_dims(E, d)
    return [sum(w * dist for w, dist in zip(E.weights, row)) for row in d.d]


def is_consistent(E: ElectionInstance, d: MetricSpace, tol: float = 0.0) -> bool:
    """Every block's ranking is non-decreasing in distance."""
    _check_dims(E, d)
    for v, ranking in enumerate(E.rankings):
        dists = [d.d[c][v] for c in ranking]
        if any(a - b > tol for a, b in zip(dists, dists[1:])):
            return False
    return True


def biased_metric(E: ElectionInstance, x: BiasedVector) -> MetricSpace:
    """The biased metric of ``x``.

    For a voter ``v``: ``d(i*, v)`` is half the largest drop ``x_i - x_j`` over
    pairs with ``i`` ranked at or above ``j``; any other candidate sits
    ``min{x_k : k at or below j}`` further out.
    """
    if x.m != E.m:
        raise ValueError("vector length does not match candidate count")
    half = Fraction(1, 2) if all(isinstance(v, (int, Fraction)) for v in x.x) else 0.5
    cols = []
    for ranking in E.rankings:
        xs = [x.x[c] for c in ranking]
        best_drop = 0
        running_max = xs[0]
        for val in xs[1:]:
            best_drop = max(best_drop, running_max - val)
            running_max = max(running_max, val)
        base = half * best_drop
        col = [None] * E.m
        suffix_min = xs[-1]
        for pos in range(E.m - 1, -1, -1):
            suffix_min = min(suffix_min, xs[pos])
            col[ranking[pos]] = base + suffix_min
        cols.append(col)
    return MetricSpace(tuple(tuple(cols[v][c] for v in range(E.k)) for c in range(E.m)))


def _levels(values) -> list:
    """0 followed by the distinct positive entries of ``values``, sorted."""
    return [0] + sorted({v for v in values if v > 0})


def r_curve(E: ElectionInstance, x: BiasedVector) -> StepFunction:
    """``r(t) = 1 - s[for all i >_v j: x_i - x_j <= t]``."""
    gaps = []
    for ranking in E.rankings:
        gaps.append(max(
            [x.x[ranking[a]] - x.x[ranking[b]] for a in range(E.m) for b in range(a + 1, E.m)],
            default=0,
        ))
    points = _levels(gaps)
    values = []
    for t in points[:-1]:
        calm = sum(w for w, g in zip(E.weights, gaps) if g <= t)
        values.append(1 - calm)
    return StepFunction(tuple(points), tuple(values))


def _set_beats(E: ElectionInstance, I: set, j: int):
    """``s[I > j]``: weight of voters ranking every member of ``I`` above ``j``."""
    if j in I:
        return 0
    total = 0
    for w, pos in zip(E.weights, E.positions):
        if all(pos[i] < pos[j] for i in I):
            total += w
    return total


def ell_curve(E: ElectionInstance, x: BiasedVector, D: CandidateDistribution) -> StepFunction:
    """``l(D, t) = sum_{j not in I_t} s[I_t > j] p_j`` with ``I_t = {k : x_k <= t}``."""
    if len(D) != E.m or x.m != E.m:
        raise ValueError("dimension mismatch")
    points = _levels(x.x)
    values = []
    for t in points[:-1]:
        I = {k for k in range(E.m) if x.x[k] <= t}
        values.append(sum(_set_beats(E, I, j) * D[j] for j in range(E.m) if j not in I))
    return StepFunction(tuple(points), tuple(values))


def alpha_of_beta(E: ElectionInstance, x: BiasedVector, beta) -> object:
    """``min{t : r(t) < beta} / R``."""
    r = r_curve(E, x)
    R = r.integral
    if R == 0:
        raise ValueError("alpha is undefined when R = 0")
    for start, _, level in r.intervals():
        if level < beta:
            return start / R
    raise AssertionError("unreachable: r vanishes past its last breakpoint")


def _tolerance(*vals) -> float:
    return 0 if all(isinstance(v, (int, Fraction)) for v in vals) else 1e-12


def check_ab_consistent(E: ElectionInstance, x: BiasedVector, alpha, beta) -> bool:
    """Every ``k`` with ``s[k > i*] >= beta`` has ``x_k <= alpha R``."""
    R = r_curve(E, x).integral
    s = pairwise_margins(E)
    tol = _tolerance(alpha, beta, R, *x.x)
    for k in range(E.m):
        if k != x.i_star and meets(s[k, x.i_star], beta) and x.x[k] - alpha * R > tol:
            return False
    return True


def check_ab_consistent_pairwise(E: ElectionInstance, x: BiasedVector, alpha, beta) -> bool:
    """Every pair with ``s[k > i] >= beta`` has ``x_k - x_i <= alpha R``."""
    R = r_curve(E, x).integral
    s = pairwise_margins(E)
    tol = _tolerance(alpha, beta, R, *x.x)
    for k in range(E.m):
        for i in range(E.m):
            if k != i and meets(s[k, i], beta) and x.x[k] - x.x[i] - alpha * R > tol:
                return False
    return True


def load_metric(text: str) -> MetricSpace:
    """Parse ``"m k"`` followed by ``m`` rows of ``k`` nonnegative rationals."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty metric file")
    try:
        m, k = (int(v) for v in lines[0].split())
    except ValueError as exc:
        raise ParseError(f"bad header {lines[0]!r}") from exc
    if len(lines) != m + 1:
        raise ParseError(f"expected {m} rows, found {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        vals = [as_rational(tok) for tok in line.split()]
        if len(vals) != k:
            raise ParseError(f"expected {k} entries in row {line!r}")
        if any(v < 0 for v in vals):
            raise ParseError("distances must be nonnegative")
        rows.append(tuple(vals))
    return MetricSpace(tuple(rows))


def dump_metric(d: MetricSpace) -> str:
    def fmt(v):
        return str(v) if isinstance(v, (int, Fraction)) else repr(float(v))

    out = [f"{d.m} {d.k}"]
    out.extend(" ".join(fmt(v) for v in row) for row in d.d)
    return "\n".join(out) + "\n"
