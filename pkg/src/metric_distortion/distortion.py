"""Worst-case distortion of a candidate distribution on a fixed instance.

Two exact LP routes are available:

``closure``
    Variables are the candidate-voter distances themselves.  Ranking
    consistency is linear, and the four-point closure inequality is written
    through auxiliary candidate-candidate variables ``e[i, j] <= d[i][v] +
    d[j][v]`` and ``d[i][u] <= e[i, j] + d[j][u]``, which keeps the LP at
    ``O(m^2 k)`` rows.  One LP per reference candidate, normalized to
    ``SC(i*) = 1``.

``biased``
    Variables are the offsets ``x`` of a biased metric.  ``2 SC(i*)`` is a
    convex and ``sum_j p_j (SC(j) - SC(i*))`` a concave piecewise-linear
    function of ``x``; both are homogeneous, so maximizing their ratio is
    the LP "maximize the concave part subject to the convex part <= 1".
    Since biased metrics dominate every consistent metric, the maximum over
    ``i*`` equals the closure value, while the LP stays at ``O(m k)`` rows.

``auto`` uses the closure LP while it is small and the biased LP beyond.
Either way the witness metric is checked for consistency and closure and the
reported value is recomputed from it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .election import CandidateDistribution, ElectionInstance
from .lp import EQ, GE, LE, OPTIMAL, UNBOUNDED, LinearProgram, LPError, solve_lp
from .metrics import (
    BiasedVector,
    MetricSpace,
    biased_metric,
    ell_curve,
    is_consistent,
    r_curve,
    social_costs,
)
from .rules import maximal_lotteries

__all__ = [
    "DistortionReport",
    "exact_distortion",
    "closure_lp_distortion",
    "biased_lp_distortion",
    "biased_ratio",
    "biased_ratio_float",
    "search_worst_biased",
    "fancy_constraints_check",
    "ml_pointwise_check",
]

#: m*m*k above which "auto" switches from the closure LP to the biased LP.
CLOSURE_LIMIT = 4000
#: closure-witness tolerance, relative to the largest distance
WITNESS_TOL = 1e-7
MAX_FANCY_M = 15


@dataclass(frozen=True)
class DistortionReport:
    value: float
    witness_metric: MetricSpace | None
    witness_i_star: int
    per_candidate_costs: tuple
    method: str = ""
    per_reference: tuple = ()

    def to_text(self) -> str:
        """Line-oriented form: value, witness i*, costs, then the witness matrix."""
        lines = [f"value {self.value!r}", f"i_star {self.witness_i_star}"]
        lines.append("costs " + " ".join(repr(float(c)) for c in self.per_candidate_costs))
        if self.witness_metric is not None:
            W = self.witness_metric
            lines.append(f"metric {W.m} {W.k}")
            lines.extend(" ".join(repr(float(v)) for v in row) for row in W.d)
        return "\n".join(lines) + "\n"


def _probabilities(D: CandidateDistribution, m: int) -> np.ndarray:
    if len(D) != m:
        raise ValueError(f"distribution has {len(D)} entries, instance has {m} candidates")
    return D.as_array()


def _witness_report(E, p, d_arr, i_star, method, per_ref) -> DistortionReport:
    W = MetricSpace.from_array(np.clip(d_arr, 0.0, None))
    scale = max(1.0, float(np.abs(d_arr).max(initial=0.0)))
    if not is_consistent(E, W, tol=WITNESS_TOL * scale):
        raise LPError("witness metric is inconsistent with the ballots")
    if W.closure_violation() > WITNESS_TOL * scale:
        raise LPError("witness metric violates the four-point closure")
    costs = np.array([float(c) for c in social_costs(E, W)])
    ratio = float(p @ costs) / float(costs[i_star])
    return DistortionReport(ratio, W, int(i_star), tuple(float(c) for c in costs), method, tuple(per_ref))


def _closure_lp(E: ElectionInstance, p: np.ndarray, i_star: int) -> LinearProgram:
    m, k = E.m, E.k
    w = E.weight_array
    n_d = m * k
    pairs = list(itertools.combinations(range(m), 2))
    e_index = {}
    for idx, (i, j) in enumerate(pairs):
        e_index[i, j] = e_index[j, i] = n_d + idx
    n = n_d + len(pairs)

    def dv(c, v):
        return c * k + v

    rows, cols, vals = [], [], []
    senses, rhs = [], []
    r = 0

    def add(entries, sense, bound):
        nonlocal r
        for col, val in entries:
            rows.append(r)
            cols.append(col)
            vals.append(val)
        senses.append(sense)
        rhs.append(bound)
        r += 1

    for v, ranking in enumerate(E.rankings):
        for a, b in zip(ranking, ranking[1:]):
            add([(dv(a, v), 1.0), (dv(b, v), -1.0)], LE, 0.0)
    for i, j in pairs:
        for v in range(k):
            add([(e_index[i, j], 1.0), (dv(i, v), -1.0), (dv(j, v), -1.0)], LE, 0.0)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            for u in range(k):
                add([(dv(i, u), 1.0), (e_index[i, j], -1.0), (dv(j, u), -1.0)], LE, 0.0)
    add([(dv(i_star, v), w[v]) for v in range(k)], EQ, 1.0)

    obj = np.zeros(n)
    for c in range(m):
        for v in range(k):
            obj[dv(c, v)] = p[c] * w[v]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    return LinearProgram(obj, A, tuple(senses), np.array(rhs))


def closure_lp_distortion(E: ElectionInstance, D: CandidateDistribution, backend="highs") -> DistortionReport:
    """Exact distortion from the four-point closure LP, one LP per reference candidate."""
    p = _probabilities(D, E.m)
    best = None
    per_ref = []
    for i_star in range(E.m):
        res = solve_lp(_closure_lp(E, p, i_star), backend)
        if res.status == UNBOUNDED:
            per_ref.append(math.inf)
            return DistortionReport(math.inf, None, i_star, (), "closure", tuple(per_ref))
        if res.status != OPTIMAL:
            raise LPError(f"closure LP for i*={i_star} is {res.status}")
        per_ref.append(res.value)
        if best is None or res.value > best[0]:
            best = (res.value, i_star, res.x)
    value, i_star, sol = best
    d_arr = sol[: E.m * E.k].reshape(E.m, E.k)
    return _witness_report(E, p, d_arr, i_star, "closure", per_ref)


def _biased_lp(E: ElectionInstance, p: np.ndarray, i_star: int) -> LinearProgram:
    m, k = E.m, E.k
    w = E.weight_array
    # layout: x[0:m] | a[0:k] | P[v, pos] | Q[v, pos]
    n_x, n_a = m, k
    P0 = n_x + n_a
    Q0 = P0 + k * m
    n = Q0 + k * m

    rows, cols, vals, senses = [], [], [], []
    rhs = []
    r = 0

    def add(entries, sense, bound=0.0):
        nonlocal r
        for col, val in entries:
            rows.append(r)
            cols.append(col)
            vals.append(val)
        senses.append(sense)
        rhs.append(bound)
        r += 1

    for v, ranking in enumerate(E.rankings):
        Pv = P0 + v * m
        Qv = Q0 + v * m
        for pos, c in enumerate(ranking):
            add([(Pv + pos, 1.0), (c, -1.0)], GE)  # running max >= x_c
            add([(Qv + pos, 1.0), (c, -1.0)], LE)  # running min <= x_c
            if pos > 0:
                add([(Pv + pos, 1.0), (Pv + pos - 1, -1.0)], GE)
                add([(n_x + v, 1.0), (Pv + pos - 1, -1.0), (c, 1.0)], GE)  # drop bound
            if pos < m - 1:
                add([(Qv + pos, 1.0), (Qv + pos + 1, -1.0)], LE)
    add([(n_x + v, w[v]) for v in range(k)], LE, 1.0)

    obj = np.zeros(n)
    for v, ranking in enumerate(E.rankings):
        for pos, c in enumerate(ranking):
            obj[Q0 + v * m + pos] = w[v] * p[c]
    upper = np.full(n, np.inf)
    upper[i_star] = 0.0
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    return LinearProgram(obj, A, tuple(senses), np.array(rhs), upper=upper)


def biased_lp_distortion(E: ElectionInstance, D: CandidateDistribution, backend="highs") -> DistortionReport:
    """Exact distortion as the best biased metric, one LP per reference candidate."""
    p = _probabilities(D, E.m)
    best = None
    per_ref = []
    for i_star in range(E.m):
        res = solve_lp(_biased_lp(E, p, i_star), backend)
        if res.status == UNBOUNDED:
            per_ref.append(math.inf)
            return DistortionReport(math.inf, None, i_star, (), "biased", tuple(per_ref))
        if res.status != OPTIMAL:
            raise LPError(f"biased LP for i*={i_star} is {res.status}")
        value = 1.0 + 2.0 * res.value
        per_ref.append(value)
        if best is None or value > best[0]:
            best = (value, i_star, res.x[: E.m])
    value, i_star, x = best
    x = np.clip(x, 0.0, None)
    x[i_star] = 0.0
    if float(x.max(initial=0.0)) == 0.0:
        # every offset zero: all candidates coincide and every ratio is 1
        costs = tuple(1.0 for _ in range(E.m))
        return DistortionReport(1.0, None, i_star, costs, "biased", tuple(per_ref))
    d = biased_metric(E, BiasedVector.of([float(v) for v in x], i_star))
    return _witness_report(E, p, d.as_array(), i_star, "biased", per_ref)


def exact_distortion(E: ElectionInstance, D: CandidateDistribution, method: str = "auto") -> DistortionReport:
    """Worst-case ``E_D[SC] / min SC`` over all metrics consistent with ``E``."""
    if method == "auto":
        method = "closure" if E.m * E.m * E.k <= CLOSURE_LIMIT else "biased"
    if method == "closure":
        return closure_lp_distortion(E, D)
    if method == "biased":
        return biased_lp_distortion(E, D)
    raise ValueError(f"unknown method {method!r}")


def biased_ratio(E: ElectionInstance, x: BiasedVector, D: CandidateDistribution):
    """``1 + 2 L(D) / R`` for the biased metric of ``x`` (exact for rational inputs).

    ``R = 0`` forces ``SC(i*) = 0``: the ratio is 1 if ``L`` is 0 too, else infinite.
    """
    R = r_curve(E, x).integral
    L = ell_curve(E, x, D).integral
    if R == 0:
        return 1 if L == 0 else math.inf
    return 1 + 2 * L / R


class _FastRatio:
    """Vectorized ``1 + 2L/R`` over many biased vectors for one instance."""

    def __init__(self, E: ElectionInstance, p: np.ndarray):
        self.rank = np.array(E.rankings)
        self.w = E.weight_array
        self.p_rank = p[self.rank]  # p of the candidate at each (v, pos)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        xs = X[:, self.rank]  # (batch, k, m)
        prefix = np.maximum.accumulate(xs, axis=2)
        drops = np.maximum((prefix[:, :, :-1] - xs[:, :, 1:]).max(axis=2, initial=0.0), 0.0)
        R = drops @ self.w
        suffix = np.minimum.accumulate(xs[:, :, ::-1], axis=2)[:, :, ::-1]
        L = (suffix * self.p_rank).sum(axis=2) @ self.w
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(R > 0, 1.0 + 2.0 * L / np.where(R > 0, R, 1.0),
                             np.where(L > 1e-15, np.inf, 1.0))
        return ratio


def biased_ratio_float(E: ElectionInstance, x, D: CandidateDistribution) -> float:
    """Floating-point ``biased_ratio`` for a plain offset vector."""
    return float(_FastRatio(E, _probabilities(D, E.m))(np.asarray(x, dtype=float))[0])


def search_worst_biased(
    E: ElectionInstance,
    D: CandidateDistribution,
    budget: int = 20000,
    seed: int = 0,
) -> tuple[BiasedVector, float]:
    """Heuristic hunt for the biased vector with the largest ratio.

    Starts from every two-level vector ``x_j in {0, 2}`` (all ``i*``, all
    subsets while ``m`` is small), then improves the best starts by moving one
    coordinate, or one group of tied coordinates, to the best value among the
    breakpoints ``x_a + x_b - x_c`` of the piecewise-linear ratio.  The result
    never exceeds the exact distortion since it is evaluated on a real metric.
    """
    m = E.m
    p = _probabilities(D, m)
    f = _FastRatio(E, p)
    rng = np.random.default_rng(seed)
    spent = 0
    starts = []
    for i_star in range(m):
        others = [c for c in range(m) if c != i_star]
        if len(others) <= 12:
            masks = itertools.product((0.0, 2.0), repeat=len(others))
            X = np.array([[0.0] * m for _ in range(2 ** len(others))])
            for row, bits in zip(X, masks):
                row[others] = bits
        else:
            X = np.zeros((512, m))
            X[:, others] = 2.0 * rng.integers(0, 2, size=(512, len(others)))
        vals = f(X)
        spent += len(X)
        order = np.argsort(-vals)[:3]
        starts.extend((float(vals[t]), i_star, X[t].copy()) for t in order)
        # a few random multi-level starts as well
        R = np.zeros((4, m))
        R[:, others] = rng.integers(0, 4, size=(4, len(others))).astype(float)
        rv = f(R)
        spent += 4
        starts.extend((float(rv[t]), i_star, R[t].copy()) for t in range(4))

    starts.sort(key=lambda s: -s[0])
    best_val, best_i, best_x = starts[0]
    if math.isinf(best_val):
        return BiasedVector.of(list(best_x), best_i), best_val

    for val, i_star, x in starts:
        if spent >= budget:
            break
        improved = True
        while improved and spent < budget:
            improved = False
            vals_now = np.unique(x)
            cand = np.unique(
                (vals_now[:, None, None] + vals_now[None, :, None] - vals_now[None, None, :]).ravel()
            )
            cand = cand[cand >= 0]
            cand = np.concatenate([cand, (cand[:, None] + cand[None, :]).ravel() / 2.0])
            cand = np.unique(np.concatenate([cand, [0.0, 2 * vals_now.max() + 1.0]]))
            groups = [[c] for c in range(m) if c != i_star]
            for level in vals_now:
                members = [c for c in range(m) if c != i_star and x[c] == level]
                if len(members) > 1:
                    groups.append(members)
            for group in groups:
                trial = np.repeat(x[None, :], len(cand), axis=0)
                trial[:, group] = cand[:, None]
                tv = f(trial)
                spent += len(cand)
                t = int(np.argmax(tv))
                if tv[t] > val + 1e-12:
                    val, x = float(tv[t]), trial[t].copy()
                    improved = True
                    break
        if val > best_val:
            best_val, best_i, best_x = val, i_star, x.copy()
    return BiasedVector.of([float(v) for v in best_x], best_i), best_val


def fancy_constraints_check(E: ElectionInstance, D: CandidateDistribution, lam: float):
    """All ``(I, i*)`` with ``sum_{j not in I} s[I > j] p_j > lam (1 - s[i* > I^c]) + 1e-12``.

    ``I`` ranges over nonempty proper subsets and ``i*`` over members of ``I``.
    Returns ``(I, i_star, lhs, rhs)`` tuples; an empty list means no violation.
    """
    m = E.m
    if m > MAX_FANCY_M:
        raise ValueError(f"subset enumeration capped at m <= {MAX_FANCY_M}")
    p = _probabilities(D, m)
    w = E.weight_array
    pos = E.positions  # (k, m)
    full = (1 << m) - 1
    n_masks = 1 << m
    maxpos = np.full((E.k, n_masks), -1, dtype=np.int64)
    minpos = np.full((E.k, n_masks), m, dtype=np.int64)
    for mask in range(1, n_masks):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        maxpos[:, mask] = np.maximum(maxpos[:, rest], pos[:, low])
        minpos[:, mask] = np.minimum(minpos[:, rest], pos[:, low])
    violations = []
    for mask in range(1, full):
        members = [c for c in range(m) if mask >> c & 1]
        outside = [c for c in range(m) if not mask >> c & 1]
        beats = pos[:, outside] > maxpos[:, [mask]]  # (k, |outside|)
        lhs = float(w @ beats @ p[outside])
        comp = full ^ mask
        for i_star in members:
            first = pos[:, i_star] < minpos[:, comp]
            rhs = lam * (1.0 - float(w @ first))
            if lhs > rhs + 1e-12:
                violations.append((frozenset(members), i_star, lhs, rhs))
    return violations


def ml_pointwise_check(
    E: ElectionInstance,
    x: BiasedVector,
    D: CandidateDistribution | None = None,
    tol: float = 1e-8,
) -> bool:
    """``l(D, t) <= P(I_t^c)/2 <= r(t)`` at every breakpoint of either curve.

    ``D`` defaults to the Maximal Lotteries output.  Both curves are right-
    continuous step functions, so checking each breakpoint covers every t.
    """
    if D is None:
        D = maximal_lotteries(E)
    r = r_curve(E, x)
    ell = ell_curve(E, x, D)
    points = sorted(set(r.breakpoints) | set(ell.breakpoints))
    for t in points:
        outside = sum(float(D[k]) for k in range(E.m) if x.x[k] > t)
        half = outside / 2
        if float(ell(t)) > half + tol or half > float(r(t)) + tol:
            return False
    return True
