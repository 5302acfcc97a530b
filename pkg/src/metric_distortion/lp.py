"""Linear programming: a dense two-phase simplex, a HiGHS bridge, and matrix games.

Every LP is stated as a maximization.  ``solve_lp`` checks the returned point
against the original constraints before reporting ``OPTIMAL``; a solver that
hands back something infeasible raises :class:`LPError` instead of being
trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .election import CandidateDistribution

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LPError",
    "LinearProgram",
    "LPResult",
    "GameSolution",
    "solve_lp",
    "solve_zero_sum",
    "best_response_gap",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "=", ">="

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
# dense tableau size (rows * columns) above which "auto" hands off to HiGHS
DENSE_LIMIT = 60_000
# rows + columns above which HiGHS runs its interior-point method (with crossover)
IPM_LIMIT = 20_000


class LPError(RuntimeError):
    """The solver failed or produced a point that does not check out."""


@dataclass(frozen=True)
class LinearProgram:
    """maximize ``objective @ x`` s.t. ``A x (senses) b`` and ``lower <= x <= upper``.

    ``A`` may be a dense array or any scipy sparse matrix.  Lower bounds
    default to 0 and upper bounds to +inf; either may be infinite.
    """

    objective: np.ndarray
    A: object
    senses: tuple[str, ...]
    b: np.ndarray
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        n = c.shape[0]
        A = self.A if sp.issparse(self.A) else np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] == 0:
            A = np.zeros((0, n))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if A.shape != (b.shape[0], n):
            raise ValueError(f"A has shape {A.shape}, expected ({b.shape[0]}, {n})")
        if len(self.senses) != b.shape[0]:
            raise ValueError("one relation per constraint row required")
        if any(s not in (LE, EQ, GE) for s in self.senses):
            raise ValueError(f"relations must be among {LE!r}, {EQ!r}, {GE!r}")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bounds must match the number of variables")
        dense_vals = A.data if sp.issparse(A) else A
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(dense_vals)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        if np.any(lower > upper):
            raise ValueError("a lower bound exceeds its upper bound")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_constraints(cls, objective, constraints, lower=None, upper=None):
        """Build from a list of ``(coefficients, relation, bound)`` triples."""
        n = len(objective)
        rows = [np.asarray(coef, dtype=float) for coef, _, _ in constraints]
        A = np.vstack(rows) if rows else np.zeros((0, n))
        return cls(
            objective=np.asarray(objective, dtype=float),
            A=A,
            senses=tuple(rel for _, rel, _ in constraints),
            b=np.array([bound for _, _, bound in constraints], dtype=float),
            lower=lower,
            upper=upper,
        )

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def residuals(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation at ``x`` (0 when feasible)."""
        Ax = self.A @ x
        worst = 0.0
        senses = np.array(self.senses)
        if Ax.size:
            le = senses == LE
            ge = senses == GE
            eq = senses == EQ
            viol = np.concatenate([
                (Ax - self.b)[le],
                (self.b - Ax)[ge],
                np.abs(Ax - self.b)[eq],
            ])
            if viol.size:
                worst = max(worst, float(viol.max()))
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass(frozen=True)
class LPResult:
    status: str
    value: float | None = None
    x: np.ndarray | None = None
    backend: str = ""


def solve_lp(lp: LinearProgram, backend: str = "auto") -> LPResult:
    """Solve ``lp`` with the dense simplex (``"simplex"``), HiGHS (``"highs"``) or
    whichever suits the size (``"auto"``)."""
    if backend == "auto":
        n_slack = sum(s != EQ for s in lp.senses)
        size = (lp.n_rows + 1) * (2 * lp.n_vars + n_slack + lp.n_rows)
        backend = "simplex" if size <= DENSE_LIMIT else "highs"
    if backend == "simplex":
        result = _solve_dense(lp)
    elif backend == "highs":
        result = _solve_highs(lp)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if result.status == OPTIMAL:
        scale = 1.0 + float(np.max(np.abs(lp.b), initial=0.0))
        viol = lp.residuals(result.x)
        if viol > FEAS_TOL * scale * (1 if result.backend == "simplex" else 10):
            raise LPError(f"{result.backend} returned a point violating constraints by {viol:.3g}")
    return result


def _solve_highs(lp: LinearProgram) -> LPResult:
    senses = np.array(lp.senses)
    A = sp.csr_matrix(lp.A) if not sp.issparse(lp.A) else lp.A.tocsr()
    le = np.flatnonzero(senses == LE)
    ge = np.flatnonzero(senses == GE)
    eq = np.flatnonzero(senses == EQ)
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if len(le) + len(ge) else None
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if len(eq) else None
    b_eq = lp.b[eq] if len(eq) else None
    bounds = np.column_stack([
        np.where(np.isfinite(lp.lower), lp.lower, -np.inf),
        np.where(np.isfinite(lp.upper), lp.upper, np.inf),
    ])
    res = linprog(
        -lp.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ipm" if lp.n_vars + lp.n_rows > IPM_LIMIT else "highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 0:
        return LPResult(OPTIMAL, float(-res.fun), np.asarray(res.x), "highs")
    if res.status == 2:
        return LPResult(INFEASIBLE, backend="highs")
    if res.status == 3:
        return LPResult(UNBOUNDED, backend="highs")
    raise LPError(f"HiGHS failed: {res.message}")


def _solve_dense(lp: LinearProgram) -> LPResult:
    """Two-phase tableau simplex with Bland's rule."""
    n = lp.n_vars
    A = lp.A.toarray() if sp.issparse(lp.A) else np.array(lp.A, dtype=float)
    b = lp.b.copy()
    senses = list(lp.senses)

    # Substitute x = offset + T y with y >= 0.
    cols = []  # (original index, sign)
    offset = np.zeros(n)
    extra_rows = []
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    n_y = len(cols)
    T = np.zeros((n, n_y))
    for col, (j, sign) in enumerate(cols):
        T[j, col] = sign
    A_y = A @ T
    b_y = b - A @ offset
    c_y = lp.objective @ T
    const = float(lp.objective @ offset)
    for col, ub in extra_rows:
        row = np.zeros(n_y)
        row[col] = 1.0
        A_y = np.vstack([A_y, row])
        b_y = np.append(b_y, ub)
        senses.append(LE)

    rows = A_y.shape[0]
    for i in range(rows):
        if b_y[i] < 0:
            A_y[i] = -A_y[i]
            b_y[i] = -b_y[i]
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

    n_slack = sum(s != EQ for s in senses)
    n_art = sum(s != LE for s in senses)
    width = n_y + n_slack + n_art
    tab = np.zeros((rows, width + 1))
    tab[:, :n_y] = A_y
    tab[:, -1] = b_y
    basis = np.empty(rows, dtype=np.int64)
    art_cols = []
    si, ai = n_y, n_y + n_slack
    for i, s in enumerate(senses):
        if s == LE:
            tab[i, si] = 1.0
            basis[i] = si
            si += 1
        else:
            if s == GE:
                tab[i, si] = -1.0
                si += 1
            tab[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1

    max_iter = 50 * (rows + width) + 1000

    def run(cost: np.ndarray, allowed: np.ndarray) -> str:
        # reduced costs for maximization: c_j - c_B B^-1 A_j
        for _ in range(max_iter):
            z = cost - cost[basis] @ tab[:, :-1]
            z[~allowed] = 0.0
            candidates = np.flatnonzero(z > 1e-9)
            if candidates.size == 0:
                return OPTIMAL
            e = int(candidates[0])
            col = tab[:, e]
            pos = col > PIVOT_TOL
            if not pos.any():
                return UNBOUNDED
            ratios = np.full(rows, np.inf)
            ratios[pos] = tab[pos, -1] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
            leave = int(ties[np.argmin(basis[ties])])
            _pivot(tab, leave, e)
            basis[leave] = e
        raise LPError("simplex iteration limit reached")

    allowed = np.ones(width, dtype=bool)
    if art_cols:
        cost1 = np.zeros(width)
        cost1[art_cols] = -1.0
        run(cost1, allowed)
        infeas = float(tab[np.isin(basis, art_cols), -1].sum())
        if infeas > FEAS_TOL * (1.0 + float(np.abs(b_y).max(initial=0.0))):
            return LPResult(INFEASIBLE, backend="simplex")
        # Pivot remaining (zero-level) artificials out, dropping redundant rows.
        keep = np.ones(rows, dtype=bool)
        art_set = set(art_cols)
        for i in range(rows):
            if int(basis[i]) in art_set:
                row = np.abs(tab[i, : n_y + n_slack])
                j = int(np.argmax(row))
                if row[j] > 1e-9:
                    _pivot(tab, i, j)
                    basis[i] = j
                else:
                    keep[i] = False
        if not keep.all():
            tab = tab[keep]
            basis = basis[keep]
            rows = tab.shape[0]
        allowed[art_cols] = False

    cost2 = np.zeros(width)
    cost2[:n_y] = c_y
    status = run(cost2, allowed)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, backend="simplex")
    y = np.zeros(width)
    y[basis] = tab[:, -1]
    x = offset + T @ y[:n_y]
    return LPResult(OPTIMAL, float(lp.objective @ x), x, "simplex")


def _pivot(tab: np.ndarray, r: int, c: int) -> None:
    tab[r] /= tab[r, c]
    col = tab[:, c].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])


@dataclass(frozen=True)
class GameSolution:
    value: float
    row_strategy: CandidateDistribution
    col_strategy: CandidateDistribution


def _strategy(x: np.ndarray) -> CandidateDistribution:
    x = np.clip(x, 0.0, None)
    return CandidateDistribution(tuple(float(v) for v in x / x.sum()))


def solve_zero_sum(payoff: Sequence[Sequence[float]], backend: str = "auto") -> GameSolution:
    """Maximin strategies of the zero-sum game where the row player receives ``payoff``."""
    P = np.asarray(payoff, dtype=float)
    if P.ndim != 2 or not np.all(np.isfinite(P)):
        raise ValueError("payoff must be a finite matrix")
    m, n = P.shape

    # Row player: maximize v s.t. v <= x @ P[:, j] for every column j.
    A_row = np.hstack([-P.T, np.ones((n, 1))])
    A_row = np.vstack([A_row, np.append(np.ones(m), 0.0)])
    row_lp = LinearProgram(
        objective=np.append(np.zeros(m), 1.0),
        A=A_row,
        senses=(LE,) * n + (EQ,),
        b=np.append(np.zeros(n), 1.0),
        lower=np.append(np.zeros(m), -np.inf),
    )
    # Column player: minimize w s.t. P[i] @ y <= w for every row i.
    A_col = np.hstack([P, -np.ones((m, 1))])
    A_col = np.vstack([A_col, np.append(np.ones(n), 0.0)])
    col_lp = LinearProgram(
        objective=np.append(np.zeros(n), -1.0),
        A=A_col,
        senses=(LE,) * m + (EQ,),
        b=np.append(np.zeros(m), 1.0),
        lower=np.append(np.zeros(n), -np.inf),
    )
    row_res = solve_lp(row_lp, backend)
    col_res = solve_lp(col_lp, backend)
    if row_res.status != OPTIMAL or col_res.status != OPTIMAL:
        raise LPError(f"matrix game LP not optimal: {row_res.status}, {col_res.status}")
    row = _strategy(row_res.x[:m])
    col = _strategy(col_res.x[:n])
    value = row_res.value
    if abs(value + col_res.value) > 1e-7:
        raise LPError(f"primal and dual game values disagree: {value} vs {-col_res.value}")
    return GameSolution(value, row, col)


def best_response_gap(payoff, row: CandidateDistribution, col: CandidateDistribution) -> float:
    """Largest gain either player gets by deviating to a pure strategy."""
    P = np.asarray(payoff, dtype=float)
    x, y = row.as_array(), col.as_array()
    current = float(x @ P @ y)
    row_gain = float((P @ y).max()) - current
    col_gain = current - float((x @ P).min())
    return max(row_gain, col_gain, 0.0)
