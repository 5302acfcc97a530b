"""Election instances, pairwise margins, plurality scores and instance generators.

An instance holds ``m`` candidates (indexed ``0..m-1``) and a list of voter
blocks.  Each block is a strict ranking carrying a positive rational weight;
weights are normalized to sum to one, so a block stands for a fraction of the
electorate.  All margins derived from an instance are exact ``Fraction``s.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InstanceError",
    "ParseError",
    "ElectionInstance",
    "PairwiseMatrix",
    "CandidateDistribution",
    "ZERO",
    "HALF",
    "as_rational",
    "load_instance",
    "dump_instance",
    "pairwise_margins",
    "plurality",
    "unit_voters",
    "gen_random",
    "gen_corpus",
    "gen_radius_lb",
    "gen_rcb_lb",
    "rcb_lb_tiers",
]

ZERO = "zero"
HALF = "half"

#: Refuse to expand rational weights into more virtual voters than this.
MAX_UNIT_VOTERS = 10**6


class InstanceError(ValueError):
    """An instance violates one of its structural invariants."""


class ParseError(InstanceError):
    """Instance text is malformed."""


def as_rational(value) -> Fraction:
    """Convert ``value`` to a Fraction, reading floats through their decimal repr.

    ``as_rational(0.7) == Fraction(7, 10)`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InstanceError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational number: {value!r}") from exc
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class ElectionInstance:
    """Candidates ``0..m-1`` and weighted voter blocks with strict rankings.

    Rankings list candidates from most to least preferred.  Weights are
    normalized on construction through :meth:`from_ballots`; the bare
    constructor expects them already normalized.
    """

    m: int
    weights: tuple[Fraction, ...]
    rankings: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.m < 1:
            raise InstanceError("an instance needs at least one candidate")
        if not self.rankings:
            raise InstanceError("an instance needs at least one voter")
        if len(self.weights) != len(self.rankings):
            raise InstanceError("one weight per ranking required")
        expected = set(range(self.m))
        for ranking in self.rankings:
            if len(ranking) != self.m or set(ranking) != expected:
                raise InstanceError(
                    f"ranking {list(ranking)} is not a permutation of 0..{self.m - 1}"
                )
        for w in self.weights:
            if w <= 0:
                raise InstanceError(f"nonpositive voter weight {w}")
        if sum(self.weights) != 1:
            raise InstanceError("weights must sum to 1; use from_ballots to normalize")

    @classmethod
    def from_ballots(cls, m: int, ballots: Iterable[tuple[object, Sequence[int]]]):
        """Build an instance from ``(weight, ranking)`` pairs, normalizing weights."""
        ballots = list(ballots)
        weights = [as_rational(w) for w, _ in ballots]
        for w in weights:
            if w <= 0:
                raise InstanceError(f"nonpositive voter weight {w}")
        total = sum(weights)
        return cls(
            m=int(m),
            weights=tuple(w / total for w in weights),
            rankings=tuple(tuple(int(c) for c in r) for _, r in ballots),
        )

    @classmethod
    def from_rankings(cls, m: int, rankings: Iterable[Sequence[int]]):
        """Unit-weight voters, one per ranking."""
        return cls.from_ballots(m, [(1, r) for r in rankings])

    @property
    def k(self) -> int:
        """Number of voter blocks."""
        return len(self.rankings)

    @cached_property
    def positions(self) -> np.ndarray:
        """``positions[v, c]`` is the rank (0 = top) of candidate c for block v."""
        pos = np.empty((self.k, self.m), dtype=np.int64)
        for v, ranking in enumerate(self.rankings):
            pos[v, list(ranking)] = np.arange(self.m)
        return pos

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def prefers(self, v: int, a: int, b: int) -> bool:
        """True when block ``v`` ranks ``a`` strictly above ``b``."""
        return self.positions[v, a] < self.positions[v, b]

    def top(self, v: int) -> int:
        return self.rankings[v][0]


@dataclass(frozen=True)
class PairwiseMatrix:
    """Exact margins ``s[i][j]``: weight of voters ranking i above j."""

    s: tuple[tuple[Fraction, ...], ...]
    mode: str = ZERO

    @property
    def m(self) -> int:
        return len(self.s)

    def __getitem__(self, ij):
        i, j = ij
        return self.s[i][j]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.s])

    def distinct_values(self) -> list[Fraction]:
        return sorted({x for i, row in enumerate(self.s) for j, x in enumerate(row) if i != j})


@dataclass(frozen=True)
class CandidateDistribution:
    """A probability vector over candidates (Fractions when exact, floats otherwise)."""

    p: tuple

    def __post_init__(self):
        if any(x < 0 for x in self.p):
            # LP output can carry tiny negative noise; anything larger is a bug
            if any(x < -1e-9 for x in self.p):
                raise ValueError(f"negative probability in {self.p}")
            object.__setattr__(self, "p", tuple(max(x, 0.0) for x in self.p))

    @classmethod
    def point_mass(cls, m: int, i: int) -> "CandidateDistribution":
        return cls(tuple(Fraction(int(j == i)) for j in range(m)))

    @classmethod
    def uniform(cls, m: int) -> "CandidateDistribution":
        return cls(tuple(Fraction(1, m) for _ in range(m)))

    @classmethod
    def from_weights(cls, weights: Sequence) -> "CandidateDistribution":
        total = sum(weights)
        if total <= 0:
            raise ValueError("weights must have positive total")
        return cls(tuple(w / total for w in weights))

    @classmethod
    def mixture(cls, parts: Iterable[tuple[object, "CandidateDistribution"]]):
        """Convex combination ``sum(w * D)`` of ``(w, D)`` pairs."""
        parts = list(parts)
        m = len(parts[0][1])
        acc = [0] * m
        for w, dist in parts:
            for j in range(m):
                acc[j] += w * dist.p[j]
        return cls(tuple(acc))

    def __len__(self) -> int:
        return len(self.p)

    def __getitem__(self, j):
        return self.p[j]

    def __iter__(self):
        return iter(self.p)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.p)

    def total(self):
        return sum(self.p)

    def support(self, tol: float = 0.0) -> set[int]:
        return {j for j, x in enumerate(self.p) if x > tol}

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.p])

    def total_variation(self, other: "CandidateDistribution") -> float:
        return 0.5 * float(np.abs(self.as_array() - other.as_array()).sum())

    def is_valid(self, tol: float = 1e-9) -> bool:
        if self.is_exact:
            return sum(self.p) == 1 and all(x >= 0 for x in self.p)
        return abs(float(sum(self.p)) - 1.0) <= tol and all(x >= -tol for x in self.p)

    def format(self, digits: int = 10) -> str:
        """``"0: 1/2, 1: 1/2"``; floats are printed with ``digits`` significant digits."""
        items = []
        for j, x in enumerate(self.p):
            if isinstance(x, Fraction):
                text = str(x)
            else:
                text = f"{float(x):.{digits}g}"
            items.append(f"{j}: {text}")
        return ", ".join(items)


def load_instance(text: str) -> ElectionInstance:
    """Parse the ``"m k"`` header plus ``k`` lines ``"w i_1 ... i_m"``.

    Blank lines and ``#`` comments are ignored.  Lines may also be separated
    by a whitespace-delimited ``/`` so a whole instance fits on one line, e.g.
    ``"2 2 / 1 0 1 / 1 1 0"``; a slash inside a token such as ``1/3`` is a
    rational weight.
    """
    lines = []
    for raw in re.split(r"\s/\s|\n", text):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParseError("empty instance")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(f"header must be 'm k', got {lines[0]!r}")
    try:
        m, k = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"header must be two integers, got {lines[0]!r}") from exc
    if len(lines) - 1 != k:
        raise ParseError(f"header announces {k} voter lines, found {len(lines) - 1}")
    ballots = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if len(fields) != m + 1:
            raise ParseError(f"line {lineno}: expected weight and {m} candidates")
        weight = as_rational(fields[0])
        try:
            ranking = [int(x) for x in fields[1:]]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: candidate indices must be integers") from exc
        ballots.append((weight, ranking))
    return ElectionInstance.from_ballots(m, ballots)


def dump_instance(E: ElectionInstance) -> str:
    # Scale to integer weights when that keeps numbers small.
    lcm = math.lcm(*(w.denominator for w in E.weights))
    out = [f"{E.m} {E.k}"]
    for w, ranking in zip(E.weights, E.rankings):
        scaled = w * lcm
        out.append(" ".join([str(scaled), *map(str, ranking)]))
    return "\n".join(out) + "\n"


def pairwise_margins(E: ElectionInstance, mode: str = ZERO) -> PairwiseMatrix:
    if mode not in (ZERO, HALF):
        raise ValueError(f"unknown diagonal mode {mode!r}")
    m = E.m
    s = [[Fraction(0)] * m for _ in range(m)]
    for w, ranking in zip(E.weights, E.rankings):
        for a in range(m):
            ca = ranking[a]
            row = s[ca]
            for b in range(a + 1, m):
                row[ranking[b]] += w
    if mode == HALF:
        for i in range(m):
            s[i][i] = Fraction(1, 2)
    return PairwiseMatrix(tuple(tuple(row) for row in s), mode)


def plurality(E: ElectionInstance) -> CandidateDistribution:
    scores = [Fraction(0)] * E.m
    for w, ranking in zip(E.weights, E.rankings):
        scores[ranking[0]] += w
    return CandidateDistribution(tuple(scores))


def unit_voters(E: ElectionInstance, cap: int = MAX_UNIT_VOTERS) -> list[tuple[int, ...]]:
    """Expand weighted blocks into equal-weight voters, in block order."""
    lcm = math.lcm(*(w.denominator for w in E.weights))
    counts = [int(w * lcm) for w in E.weights]
    if sum(counts) > cap:
        raise InstanceError(
            f"expanding to unit voters needs {sum(counts)} voters (cap {cap})"
        )
    voters = []
    for c, ranking in zip(counts, E.rankings):
        voters.extend([ranking] * c)
    return voters


def gen_random(m: int, n: int, seed: int) -> ElectionInstance:
    """``n`` unit-weight voters with independent uniform random rankings."""
    if m < 1 or n < 1:
        raise InstanceError("need m >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    rankings = [tuple(int(c) for c in rng.permutation(m)) for _ in range(n)]
    return ElectionInstance.from_rankings(m, rankings)


def _dihedral_orders(items: Sequence[int]) -> list[list[int]]:
    """All rotations of ``items`` followed by all rotations of its reversal.

    Every element occupies every position equally often and every ordered
    pair appears in each order equally often, so margins inside the set are
    exactly 1/2.
    """
    n = len(items)
    fwd = [[items[(r + t) % n] for t in range(n)] for r in range(n)]
    bwd = [[items[(r - t) % n] for t in range(n)] for r in range(n)]
    return fwd + bwd


def _check_beta(beta) -> Fraction:
    beta = as_rational(beta)
    if not Fraction(1, 2) < beta < 1:
        raise InstanceError(f"beta must lie in (1/2, 1), got {beta}")
    return beta


def corpus_seed(seed: int, i: int) -> int:
    return seed * 1_000_003 + i


def gen_corpus(trials: int, m_range, n_range, seed: int):
    """``(seed_i, instance)`` pairs; instance ``i`` depends only on ``(seed, i)``.

    ``m_range`` and ``n_range`` are inclusive ``(lo, hi)`` pairs; when they
    are proper ranges the sizes are drawn from the per-instance seed.
    """
    (m_lo, m_hi), (n_lo, n_hi) = m_range, n_range
    if not (1 <= m_lo <= m_hi and 1 <= n_lo <= n_hi):
        raise InstanceError("bad corpus size ranges")
    for i in range(trials):
        s = corpus_seed(seed, i)
        rng = np.random.default_rng([s, 1])
        m = int(rng.integers(m_lo, m_hi + 1))
        n = int(rng.integers(n_lo, n_hi + 1))
        yield s, gen_random(m, n, s)


def gen_radius_lb(beta, U_size: int) -> ElectionInstance:
    """Instance on which beta-RaDiUS approaches distortion ``1 + 2/beta``.

    Layout: candidate 0 is i*, candidate 1 is k*, candidates ``2..U_size+1``
    form U.  A ``1 - beta`` block ranks ``i* > U > k*``; a ``beta`` block is
    split evenly over ``j`` in U with ballots ``j > k* > i* > U - j``.  The
    sets written as ``U`` are laid out in all dihedral orders.
    """
    beta = _check_beta(beta)
    if U_size < 2:
        raise InstanceError("U_size must be at least 2")
    i_star, k_star = 0, 1
    U = list(range(2, U_size + 2))
    ballots = []
    orders = _dihedral_orders(U)
    w_low = (1 - beta) / len(orders)
    for order in orders:
        ballots.append((w_low, [i_star, *order, k_star]))
    w_high = beta / (2 * U_size)
    for idx, j in enumerate(U):
        rest_fwd = [U[(idx + t) % U_size] for t in range(1, U_size)]
        rest_bwd = [U[(idx - t) % U_size] for t in range(1, U_size)]
        ballots.append((w_high, [j, k_star, i_star, *rest_fwd]))
        ballots.append((w_high, [j, k_star, i_star, *rest_bwd]))
    return ElectionInstance.from_ballots(U_size + 2, ballots)


def rcb_lb_tiers(T: int) -> list[list[int]]:
    """Candidate sets ``[C_0 = {i*}, C_1, ..., C_{T+1}]`` used by :func:`gen_rcb_lb`."""
    return [[0]] + [list(range(1 + t * T, 1 + (t + 1) * T)) for t in range(T + 1)]


def gen_rcb_lb(beta, T: int) -> ElectionInstance:
    """Instance on which beta-RCB approaches distortion ``1 + 2/beta``.

    Candidate 0 is i*; tier ``C_t`` (``t = 1..T+1``) holds candidates
    ``1 + (t-1)T .. tT``.  Ballot blocks (weights before normalization):

    * ``1 - beta - 1/T``: ``i* > C_{T+1} > ... > C_1``
    * ``1/T``: ``C_{T+1} > ... > C_1 > i*``
    * ``beta/T`` for each ``t``: ``(C_t - c_t) > ... > (C_1 - c_1) > i* >
      C_{T+1} > ... > C_{t+1} > c_t > ... > c_1``

    Each block is spread over the ``2T`` dihedral orders of the tiers (applied
    to every tier at once); in the last family ``c_i`` is the final member of
    tier ``i`` in that order.
    """
    beta = _check_beta(beta)
    if T < 2:
        raise InstanceError("T must be at least 2")
    w_main = 1 - beta - Fraction(1, T)
    if w_main <= 0:
        raise InstanceError(f"need 1 - beta - 1/T > 0, got {w_main}")
    tiers = rcb_lb_tiers(T)
    i_star = 0
    n_orders = 2 * T
    per_tier = [_dihedral_orders(tier) for tier in tiers[1:]]  # per_tier[t-1][d]
    ballots = []
    for d in range(n_orders):
        ordered = [per_tier[t][d] for t in range(T + 1)]  # ordered[t-1] is C_t
        descending = [c for t in range(T, -1, -1) for c in ordered[t]]
        ballots.append((w_main / n_orders, [i_star, *descending]))
        ballots.append((Fraction(1, T) / n_orders, [*descending, i_star]))
        for t in range(1, T + 1):
            upper = [c for i in range(t, 0, -1) for c in ordered[i - 1][:-1]]
            middle = [c for i in range(T + 1, t, -1) for c in ordered[i - 1]]
            chosen = [ordered[i - 1][-1] for i in range(t, 0, -1)]
            ballots.append((beta / T / n_orders, [*upper, i_star, *middle, *chosen]))
    return ElectionInstance.from_ballots(1 + (T + 1) * T, ballots)
