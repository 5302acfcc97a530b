"""Voting rules.  Each returns the exact output distribution over candidates.

Rules that sample "a uniformly random voter" are evaluated by mixing the
per-block outcome with the block weights, so nothing here is Monte Carlo.
Thresholds ``beta`` may be Fractions (compared exactly) or floats (compared
with a 1e-12 allowance, see :func:`metrics.meets`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from .election import (
    HALF,
    CandidateDistribution,
    ElectionInstance,
    as_rational,
    pairwise_margins,
    plurality,
    unit_voters,
)
from .lp import solve_zero_sum
from .metrics import meets

__all__ = [
    "RuleSpec",
    "parse_rule",
    "random_dictatorship",
    "smart_dictatorship",
    "plurality_veto",
    "k_round_plurality_veto",
    "condorcet_payoff",
    "maximal_lotteries",
    "rcb",
    "rcb_choice",
    "covering_relation",
    "weighted_uncovered_set",
    "radius",
    "beta_digraph",
    "rddmis_survivors",
    "rddmis",
    "matching_uncovered_member",
    "matching_uncovered_set",
    "domination_graph_member",
]


def check_beta(beta):
    """Validate ``1/2 < beta < 1``; floats stay floats, everything else becomes a Fraction."""
    if not isinstance(beta, float):
        beta = as_rational(beta)
    if not 0.5 < beta < 1:
        raise ValueError(f"beta must lie strictly between 1/2 and 1, got {beta}")
    return beta


def random_dictatorship(E: ElectionInstance) -> CandidateDistribution:
    return plurality(E)


def smart_dictatorship(E: ElectionInstance) -> CandidateDistribution:
    """Pick ``i`` with probability proportional to ``plu(i) / (1 - plu(i))``."""
    plu = plurality(E).p
    for i, share in enumerate(plu):
        if share == 1:
            return CandidateDistribution.point_mass(E.m, i)
    return CandidateDistribution.from_weights([share / (1 - share) for share in plu])


def _veto_scores(E: ElectionInstance, order: Sequence[int] | None, rounds: int | None):
    voters = unit_voters(E)
    n = len(voters)
    order = list(range(n)) if order is None else [int(v) for v in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of the {n} unit voters")
    rounds = n if rounds is None else rounds
    if not 0 <= rounds <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    scores = [0] * E.m
    for ranking in voters:
        scores[ranking[0]] += 1
    last = None
    for v in order[:rounds]:
        for c in reversed(voters[v]):
            if scores[c] > 0:
                scores[c] -= 1
                last = c
                break
    return scores, last


def plurality_veto(E: ElectionInstance, order: Sequence[int] | None = None) -> int:
    """Each unit voter in ``order`` vetoes their least favorite candidate still
    holding positive score; the last candidate vetoed to zero wins.

    Rational weights are expanded to unit voters first (see ``unit_voters``).
    """
    _, winner = _veto_scores(E, order, None)
    return winner


def k_round_plurality_veto(
    E: ElectionInstance, order: Sequence[int] | None = None, k: int = 0
) -> CandidateDistribution:
    """Run only the first ``k`` vetoes, then pick proportionally to remaining score."""
    scores, last = _veto_scores(E, order, k)
    if sum(scores) == 0:
        return CandidateDistribution.point_mass(E.m, last)
    return CandidateDistribution.from_weights([Fraction(s) for s in scores])


def condorcet_payoff(E: ElectionInstance) -> np.ndarray:
    """Payoff matrix of the Condorcet game (margins with 1/2 on the diagonal)."""
    return pairwise_margins(E, HALF).as_array()


def maximal_lotteries(E: ElectionInstance, backend: str = "auto") -> CandidateDistribution:
    """Row strategy of an equilibrium of the Condorcet game.

    When the game has several equilibria, whichever the LP solver lands on is
    returned; callers should check equilibrium properties, not a specific vector.
    """
    return solve_zero_sum(condorcet_payoff(E), backend).row_strategy


def rcb_choice(ranking: Sequence[int], s, beta) -> int:
    """Candidate chosen when the voter with ``ranking`` is the consensus builder.

    Walks up the ranking from the bottom; the candidate under consideration
    knocks out everyone the voter prefers to it whom it beats by at least
    ``beta``.  Knocked-out candidates stay out.
    """
    m = len(ranking)
    eliminated = [False] * m  # indexed by position in ranking
    pos = m - 1
    while True:
        i = ranking[pos]
        for above in range(pos):
            if not eliminated[above] and meets(s[i][ranking[above]], beta):
                eliminated[above] = True
        nxt = pos - 1
        while nxt >= 0 and eliminated[nxt]:
            nxt -= 1
        if nxt < 0:
            return i
        pos = nxt


def _mix_by_voter(E: ElectionInstance, picks: Sequence[int]) -> CandidateDistribution:
    p = [Fraction(0)] * E.m
    for w, c in zip(E.weights, picks):
        p[c] += w
    return CandidateDistribution(tuple(p))


def rcb(E: ElectionInstance, beta) -> CandidateDistribution:
    """beta-Random Consensus Builder."""
    beta = check_beta(beta)
    s = pairwise_margins(E).s
    return _mix_by_voter(E, [rcb_choice(r, s, beta) for r in E.rankings])


def covering_relation(E: ElectionInstance, beta) -> set[tuple[int, int]]:
    """Pairs ``(a, b)``: ``s[a > b] >= beta`` and every ``c`` with
    ``s[c > a] >= beta`` also has ``s[c > b] >= beta``."""
    beta = check_beta(beta)
    s = pairwise_margins(E).s
    m = E.m
    strong = [[a != b and meets(s[a][b], beta) for b in range(m)] for a in range(m)]
    covers = set()
    for a in range(m):
        for b in range(m):
            if strong[a][b] and all(strong[c][b] for c in range(m) if strong[c][a]):
                covers.add((a, b))
    return covers


def weighted_uncovered_set(E: ElectionInstance, beta) -> frozenset[int]:
    covered = {b for _, b in covering_relation(E, beta)}
    return frozenset(c for c in range(E.m) if c not in covered)


def _favorite_in(ranking: Sequence[int], allowed) -> int:
    for c in ranking:
        if c in allowed:
            return c
    raise ValueError("allowed set is empty")


def radius(E: ElectionInstance, beta) -> CandidateDistribution:
    """beta-RaDiUS: a random voter's favorite member of the weighted uncovered set."""
    U = weighted_uncovered_set(E, beta)
    assert U, "the weighted uncovered set is never empty"
    return _mix_by_voter(E, [_favorite_in(r, U) for r in E.rankings])


def beta_digraph(E: ElectionInstance, beta) -> set[tuple[int, int]]:
    """Edges ``(a, b)`` with ``s[a > b] >= beta``."""
    beta = check_beta(beta)
    s = pairwise_margins(E).s
    return {(a, b) for a in range(E.m) for b in range(E.m) if a != b and meets(s[a][b], beta)}


def rddmis_survivors(E: ElectionInstance, beta, order: Sequence[int] | None = None) -> frozenset[int]:
    """Independent, 2-step dominating set of the beta-digraph via a forward and a backward sweep."""
    edges = beta_digraph(E, beta)
    order = list(range(E.m)) if order is None else [int(c) for c in order]
    if sorted(order) != list(range(E.m)):
        raise ValueError("order must be a permutation of the candidates")
    out = set()
    m = len(order)
    for idx in range(m):
        a = order[idx]
        if a in out:
            continue
        out.update(order[j] for j in range(idx + 1, m) if (a, order[j]) in edges)
    for idx in range(m - 1, -1, -1):
        a = order[idx]
        if a in out:
            continue
        out.update(order[j] for j in range(idx) if (a, order[j]) in edges)
    return frozenset(c for c in order if c not in out)


def rddmis(E: ElectionInstance, beta, order: Sequence[int] | None = None) -> CandidateDistribution:
    """beta-RDDMIS: random dictatorship restricted to :func:`rddmis_survivors`."""
    U = rddmis_survivors(E, beta, order)
    return _mix_by_voter(E, [_favorite_in(r, U) for r in E.rankings])


def _has_perfect_matching(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    match = maximum_bipartite_matching(sp.csr_matrix(adj.astype(np.int8)), perm_type="column")
    return int((match >= 0).sum()) == n


def _positions(voters) -> np.ndarray:
    m = len(voters[0])
    pos = np.empty((len(voters), m), dtype=np.int64)
    for v, r in enumerate(voters):
        pos[v, list(r)] = np.arange(m)
    return pos


def matching_uncovered_member(E: ElectionInstance, a: int) -> bool:
    """``a`` is in the matching uncovered set: for every ``b != a`` the graph
    linking ``v`` to ``v'`` whenever some ``c`` has ``a >=_v c`` and
    ``c >=_{v'} b`` has a perfect matching."""
    voters = unit_voters(E)
    pos = _positions(voters)
    below_a = pos >= pos[:, [a]]  # below_a[v, c]: a is weakly above c for v
    for b in range(E.m):
        if b == a:
            continue
        above_b = pos <= pos[:, [b]]  # above_b[v', c]: c is weakly above b for v'
        adj = (below_a.astype(np.int64) @ above_b.T.astype(np.int64)) > 0
        if not _has_perfect_matching(adj):
            return False
    return True


def matching_uncovered_set(E: ElectionInstance) -> frozenset[int]:
    return frozenset(a for a in range(E.m) if matching_uncovered_member(E, a))


def domination_graph_member(E: ElectionInstance, a: int) -> bool:
    """The domination graph of ``a`` (``v -> v'`` when ``a >=_v top(v')``) has a perfect matching."""
    voters = unit_voters(E)
    pos = _positions(voters)
    tops = np.array([r[0] for r in voters])
    adj = pos[:, [a]] <= pos[:, tops]
    return _has_perfect_matching(adj)


RULE_KINDS = (
    "rd", "smart_rd", "pv", "kpv", "ml", "rcb", "radius", "rddmis", "mix_rcb", "mix_radius",
)


@dataclass(frozen=True)
class RuleSpec:
    """A rule name plus its parameters, as written on the command line.

    Grammar: ``ml | rd | smart_rd | pv | kpv:k=<int> | rcb:beta=<num> |
    radius:beta=<num> | rddmis:beta=<num> | mix_rcb | mix_radius:B=<float>``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule {self.kind!r}; choose from {', '.join(RULE_KINDS)}")
        if self.kind in ("rcb", "radius", "rddmis"):
            if "beta" not in self.params:
                raise ValueError(f"rule {self.kind} needs beta=<value>")
            self.params["beta"] = check_beta(self.params["beta"])
        if self.kind == "kpv":
            if "k" not in self.params:
                raise ValueError("rule kpv needs k=<int>")
            self.params["k"] = int(self.params["k"])
            if self.params["k"] < 0:
                raise ValueError("k must be nonnegative")
        if self.kind == "mix_radius":
            B = float(self.params.get("B", 0.876353))
            if not 0.5 < B < 1:
                raise ValueError("B must lie strictly between 1/2 and 1")
            self.params["B"] = B

    def __str__(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v}" for k, v in self.params.items())

    def __call__(self, E: ElectionInstance) -> CandidateDistribution:
        from . import mixtures

        kind, prm = self.kind, self.params
        if kind == "rd":
            return random_dictatorship(E)
        if kind == "smart_rd":
            return smart_dictatorship(E)
        if kind == "pv":
            return CandidateDistribution.point_mass(E.m, plurality_veto(E))
        if kind == "kpv":
            return k_round_plurality_veto(E, None, prm["k"])
        if kind == "ml":
            return maximal_lotteries(E)
        if kind == "rcb":
            return rcb(E, prm["beta"])
        if kind == "radius":
            return radius(E, prm["beta"])
        if kind == "rddmis":
            return rddmis(E, prm["beta"])
        if kind == "mix_rcb":
            return mixtures.mix_ml_rcb(E)
        return mixtures.mix_ml_radius(E, prm["B"])


def parse_rule(text: str) -> RuleSpec:
    text = text.strip()
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"rule parameter {item!r} must look like name=value")
        value = value.strip()
        params[key.strip()] = as_rational(value) if key.strip() == "beta" else value
    return RuleSpec(kind.strip().lower(), params)
