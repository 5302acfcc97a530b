import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metric_distortion.election import (
    HALF,
    CandidateDistribution,
    ElectionInstance,
    gen_radius_lb,
    pairwise_margins,
    plurality,
    unit_voters,
)
from metric_distortion.lp import best_response_gap
from metric_distortion.rules import (
    RuleSpec,
    beta_digraph,
    condorcet_payoff,
    covering_relation,
    domination_graph_member,
    k_round_plurality_veto,
    matching_uncovered_member,
    matching_uncovered_set,
    maximal_lotteries,
    parse_rule,
    plurality_veto,
    radius,
    random_dictatorship,
    rcb,
    rddmis,
    rddmis_survivors,
    smart_dictatorship,
    weighted_uncovered_set,
)

from conftest import betas, corpus, fig1, instances, three_cycle

F = Fraction
PV_EXAMPLE = ElectionInstance.from_rankings(3, [(0, 1, 2), (0, 2, 1), (1, 2, 0)])
UNANIMOUS = ElectionInstance.from_rankings(3, [(2, 0, 1), (2, 1, 0), (2, 0, 1)])
CONDORCET = ElectionInstance.from_rankings(3, [(0, 1, 2), (0, 2, 1), (1, 0, 2)])


def rcb_oracle(E, beta):
    """Literal replay of the consensus-builder loop with explicit candidate sets."""
    s = pairwise_margins(E)
    out = [F(0)] * E.m
    for w, ranking in zip(E.weights, E.rankings):
        rank = {c: r for r, c in enumerate(ranking)}
        alive = set(ranking)
        i = ranking[-1]
        while True:
            alive -= {j for j in alive if rank[j] < rank[i] and s[i, j] >= beta}
            better = [j for j in alive if rank[j] < rank[i]]
            if not better:
                break
            i = max(better, key=rank.get)
        out[i] += w
    return tuple(out)


def veto_oracle(E):
    """Plurality Veto with a dictionary of scores, voters in block order."""
    voters = unit_voters(E)
    score = {c: 0 for c in range(E.m)}
    for r in voters:
        score[r[0]] += 1
    last = None
    for r in voters:
        for c in reversed(r):
            if score[c] > 0:
                score[c] -= 1
                last = c
                break
    return last


def has_perfect_matching_brute(adj):
    n = len(adj)
    return any(all(adj[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def test_random_dictatorship_examples():
    assert random_dictatorship(fig1()).p == (F(1, 2), F(1, 2))
    assert random_dictatorship(UNANIMOUS).p == (0, 0, 1)
    beta = F(7, 10)
    rd = random_dictatorship(gen_radius_lb(beta, 5))
    assert rd[0] == 1 - beta and rd[1] == 0
    assert all(rd[j] == beta / 5 for j in range(2, 7))


def test_smart_dictatorship_examples():
    assert smart_dictatorship(fig1()).p == (F(1, 2), F(1, 2))
    E = ElectionInstance.from_rankings(3, [(0, 1, 2), (0, 2, 1), (1, 0, 2)])
    assert smart_dictatorship(E).p == (F(4, 5), F(1, 5), 0)
    assert smart_dictatorship(UNANIMOUS).p == (0, 0, 1)


def test_plurality_veto_example():
    assert plurality_veto(PV_EXAMPLE) == 0
    assert plurality_veto(PV_EXAMPLE, order=[0, 1, 2]) == 0
    assert plurality_veto(UNANIMOUS) == 2
    assert plurality_veto(UNANIMOUS, order=[2, 1, 0]) == 2


def test_k_round_examples():
    assert k_round_plurality_veto(PV_EXAMPLE, k=1).p == (1, 0, 0)
    assert k_round_plurality_veto(PV_EXAMPLE, k=0) == random_dictatorship(PV_EXAMPLE)
    n = len(unit_voters(PV_EXAMPLE))
    assert k_round_plurality_veto(PV_EXAMPLE, k=n).p == (1, 0, 0)


@given(instances(max_k=4))
def test_plurality_veto_matches_oracle(E):
    assert plurality_veto(E) == veto_oracle(E)
    n = len(unit_voters(E))
    assert k_round_plurality_veto(E, k=n) == CandidateDistribution.point_mass(E.m, veto_oracle(E))
    assert k_round_plurality_veto(E, k=0) == random_dictatorship(E)


def test_ml_condorcet_winner_and_cycle():
    assert maximal_lotteries(CONDORCET).as_array() == pytest.approx([1, 0, 0], abs=1e-9)
    assert maximal_lotteries(three_cycle()).as_array() == pytest.approx([1 / 3] * 3, abs=1e-9)
    D = maximal_lotteries(fig1())
    assert best_response_gap(condorcet_payoff(fig1()), D, D) <= 1e-8


@given(instances(max_m=6))
def test_ml_is_symmetric_equilibrium(E):
    D = maximal_lotteries(E)
    assert D.is_valid(1e-9)
    P = condorcet_payoff(E)
    # symmetric game: D must guarantee 1/2 against every pure reply
    assert float((D.as_array() @ P).min()) >= 0.5 - 1e-8


def test_rcb_examples():
    assert rcb(three_cycle(), F(3, 5)).p == (F(1, 3),) * 3
    assert rcb(three_cycle(), 0.6).p == (F(1, 3),) * 3


@given(instances(), betas())
def test_rcb_matches_oracle_and_stays_uncovered(E, beta):
    D = rcb(E, beta)
    assert D.p == rcb_oracle(E, beta)
    assert D.support() <= weighted_uncovered_set(E, beta)
    assert sum(D) == 1


def test_rcb_near_one_is_random_dictatorship():
    for E in corpus(100):
        s = pairwise_margins(E)
        if max(s.distinct_values(), default=0) < F(99, 100):
            assert rcb(E, F(99, 100)) == random_dictatorship(E)


def test_uncovered_set_examples():
    assert weighted_uncovered_set(gen_radius_lb(F(7, 10), 5), F(7, 10)) == frozenset(range(1, 7))
    assert weighted_uncovered_set(three_cycle(), F(3, 5)) == frozenset({0, 1, 2})
    assert weighted_uncovered_set(UNANIMOUS, F(3, 5)) == frozenset({2})


@given(instances(max_m=6), betas())
def test_covering_transitive_irreflexive_acyclic(E, beta):
    cov = covering_relation(E, beta)
    assert all(a != b for a, b in cov)
    for a, b in cov:
        for c, d in cov:
            if b == c:
                assert (a, d) in cov
        assert (b, a) not in cov
    U = weighted_uncovered_set(E, beta)
    assert U
    for b in set(range(E.m)) - U:
        assert any((a, b) in cov for a in U)


def test_radius_examples():
    beta = F(7, 10)
    for size in (3, 5, 8):
        D = radius(gen_radius_lb(beta, size), beta)
        assert D.support() == set(range(2, size + 2))
    assert radius(three_cycle(), F(3, 5)).p == (F(1, 3),) * 3
    assert radius(UNANIMOUS, F(3, 5)).p == (0, 0, 1)


@given(instances(), betas())
def test_radius_supported_on_uncovered_set(E, beta):
    D = radius(E, beta)
    assert sum(D) == 1
    assert D.support() <= weighted_uncovered_set(E, beta)


def test_rddmis_examples():
    assert rddmis_survivors(three_cycle(), F(3, 5), order=[0, 1, 2]) == frozenset({2})
    assert rddmis(three_cycle(), F(3, 5)).p == (0, 0, 1)
    assert rddmis(fig1(), F(3, 5)) == random_dictatorship(fig1())
    with pytest.raises(ValueError):
        rddmis_survivors(fig1(), F(3, 5), order=[0, 0])


@given(instances(max_m=6), betas(), st.randoms(use_true_random=False))
def test_rddmis_survivors_independent_and_two_step_dominating(E, beta, rnd):
    order = list(range(E.m))
    rnd.shuffle(order)
    U = rddmis_survivors(E, beta, order)
    edges = beta_digraph(E, beta)
    assert U
    assert not any((a, b) in edges for a in U for b in U)
    for c in set(range(E.m)) - U:
        one = any((u, c) in edges for u in U)
        two = any((u, w) in edges and (w, c) in edges for u in U for w in range(E.m))
        assert one or two


def test_matching_examples():
    assert matching_uncovered_member(UNANIMOUS, 2)
    assert domination_graph_member(UNANIMOUS, 2)
    assert matching_uncovered_set(PV_EXAMPLE) == frozenset({0})
    assert [domination_graph_member(PV_EXAMPLE, a) for a in range(3)] == [True, False, False]


def _brute_matching_member(E, a):
    voters = unit_voters(E)
    pos = [{c: r for r, c in enumerate(v)} for v in voters]
    for b in range(E.m):
        if b == a:
            continue
        adj = [
            [any(pv[a] <= pv[c] and qv[c] <= qv[b] for c in range(E.m)) for qv in pos]
            for pv in pos
        ]
        if not has_perfect_matching_brute(adj):
            return False
    return True


@pytest.mark.parametrize("idx", range(40))
def test_matching_membership_matches_brute_force(idx):
    E = corpus(40, seed=77)[idx]
    assert matching_uncovered_set(E) == {a for a in range(E.m) if _brute_matching_member(E, a)}
    assert matching_uncovered_set(E)
    for a in range(E.m):
        if domination_graph_member(E, a):
            assert matching_uncovered_member(E, a)
    assert domination_graph_member(E, plurality_veto(E))


def _grid_distributions(m, steps=4):
    for combo in itertools.product(range(steps + 1), repeat=m):
        if sum(combo) == steps:
            yield np.array(combo) / steps


@given(instances(max_m=3, max_k=4))
def test_condorcet_game_triangle(E):
    P = pairwise_margins(E, HALF).as_array()
    grid = list(_grid_distributions(E.m))
    for A, B, C in itertools.product(grid, repeat=3):
        assert A @ P @ B <= A @ P @ C + C @ P @ B + 1e-12


def test_rule_spec_parsing():
    assert parse_rule("rcb:beta=3/5").params["beta"] == F(3, 5)
    assert parse_rule("rcb:beta=0.6").params["beta"] == F(3, 5)
    assert parse_rule("kpv:k=2").params["k"] == 2
    assert parse_rule("mix_radius:B=0.8").params["B"] == 0.8
    assert parse_rule("mix_radius").params["B"] == 0.876353
    assert str(parse_rule("rcb:beta=3/5")) == "rcb:beta=3/5"
    assert parse_rule("rd")(fig1()) == random_dictatorship(fig1())
    for bad in ("nope", "rcb", "rcb:beta=0.4", "kpv", "kpv:k=-1", "mix_radius:B=1.2", "rcb:beta"):
        with pytest.raises(ValueError):
            parse_rule(bad)


@given(instances())
def test_every_rule_outputs_a_distribution(E):
    for text in ("rd", "smart_rd", "pv", "kpv:k=1", "ml", "rcb:beta=3/5", "radius:beta=3/5", "rddmis:beta=3/5"):
        D = parse_rule(text)(E)
        assert len(D) == E.m
        if text == "ml":
            assert D.is_valid(1e-9)
        else:
            assert D.is_exact and sum(D) == 1 and all(p >= 0 for p in D)


def test_rule_spec_direct_construction():
    spec = RuleSpec("radius", {"beta": "7/10"})
    assert spec.params["beta"] == F(7, 10)
    assert plurality(fig1()) == random_dictatorship(fig1())
