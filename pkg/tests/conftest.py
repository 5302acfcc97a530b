from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from metric_distortion.election import CandidateDistribution, ElectionInstance, gen_corpus
from metric_distortion.metrics import BiasedVector

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

CORPUS_SEED = 2024


def corpus(trials=500, seed=CORPUS_SEED):
    """The fixed random corpus: m in 2..5, n in 2..6."""
    return [E for _, E in gen_corpus(trials, (2, 5), (2, 6), seed)]


def balanced_corpus(trials=100, seed=CORPUS_SEED, eps=Fraction(1, 10)):
    """Profiles mixed with their reversal so every margin lies in [1/2 - eps, 1/2 + eps]."""
    out = []
    for s, E in gen_corpus(trials, (2, 5), (2, 6), seed):
        rng = np.random.default_rng([s, 2])
        lam = Fraction(1, 2) + eps * Fraction(int(rng.integers(-10, 11)), 10)
        ballots = [(lam * w, list(r)) for w, r in zip(E.weights, E.rankings)]
        ballots += [((1 - lam) * w, list(reversed(r))) for w, r in zip(E.weights, E.rankings)]
        out.append(ElectionInstance.from_ballots(E.m, [b for b in ballots if b[0] > 0]))
    return out


@pytest.fixture(scope="session")
def small_corpus():
    return corpus(60)


def fig1():
    return ElectionInstance.from_ballots(2, [(1, [0, 1]), (1, [1, 0])])


def three_cycle():
    return ElectionInstance.from_rankings(3, [(0, 1, 2), (1, 2, 0), (2, 0, 1)])


def disagreeing(n):
    """n voters, each ranking a different candidate first."""
    return ElectionInstance.from_rankings(
        n, [tuple([i] + [j for j in range(n) if j != i]) for i in range(n)]
    )


def random_biased(rng, m, levels=4):
    i_star = int(rng.integers(m))
    x = [Fraction(int(v)) for v in rng.integers(0, levels, size=m)]
    x[i_star] = Fraction(0)
    return BiasedVector.of(x, i_star)


def random_distribution(rng, m):
    return CandidateDistribution(tuple(float(v) for v in rng.dirichlet(np.ones(m))))


@st.composite
def instances(draw, max_m=5, max_k=5, min_m=1):
    m = draw(st.integers(min_m, max_m))
    k = draw(st.integers(1, max_k))
    ballots = []
    for _ in range(k):
        w = draw(st.integers(1, 5))
        ranking = draw(st.permutations(list(range(m))))
        ballots.append((w, list(ranking)))
    return ElectionInstance.from_ballots(m, ballots)


@st.composite
def instance_and_vector(draw, max_m=5, max_k=5):
    E = draw(instances(max_m=max_m, max_k=max_k))
    i_star = draw(st.integers(0, E.m - 1))
    x = [Fraction(draw(st.integers(0, 6)), draw(st.sampled_from([1, 2, 3]))) for _ in range(E.m)]
    x[i_star] = Fraction(0)
    return E, BiasedVector.of(x, i_star)


@st.composite
def betas(draw):
    num = draw(st.integers(51, 99))
    return Fraction(num, 100)
