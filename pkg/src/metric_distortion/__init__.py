"""Metric distortion of randomized voting rules: rules, biased metrics and exact LP oracles."""

from .distortion import DistortionReport, biased_ratio, exact_distortion, search_worst_biased
from .election import (
    CandidateDistribution,
    ElectionInstance,
    gen_radius_lb,
    gen_random,
    gen_rcb_lb,
    load_instance,
    pairwise_margins,
    plurality,
)
from .metrics import BiasedVector, MetricSpace, biased_metric
from .mixtures import mix_ml_radius, mix_ml_rcb
from .rules import maximal_lotteries, parse_rule, radius, rcb, rddmis

__all__ = [
    "BiasedVector",
    "CandidateDistribution",
    "DistortionReport",
    "ElectionInstance",
    "MetricSpace",
    "biased_metric",
    "biased_ratio",
    "exact_distortion",
    "gen_radius_lb",
    "gen_random",
    "gen_rcb_lb",
    "load_instance",
    "maximal_lotteries",
    "mix_ml_radius",
    "mix_ml_rcb",
    "pairwise_margins",
    "parse_rule",
    "plurality",
    "radius",
    "rcb",
    "rddmis",
    "search_worst_biased",
]
