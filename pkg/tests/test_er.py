"""Random-graph closed forms against exhaustive and Monte Carlo oracles.

Claims pinned here:
    - the three product-form moments equal full graph enumeration bit for
      bit at n in {2,3,4} on dyadic edge probabilities, and to 1e-12 off
      the dyadic grid
    - the variance envelope: value 4 C^2/n at p=0, hand value at n=3,
      monotone non-decreasing in p, and sandwiching the exact
      graph-expected variance for separated outcome levels
    - sweep behavior: n * h bounded along p=1/n, strictly increasing lower
      bound along p=1/sqrt(n)
    - the expected effective-treatment count and informative fraction hit
      their analytic limits
    - Monte Carlo replication is seed-deterministic, thread-count
      invariant, and lands within three standard errors of enumeration
"""

import math

import numpy as np
import pytest

from interference_lab import (
    CapacityError,
    NeighborhoodIndex,
    ConstantOutcomes,
    ERSpec,
    Graph,
    InvalidArgumentError,
    UniformOutcomes,
    classify_regime,
    dense_lower_bound,
    exhaustive_expected_variance,
    exhaustive_moments,
    expected_effective_treatments,
    expected_informative_fraction,
    h_bound,
    mc_expected_variance,
    moment_two_pow_nbhd,
    moment_two_pow_shared,
    prob_no_common,
    regime_report,
    sample_er_graph,
)


def test_moment_values():
    spec = ERSpec(3, 0.5)
    assert moment_two_pow_nbhd(spec) == 4.5
    assert moment_two_pow_shared(spec) == 3.125
    assert prob_no_common(spec) == 0.375


def test_moment_edge_probabilities():
    assert moment_two_pow_nbhd(ERSpec(6, 0.0)) == 2.0
    assert moment_two_pow_nbhd(ERSpec(6, 1.0)) == 64.0
    assert moment_two_pow_shared(ERSpec(3, 0.0)) == 1.0
    assert moment_two_pow_shared(ERSpec(3, 1.0)) == 8.0
    assert prob_no_common(ERSpec(5, 0.0)) == 1.0
    assert prob_no_common(ERSpec(5, 1.0)) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_moments_match_enumeration_exactly(n, p):
    spec = ERSpec(n, p)
    oracle = exhaustive_moments(spec)
    assert moment_two_pow_nbhd(spec) == oracle.two_pow_nbhd
    assert moment_two_pow_shared(spec) == oracle.two_pow_shared
    assert prob_no_common(spec) == oracle.prob_no_common


@pytest.mark.parametrize("n", [3, 4, 5])
def test_moments_match_enumeration_off_dyadic(n):
    spec = ERSpec(n, 0.3)
    oracle = exhaustive_moments(spec)
    assert moment_two_pow_nbhd(spec) == pytest.approx(oracle.two_pow_nbhd, rel=1e-12)
    assert moment_two_pow_shared(spec) == pytest.approx(oracle.two_pow_shared, rel=1e-12)
    assert prob_no_common(spec) == pytest.approx(oracle.prob_no_common, rel=1e-12)


def test_h_bound_values():
    assert h_bound(1.0, ERSpec(5, 0.0)) == pytest.approx(4.0 / 5)
    assert h_bound(1.0, ERSpec(3, 0.5)) == pytest.approx(8.5)
    assert h_bound(2.0, ERSpec(3, 0.5)) == pytest.approx(34.0)  # scales as C^2
    with pytest.raises(InvalidArgumentError):
        h_bound(0.0, ERSpec(3, 0.5))


@pytest.mark.parametrize("n", [4, 8, 16])
def test_h_bound_monotone_in_p(n):
    grid = [i * 0.05 for i in range(21)]
    values = [h_bound(1.0, ERSpec(n, p)) for p in grid]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_h_bound_sandwiches_exact_value():
    # constant outcome level separated from both declared bounds
    k_lower, level, m_upper = 1.0, 2.0, 3.0
    for p in (0.1, 0.3, 0.6):
        exact = exhaustive_expected_variance(ERSpec(6, p), level)
        assert h_bound(k_lower, ERSpec(6, p)) <= exact <= h_bound(m_upper, ERSpec(6, p))


def test_exhaustive_variance_closed_form_at_p_zero():
    # empty graph surely: variance is 4 C^2 / n
    assert exhaustive_expected_variance(ERSpec(4, 0.0), 1.5) == pytest.approx(
        4 * 1.5**2 / 4
    )


def test_exhaustive_caps():
    with pytest.raises(ValueError):
        exhaustive_expected_variance(ERSpec(8, 0.5), 1.0)


def test_regime_reports():
    sparse = regime_report(100, "sparse", 1.0, 1.0)
    assert sparse.p == pytest.approx(0.01)
    assert sparse.value == pytest.approx(h_bound(1.0, ERSpec(100, 0.01)))
    assert sparse.trend == "vanishing"
    dense = regime_report(100, "dense", 1.0, 1.0)
    assert dense.p == pytest.approx(0.1)
    assert dense.value == pytest.approx(797.2148175292118)
    assert dense.trend == "diverging"
    with pytest.raises(InvalidArgumentError):
        regime_report(2, "sparse", 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        regime_report(16, "cluster", 1.0, 1.0)


def test_sparse_sweep_stays_bounded():
    values = []
    n = 8
    while n <= 1024:
        values.append(n * regime_report(n, "sparse", 1.0, 1.0).value)
        n *= 2
    assert max(values) <= 3.0 * values[0]


def test_dense_sweep_strictly_increases():
    values = []
    n = 8
    while n <= 1024:
        values.append(regime_report(n, "dense", 1.0, 1.0).value)
        n *= 2
    assert all(b > a for a, b in zip(values, values[1:]))


def test_dense_lower_bound_overflow_guard():
    assert dense_lower_bound(10**6, 1.0) == math.inf
    assert expected_informative_fraction(ERSpec(10**6, 0.5)) == 0.0


def test_classify_regime():
    assert classify_regime(ERSpec(100, 0.001)) == "sparse"
    assert classify_regime(ERSpec(100, 0.5)) == "dense"
    assert classify_regime(ERSpec(100, 0.05)) == "intermediate"


def test_effective_treatment_expectations():
    assert expected_effective_treatments(ERSpec(10, 0.0)) == 2.0
    assert expected_informative_fraction(ERSpec(10, 0.0)) == 0.5
    assert expected_effective_treatments(ERSpec(4, 1.0)) == 16.0
    assert expected_informative_fraction(ERSpec(4, 1.0)) == 0.5**4

    near = expected_effective_treatments(ERSpec(200, 1 / 200))
    assert abs(near - 2 * math.e) / (2 * math.e) < 0.01
    frac = expected_informative_fraction(ERSpec(200, 1 / 200))
    limit = 0.5 * math.exp(-0.5)
    assert abs(frac - limit) / limit < 0.01
    assert expected_informative_fraction(ERSpec(400, 1 / 20)) < 1e-4


def test_expected_counts_match_graph_enumeration():
    spec = ERSpec(4, 0.25)
    oracle = exhaustive_moments(spec)
    assert expected_effective_treatments(spec) == oracle.two_pow_nbhd


def test_moments_match_monte_carlo_at_n8():
    # beyond the exhaustive-scan range: sampled graphs, 4-standard-error gate
    spec = ERSpec(8, 0.35)
    reps = 3000
    nbhd, shared, disjoint = [], [], []
    for rep in range(reps):
        index = NeighborhoodIndex.build(sample_er_graph(spec, 40_000 + rep), 1)
        nbhd.append(2.0 ** len(index.closed[0]))
        inter = index.closed[0] & index.closed[1]
        shared.append(2.0 ** len(inter))
        disjoint.append(1.0 if not inter else 0.0)
    for values, closed in (
        (nbhd, moment_two_pow_nbhd(spec)),
        (shared, moment_two_pow_shared(spec)),
        (disjoint, prob_no_common(spec)),
    ):
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1)) / math.sqrt(reps)
        assert abs(mean - closed) <= 4 * stderr


def test_sample_er_graph_determinism_and_extremes():
    g1 = sample_er_graph(ERSpec(8, 0.4), seed=5)
    g2 = sample_er_graph(ERSpec(8, 0.4), seed=5)
    assert g1 == g2
    assert sample_er_graph(ERSpec(5, 0.0), seed=1) == Graph.empty(5)
    assert sample_er_graph(ERSpec(5, 1.0), seed=1) == Graph.complete(5)


def test_mc_constant_at_p_zero_is_degenerate():
    mc = mc_expected_variance(ERSpec(5, 0.0), ConstantOutcomes(2.0), reps=10, seed=3)
    assert mc.mean == pytest.approx(4 * 2.0**2 / 5)
    assert mc.stderr == 0.0
    assert mc.reps_rejected == 0
    # degenerate sandwich: the envelope at the same level coincides
    assert mc.mean == pytest.approx(h_bound(2.0, ERSpec(5, 0.0)))


def test_mc_determinism_and_thread_invariance():
    spec = ERSpec(6, 0.3)
    a = mc_expected_variance(spec, ConstantOutcomes(1.0), reps=64, seed=9, threads=1)
    b = mc_expected_variance(spec, ConstantOutcomes(1.0), reps=64, seed=9, threads=4)
    assert a == b
    c = mc_expected_variance(spec, UniformOutcomes(0.5, 1.0), reps=64, seed=9, threads=3)
    d = mc_expected_variance(spec, UniformOutcomes(0.5, 1.0), reps=64, seed=9, threads=1)
    assert c == d


def test_mc_within_three_stderr_of_enumeration():
    spec = ERSpec(6, 0.3)
    exact = exhaustive_expected_variance(spec, 1.0)
    mc = mc_expected_variance(spec, ConstantOutcomes(1.0), reps=500, seed=12)
    assert abs(mc.mean - exact) <= 3 * mc.stderr


def test_assignment_level_cross_check_agrees_with_closed_form():
    spec = ERSpec(6, 0.4)
    fast = mc_expected_variance(spec, UniformOutcomes(0.5, 1.5), reps=6, seed=21)
    slow = mc_expected_variance(
        spec, UniformOutcomes(0.5, 1.5), reps=6, seed=21, assignment_level=True
    )
    assert slow.mean == pytest.approx(fast.mean, rel=1e-10)
    assert slow.stderr == pytest.approx(fast.stderr, rel=1e-8, abs=1e-12)
    with pytest.raises(CapacityError):
        mc_expected_variance(
            ERSpec(20, 0.1), ConstantOutcomes(1.0), reps=2, seed=0, assignment_level=True
        )


def test_mc_rejection_accounting():
    spec = ERSpec(8, 1.0)  # complete graph surely; every ball has size 8
    with pytest.raises(CapacityError):
        mc_expected_variance(spec, ConstantOutcomes(1.0), reps=5, seed=0, max_nbhd=2)
    mixed = mc_expected_variance(
        ERSpec(8, 0.5), ConstantOutcomes(1.0), reps=40, seed=0, max_nbhd=6
    )
    assert mixed.reps_rejected > 0
    assert mixed.reps_used + mixed.reps_rejected == 40


def test_mc_validation():
    with pytest.raises(InvalidArgumentError):
        mc_expected_variance(ERSpec(6, 0.3), ConstantOutcomes(1.0), reps=1, seed=0)
    with pytest.raises(InvalidArgumentError):
        mc_expected_variance(ERSpec(6, 0.3), ConstantOutcomes(1.0), reps=10, seed=0, k=2)


def test_erspec_validation():
    with pytest.raises(InvalidArgumentError):
        ERSpec(1, 0.5)
    with pytest.raises(InvalidArgumentError):
        ERSpec(5, 1.5)
