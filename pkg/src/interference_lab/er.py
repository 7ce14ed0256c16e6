"""Random-graph moments, the finite-n variance envelope, and regime sweeps.

For a graph drawn edge-by-edge with probability p, the degree of a node is
binomial, so graph-averages of 2^(neighborhood size) have product closed
forms; the same trick handles the shared-neighborhood size of a node pair.
Everything here is k=1 (interference through direct neighbors), the regime
in which the closed forms are available; general radii stay available in the
exact-analysis module.

The envelope ``h_bound`` plugs those moments into the closed-form variance
with all outcome products frozen at a single level C, giving the sandwich
h(K) <= E_graph[variance] <= h(M) for outcome levels separated from the
bounds.  Its behavior splits by density: along p = 1/n the product moments
stay bounded and the envelope decays like 1/n, while along p = 1/sqrt(n)
the per-node moment alone forces a diverging lower bound.

Closed forms are evaluated directly up to the float range and fall back to
a log-space overflow guard beyond it (n up to 10^6 stays finite wherever
the true value is finite in double precision).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernels import er_moment_scan, er_variance_scan, ht_variance_terms
from .designs import ENUMERATION_CAP
from .errors import CapacityError, InvalidArgumentError
from .graphs import Graph, NeighborhoodIndex

SPARSE = "sparse"
DENSE = "dense"

# Largest closed neighborhood an MC replicate may carry: 2^30 weights keep
# the per-graph closed form comfortably inside double range.
MC_NEIGHBORHOOD_CAP = 30

_EXP_OVERFLOW = 709.0  # exp() overflows just above this


@dataclass(frozen=True)
class ERSpec:
    """Node count and edge probability of the random-graph model."""

    n: int
    p: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidArgumentError("pairwise moments need n >= 2")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError(f"edge probability must be in [0,1], got {self.p}")


def _guarded_power(base: float, exponent: int) -> float:
    """base**exponent with a log-space overflow guard (base >= 0, int exp)."""
    if exponent < 0:
        raise InvalidArgumentError("negative exponents not used here")
    if base == 0.0:
        return 1.0 if exponent == 0 else 0.0
    if exponent * math.log(base) > _EXP_OVERFLOW:
        return math.inf
    return base**exponent


def moment_two_pow_nbhd(spec: ERSpec) -> float:
    """Graph-average of 2^(closed neighborhood size): 2 (1+p)^(n-1)."""
    return 2.0 * _guarded_power(1.0 + spec.p, spec.n - 1)


def moment_two_pow_shared(spec: ERSpec) -> float:
    """Graph-average of 2^(shared closed-neighborhood size of a node pair):
    (3p+1) (1+p^2)^(n-2)."""
    return (3.0 * spec.p + 1.0) * _guarded_power(1.0 + spec.p * spec.p, spec.n - 2)


def prob_no_common(spec: ERSpec) -> float:
    """Probability a node pair's closed neighborhoods are disjoint:
    (1-p) (1-p^2)^(n-2)."""
    return (1.0 - spec.p) * _guarded_power(1.0 - spec.p * spec.p, spec.n - 2)


def h_bound(c: float, spec: ERSpec) -> float:
    """The four-term finite-n envelope at outcome level c (c > 0)."""
    if c <= 0:
        raise InvalidArgumentError(f"outcome level must be positive, got {c}")
    n = spec.n
    terms = (
        (moment_two_pow_nbhd(spec) - 1.0) / n
        + (moment_two_pow_shared(spec) - 1.0)
        + 1.0 / n
        + (1.0 - prob_no_common(spec))
    )
    return 2.0 * terms * c * c


def dense_lower_bound(n: int, k_lower: float) -> float:
    """4 e^((n-1)/sqrt(n)) K^2 / n, the diverging floor along p = 1/sqrt(n)."""
    if k_lower <= 0:
        raise InvalidArgumentError(f"lower outcome level must be positive, got {k_lower}")
    arg = (n - 1) / math.sqrt(n)
    if arg > _EXP_OVERFLOW:
        return math.inf
    return 4.0 * math.exp(arg) * k_lower * k_lower / n


@dataclass(frozen=True)
class RegimeReport:
    """One point of an Example-style sweep: the bound value at this n and
    whether the regime's variance envelope vanishes or diverges with n."""

    n: int
    regime: str
    p: float
    value: float
    trend: str

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "regime": self.regime,
            "p": self.p,
            "value": self.value,
            "trend": self.trend,
        }


def regime_report(n: int, regime: str, k_lower: float, m_upper: float) -> RegimeReport:
    """Evaluate the regime's bound at one n.

    Sparse (p = 1/n): the upper envelope h(M); n * value stays bounded over
    a sweep.  Dense (p = 1/sqrt(n)): the lower bound with K; strictly
    increasing in n.
    """
    if n < 4:
        raise InvalidArgumentError(f"regime sweeps need n >= 4, got {n}")
    if regime == SPARSE:
        p = 1.0 / n
        return RegimeReport(n, SPARSE, p, h_bound(m_upper, ERSpec(n, p)), "vanishing")
    if regime == DENSE:
        p = 1.0 / math.sqrt(n)
        return RegimeReport(n, DENSE, p, dense_lower_bound(n, k_lower), "diverging")
    raise InvalidArgumentError(f"regime must be 'sparse' or 'dense', got {regime!r}")


def classify_regime(spec: ERSpec) -> str:
    if spec.p < 1.0 / spec.n:
        return SPARSE
    if spec.p >= 1.0 / math.sqrt(spec.n):
        return DENSE
    return "intermediate"


def expected_effective_treatments(spec: ERSpec) -> float:
    """Graph-average count of effective treatments per unit: 2 (1+p)^(n-1).

    Along p = 1/n this converges to 2e; along p = 1/sqrt(n) it diverges.
    """
    return 2.0 * _guarded_power(1.0 + spec.p, spec.n - 1)


def expected_informative_fraction(spec: ERSpec) -> float:
    """Graph-average fraction of assignments sharing a unit's effective
    treatment: (1/2) (1 - p/2)^(n-1).

    Along p = 1/n this converges to 1/(2 sqrt(e)); along p = 1/sqrt(n) it
    vanishes.
    """
    return 0.5 * _guarded_power(1.0 - spec.p / 2.0, spec.n - 1)


# ----------------------------------------------------------------------
# Sampling and Monte Carlo


def sample_er_graph(spec: ERSpec, seed: int) -> Graph:
    """One graph draw; pair (i, j) order is lexicographic, deterministic."""
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            if rng.random() < spec.p:
                edges.append((i, j))
    return Graph.from_edges(spec.n, edges)


@dataclass(frozen=True)
class ConstantOutcomes:
    """Every unit's pure-arm outcomes pinned at one level."""

    value: float


@dataclass(frozen=True)
class UniformOutcomes:
    """Pure-arm outcomes drawn uniformly in (k_lower, m_upper) per replicate."""

    k_lower: float
    m_upper: float


TablePolicy = Union[ConstantOutcomes, UniformOutcomes]


@dataclass(frozen=True)
class MCVariance:
    mean: float
    stderr: float
    reps_used: int
    reps_rejected: int


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("INTERFERENCE_LAB_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return 1


def _enumerated_variance(masks: np.ndarray, y_a: np.ndarray, y_b: np.ndarray) -> float:
    """Assignment-level variance of the exposure-weighted estimator: iterate
    the whole fair-coin support instead of using the pairwise closed form.
    Exact and deterministic, exponential in n; the slow cross-check path."""
    n = masks.shape[0]
    weights = [2.0 ** int((int(m)).bit_count()) for m in masks]
    int_masks = [int(m) for m in masks]
    values = []
    for code in range(1 << n):
        total = 0.0
        for i in range(n):
            hit = code & int_masks[i]
            if hit == 0:
                total += weights[i] * y_a[i]
            elif hit == int_masks[i]:
                total -= weights[i] * y_b[i]
        values.append(total / n)
    mean = math.fsum(values) / len(values)
    return math.fsum((v - mean) ** 2 for v in values) / len(values)


def _replicate_variance(
    spec: ERSpec,
    policy: TablePolicy,
    seed: int,
    rep: int,
    max_nbhd: int,
    assignment_level: bool,
) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
    n = spec.n
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < spec.p:
                edges.append((i, j))
    index = NeighborhoodIndex.build(Graph.from_edges(n, edges), 1)
    if max(len(ball) for ball in index.closed) > max_nbhd:
        return math.nan
    if isinstance(policy, ConstantOutcomes):
        y_a = np.full(n, policy.value)
        y_b = np.full(n, policy.value)
    else:
        y_a = rng.uniform(policy.k_lower, policy.m_upper, size=n)
        y_b = rng.uniform(policy.k_lower, policy.m_upper, size=n)
    if assignment_level:
        return _enumerated_variance(index.masks(), y_a, y_b)
    v_a, v_b, cov = ht_variance_terms(index.masks(), y_a, y_b)
    return v_a + v_b - 2.0 * cov


def mc_expected_variance(
    spec: ERSpec,
    policy: TablePolicy,
    reps: int,
    seed: int,
    k: int = 1,
    threads: int | None = None,
    max_nbhd: int = MC_NEIGHBORHOOD_CAP,
    assignment_level: bool = False,
) -> MCVariance:
    """Monte Carlo estimate of the graph-expected estimator variance.

    Each replicate draws a graph, builds pure-arm outcomes per the policy,
    and evaluates the per-graph closed-form variance (cheaper and tighter
    than walking assignments).  ``assignment_level=True`` switches each
    replicate to full support enumeration instead: exponentially slower, but
    an independent cross-check of the closed form (needs n within the
    enumeration cap).  Replicates are seeded by (seed, index), so the
    estimate is identical for any thread count.  Replicates whose largest
    neighborhood exceeds the cap are rejected and counted.
    """
    if reps < 2:
        raise InvalidArgumentError(f"need reps >= 2, got {reps}")
    if k != 1:
        raise InvalidArgumentError("the closed-form path is built for k=1")
    if assignment_level and spec.n > ENUMERATION_CAP:
        raise CapacityError(
            f"assignment-level cross-checks enumerate 2^n; capped at n={ENUMERATION_CAP}"
        )
    workers = _thread_count(threads)
    indices = range(reps)

    def one(r: int) -> float:
        return _replicate_variance(spec, policy, seed, r, max_nbhd, assignment_level)

    if workers == 1:
        values = [one(r) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, indices))
    kept = [v for v in values if not math.isnan(v)]
    rejected = reps - len(kept)
    if len(kept) < 2:
        raise CapacityError(
            f"{rejected} of {reps} replicates exceeded the neighborhood cap "
            f"({max_nbhd}); nothing left to average"
        )
    mean = math.fsum(kept) / len(kept)
    sample_var = math.fsum((v - mean) ** 2 for v in kept) / (len(kept) - 1)
    return MCVariance(mean, math.sqrt(sample_var / len(kept)), len(kept), rejected)


# ----------------------------------------------------------------------
# Exhaustive oracles (all 2^(n(n-1)/2) graphs; n <= 7)


def exhaustive_expected_variance(spec: ERSpec, c: float) -> float:
    """Exact graph-expectation of the closed-form variance at constant
    outcome level c, by enumerating every graph."""
    return er_variance_scan(spec.n, spec.p, c)


@dataclass(frozen=True)
class ERMomentOracle:
    two_pow_nbhd: float
    two_pow_shared: float
    prob_no_common: float


def exhaustive_moments(spec: ERSpec) -> ERMomentOracle:
    """The three closed-form moments recomputed by full graph enumeration."""
    m1, m2, p0 = er_moment_scan(spec.n, spec.p)
    return ERMomentOracle(m1, m2, p0)
