"""Existence certificates for unbiased estimators, and worst-case MSE tables.

Unbiasedness must hold for *every* admissible outcome table, so a finite
family of tables yields necessary conditions: one linear constraint per
table on the unknown estimator values at the (assignment, observed-vector)
pairs the family can produce.  Solving the stacked system by least squares
either exhibits a witness estimator (tiny residual) or certifies that even
the finite family is already contradictory (large residual), which settles
the infinite problem a fortiori.

The default family is the smallest one that decides the question: tables
constant at a grid level off the two pure assignments, with the pure rows
sweeping constant vectors over the grid.  For the solo-treatment estimand
the family additionally perturbs one single-treated row at a time, since
constant tables cannot distinguish the single-treated assignments.

Grid levels should be exact binary fractions so observed-vector keys never
drift; the shipped defaults use {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .designs import Assignment, Design, enumerate_support
from .errors import (
    FeasibilityPrecisionError,
    InvalidArgumentError,
    UnsupportedDesignError,
    UnsupportedEstimandError,
)
from .estimators import Estimator, TabularEstimator, observed_key
from .outcomes import (
    AverageTreatmentEffect,
    Estimand,
    PotentialOutcomeTable,
    SoloTreatmentEffect,
    estimand_value,
)

FEASIBLE_TOL = 1e-9
INFEASIBLE_TOL = 1e-6
_CONDITION_CAP = 1e10

# Least-squares systems grow as |grid|^3 * 2^n rows/columns; these caps keep
# them tiny and well scaled.
FEASIBILITY_N_CAP = 6
FEASIBILITY_GRID_CAP = 4


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Outcome of the least-squares existence check.

    Feasible certificates carry a tabular witness whose design-expectation
    reproduces the estimand on every family member within the feasibility
    tolerance.  Infeasible certificates report the smallest attainable
    residual over the family, which exceeds the infeasibility tolerance.
    """

    feasible: bool
    min_residual: float
    family_size: int
    n_unknowns: int
    rank: int
    witness: TabularEstimator | None

    def to_json_dict(self) -> dict:
        return {
            "status": "feasible" if self.feasible else "infeasible",
            "min_residual": self.min_residual,
            "family_size": self.family_size,
            "n_unknowns": self.n_unknowns,
            "rank": self.rank,
        }


def _constant_table(n: int, off_value: float, a_value: float, b_value: float) -> PotentialOutcomeTable:
    matrix = np.full((1 << n, n), float(off_value))
    matrix[0, :] = float(a_value)
    matrix[(1 << n) - 1, :] = float(b_value)
    return PotentialOutcomeTable.arbitrary(matrix)


def _solo_perturbed_table(
    n: int, off_value: float, boundary_value: float, unit: int, solo_value: float
) -> PotentialOutcomeTable:
    matrix = np.full((1 << n, n), float(off_value))
    matrix[0, :] = float(boundary_value)
    matrix[(1 << n) - 1, :] = float(boundary_value)
    matrix[Assignment.solo_a(unit, n).code, :] = float(solo_value)
    return PotentialOutcomeTable.arbitrary(matrix)


def default_witness_family(
    n: int, estimand: Estimand, grid: tuple[float, ...]
) -> list[PotentialOutcomeTable]:
    """The minimal table family that decides unbiasedness for the estimand."""
    family = [
        _constant_table(n, y0, a, b) for y0, a, b in product(grid, repeat=3)
    ]
    if isinstance(estimand, SoloTreatmentEffect):
        for y0 in grid:
            for unit in range(n):
                for v in grid:
                    if v != y0:
                        family.append(_solo_perturbed_table(n, y0, y0, unit, v))
    return family


def unbiased_feasibility(
    design: Design,
    estimand: Estimand,
    outcome_grid,
    witness_family: list[PotentialOutcomeTable] | None = None,
    feasible_tol: float = FEASIBLE_TOL,
    infeasible_tol: float = INFEASIBLE_TOL,
) -> FeasibilityCertificate:
    """Decide whether any estimator is unbiased across the witness family."""
    grid = tuple(float(v) for v in outcome_grid)
    if not grid:
        raise InvalidArgumentError("outcome grid must be nonempty")
    if len(grid) > FEASIBILITY_GRID_CAP:
        raise InvalidArgumentError(f"grid capped at {FEASIBILITY_GRID_CAP} levels")
    if design.n > FEASIBILITY_N_CAP:
        raise InvalidArgumentError(f"feasibility checks capped at n={FEASIBILITY_N_CAP}")
    if witness_family is None:
        witness_family = default_witness_family(design.n, estimand, grid)
    if not witness_family:
        raise InvalidArgumentError("witness family must be nonempty")
    for table in witness_family:
        if table.n != design.n:
            raise InvalidArgumentError("family table size does not match the design")

    support = list(enumerate_support(design))
    columns: dict[tuple[int, tuple[float, ...]], int] = {}
    rows = []
    rhs = []
    for table in witness_family:
        coeffs: dict[int, float] = {}
        for z, p in support:
            key = (z.code, observed_key(table.observed_vector(z)))
            col = columns.setdefault(key, len(columns))
            coeffs[col] = coeffs.get(col, 0.0) + p
        rows.append(coeffs)
        rhs.append(estimand_value(estimand, table))

    a = np.zeros((len(rows), len(columns)))
    for r, coeffs in enumerate(rows):
        for col, p in coeffs.items():
            a[r, col] = p
    b = np.array(rhs)
    solution, _, rank, singular = np.linalg.lstsq(a, b, rcond=None)
    if rank > 0 and singular[0] / singular[rank - 1] > _CONDITION_CAP:
        raise FeasibilityPrecisionError(
            f"constraint system too ill-conditioned to certify "
            f"(cond ~ {singular[0] / singular[rank - 1]:.2e})"
        )
    residual = float(np.linalg.norm(a @ solution - b))
    if residual <= feasible_tol:
        witness = TabularEstimator(
            {key: float(solution[col]) for key, col in columns.items()}
        )
        return FeasibilityCertificate(
            True, residual, len(witness_family), len(columns), int(rank), witness
        )
    if residual > infeasible_tol:
        return FeasibilityCertificate(
            False, residual, len(witness_family), len(columns), int(rank), None
        )
    raise FeasibilityPrecisionError(
        f"residual {residual:.3e} falls between the feasible ({feasible_tol:.0e}) "
        f"and infeasible ({infeasible_tol:.0e}) tolerances"
    )


@dataclass(frozen=True)
class AdversaryResult:
    """Worst-case table found for an estimator, with its enumerated MSE."""

    table: PotentialOutcomeTable
    mse: float
    floor: float
    estimand_target: float

    def to_json_dict(self) -> dict:
        return {
            "mse": self.mse,
            "floor": self.floor,
            "estimand_target": self.estimand_target,
        }


def mse_adversary(
    estimator: Estimator,
    design: Design,
    estimand: Estimand,
    m_upper: float,
    eps_rel: float = 1e-6,
) -> AdversaryResult:
    """Construct outcomes forcing MSE >= M^2/8 (up to the interior offset).

    The table is constant at M/2 off the two pure assignments, so the
    estimator sees identical data on the whole non-pure support; the pure
    rows are then set to push the estimand as far as possible from whatever
    the estimator answers there.  Both candidate targets (0, attained with
    equal pure rows, and M, approached within the offset eps = eps_rel * M)
    are enumerated and the worse one for the estimator is returned.

    Only the mean-contrast estimand is supported: realizing an arbitrary
    target requires inverting the estimand on constant vectors, which the
    mean contrast admits in closed form.
    """
    if design.kind not in ("crd", "bd"):
        raise UnsupportedDesignError(
            f"the MSE floor is established for crd and bd, got {design.kind!r}"
        )
    if not isinstance(estimand, AverageTreatmentEffect):
        raise UnsupportedEstimandError(
            "the adversary construction needs the mean-contrast estimand "
            "(it must realize targets 0 and M on constant boundary rows)"
        )
    if m_upper <= 0:
        raise InvalidArgumentError(f"need m_upper > 0, got {m_upper}")
    m = float(m_upper)
    eps = eps_rel * m
    half = m / 2.0

    def bounded_table(a_value: float, b_value: float) -> PotentialOutcomeTable:
        n = design.n
        matrix = np.full((1 << n, n), half)
        matrix[0, :] = a_value
        matrix[(1 << n) - 1, :] = b_value
        return PotentialOutcomeTable.arbitrary(matrix, m_upper=m)

    candidates = (
        bounded_table(half, half),  # target 0 exactly
        bounded_table(m - eps, eps),  # target m - 2 eps
    )
    best: tuple[float, PotentialOutcomeTable, float] | None = None
    for table in candidates:
        theta = estimand_value(estimand, table)
        mse = math.fsum(
            p * (float(estimator(z, table.observed_vector(z))) - theta) ** 2
            for z, p in enumerate_support(design)
        )
        if best is None or mse > best[0]:
            best = (mse, table, theta)
    assert best is not None
    mse, table, theta = best
    floor = m * m / 8.0 * (1.0 - 10.0 * eps / m)
    if mse < floor:
        raise RuntimeError(
            f"adversarial MSE {mse} fell below the guaranteed floor {floor}"
        )
    return AdversaryResult(table, mse, floor, theta)
