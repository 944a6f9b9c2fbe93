"""Finite-change experimental plans and contrast curves.

A plan over p inputs consists of 2(p+1) labeled runs: the reference state,
the fully shifted state, one run per input with only that input shifted,
and one run per input with everything but that input shifted. Differences
between the right pairs of runs are the contrast curves every downstream
index and regression consumes.

Run labels are part of the file format: `base`, `full`, `only:<factor>`,
`except:<factor>`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    DomainMismatchError,
    DuplicateRunError,
    IncompleteDesignError,
    PlanError,
)
from .smoothing import TimeGrid

BASE_LABEL = "base"
FULL_LABEL = "full"


def only_label(factor_name: str) -> str:
    return f"only:{factor_name}"


def except_label(factor_name: str) -> str:
    return f"except:{factor_name}"


@dataclass(frozen=True)
class InputFactor:
    """One model input with its reference and shifted levels."""

    name: str
    reference_level: str
    shifted_level: str

    def __post_init__(self):
        if self.reference_level == self.shifted_level:
            raise PlanError(f"factor {self.name!r}: reference and shifted levels coincide")


@dataclass(frozen=True)
class ExperimentPlan:
    factors: tuple[InputFactor, ...]
    run_labels: tuple[str, ...]

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def assignment(self, run_label: str) -> dict[str, str]:
        """Full input-level assignment realized by one labeled run."""
        if run_label == BASE_LABEL:
            return {f.name: f.reference_level for f in self.factors}
        if run_label == FULL_LABEL:
            return {f.name: f.shifted_level for f in self.factors}
        kind, _, name = run_label.partition(":")
        if name not in self.factor_names or kind not in ("only", "except"):
            raise PlanError(f"label {run_label!r} not in this plan")
        shift_one = kind == "only"
        return {
            f.name: f.shifted_level if (f.name == name) == shift_one else f.reference_level
            for f in self.factors
        }


def build_plan(factors) -> ExperimentPlan:
    """Assemble the 2(p+1)-run plan for the given factors."""
    factors = tuple(factors)
    if len(factors) < 1:
        raise PlanError("a plan needs at least one factor")
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise PlanError(f"duplicate factor names: {dup}")
    labels = (
        [BASE_LABEL, FULL_LABEL]
        + [only_label(n) for n in names]
        + [except_label(n) for n in names]
    )
    return ExperimentPlan(factors=factors, run_labels=tuple(labels))


@dataclass(frozen=True)
class RunRecord:
    """One observed model run: identity, label, and its smooth curve.

    `curve` is any object exposing `domain` and `values_on(grid)`;
    normally a FunctionalSample, or a GridCurve for synthetic data.
    """

    model_id: str
    run_label: str
    curve: object


def validate_runs(plan: ExperimentPlan, runs) -> dict[str, dict[str, RunRecord]]:
    """Group runs by model and check the plan is complete for each.

    Returns {model_id: {run_label: RunRecord}} with models in first-seen
    order. Raises on missing labels, duplicate (model, label) pairs,
    stray labels, or curves with differing domains.
    """
    runs = list(runs)
    if not runs:
        raise IncompleteDesignError("no runs supplied")
    labels = set(plan.run_labels)
    grouped: dict[str, dict[str, RunRecord]] = {}
    for record in runs:
        if record.run_label not in labels:
            raise IncompleteDesignError(
                f"model {record.model_id!r}: label {record.run_label!r} not in the plan"
            )
        by_label = grouped.setdefault(record.model_id, {})
        if record.run_label in by_label:
            raise DuplicateRunError(
                f"duplicate run for model {record.model_id!r}, label {record.run_label!r}"
            )
        by_label[record.run_label] = record
    for model_id, by_label in grouped.items():
        for label in plan.run_labels:
            if label not in by_label:
                raise IncompleteDesignError(
                    f"model {model_id!r} is missing run label {label!r}"
                )
    reference = runs[0].curve.domain
    scale = max(abs(reference[0]), abs(reference[1]), 1.0)
    for record in runs:
        lo, hi = record.curve.domain
        if abs(lo - reference[0]) > 1e-9 * scale or abs(hi - reference[1]) > 1e-9 * scale:
            raise DomainMismatchError(
                f"model {record.model_id!r}, label {record.run_label!r}: domain "
                f"({lo}, {hi}) differs from ({reference[0]}, {reference[1]})"
            )
    return grouped


@dataclass(frozen=True)
class ContrastSet:
    """The 2p+1 contrast curves of one model, sampled on a shared grid."""

    model_id: str
    grid: TimeGrid
    first_order: dict[str, np.ndarray]
    total_order: dict[str, np.ndarray]
    total_delta: np.ndarray

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(self.first_order)


def compute_contrasts(plan: ExperimentPlan, validated, grid: TimeGrid) -> list[ContrastSet]:
    """Per model: only-minus-base, full-minus-except, and full-minus-base curves."""
    contrast_sets = []
    for model_id, by_label in validated.items():
        lo, hi = by_label[BASE_LABEL].curve.domain
        if grid.points[0] < lo or grid.points[-1] > hi:
            raise DomainError(
                f"evaluation grid [{grid.points[0]}, {grid.points[-1]}] exceeds "
                f"curve domain [{lo}, {hi}]"
            )
        values = {label: by_label[label].curve.values_on(grid) for label in plan.run_labels}
        base = values[BASE_LABEL]
        full = values[FULL_LABEL]
        contrast_sets.append(
            ContrastSet(
                model_id=model_id,
                grid=grid,
                first_order={n: values[only_label(n)] - base for n in plan.factor_names},
                total_order={n: full - values[except_label(n)] for n in plan.factor_names},
                total_delta=full - base,
            )
        )
    return contrast_sets
