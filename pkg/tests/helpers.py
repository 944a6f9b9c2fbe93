"""Shared scaffolding for building synthetic run sets in tests."""

import numpy as np

from funsens.design import InputFactor, RunRecord, build_plan
from funsens.smoothing import GridCurve, TimeGrid


def simple_factors(p, prefix="x"):
    return [InputFactor(f"{prefix}{i + 1}", "0", "1") for i in range(p)]


def corner_of(plan, label):
    """Binary corner (0/1 per factor) realized by a run label."""
    assignment = plan.assignment(label)
    return tuple(
        1.0 if assignment[f.name] == f.shifted_level else 0.0 for f in plan.factors
    )


def runs_from_corner_function(f, plan, grid: TimeGrid, model_id="m1"):
    """Materialize every labeled run of a plan from a corner function.

    f maps a tuple of 0/1 levels to curve values over grid.points.
    """
    return [
        RunRecord(
            model_id=model_id,
            run_label=label,
            curve=GridCurve(grid, np.asarray(f(corner_of(plan, label)), dtype=float)),
        )
        for label in plan.run_labels
    ]


def bilinear_runs(grid, model_id="m1"):
    """Runs of f(x, t) = 2 x1 + 3 x2 + x1 x2 t for the two-input worked case."""
    plan = build_plan(simple_factors(2))

    def f(x):
        return 2.0 * x[0] + 3.0 * x[1] + x[0] * x[1] * grid.points

    return plan, runs_from_corner_function(f, plan, grid, model_id)
