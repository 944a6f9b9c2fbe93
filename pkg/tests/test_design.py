"""Plan construction, run validation, and contrast computation."""

import numpy as np
import numpy.testing as npt
import pytest

from funsens.design import (
    ContrastSet,
    InputFactor,
    RunRecord,
    build_plan,
    compute_contrasts,
    validate_runs,
)
from funsens.errors import (
    DomainMismatchError,
    DuplicateRunError,
    IncompleteDesignError,
    PlanError,
)
from funsens.smoothing import GridCurve, TimeGrid

from helpers import bilinear_runs, runs_from_corner_function, simple_factors

DRIVERS = ["END", "FF", "GDPPC", "LC", "POP"]


def driver_factors():
    return [InputFactor(name, "SSP2", "SSP1") for name in DRIVERS]


def small_grid():
    return TimeGrid(np.array([0.0, 0.5, 1.0]))


# ------------------------------------------------------------------ plan


def test_five_factor_plan_has_twelve_runs():
    plan = build_plan(driver_factors())
    assert len(plan.run_labels) == 12
    assert plan.run_labels[:2] == ("base", "full")
    assert "only:GDPPC" in plan.run_labels and "except:POP" in plan.run_labels


def test_single_factor_plan_degenerates():
    plan = build_plan(simple_factors(1))
    assert len(plan.run_labels) == 4
    assert plan.assignment("only:x1") == plan.assignment("full")
    assert plan.assignment("except:x1") == plan.assignment("base")


def test_two_factor_label_schema():
    plan = build_plan(simple_factors(2))
    assert set(plan.run_labels) == {"base", "full", "only:x1", "only:x2", "except:x1", "except:x2"}


@pytest.mark.parametrize("p", [1, 2, 3, 5, 8])
def test_label_count_law(p):
    plan = build_plan(simple_factors(p))
    assert len(plan.run_labels) == 2 * p + 2


def test_duplicate_factor_names_rejected():
    with pytest.raises(PlanError):
        build_plan([InputFactor("a", "0", "1"), InputFactor("a", "1", "2")])
    with pytest.raises(PlanError):
        build_plan([])


def test_equal_levels_rejected():
    with pytest.raises(PlanError):
        InputFactor("a", "SSP2", "SSP2")


def test_assignment_shifts_the_right_inputs():
    plan = build_plan(driver_factors())
    only_ff = plan.assignment("only:FF")
    assert only_ff["FF"] == "SSP1"
    assert all(only_ff[n] == "SSP2" for n in DRIVERS if n != "FF")
    except_ff = plan.assignment("except:FF")
    assert except_ff["FF"] == "SSP2"
    assert all(except_ff[n] == "SSP1" for n in DRIVERS if n != "FF")


# ------------------------------------------------------------- validation


def constant_runs(plan, model_ids, grid):
    return [
        RunRecord(m, label, GridCurve(grid, np.zeros(len(grid))))
        for m in model_ids
        for label in plan.run_labels
    ]


def test_validate_groups_five_complete_models():
    plan = build_plan(driver_factors())
    grid = small_grid()
    models = ["IMAGE", "IMACLIM", "MESSAGE", "TIAM", "WITCH"]
    runs = constant_runs(plan, models, grid)
    assert len(runs) == 60
    grouped = validate_runs(plan, runs)
    assert list(grouped) == models
    assert all(len(v) == 12 for v in grouped.values())


def test_validate_empty_input():
    plan = build_plan(driver_factors())
    with pytest.raises(IncompleteDesignError):
        validate_runs(plan, [])


def test_validate_names_missing_pair():
    plan = build_plan(driver_factors())
    runs = constant_runs(plan, ["m1"], small_grid())
    runs = [r for r in runs if r.run_label != "except:FF"]
    with pytest.raises(IncompleteDesignError, match="m1.*except:FF"):
        validate_runs(plan, runs)


def test_validate_rejects_duplicates():
    plan = build_plan(driver_factors())
    runs = constant_runs(plan, ["m1"], small_grid())
    with pytest.raises(DuplicateRunError):
        validate_runs(plan, runs + [runs[0]])


def test_validate_rejects_stray_label():
    plan = build_plan(driver_factors())
    runs = constant_runs(plan, ["m1"], small_grid())
    runs[3] = RunRecord("m1", "shifted:FF", runs[3].curve)
    with pytest.raises(IncompleteDesignError):
        validate_runs(plan, runs)


def test_validate_rejects_domain_mismatch():
    plan = build_plan(simple_factors(1))
    grid_a = small_grid()
    grid_b = TimeGrid(np.array([0.0, 0.5, 2.0]))
    runs = constant_runs(plan, ["m1"], grid_a)
    runs[-1] = RunRecord("m1", runs[-1].run_label, GridCurve(grid_b, np.zeros(3)))
    with pytest.raises(DomainMismatchError):
        validate_runs(plan, runs)


# -------------------------------------------------------------- contrasts


def test_contrast_count_for_paper_shape():
    plan = build_plan(driver_factors())
    grid = small_grid()
    models = [f"m{k}" for k in range(5)]
    grouped = validate_runs(plan, constant_runs(plan, models, grid))
    sets = compute_contrasts(plan, grouped, grid)
    assert len(sets) == 5
    per_model = [len(s.first_order) + len(s.total_order) + 1 for s in sets]
    assert per_model == [11] * 5
    assert sum(per_model) == 55


def test_identical_base_and_full_gives_zero_delta():
    plan = build_plan(simple_factors(2))
    grid = small_grid()
    runs = runs_from_corner_function(lambda x: np.full(3, 7.0), plan, grid)
    sets = compute_contrasts(plan, validate_runs(plan, runs), grid)
    npt.assert_array_equal(sets[0].total_delta, np.zeros(3))


def test_bilinear_contrasts_match_corner_oracle():
    grid = small_grid()
    plan, runs = bilinear_runs(grid)
    (cs,) = compute_contrasts(plan, validate_runs(plan, runs), grid)
    t = grid.points
    npt.assert_allclose(cs.total_delta, 5.0 + t, atol=1e-12)
    npt.assert_allclose(cs.first_order["x1"], np.full(3, 2.0), atol=1e-12)
    npt.assert_allclose(cs.first_order["x2"], np.full(3, 3.0), atol=1e-12)
    npt.assert_allclose(cs.total_order["x1"], 2.0 + t, atol=1e-12)
    npt.assert_allclose(cs.total_order["x2"], 3.0 + t, atol=1e-12)


def test_swapping_levels_negates_contrasts():
    grid = small_grid()
    rng = np.random.default_rng(13)
    table = {tuple(c): rng.normal(size=3) for c in np.ndindex(2, 2, 2)}

    def materialize(plan):
        # runs evaluated at the raw level values, not shifted-indicators
        records = []
        for label in plan.run_labels:
            assignment = plan.assignment(label)
            corner = tuple(int(assignment[f.name]) for f in plan.factors)
            records.append(RunRecord("m1", label, GridCurve(grid, table[corner])))
        return records

    plan_fwd = build_plan(simple_factors(3))
    swapped = [InputFactor(f"x{i + 1}", "1", "0") for i in range(3)]
    plan_rev = build_plan(swapped)
    sets_fwd = compute_contrasts(plan_fwd, validate_runs(plan_fwd, materialize(plan_fwd)), grid)
    sets_rev = compute_contrasts(plan_rev, validate_runs(plan_rev, materialize(plan_rev)), grid)
    fwd, rev = sets_fwd[0], sets_rev[0]
    npt.assert_allclose(rev.total_delta, -fwd.total_delta, atol=1e-12)
    # each physical run pair keeps its two runs but swaps kind under the
    # relabeling, so first-order contrasts negate into total-order ones
    for name in plan_fwd.factor_names:
        npt.assert_allclose(rev.first_order[name], -fwd.total_order[name], atol=1e-12)
        npt.assert_allclose(rev.total_order[name], -fwd.first_order[name], atol=1e-12)


def test_single_factor_contrasts_collapse():
    grid = small_grid()
    plan = build_plan(simple_factors(1))
    rng = np.random.default_rng(5)
    table = {(0.0,): rng.normal(size=3), (1.0,): rng.normal(size=3)}
    runs = runs_from_corner_function(lambda x: table[x], plan, grid)
    (cs,) = compute_contrasts(plan, validate_runs(plan, runs), grid)
    npt.assert_array_equal(cs.first_order["x1"], cs.total_delta)
    npt.assert_array_equal(cs.total_order["x1"], cs.total_delta)


def test_contrast_grid_must_lie_in_domain():
    plan = build_plan(simple_factors(1))
    grid = small_grid()
    runs = runs_from_corner_function(lambda x: np.zeros(3), plan, grid)
    grouped = validate_runs(plan, runs)
    from funsens.errors import DomainError

    with pytest.raises(DomainError):
        compute_contrasts(plan, grouped, TimeGrid(np.array([0.0, 2.0])))


def test_contrast_set_inputs_property():
    grid = small_grid()
    plan, runs = bilinear_runs(grid)
    (cs,) = compute_contrasts(plan, validate_runs(plan, runs), grid)
    assert cs.inputs == ("x1", "x2")
    assert isinstance(cs, ContrastSet)
