import math

import numpy as np
import pytest
from families import tuner_battery

from vqoco.errors import InfeasibleError, InvalidArgumentError, ValidityError
from vqoco.tuner import Constants, TunerProblem, evaluate_bounds, grid_reference, oracle_gap, tune

UNIT = Constants(1.0, 1.0, 1.0, 1.0, 1.0)
BATTERY = tuner_battery()


def test_boundary_triple_is_feasible():
    regret, violation = evaluate_bounds(1.0, 1.0, 1.0, UNIT, 10)
    assert regret == pytest.approx(1 + 0.5 + 5)
    assert violation == pytest.approx(2 + (1 + 2 + 2) / 1)


def test_evaluate_bounds_matches_certified_example():
    c = Constants(D=1.0, G=1.0, R=2.0, beta=1.0, epsilon=0.5)
    assert evaluate_bounds(2.0, 4.0, 4.0, c, 16, constant="proof") == (26.0, 16.0)
    assert evaluate_bounds(2.0, 4.0, 4.0, c, 16) == (20.0, 16.0)


@pytest.mark.parametrize("triple", [(2.0, 4.0, 3.99), (0.0, 1.0, 1.0), (1.0, -1.0, 1.0)])
def test_invalid_triples(triple):
    with pytest.raises(ValidityError):
        evaluate_bounds(*triple, Constants(1.0, 1.0, 2.0, 1.0, 0.5), 16)


def test_problem_validation():
    with pytest.raises(InvalidArgumentError):
        Constants(1.0, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        TunerProblem("unknown", UNIT, 10)
    with pytest.raises(InvalidArgumentError):
        TunerProblem("regret-subject-to-violation", UNIT, 10)
    with pytest.raises(InfeasibleError):
        TunerProblem("regret-subject-to-violation", UNIT, 10, z0=2.0)


def test_unit_constants_against_grid():
    problem = TunerProblem("minimax", UNIT, 256)
    res = tune(problem)
    assert oracle_gap(problem, res) <= 1.01
    assert res.alpha == pytest.approx(0.5 * (res.gamma**2 + res.eta), rel=1e-15)


@pytest.mark.parametrize("i", range(len(BATTERY)))
def test_battery_gap_and_feasibility(i):
    c, T = BATTERY[i]
    problem = TunerProblem("minimax", c, T)
    res = tune(problem)
    # the grid range is widened to cover the battery's optima
    ref, _, _ = grid_reference(problem, points=400, lo=1e-4, hi=1e6)
    assert res.objective <= 1.01 * ref
    regret, violation = evaluate_bounds(res.gamma, res.eta, res.alpha, c, T)
    assert max(regret, violation) <= res.objective + 1e-9 * res.objective
    assert 0.5 * (c.beta**2 * res.gamma**2 + res.eta) <= res.alpha * (1 + 1e-12)


@pytest.mark.parametrize("i", range(0, 20, 4))
def test_monotone_in_horizon(i):
    c, _ = BATTERY[i]
    objectives = [tune(TunerProblem("minimax", c, T)).objective for T in (10, 100, 1000, 10_000)]
    assert all(b >= a for a, b in zip(objectives, objectives[1:]))


def test_constrained_modes_respect_caps():
    free = tune(TunerProblem("minimax", UNIT, 1000))
    res = tune(TunerProblem("regret-subject-to-violation", UNIT, 1000, z0=free.violation_bound * 1.5))
    assert res.violation_bound <= free.violation_bound * 1.5 * (1 + 1e-9)
    assert res.objective == res.regret_bound < free.regret_bound
    res = tune(TunerProblem("violation-subject-to-regret", UNIT, 1000, z0=free.regret_bound * 1.5))
    assert res.regret_bound <= free.regret_bound * 1.5 * (1 + 1e-9)
    assert res.objective == res.violation_bound < free.violation_bound
    with pytest.raises(InfeasibleError):
        tune(TunerProblem("violation-subject-to-regret", UNIT, 1000, z0=1e-3))


def test_proof_constant_reported():
    res = tune(TunerProblem("minimax", UNIT, 500))
    assert res.regret_bound_proof - res.regret_bound == pytest.approx(1.5 * res.gamma**2)


def test_large_horizon_asymptotics():
    """eta tracks sqrt(T); gamma settles at a T-independent value, because the
    minimax optimum balances the violation bound, whose gamma dependence is T-free."""
    c = Constants(1.0, 1.0, 1.0, 1.0, 1.0)
    r4, r6 = (tune(TunerProblem("minimax", c, T)) for T in (10**4, 10**6))
    assert (r6.eta / 1e3) / (r4.eta / 1e2) == pytest.approx(1.0, rel=0.2)
    assert r6.gamma / r4.gamma == pytest.approx(1.0, rel=0.2)
    assert r6.objective / r4.objective == pytest.approx(10.0, rel=0.2)  # O(sqrt T)
