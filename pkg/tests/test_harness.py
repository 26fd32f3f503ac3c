import io
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vqoco.algorithm import LinearLosses, RoundTrace, RunResult
from vqoco.errors import IncompleteTraceError, InfeasibleError, InvalidArgumentError
from vqoco.harness import (
    AlgorithmSpec,
    CostGenerator,
    compare,
    compute_metrics,
    cost_at,
    generate_instance,
    gradient_bound,
    hindsight_optimum,
    make_experiment,
    run_experiment,
)
from vqoco.problem import LinearConstraints, ProblemInstance, SimpleSet, derive_constants
from vqoco.report import trace_header, trace_rows, write_trace_csv

GOLDEN = Path(__file__).parent / "golden"
BOX = SimpleSet.box([-1, -1], [1, 1])


@pytest.mark.parametrize("seed", [0, 1, 42, 2**40 + 3])
def test_instance_ranges_and_feasible_corner(seed):
    inst = generate_instance(seed)
    A, b = inst.constraints.A, inst.constraints.b
    assert A.shape == (3, 2) and np.all((0 <= A) & (A <= 1)) and np.all((0 <= b) & (b <= 2))
    assert np.all(inst.g([-1, -1]) <= 0)
    assert inst.epsilon > 1e-6 and np.all(inst.g(inst.slater_point) <= -inst.epsilon + 1e-12)
    assert inst.check() == []


def test_instance_golden_seed_42():
    golden = json.loads((GOLDEN / "seed42_instance.json").read_text())
    inst = generate_instance(42)
    assert inst.constraints.A.tolist() == golden["A"]
    assert inst.constraints.b.tolist() == golden["b"]


def test_costs_at_t1_and_t100():
    gen = CostGenerator(7, 5000)
    c1, c2, c3 = gen.parts[:, 1]
    assert np.all(np.abs(c1) <= 1.0)
    assert np.all((-1 <= gen.parts[1, 100]) & (gen.parts[1, 100] <= 0))
    for t in (1, 100, 2500, 5000):
        assert np.array_equal(cost_at(gen, t), gen.parts[:, t].sum(axis=0))


@given(seed=st.integers(0, 2**63 - 1), T=st.integers(1, 400), n=st.integers(1, 4))
def test_cost_stream_structure(seed, T, n):
    gen = CostGenerator(seed, T, n)
    c1, c2, c3 = gen.parts[:, 1:]
    t = np.arange(1, T + 1)
    assert np.all(np.abs(c1) <= (t**0.1)[:, None] + 1e-12)
    neg = gen.negative_rounds(t)
    assert np.all(np.where(neg[:, None], (c2 <= 0) & (c2 >= -1), (c2 >= 0) & (c2 <= 1)))
    assert np.all(np.isin(c3, [-1.0, 1.0]))
    assert np.all(c3 == c3[:, :1])  # one sign per round, shared by every component
    assert np.array_equal(np.sort(gen.mu), t)
    assert np.array_equal(c3[:, 0], (-1.0) ** gen.mu)
    assert np.linalg.norm(gen.costs(), axis=1).max() <= gen.D


def test_interval_breakpoints_at_5000():
    gen = CostGenerator(0, 5000)
    neg = gen.negative_rounds(np.arange(1, 5001))
    expected = np.zeros(5000, dtype=bool)
    for lo, hi in ((1, 1500), (2000, 3500), (4000, 5000)):
        expected[lo - 1 : hi] = True
    assert np.array_equal(neg, expected)


def test_cost_stream_determinism_and_range():
    a, b = CostGenerator(11, 300, 3), CostGenerator(11, 300, 3)
    assert np.array_equal(a.costs(), b.costs())
    assert not np.array_equal(a.costs(), CostGenerator(12, 300, 3).costs())
    with pytest.raises(InvalidArgumentError):
        cost_at(a, 301)
    with pytest.raises(InvalidArgumentError):
        cost_at(a, -1)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_bound_audit(seed):
    gen = CostGenerator(seed, 5000)
    assert np.linalg.norm(gen.costs(), axis=1).max() <= gradient_bound(5000, 2)
    assert gen.D == pytest.approx(math.sqrt(2) * (5000**0.1 + 2))


def test_hindsight_examples():
    free = derive_constants(ProblemInstance(BOX, LinearConstraints([[1.0, 0.0]], [5.0])))
    x, v = hindsight_optimum(free, [1, 1])
    assert np.array_equal(x, [-1, -1]) and v == -2
    cut = derive_constants(ProblemInstance(BOX, LinearConstraints([[-1.0, -1.0]], [1.0])))
    x, v = hindsight_optimum(cut, [1, 1])
    assert v == pytest.approx(-1.0, abs=1e-12) and x.sum() == pytest.approx(-1.0)
    assert np.array_equal(x, [-1.0, 0.0])  # lexicographically smallest of the optimal vertices
    x, v = hindsight_optimum(free, [0, 0])
    assert np.array_equal(x, [-1, -1]) and v == 0


@pytest.mark.parametrize("seed", range(15))
def test_hindsight_beats_grid(seed):
    inst = generate_instance(seed)
    c = np.random.default_rng(seed).uniform(-5, 5, 2)
    x, v = hindsight_optimum(inst, c)
    axis = np.arange(-1, 1 + 5e-4, 1e-3)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    A, b = inst.constraints.A, inst.constraints.b
    ok = np.all(A[:, 0, None, None] * X + A[:, 1, None, None] * Y <= b[:, None, None], axis=0)
    grid = np.min(np.where(ok, c[0] * X + c[1] * Y, np.inf))
    assert np.all(inst.g(x) <= 1e-9) and BOX.contains(x)
    assert v <= grid + 1e-6
    assert v >= grid - np.abs(c).sum() * 2e-3


def test_hindsight_higher_dimension_uses_descent():
    n = 5
    S = SimpleSet.box(-np.ones(n), np.ones(n))
    inst = derive_constants(ProblemInstance(S, LinearConstraints([np.ones(n)], [-1.0])))
    c = np.arange(1.0, n + 1)
    x, v = hindsight_optimum(inst, c)
    # LP optimum: push the cheapest-last coordinates to -1
    assert v == pytest.approx(-(5 + 4 + 3 + 2 + 1), abs=1e-4)
    assert np.all(inst.g(x) <= 1e-8)


def test_hindsight_infeasible():
    inst = derive_constants(ProblemInstance(BOX, LinearConstraints([[1.0, 0.0]], [-3.0])))
    with pytest.raises(InfeasibleError):
        hindsight_optimum(inst, [1, 1])


def _trace(losses, xs, inst):
    return RunResult(
        trace=[RoundTrace(t, np.asarray(x, float), losses.value(t, np.asarray(x, float)),
                          losses.grad(t, x), inst.g(x), inst.g(x), np.zeros(inst.m), 0.0)
               for t, x in enumerate(xs)],
        params=None, final_x=np.asarray(xs[-1], float), final_queue=np.zeros(inst.m),
    )


def test_compute_metrics_examples():
    inst = derive_constants(ProblemInstance(SimpleSet.box([-1], [1]), LinearConstraints([[1.0]], [0.5])))
    losses = LinearLosses([[9.0], [1.0]])
    res = compute_metrics(_trace(losses, [[0.0], [0.5]], inst), inst, np.array([0.2]), losses)
    assert res.cumulative_regret[-1] == pytest.approx(0.3)
    assert res.cumulative_violation.shape == (1, 1) and res.cumulative_violation[0, 0] == 0.0

    rng = np.random.default_rng(0)
    losses = LinearLosses(rng.uniform(-1, 1, (20, 1)))
    x_star = np.array([-0.4])
    res = compute_metrics(_trace(losses, [x_star] * 20, inst), inst, x_star, losses)
    assert np.all(res.cumulative_regret == 0.0)


def test_compute_metrics_rejects_gaps():
    inst = derive_constants(ProblemInstance(SimpleSet.box([-1], [1]), LinearConstraints([[1.0]], [0.5])))
    losses = LinearLosses(np.ones((4, 1)))
    res = _trace(losses, [[0.0]] * 4, inst)
    del res.trace[2]
    with pytest.raises(IncompleteTraceError):
        compute_metrics(res, inst, np.array([0.0]), losses)


def test_regret_series_recomputed_from_raw_trace():
    exp = make_experiment(3, 400)
    res = run_experiment(AlgorithmSpec("vq"), exp)
    costs = exp.generator.costs()
    xs = res.xs()[1:]
    gaps = np.einsum("ij,ij->i", costs[1:], xs) - costs[1:] @ exp.hindsight_x
    assert np.allclose(res.cumulative_regret, np.cumsum(gaps), rtol=1e-12, atol=1e-12)
    total = sum(r.loss for r in res.trace[1:]) - exp.hindsight_value
    assert res.cumulative_regret[-1] == pytest.approx(total, rel=1e-9)
    assert len(res.cumulative_regret) == len(res.cumulative_violation) == 400


def test_golden_trace():
    res = run_experiment(AlgorithmSpec("vq"), make_experiment(42, 64))
    buf = io.StringIO()
    import csv

    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(2, 3))
    writer.writerows(trace_rows(res))
    assert buf.getvalue() == (GOLDEN / "seed42_T64_trace.csv").read_text()


def test_compare_single_cell():
    table = compare([AlgorithmSpec("vq")], [5], 50)
    assert len(table.rows()) == 1
    row = table.rows()[0]
    assert row["error"] is None and row["algorithm"] == "vq" and row["seed"] == 5


def test_compare_duplicate_algorithm_gives_identical_columns():
    table = compare([AlgorithmSpec("vq", label="a"), AlgorithmSpec("vq", label="b")], [5, 6], 80)
    for seed in (5, 6):
        a, b = table.result("a", seed), table.result("b", seed)
        assert np.array_equal(a.cumulative_regret, b.cumulative_regret)
        assert np.array_equal(a.cumulative_violation, b.cumulative_violation)


def test_compare_records_errors_and_continues():
    table = compare([AlgorithmSpec("nope"), AlgorithmSpec("vq")], [1], 20)
    bad, good = table.cells
    assert "unknown algorithm" in bad.error and good.error is None


def test_vq_beats_aggressive_primal_dual_on_seed_42():
    table = compare([AlgorithmSpec("vq"), AlgorithmSpec("primal-dual", theta_exp=2 / 3)], [42], 5000)
    vq, pd = table.cells
    assert vq.final_max_violation < pd.final_max_violation


def test_manifest_records_reproduction_inputs():
    res = run_experiment(AlgorithmSpec("primal-dual", theta_exp=0.5), make_experiment(8, 30))
    m = res.manifest
    for key in ("seed", "T", "constants", "A", "b", "hindsight_x", "schedule", "prng", "x0"):
        assert key in m
