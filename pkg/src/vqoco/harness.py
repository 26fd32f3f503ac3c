"""Adversarial-cost experiment: instances, cost streams, hindsight optimum, metrics.

Randomness comes from numpy's PCG64 generator. Every purpose draws from its own
substream, ``SeedSequence(seed, spawn_key=(stream,))`` with the fixed stream ids
below, so changing one stream never shifts another.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algorithm import LinearLosses, RunResult, default_schedule, run
from .baselines import primal_dual_schedule, run_ogd, run_primal_dual
from .errors import (
    GenerationError,
    IncompleteTraceError,
    InfeasibleError,
    InvalidArgumentError,
    SlaterViolationError,
    VQOCOError,
)
from .problem import (
    SLATER_FLOOR,
    LinearConstraints,
    ProblemInstance,
    SimpleSet,
    derive_constants,
    estimate_slater,
)

STREAM_INSTANCE = 0
STREAM_C1 = 1
STREAM_C2 = 2
STREAM_PERMUTATION = 3
STREAM_BOOTSTRAP = 4

DEFAULT_FRACTIONS = ((0.0, 0.3), (0.4, 0.7), (0.8, 1.0))
MAX_GENERATION_ATTEMPTS = 100


def stream(seed: int, stream_id: int, *extra: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream_id, *extra)))
    )


def gradient_bound(T: int, n: int) -> float:
    """sqrt(n) * (T^(1/10) + 2): every cost vector of the stream has at most this norm."""
    return math.sqrt(n) * (max(T, 1) ** 0.1 + 2.0)


@dataclass(frozen=True)
class CostGenerator:
    """Cost vectors c(t) = c1(t) + c2(t) + c3(t) for t = 0..T, fixed at construction.

    c1 is uniform on [-t^(1/10), t^(1/10)]; c2 is uniform on [-1, 0] while t/T lies in
    one of ``interval_fractions`` and on [0, 1] otherwise; c3 is (-1)^mu(t) in every
    component, mu a uniform permutation of 1..T. Round 0 is a bootstrap drawn like
    round 1 from its own stream.
    """

    seed: int
    T: int
    n: int = 2
    interval_fractions: tuple = DEFAULT_FRACTIONS
    mu: np.ndarray = field(init=False, repr=False)
    parts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.T < 0 or self.n < 1:
            raise InvalidArgumentError("need T >= 0 and n >= 1")
        T, n = self.T, self.n
        mu = self._permutation()
        t = np.arange(1, T + 1, dtype=float)
        c1 = stream(self.seed, STREAM_C1).uniform(-1.0, 1.0, size=(T, n)) * (t**0.1)[:, None]
        u2 = stream(self.seed, STREAM_C2).uniform(0.0, 1.0, size=(T, n))
        c2 = np.where(self.negative_rounds(np.arange(1, T + 1))[:, None], -u2, u2)
        c3 = np.repeat(np.where(mu % 2 == 0, 1.0, -1.0)[:, None], n, axis=1)
        boot = stream(self.seed, STREAM_BOOTSTRAP)
        b1 = boot.uniform(-1.0, 1.0, size=n)
        b2 = boot.uniform(0.0, 1.0, size=n)
        b2 = -b2 if self.negative_rounds(np.array([1]))[0] else b2
        b3 = np.full(n, 1.0 if boot.integers(1, max(T, 1) + 1) % 2 == 0 else -1.0)
        parts = np.zeros((3, T + 1, n))
        parts[:, 0] = b1, b2, b3
        parts[0, 1:], parts[1, 1:], parts[2, 1:] = c1, c2, c3
        mu.setflags(write=False)
        parts.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "parts", parts)

    def _permutation(self) -> np.ndarray:
        """Fisher-Yates shuffle of 1..T."""
        rng = stream(self.seed, STREAM_PERMUTATION)
        mu = np.arange(1, self.T + 1)
        for i in range(self.T - 1, 0, -1):
            j = int(rng.integers(0, i + 1))
            mu[i], mu[j] = mu[j], mu[i]
        return mu

    def negative_rounds(self, t: np.ndarray) -> np.ndarray:
        frac = np.asarray(t, dtype=float) / max(self.T, 1)
        out = np.zeros(frac.shape, dtype=bool)
        for lo, hi in self.interval_fractions:
            out |= (frac >= lo) & (frac <= hi)
        return out

    @property
    def D(self) -> float:
        return gradient_bound(self.T, self.n)

    def costs(self) -> np.ndarray:
        """All cost vectors, shape (T + 1, n); row 0 is the bootstrap round."""
        return self.parts.sum(axis=0)

    def losses(self) -> LinearLosses:
        return LinearLosses(self.costs())


def cost_at(gen: CostGenerator, t: int) -> np.ndarray:
    """c(t); t = 0 is the bootstrap round."""
    if not 0 <= t <= gen.T:
        raise InvalidArgumentError(f"round {t} outside 0..{gen.T}")
    return gen.parts[:, t].sum(axis=0)


def generate_instance(seed: int, n: int = 2, m: int = 3, T: Optional[int] = None) -> ProblemInstance:
    """A in [0,1]^(m x n), b in [0,2]^m, X0 = [-1,1]^n, constants filled in.

    D is the cost-stream gradient bound for horizon ``T`` when one is given.
    """
    box = SimpleSet.box(-np.ones(n), np.ones(n))
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = stream(seed, STREAM_INSTANCE, attempt)
        A = rng.uniform(0.0, 1.0, size=(m, n))
        b = rng.uniform(0.0, 2.0, size=m)
        inst = derive_constants(ProblemInstance(box, LinearConstraints(A, b)))
        try:
            x_hat, eps = estimate_slater(inst, SLATER_FLOOR)
        except SlaterViolationError:
            continue
        D = gradient_bound(T, n) if T is not None else None
        return inst.replace(slater_point=x_hat, epsilon=eps, D=D)
    raise GenerationError(f"no instance with a Slater margin after {MAX_GENERATION_ATTEMPTS} attempts")


def _feasible_vertices(Hs: np.ndarray, hs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """All vertices of {x : Hs x <= hs}."""
    n = Hs.shape[1]
    verts = []
    for rows in itertools.combinations(range(len(hs)), n):
        M = Hs[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, hs[list(rows)])
        if np.all(Hs @ v <= hs + tol * (1 + np.abs(hs))):
            verts.append(v)
    if not verts:
        return np.zeros((0, n))
    return np.unique(np.round(np.array(verts), 12), axis=0)


def hindsight_optimum(instance: ProblemInstance, cost_sum, tol: float = 1e-6):
    """Best fixed feasible decision for the summed linear cost: (x*, cost_sum . x*).

    Exact vertex enumeration for boxes with n <= 3; ties go to the lexicographically
    smallest vertex. Otherwise projected gradient steps onto the feasible set.
    """
    c = np.asarray(cost_sum, dtype=float)
    g = instance.constraints
    if not g.is_linear:
        raise InvalidArgumentError("hindsight oracle needs linear constraints")
    S = instance.simple_set
    if S.kind == "box" and instance.n <= 3:
        n = instance.n
        Hs = np.vstack([g.A, np.eye(n), -np.eye(n)])
        hs = np.concatenate([g.b, S.upper, -S.lower])
        V = _feasible_vertices(Hs, hs)
        if len(V) == 0:
            raise InfeasibleError("feasible set is empty")
        vals = V @ c
        best = vals.min()
        ties = V[vals <= best + 1e-12 * max(1.0, abs(best))]
        x = ties[np.lexsort(ties.T[::-1])[0]]
        return x, float(c @ x)
    return _hindsight_by_projection(instance, c, tol)


def _hindsight_by_projection(instance, c, tol):
    from .baselines import project_polyhedron

    g, S = instance.constraints, instance.simple_set
    x = project_polyhedron(S, g.A, g.b, S.center)
    norm = np.linalg.norm(c)
    if norm == 0.0:
        return x, 0.0
    step = S.diameter
    for _ in range(200_000):
        x_new = project_polyhedron(S, g.A, g.b, x - step * c / norm)
        if np.linalg.norm(x_new - x) <= tol * step:
            step *= 0.5
            if step < tol:
                return x_new, float(c @ x_new)
        x = x_new
    return x, float(c @ x)


def compute_metrics(result: RunResult, instance: ProblemInstance, hindsight_x, losses) -> RunResult:
    """Fill cumulative regret against the fixed comparator and cumulative violations."""
    trace = result.trace
    if [r.t for r in trace] != list(range(len(trace))):
        raise IncompleteTraceError("trace rounds must be 0..T without gaps")
    T = len(trace) - 1
    played = np.array([r.loss for r in trace[1:]])
    ref = np.array([losses.value(r.t, hindsight_x) for r in trace[1:]])
    g_mat = np.array([r.g_vals for r in trace[1:]]).reshape(T, instance.m)
    result.cumulative_regret = np.cumsum(played - ref)
    result.cumulative_violation = np.cumsum(g_mat, axis=0)
    result.hindsight_x = np.asarray(hindsight_x, dtype=float)
    result.hindsight_value = float(ref.sum())
    return result


def final_regret(result: RunResult) -> float:
    return float(result.cumulative_regret[-1]) if len(result.cumulative_regret) else 0.0


def final_max_violation(result: RunResult) -> float:
    cv = result.cumulative_violation
    return float(cv[-1].max()) if len(cv) else 0.0


@dataclass(frozen=True)
class AlgorithmSpec:
    """Which algorithm to run and its knobs.

    ``kind`` is ``vq``, ``vq-doubling``, ``ogd-proj`` or ``primal-dual``.
    """

    kind: str
    theta_exp: float = 0.5
    label: Optional[str] = None
    options: tuple = ()

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "primal-dual":
            return f"primal-dual(theta={self.theta_exp:.4g})"
        return self.kind


def run_algorithm(spec: AlgorithmSpec, instance: ProblemInstance, losses, T: int) -> RunResult:
    from .algorithm import run_doubling

    opts = dict(spec.options)
    if spec.kind == "vq":
        params = default_schedule(max(T, 1), instance.beta)
        return run(instance, params, losses, T, report_bounds=instance.epsilon is not None)
    if spec.kind == "vq-doubling":
        if T < 1:
            raise InvalidArgumentError("the doubling trick needs at least one round")
        return run_doubling(instance, losses, instance.beta, T)
    if spec.kind == "ogd-proj":
        return run_ogd(instance, losses, T, step=opts.get("step"))
    if spec.kind == "primal-dual":
        schedule = primal_dual_schedule(instance, T, spec.theta_exp, **opts)
        return run_primal_dual(instance, losses, T, spec.theta_exp, schedule)
    raise InvalidArgumentError(f"unknown algorithm {spec.kind!r}")


@dataclass
class Experiment:
    """A seeded instance with its cost stream and hindsight comparator."""

    seed: int
    T: int
    instance: ProblemInstance
    generator: CostGenerator
    losses: LinearLosses
    hindsight_x: np.ndarray
    hindsight_value: float


def make_experiment(seed: int, T: int, n: int = 2, m: int = 3,
                    instance: Optional[ProblemInstance] = None) -> Experiment:
    inst = generate_instance(seed, n, m, T) if instance is None else instance
    if inst.D is None:
        inst = inst.replace(D=gradient_bound(T, inst.n))
    gen = CostGenerator(seed, T, inst.n)
    losses = gen.losses()
    x_star, value = hindsight_optimum(inst, losses.cost_sum(T))
    return Experiment(seed, T, inst, gen, losses, x_star, value)


def run_experiment(spec: AlgorithmSpec, exp: Experiment) -> RunResult:
    result = run_algorithm(spec, exp.instance, exp.losses, exp.T)
    result = compute_metrics(result, exp.instance, exp.hindsight_x, exp.losses)
    result.manifest.update(
        {
            "seed": exp.seed,
            "T": exp.T,
            "label": spec.name,
            "constants": exp.instance.constants(),
            "A": exp.instance.constraints.A.tolist(),
            "b": exp.instance.constraints.b.tolist(),
            "hindsight_x": exp.hindsight_x.tolist(),
            "hindsight_value": exp.hindsight_value,
            "x0": "projection of the centre of X0",
            "prng": "numpy PCG64, SeedSequence(seed, spawn_key=(stream,))",
        }
    )
    return result


@dataclass
class ComparisonCell:
    algorithm: str
    seed: int
    final_regret: Optional[float] = None
    final_max_violation: Optional[float] = None
    error: Optional[str] = None


@dataclass
class Comparison:
    T: int
    algorithms: list
    seeds: list
    cells: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [vars(c).copy() for c in self.cells]

    def result(self, algorithm: str, seed: int) -> RunResult:
        return self.results[(algorithm, seed)]


def compare(algorithms: Sequence[AlgorithmSpec], seeds: Sequence[int], T: int,
            n: int = 2, m: int = 3, instance: Optional[ProblemInstance] = None) -> Comparison:
    """Run every algorithm on the same seeded instance and cost stream for each seed.

    Per-run failures are recorded in the cell and do not stop the comparison.
    """
    table = Comparison(T, [a.name for a in algorithms], list(seeds))
    for seed in seeds:
        exp = make_experiment(seed, T, n, m, instance)
        for spec in algorithms:
            cell = ComparisonCell(spec.name, seed)
            try:
                res = run_experiment(spec, exp)
            except VQOCOError as exc:
                cell.error = f"{type(exc).__name__}: {exc}"
            else:
                cell.final_regret = final_regret(res)
                cell.final_max_violation = final_max_violation(res)
                table.results[(spec.name, seed)] = res
            table.cells.append(cell)
    return table
