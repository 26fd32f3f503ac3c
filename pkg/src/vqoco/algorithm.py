"""Virtual-queue online algorithm: per-round update, parameter schedule, doubling trick."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    ValidityError,
    WrongPathError,
)
from .problem import ProblemInstance
from .vqueue import QueueState, queue_update

INNER_TOL = 1e-8
INNER_DECREASE_TOL = 1e-12
INNER_MAX_ITER = 10_000


@dataclass(frozen=True)
class AlgorithmParams:
    gamma: float
    alpha: float
    eta: float
    horizon: int

    def __post_init__(self):
        if not (self.gamma > 0 and self.alpha > 0 and self.eta > 0):
            raise InvalidArgumentError("gamma, alpha and eta must be positive")
        if self.horizon < 0:
            raise InvalidArgumentError("horizon must be non-negative")

    def threshold(self, beta: float) -> float:
        """Smallest admissible alpha for this gamma, eta and Lipschitz modulus beta."""
        return 0.5 * (self.gamma**2 * beta**2 + self.eta)

    def is_valid(self, beta: float) -> bool:
        return self.alpha >= self.threshold(beta) * (1 - 1e-12)

    def validate(self, beta: float) -> None:
        if not self.is_valid(beta):
            raise ValidityError(
                f"alpha={self.alpha:g} below (gamma^2 beta^2 + eta)/2 = {self.threshold(beta):g}"
            )

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "alpha": self.alpha, "eta": self.eta, "horizon": self.horizon}


def default_schedule(T: int, beta: float) -> AlgorithmParams:
    """gamma = T^(1/4), eta = sqrt(T), alpha = (beta^2 + 1) sqrt(T) / 2."""
    if T < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    if not beta > 0:
        raise InvalidArgumentError("beta must be positive")
    root = math.sqrt(T)
    return AlgorithmParams(gamma=T**0.25, alpha=0.5 * (beta**2 + 1.0) * root, eta=root, horizon=T)


class LossOracle(Protocol):
    """Round-indexed convex losses; round 0 is the bootstrap round."""

    def value(self, t: int, x: np.ndarray) -> float: ...

    def grad(self, t: int, x: np.ndarray) -> np.ndarray: ...


class LinearLosses:
    """f^t(x) = c(t)^T x with ``costs[t]`` the cost vector of round t."""

    def __init__(self, costs):
        self.costs = np.asarray(costs, dtype=float)
        self.costs.setflags(write=False)

    def __len__(self):
        return len(self.costs)

    def value(self, t, x):
        return float(self.costs[t] @ x)

    def grad(self, t, x):
        return self.costs[t]

    def cost_sum(self, T: int) -> np.ndarray:
        """Sum of c(1..T); the bootstrap round is excluded."""
        return self.costs[1 : T + 1].sum(axis=0)


class FunctionLosses:
    """Losses from callables ``value(t, x)`` and ``grad(t, x)`` (any subgradient)."""

    def __init__(self, value, grad):
        self._value, self._grad = value, grad

    def value(self, t, x):
        return float(self._value(t, x))

    def grad(self, t, x):
        return np.asarray(self._grad(t, x), dtype=float)


@dataclass
class RoundTrace:
    """One round: decision x(t), its loss/gradient, g(x(t)), Q(t+1) and d(t)."""

    t: int
    x: np.ndarray
    loss: float
    grad: np.ndarray
    g_vals: np.ndarray
    gtil_vals: np.ndarray
    queue_after: np.ndarray
    drift: float
    direction: Optional[np.ndarray] = None


@dataclass
class Period:
    """One doubling-trick period covering global rounds ``start..end``."""

    index: int
    start: int
    end: int
    params: AlgorithmParams

    @property
    def horizon(self) -> int:
        return 2**self.index

    @property
    def rounds(self) -> int:
        return self.end - self.start + 1


@dataclass
class RunResult:
    trace: list
    params: Optional[AlgorithmParams]
    final_x: np.ndarray
    final_queue: np.ndarray
    periods: list = field(default_factory=list)
    cumulative_regret: Optional[np.ndarray] = None
    cumulative_violation: Optional[np.ndarray] = None
    hindsight_x: Optional[np.ndarray] = None
    hindsight_value: Optional[float] = None
    manifest: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def T(self) -> int:
        return len(self.trace) - 1

    def xs(self) -> np.ndarray:
        return np.array([r.x for r in self.trace])

    def g_matrix(self) -> np.ndarray:
        return np.array([r.g_vals for r in self.trace])

    def queues(self) -> np.ndarray:
        return np.array([r.queue_after for r in self.trace])

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.trace])


def fast_direction(instance: ProblemInstance, params: AlgorithmParams, grad_t,
                   queue_next, gtil_t) -> np.ndarray:
    """d(t) = grad f^t + sum_k (Q_k(t+1) + gtil_k) * gamma * A_k for linear g."""
    g = instance.constraints
    if not g.is_linear:
        raise WrongPathError("closed-form update needs linear constraints")
    weights = np.asarray(queue_next) + np.asarray(gtil_t)
    return np.asarray(grad_t, dtype=float) + params.gamma * (g.A.T @ weights)


def step_fast_linear(instance: ProblemInstance, params: AlgorithmParams, x_t, grad_t,
                     queue_next, gtil_t) -> np.ndarray:
    """x(t+1) = P_X0[x(t) - d(t) / (2 alpha)]."""
    d = fast_direction(instance, params, grad_t, queue_next, gtil_t)
    return instance.simple_set.project(np.asarray(x_t, dtype=float) - d / (2.0 * params.alpha))


def round_objective(instance: ProblemInstance, params: AlgorithmParams, x_t, grad_t,
                    queue_next, gtil_t):
    """The per-round objective phi and its gradient, as a pair of callables."""
    x_t = np.asarray(x_t, dtype=float)
    grad_t = np.asarray(grad_t, dtype=float)
    w = params.gamma * (np.asarray(queue_next) + np.asarray(gtil_t))
    g, alpha = instance.constraints, params.alpha

    def phi(x):
        dx = x - x_t
        return float(grad_t @ dx + w @ g(x) + alpha * (dx @ dx))

    def dphi(x):
        return grad_t + g.jacobian(x).T @ w + 2.0 * alpha * (x - x_t)

    return phi, dphi


def step_inner_solver(instance: ProblemInstance, params: AlgorithmParams, x_t, grad_t,
                      queue_next, gtil_t, tol: float = INNER_TOL,
                      max_iter: int = INNER_MAX_ITER, x_init=None) -> np.ndarray:
    """Minimise the round objective over X0 by projected gradient descent.

    The objective is 2*alpha strongly convex, so constant steps 1/(L + 2 alpha) converge
    linearly; L is gamma * sum_k w_k * smoothness_k. Constraints without a declared
    smoothness fall back to backtracking on L. The default start is the linearised
    proximal step; ``x_init`` overrides it.
    """
    weights = np.asarray(queue_next, dtype=float) + np.asarray(gtil_t, dtype=float)
    if np.any(weights < -1e-12):
        raise InvalidArgumentError("queue weights Q(t+1) + gtil(x(t)) must be non-negative")
    weights = np.maximum(weights, 0.0)
    S, g = instance.simple_set, instance.constraints
    phi, dphi = round_objective(instance, params, x_t, grad_t, queue_next, gtil_t)
    x_t = np.asarray(x_t, dtype=float)
    backtrack = g.smoothness is None
    L = 0.0 if backtrack else params.gamma * float(weights @ g.smoothness)

    if x_init is None:
        x = S.project(x_t - dphi(x_t) / (2.0 * params.alpha))
    else:
        x = S.project(x_init)
    fx = phi(x)
    residual = math.inf
    for _ in range(max_iter):
        step = 1.0 / (L + 2.0 * params.alpha)
        grad = dphi(x)
        x_new = S.project(x - step * grad)
        f_new = phi(x_new)
        diff = x_new - x
        if backtrack and f_new > fx + grad @ diff + (diff @ diff) / (2 * step) + 1e-15 * abs(fx):
            L = max(2.0 * L, params.alpha)
            continue
        residual = float(np.linalg.norm(diff)) / step
        decrease = fx - f_new
        x, fx = x_new, f_new
        if residual <= tol or 0.0 <= decrease <= INNER_DECREASE_TOL:
            return x
    raise ConvergenceError(
        f"inner solver did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {residual:.3g})",
        best=x,
        residual=residual,
    )


def _select_path(instance: ProblemInstance, path: str) -> str:
    if path == "auto":
        return "fast" if instance.constraints.is_linear else "inner"
    if path == "fast" and not instance.constraints.is_linear:
        raise WrongPathError("closed-form update needs linear constraints")
    if path not in ("fast", "inner"):
        raise InvalidArgumentError(f"unknown update path {path!r}")
    return path


def initial_decision(instance: ProblemInstance) -> np.ndarray:
    S = instance.simple_set
    return S.project(S.center)


def _run_rounds(instance, params, losses, x0, t_offset, rounds, path, inner_tol):
    """Algorithm 1 from a fresh zero queue. Local round t uses loss t_offset + t."""
    gamma = params.gamma
    g = instance.constraints
    state = QueueState.zeros(instance.m)
    x = np.asarray(x0, dtype=float)
    trace = []
    for t in range(rounds + 1):
        tg = t_offset + t
        loss = losses.value(tg, x)
        grad = np.asarray(losses.grad(tg, x), dtype=float)
        g_vals = g(x)
        gtil = gamma * g_vals
        state = queue_update(state, gtil)
        if path == "fast":
            d = fast_direction(instance, params, grad, state.Q, gtil)
            x_next = instance.simple_set.project(x - d / (2.0 * params.alpha))
        else:
            d = None
            x_next = step_inner_solver(instance, params, x, grad, state.Q, gtil, tol=inner_tol)
        trace.append(RoundTrace(tg, x, loss, grad, g_vals, gtil, state.Q, state.last_drift, d))
        x = x_next
    return trace, x, state


def run(instance: ProblemInstance, params: AlgorithmParams, losses: LossOracle, T: int,
        *, path: str = "auto", inner_tol: float = INNER_TOL, x0=None,
        report_bounds: bool = False) -> RunResult:
    """Run the virtual-queue algorithm for rounds 0..T.

    Round 0 is a bootstrap: its loss only seeds the decision x(1) and is excluded from
    regret. The returned trace holds T + 1 rounds plus the would-be decision x(T+1).
    """
    if T < 0:
        raise InvalidArgumentError("T must be non-negative")
    instance.require("beta")
    params.validate(instance.beta)
    path = _select_path(instance, path)
    x0 = initial_decision(instance) if x0 is None else instance.simple_set.project(x0)
    start = time.perf_counter()
    trace, x_final, state = _run_rounds(instance, params, losses, x0, 0, T, path, inner_tol)
    manifest = {"algorithm": "vq", "params": params.as_dict(), "update_path": path}
    if report_bounds:
        regret_bound, violation_bound = certified_bounds(instance, params, T)
        manifest["bounds"] = {"regret": regret_bound, "violation": violation_bound}
    return RunResult(
        trace=trace,
        params=params,
        final_x=x_final,
        final_queue=state.Q,
        manifest=manifest,
        wall_clock=time.perf_counter() - start,
    )


def certified_bounds(instance: ProblemInstance, params: AlgorithmParams, T: int,
                     constant: str = "proof") -> tuple[float, float]:
    """Additive regret bound and cumulative-violation bound for horizon T.

    regret <= alpha R^2 + c gamma^2 G^2 + D^2 T / (2 eta) with c = 2 (``"proof"``) or
    1/2 (``"statement"``); violation <= 2G + (alpha R^2 + 2DR + 2 gamma^2 G^2) / (gamma^2 eps).
    """
    instance.require("epsilon")
    instance.require("D", "G", "R")
    c = {"proof": 2.0, "statement": 0.5}[constant]
    a, gm, eta = params.alpha, params.gamma, params.eta
    D, G, R, eps = instance.D, instance.G, instance.R, instance.epsilon
    regret = a * R**2 + c * gm**2 * G**2 + D**2 * T / (2.0 * eta)
    violation = 2.0 * G + (a * R**2 + 2.0 * D * R + 2.0 * gm**2 * G**2) / (gm**2 * eps)
    return regret, violation


def queue_norm_bound(instance: ProblemInstance, params: AlgorithmParams) -> float:
    """Bound on ||Q(t)|| valid at every round."""
    instance.require("epsilon")
    instance.require("D", "G", "R")
    a, gm = params.alpha, params.gamma
    D, G, R, eps = instance.D, instance.G, instance.R, instance.epsilon
    return 2.0 * gm * G + (a * R**2 + 2.0 * D * R + 2.0 * gm**2 * G**2) / (gm * eps)


def asymptotic_violation_bound(instance: ProblemInstance) -> float:
    """Horizon-free cap on the violation bound under the default schedule.

    Equal to the bound at T = 1; for larger T the 2DR term shrinks like T^(-1/2).
    """
    instance.require("epsilon")
    instance.require("D", "G", "R", "beta")
    D, G, R, eps, beta = instance.D, instance.G, instance.R, instance.epsilon, instance.beta
    return 2.0 * G + (0.5 * (beta**2 + 1.0) * R**2 + 2.0 * G**2 + 2.0 * D * R) / eps


def doubling_layout(stop_round: int) -> list[tuple[int, int, int]]:
    """(period index i, first round, last round) with period i spanning 2^i rounds."""
    if stop_round < 1:
        raise InvalidArgumentError("stop_round must be positive")
    layout, start, i = [], 1, 1
    while start <= stop_round:
        end = min(start + 2**i - 1, stop_round)
        layout.append((i, start, end))
        start, i = end + 1, i + 1
    return layout


def run_doubling(instance: ProblemInstance, losses: LossOracle, beta: float, stop_round: int,
                 *, path: str = "auto", inner_tol: float = INNER_TOL) -> RunResult:
    """Run with unknown horizon: period i uses the schedule for horizon 2^i.

    Each period restarts from a zero queue. Its bootstrap round is the last round of
    the previous period, so the last committed decision carries over.
    """
    path = _select_path(instance, path)
    start_clock = time.perf_counter()
    x = initial_decision(instance)
    trace, periods = [], []
    state = None
    for i, first, last in doubling_layout(stop_round):
        params = default_schedule(2**i, beta)
        params.validate(instance.beta if instance.beta is not None else beta)
        local, x_next, state = _run_rounds(
            instance, params, losses, x, first - 1, last - first + 1, path, inner_tol
        )
        trace.extend(local if i == 1 else local[1:])
        periods.append(Period(i, first, last, params))
        x = local[-1].x
    return RunResult(
        trace=trace,
        params=None,
        final_x=x_next,
        final_queue=state.Q,
        periods=periods,
        manifest={
            "algorithm": "vq-doubling",
            "beta": beta,
            "periods": [
                {"index": p.index, "start": p.start, "end": p.end, **p.params.as_dict()}
                for p in periods
            ],
        },
        wall_clock=time.perf_counter() - start_clock,
    )
