"""Comparison algorithms: exact-projection OGD and a regularised primal-dual method.

The primal-dual method is a generic stand-in for the saddle-point algorithms of the
earlier long-term-constraint literature; it is not a faithful reimplementation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .algorithm import RoundTrace, RunResult, initial_decision
from .errors import ConvergenceError, InfeasibleError, InvalidArgumentError
from .problem import ProblemInstance, SimpleSet

DYKSTRA_TOL = 1e-9
DYKSTRA_MAX_SWEEPS = 50_000


def project_polyhedron(simple_set: SimpleSet, A, b, point, tol: float = DYKSTRA_TOL,
                       max_sweeps: int = DYKSTRA_MAX_SWEEPS) -> np.ndarray:
    """Euclidean projection onto X0 intersected with {A x <= b}, by Dykstra's method."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x = np.asarray(point, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("non-finite point")
    m = A.shape[0]
    row_sq = np.einsum("ij,ij->i", A, A)
    if np.any(row_sq == 0.0):
        raise InvalidArgumentError("halfspace with zero normal")

    y = simple_set.project(x)
    if np.all(A @ y <= b):
        # the simple-set projection already satisfies every halfspace
        return y

    p_set = np.zeros_like(x)
    p_half = np.zeros((m, x.size))
    scale = 1.0 + np.linalg.norm(x) + simple_set.diameter
    history = []
    for sweep in range(1, max_sweeps + 1):
        x_prev = x
        moved = 0.0
        z = x + p_set
        x = simple_set.project(z)
        new = z - x
        moved += np.linalg.norm(new - p_set)
        p_set = new
        for k in range(m):
            z = x + p_half[k]
            excess = A[k] @ z - b[k]
            x = z - (excess / row_sq[k]) * A[k] if excess > 0 else z
            new = z - x
            moved += np.linalg.norm(new - p_half[k])
            p_half[k] = new
        change = np.linalg.norm(x - x_prev)
        if change <= tol and moved <= tol:
            viol = max(float(np.max(A @ x - b)), 0.0)
            if viol <= tol * np.sqrt(row_sq.max()) and simple_set.contains(x, tol):
                return x
        corr = np.linalg.norm(p_set) + np.linalg.norm(p_half)
        if sweep % 1000 == 0:
            history.append(corr)
            if len(history) >= 3 and corr > 1e3 * scale and history[-1] > 1.2 * history[-2] > 1.44 * history[-3]:
                raise InfeasibleError("X0 and the halfspaces do not intersect")
    corr = np.linalg.norm(p_set) + np.linalg.norm(p_half)
    if corr > 1e3 * scale:
        raise InfeasibleError("X0 and the halfspaces do not intersect")
    raise ConvergenceError(
        f"Dykstra projection did not converge in {max_sweeps} sweeps", best=x, residual=change
    )


def ogd_step(simple_set: SimpleSet, A, b, x_t, grad_t, step: float,
             tol: float = DYKSTRA_TOL) -> np.ndarray:
    """x(t+1) = P_X[x(t) - step * grad], X = X0 intersected with {A x <= b}."""
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    z = np.asarray(x_t, dtype=float) - step * np.asarray(grad_t, dtype=float)
    return project_polyhedron(simple_set, A, b, z, tol)


@dataclass(frozen=True)
class DualState:
    """Dual variables and the trade-off exponent (``theta_exp``) of the baseline."""

    lam: np.ndarray
    theta_exp: float = 0.5

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(-1)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        if not 0.0 < self.theta_exp < 1.0:
            raise InvalidArgumentError("theta_exp must lie in (0, 1)")


def primal_dual_step(instance: ProblemInstance, state: DualState, x_t, grad_t,
                     step_primal: float, step_dual: float, reg: float):
    """One projected primal descent / dual ascent step on the regularised Lagrangian.

    Returns ``(x_next, new_state)``.
    """
    if not (step_primal > 0 and step_dual > 0) or reg < 0:
        raise InvalidArgumentError("steps must be positive and reg non-negative")
    x_t = np.asarray(x_t, dtype=float)
    g = instance.constraints
    if state.lam.shape != (g.m,):
        raise InvalidArgumentError(f"dual has {state.lam.size} entries, expected {g.m}")
    direction = np.asarray(grad_t, dtype=float) + g.jacobian(x_t).T @ state.lam
    x_next = instance.simple_set.project(x_t - step_primal * direction)
    lam = np.maximum(0.0, state.lam + step_dual * (g(x_t) - reg * state.lam))
    return x_next, DualState(lam, state.theta_exp)


@dataclass(frozen=True)
class PrimalDualSchedule:
    step_primal: float
    step_dual: float
    reg: float

    def as_dict(self) -> dict:
        return {"step_primal": self.step_primal, "step_dual": self.step_dual, "reg": self.reg}


def primal_dual_schedule(instance: ProblemInstance, T: int, theta_exp: float,
                         primal_scale: float = 1.0, dual_scale: float = 1.0,
                         reg_scale: float = 1.0) -> PrimalDualSchedule:
    """step_primal ~ T^-max(theta, 1-theta), step_dual ~ T^-(theta/2), reg ~ T^-(theta/2).

    The primal step carries the usual R/D scale; the dual step is scaled by 1/G.
    """
    instance.require("D", "G", "R")
    T = max(T, 1)
    step_primal = primal_scale * instance.R / instance.D * T ** (-max(theta_exp, 1 - theta_exp))
    step_dual = dual_scale / max(instance.G, 1e-12) * T ** (-theta_exp / 2)
    reg = reg_scale * T ** (-theta_exp / 2)
    return PrimalDualSchedule(step_primal, step_dual, reg)


def run_primal_dual(instance: ProblemInstance, losses, T: int, theta_exp: float = 0.5,
                    schedule: PrimalDualSchedule | None = None) -> RunResult:
    """Run the primal-dual baseline; dual variables fill the queue columns of the trace."""
    schedule = schedule or primal_dual_schedule(instance, T, theta_exp)
    g = instance.constraints
    state = DualState(np.zeros(g.m), theta_exp)
    x = initial_decision(instance)
    start = time.perf_counter()
    trace = []
    for t in range(T + 1):
        grad = np.asarray(losses.grad(t, x), dtype=float)
        g_vals = g(x)
        x_next, new_state = primal_dual_step(
            instance, state, x, grad, schedule.step_primal, schedule.step_dual, schedule.reg
        )
        drift = 0.5 * float(new_state.lam @ new_state.lam - state.lam @ state.lam)
        trace.append(RoundTrace(t, x, losses.value(t, x), grad, g_vals, g_vals,
                                new_state.lam, drift))
        x, state = x_next, new_state
    return RunResult(
        trace=trace,
        params=None,
        final_x=x,
        final_queue=state.lam,
        manifest={
            "algorithm": "primal-dual",
            "note": "generic regularised primal-dual stand-in for prior-work baselines",
            "theta_exp": theta_exp,
            "schedule": schedule.as_dict(),
        },
        wall_clock=time.perf_counter() - start,
    )


def run_ogd(instance: ProblemInstance, losses, T: int, step: float | None = None,
            tol: float = DYKSTRA_TOL) -> RunResult:
    """Online gradient descent with exact projection onto the full constraint set.

    Needs linear constraints. Default step is R / (D sqrt(T)).
    """
    g = instance.constraints
    if not g.is_linear:
        raise InvalidArgumentError("exact-projection OGD needs linear constraints")
    if step is None:
        instance.require("D", "R")
        step = instance.R / (instance.D * np.sqrt(max(T, 1)))
    x = project_polyhedron(instance.simple_set, g.A, g.b, initial_decision(instance), tol)
    zeros = np.zeros(g.m)
    start = time.perf_counter()
    trace = []
    for t in range(T + 1):
        grad = np.asarray(losses.grad(t, x), dtype=float)
        g_vals = g(x)
        trace.append(RoundTrace(t, x, losses.value(t, x), grad, g_vals, g_vals, zeros, 0.0))
        x = ogd_step(instance.simple_set, g.A, g.b, x, grad, step, tol)
    return RunResult(
        trace=trace,
        params=None,
        final_x=x,
        final_queue=zeros,
        manifest={"algorithm": "ogd-proj", "step": step, "projection_tol": tol},
        wall_clock=time.perf_counter() - start,
    )
