"""Parameter selection for intermediate horizons.

Chooses (gamma, eta, alpha) to minimise the certified regret/violation bounds. alpha
sits at its lower bound (gamma^2 beta^2 + eta) / 2, since both bounds increase in alpha,
which leaves a two-variable problem. In log coordinates that problem is convex and is
solved by nested golden-section search, each level seeded by a coarse scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InfeasibleError, InvalidArgumentError, ValidityError

MODES = ("minimax", "regret-subject-to-violation", "violation-subject-to-regret")
LOG_LO, LOG_HI = math.log(1e-4), math.log(1e8)
SCAN_POINTS = 48
GOLDEN_TOL = 1e-10
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Constants:
    D: float
    G: float
    R: float
    beta: float
    epsilon: float

    def __post_init__(self):
        for name in ("D", "G", "R", "beta", "epsilon"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")

    @classmethod
    def from_instance(cls, instance) -> "Constants":
        instance.require("D", "G", "R", "beta", "epsilon")
        return cls(instance.D, instance.G, instance.R, instance.beta, instance.epsilon)


@dataclass(frozen=True)
class TunerProblem:
    mode: str
    constants: Constants
    T: int
    z0: Optional[float] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        if self.T < 1:
            raise InvalidArgumentError("T must be at least 1")
        if self.mode != "minimax":
            if self.z0 is None or not self.z0 > 0:
                raise InvalidArgumentError(f"mode {self.mode!r} needs a positive cap z0")
        if self.mode == "regret-subject-to-violation" and self.z0 <= 2 * self.constants.G:
            raise InfeasibleError(
                f"violation cap z0={self.z0:g} cannot beat the 2G={2 * self.constants.G:g} floor"
            )


class TuneResult(NamedTuple):
    gamma: float
    eta: float
    alpha: float
    objective: float
    regret_bound: float
    regret_bound_proof: float
    violation_bound: float


def _bounds(gamma, eta, alpha, c: Constants, T, regret_constant=0.5):
    regret = alpha * c.R**2 + regret_constant * gamma**2 * c.G**2 + c.D**2 * T / (2.0 * eta)
    violation = 2.0 * c.G + (alpha * c.R**2 + 2.0 * c.D * c.R + 2.0 * gamma**2 * c.G**2) / (
        gamma**2 * c.epsilon
    )
    return regret, violation


def evaluate_bounds(gamma: float, eta: float, alpha: float, constants: Constants, T: int,
                    constant: str = "statement") -> tuple[float, float]:
    """(regret bound, violation bound) for a parameter triple.

    ``constant`` picks the gamma^2 G^2 coefficient of the regret bound: 1/2 for
    ``"statement"``, 2 for ``"proof"``.
    """
    if not (gamma > 0 and eta > 0 and alpha > 0):
        raise ValidityError("gamma, eta and alpha must be positive")
    if alpha < 0.5 * (constants.beta**2 * gamma**2 + eta):
        raise ValidityError("alpha is below (beta^2 gamma^2 + eta) / 2")
    coef = {"statement": 0.5, "proof": 2.0}[constant]
    return _bounds(gamma, eta, alpha, constants, T, coef)


def _alpha(gamma, eta, beta):
    return 0.5 * (beta**2 * gamma**2 + eta)


def _objective(problem: TunerProblem, gamma, eta):
    """Vectorised objective; infeasible points map to +inf."""
    c = problem.constants
    alpha = _alpha(gamma, eta, c.beta)
    regret, violation = _bounds(gamma, eta, alpha, c, problem.T)
    if problem.mode == "minimax":
        return np.maximum(regret, violation)
    if problem.mode == "regret-subject-to-violation":
        return np.where(violation <= problem.z0, regret, np.inf)
    return np.where(regret <= problem.z0, violation, np.inf)


def _golden(f, lo, hi, scan=SCAN_POINTS, tol=GOLDEN_TOL):
    """Minimise a unimodal f on [lo, hi]: coarse scan, then golden section on the
    bracket around the best scan point. Returns (argmin, min) over all evaluations."""
    grid = np.linspace(lo, hi, scan)
    vals = np.array([f(u) for u in grid])
    i = int(np.argmin(vals))
    best_u, best_v = grid[i], vals[i]
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, scan - 1)]
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        for u, v in ((c, fc), (d, fd)):
            if v < best_v:
                best_u, best_v = u, v
    return best_u, best_v


def tune(problem: TunerProblem) -> TuneResult:
    """Optimal (gamma, eta, alpha) for the selected mode."""

    def inner(u):
        gamma = math.exp(u)
        return _golden(lambda v: float(_objective(problem, gamma, math.exp(v))), LOG_LO, LOG_HI)

    u_best, _ = _golden(lambda u: inner(u)[1], LOG_LO, LOG_HI)
    v_best, z = inner(u_best)
    if not math.isfinite(z):
        raise InfeasibleError(f"no parameters satisfy the {problem.mode} cap z0={problem.z0:g}")
    gamma, eta = math.exp(u_best), math.exp(v_best)
    alpha = _alpha(gamma, eta, problem.constants.beta)
    c = problem.constants
    regret, violation = _bounds(gamma, eta, alpha, c, problem.T, 0.5)
    regret_proof, _ = _bounds(gamma, eta, alpha, c, problem.T, 2.0)
    return TuneResult(gamma, eta, alpha, z, regret, regret_proof, violation)


def grid_reference(problem: TunerProblem, points: int = 200, lo: float = 1e-2,
                   hi: float = 1e3) -> tuple[float, float, float]:
    """Brute-force minimum over a log-spaced (gamma, eta) grid: (objective, gamma, eta)."""
    axis = np.logspace(math.log10(lo), math.log10(hi), points)
    gamma, eta = np.meshgrid(axis, axis, indexing="ij")
    vals = _objective(problem, gamma, eta)
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return float(vals[i, j]), float(axis[i]), float(axis[j])


def oracle_gap(problem: TunerProblem, result: TuneResult, **grid) -> float:
    """Tuned objective divided by the grid reference (below 1 means the tuner wins)."""
    ref, _, _ = grid_reference(problem, **grid)
    return result.objective / ref
