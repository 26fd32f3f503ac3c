"""Problem instances: simple sets, constraint maps and the constants D, beta, G, R, eps."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError, MissingConstantsError, SlaterViolationError

SLATER_FLOOR = 1e-6
SLATER_ITERS = 5000
MAX_VERTEX_DIM = 20
BALL_SLACK = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_finite(point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError(f"non-finite point: {p!r}")
    return p


@dataclass(frozen=True)
class SimpleSet:
    """A box or a Euclidean ball; both admit exact closed-form projection.

    Build with :meth:`box` or :meth:`ball` rather than the raw constructor.
    """

    kind: str
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center_: Optional[np.ndarray] = None
    radius: Optional[float] = None

    @classmethod
    def box(cls, lower, upper) -> "SimpleSet":
        lo, hi = _frozen(np.atleast_1d(lower)), _frozen(np.atleast_1d(upper))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidArgumentError("box bounds must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise InvalidArgumentError("box requires lower < upper in every coordinate")
        return cls(kind="box", lower=lo, upper=hi)

    @classmethod
    def ball(cls, center, radius: float) -> "SimpleSet":
        c = _frozen(np.atleast_1d(center))
        if not radius > 0:
            raise InvalidArgumentError("ball radius must be positive")
        return cls(kind="ball", center_=c, radius=float(radius))

    @property
    def dim(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center_)

    @property
    def center(self) -> np.ndarray:
        if self.kind == "box":
            return 0.5 * (self.lower + self.upper)
        return np.array(self.center_)

    @property
    def diameter(self) -> float:
        if self.kind == "box":
            return float(np.linalg.norm(self.upper - self.lower))
        return 2.0 * self.radius

    def project(self, point) -> np.ndarray:
        return project_simple(self, point)

    def distance(self, point) -> float:
        p = np.asarray(point, dtype=float)
        return float(np.linalg.norm(p - self.project(p)))

    def contains(self, point, tol: float = 1e-9) -> bool:
        return self.distance(point) <= tol

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform samples, shape (size, n)."""
        n = self.dim
        if self.kind == "box":
            return rng.uniform(self.lower, self.upper, size=(size, n))
        u = rng.standard_normal((size, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(size, 1)) ** (1.0 / n)
        return self.center_ + r * u

    def vertices(self) -> np.ndarray:
        if self.kind != "box":
            raise InvalidArgumentError("only boxes have vertices")
        return np.array(list(itertools.product(*zip(self.lower, self.upper))), dtype=float)


def project_simple(simple_set: SimpleSet, point) -> np.ndarray:
    """Euclidean projection onto a box (clamp) or a ball (radial scaling)."""
    p = _check_finite(point)
    if simple_set.kind == "box":
        return np.minimum(np.maximum(p, simple_set.lower), simple_set.upper)
    diff = p - simple_set.center_
    norm = np.linalg.norm(diff)
    # rescaled points sit on the sphere only up to rounding; accept them as inside
    if norm <= simple_set.radius * (1.0 + BALL_SLACK):
        return p.copy()
    return simple_set.center_ + diff * (simple_set.radius / norm)


class LinearConstraints:
    """g(x) = A x - b."""

    is_linear = True

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise InvalidArgumentError(f"A has {A.shape[0]} rows but b has {b.shape[0]}")
        self.A = _frozen(A)
        self.b = _frozen(b)
        self.m, self.n = A.shape
        self.smoothness = np.zeros(self.m)

    def __call__(self, x) -> np.ndarray:
        return self.A @ x - self.b

    def jacobian(self, x) -> np.ndarray:
        return self.A

    def __repr__(self):
        return f"LinearConstraints(m={self.m}, n={self.n})"


class GenericConstraints:
    """Black-box convex constraints.

    ``func(x)`` returns the m-vector g(x); ``jac(x)`` returns an (m, n) matrix whose
    rows are subgradients. ``smoothness`` optionally gives per-component Lipschitz
    constants of the gradients; it sets the inner solver's step size.
    """

    is_linear = False

    def __init__(self, func: Callable, jac: Callable, m: int, n: int, smoothness=None):
        if m < 1 or n < 1:
            raise InvalidArgumentError("constraints need m >= 1 and n >= 1")
        self.func = func
        self.jac = jac
        self.m, self.n = int(m), int(n)
        self.smoothness = None if smoothness is None else _frozen(np.broadcast_to(smoothness, (m,)))

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.func(x), dtype=float))

    def jacobian(self, x) -> np.ndarray:
        return np.asarray(self.jac(x), dtype=float).reshape(self.m, self.n)

    def __repr__(self):
        return f"GenericConstraints(m={self.m}, n={self.n})"


def sphere_constraints(centers, radii) -> GenericConstraints:
    """g_k(x) = ||x - c_k||^2 - r_k^2, one row of ``centers`` per constraint."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    r2 = np.atleast_1d(np.asarray(radii, dtype=float)) ** 2
    m, n = C.shape

    def func(x):
        d = x - C
        return np.einsum("ij,ij->i", d, d) - r2

    def jac(x):
        return 2.0 * (x - C)

    g = GenericConstraints(func, jac, m, n, smoothness=2.0)
    g.centers, g.radii = _frozen(C), _frozen(np.sqrt(r2))
    return g


def sphere_bounds(box: SimpleSet, centers, radii) -> tuple[float, float]:
    """Upper bounds (beta, G) for :func:`sphere_constraints` over a box."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    r2 = np.atleast_1d(np.asarray(radii, dtype=float)) ** 2
    far = np.linalg.norm(np.maximum(np.abs(box.lower - C), np.abs(box.upper - C)), axis=1)
    near = np.linalg.norm(C - np.clip(C, box.lower, box.upper), axis=1)
    beta = float(np.linalg.norm(2.0 * far))
    G = float(np.linalg.norm(np.maximum(np.abs(far**2 - r2), np.abs(near**2 - r2))))
    return beta, G


@dataclass(frozen=True)
class ProblemInstance:
    """The simple set X0, the constraint map g and the constants of the analysis.

    ``D`` bounds loss gradients, ``beta`` is the Lipschitz modulus of g, ``G`` bounds
    ||g|| and ``R`` the diameter of X0. ``epsilon``/``slater_point`` certify
    g_k(slater_point) <= -epsilon for every k. Any of them may be ``None`` until
    filled by :func:`derive_constants` / :func:`estimate_slater` or the caller.
    """

    simple_set: SimpleSet
    constraints: object
    D: Optional[float] = None
    beta: Optional[float] = None
    G: Optional[float] = None
    R: Optional[float] = None
    epsilon: Optional[float] = None
    slater_point: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.constraints.n != self.simple_set.dim:
            raise InvalidArgumentError(
                f"constraints act on R^{self.constraints.n}, set lives in R^{self.simple_set.dim}"
            )
        if self.slater_point is not None:
            object.__setattr__(self, "slater_point", _frozen(self.slater_point))

    @property
    def n(self) -> int:
        return self.simple_set.dim

    @property
    def m(self) -> int:
        return self.constraints.m

    def g(self, x) -> np.ndarray:
        return self.constraints(x)

    def replace(self, **changes) -> "ProblemInstance":
        return dataclasses.replace(self, **changes)

    def require(self, *names: str) -> None:
        missing = [k for k in names if getattr(self, k) is None]
        if missing:
            if "epsilon" in missing:
                raise SlaterViolationError("instance has no Slater margin epsilon")
            raise MissingConstantsError(f"instance lacks constants: {', '.join(missing)}")

    def constants(self) -> dict:
        out = {k: getattr(self, k) for k in ("D", "beta", "G", "R", "epsilon")}
        out["slater_point"] = None if self.slater_point is None else self.slater_point.tolist()
        return out

    def check(self, rng: Optional[np.random.Generator] = None, pairs: int = 100,
              tol: float = 1e-9) -> list[str]:
        """Spot-check the declared constants; returns a list of violated claims."""
        rng = np.random.default_rng(0) if rng is None else rng
        problems = []
        if self.slater_point is not None:
            if not self.simple_set.contains(self.slater_point, tol):
                problems.append("slater point outside X0")
            if self.epsilon is not None and np.any(self.g(self.slater_point) > -self.epsilon + tol):
                problems.append("g(slater_point) > -epsilon")
        xs = self.simple_set.sample(rng, pairs)
        ys = self.simple_set.sample(rng, pairs)
        for x, y in zip(xs, ys):
            gx, gy = self.g(x), self.g(y)
            dist = np.linalg.norm(x - y)
            if self.beta is not None and np.linalg.norm(gx - gy) > self.beta * dist + tol:
                problems.append("Lipschitz bound beta violated")
            if self.G is not None and np.linalg.norm(gx) > self.G + tol:
                problems.append("bound G violated")
            if self.R is not None and dist > self.R + tol:
                problems.append("diameter R violated")
        return sorted(set(problems))


def scaled_constraints(instance: ProblemInstance, gamma: float, point) -> np.ndarray:
    """gamma * g(point)."""
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    return gamma * instance.g(np.asarray(point, dtype=float))


def spectral_norm(A, tol: float = 1e-14, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on A^T A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = A.T @ A
    v = np.ones(M.shape[0]) + np.linspace(0.0, 1e-3, M.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam_new = float(v_new @ M @ v_new)
        if abs(lam_new - lam) <= tol * max(lam_new, 1.0) and np.linalg.norm(v_new - v) < 1e-10:
            lam = lam_new
            break
        v, lam = v_new, lam_new
    return float(np.sqrt(max(lam, 0.0)))


def _linear_G(simple_set: SimpleSet, A, b, beta: float) -> float:
    if simple_set.kind == "box":
        if simple_set.dim <= MAX_VERTEX_DIM:
            V = simple_set.vertices()
            return float(np.max(np.linalg.norm(V @ A.T - b, axis=1)))
        c = simple_set.center
        half = 0.5 * (simple_set.upper - simple_set.lower)
        return float(np.linalg.norm(np.abs(A @ c - b) + np.abs(A) @ half))
    return float(np.linalg.norm(A @ simple_set.center_ - b) + beta * simple_set.radius)


def derive_constants(instance: ProblemInstance, samples: Optional[int] = None,
                     seed: int = 0) -> ProblemInstance:
    """Fill beta, G and R; values already on the instance are kept.

    Linear constraints get exact values (spectral norm, vertex maximum). Generic
    constraints need ``samples`` for a sampled estimate, or user-supplied values.
    """
    S, g = instance.simple_set, instance.constraints
    changes = {}
    if instance.R is None:
        changes["R"] = S.diameter
    if g.is_linear:
        beta = instance.beta if instance.beta is not None else spectral_norm(g.A)
        changes["beta"] = beta
        if instance.G is None:
            changes["G"] = _linear_G(S, g.A, g.b, beta)
    elif instance.beta is None or instance.G is None:
        if not samples:
            raise MissingConstantsError(
                "generic constraints need user-supplied beta/G or a sampling budget"
            )
        rng = np.random.default_rng(seed)
        xs, ys = S.sample(rng, samples), S.sample(rng, samples)
        gx = np.array([g(x) for x in xs])
        gy = np.array([g(y) for y in ys])
        if instance.beta is None:
            ratio = np.linalg.norm(gx - gy, axis=1) / np.maximum(np.linalg.norm(xs - ys, axis=1), 1e-300)
            jac = max(np.linalg.norm(g.jacobian(x), 2) for x in xs)
            changes["beta"] = float(max(ratio.max(), jac))
        if instance.G is None:
            pts = np.vstack([gx, gy])
            if S.kind == "box" and S.dim <= 10:
                pts = np.vstack([pts, [g(v) for v in S.vertices()]])
            changes["G"] = float(np.linalg.norm(pts, axis=1).max())
    return instance.replace(**changes)


def estimate_slater(instance: ProblemInstance, tolerance: float = SLATER_FLOOR,
                    iters: int = SLATER_ITERS) -> tuple[np.ndarray, float]:
    """Approximately minimise max_k g_k over X0; returns (x_hat, eps = -max_k g_k(x_hat)).

    Projected subgradient with normalised steps R/sqrt(j). Both the running average and
    the best iterate are kept and the better certificate is returned.
    """
    S, g = instance.simple_set, instance.constraints
    radius = S.diameter if instance.R is None else instance.R
    x = S.project(S.center)
    avg = np.zeros_like(x)
    best, best_val = x.copy(), float(np.max(g(x)))
    for j in range(1, iters + 1):
        vals = g(x)
        k = int(np.argmax(vals))
        if vals[k] < best_val:
            best, best_val = x.copy(), float(vals[k])
        s = g.jacobian(x)[k]
        norm = np.linalg.norm(s)
        if norm == 0.0:
            best, best_val = x.copy(), float(vals[k])
            break
        x = S.project(x - (radius / np.sqrt(j)) * s / norm)
        avg += (x - avg) / j
    val = float(np.max(g(x)))
    if val < best_val:
        best, best_val = x, val
    avg_val = float(np.max(g(avg)))
    if avg_val < best_val:
        best, best_val = avg, avg_val
    eps = -best_val
    if eps <= tolerance:
        raise SlaterViolationError(f"Slater margin {eps:.3g} is not above {tolerance:g}")
    return best, eps


def with_slater(instance: ProblemInstance, tolerance: float = SLATER_FLOOR) -> ProblemInstance:
    """Return a copy carrying an estimated Slater point unless one is already declared."""
    if instance.epsilon is not None and instance.slater_point is not None:
        return instance
    x_hat, eps = estimate_slater(instance, tolerance)
    return instance.replace(slater_point=x_hat, epsilon=eps)
