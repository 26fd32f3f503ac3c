"""Seeded random problem families shared by the property and acceptance suites."""

import numpy as np

from vqoco.algorithm import FunctionLosses, LinearLosses
from vqoco.problem import (
    LinearConstraints,
    ProblemInstance,
    SimpleSet,
    derive_constants,
    sphere_bounds,
    sphere_constraints,
)

DIMS = (1, 2, 5)
COUNTS = (1, 3, 5)


def random_instance(seed: int, n: int, m: int, kind: str) -> ProblemInstance:
    """Box [-1,1]^n with linear or sphere constraints; the origin is a Slater point."""
    rng = np.random.default_rng([seed, n, m, kind == "linear"])
    box = SimpleSet.box(-np.ones(n), np.ones(n))
    if kind == "linear":
        A = rng.standard_normal((m, n))
        b = rng.uniform(0.2, 1.5, size=m)
        inst = derive_constants(ProblemInstance(box, LinearConstraints(A, b)))
        eps = float(b.min())
    else:
        C = rng.uniform(-0.5, 0.5, size=(m, n))
        margin = rng.uniform(0.2, 1.0, size=m)
        radii = np.sqrt(np.einsum("ij,ij->i", C, C) + margin)
        beta, G = sphere_bounds(box, C, radii)
        inst = ProblemInstance(box, sphere_constraints(C, radii), beta=beta, G=G, R=box.diameter)
        eps = float(margin.min())
    return inst.replace(slater_point=np.zeros(n), epsilon=eps)


def random_losses(seed: int, inst: ProblemInstance, T: int, kind: str):
    """Returns (losses, D). Linear costs in [-1,1]^n or quadratics ||x - v_t||^2."""
    rng = np.random.default_rng([seed, 7])
    n = inst.n
    if kind == "linear":
        return LinearLosses(rng.uniform(-1, 1, size=(T + 1, n))), float(np.sqrt(n))
    V = rng.uniform(-1, 1, size=(T + 1, n))
    losses = FunctionLosses(
        lambda t, x: float((x - V[t]) @ (x - V[t])), lambda t, x: 2.0 * (x - V[t])
    )
    return losses, 2.0 * inst.simple_set.diameter


def battery(count: int = 100):
    """(index, n, m, constraint kind, loss kind) covering every n, m and both kinds."""
    out = []
    for i in range(count):
        n = DIMS[i % 3]
        m = COUNTS[(i // 3) % 3]
        kind = "linear" if (i // 9) % 2 == 0 else "quadratic"
        loss = "linear" if i % 2 == 0 else "quadratic"
        out.append((i, n, m, kind, loss))
    return out


def tuner_battery():
    """20 (constants, T) pairs spanning three orders of magnitude per constant."""
    from vqoco.tuner import Constants

    rng = np.random.default_rng(2024)
    out = []
    for i in range(20):
        D, G, R, beta = 10 ** rng.uniform(-1, 1, 4)
        eps = float(min(G, 10 ** rng.uniform(-1.5, 0))) * 0.9
        T = int(10 ** rng.uniform(1.5, 4.5))
        out.append((Constants(float(D), float(G), float(R), float(beta), eps), T))
    return out
