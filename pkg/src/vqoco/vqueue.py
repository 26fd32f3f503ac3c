"""Virtual queues, the quadratic Lyapunov function and its drift."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


def _lyapunov(Q: np.ndarray) -> float:
    return 0.5 * float(Q @ Q)


@dataclass(frozen=True)
class QueueState:
    """Backlogs Q, L = ||Q||^2 / 2 and the drift of the update that produced Q."""

    Q: np.ndarray
    L: float = field(init=False)
    last_drift: float = 0.0

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float).reshape(-1)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "L", _lyapunov(Q))

    @classmethod
    def zeros(cls, m: int) -> "QueueState":
        return cls(np.zeros(m))

    @property
    def m(self) -> int:
        return len(self.Q)


def queue_update(state: QueueState, gtil) -> QueueState:
    """Q_k <- max(-gtil_k, Q_k + gtil_k) componentwise."""
    gtil = np.asarray(gtil, dtype=float).reshape(-1)
    if gtil.shape != state.Q.shape:
        raise InvalidArgumentError(f"queue has m={state.m}, constraint vector has {gtil.size}")
    Q = np.maximum(-gtil, state.Q + gtil)
    L = _lyapunov(Q)
    return QueueState(Q, last_drift=L - state.L)


def drift(state_before: QueueState, state_after: QueueState) -> float:
    if state_before.m != state_after.m:
        raise InvalidArgumentError("queue states have different dimensions")
    return 0.5 * (float(state_after.Q @ state_after.Q) - float(state_before.Q @ state_before.Q))


def violation_from_queue(Q_final, gamma: float) -> np.ndarray:
    """Certified upper bounds Q_k(T+1) / gamma on the cumulative violations."""
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    return np.asarray(Q_final, dtype=float) / gamma
