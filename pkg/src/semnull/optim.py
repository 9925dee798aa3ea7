"""Bias-corrected Adam over named parameter dictionaries.

Pure functions: each step returns fresh parameter and state dictionaries, so
callers can replay or fork optimization without hidden mutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {b}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class AdamState:
    step: int
    m: dict
    v: dict

    @classmethod
    def initial(cls, params: dict) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(np.asarray(p, dtype=np.float64)) for k, p in params.items()},
            v={k: np.zeros_like(np.asarray(p, dtype=np.float64)) for k, p in params.items()},
        )


def adam_step(params: dict, grads: dict, state: AdamState, hyper: AdamHyper):
    """One update ``p -= lr * m_hat / (sqrt(v_hat) + eps)`` per parameter.

    Returns ``(new_params, new_state)``; inputs are left untouched.
    """
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ValueError("params, grads, and state must share the same keys")
    t = state.step + 1
    new_params, new_m, new_v = {}, {}, {}
    for key, p in params.items():
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(grads[key], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{key!r} shape {p.shape}"
            )
        m = hyper.beta1 * state.m[key] + (1.0 - hyper.beta1) * g
        v = hyper.beta2 * state.v[key] + (1.0 - hyper.beta2) * g * g
        m_hat = m / (1.0 - hyper.beta1 ** t)
        v_hat = v / (1.0 - hyper.beta2 ** t)
        new_params[key] = p - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.eps)
        new_m[key], new_v[key] = m, v
    return new_params, AdamState(step=t, m=new_m, v=new_v)
