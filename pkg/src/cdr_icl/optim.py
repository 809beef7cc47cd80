from __future__ import annotations

from dataclasses import dataclass, field
from typing import MutableMapping

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: MutableMapping[str, np.ndarray],
              grads: MutableMapping[str, np.ndarray], lr: float | None = None) -> MutableMapping[str, np.ndarray]:
    """One bias-corrected Adam update, applied to ``params`` in place.

    ``lr`` overrides ``state.lr`` for this step only (used by schedules).
    """
    if set(grads) != set(params):
        raise ValueError(f"gradient keys {sorted(grads)} do not match parameters {sorted(params)}")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise ValueError(f"gradient for {name!r} has shape {grads[name].shape}, expected {p.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    step_size = (state.lr if lr is None else lr) / bc1
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step_size * m / (np.sqrt(v / bc2) + state.eps)
    return params
