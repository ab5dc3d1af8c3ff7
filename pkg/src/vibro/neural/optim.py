from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams


@dataclass
class AdamState:
    step: int = 0
    m: ModelParams = field(default_factory=ModelParams)
    v: ModelParams = field(default_factory=ModelParams)

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(0, params.map(np.zeros_like), params.map(np.zeros_like))


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update.  Returns new params and state; inputs are not mutated."""
    t = state.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_p, new_m, new_v = ModelParams(), ModelParams(), ModelParams()
    for g, block in params.groups():
        gm, gv, gg = getattr(state.m, g), getattr(state.v, g), getattr(grads, g)
        pd, md, vd = getattr(new_p, g), getattr(new_m, g), getattr(new_v, g)
        for k, p in block.items():
            grad = gg[k]
            m = beta1 * gm[k] + (1.0 - beta1) * grad
            v = beta2 * gv[k] + (1.0 - beta2) * grad * grad
            pd[k] = p - lr * (m / c1) / (np.sqrt(v / c2) + eps)
            md[k], vd[k] = m, v
    return new_p, AdamState(t, new_m, new_v)
