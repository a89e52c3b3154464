"""AdamW with decoupled weight decay and bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamW:
    """Holds first/second moment accumulators per parameter plus the step count.

    `step()` applies one update from the parameters' `.grad` fields and
    returns False (leaving everything untouched) when any gradient is
    non-finite.
    """

    params: dict[str, Tensor]
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.95)
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.m.setdefault(name, np.zeros_like(p.data))
            self.v.setdefault(name, np.zeros_like(p.data))
            if self.m[name].shape != p.data.shape:
                raise ValueError(f"AdamW: moment shape {self.m[name].shape} vs param {p.data.shape} for {name!r}")

    def step(self) -> bool:
        grads = {}
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                return False
            grads[name] = g
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            mhat = m / c1
            vhat = v / c2
            p.data -= self.lr * (mhat / (np.sqrt(vhat) + self.eps))
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
        return True

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Moment buffers keyed for checkpointing."""
        out = {}
        for name in self.params:
            out[f"opt.m.{name}"] = self.m[name]
            out[f"opt.v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int):
        for name, p in self.params.items():
            m = arrays.get(f"opt.m.{name}")
            v = arrays.get(f"opt.v.{name}")
            if m is None or v is None:
                raise KeyError(f"AdamW: missing optimizer state for {name!r}")
            if m.shape != p.data.shape or v.shape != p.data.shape:
                raise ValueError(f"AdamW: state shape mismatch for {name!r}")
            self.m[name] = m.astype(p.data.dtype, copy=True)
            self.v[name] = v.astype(p.data.dtype, copy=True)
        self.t = int(t)


def adamw_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamW) -> bool:
    """Functional form: assign `grads`, apply one AdamW update via `state`."""
    for name, p in params.items():
        if name not in grads:
            raise KeyError(f"adamw_step: missing gradient for {name!r}")
        if grads[name].shape != p.data.shape:
            raise ValueError(f"adamw_step: grad shape {grads[name].shape} vs param {p.data.shape} for {name!r}")
        p.grad = np.asarray(grads[name], dtype=p.data.dtype)
    applied = state.step()
    state.zero_grad()
    return applied
