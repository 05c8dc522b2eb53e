"""Adaptive-moment gradient descent with global-norm clipping."""

from __future__ import annotations

import numpy as np

from .params import ParameterStore


class Adam:
    def __init__(
        self,
        store: ParameterStore,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        clip_norm: float = 5.0,
    ):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = {name: np.zeros_like(t.data) for name, t in store.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in store.items()}

    def step(self) -> float:
        """Apply one update from the accumulated gradients; returns the
        pre-clip global gradient norm. Parameters with no gradient this step
        and zero moments are left bit-identical."""
        grads = {}
        sq = 0.0
        for name, t in self.store.items():
            if t.grad is not None:
                grads[name] = t.grad
                sq += float((t.grad * t.grad).sum())
        norm = float(np.sqrt(sq))
        scale = 1.0
        if self.clip_norm > 0.0 and norm > self.clip_norm:
            scale = self.clip_norm / norm

        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, t in self.store.items():
            g = grads.get(name)
            m, v = self.m[name], self.v[name]
            if g is None:
                # moments decay toward zero; a parameter that has never seen a
                # gradient keeps m == v == 0 and is therefore left untouched
                if not m.any() and not v.any():
                    continue
                m *= self.beta1
                v *= self.beta2
            else:
                g = g * scale
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
            t.data = t.data - self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return norm

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"adam/t": np.array(float(self.t))}
        for name in self.store.names():
            out[f"adam/m/{name}"] = self.m[name]
            out[f"adam/v/{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["adam/t"])
        for name in self.store.names():
            self.m[name] = arrays[f"adam/m/{name}"].copy()
            self.v[name] = arrays[f"adam/v/{name}"].copy()
