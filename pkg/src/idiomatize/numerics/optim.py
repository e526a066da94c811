"""Named parameter store and the Adam update used by every model."""

from __future__ import annotations

import math

import numpy as np

from ..rng import Rng
from .tensor import NumericError, Tensor

INIT_SCALE = 0.08


class ParamStore:
    """Ordered name -> Tensor map plus Adam moment buffers."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self._moment1: dict[str, np.ndarray] = {}
        self._moment2: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, shape: tuple[int, ...], rng: Rng, scale: float = INIT_SCALE) -> Tensor:
        """New parameter with entries uniform in (-scale, scale), row-major draw order."""
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        size = 1
        for s in shape:
            size *= s
        values = np.array([rng.uniform(-scale, scale) for _ in range(size)], dtype=np.float64)
        t = Tensor(values.reshape(shape), requires_grad=True)
        self.params[name] = t
        return t

    def add_zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.zeros(shape, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def items(self):
        return self.params.items()

    def zero_grads(self) -> None:
        for t in self.params.values():
            t.grad = np.zeros_like(t.data)

    def clear_grads(self) -> None:
        for t in self.params.values():
            t.grad = None


def global_grad_norm(store: ParamStore) -> float:
    total = 0.0
    for t in store.params.values():
        if t.grad is not None:
            total += float((t.grad**2).sum())
    return math.sqrt(total)


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    clip_norm: float | None = 5.0,
) -> None:
    """One bias-corrected Adam update over every parameter in the store.

    Gradients are consumed: a second call without a fresh backward pass
    raises instead of silently re-stepping on stale gradients.
    """
    for name, t in store.params.items():
        if t.grad is None:
            raise NumericError(f"adam_step: no gradient for parameter {name!r}")
        if not np.isfinite(t.grad).all():
            raise NumericError(f"adam_step: non-finite gradient for parameter {name!r}")
    if clip_norm is not None:
        norm = global_grad_norm(store)
        if norm > clip_norm:
            scale = clip_norm / norm
            for t in store.params.values():
                t.grad *= scale
    store.step_count += 1
    c1 = 1.0 - beta1**store.step_count
    c2 = 1.0 - beta2**store.step_count
    for name, t in store.params.items():
        g = t.grad
        m = store._moment1.get(name)
        if m is None:
            m = store._moment1[name] = np.zeros_like(t.data)
        v = store._moment2.get(name)
        if v is None:
            v = store._moment2[name] = np.zeros_like(t.data)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g**2
        t.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        if not np.isfinite(t.data).all():
            raise NumericError(f"non-finite values in parameter {name!r} after update")
        t.grad = None
