"""Central-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .optim import ParamStore
from .tensor import NumericError, Tensor, no_grad


def grad_check(loss_fn: Callable[[ParamStore], Tensor], store: ParamStore, eps: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    ``loss_fn`` must rebuild the scalar loss from the store's current
    parameter values on every call.  Relative error per entry is
    |a - n| / max(|a|, |n|, 1e-8).
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    store.clear_grads()
    store.zero_grads()
    loss = loss_fn(store)
    if loss.data.size != 1:
        raise NumericError("grad_check: loss must be scalar")
    if not np.isfinite(loss.data).all():
        raise NumericError("grad_check: loss is not finite")
    loss.backward()
    analytic = {name: t.grad.copy() for name, t in store.items()}
    worst = 0.0
    with no_grad():
        for name, t in store.items():
            flat = t.data.reshape(-1)
            ana = analytic[name].reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + eps
                f_hi = float(loss_fn(store).data)
                flat[i] = keep - eps
                f_lo = float(loss_fn(store).data)
                flat[i] = keep
                numeric = (f_hi - f_lo) / (2.0 * eps)
                err = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), 1e-8)
                worst = max(worst, err)
    store.clear_grads()
    return worst
