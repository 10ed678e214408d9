"""Small feed-forward networks with explicit reverse-mode gradients.

The architecture is fixed: affine - ReLU - affine - ReLU - affine.  Shapes are
tiny (hidden widths 64-256), so parameters are plain numpy arrays and the
backward pass is written out by hand; no autodiff engine.

Parameters are a list of (W, b) pairs.  A leading stack dimension is
supported so that e.g. twin critics evaluate in one batched matmul: with
``W: (S, n_in, n_out)``, ``b: (S, 1, n_out)`` and inputs ``(S, B, n_in)``,
all operations broadcast over S.
"""

from __future__ import annotations

import numpy as np

Params = list[tuple[np.ndarray, np.ndarray]]


def init_mlp(sizes, rng: np.random.Generator, stack: int | None = None, dtype=np.float64) -> Params:
    """Weights uniform in +-1/sqrt(fan_in), biases zero."""
    params: Params = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        if stack is None:
            w = rng.uniform(-bound, bound, size=(n_in, n_out)).astype(dtype)
            b = np.zeros(n_out, dtype=dtype)
        else:
            w = rng.uniform(-bound, bound, size=(stack, n_in, n_out)).astype(dtype)
            b = np.zeros((stack, 1, n_out), dtype=dtype)
        params.append((w, b))
    return params


def mlp_forward(params: Params, x: np.ndarray):
    """Forward pass; returns (output, cache) with cache holding each layer's
    input activations for the backward pass."""
    inputs = [x]
    a = x
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        z = a @ w
        z += b
        if i < last:
            a = np.maximum(z, 0.0, out=z)
            inputs.append(a)
        else:
            a = z
    return a, inputs


def mlp_backward(params: Params, cache, dy: np.ndarray, need_param_grads: bool = True):
    """Backward pass from output cotangent dy.

    Returns (grads, dx): grads matches the params structure (or None when
    ``need_param_grads`` is off), dx is the gradient with respect to the
    network input.  The ReLU mask is recovered from the cached activations
    (a > 0 iff z > 0).
    """
    inputs = cache
    grads: list[tuple[np.ndarray, np.ndarray]] | None = (
        [None] * len(params) if need_param_grads else None
    )
    delta = dy
    for i in reversed(range(len(params))):
        w, b = params[i]
        if need_param_grads:
            a_in = inputs[i]
            if w.ndim == 3:
                dw = np.swapaxes(a_in, -1, -2) @ delta
                db = delta.sum(axis=-2, keepdims=True)
            else:
                dw = a_in.T @ delta
                db = delta.sum(axis=0)
            grads[i] = (dw, db)
        if i > 0:
            delta = delta @ np.swapaxes(w, -1, -2)
            delta *= inputs[i] > 0.0
    dx = delta @ np.swapaxes(params[0][0], -1, -2)
    return grads, dx


def flatten_params(params: Params) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in params])


def set_flat_params(params: Params, flat: np.ndarray) -> None:
    i = 0
    for w, b in params:
        w.flat[:] = flat[i : i + w.size]
        i += w.size
        b.flat[:] = flat[i : i + b.size]
        i += b.size


def copy_params(params: Params) -> Params:
    return [(w.copy(), b.copy()) for w, b in params]


def polyak_update(targets: Params, live: Params, rho: float) -> None:
    """Exponential moving average: targ <- rho*targ + (1-rho)*live, in place."""
    for (tw, tb), (lw, lb) in zip(targets, live):
        tw *= rho
        tw += (1.0 - rho) * lw
        tb *= rho
        tb += (1.0 - rho) * lb


class Adam:
    """Adaptive-moment optimizer with decay rates 0.9/0.999 and eps 1e-8."""

    def __init__(self, params: Params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
        self.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        scale = self.lr / b1c
        for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params, grads, self.m, self.v):
            for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * np.square(g)
                denom = np.sqrt(v / b2c)
                denom += self.eps
                p -= scale * m / denom

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"t": np.array([self.t])}
        for i, ((mw, mb), (vw, vb)) in enumerate(zip(self.m, self.v)):
            out[f"m{i}w"], out[f"m{i}b"] = mw, mb
            out[f"v{i}w"], out[f"v{i}b"] = vw, vb
        return out
