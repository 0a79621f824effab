"""Dense float64 numerics shared by every other module.

Matrices are plain numpy float64 arrays, row-major. Randomness comes from
counter-based Philox streams keyed by (seed, stream id) so every component
of an experiment can be reseeded independently and reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS_NORM = 1e-8

# Named sub-streams. Keeping the ids stable is part of the reproducibility
# contract: a (seed, stream) pair must generate the same sequence forever.
STREAMS = {
    "weights": 0,
    "negative-labels": 1,
    "data-shuffle": 2,
    "graph": 3,
}


def make_rng(seed: int, stream: int | str = 0) -> np.random.Generator:
    """Independent, platform-stable generator for (seed, stream)."""
    if isinstance(stream, str):
        stream = STREAMS[stream]
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """v / max(||v||_2, 1e-8); the guard makes the zero vector a fixed point."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("l2_normalize: non-finite input")
    return v / max(np.linalg.norm(v), EPS_NORM)


def l2_normalize_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise l2_normalize of a (batch x dim) matrix."""
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("l2_normalize_rows: non-finite input")
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.maximum(norms, EPS_NORM)


def softmax_stable(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis with max-subtraction for overflow safety."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("softmax_stable: empty input")
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax_stable: non-finite input")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass
class AdamState:
    """Per-parameter Adam moments plus hyper-parameters.

    Weight decay is coupled L2: the decay term is folded into the gradient
    before the moment updates.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def for_param(cls, param: np.ndarray, lr: float = 1e-3,
                  weight_decay: float = 0.0, **kw) -> "AdamState":
        return cls(m=np.zeros_like(param, dtype=np.float64),
                   v=np.zeros_like(param, dtype=np.float64),
                   lr=lr, weight_decay=weight_decay, **kw)

    def copy(self) -> "AdamState":
        return AdamState(m=self.m.copy(), v=self.v.copy(), t=self.t,
                         lr=self.lr, beta1=self.beta1, beta2=self.beta2,
                         eps=self.eps, weight_decay=self.weight_decay)


def adam_step(params: np.ndarray, grad: np.ndarray,
              state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new params, mutates state."""
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ValueError(
            f"adam_step: shape mismatch params {params.shape} "
            f"grad {grad.shape} moments {state.m.shape}")
    if not np.all(np.isfinite(grad)):
        raise ValueError("adam_step: non-finite gradient")

    g = grad
    if state.weight_decay != 0.0:
        g = grad + state.weight_decay * params

    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps), state
