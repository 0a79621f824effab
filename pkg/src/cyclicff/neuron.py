"""One computational neuron: linear map + ReLU on an L2-normalized input,
goodness scoring, and the local forward-forward loss with its closed-form
gradient.

Gradients stop at the neuron boundary: the normalized input is a constant
with respect to W, so the chain rule covers only ReLU o linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import AdamState, adam_step, l2_normalize_rows, relu, sigmoid

PROB_CLAMP = 1e-12


@dataclass
class NeuronParams:
    W: np.ndarray          # (d_out, d_in)
    adam: AdamState
    theta: float
    d_in: int
    d_out: int

    def copy(self) -> "NeuronParams":
        return NeuronParams(W=self.W.copy(), adam=self.adam.copy(),
                            theta=self.theta, d_in=self.d_in, d_out=self.d_out)


def init_neuron(d_in: int, d_out: int, theta: float,
                rng: np.random.Generator, lr: float = 1e-3,
                weight_decay: float = 0.0) -> NeuronParams:
    """Uniform init on [-1/sqrt(d_in), +1/sqrt(d_in)]."""
    bound = 1.0 / np.sqrt(d_in)
    W = rng.uniform(-bound, bound, size=(d_out, d_in))
    return NeuronParams(W=W, adam=AdamState.for_param(W, lr=lr,
                                                      weight_decay=weight_decay),
                        theta=theta, d_in=d_in, d_out=d_out)


def _forward_parts(p: NeuronParams, h_in: np.ndarray):
    """Returns (normalized input, pre-activation, output)."""
    if h_in.shape[1] != p.d_in:
        raise ValueError(
            f"neuron_forward: input has {h_in.shape[1]} cols, expected {p.d_in}")
    h_tilde = l2_normalize_rows(h_in)
    z = h_tilde @ p.W.T
    return h_tilde, z, relu(z)


def neuron_forward(p: NeuronParams, h_in: np.ndarray) -> np.ndarray:
    return _forward_parts(p, h_in)[2]


def goodness(h: np.ndarray, theta: float) -> np.ndarray:
    """Per-row logistic(sum(h^2) - theta * n_cols); the probability that the
    row came from the positive stream."""
    h = np.asarray(h, dtype=np.float64)
    if not np.all(np.isfinite(h)):
        raise ValueError("goodness: non-finite input")
    g = np.sum(h * h, axis=-1)
    return sigmoid(g - theta * h.shape[-1])


def ff_loss_and_grad(p: NeuronParams, h_in_pos: np.ndarray,
                     h_in_neg: np.ndarray) -> tuple[float, np.ndarray]:
    loss, grad, _, _ = ff_loss_grad_outputs(p, h_in_pos, h_in_neg)
    return loss, grad


def ff_loss_grad_outputs(p: NeuronParams, h_in_pos: np.ndarray,
                         h_in_neg: np.ndarray):
    """Loss, gradient w.r.t. W, and both output batches in one pass.

    loss = -mean[log p(pos) + log(1 - p(neg))] with probabilities clamped
    to [1e-12, 1 - 1e-12] inside the logs.
    """
    if h_in_pos.shape[0] != h_in_neg.shape[0]:
        raise ValueError("ff_loss: pos/neg batch size mismatch")
    batch = h_in_pos.shape[0]

    ht_pos, z_pos, h_pos = _forward_parts(p, h_in_pos)
    ht_neg, z_neg, h_neg = _forward_parts(p, h_in_neg)

    p_pos = goodness(h_pos, p.theta)
    p_neg = goodness(h_neg, p.theta)
    loss = -np.mean(np.log(np.clip(p_pos, PROB_CLAMP, 1 - PROB_CLAMP))
                    + np.log(np.clip(1.0 - p_neg, PROB_CLAMP, 1 - PROB_CLAMP)))

    # d loss / d logit: -(1-p)/B for positive rows, +p/B for negative rows;
    # d logit / d h = 2h, then mask through the ReLU.
    da_pos = -(1.0 - p_pos) / batch
    da_neg = p_neg / batch
    dz_pos = (da_pos[:, None] * 2.0 * h_pos) * (z_pos > 0)
    dz_neg = (da_neg[:, None] * 2.0 * h_neg) * (z_neg > 0)
    grad = dz_pos.T @ ht_pos + dz_neg.T @ ht_neg
    return float(loss), grad, h_pos, h_neg


def neuron_step(p: NeuronParams, grad_W: np.ndarray) -> NeuronParams:
    """Apply one Adam update to W in place."""
    p.W, p.adam = adam_step(p.W, grad_W, p.adam)
    return p
