"""Graph-over-MLP network: synchronous synapse propagation, the per-step
local training loop, the softmax readout over all neurons, and inference
with the neutral label.

Propagation is Jacobi-style: within a step every neuron reads only the
previous step's outputs, so the result is independent of neuron visiting
order, which is the property cyclic topologies need for reproducibility.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import graph as graphmod
from .data import FusionMode, FusedBatch, neutral_fusion
from .graph import Topology, predecessors
from .neuron import (NeuronParams, init_neuron, neuron_forward,
                     ff_loss_grad_outputs, neuron_step)
from .numerics import AdamState, adam_step, softmax_stable

CHECKPOINT_MAGIC = b"CNN1"
CHECKPOINT_VERSION = 1

STREAM_NAMES = ("pos", "neg", "neu")


@dataclass
class PropagationState:
    """Per-stream, per-neuron output matrices (batch x d_out)."""
    pos: list[np.ndarray]
    neg: list[np.ndarray]
    neu: list[np.ndarray]

    def stream(self, name: str) -> list[np.ndarray]:
        return getattr(self, name)


@dataclass
class CyclicNet:
    topology: Topology
    neurons: list[NeuronParams]
    readout_W: np.ndarray          # (n_classes, sum of d_out)
    readout_adam: AdamState
    base_dim: int                  # fused input dimension
    T: int
    n_classes: int
    fusion: FusionMode
    preds: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.preds:
            self.preds = [predecessors(self.topology, j)
                          for j in range(self.topology.n_neurons)]

    @property
    def raw_dim(self) -> int:
        if self.fusion.mode == "overlay":
            return self.base_dim
        return self.base_dim - self.n_classes

    def copy(self) -> "CyclicNet":
        return CyclicNet(topology=self.topology,
                         neurons=[n.copy() for n in self.neurons],
                         readout_W=self.readout_W.copy(),
                         readout_adam=self.readout_adam.copy(),
                         base_dim=self.base_dim, T=self.T,
                         n_classes=self.n_classes, fusion=self.fusion)


def build_network(t: Topology, base_dim: int, d_out: int, n_classes: int,
                  theta: float, T: int, rng: np.random.Generator,
                  lr: float = 1e-3, weight_decay: float = 0.0,
                  fusion: FusionMode = FusionMode("concat")) -> CyclicNet:
    """Resolve every neuron's input width from the topology and initialize.

    d_in(j) = base_dim + d_out per predecessor of j; d_out is uniform.
    """
    if T < 1 or d_out < 1:
        raise ValueError("build_network: need T >= 1 and d_out >= 1")
    neurons = []
    for j in range(t.n_neurons):
        d_in = base_dim + d_out * len(predecessors(t, j))
        neurons.append(init_neuron(d_in, d_out, theta, rng,
                                   lr=lr, weight_decay=weight_decay))
    readout_cols = d_out * t.n_neurons
    readout_W = np.zeros((n_classes, readout_cols))
    return CyclicNet(topology=t, neurons=neurons, readout_W=readout_W,
                     readout_adam=AdamState.for_param(readout_W, lr=lr,
                                                      weight_decay=weight_decay),
                     base_dim=base_dim, T=T, n_classes=n_classes,
                     fusion=fusion)


def zero_state(net: CyclicNet, batch: int) -> PropagationState:
    def zeros():
        return [np.zeros((batch, n.d_out)) for n in net.neurons]
    return PropagationState(pos=zeros(), neg=zeros(), neu=zeros())


def _neuron_input(fused_stream: np.ndarray, outputs: list[np.ndarray],
                  preds: list[int]) -> np.ndarray:
    if not preds:
        return fused_stream
    return np.concatenate([fused_stream] + [outputs[i] for i in preds], axis=1)


def propagate_step(net: CyclicNet, state: PropagationState,
                   fused: FusedBatch) -> PropagationState:
    """One synchronous round for all three streams."""
    fused_by_stream = {"pos": fused.h_pos, "neg": fused.h_neg,
                       "neu": fused.h_neu}
    new = {}
    for s in STREAM_NAMES:
        prev = state.stream(s)
        new[s] = [neuron_forward(net.neurons[j],
                                 _neuron_input(fused_by_stream[s], prev,
                                               net.preds[j]))
                  for j in range(net.topology.n_neurons)]
    return PropagationState(**new)


def readout_forward_loss_grad(net: CyclicNet, neu_outputs: list[np.ndarray],
                              labels: np.ndarray):
    """Softmax readout over the concatenation of all neurons' neutral
    outputs; returns (y_hat, loss, grad w.r.t. readout_W)."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) and int(labels.max()) >= net.n_classes:
        raise ValueError("readout: label out of range")
    x = np.concatenate(neu_outputs, axis=1)
    if x.shape[1] != net.readout_W.shape[1]:
        raise ValueError(
            f"readout: input has {x.shape[1]} cols, "
            f"expected {net.readout_W.shape[1]}")
    logits = x @ net.readout_W.T
    y_hat = softmax_stable(logits)
    batch = len(labels)
    picked = np.clip(y_hat[np.arange(batch), labels], 1e-12, None)
    loss = float(-np.mean(np.log(picked)))
    delta = y_hat.copy()
    delta[np.arange(batch), labels] -= 1.0
    grad = delta.T @ x / batch
    return y_hat, loss, grad


def train_iteration(net: CyclicNet, fused: FusedBatch,
                    freeze_neurons: bool = False,
                    freeze_readout: bool = False):
    """One batch of Algorithm-style local training.

    T rounds of: propagate all streams with current weights, compute each
    neuron's loss/gradient from this round's pos/neg inputs, then step. The
    outputs cached for the next round are the pre-update forward results.
    Neurons never see the neutral stream; the readout sees only it.
    """
    if fused.h_pos.shape[1] != net.base_dim:
        raise ValueError(
            f"train_iteration: fused dim {fused.h_pos.shape[1]} != "
            f"base_dim {net.base_dim}")
    n = net.topology.n_neurons
    batch = fused.h_pos.shape[0]
    state = zero_state(net, batch)
    loss_sums = np.zeros(n)

    for _ in range(net.T):
        new_pos, new_neg, new_neu, grads = [], [], [], []
        for j in range(n):
            h_in_pos = _neuron_input(fused.h_pos, state.pos, net.preds[j])
            h_in_neg = _neuron_input(fused.h_neg, state.neg, net.preds[j])
            h_in_neu = _neuron_input(fused.h_neu, state.neu, net.preds[j])
            loss, grad, h_pos, h_neg = ff_loss_grad_outputs(
                net.neurons[j], h_in_pos, h_in_neg)
            new_pos.append(h_pos)
            new_neg.append(h_neg)
            new_neu.append(neuron_forward(net.neurons[j], h_in_neu))
            grads.append(grad)
            loss_sums[j] += loss
        # All forwards done with pre-update weights; only now step.
        if not freeze_neurons:
            for j in range(n):
                neuron_step(net.neurons[j], grads[j])
        state = PropagationState(pos=new_pos, neg=new_neg, neu=new_neu)

    _, readout_loss, readout_grad = readout_forward_loss_grad(
        net, state.neu, fused.true_labels)
    if not freeze_readout:
        net.readout_W, net.readout_adam = adam_step(
            net.readout_W, readout_grad, net.readout_adam)

    return net, loss_sums / net.T, readout_loss


def predict(net: CyclicNet, features: np.ndarray) -> np.ndarray:
    """Neutral-label inference: T frozen propagation rounds, readout argmax.
    Ties break toward the lowest class index."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != net.raw_dim:
        raise ValueError(
            f"predict: features have {features.shape[1]} cols, "
            f"expected {net.raw_dim}")
    h_neu = neutral_fusion(features, net.n_classes, net.fusion)
    outputs = [np.zeros((len(features), n.d_out)) for n in net.neurons]
    for _ in range(net.T):
        outputs = [neuron_forward(net.neurons[j],
                                  _neuron_input(h_neu, outputs, net.preds[j]))
                   for j in range(net.topology.n_neurons)]
    logits = np.concatenate(outputs, axis=1) @ net.readout_W.T
    return np.argmax(logits, axis=1)


def save_checkpoint(net: CyclicNet, path) -> None:
    """Little-endian binary checkpoint; weights stored as float32."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        fusion_flag = 1 if net.fusion.mode == "overlay" else 0
        f.write(struct.pack("<IIIII", CHECKPOINT_VERSION, net.T,
                            net.base_dim, net.n_classes, fusion_flag))
        t = net.topology
        f.write(struct.pack("<II", t.n_neurons, len(t.synapses)))
        for src, dst in t.synapses:
            f.write(struct.pack("<II", src, dst))
        for p in net.neurons:
            f.write(struct.pack("<IId", p.d_in, p.d_out, p.theta))
            f.write(p.W.astype("<f4").tobytes())
        rows, cols = net.readout_W.shape
        f.write(struct.pack("<II", rows, cols))
        f.write(net.readout_W.astype("<f4").tobytes())


def load_checkpoint(path) -> CyclicNet:
    with open(path, "rb") as f:
        if f.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("checkpoint: bad magic")
        version, T, base_dim, n_classes, fusion_flag = struct.unpack(
            "<IIIII", f.read(20))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint: unsupported version {version}")
        n, n_edges = struct.unpack("<II", f.read(8))
        edges = [struct.unpack("<II", f.read(8)) for _ in range(n_edges)]
        topo = Topology(n_neurons=n, synapses=tuple(edges))
        neurons = []
        for _ in range(n):
            d_in, d_out, theta = struct.unpack("<IId", f.read(16))
            W = np.frombuffer(f.read(d_in * d_out * 4),
                              dtype="<f4").astype(np.float64)
            W = W.reshape(d_out, d_in)
            neurons.append(NeuronParams(W=W, adam=AdamState.for_param(W),
                                        theta=theta, d_in=d_in, d_out=d_out))
        rows, cols = struct.unpack("<II", f.read(8))
        readout_W = np.frombuffer(f.read(rows * cols * 4),
                                  dtype="<f4").astype(np.float64)
        readout_W = readout_W.reshape(rows, cols)
    fusion = FusionMode("overlay" if fusion_flag else "concat")
    return CyclicNet(topology=topo, neurons=neurons, readout_W=readout_W,
                     readout_adam=AdamState.for_param(readout_W),
                     base_dim=base_dim, T=T, n_classes=n_classes,
                     fusion=fusion)
