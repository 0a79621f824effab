"""Sensitivity of the goodness threshold (theta) and the propagation count
(T) on a harder synthetic task.

Expected shape: error drops sharply once theta moves off zero (at theta = 0
a neuron cannot push negative goodness below chance, and feature weights
collapse), then stays flat; the propagation count matters much less on a
task this small, so expect the T curve to be nearly flat.

Writes theta_curve.csv and t_curve.csv next to this script.
"""

import csv
import os

import numpy as np

from cyclicff.data import split, synth_blobs
from cyclicff.numerics import make_rng
from cyclicff.training import TrainConfig, evaluate, train_loop

HERE = os.path.dirname(os.path.abspath(__file__))
SEEDS = range(3)


def run(theta, T, seed):
    full = synth_blobs(2000, 20, 4, 1.5, make_rng(seed, 100))
    train, val = split(full, 0.2, make_rng(seed, "data-shuffle"))
    test = synth_blobs(200, 20, 4, 1.5, make_rng(seed, 101))
    cfg = TrainConfig(theta=theta, T=T, seed=seed, d_out=50, lr=0.01,
                      max_epochs=10, patience=10)
    net, _ = train_loop(cfg, train, val)
    return evaluate(net, test)


with open(os.path.join(HERE, "theta_curve.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["theta", "median_test_err"])
    for theta in (0.0, 0.5, 1.0, 2.0):
        med = float(np.median([run(theta, 3, s) for s in SEEDS]))
        w.writerow([theta, med])
        print(f"theta={theta}: median test error {med:.1f}%")

with open(os.path.join(HERE, "t_curve.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["T", "median_test_err"])
    for T in (1, 2, 4, 8):
        med = float(np.median([run(1.0, T, s) for s in SEEDS]))
        w.writerow([T, med])
        print(f"T={T}: median test error {med:.1f}%")
