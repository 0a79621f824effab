import gzip
import os
import struct

import numpy as np
import pytest

MNIST_FILES = {
    "train_images": ("train-images-idx3-ubyte", "train-images-idx3-ubyte.gz"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels-idx1-ubyte.gz"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images-idx3-ubyte.gz"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels-idx1-ubyte.gz"),
}


def find_mnist():
    """Locate the canonical IDX files under CYCLIC_FF_DATA_DIR or
    tests/data/mnist; returns a dict of paths or None."""
    roots = []
    if os.environ.get("CYCLIC_FF_DATA_DIR"):
        roots.append(os.environ["CYCLIC_FF_DATA_DIR"])
    roots.append(os.path.join(os.path.dirname(__file__), "data", "mnist"))
    for root in roots:
        paths = {}
        for key, names in MNIST_FILES.items():
            for name in names:
                p = os.path.join(root, name)
                if os.path.exists(p):
                    paths[key] = p
                    break
        if len(paths) == len(MNIST_FILES):
            return paths
    return None


@pytest.fixture(scope="session")
def mnist_paths():
    paths = find_mnist()
    if paths is None:
        pytest.skip("MNIST IDX files not available (set CYCLIC_FF_DATA_DIR "
                    "to a directory holding the canonical files)")
    return paths


def write_idx_images(path, images: np.ndarray, gz=False):
    """images: (n, rows, cols) uint8."""
    n, rows, cols = images.shape
    payload = struct.pack(">iiii", 2051, n, rows, cols) + images.tobytes()
    opener = gzip.open if gz else open
    with opener(path, "wb") as f:
        f.write(payload)


def write_idx_labels(path, labels: np.ndarray, gz=False):
    payload = struct.pack(">ii", 2049, len(labels)) + labels.astype(np.uint8).tobytes()
    opener = gzip.open if gz else open
    with opener(path, "wb") as f:
        f.write(payload)


def central_diff(f, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Dense central finite differences of a scalar function of an array."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        f_plus = f(x)
        x[idx] = orig - step
        f_minus = f(x)
        x[idx] = orig
        g[idx] = (f_plus - f_minus) / (2.0 * step)
    return g


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)
