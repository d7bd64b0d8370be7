import os
from pathlib import Path

import numpy as np
import pytest

from memrc.harness.mnist import write_idx

MNIST_DIR = Path(os.environ.get("MEMRC_MNIST_DIR", "/root/data/mnist"))


def synthetic_digits(n, seed):
    """28x28 images where class c is a bright bar at rows 2c+4..2c+6, plus speckle."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, n).astype(np.uint8)
    images = (rng.random((n, 28, 28)) < 0.05).astype(np.uint8) * 200
    for i, c in enumerate(labels):
        images[i, 2 * c + 4:2 * c + 7, 3:25] = 255
    return images, labels


@pytest.fixture(scope="session")
def tiny_mnist(tmp_path_factory):
    d = tmp_path_factory.mktemp("mnist")
    for split, n, seed, (img, lab) in [("train", 300, 1, ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")),
                                       ("test", 100, 2, ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"))]:
        images, labels = synthetic_digits(n, seed)
        write_idx(d / img, images)
        write_idx(d / lab, labels)
    return d


@pytest.fixture(scope="session")
def real_mnist():
    if not (MNIST_DIR / "train-images-idx3-ubyte").exists() and \
            not (MNIST_DIR / "train-images-idx3-ubyte.gz").exists():
        pytest.skip(f"MNIST not found in {MNIST_DIR}")
    return MNIST_DIR


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
