"""MNIST IDX reader.

IDX layout (big-endian): a 32-bit magic (0x00000803 images, 0x00000801
labels), one 32-bit size per dimension, then raw unsigned bytes. Gzipped
files are accepted transparently.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IDXFormatError(ValueError):
    pass


class ConsistencyError(ValueError):
    pass


def _read(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, magic: int, ndim: int) -> np.ndarray:
    raw = _read(path)
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise IDXFormatError(f"{path}: file too short for an IDX header")
    found, *dims = struct.unpack(">I" + "I" * ndim, raw[:head])
    if found != magic:
        raise IDXFormatError(f"{path}: magic {found:#010x}, expected {magic:#010x}")
    n = int(np.prod(dims))
    if len(raw) - head != n:
        raise IDXFormatError(f"{path}: payload has {len(raw) - head} bytes, header promises {n}")
    return np.frombuffer(raw, dtype=np.uint8, offset=head).reshape(dims)


def write_idx(path, array: np.ndarray):
    """Write a uint8 array as IDX (images if 3-D, labels if 1-D)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = {3: IMAGES_MAGIC, 1: LABELS_MAGIC}[array.ndim]
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I" + "I" * array.ndim, magic, *array.shape))
        fh.write(array.tobytes())


@dataclass
class Split:
    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) int64

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "Split":
        return Split(self.images[idx], self.labels[idx])


def load_mnist(images_path, labels_path) -> Split:
    images = read_idx(images_path, IMAGES_MAGIC, 3)
    labels = read_idx(labels_path, LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    if labels.size and labels.max() > 9:
        raise ConsistencyError("MNIST labels must lie in 0..9")
    return Split(images, labels.astype(np.int64))


def _resolve(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / (name + ".gz"),
                      directory / name.replace("-idx", ".idx")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{name} not found in {directory}")


def default_dir() -> Optional[Path]:
    env = os.environ.get("MEMRC_MNIST_DIR")
    return Path(env) if env else None


def load_split(directory, split: str) -> Split:
    directory = Path(directory)
    img, lab = FILES[split]
    return load_mnist(_resolve(directory, img), _resolve(directory, lab))
