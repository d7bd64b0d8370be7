"""Image to pulse-program encoding.

A binarized image is cut into sequences (rows, optionally columns and
row-parity rows), each sequence is split into ``k`` contiguous sections, and
each section becomes the pulse program of one memristor. Program order is
fixed: row sections (top to bottom, left to right), then column sections
(left to right, top to bottom), then parity-row sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np


class Dimension(str, Enum):
    ONE_D = "1D"
    TWO_D = "2D"

    @classmethod
    def parse(cls, value) -> "Dimension":
        if isinstance(value, cls):
            return value
        v = str(value).strip().upper()
        aliases = {"1D": cls.ONE_D, "ONED": cls.ONE_D, "1": cls.ONE_D,
                   "2D": cls.TWO_D, "TWOD": cls.TWO_D, "2": cls.TWO_D}
        if v not in aliases:
            raise ValueError(f"unknown dimension {value!r}")
        return aliases[v]


@dataclass(frozen=True)
class EncodingConfig:
    dimension: Dimension = Dimension.TWO_D
    parity: bool = True
    sections: int = 7
    binarize_threshold: int = 128

    def __post_init__(self):
        object.__setattr__(self, "dimension", Dimension.parse(self.dimension))
        if self.sections < 1:
            raise ValueError("sections must be >= 1")
        if not 0 <= self.binarize_threshold <= 255:
            raise ValueError("binarize threshold must lie in [0, 255]")

    def check_dims(self, n: int, m: int):
        if n < 1 or m < 1:
            raise ValueError("image must be at least 1x1")
        if self.sections > min(n, m):
            raise ValueError(f"{self.sections} sections do not fit a {n}x{m} image")
        if self.parity and n < 2:
            raise ValueError("parity needs at least two rows")


@dataclass
class PulseProgramSet:
    programs: List[np.ndarray]
    max_len: int

    def __len__(self):
        return len(self.programs)

    def as_matrix(self) -> np.ndarray:
        """Programs stacked into a (devices, max_len) array, zero-padded at the tail."""
        out = np.zeros((len(self.programs), self.max_len), dtype=np.uint8)
        for i, p in enumerate(self.programs):
            out[i, :len(p)] = p
        return out


def binarize(img, threshold: int = 128) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim < 2:
        raise ValueError("expected an image (or a batch of images)")
    return (img >= threshold).astype(np.uint8)


def parity_rows(bits) -> np.ndarray:
    """XOR of each row with the row below it: n rows in, n-1 rows out."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-2] < 2:
        raise ValueError("parity needs at least two rows")
    return bits[..., :-1, :] ^ bits[..., 1:, :]


def section_length(m: int, k: int) -> int:
    return -(-m // k)


def section(seq: Sequence, k: int) -> List[np.ndarray]:
    """Contiguous ceil-split into ``k`` pieces; trailing pieces may be short or empty."""
    seq = np.asarray(seq)
    m = len(seq)
    if not 1 <= k <= m:
        raise ValueError(f"cannot split {m} values into {k} sections")
    step = section_length(m, k)
    return [seq[j * step:min((j + 1) * step, m)] for j in range(k)]


def reservoir_size(cfg: EncodingConfig, n: int, m: int) -> int:
    dim2 = cfg.dimension is Dimension.TWO_D
    seqs = n + (m if dim2 else 0) + ((n - 1) if cfg.parity else 0)
    return seqs * cfg.sections


def latency(cfg: EncodingConfig, n: int, m: int) -> int:
    k = cfg.sections
    if cfg.dimension is Dimension.TWO_D:
        return max(math.ceil(m / k), math.ceil(n / k))
    return math.ceil(m / k)


def write_count(cfg: EncodingConfig, n: int, m: int) -> int:
    writes = n * m
    if cfg.dimension is Dimension.TWO_D:
        writes += n * m
    if cfg.parity:
        writes += (n - 1) * m
    return writes


def _sequences(bits: np.ndarray, cfg: EncodingConfig) -> List[np.ndarray]:
    seqs = list(bits)
    if cfg.dimension is Dimension.TWO_D:
        seqs += list(bits.T)
    if cfg.parity:
        seqs += list(parity_rows(bits))
    return seqs


def encode(bits, cfg: EncodingConfig) -> PulseProgramSet:
    """Encode one binary image. Bit 1 is a write step, bit 0 a decay step."""
    bits = np.asarray(bits, dtype=np.uint8)
    n, m = bits.shape
    cfg.check_dims(n, m)
    programs = []
    for seq in _sequences(bits, cfg):
        programs.extend(section(seq, cfg.sections))
    return PulseProgramSet(programs=programs, max_len=latency(cfg, n, m))


def _sectioned(seqs: np.ndarray, k: int, t_out: int) -> np.ndarray:
    # (N, S, L) -> (N, S*k, t_out), tail-padded with decay steps
    N, S, L = seqs.shape
    step = section_length(L, k)
    padded = np.zeros((N, S, k * step), dtype=np.uint8)
    padded[:, :, :L] = seqs
    out = padded.reshape(N, S * k, step)
    if step < t_out:
        out = np.concatenate([out, np.zeros((N, S * k, t_out - step), np.uint8)], axis=2)
    return out


def encode_batch(bits, cfg: EncodingConfig) -> np.ndarray:
    """Vectorised :func:`encode` for a stack of binary images.

    Returns a ``(N, devices, latency)`` uint8 array laid out exactly like
    ``encode(img, cfg).as_matrix()`` for each image.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 2:
        bits = bits[None]
    _, n, m = bits.shape
    cfg.check_dims(n, m)
    k = cfg.sections
    T = latency(cfg, n, m)
    parts = [_sectioned(bits, k, T)]
    if cfg.dimension is Dimension.TWO_D:
        parts.append(_sectioned(np.ascontiguousarray(bits.transpose(0, 2, 1)), k, T))
    if cfg.parity:
        parts.append(_sectioned(parity_rows(bits), k, T))
    return np.ascontiguousarray(np.concatenate(parts, axis=1))
