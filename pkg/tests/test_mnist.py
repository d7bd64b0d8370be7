import gzip
import struct

import numpy as np
import pytest

from memrc.harness.mnist import (IMAGES_MAGIC, LABELS_MAGIC, ConsistencyError, IDXFormatError,
                                 load_mnist, load_split, read_idx, write_idx)


def test_roundtrip(tmp_path):
    arr = np.arange(2 * 28 * 28, dtype=np.uint8).reshape(2, 28, 28)
    write_idx(tmp_path / "x", arr)
    assert np.array_equal(read_idx(tmp_path / "x", IMAGES_MAGIC, 3), arr)


def test_gzip(tmp_path):
    write_idx(tmp_path / "y", np.array([3, 1, 4], np.uint8))
    (tmp_path / "y.gz").write_bytes(gzip.compress((tmp_path / "y").read_bytes()))
    assert read_idx(tmp_path / "y.gz", LABELS_MAGIC, 1).tolist() == [3, 1, 4]


def test_bad_magic(tmp_path):
    write_idx(tmp_path / "y", np.zeros(4, np.uint8))
    with pytest.raises(IDXFormatError, match="magic"):
        read_idx(tmp_path / "y", IMAGES_MAGIC, 1)


def test_truncated(tmp_path):
    p = tmp_path / "x"
    write_idx(p, np.zeros((3, 28, 28), np.uint8))
    p.write_bytes(p.read_bytes()[:-10])
    with pytest.raises(IDXFormatError, match="payload"):
        read_idx(p, IMAGES_MAGIC, 3)


def test_short_header(tmp_path):
    (tmp_path / "x").write_bytes(struct.pack(">I", IMAGES_MAGIC))
    with pytest.raises(IDXFormatError):
        read_idx(tmp_path / "x", IMAGES_MAGIC, 3)


def test_count_mismatch(tmp_path):
    write_idx(tmp_path / "i", np.zeros((3, 28, 28), np.uint8))
    write_idx(tmp_path / "l", np.zeros(2, np.uint8))
    with pytest.raises(ConsistencyError):
        load_mnist(tmp_path / "i", tmp_path / "l")


def test_label_range(tmp_path):
    write_idx(tmp_path / "i", np.zeros((1, 28, 28), np.uint8))
    write_idx(tmp_path / "l", np.array([12], np.uint8))
    with pytest.raises(ConsistencyError):
        load_mnist(tmp_path / "i", tmp_path / "l")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_split(tmp_path, "train")


def test_fixture_split(tiny_mnist):
    s = load_split(tiny_mnist, "test")
    assert s.images.shape == (100, 28, 28) and s.labels.dtype == np.int64


def test_real_counts(real_mnist):
    train, test = load_split(real_mnist, "train"), load_split(real_mnist, "test")
    assert len(train) == 60_000 and len(test) == 10_000
    assert np.bincount(train.labels).tolist()[:2] == [5923, 6742]
    assert np.bincount(test.labels).tolist()[:2] == [980, 1135]
