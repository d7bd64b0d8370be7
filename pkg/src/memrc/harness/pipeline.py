"""End-to-end pipeline: binarize, encode, simulate, quantize, train, evaluate."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .. import __version__
from ..analysis import SweepRecord
from ..encoding import binarize, encode_batch, reservoir_size
from ..readout import (ReadoutWeights, TrainConfig, config_hash, confusion, evaluate,
                       init_weights, train)
from ..reservoir import QuantizerConfig, Reservoir, bins_to_features, quantize_bins, resolve_range
from ..variability import C2CStream, DeviceBank, VariabilityConfig
from .config import DEFAULT_MNIST_DIR, ExperimentConfig
from .mnist import Split, default_dir, load_split

log = logging.getLogger(__name__)

# c2c noise is drawn per block of images; fixed so results do not depend on batching
BLOCK = 2048
SUBSET = 7
SPLIT_IDS = {"train": 0, "test": 1}


class PipelineError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage} stage failed: {exc}")
        self.stage = stage


@dataclass
class Dataset:
    train: Split
    test: Split
    source: str = ""


def load_dataset(data_dir=None) -> Dataset:
    directory = Path(data_dir or default_dir() or DEFAULT_MNIST_DIR)
    return Dataset(load_split(directory, "train"), load_split(directory, "test"), str(directory))


def train_subset(n_train: int, limit: Optional[int], seed: int) -> np.ndarray:
    """Indices of the training images used: a prefix of one seeded permutation."""
    if limit is None or limit >= n_train:
        return np.arange(n_train)
    perm = np.random.default_rng([seed, SUBSET]).permutation(n_train)
    return np.sort(perm[:limit])


def simulate_currents(images: np.ndarray, cfg: ExperimentConfig, bank: DeviceBank,
                      split: str = "train", run: int = 0) -> np.ndarray:
    """Read currents ``(N, devices)`` for a stack of grayscale images."""
    enc = cfg.encoding
    n_dev = reservoir_size(enc, 28, 28)
    res = Reservoir(cfg.device, n_dev, bank=bank)
    out = np.empty((len(images), n_dev))
    v = cfg.variability
    for b, start in enumerate(range(0, len(images), BLOCK)):
        bits = binarize(images[start:start + BLOCK], enc.binarize_threshold)
        programs = encode_batch(bits, enc)
        noise = None
        if v.c2c_pct > 0:
            stream = C2CStream(v, key=(run, SPLIT_IDS[split], b))
            noise = stream.draw(programs.shape)
        out[start:start + len(programs)] = res.run_batch(programs, noise)
    return out


@dataclass
class Features:
    train_bins: np.ndarray
    test_bins: np.ndarray
    quantizer: QuantizerConfig

    def train_x(self):
        return bins_to_features(self.train_bins, self.quantizer.bits)

    def test_x(self):
        return bins_to_features(self.test_bins, self.quantizer.bits)


def _feature_key(cfg: ExperimentConfig, run: int, data: Dataset) -> str:
    ident = cfg.identity()
    ident.pop("train")
    return config_hash({"features": ident, "run": run, "source": data.source,
                        "n": [len(data.train), len(data.test)], "version": __version__})


def extract_features(cfg: ExperimentConfig, data: Dataset, run: int = 0,
                     bank: Optional[DeviceBank] = None) -> Features:
    """Quantized reservoir features for the training subset and the test set.

    Cached on disk (when ``cfg.cache_dir`` is set) under a hash of everything
    that shapes the features, so sweeps over readout settings reuse them.
    """
    cache = None
    if cfg.cache_dir:
        cache = Path(cfg.cache_dir) / f"features-{_feature_key(cfg, run, data)}.npz"
        if cache.exists():
            with np.load(cache) as z:
                q = replace(cfg.quantizer, i_lo=float(z["i_lo"]), i_hi=float(z["i_hi"]))
                return Features(z["train_bins"], z["test_bins"], q)

    if bank is None:
        bank = DeviceBank.sample(cfg.variability, cfg.device,
                                 reservoir_size(cfg.encoding, 28, 28), run)
    idx = train_subset(len(data.train), cfg.train_limit, cfg.seed)
    i_train = simulate_currents(data.train.images[idx], cfg, bank, "train", run)
    q = resolve_range(cfg.quantizer, cfg.device, i_train)
    train_bins = quantize_bins(i_train, q)
    del i_train
    test_bins = quantize_bins(simulate_currents(data.test.images, cfg, bank, "test", run), q)
    feats = Features(train_bins, test_bins, q)

    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_suffix(".tmp.npz")
        np.savez_compressed(tmp, train_bins=train_bins, test_bins=test_bins,
                            i_lo=q.i_lo, i_hi=q.i_hi)
        tmp.replace(cache)
    return feats


@dataclass
class PipelineResult:
    accuracy: float
    weights: ReadoutWeights
    confusion: np.ndarray
    record: SweepRecord
    quantizer: QuantizerConfig


def make_record(cfg: ExperimentConfig, accuracy: float, runtime: Optional[float],
                seed: Optional[int] = None) -> SweepRecord:
    return SweepRecord(dimension=cfg.encoding.dimension.value, parity=cfg.encoding.parity,
                       sections=cfg.encoding.sections, bits=cfg.quantizer.bits,
                       tau_ns=round(cfg.device.tau_ns, 9), variability_pct=cfg.variability_pct,
                       seed=cfg.seed if seed is None else seed, accuracy=accuracy,
                       runtime_s=runtime if cfg.record_runtime else None, config_hash=cfg.hash)


def run_pipeline(cfg: ExperimentConfig, data: Optional[Dataset] = None, run: int = 0,
                 bank: Optional[DeviceBank] = None,
                 on_epoch: Optional[Callable[[int, float], None]] = None) -> PipelineResult:
    t0 = time.perf_counter()
    stage = "load"
    try:
        data = data or load_dataset(cfg.data_dir)
        stage = "reservoir"
        feats = extract_features(cfg, data, run, bank)
        stage = "train"
        idx = train_subset(len(data.train), cfg.train_limit, cfg.seed)
        X = feats.train_x()
        w0 = init_weights(X.shape[1], 10, cfg.train.seed, cfg.train.bias)
        w = train(X, data.train.labels[idx], w0, cfg.train, on_epoch)
        del X
        stage = "evaluate"
        Xt = feats.test_x()
        acc = evaluate(w, Xt, data.test.labels)
        conf = confusion(w, Xt, data.test.labels, 10)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, exc) from exc
    runtime = time.perf_counter() - t0
    log.info("accuracy %.4f (%s, %.1fs)", acc, cfg.hash, runtime)
    return PipelineResult(acc, w, conf, make_record(cfg, acc, runtime), feats.quantizer)


def _grid_point(cfg: ExperimentConfig, data: Optional[Dataset]) -> SweepRecord:
    try:
        return run_pipeline(cfg, data).record
    except PipelineError as exc:
        log.error("grid point %s failed: %s", cfg.hash, exc)
        return make_record(cfg, float("nan"), None)


_worker_data: Dict[str, Dataset] = {}


def _grid_point_worker(cfg: ExperimentConfig) -> SweepRecord:
    key = str(cfg.data_dir)
    if key not in _worker_data:
        _worker_data[key] = load_dataset(cfg.data_dir)
    return _grid_point(cfg, _worker_data[key])


def sweep(grid: List[ExperimentConfig], data: Optional[Dataset] = None,
          on_record: Optional[Callable[[SweepRecord], None]] = None,
          jobs: int = 1) -> List[SweepRecord]:
    """Run every grid point; a failing point yields a NaN record instead of aborting.

    With ``jobs > 1`` grid points run in worker processes (each loads the
    dataset once). Records are still delivered in grid order.
    """
    if not grid:
        raise ValueError("empty sweep grid")
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_grid_point_worker, grid)
            return _collect(results, on_record)
    data = data or load_dataset(grid[0].data_dir)
    return _collect((_grid_point(cfg, data) for cfg in grid), on_record)


def _collect(results, on_record) -> List[SweepRecord]:
    records = []
    for rec in results:
        records.append(rec)
        if on_record is not None:
            on_record(rec)
    return records


@dataclass
class MonteCarloStats:
    variability_pct: float
    accuracies: List[float]
    records: List[SweepRecord]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def min(self) -> float:
        return float(np.min(self.accuracies))

    @property
    def max(self) -> float:
        return float(np.max(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


def monte_carlo(experiment: ExperimentConfig, vcfg: VariabilityConfig,
                data: Optional[Dataset] = None,
                on_record: Optional[Callable[[SweepRecord], None]] = None) -> MonteCarloStats:
    """Repeat the pipeline with fresh device-to-device factors per run.

    Only device-to-device variation is applied; the readout is retrained on
    each run's features with the same readout seed.
    """
    if vcfg.runs < 1:
        raise ValueError("runs must be >= 1")
    vcfg = replace(vcfg, c2c_pct=0.0)
    cfg = replace(experiment, variability=vcfg)
    data = data or load_dataset(cfg.data_dir)
    accs, recs = [], []
    for r in range(vcfg.runs):
        res = run_pipeline(cfg, data, run=r)
        rec = replace(res.record, seed=r)
        accs.append(res.accuracy)
        recs.append(rec)
        if on_record is not None:
            on_record(rec)
    return MonteCarloStats(vcfg.d2d_pct, accs, recs)
