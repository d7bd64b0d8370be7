"""Experiment configuration and its TOML representation."""

from __future__ import annotations

import itertools
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from ..device import NS, DeviceParams
from ..encoding import Dimension, EncodingConfig
from ..readout import TrainConfig, config_hash
from ..reservoir import QuantizerConfig
from ..variability import VariabilityConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_MNIST_DIR = "/root/data/mnist"

# sweep axes, in the order records are produced
GRID_AXES = ("dimension", "parity", "sections", "bits", "tau_ns", "variability_pct")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    device: DeviceParams = field(default_factory=DeviceParams)
    quantizer: QuantizerConfig = field(default_factory=QuantizerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    variability: VariabilityConfig = field(default_factory=VariabilityConfig)
    data_dir: Optional[str] = None
    out_dir: str = "results"
    seed: int = 0
    train_limit: Optional[int] = None
    checkpoint: bool = True
    record_runtime: bool = False
    cache_dir: Optional[str] = None

    def __post_init__(self):
        self.encoding.check_dims(28, 28)
        if self.train_limit is not None and self.train_limit < 1:
            raise ConfigError("train_limit must be positive")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, train=replace(self.train, seed=seed),
                       variability=replace(self.variability, master_seed=seed))

    @property
    def variability_pct(self) -> float:
        v = self.variability
        return max(v.d2d_pct, v.c2c_pct)

    def set_axis(self, axis: str, value) -> "ExperimentConfig":
        if axis == "dimension":
            return replace(self, encoding=replace(self.encoding, dimension=Dimension.parse(value)))
        if axis == "parity":
            return replace(self, encoding=replace(self.encoding, parity=bool(value)))
        if axis == "sections":
            return replace(self, encoding=replace(self.encoding, sections=int(value)))
        if axis == "bits":
            return replace(self, quantizer=replace(self.quantizer, bits=int(value)))
        if axis == "tau_ns":
            return replace(self, device=self.device.with_tau(float(value) * NS))
        if axis == "variability_pct":
            p = float(value)
            c2c = 0.0 if self.variability.vary_lambda_eta else p
            return replace(self, variability=replace(self.variability, d2d_pct=p, c2c_pct=c2c))
        raise ConfigError(f"unknown sweep axis {axis!r}")

    def identity(self) -> Dict[str, Any]:
        """Everything that influences results (paths and output flags excluded)."""
        d = {
            "encoding": asdict(self.encoding),
            "device": asdict(self.device),
            "quantizer": asdict(self.quantizer),
            "train": asdict(self.train),
            "variability": asdict(self.variability),
            "seed": self.seed,
            "train_limit": self.train_limit,
        }
        d["encoding"]["dimension"] = self.encoding.dimension.value
        d["variability"].pop("runs")
        return d

    @property
    def hash(self) -> str:
        return config_hash(self.identity())


_DEVICE_FIELDS = {f.name for f in fields(DeviceParams)}


def _take(section: Dict[str, Any], allowed, where: str) -> Dict[str, Any]:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    return section


def from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    doc = dict(doc)
    doc.pop("grid", None)
    top = _take({k: v for k, v in doc.items() if not isinstance(v, dict)}, {"seed"}, "top level")
    seed = int(top.get("seed", 0))

    enc = _take(doc.get("encoding", {}), {"dimension", "parity", "sections", "threshold"}, "encoding")
    encoding = EncodingConfig(dimension=enc.get("dimension", "2D"), parity=enc.get("parity", True),
                              sections=enc.get("sections", 7),
                              binarize_threshold=enc.get("threshold", 128))

    dev = _take(doc.get("device", {}), _DEVICE_FIELDS | {"tau_ns"}, "device")
    dev = dict(dev)
    if "tau_ns" in dev:
        dev["tau"] = float(dev.pop("tau_ns")) * NS
    device = DeviceParams(**dev)

    q = _take(doc.get("quantizer", {}), {"bits", "range", "i_lo", "i_hi"}, "quantizer")
    quantizer = QuantizerConfig(bits=q.get("bits", 4), range_mode=q.get("range", "calibrated"),
                                i_lo=q.get("i_lo"), i_hi=q.get("i_hi"))

    t = _take(doc.get("train", {}), {"epochs", "learning_rate", "shuffle", "bias"}, "train")
    train = TrainConfig(epochs=t.get("epochs", 500), learning_rate=t.get("learning_rate", 0.02),
                        seed=seed, shuffle=t.get("shuffle", True), bias=t.get("bias", False))

    v = _take(doc.get("variability", {}),
              {"d2d_pct", "c2c_pct", "vary_lambda_eta", "runs", "distribution", "levels"},
              "variability")
    variability = VariabilityConfig(d2d_pct=v.get("d2d_pct", 0.0), c2c_pct=v.get("c2c_pct", 0.0),
                                    vary_lambda_eta=v.get("vary_lambda_eta", False),
                                    runs=v.get("runs", 30), master_seed=seed,
                                    distribution=v.get("distribution", "uniform"))

    data = _take(doc.get("data", {}), {"dir", "train_limit"}, "data")
    out = _take(doc.get("output", {}), {"dir", "checkpoint", "record_runtime", "cache_dir"}, "output")
    extra = set(doc) - {"seed", "encoding", "device", "quantizer", "train", "variability", "data", "output"}
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    return ExperimentConfig(
        encoding=encoding, device=device, quantizer=quantizer, train=train,
        variability=variability, data_dir=data.get("dir"), out_dir=out.get("dir", "results"),
        seed=seed, train_limit=data.get("train_limit"), checkpoint=out.get("checkpoint", True),
        record_runtime=out.get("record_runtime", False), cache_dir=out.get("cache_dir"))


def load_document(path) -> Dict[str, Any]:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    return from_dict(load_document(path))


def grid_axes(doc: Dict[str, Any]) -> Dict[str, List[Any]]:
    grid = doc.get("grid", {})
    unknown = set(grid) - set(GRID_AXES)
    if unknown:
        raise ConfigError(f"unknown grid axis/axes: {', '.join(sorted(unknown))}")
    return {k: list(v) if isinstance(v, list) else [v] for k, v in grid.items()}


def expand_grid(base: ExperimentConfig, axes: Dict[str, List[Any]]) -> List[ExperimentConfig]:
    names = [a for a in GRID_AXES if a in axes]
    out = []
    for values in itertools.product(*(axes[a] for a in names)):
        cfg = base
        for name, value in zip(names, values):
            cfg = cfg.set_axis(name, value)
        out.append(cfg)
    return out


def variability_levels(doc: Dict[str, Any]) -> List[float]:
    return [float(x) for x in doc.get("variability", {}).get("levels", [0.05, 0.20])]
