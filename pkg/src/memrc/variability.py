"""Device-to-device and cycle-to-cycle variability.

Every random draw comes from a generator keyed by ``(master_seed, run, stream,
index...)`` so a given device in a given run always sees the same factors,
whatever order devices or image blocks are evaluated in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .device import DeviceParams

# stream tags for seed keys
D2D = 1
C2C = 2
READOUT = 3


@dataclass(frozen=True)
class VariabilityConfig:
    d2d_pct: float = 0.0
    c2c_pct: float = 0.0
    vary_lambda_eta: bool = False
    runs: int = 30
    master_seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self):
        for name in ("d2d_pct", "c2c_pct"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.distribution not in ("uniform", "gaussian"):
            raise ValueError("distribution must be 'uniform' or 'gaussian'")

    @property
    def enabled(self) -> bool:
        return self.d2d_pct > 0 or self.c2c_pct > 0


class DeviceFactors(NamedTuple):
    x_init: float
    tau_eff: float
    lambda_f: float
    eta_f: float


def _factors(rng, p, size, distribution):
    if p == 0:
        return np.ones(size)
    if distribution == "gaussian":
        # keep factors physical: a negative tau or gain is meaningless
        return np.maximum(rng.normal(1.0, p, size), 1e-3)
    return rng.uniform(1.0 - p, 1.0 + p, size)


def sample_device_factors(cfg: VariabilityConfig, params: DeviceParams,
                          device_index: int, run: int = 0) -> DeviceFactors:
    rng = np.random.default_rng([cfg.master_seed, run, D2D, device_index])
    u = _factors(rng, cfg.d2d_pct, 4, cfg.distribution)
    if not cfg.vary_lambda_eta:
        u[2:] = 1.0
    return DeviceFactors(params.x_min * u[0], params.tau * u[1], u[2], u[3])


@dataclass
class DeviceBank:
    """Per-device factors for a whole reservoir, as arrays."""

    x_init: np.ndarray
    tau_eff: np.ndarray
    lambda_f: np.ndarray
    eta_f: np.ndarray

    @classmethod
    def nominal(cls, params: DeviceParams, n_devices: int) -> "DeviceBank":
        one = np.ones(n_devices)
        return cls(params.x_min * one, params.tau * one, one.copy(), one.copy())

    @classmethod
    def sample(cls, cfg: VariabilityConfig, params: DeviceParams, n_devices: int,
               run: int = 0) -> "DeviceBank":
        if cfg.d2d_pct == 0:
            return cls.nominal(params, n_devices)
        rows = np.array([sample_device_factors(cfg, params, d, run) for d in range(n_devices)])
        return cls(*(np.ascontiguousarray(c) for c in rows.T))

    def __len__(self):
        return len(self.x_init)


class C2CStream:
    """Cycle-to-cycle multipliers, one per state update.

    Calling the stream returns a single multiplier (handy for
    :func:`memrc.device.step`); :meth:`draw` returns an array.
    """

    def __init__(self, cfg: VariabilityConfig, key: Sequence[int] = ()):
        self.p = cfg.c2c_pct
        self.distribution = cfg.distribution
        self._rng = np.random.default_rng([cfg.master_seed, C2C, *key])

    def __call__(self) -> float:
        return float(self.draw(1)[0])

    def draw(self, shape) -> np.ndarray:
        return _factors(self._rng, self.p, shape, self.distribution)

    @property
    def active(self) -> bool:
        return self.p > 0


def c2c_stream(cfg: VariabilityConfig, seed: int = 0) -> C2CStream:
    return C2CStream(cfg, key=(seed,))


def monte_carlo(experiment, vcfg: VariabilityConfig, **kwargs):
    """Repeat the full pipeline with fresh device factors; see :mod:`memrc.harness.pipeline`."""
    from .harness.pipeline import monte_carlo as _run
    return _run(experiment, vcfg, **kwargs)
