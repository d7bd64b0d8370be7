"""PDFN reservoir: a bank of uncoupled memristors, read once, then quantized.

Each device gets its own pulse program. After the last time slot every
device is read at ``v_read`` and the currents pass through an ADC model that
bins them into ``2**bits`` levels and rescales the bin index onto [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .device import (V_READ, V_WRITE, DeviceParams, MemristorState,
                     read_current, step)
from .encoding import PulseProgramSet
from .variability import C2CStream, DeviceBank

RANGE_MODES = ("calibrated", "device")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizerConfig:
    """ADC model.

    ``range_mode`` picks where the full-scale range comes from when
    ``i_lo``/``i_hi`` are not pinned: ``"calibrated"`` uses the smallest and
    largest currents seen on calibration data, ``"device"`` uses the
    theoretical span ``[I(x_min), I(x_max)]``.
    """

    bits: int = 4
    i_lo: Optional[float] = None
    i_hi: Optional[float] = None
    range_mode: str = "calibrated"

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise ValueError("bits must lie in [1, 16]")
        if self.range_mode not in RANGE_MODES:
            raise ValueError(f"range_mode must be one of {RANGE_MODES}")
        if self.i_lo is not None and self.i_hi is not None and not self.i_lo < self.i_hi:
            raise ValueError("i_lo must be below i_hi")

    @property
    def levels(self) -> int:
        return 2 ** self.bits

    def pinned(self, i_lo: float, i_hi: float) -> "QuantizerConfig":
        return QuantizerConfig(self.bits, float(i_lo), float(i_hi), self.range_mode)

    @property
    def has_range(self) -> bool:
        return self.i_lo is not None and self.i_hi is not None


def default_quantizer_range(params: DeviceParams, v_read: float = V_READ) -> Tuple[float, float]:
    return (float(read_current(params.x_min, v_read, params)),
            float(read_current(params.x_max, v_read, params)))


def calibrated_range(currents) -> Tuple[float, float]:
    """Full-scale range spanning the observed currents."""
    currents = np.asarray(currents)
    lo, hi = float(currents.min()), float(currents.max())
    if not hi > lo:
        # degenerate calibration set: widen so quantize() stays defined
        hi = lo + max(abs(lo), 1e-12) * 1e-9
    return lo, hi


def resolve_range(q: QuantizerConfig, params: DeviceParams, currents=None,
                  v_read: float = V_READ) -> QuantizerConfig:
    if q.has_range:
        return q
    if q.range_mode == "device" or currents is None:
        return q.pinned(*default_quantizer_range(params, v_read))
    return q.pinned(*calibrated_range(currents))


def quantize_bins(currents, q: QuantizerConfig) -> np.ndarray:
    if not q.has_range:
        raise ConfigurationError("quantizer range is not set; call resolve_range first")
    levels = q.levels
    scaled = (np.asarray(currents, dtype=float) - q.i_lo) / (q.i_hi - q.i_lo)
    bins = np.floor(scaled * levels)
    return np.clip(bins, 0, levels - 1).astype(np.uint8 if q.bits <= 8 else np.uint16)


def bins_to_features(bins, bits: int) -> np.ndarray:
    return np.asarray(bins, dtype=float) / (2 ** bits - 1)


def quantize(currents, q: QuantizerConfig) -> np.ndarray:
    """Quantize currents into ``2**bits`` bins and rescale onto [0, 1]."""
    return bins_to_features(quantize_bins(currents, q), q.bits)


@dataclass
class Reservoir:
    params: DeviceParams
    n_devices: int
    v_write: float = V_WRITE
    v_read: float = V_READ
    bank: Optional[DeviceBank] = None
    devices: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.bank is None:
            self.bank = DeviceBank.nominal(self.params, self.n_devices)
        if len(self.bank) != self.n_devices:
            raise ConfigurationError("device bank size does not match reservoir size")
        self.reset()

    def reset(self):
        b = self.bank
        self.devices = [
            MemristorState(x=float(b.x_init[d]), tau_eff=float(b.tau_eff[d]),
                           lambda_factor=float(b.lambda_f[d]), eta_factor=float(b.eta_f[d]),
                           floor=float(b.x_init[d]))
            for d in range(self.n_devices)
        ]

    @property
    def floor(self) -> np.ndarray:
        return np.minimum(self.bank.x_init, self.params.x_min)

    def run(self, programs: PulseProgramSet, c2c: Optional[C2CStream] = None) -> np.ndarray:
        """Drive each device through its program and read every device.

        Short programs are padded with decay slots up to ``max_len`` so all
        devices are read together. Devices are reset afterwards.
        """
        if len(programs) != self.n_devices:
            raise ConfigurationError(
                f"{len(programs)} programs for {self.n_devices} devices")
        self.reset()
        out = np.empty(self.n_devices)
        for d, prog in enumerate(programs.programs):
            state = self.devices[d]
            padded = list(prog) + [0] * (programs.max_len - len(prog))
            for bit in padded:
                state = step(state, self.v_write if bit else 0.0, self.params, c2c)
            out[d] = read_current(state, self.v_read, self.params)
        self.reset()
        return out

    def final_states(self, programs: np.ndarray, c2c: Optional[np.ndarray] = None) -> np.ndarray:
        """Batch evolution of ``(N, devices, T)`` programs; returns ``(N, devices)`` states."""
        programs = np.ascontiguousarray(programs, dtype=np.uint8)
        if programs.ndim != 3 or programs.shape[1] != self.n_devices:
            raise ConfigurationError(
                f"program batch of shape {programs.shape} does not fit {self.n_devices} devices")
        if c2c is not None:
            c2c = np.ascontiguousarray(c2c, dtype=float)
            if c2c.shape != programs.shape:
                raise ConfigurationError("c2c multipliers must match the program batch shape")
        p, b = self.params, self.bank
        return kernels.evolve(programs, b.x_init, b.tau_eff, b.lambda_f, b.eta_f,
                              np.ascontiguousarray(self.floor),
                              p.lambda_rate, p.eta, p.t_pulse, p.x_min, p.x_max,
                              self.v_write, c2c)

    def run_batch(self, programs: np.ndarray, c2c: Optional[np.ndarray] = None) -> np.ndarray:
        """Read currents ``(N, devices)`` for a batch of program matrices."""
        return read_current(self.final_states(programs, c2c), self.v_read, self.params)


def run(res: Reservoir, programs: PulseProgramSet, c2c: Optional[C2CStream] = None) -> np.ndarray:
    return res.run(programs, c2c)
