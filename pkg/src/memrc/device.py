"""Discrete dynamic (volatile) memristor model.

A device carries one internal state ``x`` in ``[x_min, x_max]``. A write pulse
above threshold pushes ``x`` up through a sinh drive shaped by a saturating
window; anything at or below threshold lets ``x`` relax exponentially toward
``x_min``. The state is observed non-destructively through the read current.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

NS = 1e-9

# Pulse amplitudes used by the binary MNIST encoding.
V_WRITE = 1.5
V_READ = 0.6


class DestructiveReadWarning(UserWarning):
    """Read voltage above the switching threshold would disturb the state."""


@dataclass(frozen=True)
class DeviceParams:
    """Fitting constants of the dynamic memristor (SI units)."""

    alpha: float = 1e-8  # A
    beta: float = 0.5  # 1/V
    gamma: float = 1e-5  # A
    delta: float = 4.0  # 1/V
    lambda_rate: float = 1e3  # 1/s
    eta: float = 8.0  # 1/V
    x_max: float = 1.0
    x_min: float = 0.1
    v_th: float = 0.6  # V
    t_pulse: float = 1e-9  # s
    tau: float = 15e-9  # s

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "lambda_rate", "eta",
                     "x_max", "x_min", "v_th", "t_pulse", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")

    def with_tau(self, tau: float) -> "DeviceParams":
        return replace(self, tau=tau)

    @property
    def tau_ns(self) -> float:
        return self.tau / NS


@dataclass(frozen=True)
class MemristorState:
    """One device: its state plus its fixed device-to-device factors.

    ``floor`` is the lower clamp; it only drops below ``x_min`` when the
    device was initialised below the nominal rest state.
    """

    x: float
    tau_eff: float
    update_gain: float = 1.0
    lambda_factor: float = 1.0
    eta_factor: float = 1.0
    floor: Optional[float] = None

    def __post_init__(self):
        if not self.tau_eff > 0:
            raise ValueError("tau_eff must be positive")
        if not self.update_gain > 0:
            raise ValueError("update_gain must be positive")

    @classmethod
    def initial(cls, params: DeviceParams) -> "MemristorState":
        return cls(x=params.x_min, tau_eff=params.tau)

    def lower(self, params: DeviceParams) -> float:
        return params.x_min if self.floor is None else min(self.floor, params.x_min)


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def window(x: float, params: DeviceParams) -> float:
    """Saturating window ``1 - exp(3x) / exp(3 x_max)``; zero at ``x_max``."""
    if not params.x_min <= x <= params.x_max:
        raise ValueError(f"state {x} outside [{params.x_min}, {params.x_max}]")
    return 1.0 - math.exp(3.0 * (x - params.x_max))


def _window_unchecked(x, params):
    return 1.0 - math.exp(3.0 * (x - params.x_max))


def write_update(state: MemristorState, v_pulse: float, params: DeviceParams,
                 multiplier: float = 1.0) -> MemristorState:
    if not v_pulse > params.v_th:
        raise ValueError(f"write pulse {v_pulse} V is not above threshold {params.v_th} V")
    lam = params.lambda_rate * state.lambda_factor
    eta = params.eta * state.eta_factor
    dx = _window_unchecked(state.x, params) * (params.t_pulse * lam * math.sinh(eta * v_pulse))
    x = state.x + multiplier * state.update_gain * dx
    return replace(state, x=_clamp(x, state.lower(params), params.x_max))


def decay_update(state: MemristorState, dt: float, params: DeviceParams,
                 multiplier: float = 1.0) -> MemristorState:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return state
    dx = (state.x - params.x_min) * -math.expm1(-dt / state.tau_eff)
    x = state.x - multiplier * state.update_gain * dx
    return replace(state, x=_clamp(x, state.lower(params), params.x_max))


def step(state: MemristorState, v: float, params: DeviceParams,
         c2c: Optional[Callable[[], float]] = None) -> MemristorState:
    """Advance one pulse slot of length ``t_pulse``.

    Above threshold the pulse writes; otherwise the device leaks for the
    slot. ``c2c`` supplies a fresh cycle-to-cycle multiplier per call.
    """
    if v < 0:
        raise ValueError("negative drive is not modelled")
    m = 1.0 if c2c is None else float(c2c())
    if v > params.v_th:
        return write_update(state, v, params, m)
    return decay_update(state, params.t_pulse, params, m)


def read_current(state_or_x, v_read: float, params: DeviceParams):
    """Read current at ``v_read``. Accepts a state, a float or an array of x."""
    if not v_read > 0:
        raise ValueError("read voltage must be positive")
    if v_read > params.v_th:
        warnings.warn(f"read at {v_read} V exceeds V_th={params.v_th} V",
                      DestructiveReadWarning, stacklevel=2)
    x = state_or_x.x if isinstance(state_or_x, MemristorState) else state_or_x
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else float(x)
    lin = params.alpha * -math.expm1(-params.beta * v_read)
    nl = params.gamma * math.sinh(params.delta * v_read)
    return (1.0 - x) * lin + x * nl


def scale_analog(u: float) -> float:
    """Map a normalised analog input in [0, 0.5] onto the 0.8-1.8 V write range."""
    if not 0.0 <= u <= 0.5:
        raise ValueError("analog input must lie in [0, 0.5]")
    return 0.8 + 2.0 * u


def drive(state: MemristorState, voltages, params: DeviceParams, c2c=None) -> list:
    """Apply a voltage sequence, returning the trajectory of x (including start)."""
    xs = [state.x]
    for v in voltages:
        state = step(state, v, params, c2c)
        xs.append(state.x)
    return xs
