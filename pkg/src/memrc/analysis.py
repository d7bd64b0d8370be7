"""Single-device separability studies and factor-sweep summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .device import NS, V_READ, DeviceParams, read_current
from .reservoir import Reservoir, QuantizerConfig, quantize_bins, resolve_range

SCHEMA_VERSION = 1

RECORD_COLUMNS = ["dimension", "parity", "sections", "bits", "tau_ns",
                  "variability_pct", "seed", "accuracy", "runtime_s",
                  "config_hash", "schema_version"]

FACTORS = ("dimension", "parity", "sections", "bits", "tau_ns", "variability_pct")


class SchemaError(ValueError):
    pass


def all_sequences(L: int) -> np.ndarray:
    """Every length-L bit sequence; row r is r written in binary, first pulse = MSB."""
    if L < 1:
        raise ValueError("sequence length must be >= 1")
    rows = np.arange(2 ** L)[:, None]
    shifts = np.arange(L - 1, -1, -1)[None, :]
    return ((rows >> shifts) & 1).astype(np.uint8)


@dataclass
class SeparabilityTable:
    seq_len: int
    tau_grid: np.ndarray  # seconds
    states: np.ndarray  # (2**L, len(tau_grid))

    def to_long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_ns", "sequence_id", "sequence", "final_x"])
        seqs = all_sequences(self.seq_len)
        for j, tau in enumerate(self.tau_grid):
            for r in range(2 ** self.seq_len):
                w.writerow([_fmt(tau / NS), r, "".join(map(str, seqs[r])),
                            repr(float(self.states[r, j]))])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def final_state_sweep(L: int, tau_grid: Sequence[float],
                      params: Optional[DeviceParams] = None) -> SeparabilityTable:
    """Noise-free final state of one device for all 2**L programs at each tau."""
    params = params or DeviceParams()
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size == 0:
        raise ValueError("tau grid is empty")
    programs = all_sequences(L)[None]  # one "image", 2**L devices
    states = np.empty((2 ** L, taus.size))
    for j, tau in enumerate(taus):
        res = Reservoir(params.with_tau(float(tau)), 2 ** L)
        states[:, j] = res.final_states(programs)[0]
    return SeparabilityTable(L, taus, states)


def unique_bins(bins: np.ndarray) -> int:
    """Number of items that are alone in their bin."""
    _, inverse, counts = np.unique(bins, return_inverse=True, return_counts=True)
    return int(np.count_nonzero(counts[inverse] == 1))


def bin_occupancy(table: SeparabilityTable, bits_grid: Sequence[int],
                  params: Optional[DeviceParams] = None, range_mode: str = "calibrated",
                  v_read: float = V_READ) -> np.ndarray:
    """Uniquely separated states per (tau, bits): array of shape (len(tau), len(bits)).

    With ``range_mode="calibrated"`` the ADC spans the currents of the 2**L
    states at that tau; ``"device"`` uses the full theoretical device range.
    """
    params = params or DeviceParams()
    out = np.zeros((len(table.tau_grid), len(bits_grid)), dtype=int)
    for j in range(len(table.tau_grid)):
        currents = read_current(table.states[:, j], v_read, params)
        for b, bits in enumerate(bits_grid):
            q = resolve_range(QuantizerConfig(bits=int(bits), range_mode=range_mode),
                              params, currents, v_read)
            out[j, b] = unique_bins(quantize_bins(currents, q))
    return out


def occupancy_csv(table: SeparabilityTable, bits_grid, counts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau_ns", "bits", "uniquely_separated", "sequences"])
    for j, tau in enumerate(table.tau_grid):
        for b, bits in enumerate(bits_grid):
            w.writerow([_fmt(tau / NS), bits, int(counts[j, b]), 2 ** table.seq_len])
    return buf.getvalue()


def popcount_spread(table: SeparabilityTable) -> np.ndarray:
    """Largest within-popcount spread of final states, per tau."""
    pops = all_sequences(table.seq_len).sum(axis=1)
    spread = np.zeros(len(table.tau_grid))
    for c in np.unique(pops):
        group = table.states[pops == c]
        spread = np.maximum(spread, group.max(axis=0) - group.min(axis=0))
    return spread


@dataclass
class SweepRecord:
    dimension: str
    parity: bool
    sections: int
    bits: int
    tau_ns: float
    variability_pct: float
    seed: int
    accuracy: float
    runtime_s: Optional[float] = None
    config_hash: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0 or np.isnan(self.accuracy)):
            raise ValueError("accuracy must lie in [0, 1]")

    def row(self) -> List[str]:
        return [self.dimension, str(bool(self.parity)).lower(), str(self.sections),
                str(self.bits), _fmt(self.tau_ns), _fmt(self.variability_pct),
                str(self.seed), "nan" if np.isnan(self.accuracy) else f"{self.accuracy:.6f}",
                "" if self.runtime_s is None else f"{self.runtime_s:.3f}",
                self.config_hash, str(self.schema_version)]

    def level(self, factor: str):
        return getattr(self, factor)


def records_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_records(text: str) -> List[SweepRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        version = int(row.get("schema_version") or -1)
        if version != SCHEMA_VERSION:
            raise SchemaError(f"record schema {version} is not {SCHEMA_VERSION}")
        out.append(SweepRecord(
            dimension=row["dimension"], parity=row["parity"].lower() == "true",
            sections=int(row["sections"]), bits=int(row["bits"]),
            tau_ns=float(row["tau_ns"]), variability_pct=float(row["variability_pct"]),
            seed=int(row["seed"]), accuracy=float(row["accuracy"]),
            runtime_s=float(row["runtime_s"]) if row["runtime_s"] else None,
            config_hash=row["config_hash"], schema_version=version))
    return out


@dataclass
class FactorEffect:
    factor: str
    level_means: Dict[object, float]
    span: float


def main_effects(records: Sequence[SweepRecord],
                 factors: Sequence[str] = FACTORS) -> List[FactorEffect]:
    """Mean accuracy per level of each factor, ranked by (max - min) level mean."""
    if not records:
        raise ValueError("no records to summarise")
    valid = [r for r in records if not np.isnan(r.accuracy)]
    effects = []
    for factor in factors:
        groups: Dict[object, List[float]] = {}
        for r in valid:
            groups.setdefault(r.level(factor), []).append(r.accuracy)
        try:
            levels = sorted(groups)
        except TypeError:
            levels = sorted(groups, key=str)
        means = {lvl: float(np.mean(groups[lvl])) for lvl in levels}
        span = max(means.values()) - min(means.values()) if means else 0.0
        effects.append(FactorEffect(factor, means, span))
    effects.sort(key=lambda e: -e.span)
    return effects


def effects_csv(effects: Sequence[FactorEffect]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "factor", "level", "mean_accuracy", "span"])
    for rank, e in enumerate(effects, 1):
        for level, mean in e.level_means.items():
            w.writerow([rank, e.factor, level, f"{mean:.6f}", f"{e.span:.6f}"])
    return buf.getvalue()


def factor_sweep(grid, on_record=None, **kwargs) -> List[SweepRecord]:
    """Run the full pipeline per grid point. Failures become NaN records."""
    from .harness.pipeline import sweep
    return sweep(grid, on_record=on_record, **kwargs)
