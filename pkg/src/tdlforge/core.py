"""Shared domain types and dB/linear power conversion helpers.

All public APIs in this package exchange power values in dB and convert to
the linear domain internally. A bin that carries no usable power is marked
with the truncation sentinel ``TRUNCATION_SENTINEL_DB`` (-200 dB) rather
than -inf so that vectors stay finite end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: dB value marking a truncated / absent delay bin.
TRUNCATION_SENTINEL_DB = -200.0

#: Speed of light in metres per nanosecond.
SPEED_OF_LIGHT_M_PER_NS = 0.299792458


class ToolkitError(Exception):
    """Base class for all toolkit-specific errors."""


class ShapeError(ToolkitError):
    """Input arrays have incompatible or degenerate shapes."""


class ConfigError(ToolkitError):
    """A configuration value is out of its legal range."""


class ValidationError(ToolkitError):
    """Serialized data violates its schema or invariants."""


class ContractError(ToolkitError):
    """A caller-side precondition was violated."""


class UndefinedMetricError(ToolkitError):
    """The requested metric is undefined for this input (e.g. all-zero PDP)."""


class AllNoiseError(ToolkitError):
    """No bin rises above the absolute noise floor."""


class NoMultipathError(ToolkitError):
    """Tap extraction found no multipath components."""


def db_to_linear(x_db):
    """Convert dB power (scalar or array) to linear scale; -200 dB maps to 1e-20."""
    out = np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    """Convert linear power to dB, clamping at the -200 dB sentinel.

    Zero maps to the sentinel exactly; negative input is a domain error.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("linear power must be non-negative")
    with np.errstate(divide="ignore"):
        out = np.where(arr > 0.0, 10.0 * np.log10(np.where(arr > 0.0, arr, 1.0)),
                       TRUNCATION_SENTINEL_DB)
    out = np.maximum(out, TRUNCATION_SENTINEL_DB)
    return float(out) if out.ndim == 0 else out


def _frozen_vector(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PdpSnapshot:
    """One channel observation: per-delay-bin power in dB on a uniform grid."""

    powers_db: np.ndarray
    bin_spacing_ns: float
    timestamp_s: float = 0.0

    def __post_init__(self):
        arr = _frozen_vector(self.powers_db)
        if arr.size == 0:
            raise ShapeError("PDP must contain at least one delay bin")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("PDP powers must be finite (use the -200 dB sentinel)")
        if not self.bin_spacing_ns > 0:
            raise ConfigError("bin_spacing_ns must be positive")
        object.__setattr__(self, "powers_db", arr)
        object.__setattr__(self, "bin_spacing_ns", float(self.bin_spacing_ns))
        object.__setattr__(self, "timestamp_s", float(self.timestamp_s))

    @property
    def n_bins(self) -> int:
        return int(self.powers_db.size)

    def delays_ns(self) -> np.ndarray:
        """Delay of each bin (ns), bin 0 at 0 ns."""
        return np.arange(self.n_bins) * self.bin_spacing_ns


@dataclass(frozen=True, eq=False)
class Apdp(PdpSnapshot):
    """Averaged PDP: a PdpSnapshot plus the averaging window length."""

    window_len: int = 1

    def __post_init__(self):
        super().__post_init__()
        if self.window_len < 1:
            raise ConfigError("window_len must be >= 1")


@dataclass(frozen=True)
class Tap:
    """A single extracted multipath tap."""

    delay_bin: int
    delay_ns: float
    power_db: float

    def __post_init__(self):
        if self.delay_bin < 0 or self.delay_ns < 0:
            raise ValidationError("tap delay must be non-negative")
        object.__setattr__(self, "delay_bin", int(self.delay_bin))
        object.__setattr__(self, "delay_ns", float(self.delay_ns))
        object.__setattr__(self, "power_db", float(self.power_db))


@dataclass(frozen=True, eq=False)
class TdlParams:
    """Structured tapped-delay-line parameter set.

    Delays and powers are normalized to the first tap: ``delays_ns[0]`` is 0
    and ``powers_db[0]`` is 0 dB. ``first_tap_power_db`` carries the absolute
    scale of the first tap's integrated window power.
    """

    first_tap_power_db: float
    k_factor_db: float
    num_taps: int
    delays_ns: np.ndarray
    powers_db: np.ndarray

    def __post_init__(self):
        delays = _frozen_vector(self.delays_ns)
        powers = _frozen_vector(self.powers_db)
        if self.num_taps < 1:
            raise ValidationError("num_taps must be >= 1")
        if delays.size != self.num_taps or powers.size != self.num_taps:
            raise ValidationError("num_taps must equal len(delays_ns) and len(powers_db)")
        if delays[0] != 0.0:
            raise ValidationError("delays_ns[0] must be 0 (first-tap normalized)")
        if np.any(np.diff(delays) <= 0.0):
            raise ValidationError("delays_ns must be strictly increasing")
        if powers[0] != 0.0:
            raise ValidationError("powers_db[0] must be 0 dB (first-tap normalized)")
        if not (np.isfinite(self.first_tap_power_db) and np.isfinite(self.k_factor_db)):
            raise ValidationError("first_tap_power_db and k_factor_db must be finite")
        if not (np.all(np.isfinite(delays)) and np.all(np.isfinite(powers))):
            raise ValidationError("delays_ns and powers_db must be finite")
        object.__setattr__(self, "delays_ns", delays)
        object.__setattr__(self, "powers_db", powers)
        object.__setattr__(self, "first_tap_power_db", float(self.first_tap_power_db))
        object.__setattr__(self, "k_factor_db", float(self.k_factor_db))
        object.__setattr__(self, "num_taps", int(self.num_taps))


@dataclass(frozen=True, eq=False)
class Cir:
    """Discrete-time complex baseband impulse response on a uniform grid.

    ``samples`` are in normalized units where the first tap's expected window
    power is 1 (0 dB); ``first_tap_power_db`` is the macroscopic scale applied
    when converting to a PDP.
    """

    samples: np.ndarray
    sample_period_ns: float
    first_tap_power_db: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=complex)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeError("CIR samples must be a non-empty 1-D vector")
        if not self.sample_period_ns > 0:
            raise ConfigError("sample_period_ns must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)
