"""Power-delay-profile processing pipeline.

Turns raw PDP snapshots into tapped-delay-line parameters in five steps:
sliding-window averaging, adaptive noise-floor truncation, iterative peak
search, per-tap power integration, and K-factor computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    TRUNCATION_SENTINEL_DB,
    AllNoiseError,
    Apdp,
    ConfigError,
    ContractError,
    NoMultipathError,
    PdpSnapshot,
    ShapeError,
    Tap,
    TdlParams,
    db_to_linear,
    linear_to_db,
)


@dataclass(frozen=True)
class DenoiseConfig:
    """Adaptive noise-floor truncation settings.

    The floor is estimated from the weakest ``bottom_fraction`` of bins above
    ``abs_floor_db``; bins below floor + ``margin_db`` are truncated.
    ``floor_mean_in_db`` switches the bottom-fraction mean from the linear
    power domain (default) to the dB domain, for comparison runs.
    """

    abs_floor_db: float = -160.0
    bottom_fraction: float = 0.20
    margin_db: float = 11.0
    truncate_db: float = TRUNCATION_SENTINEL_DB
    floor_mean_in_db: bool = False

    def __post_init__(self):
        if not (0.0 < self.bottom_fraction <= 1.0):
            raise ConfigError("bottom_fraction must lie in (0, 1]")
        if not self.truncate_db < self.abs_floor_db:
            raise ConfigError("truncate_db must be below abs_floor_db")


@dataclass(frozen=True)
class ExtractConfig:
    """Iterative peak-search settings: tap budget, dynamic range, separation."""

    max_taps: int = 40
    dynamic_range_db: float = 50.0
    min_separation_bins: int = 3

    def __post_init__(self):
        if self.max_taps < 1:
            raise ConfigError("max_taps must be >= 1")
        if not self.dynamic_range_db > 0:
            raise ConfigError("dynamic_range_db must be positive")
        if self.min_separation_bins < 1:
            raise ConfigError("min_separation_bins must be >= 1")


def sliding_average(snapshots: Sequence[PdpSnapshot], window: int) -> list[Apdp]:
    """Average consecutive snapshots bin-wise in the linear power domain.

    Output ``i`` covers ``snapshots[i : i + window]``; its timestamp is the
    center snapshot's. Output length is ``len(snapshots) - window + 1``.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    if not snapshots:
        raise ShapeError("need at least one snapshot")
    if window > len(snapshots):
        raise ConfigError(f"window {window} exceeds snapshot count {len(snapshots)}")
    n_bins = snapshots[0].n_bins
    spacing = snapshots[0].bin_spacing_ns
    for s in snapshots:
        if s.n_bins != n_bins:
            raise ShapeError("snapshots differ in bin count")
        if s.bin_spacing_ns != spacing:
            raise ShapeError("snapshots differ in bin spacing")

    lin = db_to_linear(np.stack([s.powers_db for s in snapshots]))
    csum = np.vstack([np.zeros((1, n_bins)), np.cumsum(lin, axis=0)])
    means = (csum[window:] - csum[:-window]) / window
    center = (window - 1) // 2
    return [
        Apdp(
            powers_db=linear_to_db(means[i]),
            bin_spacing_ns=spacing,
            timestamp_s=snapshots[i + center].timestamp_s,
            window_len=window,
        )
        for i in range(means.shape[0])
    ]


def estimate_noise_floor(apdp: Apdp, cfg: DenoiseConfig = DenoiseConfig()) -> float:
    """Estimate the per-snapshot noise floor (dB) from the weakest valid bins."""
    valid = apdp.powers_db[apdp.powers_db > cfg.abs_floor_db]
    if valid.size == 0:
        raise AllNoiseError(f"no bin above the absolute floor {cfg.abs_floor_db} dB")
    k = math.ceil(cfg.bottom_fraction * valid.size)
    lowest = np.sort(valid)[:k]
    if cfg.floor_mean_in_db:
        return float(np.mean(lowest))
    return float(linear_to_db(np.mean(db_to_linear(lowest))))


def denoise(apdp: Apdp, cfg: DenoiseConfig = DenoiseConfig()) -> Apdp:
    """Truncate bins below the adaptive threshold (noise floor + margin)."""
    threshold = estimate_noise_floor(apdp, cfg) + cfg.margin_db
    return truncate_below(apdp, threshold, cfg.truncate_db)


def truncate_below(apdp: Apdp, threshold_db: float,
                   truncate_db: float = TRUNCATION_SENTINEL_DB) -> Apdp:
    """Set every bin strictly below ``threshold_db`` to ``truncate_db``."""
    powers = np.where(apdp.powers_db < threshold_db, truncate_db, apdp.powers_db)
    return Apdp(powers_db=powers, bin_spacing_ns=apdp.bin_spacing_ns,
                timestamp_s=apdp.timestamp_s, window_len=apdp.window_len)


def local_peak_mask(apdp: Apdp) -> np.ndarray:
    """Mark bins strictly greater than both neighbors; endpoints are False."""
    p = apdp.powers_db
    if p.size < 3:
        raise ShapeError("local peak mask needs at least 3 bins")
    mask = np.zeros(p.size, dtype=bool)
    mask[1:-1] = (p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])
    return mask


def extract_taps(apdp: Apdp, cfg: ExtractConfig = ExtractConfig()) -> list[Tap]:
    """Iterative peak search over a denoised APDP.

    Candidate bins are the local power maxima of the input. Up to
    ``max_taps`` times, the strongest remaining candidate is recorded and a
    ``min_separation_bins`` neighborhood on either side is suppressed (set to
    the sentinel). The search stops when the strongest candidate falls more
    than ``dynamic_range_db`` below the global maximum or no candidate
    remains. Ties resolve to the earliest bin. Taps are returned sorted by
    delay.
    """
    if apdp.n_bins == 0:
        raise ShapeError("empty APDP")
    p_res = apdp.powers_db.copy()
    mask = local_peak_mask(apdp)
    p_limit = float(np.max(p_res)) - cfg.dynamic_range_db
    delta = cfg.min_separation_bins
    n = p_res.size

    taps: list[Tap] = []
    for _ in range(cfg.max_taps):
        cand = np.flatnonzero(mask)
        if cand.size == 0:
            break
        k = int(cand[np.argmax(p_res[cand])])
        p_k = float(p_res[k])
        if p_k < p_limit or p_k <= TRUNCATION_SENTINEL_DB:
            break
        taps.append(Tap(delay_bin=k, delay_ns=k * apdp.bin_spacing_ns, power_db=p_k))
        lo, hi = max(0, k - delta), min(n - 1, k + delta)
        p_res[lo:hi + 1] = TRUNCATION_SENTINEL_DB
        mask[lo:hi + 1] = False

    taps.sort(key=lambda t: t.delay_bin)
    return taps


def integrate_tap_powers(apdp: Apdp, taps: Sequence[Tap]) -> np.ndarray:
    """Integrate linear power per tap window, returning dB per tap.

    Tap ``i`` owns bins ``[delay_bin_i, delay_bin_{i+1})``; the last tap's
    window runs to the end of the vector. Sentinel bins contribute nothing.
    """
    if not taps:
        raise ContractError("need at least one tap")
    bins = [t.delay_bin for t in taps]
    if any(b2 <= b1 for b1, b2 in zip(bins, bins[1:])):
        raise ContractError("taps must be sorted by strictly increasing delay")
    p = apdp.powers_db
    edges = bins + [p.size]
    out = np.empty(len(taps))
    for i in range(len(taps)):
        window = p[edges[i]:edges[i + 1]]
        live = window[window > TRUNCATION_SENTINEL_DB]
        out[i] = linear_to_db(float(np.sum(db_to_linear(live)))) if live.size else \
            TRUNCATION_SENTINEL_DB
    return out


def compute_k_factor(apdp: Apdp, first_tap: Tap, first_tap_window_power_db: float) -> float:
    """Rician K-factor (dB) of the first tap.

    The peak bin is treated as the pure line-of-sight power; the remainder of
    the window's integrated power is the diffuse part. A zero diffuse
    remainder clamps to 1e-20 linear so a pure-LOS snapshot yields a large
    finite K.
    """
    w_lin = db_to_linear(first_tap_window_power_db)
    p_lin = db_to_linear(first_tap.power_db)
    if w_lin < p_lin:
        raise ContractError("first-tap window power is below its peak power")
    p_nlos_lin = max(w_lin - p_lin, 1e-20)
    return first_tap.power_db - linear_to_db(p_nlos_lin)


def pdp_to_tdl(apdp: Apdp, dcfg: DenoiseConfig | None = DenoiseConfig(),
               ecfg: ExtractConfig = ExtractConfig()) -> TdlParams:
    """Full pipeline: denoise, extract taps, integrate powers, derive K.

    Pass ``dcfg=None`` to skip denoising for inputs that contain no noise
    bins (e.g. synthetic ensembles), where a floor estimated from the taps
    themselves would truncate weak multipath.
    """
    clean = denoise(apdp, dcfg) if dcfg is not None else apdp
    taps = extract_taps(clean, ecfg)
    if not taps:
        raise NoMultipathError("no multipath detected")
    window_db = integrate_tap_powers(clean, taps)
    first_power_db = float(window_db[0])
    k_db = compute_k_factor(clean, taps[0], first_power_db)
    delays = np.array([(t.delay_bin - taps[0].delay_bin) * apdp.bin_spacing_ns
                       for t in taps])
    return TdlParams(
        first_tap_power_db=first_power_db,
        k_factor_db=k_db,
        num_taps=len(taps),
        delays_ns=delays,
        powers_db=window_db - first_power_db,
    )
