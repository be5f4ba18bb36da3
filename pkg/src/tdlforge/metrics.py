"""Evaluation metrics: RMS delay spread, PDP cosine similarity, RMSE suite.

Metric math runs on linear power; sentinel bins contribute exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .core import (
    TRUNCATION_SENTINEL_DB,
    ContractError,
    PdpSnapshot,
    ShapeError,
    TdlParams,
    UndefinedMetricError,
    db_to_linear,
)


def _linear_powers(pdp: PdpSnapshot) -> np.ndarray:
    p = pdp.powers_db
    return np.where(p > TRUNCATION_SENTINEL_DB, db_to_linear(p), 0.0)


@dataclass(frozen=True)
class EvalReport:
    """Route-level evaluation summary."""

    rmse_path_loss_db: float
    rmse_delay_spread_ns: float
    rmse_k_factor_db: float
    pdp_avg_cosine_similarity: float
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def rms_delay_spread(pdp: PdpSnapshot) -> float:
    """Root-mean-square delay spread (ns): power-weighted delay std deviation."""
    p = _linear_powers(pdp)
    total = p.sum()
    if total <= 0.0:
        raise UndefinedMetricError("delay spread undefined for an all-zero PDP")
    t = pdp.delays_ns()
    mean = float(np.dot(p, t)) / total
    second = float(np.dot(p, t * t)) / total
    return float(np.sqrt(max(second - mean * mean, 0.0)))


def pdp_cosine_similarity(truth: PdpSnapshot, pred: PdpSnapshot) -> float:
    """Cosine of the two linear power vectors; 1 means identical shape."""
    if truth.n_bins != pred.n_bins:
        raise ShapeError("PDPs differ in length; align grids first")
    if truth.bin_spacing_ns != pred.bin_spacing_ns:
        raise ShapeError("PDPs differ in bin spacing")
    a = _linear_powers(truth)
    b = _linear_powers(pred)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedMetricError("cosine similarity undefined for an all-zero PDP")
    return float(np.dot(a, b) / (na * nb))


def align_pdp_grids(a: PdpSnapshot, b: PdpSnapshot) -> tuple[PdpSnapshot, PdpSnapshot]:
    """Sentinel-pad the shorter PDP so both share one grid length."""
    if a.bin_spacing_ns != b.bin_spacing_ns:
        raise ShapeError("PDPs differ in bin spacing")
    n = max(a.n_bins, b.n_bins)

    def pad(p: PdpSnapshot) -> PdpSnapshot:
        if p.n_bins == n:
            return p
        powers = np.full(n, TRUNCATION_SENTINEL_DB)
        powers[:p.n_bins] = p.powers_db
        return PdpSnapshot(powers_db=powers, bin_spacing_ns=p.bin_spacing_ns,
                           timestamp_s=p.timestamp_s)

    return pad(a), pad(b)


def received_power_db(pdp: PdpSnapshot) -> float:
    """Total linear power of the PDP in dB (path-loss proxy)."""
    total = _linear_powers(pdp).sum()
    if total <= 0.0:
        raise UndefinedMetricError("received power undefined for an all-zero PDP")
    return float(10.0 * np.log10(total))


def rmse(truth, pred) -> float:
    """Root-mean-square error between two equal-length vectors."""
    a = np.asarray(truth, dtype=float)
    b = np.asarray(pred, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeError("rmse of empty vectors is undefined")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def evaluate_route(truth_pdps: Sequence[PdpSnapshot],
                   pred_pdps: Sequence[PdpSnapshot],
                   truth_tdls: Sequence[TdlParams],
                   pred_tdls: Sequence[TdlParams]) -> EvalReport:
    """Aggregate the four route metrics over paired snapshots."""
    n = len(truth_pdps)
    if n == 0:
        raise ContractError("route is empty")
    if not (len(pred_pdps) == len(truth_tdls) == len(pred_tdls) == n):
        raise ShapeError("route sequences must be paired and equal-length")

    power_t = [received_power_db(p) for p in truth_pdps]
    power_p = [received_power_db(p) for p in pred_pdps]
    spread_t = [rms_delay_spread(p) for p in truth_pdps]
    spread_p = [rms_delay_spread(p) for p in pred_pdps]
    k_t = [t.k_factor_db for t in truth_tdls]
    k_p = [t.k_factor_db for t in pred_tdls]
    cosines = [pdp_cosine_similarity(t, p) for t, p in zip(truth_pdps, pred_pdps)]

    return EvalReport(
        rmse_path_loss_db=rmse(power_t, power_p),
        rmse_delay_spread_ns=rmse(spread_t, spread_p),
        rmse_k_factor_db=rmse(k_t, k_p),
        pdp_avg_cosine_similarity=float(np.mean(cosines)),
        n_samples=n,
    )
