"""Training-objective kernels: staged losses, Hungarian matching, repulsion.

These are pure evaluative functions over prediction/truth arrays. They carry
no gradients; tap sets are matched with an exact minimum-cost assignment
before being scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ConfigError, ContractError, ShapeError


@dataclass(frozen=True)
class MatchConfig:
    """Weights for set-matching losses.

    ``delay_weight`` balances delay (ns) against power (dB) in the match
    cost; the default makes one 33.3 ns bin weigh like 1 dB. The repulsion
    defaults (one bin of minimum separation, unit blend weight) are
    engineering choices and should be reported alongside any numbers
    computed with them.
    """

    delay_weight: float = 1.0 / 33.3
    repulsion_min_sep_ns: float = 33.3
    repulsion_alpha: float = 1.0
    lambda_temporal: float = 0.1

    def __post_init__(self):
        if not self.delay_weight > 0:
            raise ConfigError("delay_weight must be positive")
        if self.repulsion_min_sep_ns < 0 or self.repulsion_alpha < 0 \
                or self.lambda_temporal < 0:
            raise ConfigError("repulsion and temporal weights must be non-negative")


@dataclass(frozen=True)
class TapAssignment:
    """Optimal pred-to-truth pairing and its total cost."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_pred: tuple[int, ...]
    cost: float


def temporal_consistency(seq) -> float:
    """Mean squared difference between adjacent samples.

    Accepts a single sequence or a (batch, time) matrix; a length-1 sequence
    contributes 0.
    """
    arr = np.atleast_2d(np.asarray(seq, dtype=float))
    if arr.size == 0:
        raise ContractError("temporal consistency of an empty sequence is undefined")
    if arr.shape[1] < 2:
        return 0.0
    diffs = np.diff(arr, axis=1)
    return float(np.mean(diffs ** 2))


def stage1_loss(pred_p, truth_p, cfg: MatchConfig = MatchConfig()) -> float:
    """First-tap-power objective: MSE plus temporal smoothness of the prediction."""
    a = np.asarray(pred_p, dtype=float)
    b = np.asarray(truth_p, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2)) + cfg.lambda_temporal * temporal_consistency(a)


def stage2_loss(pred_k, truth_k, pred_n, truth_n,
                cfg: MatchConfig = MatchConfig()) -> float:
    """K-factor and tap-count objective.

    Tap counts are treated as real-valued regression targets; rounding to an
    integer is the consumer's job.
    """
    k_hat = np.asarray(pred_k, dtype=float)
    k = np.asarray(truth_k, dtype=float)
    n_hat = np.asarray(pred_n, dtype=float)
    n = np.asarray(truth_n, dtype=float)
    if k_hat.shape != k.shape or n_hat.shape != n.shape:
        raise ShapeError("prediction/truth shape mismatch")
    return (float(np.mean((k_hat - k) ** 2)) + float(np.mean((n_hat - n) ** 2))
            + cfg.lambda_temporal * temporal_consistency(k_hat))


def hungarian_assign(cost_matrix) -> TapAssignment:
    """Exact minimum-cost assignment of all columns to distinct rows.

    Requires at least as many rows (predictions) as columns (truth taps).
    Runs the potentials-based shortest-augmenting-path algorithm in
    O(n^2 * m) time. Ties resolve deterministically.
    """
    c = np.asarray(cost_matrix, dtype=float)
    if c.ndim != 2:
        raise ShapeError("cost matrix must be 2-D")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix must be finite")
    m, n = c.shape
    if m < n:
        raise ContractError(f"need rows >= columns, got {m} x {n}")

    inf = float("inf")
    # potentials over columns (u, 1-based) and rows (v, 1-based);
    # p[j] is the column currently assigned to row j (0 = free)
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = c[j - 1, i0 - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    row_of_col = {}
    for j in range(1, m + 1):
        if p[j] != 0:
            row_of_col[p[j] - 1] = j - 1
    pairs = tuple((row_of_col[col], col) for col in range(n))
    matched_rows = set(row_of_col.values())
    unmatched = tuple(r for r in range(m) if r not in matched_rows)
    total = float(np.sum([c[r, col] for r, col in pairs])) if pairs else 0.0
    return TapAssignment(pairs=pairs, unmatched_pred=unmatched, cost=total)


def _as_tap_array(taps) -> np.ndarray:
    arr = np.asarray(taps, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeError("tap set must be an (n, 2) array of (delay_ns, power_db)")
    return arr


def match_loss(pred_taps, truth_taps,
               cfg: MatchConfig = MatchConfig()) -> tuple[float, TapAssignment]:
    """Set-to-set tap distance under the optimal assignment.

    Each tap is embedded as the 2-vector ``[delay_weight * delay, power]``
    and pairs are scored by squared Euclidean distance. Every truth tap must
    be matched, so predictions must not be fewer than truths; surplus
    predictions incur no cost here (the repulsion term is what discourages
    redundant ones).
    """
    pred = _as_tap_array(pred_taps)
    truth = _as_tap_array(truth_taps)
    if truth.shape[0] == 0:
        return 0.0, TapAssignment(pairs=(), unmatched_pred=tuple(range(pred.shape[0])),
                                  cost=0.0)
    if pred.shape[0] < truth.shape[0]:
        raise ContractError(
            f"{pred.shape[0]} predictions cannot cover {truth.shape[0]} truth taps")
    d_cost = (cfg.delay_weight * (pred[:, :1] - truth[:, 0])) ** 2
    p_cost = (pred[:, 1:] - truth[:, 1]) ** 2
    assignment = hungarian_assign(d_cost + p_cost)
    return assignment.cost / truth.shape[0], assignment


def repulsion_loss(pred_delays, cfg: MatchConfig = MatchConfig()) -> float:
    """Mean pairwise hinge penalty for predicted delays closer than the minimum gap."""
    tau = np.asarray(pred_delays, dtype=float)
    n = tau.size
    if n < 2:
        return 0.0
    gaps = np.abs(tau[:, np.newaxis] - tau[np.newaxis, :])
    hinge = np.maximum(0.0, cfg.repulsion_min_sep_ns - gaps)
    np.fill_diagonal(hinge, 0.0)
    return float(hinge.sum() / (n * (n - 1)))


def stage3_loss(pred_sets: Sequence, truth_sets: Sequence,
                cfg: MatchConfig = MatchConfig()) -> float:
    """Tap-tracking objective: mean match loss plus weighted mean repulsion."""
    if len(pred_sets) != len(truth_sets):
        raise ShapeError("prediction and truth frame counts differ")
    if len(pred_sets) == 0:
        raise ContractError("no frames to score")
    match_terms = []
    rep_terms = []
    for pred, truth in zip(pred_sets, truth_sets):
        loss, _ = match_loss(pred, truth, cfg)
        match_terms.append(loss)
        rep_terms.append(repulsion_loss(_as_tap_array(pred)[:, 0], cfg))
    return float(np.mean(match_terms)) + cfg.repulsion_alpha * float(np.mean(rep_terms))
