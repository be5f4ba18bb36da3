"""Pluggable predictor boundary.

External models emit TDL parameter sets; this module defines the prediction
file format they must produce and a trivial distance-nearest-neighbor
baseline for sanity checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import ContractError, TdlParams, ValidationError
from .dataio import tdl_from_dict, tdl_to_dict


@dataclass(frozen=True)
class PredictionRecord:
    timestamp_s: float
    tdl: TdlParams


def load_predictions(path) -> list[PredictionRecord]:
    """Read JSON-lines predictions, validated and sorted by timestamp."""
    records = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "timestamp_s" not in obj:
            raise ValidationError(f"{path}:{line_no}: missing field 'timestamp_s'")
        tdl = tdl_from_dict(obj.get("tdl"), context=f"{path}:{line_no}")
        records.append(PredictionRecord(timestamp_s=float(obj["timestamp_s"]), tdl=tdl))
    records.sort(key=lambda r: r.timestamp_s)
    return records


def save_predictions(records: Sequence[PredictionRecord], path) -> None:
    lines = [json.dumps({"timestamp_s": r.timestamp_s, "tdl": tdl_to_dict(r.tdl)})
             for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def baseline_nearest_tdl(train_set: Sequence[tuple[float, TdlParams]],
                         query_distance_m: float) -> TdlParams:
    """Return the training TDL whose Tx-Rx distance is closest to the query.

    Equidistant candidates resolve to the smaller distance, then the earlier
    list position.
    """
    if not train_set:
        raise ContractError("baseline needs a non-empty training set")
    best = min(enumerate(train_set),
               key=lambda it: (abs(it[1][0] - query_distance_m), it[1][0], it[0]))
    return best[1][1]
