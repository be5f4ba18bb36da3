"""File formats, timestamp pairing, and route-based dataset splitting.

PDP routes live in a small CSV dialect (header comment carrying the bin
spacing, one snapshot per row) or a packed binary variant; TDL parameter
sets and route manifests are JSON. Splits assign whole routes so that no
route leaks across train/val/test.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    ConfigError,
    ContractError,
    PdpSnapshot,
    TdlParams,
    ValidationError,
)
from .geo import GeoPoint

PDP_BINARY_MAGIC = b"TDLF"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class SampleRef:
    """Pointers to one sample's channel and imagery artifacts."""

    timestamp_s: float
    pdp_path: str = ""
    tdl_path: str = ""
    global_img_path: str = ""
    local_img_path: str = ""
    mask_path: str = ""
    tx: GeoPoint | None = None
    rx: GeoPoint | None = None


@dataclass
class RouteManifest:
    """All samples of one measured route, split-assigned as a whole."""

    route_id: str
    sample_refs: list[SampleRef] = field(default_factory=list)
    split: Split | None = None

    def __post_init__(self):
        ts = [r.timestamp_s for r in self.sample_refs]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError(
                f"route {self.route_id}: timestamps must be strictly increasing")

    @property
    def n_samples(self) -> int:
        return len(self.sample_refs)


def save_pdp_csv(snapshots: Sequence[PdpSnapshot], path) -> None:
    """Write snapshots as `# bin_spacing_ns=<v>` then `timestamp, p0, p1, ...` rows."""
    if not snapshots:
        raise ContractError("nothing to write")
    spacing = snapshots[0].bin_spacing_ns
    lines = [f"# bin_spacing_ns={spacing!r}"]
    for s in snapshots:
        if s.bin_spacing_ns != spacing:
            raise ValidationError("snapshots differ in bin spacing")
        lines.append(",".join([repr(s.timestamp_s)] + [repr(float(p))
                                                       for p in s.powers_db]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_pdp_csv(path) -> list[PdpSnapshot]:
    """Parse a PDP CSV; malformed rows and non-monotone timestamps are errors."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValidationError(f"{path}: missing `# bin_spacing_ns=` header")
    header = lines[0].lstrip("#").strip()
    key, _, value = header.partition("=")
    if key.strip() != "bin_spacing_ns":
        raise ValidationError(f"{path}: header must define bin_spacing_ns")
    try:
        spacing = float(value)
    except ValueError as exc:
        raise ValidationError(f"{path}: bad bin_spacing_ns {value!r}") from exc

    snapshots = []
    n_bins = None
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) < 2:
            raise ValidationError(f"{path}:{row_no}: need a timestamp and >= 1 bin")
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            raise ValidationError(f"{path}:{row_no}: non-numeric cell") from exc
        if n_bins is None:
            n_bins = len(values) - 1
        elif len(values) - 1 != n_bins:
            raise ValidationError(f"{path}:{row_no}: expected {n_bins} bins")
        snapshots.append(PdpSnapshot(powers_db=np.array(values[1:]),
                                     bin_spacing_ns=spacing, timestamp_s=values[0]))
    ts = [s.timestamp_s for s in snapshots]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValidationError(f"{path}: timestamps must be strictly increasing")
    return snapshots


def save_pdp_binary(snapshots: Sequence[PdpSnapshot], path) -> None:
    """Packed bulk variant: 16-byte header, then f64 timestamp + f32 bins per row."""
    if not snapshots:
        raise ContractError("nothing to write")
    n_bins = snapshots[0].n_bins
    spacing = snapshots[0].bin_spacing_ns
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sId", PDP_BINARY_MAGIC, n_bins, spacing))
        for s in snapshots:
            if s.n_bins != n_bins:
                raise ValidationError("snapshots differ in bin count")
            fh.write(struct.pack("<d", s.timestamp_s))
            fh.write(s.powers_db.astype("<f4").tobytes())


def load_pdp_binary(path) -> list[PdpSnapshot]:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != PDP_BINARY_MAGIC:
        raise ValidationError(f"{path}: not a PDP binary file")
    _, n_bins, spacing = struct.unpack("<4sId", data[:16])
    row_size = 8 + 4 * n_bins
    body = data[16:]
    if len(body) % row_size:
        raise ValidationError(f"{path}: truncated row")
    snapshots = []
    for i in range(len(body) // row_size):
        row = body[i * row_size:(i + 1) * row_size]
        (ts,) = struct.unpack("<d", row[:8])
        powers = np.frombuffer(row[8:], dtype="<f4").astype(float)
        snapshots.append(PdpSnapshot(powers_db=powers, bin_spacing_ns=spacing,
                                     timestamp_s=ts))
    return snapshots


def tdl_to_dict(params: TdlParams) -> dict:
    return {
        "first_tap_power_db": params.first_tap_power_db,
        "k_factor_db": params.k_factor_db,
        "num_taps": params.num_taps,
        "delays_ns": [float(d) for d in params.delays_ns],
        "powers_db": [float(p) for p in params.powers_db],
    }


def tdl_from_dict(obj: dict, context: str = "tdl") -> TdlParams:
    if not isinstance(obj, dict):
        raise ValidationError(f"{context}: expected a JSON object")
    for key in ("first_tap_power_db", "k_factor_db", "num_taps",
                "delays_ns", "powers_db"):
        if key not in obj:
            raise ValidationError(f"{context}: missing field {key!r}")
    try:
        return TdlParams(
            first_tap_power_db=float(obj["first_tap_power_db"]),
            k_factor_db=float(obj["k_factor_db"]),
            num_taps=int(obj["num_taps"]),
            delays_ns=np.asarray(obj["delays_ns"], dtype=float),
            powers_db=np.asarray(obj["powers_db"], dtype=float),
        )
    except (TypeError, ValueError, ValidationError) as exc:
        raise ValidationError(f"{context}: {exc}") from exc


def save_tdl_json(params: TdlParams, path) -> None:
    """Write a TDL parameter set; float repr keeps the round trip bit-exact."""
    Path(path).write_text(json.dumps(tdl_to_dict(params), indent=2) + "\n")


def load_tdl_json(path) -> TdlParams:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return tdl_from_dict(obj, context=str(path))


def manifest_to_dict(manifest: RouteManifest) -> dict:
    def ref(r: SampleRef) -> dict:
        d = {"timestamp_s": r.timestamp_s, "pdp_path": r.pdp_path,
             "tdl_path": r.tdl_path, "global_img_path": r.global_img_path,
             "local_img_path": r.local_img_path, "mask_path": r.mask_path}
        if r.tx is not None:
            d["tx"] = {"lat_deg": r.tx.lat_deg, "lon_deg": r.tx.lon_deg}
        if r.rx is not None:
            d["rx"] = {"lat_deg": r.rx.lat_deg, "lon_deg": r.rx.lon_deg}
        return d

    return {"route_id": manifest.route_id,
            "split": manifest.split.value if manifest.split else None,
            "sample_refs": [ref(r) for r in manifest.sample_refs]}


def manifest_from_dict(obj: dict, context: str = "manifest") -> RouteManifest:
    if not isinstance(obj, dict) or "route_id" not in obj:
        raise ValidationError(f"{context}: missing field 'route_id'")

    def point(d):
        return None if d is None else GeoPoint(lat_deg=float(d["lat_deg"]),
                                               lon_deg=float(d["lon_deg"]))

    try:
        refs = [SampleRef(timestamp_s=float(r["timestamp_s"]),
                          pdp_path=r.get("pdp_path", ""),
                          tdl_path=r.get("tdl_path", ""),
                          global_img_path=r.get("global_img_path", ""),
                          local_img_path=r.get("local_img_path", ""),
                          mask_path=r.get("mask_path", ""),
                          tx=point(r.get("tx")), rx=point(r.get("rx")))
                for r in obj.get("sample_refs", [])]
        split = Split(obj["split"]) if obj.get("split") else None
        return RouteManifest(route_id=str(obj["route_id"]), sample_refs=refs,
                             split=split)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{context}: {exc}") from exc


def save_manifest(manifest: RouteManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2) + "\n")


def load_manifest(path) -> RouteManifest:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return manifest_from_dict(obj, context=str(path))


def pair_by_timestamp(channel_ts: Sequence[float], image_ts: Sequence[float],
                      tolerance_s: float) -> list[tuple[int, int]]:
    """Greedy nearest-neighbor pairing of two sorted timestamp vectors.

    Each element is used at most once and pair indices are strictly
    increasing on both sides; equidistant candidates resolve to the earlier
    image index. Pairs farther apart than the tolerance are dropped.
    """
    pairs = []
    j_start = 0
    n_img = len(image_ts)
    for i, t in enumerate(channel_ts):
        if j_start >= n_img:
            break
        lo = j_start
        while lo < n_img and image_ts[lo] < t:
            lo += 1
        candidates = []
        if lo - 1 >= j_start:
            candidates.append(lo - 1)
        if lo < n_img:
            candidates.append(lo)
        if not candidates:
            continue
        best = min(candidates, key=lambda j: (abs(image_ts[j] - t), j))
        if abs(image_ts[best] - t) <= tolerance_s:
            pairs.append((i, best))
            j_start = best + 1
    return pairs


def split_routes(manifests: Sequence[RouteManifest],
                 fractions: tuple[float, float, float],
                 seed: int) -> list[RouteManifest]:
    """Assign whole routes to train/val/test by seeded shuffle.

    Routes are dealt greedily to the split with the largest remaining sample
    deficit, which tracks the requested fractions as closely as whole-route
    granularity allows. Every non-zero split receives at least one route.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("fractions must sum to 1")
    if any(f < 0 for f in fractions):
        raise ConfigError("fractions must be non-negative")
    splits = [Split.TRAIN, Split.VAL, Split.TEST]
    active = [s for s, f in zip(splits, fractions) if f > 0]
    if len(manifests) < len(active):
        raise ConfigError(
            f"{len(manifests)} routes cannot populate {len(active)} splits")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(manifests))
    total = sum(m.n_samples for m in manifests)
    target = {s: f * total for s, f in zip(splits, fractions)}
    assigned: dict[Split, float] = {s: 0.0 for s in splits}
    count: dict[Split, int] = {s: 0 for s in splits}

    out: list[RouteManifest] = [None] * len(manifests)  # type: ignore[list-item]
    remaining = len(manifests)
    for idx in order:
        m = manifests[idx]
        # force-fill any still-empty split once routes run short
        empty = [s for s in active if count[s] == 0]
        if empty and remaining <= len(empty):
            choice = empty[0]
        else:
            choice = max(active, key=lambda s: target[s] - assigned[s])
        assigned[choice] += m.n_samples
        count[choice] += 1
        remaining -= 1
        out[idx] = RouteManifest(route_id=m.route_id, sample_refs=m.sample_refs,
                                 split=choice)
    return out
