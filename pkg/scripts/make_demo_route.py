#!/usr/bin/env python3
"""Build a synthetic measurement route and push it through the full toolkit.

Generates a drive route whose channel interpolates between two TDL states,
writes the PDP CSV, extracts TDL parameters with the CLI, produces both an
identity prediction and a distance-nearest-neighbor baseline, and scores
each against the extracted truth.

Usage: python3 scripts/make_demo_route.py --out demo_run [--seed 0]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from tdlforge.cli import main as cli_main
from tdlforge.core import SPEED_OF_LIGHT_M_PER_NS, PdpSnapshot, TdlParams
from tdlforge.dataio import load_tdl_json, save_pdp_csv
from tdlforge.predict import PredictionRecord, baseline_nearest_tdl, save_predictions
from tdlforge.synth import SamplingSpec, generate_ensemble

SNAPSHOT_RATE_HZ = 45.0
BIN_NS = 33.3


def route_state(progress: float) -> tuple[TdlParams, float]:
    """Channel state along the route: taps drift apart, K drops, path lengthens."""
    second_tap_bins = 5 + int(round(4 * progress))
    third_tap_bins = second_tap_bins + 6
    params = TdlParams(
        first_tap_power_db=-58.0 - 6.0 * progress,
        k_factor_db=14.0 - 9.0 * progress,
        num_taps=3,
        delays_ns=np.array([0.0, second_tap_bins * BIN_NS, third_tap_bins * BIN_NS]),
        powers_db=np.array([0.0, -4.0 - 3.0 * progress, -11.0]),
    )
    tof_bins = 12 + int(round(10 * progress))
    return params, tof_bins * BIN_NS * SPEED_OF_LIGHT_M_PER_NS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_run")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--segments", type=int, default=5,
                    help="distinct channel states along the route")
    ap.add_argument("--snaps-per-segment", type=int, default=27)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # one noisy snapshot per time step, channel state changing per segment
    snapshots: list[PdpSnapshot] = []
    segment_info = []
    t = 0.0
    for seg in range(args.segments):
        progress = seg / max(args.segments - 1, 1)
        params, distance = route_state(progress)
        spec = SamplingSpec(sample_period_ns=BIN_NS, grid_len=40,
                            rng_seed=args.seed + seg)
        draws = generate_ensemble(params, distance, args.snaps_per_segment, spec,
                                  scatter_offset_ns=BIN_NS, noise_floor_db=-133.0)
        for p in draws:
            snapshots.append(PdpSnapshot(powers_db=p.powers_db,
                                         bin_spacing_ns=BIN_NS, timestamp_s=t))
            t += 1.0 / SNAPSHOT_RATE_HZ
        segment_info.append({"segment": seg, "distance_m": distance,
                             "k_factor_db": params.k_factor_db})
    csv_path = out / "route.csv"
    save_pdp_csv(snapshots, csv_path)
    print(f"route: {len(snapshots)} snapshots -> {csv_path}")

    truth_dir = out / "truth"
    code = cli_main(["extract", "--pdp", str(csv_path), "--out", str(truth_dir),
                     "--window", "9"])
    if code != 0:
        print(f"extract exited {code}", file=sys.stderr)
        return code

    index = json.loads((truth_dir / "index.json").read_text())
    truth = [(s["timestamp_s"], load_tdl_json(truth_dir / s["tdl_path"]))
             for s in index["samples"]]

    # identity predictions: the extracted truth itself
    identity_path = out / "pred_identity.jsonl"
    save_predictions([PredictionRecord(ts, tdl) for ts, tdl in truth], identity_path)

    # baseline: nearest-distance lookup from the first half of the route
    n_train = len(truth) // 2
    per_snap = args.snaps_per_segment / SNAPSHOT_RATE_HZ
    distances = [route_state(min(ts / (per_snap * (args.segments - 1)), 1.0))[1]
                 for ts, _ in truth]
    train = [(distances[i], truth[i][1]) for i in range(n_train)]
    baseline_path = out / "pred_baseline.jsonl"
    save_predictions(
        [PredictionRecord(ts, baseline_nearest_tdl(train, distances[i]))
         for i, (ts, _) in enumerate(truth)], baseline_path)

    for tag, pred_path in (("identity", identity_path), ("baseline", baseline_path)):
        report_path = out / f"report_{tag}.json"
        code = cli_main(["eval", "--truth", str(truth_dir), "--pred", str(pred_path),
                         "--out", str(report_path), "--seed", str(args.seed)])
        if code != 0:
            print(f"eval ({tag}) exited {code}", file=sys.stderr)
            return code
        report = json.loads(report_path.read_text())
        print(f"{tag:>9}: path loss rmse {report['rmse_path_loss_db']:.3f} dB, "
              f"delay spread rmse {report['rmse_delay_spread_ns']:.2f} ns, "
              f"K rmse {report['rmse_k_factor_db']:.3f} dB, "
              f"cosine {report['pdp_avg_cosine_similarity']:.4f}")
    (out / "segments.json").write_text(json.dumps(segment_info, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
