"""Batch command-line front end.

Subcommands cover the full workflow: ``extract`` (PDP route -> TDL files),
``synth`` (TDL -> fading ensemble), ``roundtrip`` (synthesize, re-extract,
compare), ``eval`` (prediction file vs truth -> metric report), and ``geo``
(link geometry and satellite crops).

Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 tolerance
breach. Every command is deterministic given its flags; ``--jobs`` changes
only wall time, never output bytes. ``TDLFORGE_SEED`` provides the default
seed, and ``--config FILE`` (key=value lines) can preload any flag.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio, geo, metrics, predict
from .core import TdlParams, ToolkitError
from .pdp import DenoiseConfig, ExtractConfig, pdp_to_tdl, sliding_average
from .synth import (
    RoundTripTolerances,
    SamplingSpec,
    default_grid,
    generate_ensemble,
    run_roundtrip,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3


def _default_seed() -> int:
    return int(os.environ.get("TDLFORGE_SEED", "0"))


def _parse_latlon(text: str) -> geo.GeoPoint:
    try:
        lat, lon = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'lat,lon', got {text!r}") from exc
    return geo.GeoPoint(lat_deg=lat, lon_deg=lon)


def _noise_floor(text: str):
    return None if text.lower() == "none" else float(text)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--json", action="store_true", help="machine-readable stdout")
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sub.add_argument("--seed", type=int, default=_default_seed(),
                     help="RNG seed (default: $TDLFORGE_SEED or 0)")
    sub.add_argument("--config", default=None, help="key=value file of flag defaults")


def _run_indexed(jobs: int, fn, items):
    """Apply fn over items, preserving order regardless of worker count."""
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdlforge",
        description="TDL channel-sounding toolkit: extraction, synthesis, evaluation")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract", help="extract TDL parameters from a PDP route CSV")
    p.add_argument("--pdp", required=True, help="input PDP CSV")
    p.add_argument("--out", required=True, help="output directory for TDL JSONs")
    p.add_argument("--window", type=int, default=9, help="sliding average length")
    p.add_argument("--abs-floor", type=float, default=-160.0)
    p.add_argument("--bottom-fraction", type=float, default=0.20)
    p.add_argument("--margin", type=float, default=11.0)
    p.add_argument("--no-denoise", action="store_true",
                   help="skip noise truncation (noise-free synthetic input)")
    p.add_argument("--max-taps", type=int, default=40)
    p.add_argument("--dynamic-range", type=float, default=50.0)
    p.add_argument("--min-separation", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("synth", help="synthesize a fading ensemble from a TDL file")
    p.add_argument("--tdl", required=True, help="TDL parameter JSON")
    p.add_argument("--distance", type=float, required=True, help="Tx-Rx distance (m)")
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sample-period", type=float, default=33.3)
    p.add_argument("--scatter-offset-bins", type=int, default=0)
    p.add_argument("--noise-floor", type=_noise_floor, default=None,
                   metavar="DB|none", help="absolute noise floor to add")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("roundtrip",
                        help="synthesize, re-extract, and diff against the input TDL")
    p.add_argument("--tdl", required=True)
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--scatter-offset-bins", type=int, default=1)
    p.add_argument("--noise-floor", type=_noise_floor, default=-135.0,
                   metavar="DB|none")
    p.add_argument("--tol-delay-bins", type=int, default=0)
    p.add_argument("--tol-power-rms", type=float, default=0.5)
    p.add_argument("--tol-first-tap", type=float, default=0.5)
    p.add_argument("--tol-k", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_roundtrip)

    p = subs.add_parser("eval", help="score a prediction file against extracted truth")
    p.add_argument("--truth", required=True,
                   help="directory produced by `extract` (with index.json)")
    p.add_argument("--pred", required=True, help="JSON-lines prediction file")
    p.add_argument("--out", required=True, help="metric report JSON")
    p.add_argument("--pair-tolerance", type=float, default=0.5,
                   help="max |timestamp difference| for pairing (s)")
    p.add_argument("--draws", type=int, default=8,
                   help="fading draws per reconstructed PDP")
    p.add_argument("--independent-fading", action="store_true",
                   help="use different fading draws for truth and prediction")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("geo", help="link geometry and satellite crop specs")
    p.add_argument("--tx", type=_parse_latlon, required=True, metavar="LAT,LON")
    p.add_argument("--rx", type=_parse_latlon, required=True, metavar="LAT,LON")
    p.add_argument("--raster", default=None, help="source imagery PNG")
    p.add_argument("--georef", default=None, help="georeference JSON for --raster")
    p.add_argument("--out", default=None, help="directory for cropped images")
    p.add_argument("--annotate", action="store_true",
                   help="overlay Tx/Rx markers and the LOS line")
    _add_common(p)
    p.set_defaults(func=cmd_geo)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Expand `--config FILE` into pseudo-flags that explicit flags override."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ToolkitError("--config requires a file argument")
    path = argv[at + 1]
    rest = argv[:at] + argv[at + 2:]
    pseudo: list[str] = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ToolkitError(f"{path}:{line_no}: expected key=value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                pseudo.append(flag)
        else:
            pseudo.extend([flag, value])
    # insert after the subcommand so argparse sees them first (overridable)
    return rest[:1] + pseudo + rest[1:]


def _emit(args, human_lines: list[str], payload: dict) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        for line in human_lines:
            print(line)


def cmd_extract(args) -> int:
    snapshots = dataio.load_pdp_csv(args.pdp)
    apdps = sliding_average(snapshots, args.window)
    dcfg = None if args.no_denoise else DenoiseConfig(
        abs_floor_db=args.abs_floor, bottom_fraction=args.bottom_fraction,
        margin_db=args.margin)
    ecfg = ExtractConfig(max_taps=args.max_taps,
                         dynamic_range_db=args.dynamic_range,
                         min_separation_bins=args.min_separation)

    def work(item):
        idx, apdp = item
        try:
            return idx, pdp_to_tdl(apdp, dcfg, ecfg), None
        except ToolkitError as exc:
            return idx, None, str(exc)

    results = _run_indexed(args.jobs, work, list(enumerate(apdps)))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = []
    failures = []
    for idx, tdl, error in results:
        ts = apdps[idx].timestamp_s
        if tdl is None:
            failures.append({"index": idx, "timestamp_s": ts, "error": error})
            continue
        name = f"tdl_{idx:06d}.json"
        dataio.save_tdl_json(tdl, out_dir / name)
        samples.append({"timestamp_s": ts, "tdl_path": name})
    index = {
        "route_id": Path(args.pdp).stem,
        "bin_spacing_ns": snapshots[0].bin_spacing_ns,
        "window": args.window,
        "samples": samples,
        "failures": failures,
    }
    (out_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n")

    ok = [tdl for _, tdl, _ in results if tdl is not None]
    n_counts: dict[int, int] = {}
    for tdl in ok:
        n_counts[tdl.num_taps] = n_counts.get(tdl.num_taps, 0) + 1
    k_values = [tdl.k_factor_db for tdl in ok]
    summary = {
        "snapshots": len(apdps),
        "extracted": len(ok),
        "failed": len(failures),
        "tap_count_distribution": {str(k): v for k, v in sorted(n_counts.items())},
        "k_factor_db": {
            "min": min(k_values) if k_values else None,
            "mean": float(np.mean(k_values)) if k_values else None,
            "max": max(k_values) if k_values else None,
        },
    }
    lines = [f"extracted {len(ok)}/{len(apdps)} snapshots -> {out_dir}"]
    if n_counts:
        dist = ", ".join(f"N={k}: {v}" for k, v in sorted(n_counts.items()))
        lines.append(f"tap counts: {dist}")
    if k_values:
        lines.append(f"K factor dB: min {min(k_values):.2f} "
                     f"mean {float(np.mean(k_values)):.2f} max {max(k_values):.2f}")
    for f in failures:
        lines.append(f"snapshot {f['index']} failed: {f['error']}")
    _emit(args, lines, summary)
    return EXIT_VALIDATION if failures else EXIT_OK


def cmd_synth(args) -> int:
    params = dataio.load_tdl_json(args.tdl)
    spec = default_grid(params, args.distance,
                        sample_period_ns=args.sample_period, rng_seed=args.seed)
    pdps = generate_ensemble(
        params, args.distance, args.draws, spec,
        scatter_offset_ns=args.scatter_offset_bins * spec.sample_period_ns,
        noise_floor_db=args.noise_floor)
    apdp = sliding_average(pdps, window=args.draws)[0]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataio.save_pdp_csv(pdps, out_dir / "ensemble.csv")
    dataio.save_pdp_csv([apdp], out_dir / "apdp.csv")
    _emit(args,
          [f"wrote {args.draws} draws over {spec.grid_len} bins -> {out_dir}"],
          {"draws": args.draws, "grid_len": spec.grid_len, "out": str(out_dir)})
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    params = dataio.load_tdl_json(args.tdl)
    tol = RoundTripTolerances(
        delay_bins=args.tol_delay_bins, tap_power_rms_db=args.tol_power_rms,
        first_tap_power_db=args.tol_first_tap, k_factor_db=args.tol_k)
    dcfg = None if args.noise_floor is None else DenoiseConfig()
    report = run_roundtrip(
        params, args.distance, n_draws=args.draws, seed=args.seed,
        scatter_offset_bins=args.scatter_offset_bins,
        noise_floor_db=args.noise_floor, tolerances=tol, dcfg=dcfg)

    payload = {
        "n_truth": report.truth.num_taps,
        "n_recovered": report.recovered.num_taps,
        "delay_bin_errors": list(report.delay_bin_errors),
        "tap_power_errors_db": list(report.tap_power_errors_db),
        "tap_power_rms_db": report.tap_power_rms_db,
        "first_tap_power_error_db": report.first_tap_power_error_db,
        "k_factor_error_db": report.k_factor_error_db,
        "passed": report.passed,
    }
    lines = [
        f"taps: truth {report.truth.num_taps}, recovered {report.recovered.num_taps}",
        f"delay bin errors: {list(report.delay_bin_errors)}",
        f"tap power rms error: {report.tap_power_rms_db:.3f} dB "
        f"(tolerance {tol.tap_power_rms_db})",
        f"first tap power error: {report.first_tap_power_error_db:+.3f} dB "
        f"(tolerance {tol.first_tap_power_db})",
        f"K factor error: {report.k_factor_error_db:+.3f} dB "
        f"(tolerance {tol.k_factor_db})",
        "result: PASS" if report.passed else "result: FAIL",
    ]
    _emit(args, lines, payload)
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def _reconstruct_pdp(params: TdlParams, spec: SamplingSpec, draws: int):
    pdps = generate_ensemble(params, 0.0, draws, spec)
    return sliding_average(pdps, window=draws)[0]


def cmd_eval(args) -> int:
    truth_dir = Path(args.truth)
    index = json.loads((truth_dir / "index.json").read_text())
    spacing = float(index["bin_spacing_ns"])
    truth_ts = [float(s["timestamp_s"]) for s in index["samples"]]
    truth_tdls = [dataio.load_tdl_json(truth_dir / s["tdl_path"])
                  for s in index["samples"]]
    records = predict.load_predictions(args.pred)
    pred_ts = [r.timestamp_s for r in records]

    pairs = dataio.pair_by_timestamp(truth_ts, pred_ts, args.pair_tolerance)
    n_unpaired = len(truth_ts) - len(pairs)
    if not pairs or n_unpaired > 0.5 * len(truth_ts):
        print(f"error: only {len(pairs)}/{len(truth_ts)} samples paired",
              file=sys.stderr)
        return EXIT_VALIDATION

    def work(item):
        pair_idx, (ti, pi) = item
        truth = truth_tdls[ti]
        pred = records[pi].tdl
        max_delay = max(float(truth.delays_ns[-1]), float(pred.delays_ns[-1]))
        grid_len = int(np.ceil(max_delay / spacing)) + 9
        truth_seed = args.seed * 2_000_003 + pair_idx
        pred_seed = truth_seed + 1_000_000_007 if args.independent_fading else truth_seed
        truth_pdp = _reconstruct_pdp(
            truth, SamplingSpec(spacing, grid_len, rng_seed=truth_seed), args.draws)
        pred_pdp = _reconstruct_pdp(
            pred, SamplingSpec(spacing, grid_len, rng_seed=pred_seed), args.draws)
        return truth_pdp, pred_pdp, truth, pred

    rows = _run_indexed(args.jobs, work, list(enumerate(pairs)))
    report = metrics.evaluate_route(
        truth_pdps=[r[0] for r in rows], pred_pdps=[r[1] for r in rows],
        truth_tdls=[r[2] for r in rows], pred_tdls=[r[3] for r in rows])
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")

    lines = [
        f"paired {len(pairs)}/{len(truth_ts)} samples "
        f"({n_unpaired} unpaired)",
        f"RMSE path loss:     {report.rmse_path_loss_db:.4f} dB",
        f"RMSE delay spread:  {report.rmse_delay_spread_ns:.4f} ns",
        f"RMSE K factor:      {report.rmse_k_factor_db:.4f} dB",
        f"PDP avg cosine sim: {report.pdp_avg_cosine_similarity:.6f}",
        f"report -> {args.out}",
    ]
    _emit(args, lines, {**report.to_dict(), "unpaired": n_unpaired})
    return EXIT_OK


def cmd_geo(args) -> int:
    geom = geo.link_geometry(args.tx, args.rx)
    if geom.coincident:
        print("warning: Tx and Rx coincide; azimuth set to 0 by convention",
              file=sys.stderr)
    mid = geo.link_midpoint(args.tx, args.rx)
    g_spec = geo.global_crop_spec(geom, mid)
    l_spec = geo.local_crop_spec(args.rx, geom)
    payload = {
        "link": {"distance_m": geom.distance_m, "azimuth_deg": geom.azimuth_deg,
                 "coincident": geom.coincident},
        "global_crop": g_spec.to_dict(),
        "local_crop": l_spec.to_dict(),
    }
    print(json.dumps(payload, indent=2))

    if args.raster is None:
        return EXIT_OK
    if args.georef is None or args.out is None:
        print("error: --raster requires --georef and --out", file=sys.stderr)
        return EXIT_VALIDATION
    src = geo.load_raster(args.raster, args.georef)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, spec in (("global", g_spec), ("local", l_spec)):
        cropped, oob = geo.rotate_crop_resize(src, spec)
        if oob:
            print(f"warning: {name} crop sampled outside the raster",
                  file=sys.stderr)
        if args.annotate:
            d_px = geom.distance_m / spec.width_m * spec.out_width_px
            cy = spec.out_height_px / 2.0
            cx = spec.out_width_px / 2.0
            if name == "global":
                tx_px, rx_px = (cx - d_px / 2.0, cy), (cx + d_px / 2.0, cy)
            else:
                tx_px, rx_px = (cx - d_px, cy), (cx, cy)
            cropped = geo.annotate_link(cropped, tx_px, rx_px)
        geo.save_raster(cropped, out_dir / f"{name}.png",
                        out_dir / f"{name}_georef.json")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return EXIT_OK if code == 0 else EXIT_VALIDATION

    try:
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ToolkitError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
