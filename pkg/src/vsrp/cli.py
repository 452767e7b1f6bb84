"""Command-line entry point: ``vsrp {tables,simulate,localize,bench,energymap}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .correlation import FramePlan, correlate_frame, frame_signal
from .experiment import ExperimentConfig, Searcher, build_searchers, load_config, run_experiment, source_signals
from .localizers import Estimate
from .tables import complexity_report, predict_ops_vsrp
from .wavio import read_wav, write_wav


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.fs is not None:
        changes["fs"] = args.fs
    if args.c is not None:
        changes["c"] = args.c
    if args.frame_length is not None or args.hop is not None:
        changes["frames"] = FramePlan(args.frame_length or config.frames.length,
                                      args.hop or config.frames.hop)
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.cache_dir is not None:
        changes["cache_dir"] = args.cache_dir
    if changes:
        config = dataclasses.replace(config, **changes)
        config.validate()
    return config


def _searcher(config: ExperimentConfig, name: str | None) -> Searcher:
    specs = [m for m in config.methods if name is None or m.name == name]
    if not specs:
        raise SystemExit(f"no method named {name!r}; have {[m.name for m in config.methods]}")
    return Searcher(specs[0], config)


def _wav_frames(config: ExperimentConfig, path):
    fs, data = read_wav(path)
    if fs != int(config.fs):
        raise ValueError(f"{path}: sample rate {fs} differs from configured {config.fs}")
    if data.shape[0] != config.array.num_mics:
        raise ValueError(f"{path}: {data.shape[0]} channels for {config.array.num_mics} microphones")
    return frame_signal(data, config.frames)


def cmd_tables(config: ExperimentConfig, args) -> None:
    out = {}
    for m in config.methods:
        if m.kind == "msrp":
            s = Searcher(m, config)
            rep = complexity_report(config.region, config.array, config.fs, config.c, spacing=m.spacing)
            rep.ops_csrp = None
            rep.ops_msrp = predict_ops_vsrp(s.windows.sets)
            rep.table_bytes = s.windows.sets.nbytes
        else:
            rep = complexity_report(
                config.region, config.array, config.fs, config.c,
                spacing=m.spacing if m.kind == "csrp" else None,
                edge=m.edge, alpha=m.alpha,
                refine_spacing=m.refine_spacing if m.kind == "rvsrp" else None,
                refine_closed=m.refine_closed)
            if config.cache_dir and m.kind != "csrp":
                Searcher(m, config)  # populates the on-disk cache
        out[m.name] = rep.to_dict()
    print(json.dumps(out, indent=2))


def cmd_simulate(config: ExperimentConfig, args) -> None:
    if config.simulation is None:
        raise SystemExit("config has no [simulation] section")
    out = Path(args.output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(len(config.sources)):
        data = source_signals(dataclasses.replace(
            config, sources=tuple(dataclasses.replace(s, wav=None) for s in config.sources)), i)
        peak = np.max(np.abs(data))
        path = out / f"source_{i:02d}.wav"
        write_wav(path, data / peak * 0.9 if peak > 0 else data, int(config.fs), bits=args.bits)
        print(path)


def _estimate_row(k: int, est: Estimate) -> list:
    return [k, *map(repr, map(float, est.position)), repr(est.score), est.measured_additions,
            est.element_index]


def cmd_localize(config: ExperimentConfig, args) -> None:
    searcher = _searcher(config, args.method)
    rows = []
    for k, frame in enumerate(_wav_frames(config, args.wav)):
        corr = correlate_frame(frame, config.array.pairs, config.lag_range, config.phat)
        rows.append(_estimate_row(k, searcher.localize(corr)))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["frame", "x", "y", "z", "score", "additions", "element"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()


def cmd_bench(config: ExperimentConfig, args) -> None:
    searchers = build_searchers(config)
    report = run_experiment(
        config, searchers,
        progress=lambda i, n: print(f"source {i}: {n} frames", file=sys.stderr))
    report.write(config.output_dir)
    summary = report.summary()
    for name, m in summary["methods"].items():
        print(f"{name:>16}  mean {100 * m['mean_error_m']:7.2f} cm  median "
              f"{100 * m['median_error_m']:7.2f} cm  ops {m['predicted_ops']:>12,}")
    bad = [n for n, m in summary["methods"].items()
           if m["kind"] in ("csrp", "vsrp", "rvsrp") and m["measured_ops_per_frame"] != [m["predicted_ops"]]]
    if bad:
        raise SystemExit(f"measured additions differ from prediction for {bad}")


def cmd_energymap(config: ExperimentConfig, args) -> None:
    searcher = _searcher(config, args.method)
    frames = _wav_frames(config, args.wav)
    if not 0 <= args.frame < len(frames):
        raise SystemExit(f"frame {args.frame} out of range (0..{len(frames) - 1})")
    corr = correlate_frame(frames[args.frame], config.array.pairs, config.lag_range, config.phat)
    searcher.energy_map(corr).to_csv(args.out)
    if args.correlation_csv:
        lags = np.arange(-corr.max_lag, corr.max_lag + 1)
        with open(args.correlation_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lag"] + [f"pair_{a}_{b}" for a, b in config.array.pairs])
            for j, lag in enumerate(lags):
                w.writerow([int(lag), *map(repr, map(float, corr.phi[:, j]))])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vsrp", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment TOML file")
    common.add_argument("--seed", type=int)
    common.add_argument("--fs", type=float)
    common.add_argument("--c", type=float, help="speed of sound, m/s")
    common.add_argument("--frame-length", type=int)
    common.add_argument("--hop", type=int)
    common.add_argument("--output-dir")
    common.add_argument("--cache-dir")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", parents=[common], help="build lag tables, print complexity report")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("simulate", parents=[common], help="render microphone WAVs for each source")
    p.add_argument("--bits", type=int, default=24, choices=(16, 24))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("localize", parents=[common], help="per-frame estimates for one WAV")
    p.add_argument("--wav", required=True)
    p.add_argument("--method")
    p.add_argument("--out")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("bench", parents=[common], help="run the full experiment")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("energymap", parents=[common], help="objective over the grid for one frame")
    p.add_argument("--wav", required=True)
    p.add_argument("--method")
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--correlation-csv")
    p.set_defaults(func=cmd_energymap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _apply_overrides(load_config(args.config), args)
        args.func(config, args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
