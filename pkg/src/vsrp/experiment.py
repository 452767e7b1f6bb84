"""Experiment driver: configuration, per-frame localization and error statistics."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .correlation import FramePlan, correlate_frame, default_max_lag, frame_signal
from .geometry import MicArray, SearchRegion, build_point_grid, build_volumetric_grid
from .localizers import (
    Estimate,
    build_msrp_windows,
    csrp_localize,
    energy_map,
    msrp_localize,
    rvsrp_localize,
    vsrp_localize,
)
from .room import RoomSpec, noise_burst, render_mic_signals
from .tables import (
    build_point_table,
    cached_lag_sets,
    lag_sets_from_geometry,
    predict_ops_csrp,
    predict_ops_rvsrp,
    predict_ops_vsrp,
)
from .wavio import read_wav

BIN_WIDTH = 0.05
NUM_BINS = 6
METHOD_KINDS = ("csrp", "vsrp", "rvsrp", "msrp")
_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    kind: str
    spacing: float | None = None
    edge: float | None = None
    alpha: int | None = None
    refine_spacing: float | None = None
    refine_closed: bool = True
    cube_edge: float | None = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}; expected one of {METHOD_KINDS}")
        need = {
            "csrp": ("spacing",),
            "msrp": ("spacing",),
            "vsrp": ("edge", "alpha"),
            "rvsrp": ("edge", "alpha", "refine_spacing"),
        }[self.kind]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"method {self.name!r} ({self.kind}) is missing {missing}")


@dataclass(frozen=True)
class SimulationSpec:
    room: tuple[float, float, float]
    t60: float | None = None
    beta: float | None = None
    max_order: int | None = None
    fractional: bool = False
    duration: float = 1.0
    signal: str = "noise"
    snr_db: float | None = None


@dataclass(frozen=True)
class SourceSpec:
    position: tuple[float, float, float]
    wav: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    array: MicArray
    region: SearchRegion
    methods: tuple[MethodSpec, ...]
    sources: tuple[SourceSpec, ...]
    fs: float = 48000.0
    c: float = 340.0
    frames: FramePlan = field(default_factory=FramePlan)
    phat: bool = True
    max_lag: int | None = None
    error_dims: tuple[int, ...] = (0, 1, 2)
    simulation: SimulationSpec | None = None
    seed: int = 0
    output_dir: str = "results"
    cache_dir: str | None = None

    @property
    def lag_range(self) -> int:
        return self.max_lag if self.max_lag is not None else default_max_lag(self.array, self.fs, self.c)

    def validate(self) -> None:
        if not self.methods:
            raise ValueError("no methods configured")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate method names in {names}")
        if not self.sources:
            raise ValueError("no source positions configured")
        # Every grid lag is bounded by the pair baseline, so this covers all tables.
        needed = default_max_lag(self.array, self.fs, self.c, margin=0)
        if self.lag_range < needed:
            raise ValueError(f"max_lag {self.lag_range} below the array's attainable lag {needed}")
        if self.lag_range >= self.frames.length:
            raise ValueError("max_lag must be smaller than the frame length")
        for s in self.sources:
            if s.wav is None and self.simulation is None:
                raise ValueError("a source without a WAV file needs a [simulation] section")

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentConfig":
        base = Path(base_dir)
        arr = d["array"]
        if "positions" in arr:
            array = MicArray(np.asarray(arr["positions"], dtype=float))
        else:
            array = MicArray.linear(arr["start"], arr["stop"], int(arr["count"]))
        region = SearchRegion(tuple(d["region"]["origin"]), tuple(d["region"]["extents"]))
        methods = tuple(MethodSpec(**m) for m in d["methods"])
        sources = []
        for s in d["sources"]:
            wav = s.get("wav")
            sources.append(SourceSpec(tuple(s["position"]), str(base / wav) if wav else None))
        fr = d.get("frames", {})
        sim = d.get("simulation")
        simulation = None
        if sim is not None:
            sim = dict(sim)
            sim["room"] = tuple(sim["room"])
            if sim.get("signal", "noise") != "noise":
                sim["signal"] = str(base / sim["signal"])
            simulation = SimulationSpec(**sim)
        dims = d.get("error_dims", "xyz")
        cfg = cls(
            array=array,
            region=region,
            methods=methods,
            sources=tuple(sources),
            fs=float(d.get("fs", 48000.0)),
            c=float(d.get("c", 340.0)),
            frames=FramePlan(int(fr.get("length", 4096)), int(fr.get("hop", 2048))),
            phat=bool(fr.get("phat", True)),
            max_lag=d.get("max_lag"),
            error_dims=tuple(_AXES[a] for a in dims) if isinstance(dims, str) else tuple(dims),
            simulation=simulation,
            seed=int(d.get("seed", 0)),
            output_dir=str(base / d.get("output_dir", "results")),
            cache_dir=str(base / d["cache_dir"]) if d.get("cache_dir") else None,
        )
        cfg.validate()
        return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


class Searcher:
    """One configured localization method with its precomputed tables."""

    def __init__(self, spec: MethodSpec, config: ExperimentConfig, shared: dict | None = None):
        self.spec = spec
        self.config = config
        shared = {} if shared is None else shared
        array, region, fs, c = config.array, config.region, config.fs, config.c
        P = array.num_pairs
        if spec.kind in ("csrp", "msrp"):
            self.grid = build_point_grid(region, spec.spacing)
        if spec.kind == "csrp":
            self.table = build_point_table(self.grid, array, fs, c)
            self.predicted_ops = predict_ops_csrp(self.grid.num_points, P)
        elif spec.kind == "msrp":
            self.windows = build_msrp_windows(self.grid, array, fs, c, spec.cube_edge or spec.spacing)
            self.predicted_ops = predict_ops_vsrp(self.windows.sets)
        else:
            key = (spec.edge, spec.alpha)
            if key not in shared:
                vgrid = build_volumetric_grid(region, spec.edge, spec.alpha)
                if config.cache_dir:
                    sets = cached_lag_sets(config.cache_dir, vgrid, array, fs, c)
                else:
                    sets = lag_sets_from_geometry(vgrid, array, fs, c)
                shared[key] = (vgrid, sets)
            self.vgrid, self.sets = shared[key]
            if spec.kind == "vsrp":
                self.predicted_ops = predict_ops_vsrp(self.sets)
            else:
                self.predicted_ops = predict_ops_rvsrp(self.sets, spec.edge, spec.refine_spacing, P,
                                                       region.ndim, spec.refine_closed)

    def localize(self, corr) -> Estimate:
        kind = self.spec.kind
        if kind == "csrp":
            return csrp_localize(corr, self.table, self.grid)
        if kind == "vsrp":
            return vsrp_localize(corr, self.sets, self.vgrid)
        if kind == "rvsrp":
            cfg = self.config
            return rvsrp_localize(corr, self.sets, self.vgrid, cfg.array, cfg.fs, cfg.c,
                                  self.spec.refine_spacing, self.spec.refine_closed)
        return msrp_localize(corr, self.windows, self.grid)

    def energy_map(self, corr):
        kind = self.spec.kind
        if kind == "csrp":
            return energy_map(corr, "csrp", self.table, self.grid)
        if kind == "msrp":
            return energy_map(corr, "msrp", self.windows, self.grid)
        return energy_map(corr, "vsrp", self.sets, self.vgrid)


def build_searchers(config: ExperimentConfig) -> list[Searcher]:
    shared: dict = {}
    return [Searcher(m, config, shared) for m in config.methods]


def error_metrics(estimates, truths, dims=(0, 1, 2)):
    """Per-frame Euclidean errors over ``dims``: ``(mean, median, histogram)``.

    The histogram has ``NUM_BINS`` bins ``[k * 5, (k + 1) * 5)`` cm followed by
    one overflow bin for errors of 30 cm and above.
    """
    errors = frame_errors(estimates, truths, dims)
    if errors.size == 0:
        raise ValueError("no estimates")
    return float(np.mean(errors)), float(np.median(errors)), histogram(errors)


def frame_errors(estimates, truths, dims=(0, 1, 2)) -> np.ndarray:
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    tru = np.atleast_2d(np.asarray(truths, dtype=float))
    if est.shape != tru.shape:
        raise ValueError(f"{est.shape[0]} estimates vs {tru.shape[0]} ground-truth positions")
    diff = (est - tru)[:, list(dims)]
    return np.sqrt(np.sum(diff * diff, axis=1))


def histogram(errors) -> np.ndarray:
    bins = np.floor(np.asarray(errors) / BIN_WIDTH + 1e-9).astype(np.int64)
    return np.bincount(np.minimum(bins, NUM_BINS), minlength=NUM_BINS + 1)


@dataclass
class MethodResult:
    name: str
    kind: str
    predicted_ops: int
    estimates: list = field(default_factory=list)
    truths: list = field(default_factory=list)
    measured_ops: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    frame_ids: list = field(default_factory=list)
    wall_time: float = 0.0

    def errors(self, dims) -> np.ndarray:
        return frame_errors(self.estimates, self.truths, dims)

    def summary(self, dims) -> dict:
        mean, median, hist = error_metrics(self.estimates, self.truths, dims)
        return {
            "name": self.name,
            "kind": self.kind,
            "frames": len(self.estimates),
            "mean_error_m": mean,
            "median_error_m": median,
            "histogram": hist.tolist(),
            "predicted_ops": self.predicted_ops,
            "measured_ops_per_frame": sorted(set(self.measured_ops)),
            "wall_time_s": self.wall_time,
        }


@dataclass
class RunReport:
    methods: dict
    error_dims: tuple

    def summary(self) -> dict:
        return {
            "error_dims": list(self.error_dims),
            "bin_width_m": BIN_WIDTH,
            "methods": {k: m.summary(self.error_dims) for k, m in self.methods.items()},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.summary(), **kwargs)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(indent=2))
        with open(out / "estimates.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "source", "frame", "x", "y", "z", "score", "additions", "error_m"])
            for name, m in self.methods.items():
                errs = m.errors(self.error_dims)
                for (src, fr), pos, s, ops, e in zip(m.frame_ids, m.estimates, m.scores,
                                                     m.measured_ops, errs):
                    w.writerow([name, src, fr, *map(repr, map(float, pos)), repr(s), ops, repr(float(e))])
        with open(out / "histograms.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method"] + [f"{5 * k}-{5 * (k + 1)}cm" for k in range(NUM_BINS)]
                       + [f">={5 * NUM_BINS}cm"])
            for name, m in self.methods.items():
                w.writerow([name, *histogram(m.errors(self.error_dims)).tolist()])


def source_signals(config: ExperimentConfig, index: int) -> np.ndarray:
    """Microphone signals ``(M, T)`` for source ``index``, read or simulated."""
    src = config.sources[index]
    if src.wav is not None:
        fs, data = read_wav(src.wav)
        if fs != int(config.fs):
            raise ValueError(f"{src.wav}: sample rate {fs} differs from configured {config.fs}")
    else:
        sim = config.simulation
        room = RoomSpec(sim.room, config.fs, config.c, sim.t60, sim.beta, sim.max_order, sim.fractional)
        if sim.signal == "noise":
            excitation = noise_burst(sim.duration, config.fs, seed=[config.seed, index])
        else:
            fs, mono = read_wav(sim.signal)
            excitation = mono[0]
        data = render_mic_signals(room, src.position, excitation, config.array.positions,
                                  sim.snr_db, seed=[config.seed, index, 1])
        data = data[:, : excitation.size]
    if data.shape[0] != config.array.num_mics:
        raise ValueError(f"source {index}: {data.shape[0]} channels for {config.array.num_mics} microphones")
    return data


def run_experiment(config: ExperimentConfig, searchers: list[Searcher] | None = None,
                   progress=None) -> RunReport:
    """Localize every frame of every source position with every configured method."""
    config.validate()
    searchers = build_searchers(config) if searchers is None else searchers
    results = {s.spec.name: MethodResult(s.spec.name, s.spec.kind, s.predicted_ops) for s in searchers}
    max_lag = config.lag_range
    for i, src in enumerate(config.sources):
        frames = frame_signal(source_signals(config, i), config.frames)
        for k, frame in enumerate(frames):
            corr = correlate_frame(frame, config.array.pairs, max_lag, config.phat)
            for s in searchers:
                t0 = time.perf_counter()
                est = s.localize(corr)
                res = results[s.spec.name]
                res.wall_time += time.perf_counter() - t0
                res.estimates.append(est.position)
                res.truths.append(np.asarray(src.position, dtype=float))
                res.measured_ops.append(est.measured_additions)
                res.scores.append(est.score)
                res.frame_ids.append((i, k))
        if progress is not None:
            progress(i, len(frames))
    return RunReport(results, config.error_dims)
