"""Acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output) before asserting. Run alone with ``pytest tests/test_acceptance.py -v``
or ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from vsrp.correlation import FramePlan, correlate_frame, cross_correlation_time, default_max_lag, frame_signal, gcc
from vsrp.geometry import (
    MicArray,
    SearchRegion,
    VolumetricGrid,
    build_point_grid,
    build_volumetric_grid,
    tdoa_samples,
)
from vsrp.localizers import csrp_localize, msrp_lag_bounds, rvsrp_localize, vsrp_localize
from vsrp.room import RoomSpec, noise_burst, render_mic_signals
from vsrp.tables import (
    build_point_table,
    csrp_grid_ops,
    lag_sets_from_geometry,
    mean_cardinality,
    predict_ops_csrp,
    predict_ops_vsrp,
)

from helpers import random_correlation, random_setup

FS, C = 48000.0, 340.0


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        return ok
    return report


def test_criterion_1_real_data_op_counts(verdict):
    t0 = time.perf_counter()
    region = SearchRegion((0, 0, 0), (3.5, 4.0, 0.0))
    got = [csrp_grid_ops(region, g, 28) for g in (0.01, 0.10, 0.20, 0.50)]
    expected = [3_800_277, 39_852, 10_206, 1_944]
    elapsed = time.perf_counter() - t0
    ok = got == expected and elapsed < 1.0
    verdict(1, "point-grid op counts, 3.5 x 4.0 m, P=28", ok, f"{got} in {elapsed:.3f} s")
    assert ok


def test_criterion_2_simulated_op_counts(verdict):
    t0 = time.perf_counter()
    region = SearchRegion((0, 0, 0), (4.0, 6.0, 3.0))
    got = [csrp_grid_ops(region, g, 120) / 1e7 for g in (0.01, 0.03)]
    elapsed = time.perf_counter() - t0
    rounded = [float(f"{v:.3g}") for v in got]
    ok = rounded == [863.0, 32.4] and elapsed < 1.0
    verdict(2, "point-grid op counts, 4 x 6 x 3 m, P=120", ok,
            f"{got[0]:.2f}e7, {got[1]:.2f}e7 in {elapsed:.3f} s")
    assert ok


def test_criterion_3_msrp_counter_example(verdict):
    t0 = time.perf_counter()
    pair = ((-2.0, 0.0, 0.0), (2.0, 0.0, 0.0))
    bounds = msrp_lag_bounds((0.0, 2.0, 0.0), pair, FS, C, 1.0)
    vertices = [(x, y, z) for x in (-0.5, 0.5) for y in (1.5, 2.5) for z in (-0.5, 0.5)]
    lags = [tdoa_samples(v, pair, FS, C) for v in vertices]
    extremes = (min(lags), max(lags))
    # a dense closed sampling of the same cube only widens the true range
    cube = build_point_grid(SearchRegion((-0.5, 1.5, -0.5), (1, 1, 1)), 0.1)
    dense_lags = build_point_table(cube, MicArray(np.array(pair)), FS, C).lags[0]
    dense = (int(dense_lags.min()), int(dense_lags.max()))
    elapsed = time.perf_counter() - t0
    ok = (bounds == (-100, 100) and extremes == (-110, 110)
          and dense[0] < bounds[0] and dense[1] > bounds[1] and elapsed < 1.0)
    verdict(3, "cube-bounded window under-covers the cube", ok,
            f"bounds {bounds}, vertex extremes {extremes}, dense member extremes {dense}, "
            f"{elapsed:.3f} s")
    assert ok


def test_criterion_4_counters_equal_predictions(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = []
    for k in range(100):
        array, region, edge, alpha, fs, c = random_setup(rng)
        vg = build_volumetric_grid(region, edge, alpha)
        sets = lag_sets_from_geometry(vg, array, fs, c)
        table = build_point_table(vg.points, array, fs, c)
        corr = random_correlation(rng, array, fs, c)
        P = array.num_pairs
        point = csrp_localize(corr, table, vg.points).measured_additions
        volume = vsrp_localize(corr, sets, vg).measured_additions
        average_form = vg.num_volumes * (P * mean_cardinality(sets) - 1)
        if (point != predict_ops_csrp(vg.points.num_points, P)
                or volume != predict_ops_vsrp(sets)
                or abs(volume - average_form) > 1e-6 * max(1, volume)):
            mismatches.append(k)
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 60
    verdict(4, "measured additions equal predictions, 100 random setups", ok,
            f"mismatches {mismatches}, {elapsed:.2f} s")
    assert ok


def test_criterion_5_singleton_volumes_reduce_to_points(verdict):
    rng = np.random.default_rng(55)
    array = MicArray(rng.uniform(-1, 1, (6, 3)))
    grid = build_point_grid(SearchRegion((-0.4, 1.0, 0.2), (0.5, 0.6, 0.2)), 0.05)
    vg = VolumetricGrid.one_point_per_volume(grid)
    table = build_point_table(grid, array, FS, C)
    sets = lag_sets_from_geometry(vg, array, FS, C)
    bad = 0
    for _ in range(20):
        corr = random_correlation(rng, array, FS, C)
        a, b = csrp_localize(corr, table, grid), vsrp_localize(corr, sets, vg)
        if a.element_index != b.element_index or a.score != b.score or not np.array_equal(a.position, b.position):
            bad += 1
    ok = bad == 0
    verdict(5, "one point per volume gives identical winners and scores", ok,
            f"{20 - bad}/20 frames identical over {grid.num_points} points")
    assert ok


def test_criterion_6_anechoic_end_to_end(verdict):
    t0 = time.perf_counter()
    room = RoomSpec((5.2, 7.5, 2.6), FS, C, beta=0.0)
    array = MicArray.linear((1.2, 0.5, 0.725), (3.3, 0.5, 0.725), 8)
    region = SearchRegion((0.5, 0.6, 0.725), (3.5, 4.0, 0.0))
    source = np.array([2.25, 2.6, 0.725])  # 1 cm lattice point at the region centre
    vg = build_volumetric_grid(region, 0.1, 4)
    sets = lag_sets_from_geometry(vg, array, FS, C)
    sig = noise_burst(4.5, FS, seed=0)
    mics = render_mic_signals(room, source, sig, array.positions)[:, : sig.size]
    max_lag = default_max_lag(array, FS, C)
    errors = []
    for frame in frame_signal(mics, FramePlan(4096, 2048)):
        corr = correlate_frame(frame, array.pairs, max_lag, phat=True)
        est = rvsrp_localize(corr, sets, vg, array, FS, C, 0.01)
        errors.append(np.linalg.norm((est.position - source)[:2]))
    errors = np.array(errors)
    elapsed = time.perf_counter() - t0
    ok = errors.size == 104 and errors.max() <= 0.02 and elapsed < 30
    verdict(6, "anechoic 8-mic line array, refined volumetric search", ok,
            f"{errors.size} frames, max error {100 * errors.max():.2f} cm, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_7_reverberant_desk_scale(verdict):
    t0 = time.perf_counter()
    room = RoomSpec((4.0, 6.0, 3.0), FS, C, t60=0.25)
    # 4 x 4 planar array on the y = 0.05 wall, 2 m wide and 1 m tall
    xs, zs = np.linspace(1.0, 3.0, 4), np.linspace(1.0, 2.0, 4)
    array = MicArray(np.array([[x, 0.05, z] for x in xs for z in zs]))
    region = SearchRegion((0, 0, 0), (4.0, 6.0, 3.0))
    vg = build_volumetric_grid(region, 0.1, 4)
    sets = lag_sets_from_geometry(vg, array, FS, C)
    grid = build_point_grid(region, 0.03)
    table = build_point_table(grid, array, FS, C)
    max_lag = default_max_lag(array, FS, C)
    rng = np.random.default_rng(0)
    err_rv, err_cs, ops_rv, ops_cs = [], [], set(), set()
    for s in range(5):
        source = rng.uniform([1.0, 0.8, 1.2], [3.0, 2.5, 2.0])
        sig = noise_burst(1.0, FS, seed=100 + s)
        mics = render_mic_signals(room, source, sig, array.positions)[:, : sig.size]
        for frame in frame_signal(mics, FramePlan(4096, 2048)):
            corr = correlate_frame(frame, array.pairs, max_lag, phat=True)
            rv = rvsrp_localize(corr, sets, vg, array, FS, C, 0.01)
            cs = csrp_localize(corr, table, grid)
            err_rv.append(np.linalg.norm(rv.position - source))
            err_cs.append(np.linalg.norm(cs.position - source))
            ops_rv.add(rv.measured_additions)
            ops_cs.add(cs.measured_additions)
    med_rv, med_cs = np.median(err_rv), np.median(err_cs)
    ratio = max(ops_rv) / min(ops_cs)
    elapsed = time.perf_counter() - t0
    ok = med_rv <= 0.15 and med_rv < med_cs and ratio < 0.2 and elapsed < 600
    verdict(7, "reverberant 16-mic planar array, T60 250 ms", ok,
            f"median refined-volumetric {100 * med_rv:.2f} cm vs point-grid 3 cm "
            f"{100 * med_cs:.2f} cm, ops ratio {ratio:.3f} ({max(ops_rv):,} vs {min(ops_cs):,}), "
            f"{len(err_rv)} frames, {elapsed:.0f} s")
    assert ok


def test_criterion_8_correlation(verdict):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10):
        s1, s2 = rng.standard_normal((2, 4096))
        ref = cross_correlation_time(s1, s2, 600)
        got = gcc(s1, s2, 600, phat=False)
        worst = max(worst, np.max(np.abs(got - ref)) / np.max(np.abs(ref)))
    src = rng.standard_normal(4096 + 7)
    phi = gcc(src[7:], src[:-7], 50, phat=True)
    peak = int(np.argmax(phi)) - 50
    ok = worst <= 1e-6 and peak == 7
    verdict(8, "frequency-domain correlation", ok,
            f"max relative deviation {worst:.2e}, delayed-copy peak at {peak:+d}")
    assert ok


def test_criterion_9_convention_coherence(verdict):
    rng = np.random.default_rng(9)
    room = RoomSpec((4.0, 6.0, 3.0), FS, C, beta=0.0)
    array = MicArray(np.column_stack([rng.uniform(0.5, 3.5, 6), rng.uniform(0.2, 1.0, 6),
                                      rng.uniform(0.5, 2.5, 6)]))
    max_lag = default_max_lag(array, FS, C)
    worst = 0
    for k in range(20):
        source = rng.uniform([0.3, 1.5, 0.3], [3.7, 5.7, 2.7])
        sig = noise_burst(0.2, FS, seed=k)
        mics = render_mic_signals(room, source, sig, array.positions)
        corr = correlate_frame(mics[:, 2048:6144], array.pairs, max_lag, phat=True)
        for p in range(array.num_pairs):
            peak = int(np.argmax(corr.phi[p])) - max_lag
            worst = max(worst, abs(peak - tdoa_samples(source, array.pair_positions(p), FS, C)))
    ok = worst <= 1
    verdict(9, "correlation peaks land on the quantized TDoA", ok,
            f"20 placements x {array.num_pairs} pairs, worst offset {worst} samples")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
