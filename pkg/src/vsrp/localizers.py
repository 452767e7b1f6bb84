"""Grid searches of the steered-response power family.

Every search counts the additions it performs while evaluating its
objective. Table construction and correlation are not counted. Ties go to
the lowest element index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationSet, LagRangeError
from .geometry import (
    MicArray,
    PointGrid,
    VolumetricGrid,
    distances,
    refine_grid,
    round_half_away,
)
from .tables import LagSets, PointLagTable, build_point_table, _assemble


@dataclass(frozen=True)
class Estimate:
    position: np.ndarray
    score: float
    method: str
    measured_additions: int
    element_index: int
    frame_index: int | None = None
    volume_index: int | None = None

    def with_frame(self, frame_index: int) -> "Estimate":
        return Estimate(self.position, self.score, self.method, self.measured_additions,
                        self.element_index, frame_index, self.volume_index)


@dataclass(frozen=True)
class EnergyMap:
    centers: np.ndarray
    scores: np.ndarray
    method: str

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.scores))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "z", "score"])
            for (x, y, z), s in zip(self.centers, self.scores):
                writer.writerow([repr(float(x)), repr(float(y)), repr(float(z)), repr(float(s))])


def _check_range(corr: CorrelationSet, max_abs_lag: int, num_pairs: int) -> None:
    if corr.num_pairs != num_pairs:
        raise ValueError(f"correlation has {corr.num_pairs} pairs, table has {num_pairs}")
    if max_abs_lag > corr.max_lag:
        raise LagRangeError(
            f"table needs lags up to +-{max_abs_lag}, correlation covers +-{corr.max_lag}")


def point_scores(corr: CorrelationSet, table: PointLagTable) -> tuple[np.ndarray, int]:
    """Point-search objective at every grid point and the additions spent."""
    _check_range(corr, table.max_abs_lag, table.num_pairs)
    phi, off = corr.phi, corr.max_lag
    scores = phi[0][table.lags[0].astype(np.intp) + off]
    additions = 0
    for p in range(1, table.num_pairs):
        scores += phi[p][table.lags[p].astype(np.intp) + off]
        additions += scores.size
    return scores, additions


def set_scores(corr: CorrelationSet, sets: LagSets) -> tuple[np.ndarray, int]:
    """Sum of ``phi_p`` over each element's lag list, over all pairs, plus additions."""
    _check_range(corr, sets.max_abs_lag, sets.num_pairs)
    phi, off = corr.phi, corr.max_lag
    scores = None
    additions = 0
    for p, (lags, starts) in enumerate(zip(sets.lags, sets.starts)):
        partial = np.add.reduceat(phi[p][lags.astype(np.intp) + off], starts)
        additions += lags.size - starts.size
        if scores is None:
            scores = partial
        else:
            scores += partial
            additions += scores.size
    return scores, additions


def csrp_localize(corr: CorrelationSet, table: PointLagTable, grid: PointGrid) -> Estimate:
    scores, additions = point_scores(corr, table)
    best = int(np.argmax(scores))
    return Estimate(grid.points[best].copy(), float(scores[best]), "csrp", additions, best)


def vsrp_localize(corr: CorrelationSet, sets: LagSets, vgrid: VolumetricGrid) -> Estimate:
    """Pick the volume with the largest accumulated correlation; report its center."""
    scores, additions = set_scores(corr, sets)
    best = int(np.argmax(scores))
    return Estimate(vgrid.centers[best].copy(), float(scores[best]), "vsrp", additions, best,
                    volume_index=best)


def rvsrp_localize(corr: CorrelationSet, sets: LagSets, vgrid: VolumetricGrid, array: MicArray,
                   fs: float, c: float, refine_spacing: float, closed: bool = True) -> Estimate:
    """Volumetric search followed by a dense point search inside the winning volume.

    The refinement grid's TDoAs are computed on the fly.
    """
    coarse = vsrp_localize(corr, sets, vgrid)
    v = coarse.volume_index
    grid = refine_grid(vgrid.lower[v], vgrid.edge, refine_spacing, vgrid.region.degenerate, closed)
    # keep the closed upper face exactly on the box despite rounding
    points = np.minimum(grid.points, vgrid.upper[v])
    grid = PointGrid(grid.region, grid.spacing, grid.counts, points)
    table = build_point_table(grid, array, fs, c)
    fine = csrp_localize(corr, table, grid)
    return Estimate(fine.position, fine.score, "rvsrp",
                    coarse.measured_additions + fine.measured_additions,
                    fine.element_index, volume_index=v)


def _gradient_half_width(grad: np.ndarray, r: float) -> np.ndarray:
    """Distance ``d`` along the gradient from a cube center to the cube surface.

    Follows the angular form: elevation ``theta`` measured from +z and
    azimuth ``phi`` of the gradient direction.
    """
    gx, gy, gz = grad[..., 0], grad[..., 1], grad[..., 2]
    norm = np.sqrt(gx * gx + gy * gy + gz * gz)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.arccos(np.clip(gz / norm, -1.0, 1.0))
        azim = np.arctan2(gy, gx)
        terms = np.stack([
            1.0 / np.abs(np.sin(theta) * np.cos(azim)),
            1.0 / np.abs(np.sin(theta) * np.sin(azim)),
            1.0 / np.abs(np.cos(theta)),
        ])
    return 0.5 * r * np.min(terms, axis=0)


def _msrp_bounds_arrays(points: np.ndarray, m1, m2, fs: float, c: float, r: float):
    d1 = distances(points, m1)
    d2 = distances(points, m2)
    tau = (d2 - d1) / c
    with np.errstate(divide="ignore", invalid="ignore"):
        u1 = (points - m1) / d1[:, None]
        u2 = (points - m2) / d2[:, None]
    grad = (u2 - u1) / c
    gnorm = np.sqrt(np.sum(grad * grad, axis=-1))
    with np.errstate(invalid="ignore"):
        width = gnorm * _gradient_half_width(grad, r)
    # zero gradient (or a point on a microphone): window collapses to the TDoA
    width = np.where((gnorm > 0) & np.isfinite(width), width, 0.0)
    lo = round_half_away((tau - width) * fs)
    hi = round_half_away((tau + width) * fs)
    return lo, hi


def msrp_lag_bounds(x, pair, fs: float, c: float, r: float) -> tuple[int, int]:
    """Gradient-estimated lag window of a cube of edge ``r`` centred on ``x``.

    At a point where the TDoA gradient vanishes the window collapses to the
    TDoA itself.
    """
    m1, m2 = (np.asarray(m, dtype=float) for m in pair)
    lo, hi = _msrp_bounds_arrays(np.asarray(x, dtype=float)[None, :], m1, m2, fs, c, r)
    return int(lo[0]), int(hi[0])


@dataclass(frozen=True)
class MsrpWindows:
    """Contiguous lag windows per (pair, point) and how many were clipped."""

    sets: LagSets
    clipped: int


def build_msrp_windows(grid: PointGrid, array: MicArray, fs: float, c: float, r: float,
                       clip: bool = True) -> MsrpWindows:
    """Expand each point's lag window into an explicit lag list.

    With ``clip`` the windows are limited to the physically attainable lags
    ``+-round(baseline * fs / c)`` of each pair.
    """
    limits = array.max_lags(fs, c)
    per_pair = []
    clipped = 0
    for p in range(array.num_pairs):
        m1, m2 = array.pair_positions(p)
        lo, hi = _msrp_bounds_arrays(grid.points, m1, m2, fs, c, r)
        if clip:
            lim = int(limits[p])
            clipped += int(np.count_nonzero((lo < -lim) | (hi > lim)))
            lo = np.clip(lo, -lim, lim)
            hi = np.clip(hi, -lim, lim)
        lengths = hi - lo + 1
        starts = np.zeros(lengths.size, dtype=np.int64)
        np.cumsum(lengths[:-1], out=starts[1:])
        lags = np.repeat(lo - starts, lengths) + np.arange(lengths.sum())
        per_pair.append((lags.astype(np.int32), starts, lo, hi))
    return MsrpWindows(_assemble(per_pair), clipped)


def msrp_localize(corr: CorrelationSet, windows: MsrpWindows, grid: PointGrid) -> Estimate:
    """Point search where each pair contributes the sum over a lag window."""
    scores, additions = set_scores(corr, windows.sets)
    best = int(np.argmax(scores))
    return Estimate(grid.points[best].copy(), float(scores[best]), "msrp", additions, best)


def energy_map(corr: CorrelationSet, method: str, tables, grid) -> EnergyMap:
    """Objective value at every element of the chosen search.

    ``method`` is ``"csrp"`` (tables: PointLagTable, grid: PointGrid),
    ``"vsrp"`` (LagSets, VolumetricGrid) or ``"msrp"`` (MsrpWindows, PointGrid).
    """
    if method == "csrp":
        scores, _ = point_scores(corr, tables)
        centers = grid.points
    elif method == "vsrp":
        scores, _ = set_scores(corr, tables)
        centers = grid.centers
    elif method == "msrp":
        scores, _ = set_scores(corr, tables.sets)
        centers = grid.points
    else:
        raise ValueError(f"no energy map for method {method!r}")
    return EnergyMap(np.asarray(centers), scores, method)
