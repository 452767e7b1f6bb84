"""Microphone arrays, search regions, point grids and volumetric grids.

Coordinates are meters in a right-handed frame with z pointing up. Grids are
stored as flat arrays in C order over (ix, iy, iz), z varying fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

# Guards floor(extent / spacing) against representation error, e.g. 6.0 / 0.03.
_FLOOR_EPS = 1e-9


def round_half_away(values):
    """Round to the nearest integer, ties away from zero."""
    values = np.asarray(values, dtype=float)
    return (np.sign(values) * np.floor(np.abs(values) + 0.5)).astype(np.int64)


def robust_floor(ratio: float) -> int:
    return int(np.floor(ratio + _FLOOR_EPS))


def distances(points, position):
    """Euclidean distance from each row of ``points`` to ``position``."""
    diff = np.asarray(points, dtype=float) - np.asarray(position, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def lag_from_distances(d2, d1, fs: float, c: float):
    """Integer TDoA in samples from the distances to the second and first mic."""
    return round_half_away((np.asarray(d2) - np.asarray(d1)) * (fs / c))


@dataclass(frozen=True)
class MicArray:
    """Microphone positions plus the enumeration of all distinct pairs.

    Pair ``p`` is ``(pairs[p][0], pairs[p][1])``; the first index is the
    reference microphone ``m_{p,1}``.
    """

    positions: np.ndarray
    pairs: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must have shape (M, 3), got {pos.shape}")
        if pos.shape[0] < 2:
            raise ValueError("an array needs at least two microphones")
        if not np.all(np.isfinite(pos)):
            raise ValueError("microphone positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if not self.pairs:
            object.__setattr__(self, "pairs", tuple(combinations(range(pos.shape[0]), 2)))
        else:
            pairs = tuple((int(a), int(b)) for a, b in self.pairs)
            unordered = {frozenset(p) for p in pairs}
            if len(unordered) != len(pairs) or any(a == b for a, b in pairs):
                raise ValueError("each unordered microphone pair must appear exactly once")
            object.__setattr__(self, "pairs", pairs)

    @classmethod
    def linear(cls, start, stop, count: int) -> "MicArray":
        """Uniform linear array with ``count`` microphones from ``start`` to ``stop``."""
        t = np.linspace(0.0, 1.0, count)[:, None]
        start = np.asarray(start, dtype=float)
        stop = np.asarray(stop, dtype=float)
        return cls(start + t * (stop - start))

    @property
    def num_mics(self) -> int:
        return self.positions.shape[0]

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    def pair_positions(self, p: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.pairs[p]
        return self.positions[a], self.positions[b]

    def baselines(self) -> np.ndarray:
        """Distance between the two microphones of every pair."""
        idx = np.array(self.pairs)
        return distances(self.positions[idx[:, 1]], self.positions[idx[:, 0]])

    def max_lags(self, fs: float, c: float) -> np.ndarray:
        """Largest attainable |TDoA| per pair, in samples."""
        return round_half_away(self.baselines() * (fs / c))


@dataclass(frozen=True)
class SearchRegion:
    """Axis-aligned box ``origin + [0, L] x [0, W] x [0, H]``.

    A zero extent collapses that axis, giving a planar (or linear) search.
    """

    origin: tuple[float, float, float]
    extents: tuple[float, float, float]

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        extents = tuple(float(v) for v in self.extents)
        if len(origin) != 3 or len(extents) != 3:
            raise ValueError("origin and extents must be 3-D")
        if any(e < 0 for e in extents) or not all(np.isfinite(origin + extents)):
            raise ValueError(f"extents must be finite and non-negative, got {extents}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extents", extents)

    @property
    def degenerate(self) -> tuple[bool, bool, bool]:
        return tuple(e == 0.0 for e in self.extents)

    @property
    def ndim(self) -> int:
        """Number of non-degenerate axes."""
        return sum(not d for d in self.degenerate)


def _lattice(origin, spacing, counts) -> np.ndarray:
    axes = [origin[k] + np.arange(counts[k]) * spacing[k] for k in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class PointGrid:
    """Uniform lattice of candidate source positions anchored at the region origin."""

    region: SearchRegion
    spacing: float
    counts: tuple[int, int, int]
    points: np.ndarray

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    def index(self, ix: int, iy: int, iz: int) -> int:
        nx, ny, nz = self.counts
        return (ix * ny + iy) * nz + iz


def point_counts(extents, spacing: float) -> tuple[int, int, int]:
    """Points per axis: ``floor(E / spacing) + 1`` (one point on a zero extent)."""
    return tuple(robust_floor(e / spacing) + 1 for e in extents)


def build_point_grid(region: SearchRegion, spacing: float) -> PointGrid:
    if not spacing > 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    counts = point_counts(region.extents, spacing)
    points = _lattice(region.origin, (spacing,) * 3, counts)
    points.setflags(write=False)
    return PointGrid(region, float(spacing), counts, points)


def refine_grid(lower, edge: float, spacing: float, degenerate, closed: bool = True) -> PointGrid:
    """Dense grid spanning one volume box, used by the refinement stage.

    ``closed`` includes the upper faces, giving ``floor(edge/spacing) + 1``
    points per non-degenerate axis; otherwise ``floor(edge/spacing)``.
    """
    if not 0 < spacing <= edge * (1 + _FLOOR_EPS):
        raise ValueError("refine spacing must be in (0, volume edge]")
    n = robust_floor(edge / spacing) + (1 if closed else 0)
    counts = tuple(1 if d else n for d in degenerate)
    extents = tuple(0.0 if d else edge for d in degenerate)
    region = SearchRegion(tuple(lower), extents)
    points = _lattice(region.origin, (spacing,) * 3, counts)
    points.setflags(write=False)
    return PointGrid(region, float(spacing), counts, points)


@dataclass(frozen=True)
class Volume:
    lower: np.ndarray
    upper: np.ndarray
    members: np.ndarray


@dataclass(frozen=True)
class VolumetricGrid:
    """Disjoint half-open boxes tiling a region, each owning grid points.

    ``lower``/``upper`` hold the box corners; a point ``x`` belongs to a box
    when ``lower <= x < upper`` on every non-degenerate axis. ``members[v]``
    indexes ``points.points``.
    """

    region: SearchRegion
    edge: float
    alpha: int
    points: PointGrid
    counts: tuple[int, int, int]
    lower: np.ndarray
    upper: np.ndarray
    members: np.ndarray

    @property
    def num_volumes(self) -> int:
        return self.lower.shape[0]

    @property
    def centers(self) -> np.ndarray:
        deg = np.array(self.region.degenerate)
        return np.where(deg, self.lower, 0.5 * (self.lower + self.upper))

    def __len__(self) -> int:
        return self.num_volumes

    def __getitem__(self, v: int) -> Volume:
        return Volume(self.lower[v], self.upper[v], self.members[v])

    def contains(self, v: int, x, closed: bool = False) -> bool:
        """Membership test for volume ``v``; ``closed`` also admits the upper faces."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.lower[v], self.upper[v]
        deg = np.array(self.region.degenerate)
        upper_ok = x <= hi if closed else x < hi
        inside = np.where(deg, np.isclose(x, lo), (x >= lo) & upper_ok)
        return bool(np.all(inside))

    @classmethod
    def one_point_per_volume(cls, grid: PointGrid) -> "VolumetricGrid":
        """Each grid point becomes its own volume centred on the point.

        Used to check that the volumetric search reduces to the point search.
        """
        deg = np.array(grid.region.degenerate)
        half = np.where(deg, 0.0, 0.5 * grid.spacing)
        lower = grid.points - half
        upper = grid.points + half
        members = np.arange(grid.num_points)[:, None]
        for arr in (lower, upper, members):
            arr.setflags(write=False)
        return cls(grid.region, grid.spacing, 1, grid, grid.counts, lower, upper, members)


def build_volumetric_grid(region: SearchRegion, edge: float, alpha: int) -> VolumetricGrid:
    """Tile ``region`` with boxes of side ``edge``, each holding ``alpha`` points per axis.

    The internal point grid has spacing ``edge / alpha``. A trailing strip
    thinner than ``edge`` is not covered by any volume.
    """
    if int(alpha) != alpha or alpha < 2:
        raise ValueError(f"alpha must be an integer >= 2, got {alpha}")
    if not edge > 0:
        raise ValueError(f"volume edge must be positive, got {edge}")
    alpha = int(alpha)
    spacing = edge / alpha
    grid = build_point_grid(region, spacing)
    deg = region.degenerate
    vcounts = tuple(1 if d else robust_floor(e / edge) for d, e in zip(deg, region.extents))
    if 0 in vcounts:
        raise ValueError("volume edge exceeds a non-degenerate region extent")

    per_axis = []
    for k in range(3):
        if deg[k]:
            per_axis.append(np.zeros((1, 1), dtype=np.int64))
        else:
            j = np.arange(vcounts[k])[:, None]
            per_axis.append(j * alpha + np.arange(alpha)[None, :])
    nx, ny, nz = grid.counts
    ix = per_axis[0][:, None, None, :, None, None]
    iy = per_axis[1][None, :, None, None, :, None]
    iz = per_axis[2][None, None, :, None, None, :]
    members = ((ix * ny + iy) * nz + iz).reshape(int(np.prod(vcounts)), -1)

    # Corners come from the point lattice itself so that membership is exact.
    first = members[:, 0]
    lower = grid.points[first].copy()
    corner_idx = np.stack(np.unravel_index(first, grid.counts), axis=1)
    upper = np.asarray(region.origin) + (corner_idx + np.where(deg, 0, alpha)) * spacing
    upper = np.where(deg, lower, upper)
    for arr in (lower, upper, members):
        arr.setflags(write=False)
    return VolumetricGrid(region, float(edge), alpha, grid, vcounts, lower, upper, members)


def tdoa_samples(x, pair, fs: float, c: float) -> int:
    """Quantized TDoA of point ``x`` for ``pair = (m1, m2)`` positions, in samples.

    Positive when ``x`` is farther from the second microphone.
    """
    m1, m2 = (np.asarray(m, dtype=float) for m in pair)
    x = np.asarray(x, dtype=float)[None, :]
    return int(lag_from_distances(distances(x, m2), distances(x, m1), fs, c)[0])
