"""TDoA look-up tables, per-volume lag sets and addition-count predictions."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .geometry import (
    MicArray,
    PointGrid,
    SearchRegion,
    VolumetricGrid,
    build_volumetric_grid,
    distances,
    lag_from_distances,
    point_counts,
    robust_floor,
)


def _lag_dtype(max_abs: int):
    return np.int16 if max_abs < np.iinfo(np.int16).max else np.int32


def iter_lag_rows(points: np.ndarray, array: MicArray, fs: float, c: float):
    """Yield ``(p, lags)`` for every pair, lags aligned with ``points`` rows.

    Distances to each microphone are computed once and shared by all pairs.
    """
    dist = [distances(points, m) for m in array.positions]
    dtype = _lag_dtype(int(array.max_lags(fs, c).max()) + 1)
    for p, (a, b) in enumerate(array.pairs):
        yield p, lag_from_distances(dist[b], dist[a], fs, c).astype(dtype)


@dataclass(frozen=True)
class PointLagTable:
    """Integer TDoA for every (pair, grid point): ``lags[p, i]``."""

    lags: np.ndarray

    @property
    def num_pairs(self) -> int:
        return self.lags.shape[0]

    @property
    def num_points(self) -> int:
        return self.lags.shape[1]

    @property
    def max_abs_lag(self) -> int:
        return int(np.abs(self.lags).max()) if self.lags.size else 0

    @property
    def nbytes(self) -> int:
        return self.lags.nbytes


def build_point_table(grid: PointGrid, array: MicArray, fs: float, c: float) -> PointLagTable:
    points = grid.points if isinstance(grid, PointGrid) else np.asarray(grid, dtype=float)
    lags = np.empty((array.num_pairs, points.shape[0]),
                    dtype=_lag_dtype(int(array.max_lags(fs, c).max()) + 1))
    for p, row in iter_lag_rows(points, array, fs, c):
        lags[p] = row
    lags.setflags(write=False)
    return PointLagTable(lags)


@dataclass(frozen=True)
class LagSets:
    """Per-pair lists of lags attached to each search element.

    Storage is pair-major: ``lags[p]`` concatenates the sorted lag lists of
    all elements for pair ``p`` and ``starts[p][e]`` is where element ``e``
    begins. Every list is non-empty. ``lag_min``/``lag_max`` have shape
    ``(P, n_elements)``.

    Used for the deduplicated per-volume sets and for the contiguous lag
    windows of the cube-bounded point search.
    """

    lags: tuple[np.ndarray, ...]
    starts: tuple[np.ndarray, ...]
    lag_min: np.ndarray
    lag_max: np.ndarray

    @property
    def num_pairs(self) -> int:
        return len(self.lags)

    @property
    def num_elements(self) -> int:
        return self.lag_min.shape[1]

    @property
    def cardinalities(self) -> np.ndarray:
        """``|Z_{p,e}|`` with shape ``(P, n_elements)``."""
        out = np.empty(self.lag_min.shape, dtype=np.int64)
        for p, (lags, starts) in enumerate(zip(self.lags, self.starts)):
            out[p] = np.diff(np.append(starts, lags.size))
        return out

    @property
    def max_abs_lag(self) -> int:
        return int(max(np.abs(self.lag_min).max(), np.abs(self.lag_max).max()))

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in self.lags + self.starts) + self.lag_min.nbytes * 2

    def get(self, p: int, e: int) -> np.ndarray:
        """Sorted lag list of element ``e`` for pair ``p``."""
        starts = self.starts[p]
        end = starts[e + 1] if e + 1 < starts.size else self.lags[p].size
        return self.lags[p][starts[e]:end]


# Volume sets and M-SRP windows share one container.
VolumeLagSets = LagSets


def _dedup_rows(rows: np.ndarray):
    """Sorted unique values of each row, flattened, plus per-row starts."""
    rows = np.sort(rows, axis=1)
    keep = np.ones(rows.shape, dtype=bool)
    keep[:, 1:] = rows[:, 1:] != rows[:, :-1]
    counts = keep.sum(axis=1)
    starts = np.zeros(rows.shape[0], dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    return rows[keep], starts, rows[:, 0], rows[:, -1]


def _assemble(per_pair) -> LagSets:
    lags, starts, lo, hi = zip(*per_pair)
    for arr in lags + starts:
        arr.setflags(write=False)
    lag_min = np.stack(lo).astype(np.int64)
    lag_max = np.stack(hi).astype(np.int64)
    return LagSets(tuple(lags), tuple(starts), lag_min, lag_max)


def build_volume_lag_sets(vgrid: VolumetricGrid, table: PointLagTable) -> LagSets:
    """Deduplicated sorted lags of each volume's member points, per pair.

    ``table`` must be built over ``vgrid.points``.
    """
    if table.num_points != vgrid.points.num_points:
        raise ValueError("table was not built over the volumetric grid's points")
    return _assemble(_dedup_rows(row[vgrid.members]) for row in table.lags)


def lag_sets_from_geometry(vgrid: VolumetricGrid, array: MicArray, fs: float, c: float) -> LagSets:
    """Same result as ``build_volume_lag_sets`` without holding the full point table.

    Only the member points are evaluated, one pair at a time.
    """
    used = np.unique(vgrid.members)
    remap = np.full(vgrid.points.num_points, -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    local = remap[vgrid.members]
    pts = vgrid.points.points[used]
    return _assemble(_dedup_rows(row[local]) for _, row in iter_lag_rows(pts, array, fs, c))


def mean_cardinality(sets: LagSets) -> float:
    """Average ``|Z_{p,V}|`` over all volumes and pairs."""
    if sets.num_elements == 0:
        raise ValueError("empty lag sets")
    total = sum(lags.size for lags in sets.lags)
    return total / (sets.num_elements * sets.num_pairs)


def predict_ops_csrp(num_points: int, num_pairs: int) -> int:
    """Additions for one point-grid search: ``N_g (P - 1)``."""
    return int(num_points) * (int(num_pairs) - 1)


def csrp_grid_ops(region: SearchRegion, spacing: float, num_pairs: int) -> int:
    """Point-grid search cost for ``region`` without building the grid."""
    return predict_ops_csrp(int(np.prod(point_counts(region.extents, spacing))), num_pairs)


def predict_ops_vsrp(sets: LagSets) -> int:
    """Additions for one volumetric search: ``sum_V (sum_p |Z_{p,V}| - 1)``."""
    total = sum(lags.size for lags in sets.lags)
    return int(total - sets.num_elements)


def refine_point_count(edge: float, spacing: float, ndim: int, closed: bool = True) -> int:
    n = robust_floor(edge / spacing) + (1 if closed else 0)
    return n ** ndim


def predict_ops_rvsrp(sets: LagSets, edge: float, refine_spacing: float, num_pairs: int,
                      ndim: int = 3, closed: bool = True) -> int:
    """Volumetric search plus a point search over one volume at ``refine_spacing``."""
    refine = refine_point_count(edge, refine_spacing, ndim, closed)
    return predict_ops_vsrp(sets) + predict_ops_csrp(refine, num_pairs)


@dataclass
class ComplexityReport:
    num_pairs: int
    num_points: int | None = None
    num_volumes: int | None = None
    alpha: int | None = None
    mean_cardinality: float | None = None
    ops_csrp: int | None = None
    ops_vsrp: int | None = None
    ops_rvsrp: int | None = None
    ops_msrp: int | None = None
    table_bytes: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def complexity_report(
    region: SearchRegion,
    array: MicArray,
    fs: float,
    c: float,
    spacing: float | None = None,
    edge: float | None = None,
    alpha: int | None = None,
    refine_spacing: float | None = None,
    refine_closed: bool = True,
) -> ComplexityReport:
    """Predicted per-frame additions for the configured searches.

    The point-grid count needs no tables; the volumetric counts require the
    lag sets, which are built here.
    """
    P = array.num_pairs
    report = ComplexityReport(num_pairs=P)
    if spacing is not None:
        report.num_points = int(np.prod(point_counts(region.extents, spacing)))
        report.ops_csrp = predict_ops_csrp(report.num_points, P)
    if edge is not None and alpha is not None:
        vgrid = build_volumetric_grid(region, edge, alpha)
        sets = lag_sets_from_geometry(vgrid, array, fs, c)
        report.num_volumes = vgrid.num_volumes
        report.alpha = int(alpha)
        report.mean_cardinality = mean_cardinality(sets)
        report.ops_vsrp = predict_ops_vsrp(sets)
        report.table_bytes += sets.nbytes
        if refine_spacing is not None:
            report.ops_rvsrp = predict_ops_rvsrp(sets, edge, refine_spacing, P,
                                                 region.ndim, refine_closed)
    return report


def cache_key(**params) -> str:
    """Stable hash of table-defining parameters (arrays, region, spacings, fs, c)."""

    def norm(v):
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, MicArray):
            return {"positions": v.positions.tolist(), "pairs": list(v.pairs)}
        if isinstance(v, SearchRegion):
            return {"origin": v.origin, "extents": v.extents}
        return v

    blob = json.dumps({k: norm(v) for k, v in sorted(params.items())}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def save_lag_sets(path, sets: LagSets) -> None:
    arrays = {"lag_min": sets.lag_min, "lag_max": sets.lag_max}
    for p, (lags, starts) in enumerate(zip(sets.lags, sets.starts)):
        arrays[f"lags_{p}"] = lags
        arrays[f"starts_{p}"] = starts
    np.savez(path, num_pairs=len(sets.lags), **arrays)


def load_lag_sets(path) -> LagSets:
    with np.load(path) as data:
        P = int(data["num_pairs"])
        lags = tuple(data[f"lags_{p}"] for p in range(P))
        starts = tuple(data[f"starts_{p}"] for p in range(P))
        return LagSets(lags, starts, data["lag_min"], data["lag_max"])


def cached_lag_sets(cache_dir, vgrid: VolumetricGrid, array: MicArray, fs: float, c: float) -> LagSets:
    """Load the volume lag sets from ``cache_dir`` or build and store them."""
    key = cache_key(array=array, region=vgrid.region, edge=vgrid.edge, alpha=vgrid.alpha,
                    fs=fs, c=c)
    path = Path(cache_dir) / f"lagsets-{key}.npz"
    if path.exists():
        return load_lag_sets(path)
    sets = lag_sets_from_geometry(vgrid, array, fs, c)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_lag_sets(path, sets)
    return sets
