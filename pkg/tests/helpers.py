"""Random small setups and brute-force reference evaluations.

The references loop over points and pairs with the scalar ``tdoa_samples``
and never touch the precomputed tables or membership arrays.
"""

import numpy as np

from vsrp.correlation import CorrelationSet, default_max_lag
from vsrp.geometry import MicArray, SearchRegion
from vsrp.localizers import msrp_lag_bounds
from vsrp.geometry import tdoa_samples


def random_setup(rng, planar=None, min_mics=2):
    """Random array, region, volume edge and alpha small enough for brute force."""
    M = int(rng.integers(min_mics, 6))
    array = MicArray(rng.uniform(-1.0, 1.0, size=(M, 3)))
    edge = float(rng.choice([0.1, 0.2, 0.25]))
    alpha = int(rng.integers(2, 4))
    if planar is None:
        planar = bool(rng.integers(0, 2))
    nv = rng.integers(1, 4, size=3)
    extents = nv * edge
    if planar:
        extents[2] = 0.0
    # sometimes leave a trailing partial strip that no volume covers
    extents = extents + np.where(extents > 0, rng.choice([0.0, 0.3 * edge], size=3), 0.0)
    origin = rng.uniform(-0.5, 0.5, size=3) + np.array([0.0, 1.5, 0.0])
    region = SearchRegion(tuple(origin), tuple(extents))
    fs = float(rng.choice([8000.0, 16000.0, 48000.0]))
    return array, region, edge, alpha, fs, 343.0


def random_correlation(rng, array, fs, c, margin=1):
    max_lag = default_max_lag(array, fs, c, margin)
    phi = rng.standard_normal((array.num_pairs, 2 * max_lag + 1))
    return CorrelationSet(phi, max_lag, False, np.zeros(array.num_pairs, dtype=bool))


def naive_point_objective(corr, array, points, fs, c):
    """Scores and addition count of the point objective, one term at a time."""
    scores = []
    additions = 0
    for x in points:
        total = None
        for p in range(array.num_pairs):
            term = corr.phi[p, tdoa_samples(x, array.pair_positions(p), fs, c) + corr.max_lag]
            if total is None:
                total = term
            else:
                total = total + term
                additions += 1
        scores.append(total)
    return np.array(scores), additions


def naive_volume_members(vgrid):
    """Member points of each volume found by testing coordinates against the boxes."""
    pts = vgrid.points.points
    deg = np.array(vgrid.region.degenerate)
    out = []
    for lo, hi in zip(vgrid.lower, vgrid.upper):
        inside = np.all(np.where(deg, pts == lo, (pts >= lo) & (pts < hi)), axis=1)
        out.append(np.nonzero(inside)[0])
    return out


def naive_lag_set(array, points, p, fs, c):
    return sorted({tdoa_samples(x, array.pair_positions(p), fs, c) for x in points})


def naive_volume_objective(corr, vgrid, array, fs, c):
    scores = []
    additions = 0
    pts = vgrid.points.points
    for members in naive_volume_members(vgrid):
        terms = []
        for p in range(array.num_pairs):
            for lag in naive_lag_set(array, pts[members], p, fs, c):
                terms.append(corr.phi[p, lag + corr.max_lag])
        additions += len(terms) - 1
        scores.append(sum(terms))
    return np.array(scores), additions


def naive_msrp_objective(corr, array, points, fs, c, r):
    limits = array.max_lags(fs, c)
    scores = []
    additions = 0
    for x in points:
        terms = []
        for p in range(array.num_pairs):
            lo, hi = msrp_lag_bounds(x, array.pair_positions(p), fs, c, r)
            lo, hi = max(lo, -limits[p]), min(hi, limits[p])
            terms.extend(corr.phi[p, lag + corr.max_lag] for lag in range(lo, hi + 1))
        additions += len(terms) - 1
        scores.append(sum(terms))
    return np.array(scores), additions
