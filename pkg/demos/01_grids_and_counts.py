# # Grids, lag sets and operation counts
#
# How many additions does one frame cost? The point search pays
# N_g (P - 1); the volumetric search pays one addition per distinct lag of
# each volume. This script builds both for the 8-microphone line array and
# prints the numbers.

import numpy as np

from vsrp import MicArray, SearchRegion, build_point_grid, build_volumetric_grid
from vsrp.localizers import msrp_lag_bounds
from vsrp.tables import (
    build_point_table,
    complexity_report,
    csrp_grid_ops,
    lag_sets_from_geometry,
    mean_cardinality,
)

fs, c = 48000.0, 340.0
array = MicArray.linear((1.2, 0.5, 0.725), (3.3, 0.5, 0.725), 8)
region = SearchRegion((0.5, 0.6, 0.725), (3.5, 4.0, 0.0))  # a plane at table height
print(array.num_pairs, "pairs")

# Point grids at four spacings. Each axis gets floor(E/g) + 1 points.

for g in (0.01, 0.10, 0.20, 0.50):
    grid = build_point_grid(region, g)
    print(f"g = {g:4.2f} m  {grid.counts[:2]}  ops {csrp_grid_ops(region, g, array.num_pairs):>10,}")

# Volumes of 10 cm holding 4 x 4 points. Nearby points often share a lag,
# so the average number of distinct lags per volume and pair is far below 16.

vgrid = build_volumetric_grid(region, 0.10, 4)
sets = lag_sets_from_geometry(vgrid, array, fs, c)
print(vgrid.num_volumes, "volumes, mean distinct lags", round(mean_cardinality(sets), 2))

card = sets.cardinalities.mean(axis=0).reshape(vgrid.counts[:2])
print("near the array:", card[:, 0].mean().round(2), " far side:", card[:, -1].mean().round(2))

report = complexity_report(region, array, fs, c, spacing=0.01, edge=0.10, alpha=4, refine_spacing=0.01)
print(report.to_json(indent=1))

# The gradient-bounded window of a 1 m cube versus the cube's true lag range.
# Two microphones 4 m apart, cube centred 2 m in front of them.

pair = ((-2.0, 0.0, 0.0), (2.0, 0.0, 0.0))
print("window", msrp_lag_bounds((0, 2, 0), pair, fs, c, 1.0))
cube = build_point_grid(SearchRegion((-0.5, 1.5, -0.5), (1, 1, 1)), 0.05)
lags = build_point_table(cube, MicArray(np.array(pair)), fs, c).lags[0]
print("true range", lags.min(), lags.max())
