# # One source, no reverberation
#
# Simulate a noise source in front of the line array, then run the four
# searches on every frame and dump an energy map of the last one.

import numpy as np

from vsrp import (
    FramePlan,
    MicArray,
    RoomSpec,
    SearchRegion,
    build_msrp_windows,
    build_point_grid,
    build_point_table,
    build_volumetric_grid,
    correlate_frame,
    csrp_localize,
    default_max_lag,
    energy_map,
    frame_signal,
    lag_sets_from_geometry,
    msrp_localize,
    render_mic_signals,
    rvsrp_localize,
    vsrp_localize,
)
from vsrp.room import noise_burst

fs, c = 48000.0, 340.0
room = RoomSpec((5.2, 7.5, 2.6), fs, c, beta=0.0)
array = MicArray.linear((1.2, 0.5, 0.725), (3.3, 0.5, 0.725), 8)
region = SearchRegion((0.5, 0.6, 0.725), (3.5, 4.0, 0.0))
source = np.array([2.25, 2.6, 0.725])

signal = noise_burst(1.0, fs, seed=0)
mics = render_mic_signals(room, source, signal, array.positions)[:, : signal.size]
frames = frame_signal(mics, FramePlan(4096, 2048))
print(len(frames), "frames")

# Tables are built once.

grid1 = build_point_grid(region, 0.01)
table1 = build_point_table(grid1, array, fs, c)
grid10 = build_point_grid(region, 0.10)
windows = build_msrp_windows(grid10, array, fs, c, r=0.10)
vgrid = build_volumetric_grid(region, 0.10, 4)
sets = lag_sets_from_geometry(vgrid, array, fs, c)
max_lag = default_max_lag(array, fs, c)

for k, frame in enumerate(frames):
    corr = correlate_frame(frame, array.pairs, max_lag, phat=True)
    row = []
    for est in (csrp_localize(corr, table1, grid1),
                vsrp_localize(corr, sets, vgrid),
                rvsrp_localize(corr, sets, vgrid, array, fs, c, 0.01),
                msrp_localize(corr, windows, grid10)):
        err = np.linalg.norm((est.position - source)[:2])
        row.append(f"{est.method:>5} {100 * err:5.1f} cm {est.measured_additions:>9,}")
    print(k, " | ".join(row))

emap = energy_map(corr, "vsrp", sets, vgrid)
emap.to_csv("energy_map_vsrp.csv")
print("map peak at", emap.centers[emap.argmax], "-> energy_map_vsrp.csv")
