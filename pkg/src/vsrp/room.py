"""Shoebox room impulse responses by the image-source method, and signal rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

SABINE = 0.161


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox ``[0, Lx] x [0, Ly] x [0, Lz]`` with one reflection coefficient on all walls.

    Give either ``t60`` (converted with Sabine's formula) or ``beta``
    directly; ``beta`` wins when both are set. ``max_order`` bounds the
    total number of wall reflections per image; ``None`` picks the order at
    which ``beta ** order`` falls 60 dB below the direct path.
    """

    dimensions: tuple[float, float, float]
    fs: float = 48000.0
    c: float = 340.0
    t60: float | None = None
    beta: float | None = None
    max_order: int | None = None
    fractional: bool = False
    sinc_half_width: int = 32

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3 or any(not d > 0 for d in dims):
            raise ValueError(f"room dimensions must be three positive lengths, got {dims}")
        if not self.fs > 0 or not self.c > 0:
            raise ValueError("fs and c must be positive")
        if self.beta is not None and not 0 <= self.beta < 1:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        object.__setattr__(self, "dimensions", dims)

    @property
    def volume(self) -> float:
        lx, ly, lz = self.dimensions
        return lx * ly * lz

    @property
    def surface(self) -> float:
        lx, ly, lz = self.dimensions
        return 2 * (lx * ly + lx * lz + ly * lz)

    @property
    def reflection(self) -> float:
        if self.beta is not None:
            return float(self.beta)
        if self.t60 is None:
            return 0.0
        return t60_to_beta(self)

    @property
    def order(self) -> int:
        if self.max_order is not None:
            return int(self.max_order)
        return default_max_order(self.reflection)


def t60_to_beta(room: RoomSpec) -> float:
    """Uniform wall reflection coefficient reproducing ``room.t60`` under Sabine's law."""
    if room.t60 is None or not room.t60 > 0:
        raise ValueError("T60 must be positive")
    absorption = SABINE * room.volume / (room.surface * room.t60)
    if absorption > 1:
        raise ValueError(f"T60 of {room.t60} s needs absorption {absorption:.3f} > 1")
    return float(np.sqrt(1.0 - absorption))


def default_max_order(beta: float, attenuation_db: float = 60.0) -> int:
    if beta <= 0:
        return 0
    return int(np.ceil(-attenuation_db / (20 * np.log10(beta))))


def _axis_images(pos: float, length: float, order: int):
    """Image coordinates along one axis and their reflection counts."""
    n = np.arange(-order, order + 1)
    coords = np.concatenate([pos + 2 * n * length, -pos + 2 * n * length])
    counts = np.concatenate([2 * np.abs(n), np.abs(n - 1) + np.abs(n)])
    keep = counts <= order
    return coords[keep], counts[keep]


def image_sources(room: RoomSpec, src) -> tuple[np.ndarray, np.ndarray]:
    """All images with at most ``room.order`` reflections: positions and counts."""
    order = room.order
    axes = [_axis_images(float(src[k]), room.dimensions[k], order) for k in range(3)]
    (x, cx), (y, cy), (z, cz) = axes
    total = cx[:, None, None] + cy[None, :, None] + cz[None, None, :]
    keep = total <= order
    ix, iy, iz = np.nonzero(keep)
    return np.stack([x[ix], y[iy], z[iz]], axis=1), total[keep]


@dataclass(frozen=True)
class ImpulseResponse:
    samples: np.ndarray
    fs: float


def _inside(room: RoomSpec, p) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(np.all(p > 0) and np.all(p < np.asarray(room.dimensions)))


def image_method_rir(room: RoomSpec, src, mic) -> ImpulseResponse:
    """Impulse response from ``src`` to ``mic``.

    Each image contributes ``beta**k / (4 pi dist)`` at the nearest sample to
    ``dist * fs / c``.
    """
    src = np.asarray(src, dtype=float)
    mic = np.asarray(mic, dtype=float)
    if np.allclose(src, mic):
        raise ValueError("source and microphone coincide")
    if not (_inside(room, src) and _inside(room, mic)):
        raise ValueError("source and microphone must lie strictly inside the room")
    beta = room.reflection
    positions, counts = image_sources(room, src)
    diff = positions - mic
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    gain = np.power(beta, counts) if beta > 0 else (counts == 0).astype(float)
    amp = gain / (4 * np.pi * dist)
    delay = dist * (room.fs / room.c)
    live = amp != 0
    delay, amp = delay[live], amp[live]
    if room.fractional:
        idx, amp = _sinc_taps(delay, amp, room.sinc_half_width)
    else:
        idx = np.floor(delay + 0.5).astype(np.int64)
    # Deterministic accumulation order so that swapped roles agree closely.
    order = np.lexsort((amp, idx))
    rir = np.bincount(idx[order], weights=amp[order], minlength=int(idx.max()) + 1)
    return ImpulseResponse(rir, room.fs)


def _sinc_taps(delay: np.ndarray, amp: np.ndarray, half: int):
    base = np.floor(delay).astype(np.int64)
    k = np.arange(-half + 1, half + 1)
    idx = base[:, None] + k[None, :]
    t = idx - delay[:, None]
    window = 0.5 * (1 + np.cos(np.pi * t / half))
    taps = amp[:, None] * np.sinc(t) * window
    ok = idx >= 0
    return idx[ok], taps[ok]


def render_mic_signals(room: RoomSpec, src, signal, positions, snr_db: float | None = None,
                       seed: int | None = None) -> np.ndarray:
    """Microphone signals ``(M, len(signal) + L - 1)`` for a point source.

    ``L`` is the longest impulse response; shorter channels are zero padded.
    With ``snr_db`` each channel gets independent white Gaussian noise at that
    signal-to-noise ratio.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.size == 0:
        raise ValueError("source signal is empty")
    rirs = [image_method_rir(room, src, m).samples for m in np.asarray(positions, dtype=float)]
    length = signal.size + max(r.size for r in rirs) - 1
    out = np.zeros((len(rirs), length))
    for k, rir in enumerate(rirs):
        y = fftconvolve(signal, rir)
        out[k, : y.size] = y
    if snr_db is not None:
        rng = np.random.default_rng(seed)
        power = np.mean(out**2, axis=1, keepdims=True)
        sigma = np.sqrt(power / 10 ** (snr_db / 10))
        out = out + sigma * rng.standard_normal(out.shape)
    return out


def schroeder_t60(rir: np.ndarray, fs: float, start_db: float = -5.0, stop_db: float = -35.0) -> float:
    """Reverberation time from a line fit to the backward-integrated energy decay."""
    energy = np.cumsum(rir[::-1] ** 2)[::-1]
    edc = 10 * np.log10(energy / energy[0] + 1e-300)
    sel = np.nonzero((edc <= start_db) & (edc >= stop_db))[0]
    if sel.size < 2:
        raise ValueError("decay curve does not span the fit range")
    t = sel / fs
    slope, _ = np.polyfit(t, edc[sel], 1)
    return -60.0 / slope


def noise_burst(duration: float, fs: float, seed: int | None = None) -> np.ndarray:
    """Unit-variance white Gaussian excitation."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal(int(round(duration * fs)))
