"""Microphone-array acoustic imaging: synthesis and delay-and-sum beamforming.

A planar grid of candidate source cells (plane z = 0) radiates a
narrowband tone at angular frequency omega; each microphone (plane
z = standoff) receives the sum over cells of

    sqrt(intensity) * cos(omega * (t - tau)),   tau = distance / c,

with the full 3-D distance between cell and microphone.  Beamforming
re-advances every microphone signal by the cell's own delay, sums, and
scores the cell by mean squared amplitude over whole carrier periods of
the steady-state window; the map is normalized so a unit source at a cell
scores about 1 at that cell.  Fractional delays use linear interpolation.

The map produced by a single unit source is the array's point spread
function; nearby cells have nearly shifted copies of it, which is what
makes deconvolution of beamformed maps meaningful.
"""

import math
from array import array
from dataclasses import dataclass, field

from invnets.backend import k
from invnets.errors import ConfigError, DomainError, ShapeError
from invnets.rng import CounterRng
from invnets.tensor import Tensor


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone layout, source-plane grid, and signal parameters.

    mic_positions: (x, y) pairs in the microphone plane [m]
    grid_ny, grid_nx, grid_pitch: source-plane cells, centered on (0, 0)
    standoff: separation between source and microphone planes [m]
    c: sound speed [m/s]; sample_rate [Hz]; omega [rad/s]
    """

    mic_positions: tuple
    grid_ny: int
    grid_nx: int
    grid_pitch: float
    standoff: float
    c: float = 343.0
    sample_rate: float = 48000.0
    omega: float = 2.0 * math.pi * 2000.0
    _mics: tuple = field(init=False, repr=False, default=())

    def __post_init__(self):
        mics = tuple((float(x), float(y)) for x, y in self.mic_positions)
        if len(mics) < 2:
            raise ConfigError(f"at least 2 microphones required, got {len(mics)}")
        if self.grid_ny < 1 or self.grid_nx < 1 or self.grid_pitch <= 0.0:
            raise ConfigError("grid extents and pitch must be positive")
        if self.standoff < 0.0:
            raise ConfigError(f"standoff must be nonnegative, got {self.standoff}")
        if self.c <= 0.0 or self.omega <= 0.0:
            raise ConfigError("sound speed and omega must be positive")
        if self.sample_rate <= self.omega / math.pi:
            raise ConfigError(
                f"sample_rate {self.sample_rate} violates Nyquist bound "
                f"omega/pi = {self.omega / math.pi:.3f}"
            )
        object.__setattr__(self, "mic_positions", mics)
        object.__setattr__(self, "_mics", mics)

    @property
    def n_mics(self):
        return len(self._mics)

    @property
    def grid_shape(self):
        return (self.grid_ny, self.grid_nx)

    def cell_position(self, row, col):
        x = (col - (self.grid_nx - 1) / 2.0) * self.grid_pitch
        y = (row - (self.grid_ny - 1) / 2.0) * self.grid_pitch
        return x, y

    def delay(self, row, col, mic):
        x, y = self.cell_position(row, col)
        mx, my = self._mics[mic]
        d = math.sqrt((mx - x) ** 2 + (my - y) ** 2 + self.standoff ** 2)
        return d / self.c

    def cell_delays(self, row, col):
        return array("d", (self.delay(row, col, m) for m in range(self.n_mics)))

    def max_delay(self):
        worst = 0.0
        for i in range(self.grid_ny):
            for j in range(self.grid_nx):
                for m in range(self.n_mics):
                    worst = max(worst, self.delay(i, j, m))
        return worst

    def period_samples(self):
        return 2.0 * math.pi * self.sample_rate / self.omega


def acoustic_synthesize(sources, geom, duration, seed=0, noise_sd=0.0):
    """Per-microphone time signals for a source intensity map.

    Returns a (n_mics, n_samples) tensor sampled at geom.sample_rate.
    """
    if sources.shape != geom.grid_shape:
        raise ShapeError(
            f"sources shape {sources.shape} does not match grid {geom.grid_shape}"
        )
    nsamp = int(round(duration * geom.sample_rate))
    if nsamp < 2:
        raise ConfigError(f"duration {duration} yields {nsamp} samples")
    nm = geom.n_mics
    data = k.zeros(nm * nsamp)
    sig = memoryview(data)
    for i in range(geom.grid_ny):
        for j in range(geom.grid_nx):
            s = sources[i, j]
            if s < 0.0:
                raise DomainError(f"source intensity at ({i}, {j}) is negative: {s}")
            if s == 0.0:
                continue
            amp = math.sqrt(s)
            for m in range(nm):
                k.synth_add(
                    sig[m * nsamp : (m + 1) * nsamp],
                    nsamp,
                    amp,
                    geom.omega,
                    geom.sample_rate,
                    geom.delay(i, j, m),
                )
    if noise_sd > 0.0:
        rng = CounterRng(seed)
        for i in range(len(data)):
            data[i] += noise_sd * rng.normal()
    return Tensor((nm, nsamp), data)


def _steady_window(geom, nsamp):
    # whole carrier periods that fit after reserving the largest delay
    cap = nsamp - 1 - int(math.ceil(geom.max_delay() * geom.sample_rate))
    period = geom.period_samples()
    if cap < period:
        raise ConfigError(
            f"signals too short: {nsamp} samples leave a {max(cap, 0)}-sample "
            f"window, need at least one carrier period ({period:.2f} samples)"
        )
    n_per = int(cap / period)
    if abs(period - round(period)) < 1e-9:
        return n_per * int(round(period))
    return int(n_per * period)


def delay_and_sum(signals, geom):
    """Beamformed source-intensity map over the geometry's grid.

    Each cell advances every microphone signal by that cell's delay, sums,
    and takes the mean square over the steady-state window; scaled so that
    a unit source at a cell gives about 1 there.
    """
    if signals.ndim != 2 or signals.shape[0] != geom.n_mics:
        raise ShapeError(
            f"signals shape {signals.shape} does not match {geom.n_mics} microphones"
        )
    nm, nsamp = signals.shape
    wlen = _steady_window(geom, nsamp)
    norm = 2.0 / (nm * nm)
    out = k.zeros(geom.grid_ny * geom.grid_nx)
    for i in range(geom.grid_ny):
        for j in range(geom.grid_nx):
            taus = geom.cell_delays(i, j)
            p = k.das_power(signals.data, nm, nsamp, taus, geom.sample_rate, wlen)
            out[i * geom.grid_nx + j] = p * norm
    return Tensor(geom.grid_shape, out)


def beamformer_psf(geom, at, duration=None):
    """Noise-free beamformed map of a unit source at grid cell ``at``.

    This is the array's point spread function around that cell.
    """
    row, col = at
    if not (0 <= row < geom.grid_ny and 0 <= col < geom.grid_nx):
        raise ConfigError(f"cell {at} outside grid {geom.grid_shape}")
    if duration is None:
        period = geom.period_samples()
        need = geom.max_delay() * geom.sample_rate + 16.0 * period + 2.0
        duration = (need + 1.0) / geom.sample_rate
    src = k.zeros(geom.grid_ny * geom.grid_nx)
    src[row * geom.grid_nx + col] = 1.0
    signals = acoustic_synthesize(Tensor(geom.grid_shape, src), geom, duration)
    return delay_and_sum(signals, geom)
