"""Response characteristics extracted from measured (or synthetic) stress records.

The three clustering features are the response mode order, the 3x/1x stress
ratio and the bending-stiffness ratio at that mode.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .structural import DEFAULT_STROUHAL, stiffness_ratio, wet_natural_frequencies

BAND_HALF_WIDTH = 0.25
FILTER_ORDER = 4
MIN_SAMPLES = 256
RECOMMENDED_SAMPLES = 1024
# Peak-to-median power ratio below which a spectrum is treated as featureless.
MIN_PEAK_PROMINENCE = 20.0
# Fraction of each record discarded at both ends before taking std of a filtered signal.
EDGE_TRIM = 0.05


class ResponseError(ValueError):
    """No usable response in a record."""


@dataclass(frozen=True, eq=False)
class SensorSeries:
    position: float
    dt: float
    stress: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.stress, dtype=float)
        if s.ndim != 1:
            raise ValueError("stress samples must be 1-D")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if s.size < RECOMMENDED_SAMPLES:
            warnings.warn(
                f"sensor at z={self.position} has only {s.size} samples; "
                f">= {RECOMMENDED_SAMPLES} recommended",
                stacklevel=3,
            )
        s.setflags(write=False)
        object.__setattr__(self, "stress", s)

    @property
    def fs(self):
        return 1.0 / self.dt


@dataclass(frozen=True, eq=False)
class CaseRecord:
    name: str
    pipe: object
    profile: object
    sensors: list
    measured_fatigue: np.ndarray | None = None
    dominant_frequency: float | None = None
    strouhal: float = DEFAULT_STROUHAL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.profile.check_pipe(self.pipe)
        if len(self.sensors) < 2:
            raise ValueError(f"case {self.name!r}: need at least 2 sensors")
        for s in self.sensors:
            if not 0.0 <= s.position <= self.pipe.length:
                raise ValueError(f"case {self.name!r}: sensor at z={s.position} outside the pipe")
        if self.measured_fatigue is not None:
            mf = np.asarray(self.measured_fatigue, dtype=float)
            if mf.shape != (len(self.sensors),):
                raise ValueError(f"case {self.name!r}: measured_fatigue needs one value per sensor")
            if np.any(mf < 0) or not np.all(np.isfinite(mf)):
                raise ValueError(f"case {self.name!r}: measured_fatigue must be finite and >= 0")
            object.__setattr__(self, "measured_fatigue", mf)
        if self.dominant_frequency is not None and not self.dominant_frequency > 0:
            raise ValueError(f"case {self.name!r}: dominant_frequency must be positive")

    @property
    def sensor_positions(self):
        return np.array([s.position for s in self.sensors])


@dataclass(frozen=True)
class FeatureVector:
    mode_order: float
    stress_ratio: float
    stiffness_ratio: float

    def __post_init__(self):
        vals = (self.mode_order, self.stress_ratio, self.stiffness_ratio)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("features must be finite")
        if self.stress_ratio < 0:
            raise ValueError("stress ratio must be >= 0")

    def as_array(self):
        return np.array([self.mode_order, self.stress_ratio, self.stiffness_ratio])


def _stack(case):
    dts = {s.dt for s in case.sensors}
    if len(dts) != 1:
        raise ValueError(f"case {case.name!r}: sensors must share one sampling interval")
    lengths = {s.stress.size for s in case.sensors}
    if len(lengths) != 1:
        raise ValueError(f"case {case.name!r}: sensors must have equal record lengths")
    return np.vstack([s.stress for s in case.sensors]), dts.pop()


def averaged_spectrum(case):
    data, dt = _stack(case)
    if data.shape[1] < MIN_SAMPLES:
        raise ValueError(f"case {case.name!r}: need >= {MIN_SAMPLES} samples per sensor")
    freqs, pxx = signal.periodogram(data, fs=1.0 / dt, window="hann", detrend="constant", axis=-1)
    return freqs, pxx.mean(axis=0)


def dominant_frequency(case, min_prominence=MIN_PEAK_PROMINENCE):
    """Frequency of the largest peak in the cross-sensor averaged spectrum.

    Raises ResponseError for silent records and for spectra without a clear
    peak (peak power below ``min_prominence`` times the median).
    """
    freqs, p = averaged_spectrum(case)
    p = p[1:]
    freqs = freqs[1:]
    if not np.any(p > 0):
        raise ResponseError(f"case {case.name!r}: no response detected")
    k = int(np.argmax(p))
    median = float(np.median(p))
    if median > 0 and p[k] / median < min_prominence:
        raise ResponseError(
            f"case {case.name!r}: no dominant frequency (peak/median power {p[k] / median:.1f} "
            f"< {min_prominence})"
        )
    return float(freqs[k])


def band_std(x, fs, centre, half_width=BAND_HALF_WIDTH, order=FILTER_ORDER):
    """Std of ``x`` after zero-phase band-pass around ``centre`` (+-half_width relative)."""
    lo, hi = (1.0 - half_width) * centre, (1.0 + half_width) * centre
    if hi >= 0.5 * fs:
        raise ValueError(f"band {lo:.4g}-{hi:.4g} Hz reaches the Nyquist frequency {0.5 * fs:.4g} Hz")
    sos = signal.butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos")
    y = signal.sosfiltfilt(sos, x, axis=-1)
    trim = int(EDGE_TRIM * y.shape[-1])
    if trim:
        y = y[..., trim:-trim]
    return np.std(y, axis=-1)


def stress_ratio(case, omega1):
    """max over sensors of std(3x stress) / max over sensors of std(1x stress)."""
    if not omega1 > 0:
        raise ValueError("dominant frequency must be positive")
    data, dt = _stack(case)
    fs = 1.0 / dt
    s1 = band_std(data, fs, omega1)
    s3 = band_std(data, fs, 3.0 * omega1)
    denom = float(s1.max())
    if denom == 0:
        raise ResponseError(f"case {case.name!r}: no stress at the dominant frequency")
    return float(s3.max()) / denom


def mode_order(case, omega1, added_mass=1.0, max_mode=1000):
    """Index of the natural frequency closest to ``omega1``.

    Natural frequencies are lowered by ``added_mass`` * displaced water mass;
    ``added_mass=0`` compares against the dry tensioned-beam frequencies.
    """
    if len(case.sensors) < 4:
        raise ValueError(f"case {case.name!r}: mode estimation needs >= 4 sensors")
    return closest_mode(case.pipe, omega1, added_mass, max_mode)


def closest_mode(pipe, frequency, added_mass=1.0, max_mode=1000):
    n = np.arange(1, max_mode + 1)
    f = wet_natural_frequencies(pipe, n, added_mass)
    return int(n[np.argmin(np.abs(f - frequency))])


def features(case, added_mass=1.0):
    omega1 = case.dominant_frequency or dominant_frequency(case)
    n = mode_order(case, omega1, added_mass)
    r = stress_ratio(case, omega1)
    return FeatureVector(mode_order=float(n), stress_ratio=r, stiffness_ratio=float(stiffness_ratio(case.pipe, n)))


@dataclass(frozen=True, eq=False)
class TimeFrequencyMap:
    times: np.ndarray
    frequencies: np.ndarray
    power: np.ndarray  # (n_freq, n_time), each column scaled to max 1

    def ridge(self):
        """Dominant frequency in every time column (nan for silent columns)."""
        idx = np.argmax(self.power, axis=0)
        out = self.frequencies[idx].astype(float)
        out[self.power.max(axis=0) == 0] = np.nan
        return out


def time_frequency_map(series, window=2.0, overlap=0.75):
    """Short-time Fourier power map with a Hann window of ``window`` seconds."""
    nper = int(round(window / series.dt))
    if nper > series.stress.size:
        raise ValueError("window longer than the record")
    if nper < 8:
        raise ValueError("window too short for the sampling interval")
    f, t, sxx = signal.spectrogram(
        series.stress, fs=series.fs, window="hann", nperseg=nper,
        noverlap=int(overlap * nper), detrend="constant", mode="psd",
    )
    peak = sxx.max(axis=0, keepdims=True)
    norm = np.divide(sxx, peak, out=np.zeros_like(sxx), where=peak > 0)
    return TimeFrequencyMap(times=t, frequencies=f, power=norm)
