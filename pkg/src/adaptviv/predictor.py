"""Frequency-domain cross-flow VIV response and fatigue for a pipe in current.

The pipeline is the classic semi-empirical one:

1. find the (added-mass adjusted) natural frequencies that can lock in
   somewhere along the pipe, i.e. whose non-dimensional frequency
   fhat = f D / U(z) falls inside the excitation range;
2. share the pipe out between those frequencies (space sharing);
3. for every zone, find the amplitude at which the power put in by the
   excitation coefficient inside the zone equals the power taken out by
   hydrodynamic damping along the rest of the pipe;
4. convert modal amplitudes to bending stress at the sensors and accumulate
   narrow-band S-N fatigue.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import hydro
from .structural import DEFAULT_STROUHAL, RHO_WATER, shedding_frequency, wet_natural_frequencies

log = logging.getLogger(__name__)

SECONDS_PER_YEAR = 3.156e7
MAX_MODE = 2000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SNCurve:
    """Single-slope S-N curve, log10 N = log_a - m log10 S with S in MPa."""

    m: float = 3.0
    log_a: float = 11.63

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.log_a)):
            raise ValueError(f"invalid S-N curve: m={self.m}, log_a={self.log_a}")

    def cycles_to_failure(self, stress_range_mpa):
        s = np.asarray(stress_range_mpa, dtype=float)
        with np.errstate(divide="ignore"):
            n = 10.0 ** (self.log_a - self.m * np.log10(s))
        return n if n.ndim else float(n)

    def damage_per_cycle(self, stress_range_mpa):
        """1/N written as S^m / a, so a zero stress range gives exactly zero."""
        s = np.asarray(stress_range_mpa, dtype=float)
        return s**self.m * 10.0 ** (-self.log_a)

    @classmethod
    def parse(cls, text):
        """Parse ``"m=3,loga=11.63"``."""
        vals = {}
        for part in text.split(","):
            key, sep, val = part.partition("=")
            if not sep:
                raise ValueError(f"cannot parse S-N curve string {text!r}")
            vals[key.strip().lower().replace("_", "")] = float(val)
        if set(vals) != {"m", "loga"}:
            raise ValueError(f"S-N curve string needs exactly m and loga, got {text!r}")
        return cls(m=vals["m"], log_a=vals["loga"])

    def to_dict(self):
        return {"m": self.m, "log_a": self.log_a}

    @classmethod
    def from_dict(cls, d):
        return cls(m=float(d["m"]), log_a=float(d["log_a"]))


@dataclass(frozen=True)
class FrequencyZone:
    frequency: float
    mode: int
    z_start: float
    z_end: float
    amplitude_ratio: float = 0.0

    def __post_init__(self):
        if not self.z_start < self.z_end:
            raise ValueError("zone needs z_start < z_end")

    @property
    def length(self):
        return self.z_end - self.z_start

    def to_dict(self):
        return {
            "frequency": self.frequency,
            "mode": self.mode,
            "z_start": self.z_start,
            "z_end": self.z_end,
            "amplitude_ratio": self.amplitude_ratio,
        }


@dataclass
class PredictionResult:
    zones: list
    sensor_positions: np.ndarray
    stress_std: np.ndarray
    damage: np.ndarray
    zone_stress_std: np.ndarray = field(repr=False)
    zone_damage: np.ndarray = field(repr=False)

    @property
    def max_fatigue(self):
        return float(self.damage.max()) if self.damage.size else 0.0

    def to_dict(self):
        return {
            "zones": [z.to_dict() for z in self.zones],
            "sensors": [
                {"z": float(z), "stress_std": float(s), "damage": float(d)}
                for z, s, d in zip(self.sensor_positions, self.stress_std, self.damage)
            ],
            "max_fatigue": self.max_fatigue,
        }


def computation_grid(pipe):
    """Integration grid along the pipe: max(200, L/D/2) points."""
    n = max(200, int(round(pipe.length / pipe.outer_diameter / 2.0)))
    return np.linspace(0.0, pipe.length, n)


def _trapezoid_weights(z):
    w = np.zeros_like(z)
    dz = np.diff(z)
    w[:-1] += 0.5 * dz
    w[1:] += 0.5 * dz
    return w


def _speed_window_length(profile, u_lo, u_hi):
    """Length of pipe where u_lo <= U(z) <= u_hi and U(z) > 0 (exact for piecewise-linear U)."""
    total = 0.0
    for z0, z1, a, b in zip(profile.z[:-1], profile.z[1:], profile.speed[:-1], profile.speed[1:]):
        seg = z1 - z0
        lo, hi = max(u_lo, 0.0), u_hi
        if hi < lo:
            continue
        if a == b:
            if lo <= a <= hi and a > 0:
                total += seg
            continue
        # fraction of the segment where the linear speed lies in [lo, hi]
        t0, t1 = sorted(((lo - a) / (b - a), (hi - a) / (b - a)))
        frac = max(0.0, min(1.0, t1) - max(0.0, t0))
        total += frac * seg
    return total


def candidate_frequencies(pipe, profile, params, strouhal=DEFAULT_STROUHAL):
    """Modes whose wet natural frequency can lock in somewhere on the pipe.

    Returns ``[(mode, frequency_hz), ...]`` sorted by decreasing length of
    the excitable part of the pipe. The Strouhal number does not enter the
    selection: the excitation range is expressed directly in fhat.
    """
    profile.check_pipe(pipe)
    shedding_frequency(float(profile.speed.max()), pipe.outer_diameter, strouhal)  # validates inputs
    u_max = float(profile.speed.max())
    if u_max <= 0:
        return []
    D = pipe.outer_diameter
    found = []
    n = 1
    while n <= MAX_MODE:
        f = float(wet_natural_frequencies(pipe, n, params.added_mass))
        u_lo, u_hi = f * D / params.fhat_max, f * D / params.fhat_min
        if u_lo > u_max:
            break
        length = _speed_window_length(profile, u_lo, u_hi)
        if length > 0 or _touches(profile, u_lo, u_hi):
            found.append((n, f, length))
        n += 1
    found.sort(key=lambda c: (-c[2], c[0]))
    return [(n, f) for n, f, _ in found]


def _touches(profile, u_lo, u_hi):
    u = profile.speed
    return bool(np.any((u >= u_lo) & (u <= u_hi) & (u > 0)))


def _excitable_mask(f, D, speed, params):
    with np.errstate(divide="ignore", invalid="ignore"):
        fhat = np.where(speed > 0, f * D / np.where(speed > 0, speed, 1.0), np.inf)
    return (fhat >= params.fhat_min) & (fhat <= params.fhat_max), fhat


def assign_zones(candidates, profile, pipe, params):
    """Share the pipe between candidate frequencies.

    At every grid point the excitable candidate whose fhat is closest to the
    middle of the excitation range wins; contiguous runs become zones and
    runs shorter than two diameters are dropped.
    """
    if not candidates:
        return []
    z = computation_grid(pipe)
    speed = profile(z)
    D = pipe.outer_diameter
    mid = params.fhat_mid
    score = np.full((len(candidates), z.size), np.inf)
    for k, (_, f) in enumerate(candidates):
        mask, fhat = _excitable_mask(f, D, speed, params)
        score[k, mask] = np.abs(fhat[mask] - mid)
    excitable = np.isfinite(score).any(axis=0)
    winner = np.where(excitable, np.argmin(score, axis=0), -1)

    zones = []
    i = 0
    while i < z.size:
        j = i
        while j + 1 < z.size and winner[j + 1] == winner[i]:
            j += 1
        if winner[i] >= 0 and z[j] - z[i] >= 2.0 * D:
            n, f = candidates[winner[i]]
            zones.append(FrequencyZone(frequency=f, mode=int(n), z_start=float(z[i]), z_end=float(z[j])))
        i = j + 1
    return zones


class ZoneBalance:
    """Power balance of one zone as a function of the antinode amplitude ratio.

    Power in:  int_zone 1/2 rho U^2 D Ce(AD phi, fhat) |v| dz
    Power out: int_rest 1/2 rho U^2 D Cd AD phi |v| dz
    with phi = |sin(n pi z / L)| and |v| = omega AD D phi.
    """

    def __init__(self, zone, pipe, profile, params):
        z = computation_grid(pipe)
        w = _trapezoid_weights(z)
        D = pipe.outer_diameter
        speed = profile(z)
        inside = (z >= zone.z_start - 1e-12) & (z <= zone.z_end + 1e-12)
        phi = np.abs(np.sin(zone.mode * math.pi * z / pipe.length))
        omega = 2.0 * math.pi * zone.frequency
        # per-point factor multiplying Ce(.) * AD  (or Cd * AD^2 outside)
        coef = w * 0.5 * RHO_WATER * speed**2 * D * omega * D * phi

        self.params = params
        self.zone = zone
        self._phi_in = phi[inside]
        self._coef_in = coef[inside]
        with np.errstate(divide="ignore"):
            self._fhat_in = zone.frequency * D / speed[inside]
        self._out_factor = float(np.sum(coef[~inside] * params.damping * phi[~inside]))
        self.upper = 1.5 * params.max_ad_zero

    def power(self, ad):
        """(power_in, power_out) in watts at antinode amplitude ratio ``ad``."""
        ce_local = hydro.ce(self.params, ad * self._phi_in, self._fhat_in)
        p_in = ad * float(np.dot(self._coef_in, ce_local))
        p_out = ad * ad * self._out_factor
        return p_in, p_out

    def reduced_residual(self, ad):
        """(P_in - P_out) / AD, finite at AD = 0."""
        ce_local = hydro.ce(self.params, ad * self._phi_in, self._fhat_in)
        return float(np.dot(self._coef_in, ce_local)) - ad * self._out_factor

    def solve(self, rtol=1e-6, xtol=1e-12, max_iter=200):
        lo, hi = 0.0, self.upper
        g_lo = self.reduced_residual(lo)
        if g_lo <= 0:
            return 0.0
        g_hi = self.reduced_residual(hi)
        if g_hi > 0:
            log.warning(
                "zone mode %d at %.3f Hz: excitation still positive at upper bound A/D=%.3f; clamping",
                self.zone.mode, self.zone.frequency, hi,
            )
            return hi
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            p_in, p_out = self.power(mid)
            if p_in != 0 and abs(p_in - p_out) / abs(p_in) < rtol:
                return mid
            if hi - lo < xtol:
                return mid
            if p_in - p_out > 0:
                lo = mid
            else:
                hi = mid
        raise ConvergenceError(
            f"energy balance for mode {self.zone.mode} ({self.zone.frequency:.4f} Hz) did not converge "
            f"in {max_iter} iterations: bracket [{lo:.6g}, {hi:.6g}]"
        )


def energy_balance(zone, pipe, profile, params, rtol=1e-6, xtol=1e-12, max_iter=200):
    """Antinode amplitude ratio at which input and dissipated power balance."""
    return ZoneBalance(zone, pipe, profile, params).solve(rtol=rtol, xtol=xtol, max_iter=max_iter)


def stress_and_fatigue(zones, pipe, sn, sensor_positions):
    if not isinstance(sn, SNCurve):
        raise TypeError("sn must be an SNCurve")
    if pipe.stress_per_curvature is None:
        raise ValueError(f"pipe {pipe.name!r} has no stress_per_curvature; cannot compute stress")
    zs = np.asarray(sensor_positions, dtype=float)
    L, D = pipe.length, pipe.outer_diameter
    zone_std = np.zeros((len(zones), zs.size))
    zone_dmg = np.zeros((len(zones), zs.size))
    for k, zone in enumerate(zones):
        curvature = (zone.mode * math.pi / L) ** 2 * zone.amplitude_ratio * D * np.abs(np.sin(zone.mode * math.pi * zs / L))
        std = pipe.stress_per_curvature * curvature / math.sqrt(2.0)
        stress_range_mpa = 2.0 * math.sqrt(2.0) * std / 1e6
        zone_std[k] = std
        zone_dmg[k] = zone.frequency * SECONDS_PER_YEAR * sn.damage_per_cycle(stress_range_mpa)
    return PredictionResult(
        zones=list(zones),
        sensor_positions=zs,
        stress_std=np.sqrt((zone_std**2).sum(axis=0)),
        damage=zone_dmg.sum(axis=0),
        zone_stress_std=zone_std,
        zone_damage=zone_dmg,
    )


def predict_response(pipe, profile, params, sn, sensor_positions, strouhal=DEFAULT_STROUHAL):
    candidates = candidate_frequencies(pipe, profile, params, strouhal)
    zones = assign_zones(candidates, profile, pipe, params)
    solved = [
        FrequencyZone(z.frequency, z.mode, z.z_start, z.z_end, energy_balance(z, pipe, profile, params))
        for z in zones
    ]
    return stress_and_fatigue(solved, pipe, sn, sensor_positions)


def predict(case, params, sn, strouhal=None):
    """Predict response and fatigue at the sensors of ``case``."""
    st = strouhal if strouhal is not None else case.strouhal
    return predict_response(case.pipe, case.profile, params, sn, case.sensor_positions, st)
