"""Cross-flow excitation coefficient surface Ce(A/D, fhat).

Two boundary curves, one at each end of the excitation range fhat_min..fhat_max,
are described by four anchors each: Ce at A/D = 0, the A/D of the peak, the
peak value and the A/D where Ce crosses zero. Inside the range the anchors are
interpolated linearly in fhat and the curve in A/D is built from two quadratic
pieces that meet with zero slope at the peak. Outside the range the
coefficient is pure damping, -Cd_damp * A/D.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass, fields, replace

import numpy as np


@dataclass(frozen=True)
class CeCurve:
    """Ce as a function of A/D at one boundary frequency."""

    ce0: float
    ad_peak: float
    ce_max: float
    ad_zero: float


@dataclass(frozen=True)
class CeParameterSet:
    fhat_min: float
    fhat_max: float
    low: CeCurve
    high: CeCurve
    added_mass: float = 1.0
    damping: float = 0.5

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid CeParameterSet: " + "; ".join(problems))

    def problems(self):
        out = []
        vals = self.to_vector()
        if not np.all(np.isfinite(vals)):
            return ["non-finite value"]
        if not 0 < self.fhat_min < self.fhat_max:
            out.append("need 0 < fhat_min < fhat_max")
        for label, c in (("low", self.low), ("high", self.high)):
            if not 0 < c.ad_peak < c.ad_zero:
                out.append(f"{label}: need 0 < ad_peak < ad_zero")
            if not c.ce_max > 0:
                out.append(f"{label}: need ce_max > 0")
            if not 0 <= c.ce0 <= c.ce_max:
                out.append(f"{label}: need 0 <= ce0 <= ce_max")
        if not self.added_mass >= 0:
            out.append("added_mass must be >= 0")
        if not self.damping >= 0:
            out.append("damping must be >= 0")
        return out

    @property
    def fhat_mid(self):
        return 0.5 * (self.fhat_min + self.fhat_max)

    @property
    def max_ad_zero(self):
        return max(self.low.ad_zero, self.high.ad_zero)

    # Flat 12-vector view used by the optimizer.
    NAMES = (
        "fhat_min", "fhat_max",
        "low_ce0", "low_ad_peak", "low_ce_max", "low_ad_zero",
        "high_ce0", "high_ad_peak", "high_ce_max", "high_ad_zero",
        "added_mass", "damping",
    )

    def to_vector(self):
        return np.array(
            [self.fhat_min, self.fhat_max, *astuple(self.low), *astuple(self.high),
             self.added_mass, self.damping],
            dtype=float,
        )

    @classmethod
    def from_vector(cls, v):
        v = [float(x) for x in v]
        return cls(v[0], v[1], CeCurve(*v[2:6]), CeCurve(*v[6:10]), v[10], v[11])

    @classmethod
    def is_valid_vector(cls, v):
        try:
            cls.from_vector(v)
        except ValueError:
            return False
        return True

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            "fhat_min": self.fhat_min,
            "fhat_max": self.fhat_max,
            "low": {f.name: getattr(self.low, f.name) for f in fields(CeCurve)},
            "high": {f.name: getattr(self.high, f.name) for f in fields(CeCurve)},
            "added_mass": self.added_mass,
            "damping": self.damping,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            fhat_min=float(d["fhat_min"]),
            fhat_max=float(d["fhat_max"]),
            low=CeCurve(**{k: float(d["low"][k]) for k in ("ce0", "ad_peak", "ce_max", "ad_zero")}),
            high=CeCurve(**{k: float(d["high"][k]) for k in ("ce0", "ad_peak", "ce_max", "ad_zero")}),
            added_mass=float(d.get("added_mass", 1.0)),
            damping=float(d.get("damping", 0.5)),
        )


def _interp_anchors(params, fhat):
    t = (fhat - params.fhat_min) / (params.fhat_max - params.fhat_min)
    lo, hi = params.low, params.high
    # (1 - t) a + t b reproduces both boundary curves exactly at t = 0 and t = 1.
    return tuple((1.0 - t) * a + t * b for a, b in zip(astuple(lo), astuple(hi)))


def _curve(ad, ce0, ad_peak, ce_max, ad_zero):
    rising = ce_max - (ce_max - ce0) * (1.0 - ad / ad_peak) ** 2
    falling = ce_max * (1.0 - ((ad - ad_peak) / (ad_zero - ad_peak)) ** 2)
    return np.where(ad <= ad_peak, rising, falling)


def ce(params, ad, fhat):
    """Excitation coefficient at amplitude ratio ``ad`` and frequency ``fhat``.

    Broadcasts over array arguments. Positive values feed energy into the
    motion.
    """
    ad = np.asarray(ad, dtype=float)
    fhat = np.asarray(fhat, dtype=float)
    if np.any(ad < 0):
        raise ValueError("amplitude ratio must be >= 0")
    ad, fhat = np.broadcast_arrays(ad, fhat)
    inside = (fhat >= params.fhat_min) & (fhat <= params.fhat_max)
    # Clipping keeps the interpolation finite where the result is discarded.
    f_in = np.clip(fhat, params.fhat_min, params.fhat_max)
    value = np.where(inside, _curve(ad, *_interp_anchors(params, f_in)), -params.damping * ad)
    return value if value.ndim else float(value)


def excitation_region(params, ad, fhat):
    out = np.asarray(ce(params, ad, fhat)) > 0
    return out if out.ndim else bool(out)


def ce_grid(params, fhat_values, ad_values):
    """Ce sampled on a (fhat, A/D) grid, shape (len(fhat_values), len(ad_values))."""
    f, a = np.meshgrid(np.asarray(fhat_values, float), np.asarray(ad_values, float), indexing="ij")
    return ce(params, a, f)


def default_params():
    """A generic single-frequency style parameter set used as a starting point."""
    return CeParameterSet(
        fhat_min=0.125,
        fhat_max=0.2,
        low=CeCurve(ce0=0.3, ad_peak=0.35, ce_max=0.6, ad_zero=0.8),
        high=CeCurve(ce0=0.2, ad_peak=0.3, ce_max=0.5, ad_zero=0.7),
        added_mass=1.0,
        damping=0.5,
    )


def zero_crossing(params, fhat):
    """Interpolated A/D where Ce changes sign at ``fhat`` (inside the range)."""
    if not params.fhat_min <= fhat <= params.fhat_max:
        raise ValueError("fhat outside excitation range has no zero crossing")
    return float(_interp_anchors(params, fhat)[3])


__all__ = [
    "CeCurve",
    "CeParameterSet",
    "ce",
    "ce_grid",
    "default_params",
    "excitation_region",
    "zero_crossing",
]
