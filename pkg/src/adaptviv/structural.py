"""Analytic tensioned-beam model of a test pipe.

Wave speeds, pinned-pinned natural frequencies, the bending-stiffness ratio
and the Strouhal shedding frequency. Everything here is a pure function of
its arguments and accepts numpy arrays where that makes sense.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

RHO_WATER = 1000.0  # kg/m^3
DEFAULT_STROUHAL = 0.2


def displaced_mass(diameter):
    """Mass of water displaced per unit length [kg/m]."""
    return RHO_WATER * math.pi * diameter**2 / 4.0


@dataclass(frozen=True)
class PipeModel:
    """Physical description of a test pipe.

    ``mass_per_length`` is authoritative. When only ``mass_ratio`` is given the
    mass per length is derived from it using the displaced water mass.
    ``stress_per_curvature`` converts curvature to bending stress
    (sigma = stress_per_curvature * kappa); it is needed for stress and fatigue
    and is deliberately left ``None`` when unknown.
    """

    name: str
    length: float
    outer_diameter: float
    bending_stiffness: float
    mean_tension: float
    mass_ratio: float | None = None
    mass_per_length: float | None = None
    stress_per_curvature: float | None = None

    def __post_init__(self):
        if self.mass_per_length is None:
            if self.mass_ratio is None:
                raise ValueError(f"pipe {self.name!r}: need mass_per_length or mass_ratio")
            object.__setattr__(
                self, "mass_per_length", self.mass_ratio * displaced_mass(self.outer_diameter)
            )
        for attr in ("length", "outer_diameter", "mass_per_length", "bending_stiffness"):
            if not getattr(self, attr) >= 0:
                raise ValueError(f"pipe {self.name!r}: {attr} must be >= 0")
        if not self.mean_tension > 0:
            raise ValueError(f"pipe {self.name!r}: mean_tension must be > 0")
        if not self.outer_diameter < self.length:
            raise ValueError(f"pipe {self.name!r}: outer_diameter must be smaller than length")
        if self.stress_per_curvature is not None and self.stress_per_curvature < 0:
            raise ValueError(f"pipe {self.name!r}: stress_per_curvature must be >= 0")
        if self.mass_ratio is not None and self.mass_per_length > 0:
            implied = self.mass_ratio * displaced_mass(self.outer_diameter)
            if abs(self.mass_per_length - implied) / self.mass_per_length > 0.05:
                warnings.warn(
                    f"pipe {self.name!r}: mass_per_length {self.mass_per_length:.4g} kg/m "
                    f"differs from mass_ratio estimate {implied:.4g} kg/m by more than 5%",
                    stacklevel=2,
                )

    @property
    def added_mass_unit(self):
        """Displaced water mass per length; multiply by Ca for added mass."""
        return displaced_mass(self.outer_diameter)

    def to_dict(self):
        return {
            "name": self.name,
            "length": self.length,
            "outer_diameter": self.outer_diameter,
            "mass_ratio": self.mass_ratio,
            "mass_per_length": self.mass_per_length,
            "bending_stiffness": self.bending_stiffness,
            "mean_tension": self.mean_tension,
            "stress_per_curvature": self.stress_per_curvature,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            length=float(d["length"]),
            outer_diameter=float(d["outer_diameter"]),
            bending_stiffness=float(d["bending_stiffness"]),
            mean_tension=float(d["mean_tension"]),
            mass_ratio=_opt_float(d.get("mass_ratio")),
            mass_per_length=_opt_float(d.get("mass_per_length")),
            stress_per_curvature=_opt_float(d.get("stress_per_curvature")),
        )


def _opt_float(x):
    return None if x is None else float(x)


@dataclass(frozen=True, eq=False)
class CurrentProfile:
    """Piecewise-linear current speed along the pipe, z measured from one end."""

    z: np.ndarray
    speed: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        u = np.asarray(self.speed, dtype=float)
        if z.ndim != 1 or z.shape != u.shape or z.size < 2:
            raise ValueError("profile needs matching 1-D z and speed arrays with >= 2 samples")
        if np.any(np.diff(z) <= 0):
            raise ValueError("profile z must be strictly increasing")
        if z[0] != 0.0:
            raise ValueError("profile must start at z = 0")
        if np.any(u < 0) or not np.all(np.isfinite(u)):
            raise ValueError("profile speeds must be finite and >= 0")
        z.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "speed", u)

    @property
    def length(self):
        return float(self.z[-1])

    def __call__(self, z):
        return np.interp(z, self.z, self.speed)

    def check_pipe(self, pipe):
        if not math.isclose(self.length, pipe.length, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(
                f"profile ends at z = {self.length} m but pipe {pipe.name!r} is {pipe.length} m long"
            )

    @classmethod
    def uniform(cls, length, speed):
        return cls(np.array([0.0, length]), np.array([speed, speed]))

    @classmethod
    def linear_shear(cls, length, speed_at_zero, speed_at_end):
        return cls(np.array([0.0, length]), np.array([speed_at_zero, speed_at_end]))

    def to_dict(self):
        return {"z": self.z.tolist(), "U": self.speed.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["z"], dtype=float), np.asarray(d["U"], dtype=float))


@dataclass(frozen=True)
class ModalInfo:
    mode: int
    f_string: float
    f_beam: float
    f_total: float
    stiffness_ratio: float
    c_string: float
    c_beam: float


def wave_speeds(pipe, omega):
    """Travelling-wave speeds (string, beam) at angular frequency ``omega``.

    The string speed sqrt(T/m) does not depend on frequency; the beam speed
    (omega^2 EI/m)^(1/4) does.
    """
    m = pipe.mass_per_length
    if not m > 0:
        raise ValueError(f"pipe {pipe.name!r}: mass per length must be positive")
    c_s = math.sqrt(pipe.mean_tension / m)
    c_b = (np.asarray(omega, dtype=float) ** 2 * pipe.bending_stiffness / m) ** 0.25
    return c_s, c_b if np.ndim(c_b) else float(c_b)


def natural_frequencies(pipe, n):
    """String, beam and combined natural frequencies [Hz] for mode(s) ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("mode number must be >= 1")
    m = pipe.mass_per_length
    if not m > 0:
        raise ValueError(f"pipe {pipe.name!r}: mass per length must be positive")
    L = pipe.length
    f_s = n / (2.0 * L) * math.sqrt(pipe.mean_tension / m)
    f_b = n**2 * math.pi / (2.0 * L**2) * math.sqrt(pipe.bending_stiffness / m)
    return f_s, f_b, np.hypot(f_s, f_b)


def stiffness_ratio(pipe, n):
    """Bending contribution f_nb / f_ntot, in [0, 1]."""
    _, f_b, f_tot = natural_frequencies(pipe, n)
    return f_b / f_tot


def modal_info(pipe, n):
    if int(n) != n or n < 1:
        raise ValueError(f"mode number must be an integer >= 1, got {n!r}")
    n = int(n)
    f_s, f_b, f_tot = (float(v) for v in natural_frequencies(pipe, n))
    c_s, c_b = wave_speeds(pipe, 2.0 * math.pi * f_tot)
    return ModalInfo(
        mode=n,
        f_string=f_s,
        f_beam=f_b,
        f_total=f_tot,
        stiffness_ratio=f_b / f_tot,
        c_string=c_s,
        c_beam=c_b,
    )


def wet_natural_frequencies(pipe, n, added_mass_coefficient):
    """Natural frequencies lowered by added mass Ca * rho_w * pi D^2 / 4."""
    _, _, f_tot = natural_frequencies(pipe, n)
    m = pipe.mass_per_length
    return f_tot * np.sqrt(m / (m + added_mass_coefficient * pipe.added_mass_unit))


def shedding_frequency(speed, diameter, strouhal=DEFAULT_STROUHAL):
    if not diameter > 0:
        raise ValueError("diameter must be positive")
    if not strouhal > 0:
        raise ValueError("Strouhal number must be positive")
    if np.any(np.asarray(speed) < 0):
        raise ValueError("flow speed must be >= 0")
    f_s = strouhal * np.asarray(speed, dtype=float) / diameter
    return f_s if f_s.ndim else float(f_s)
