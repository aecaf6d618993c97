"""Synthetic cases generated from a known parameter set.

A synthetic case is the predictor's own answer for ``truth`` turned into
sensor stress records: one tone per frequency zone with the predicted 1x
stress std, an optional 3x tone, and multiplicative noise. Its measured
fatigue is the predicted damage (noise-perturbed), so calibration against it
isolates optimizer quality from any counting-method mismatch.
"""
from __future__ import annotations

import math

import numpy as np

from .characterize import CaseRecord, SensorSeries
from .dataio import reference_pipe
from .hydro import CeCurve, CeParameterSet
from .predictor import SNCurve, predict_response
from .structural import DEFAULT_STROUHAL, CurrentProfile

N_SENSORS = 40
N_SAMPLES = 4096
SAMPLES_PER_PERIOD = 10
# Bending stress per unit curvature for the benchmark pipes, E * D / 2 with a
# steel-like modulus. The reference table gives no wall or material data.
BENCHMARK_MODULUS = 2.1e11


def sensor_layout(length, n_sensors=N_SENSORS):
    """Equally spaced interior sensors, z_i = L i / (N + 1)."""
    return length * np.arange(1, n_sensors + 1) / (n_sensors + 1)


def synthesize_case(
    pipe,
    profile,
    truth,
    sn=None,
    noise=0.0,
    seed=0,
    third_harmonic_ratio=0.0,
    n_sensors=N_SENSORS,
    n_samples=N_SAMPLES,
    name=None,
    strouhal=DEFAULT_STROUHAL,
):
    if not 0.0 <= noise <= 0.5:
        raise ValueError("noise must be within [0, 0.5]")
    sn = sn or SNCurve()
    rng = np.random.default_rng(seed)
    z = sensor_layout(pipe.length, n_sensors)
    result = predict_response(pipe, profile, truth, sn, z, strouhal)

    freqs = np.array([zn.frequency for zn in result.zones])
    f_top = freqs.max() if freqs.size else 1.0
    dt = 1.0 / (SAMPLES_PER_PERIOD * f_top)
    t = np.arange(n_samples) * dt
    stress = np.zeros((n_sensors, n_samples))
    for k, zone in enumerate(result.zones):
        sign = np.sign(np.sin(zone.mode * math.pi * z / pipe.length))
        amp = math.sqrt(2.0) * result.zone_stress_std[k] * sign
        phase1, phase3 = rng.uniform(0.0, 2.0 * math.pi, size=2)
        stress += np.outer(amp, np.sin(2.0 * math.pi * zone.frequency * t + phase1))
        if third_harmonic_ratio:
            stress += np.outer(third_harmonic_ratio * amp, np.sin(2.0 * math.pi * 3.0 * zone.frequency * t + phase3))

    damage = result.damage.copy()
    if noise > 0:
        stress *= np.maximum(0.05, 1.0 + noise * rng.standard_normal(n_sensors))[:, None]
        damage *= np.maximum(0.05, 1.0 + noise * rng.standard_normal(n_sensors))
    stress = np.round(stress, 3)

    dominant = None
    if result.zones:
        dominant = result.zones[int(np.argmax(result.zone_stress_std.max(axis=1)))].mode
    meta = {
        "synthetic": True,
        "seed": int(seed),
        "noise": float(noise),
        "third_harmonic_ratio": float(third_harmonic_ratio),
        "dominant_mode": dominant,
        "truth": truth.to_dict(),
    }
    return CaseRecord(
        name=name or f"synthetic-{pipe.name}-{seed}",
        pipe=pipe,
        profile=profile,
        sensors=[SensorSeries(float(zi), float(dt), row) for zi, row in zip(z, stress)],
        measured_fatigue=damage,
        strouhal=strouhal,
        meta=meta,
    )


# --- reference truths and benchmark populations ------------------------------

def single_frequency_truth():
    """Strong, single-frequency lock-in: tension dominated pipes."""
    return CeParameterSet(
        fhat_min=0.12,
        fhat_max=0.21,
        low=CeCurve(ce0=0.35, ad_peak=0.4, ce_max=0.8, ad_zero=0.95),
        high=CeCurve(ce0=0.25, ad_peak=0.3, ce_max=0.6, ad_zero=0.75),
        added_mass=1.0,
        damping=0.4,
    )


def multi_frequency_truth():
    """Weaker excitation of competing frequencies: bending dominated pipes."""
    return CeParameterSet(
        fhat_min=0.13,
        fhat_max=0.19,
        low=CeCurve(ce0=0.15, ad_peak=0.15, ce_max=0.3, ad_zero=0.35),
        high=CeCurve(ce0=0.1, ad_peak=0.12, ce_max=0.25, ad_zero=0.3),
        added_mass=1.0,
        damping=0.8,
    )


def benchmark_pipe(key):
    pipe = reference_pipe(key)
    return reference_pipe(key, stress_per_curvature=BENCHMARK_MODULUS * pipe.outer_diameter / 2.0)


def sheared_profile(length, top_speed, bottom_fraction=0.0):
    return CurrentProfile.linear_shear(length, bottom_fraction * top_speed, top_speed)


def benchmark_population(truth, pipe_keys, n_cases, seed=0, speed_range=(0.4, 1.2),
                         third_harmonic_ratio=0.0, noise=0.0, prefix="case"):
    """``n_cases`` linearly sheared cases cycling over ``pipe_keys``."""
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_cases):
        key = pipe_keys[i % len(pipe_keys)]
        pipe = benchmark_pipe(key)
        top = float(rng.uniform(*speed_range))
        bottom = float(rng.uniform(0.0, 0.5))
        ratio = third_harmonic_ratio(rng) if callable(third_harmonic_ratio) else third_harmonic_ratio
        cases.append(
            synthesize_case(
                pipe,
                sheared_profile(pipe.length, round(top, 4), round(bottom, 4)),
                truth,
                noise=noise,
                seed=int(rng.integers(2**31)),
                third_harmonic_ratio=ratio,
                name=f"{prefix}-{i:03d}-{key}",
            )
        )
    return cases
