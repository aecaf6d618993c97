"""Random configurations shared by unit and acceptance tests."""
import numpy as np

from adaptviv.dataio import reference_pipe
from adaptviv.hydro import CeCurve, CeParameterSet
from adaptviv.predictor import FrequencyZone
from adaptviv.structural import CurrentProfile, wet_natural_frequencies

KEYS = ("ndp", "shell", "hanoytangen", "exxonmobil", "miami2")


def random_params(rng):
    def curve():
        peak = rng.uniform(0.1, 0.5)
        cmax = rng.uniform(0.2, 1.0)
        return CeCurve(rng.uniform(0.0, cmax), peak, cmax, peak + rng.uniform(0.1, 0.6))

    lo = rng.uniform(0.1, 0.15)
    return CeParameterSet(lo, lo + rng.uniform(0.04, 0.12), curve(), curve(),
                          added_mass=rng.uniform(0.5, 1.5), damping=rng.uniform(0.1, 1.0))


def random_single_zone(rng):
    """Pipe, sheared profile, params and one zone whose middle sits in the excitation range."""
    key = KEYS[rng.integers(len(KEYS))]
    pipe = reference_pipe(key, stress_per_curvature=1e9)
    params = random_params(rng)
    mode = int(rng.integers(1, 16))
    f = float(wet_natural_frequencies(pipe, mode, params.added_mass))
    u_mid = f * pipe.outer_diameter / params.fhat_mid
    shear = rng.uniform(0.0, 0.6)
    profile = CurrentProfile.linear_shear(pipe.length, u_mid * (1 + shear / 2), u_mid * (1 - shear / 2))
    a, b = np.sort(rng.uniform(0.0, pipe.length, 2))
    b = max(b, a + 0.1 * pipe.length)
    zone = FrequencyZone(f, mode, float(a), float(min(b, pipe.length)))
    return pipe, profile, params, zone


def plain(params):
    """CeParameterSet as the plain dict understood by the oracles."""
    return {
        "fmin": params.fhat_min, "fmax": params.fhat_max, "cd": params.damping,
        "low": (params.low.ce0, params.low.ad_peak, params.low.ce_max, params.low.ad_zero),
        "high": (params.high.ce0, params.high.ad_peak, params.high.ce_max, params.high.ad_zero),
    }


PLANTED_MEANS = np.array([[0.15, 0.2, 0.2], [0.8, 0.3, 0.5], [0.4, 0.85, 0.85]])


def planted_blobs(seed, n=300, std=0.03, means=PLANTED_MEANS):
    """``n`` points from len(means) isotropic Gaussians; returns (points, labels)."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % len(means)
    return means[labels] + std * rng.standard_normal((n, means.shape[1])), labels


def three_group_features(seed=0):
    """Feature triples (n, R, F) with the three-group structure of the field campaigns.

    Tension-dominated low modes with low F and noticeable 3x stress, bending
    dominated moderate modes with high F and small 3x stress, and high-mode
    low-F responses.
    """
    rng = np.random.default_rng(seed)
    groups = [
        (rng.uniform(3, 14, 40), rng.uniform(0.15, 0.45, 40), rng.uniform(0.01, 0.12, 40)),
        (rng.uniform(8, 30, 40), rng.uniform(0.0, 0.15, 40), rng.uniform(0.45, 0.8, 40)),
        (rng.uniform(35, 60, 40), rng.uniform(0.05, 0.3, 40), rng.uniform(0.02, 0.15, 40)),
    ]
    rows, labels = [], []
    for g, (n, r, f) in enumerate(groups):
        rows.append(np.column_stack([np.round(n), r, f]))
        labels += [g] * len(n)
    return np.vstack(rows), np.array(labels)
