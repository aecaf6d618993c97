"""Acceptance criteria, one test each, at the stated tolerances and time limits."""
import itertools
import math
import time

import numpy as np
import pytest

from adaptviv.calibrate import calibrate_cluster, fatigue_mse
from adaptviv.characterize import CaseRecord, SensorSeries, features, stress_ratio
from adaptviv.clustering import adjusted_rand_index, classify, fit, gmm_fit
from adaptviv.dataio import reference_pipe
from adaptviv.evaluate import evaluate
from adaptviv.hydro import CeParameterSet, default_params
from adaptviv.predictor import SNCurve, ZoneBalance, computation_grid, energy_balance, predict
from adaptviv.structural import CurrentProfile, modal_info, natural_frequencies, wave_speeds
from adaptviv.synthetic import benchmark_population, multi_frequency_truth, single_frequency_truth
from acceptance_report import record
from builders import PLANTED_MEANS, three_group_features, plain, planted_blobs, random_single_zone
from oracles import TABLE, brute_modal, residual_scan


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_formula_oracle():
    with Timer() as t:
        worst = 0.0
        for key in TABLE:
            pipe = reference_pipe(key)
            for n in range(1, 31):
                ref = brute_modal(key, n)
                info = modal_info(pipe, n)
                f_s, f_b, f_t = natural_frequencies(pipe, n)
                c_s, c_b = wave_speeds(pipe, 2 * math.pi * f_t)
                got = {"fs": f_s, "fb": f_b, "ft": f_t, "F": info.stiffness_ratio, "cs": c_s, "cb": c_b}
                for name, val in got.items():
                    worst = max(worst, abs(float(val) - ref[name]) / abs(ref[name]))
        ndp = reference_pipe("ndp")
        cs = wave_speeds(ndp, 1.0)[0]
        f1 = modal_info(ndp, 1).stiffness_ratio
    ok = worst <= 1e-10 and abs(cs - 65.43) < 0.005 and abs(f1 - 0.0080) < 5e-5 and t.seconds < 1
    assert record(1, "formula oracle", ok,
                  f"max rel dev {worst:.2e} (<=1e-10), NDP C_s {cs:.3f} m/s, F(1) {f1:.5f}, {t.seconds:.3f} s")


def test_criterion_02_sn_curve():
    with Timer() as t:
        sn = SNCurve(m=3.0, log_a=11.63)
        rel = abs(sn.cycles_to_failure(1.0) - 10**11.63) / 10**11.63
        s = np.array([0.5, 1.0, 7.3, 40.0])
        factor = sn.damage_per_cycle(2 * s) / sn.damage_per_cycle(s)
    ok = rel <= 1e-9 and np.allclose(factor, 8.0, rtol=1e-12) and t.seconds < 1
    assert record(2, "S-N curve", ok, f"N(1 MPa) rel err {rel:.1e}, doubling factor {factor.min():.12g}, "
                  f"{t.seconds:.3f} s")


def test_criterion_03_stress_ratio():
    pipe = reference_pipe("ndp")
    fs, f1 = 200.0, 3.5
    t_ = np.arange(8192) / fs
    errors = {}
    with Timer() as t:
        for ratio in (0.0, 0.25, 1.0):
            rows = [a * (np.sin(2 * np.pi * f1 * t_) + ratio * np.sin(2 * np.pi * 3 * f1 * t_ + 0.4))
                    for a in (0.3, 1.0, 0.6, 0.8)]
            sensors = [SensorSeries(z, 1 / fs, r) for z, r in zip((5.0, 12.0, 20.0, 30.0), rows)]
            case = CaseRecord("two-tone", pipe, CurrentProfile.uniform(38.0, 0.5), sensors)
            errors[ratio] = abs(stress_ratio(case, f1) - ratio)
    ok = max(errors.values()) <= 0.02 and t.seconds < 5
    detail = ", ".join(f"R={k}: err {v:.4f}" for k, v in errors.items())
    assert record(3, "stress-ratio recovery", ok, f"{detail} (<=0.02), {t.seconds:.2f} s")


def test_criterion_04_clustering_recovery():
    sep = min(np.linalg.norm(a - b) for a, b in itertools.combinations(PLANTED_MEANS, 2))
    with Timer() as t:
        x, truth = planted_blobs(11, n=300, std=0.03)
        labels = {algo: fit(x, algo, 3, seed=0).labels for algo in ("kmeans", "gmm", "spectral")}
        ari = {algo: adjusted_rand_index(lab, truth) for algo, lab in labels.items()}
        cross = [adjusted_rand_index(labels[a], labels[b]) for a, b in itertools.combinations(labels, 2)]
    ok = sep >= 0.4 and min(ari.values()) >= 0.95 and min(cross) >= 0.9 and t.seconds < 10
    detail = ", ".join(f"{k} {v:.3f}" for k, v in ari.items())
    assert record(4, "clustering recovery", ok,
                  f"ARI {detail} (>=0.95), cross min {min(cross):.3f} (>=0.9), separation {sep:.2f}, {t.seconds:.2f} s")


def test_criterion_05_em_monotonicity():
    # overlapping blobs so that EM runs for many iterations
    violations, steps, stops = 0, 0, {}
    with Timer() as t:
        for seed in range(100):
            x, _ = planted_blobs(seed, n=150, std=0.25)
            model = gmm_fit(x, 3, seed=seed)
            hist = np.array(model.log_likelihood_history)
            violations += int(np.sum(np.diff(hist) < 0))
            steps += hist.size
            stops[model.em_stop] = stops.get(model.em_stop, 0) + 1
    ok = violations == 0 and t.seconds < 30
    assert record(5, "EM monotonicity", ok,
                  f"{violations} violations over 100 seeds ({steps} iterations; stop reasons {stops}), {t.seconds:.2f} s")


def test_criterion_06_energy_balance():
    worst_ad, worst_res = 0.0, 0.0
    with Timer() as t:
        for seed in range(20):
            pipe, profile, params, zone = random_single_zone(np.random.default_rng(1000 + seed))
            ad = energy_balance(zone, pipe, profile, params)
            z = computation_grid(pipe)
            grid, power = residual_scan(z, profile(z), pipe.outer_diameter, zone.mode, pipe.length,
                                        zone.frequency, zone.z_start, zone.z_end, plain(params))
            reduced = power[1:] / grid[1:]
            root = grid[1:][np.argmax(reduced <= 0)] if np.any(reduced <= 0) else grid[-1]
            worst_ad = max(worst_ad, abs(ad - root))
            if ad > 0:
                p_in, p_out = ZoneBalance(zone, pipe, profile, params).power(ad)
                worst_res = max(worst_res, abs(p_in - p_out) / p_in)
    ok = worst_ad <= 1e-3 and worst_res < 1e-6 and t.seconds < 30
    assert record(6, "energy balance", ok,
                  f"max |AD - scan| {worst_ad:.2e} (<=1e-3), max rel residual {worst_res:.1e} (<1e-6), "
                  f"{t.seconds:.2f} s")


def perturb(params, rng, spread=0.3):
    """Every parameter moved by +-spread, redrawn until the set is valid."""
    while True:
        v = params.to_vector() * (1 + spread * rng.choice([-1.0, 1.0], 12))
        if CeParameterSet.is_valid_vector(v):
            return CeParameterSet.from_vector(v)


@pytest.mark.slow
def test_criterion_07_round_trip_calibration(sn):
    truth = single_frequency_truth()
    cases = benchmark_population(truth, ["ndp", "shell"], 12, seed=7)
    init = perturb(truth, np.random.default_rng(7))
    with Timer() as t:
        res = calibrate_cluster(cases, init, sn, budget=2000)
    worst = 1.0
    for case in cases:
        pred = predict(case, res.params, sn).damage
        meas = case.measured_fatigue
        both_zero = (pred == 0) & (meas == 0)
        with np.errstate(divide="ignore"):
            r = pred[~both_zero] / meas[~both_zero]
        worst = max(worst, float(np.max(np.maximum(r, 1 / r))) if r.size else 1.0)
    ok = res.objective <= 0.05 and worst <= 1.5 and t.seconds < 600
    assert record(7, "round-trip calibration", ok,
                  f"log-MSE {res.initial_objective:.3g} -> {res.objective:.2e} (<=0.05), worst sensor factor "
                  f"{worst:.3f} (<=1.5), {res.evaluations} evaluations, {t.seconds:.0f} s")


def two_populations(seed):
    rng = np.random.default_rng(seed)
    a_seed, b_seed = (int(s) for s in rng.integers(2**31, size=2))
    a = benchmark_population(single_frequency_truth(), ["ndp", "shell"], 8, seed=a_seed,
                             third_harmonic_ratio=lambda r: float(r.uniform(0.2, 0.4)), prefix="a")
    b = benchmark_population(multi_frequency_truth(), ["exxonmobil", "hanoytangen"], 8, seed=b_seed,
                             third_harmonic_ratio=lambda r: float(r.uniform(0.0, 0.1)), prefix="b")
    return a + b


def within3_single_vs_adaptive(cases, sn, seed, budget):
    init = default_params()
    single = calibrate_cluster(cases, init, sn, budget=budget).params
    model = gmm_fit([features(c) for c in cases], 2, seed=seed)
    groups = {}
    for case, lab in zip(cases, model.labels):
        groups.setdefault(int(lab), []).append(case)
    adaptive = {lab: calibrate_cluster(g, init, sn, budget=budget).params for lab, g in groups.items()}
    label_of = {c.name: int(lab) for c, lab in zip(cases, model.labels)}
    meas = [c.measured_fatigue.max() for c in cases]
    names = [c.name for c in cases]
    rep_single = evaluate(zip(meas, [predict(c, single, sn).max_fatigue for c in cases]), names)
    rep_adapt = evaluate(zip(meas, [predict(c, adaptive[label_of[c.name]], sn).max_fatigue for c in cases]), names)
    return rep_single.fraction_within_factor[3], rep_adapt.fraction_within_factor[3]


@pytest.mark.slow
def test_criterion_08_adaptive_beats_single(sn):
    margins = []
    with Timer() as t:
        for seed in range(5):
            single, adaptive = within3_single_vs_adaptive(two_populations(seed), sn, seed, budget=400)
            margins.append((single, adaptive))
    ok = all(a - s >= 0.15 for s, a in margins) and t.seconds < 1800
    detail = ", ".join(f"{s:.2f}->{a:.2f}" for s, a in margins)
    assert record(8, "adaptive vs single", ok,
                  f"within-3 single->adaptive per seed: {detail}; min margin "
                  f"{min(a - s for s, a in margins):.3f} (>=0.15), {t.seconds:.0f} s")


def test_criterion_09_classification():
    with Timer() as t:
        x, groups = three_group_features(0)
        model = gmm_fit(x, 3, seed=0)
        bending = int(np.bincount(model.labels[groups == 1]).argmax())
        label, post = classify(model, [25.0, 0.1, 0.6])
    ok = label == bending and t.seconds < 5
    assert record(9, "classification", ok,
                  f"(n=25, R=0.1, F=0.6) -> cluster {label} (p={post[label]:.3f}), bending cluster {bending}, "
                  f"{t.seconds:.2f} s")


def test_criterion_10_evaluation_arithmetic():
    with Timer() as t:
        r = evaluate([(1.0, 2.0), (1.0, 4.0), (1.0, 6.0)])
        worst = evaluate([(1.0, 52.0), (1.0, 1.0), (2.0, 1.0)])
    ok = (r.fraction_within_factor[3] == 1 / 3 and r.fraction_within_factor[5] == 2 / 3
          and worst.worst_overprediction_factor == 52.0 and t.seconds < 1)
    assert record(10, "evaluation arithmetic", ok,
                  f"{{2,4,6}} -> {r.fraction_within_factor[3]:.4f}/{r.fraction_within_factor[5]:.4f}, "
                  f"worst over {worst.worst_overprediction_factor:g}, {t.seconds:.3f} s")
