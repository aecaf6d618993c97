"""Per-cluster calibration of the excitation-coefficient parameter set.

The objective is the mean squared error between predicted and measured
per-sensor fatigue damage, taken on log10 damage. Nelder-Mead runs on the
log of each parameter's ratio to its starting value, inside a multiplicative
box; invalid parameter sets are rejected with a flat penalty. The optimizer
restarts from the best point whenever a run stalls, until the evaluation
budget is spent.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .hydro import CeParameterSet
from .predictor import ConvergenceError, predict

log = logging.getLogger(__name__)

BOX = (0.2, 5.0)
PENALTY = 1e6
# Damage below this fraction of a case's largest measured value is floored
# before taking logs, so node sensors do not dominate the metric.
DAMAGE_FLOOR = 1e-6
MIN_CASES = 3
MIN_BUDGET = 200


class CalibrationError(RuntimeError):
    pass


def _log_damage(values, ref):
    floor = DAMAGE_FLOOR * ref if ref > 0 else np.finfo(float).tiny
    return np.log10(np.maximum(values, floor))


def log_errors(predicted, measured):
    """Per-sensor log10(pred) - log10(meas) with a shared relative floor."""
    predicted = np.asarray(predicted, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if predicted.shape != measured.shape:
        raise ValueError("predicted and measured damage have different sensor counts")
    ref = float(measured.max()) if measured.size else 0.0
    return _log_damage(predicted, ref) - _log_damage(measured, ref)


def fatigue_mse(params, cases, sn, jobs=1):
    """Mean over all sensors of all cases of the squared log10 damage error."""
    for c in cases:
        if c.measured_fatigue is None:
            raise ValueError(f"case {c.name!r} has no measured fatigue")
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            preds = list(pool.map(lambda c: predict(c, params, sn), cases))
    else:
        preds = [predict(c, params, sn) for c in cases]
    errs = np.concatenate([log_errors(p.damage, c.measured_fatigue) for p, c in zip(preds, cases)])
    return float(np.mean(errs**2))


class _BudgetSpent(Exception):
    pass


@dataclass
class CalibrationResult:
    params: CeParameterSet
    objective: float
    initial_objective: float
    evaluations: int
    restarts: int
    history: list = field(default_factory=list, repr=False)  # (evaluation, best objective)


class _Objective:
    def __init__(self, cases, init, sn, budget, jobs):
        self.cases = cases
        self.sn = sn
        self.budget = budget
        self.jobs = jobs
        self.base = init.to_vector()
        self.free = self.base != 0
        self.lo = math.log(BOX[0])
        self.hi = math.log(BOX[1])
        self.calls = 0
        self.best_value = math.inf
        self.best_x = None
        self.history = []

    def params(self, x):
        v = self.base.copy()
        v[self.free] = self.base[self.free] * np.exp(np.clip(x, self.lo, self.hi))
        return v

    def __call__(self, x):
        if self.calls >= self.budget:
            raise _BudgetSpent
        self.calls += 1
        v = self.params(x)
        if not CeParameterSet.is_valid_vector(v):
            return PENALTY
        try:
            value = fatigue_mse(CeParameterSet.from_vector(v), self.cases, self.sn, self.jobs)
        except ConvergenceError:
            return PENALTY
        if value < self.best_value:
            self.best_value = value
            self.best_x = np.array(x, dtype=float)
            self.history.append((self.calls, value))
        return value


def calibrate_cluster(cases, init, sn, budget=2000, step=0.15, jobs=1, min_cases=MIN_CASES):
    """Fit one parameter set to a group of cases. Deterministic for fixed inputs."""
    if len(cases) < min_cases:
        raise CalibrationError(f"need at least {min_cases} cases, got {len(cases)}")
    if budget < MIN_BUDGET:
        raise CalibrationError(f"budget must be >= {MIN_BUDGET} evaluations")
    obj = _Objective(cases, init, sn, budget, jobs)
    dim = int(obj.free.sum())
    x0 = np.zeros(dim)
    init_value = obj(x0)
    if init_value >= PENALTY:
        raise CalibrationError("initial parameter set is infeasible")
    bounds = [(obj.lo, obj.hi)] * dim
    restarts = 0
    scale = step
    while obj.calls < budget:
        start = obj.best_x
        simplex = np.vstack([start, start + scale * np.eye(dim)])
        simplex = np.clip(simplex, obj.lo, obj.hi)
        before = obj.best_value
        try:
            minimize(
                obj, start, method="Nelder-Mead", bounds=bounds,
                options={"initial_simplex": simplex, "maxfev": budget, "xatol": 1e-4, "fatol": 1e-9, "adaptive": True},
            )
        except _BudgetSpent:
            break
        restarts += 1
        if obj.best_value == 0.0:
            break
        # alternate between wide and narrow restarts once progress stalls
        scale = step if before - obj.best_value > 1e-9 else (step / 4 if scale == step else step)
    result = CeParameterSet.from_vector(obj.params(obj.best_x))
    log.info("calibrated %d cases: objective %.4g -> %.4g in %d evaluations",
             len(cases), init_value, obj.best_value, obj.calls)
    return CalibrationResult(result, obj.best_value, init_value, obj.calls, restarts, obj.history)


def calibrate_all(clustered_cases, init, sn, budget=2000, jobs=1, min_cases=MIN_CASES):
    """Calibrate every cluster with enough cases.

    Returns ``(results, skipped)``; ``skipped`` maps cluster label to reason.
    """
    results, skipped = {}, {}
    for label in sorted(clustered_cases, key=str):
        cases = [c for c in clustered_cases[label] if c.measured_fatigue is not None]
        if len(cases) < min_cases:
            skipped[label] = f"only {len(cases)} usable case(s); need {min_cases}"
            log.info("cluster %s skipped: %s", label, skipped[label])
            continue
        results[label] = calibrate_cluster(cases, init, sn, budget, jobs=jobs, min_cases=min_cases)
    return results, skipped
