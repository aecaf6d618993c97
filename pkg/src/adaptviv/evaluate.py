"""Predicted-versus-measured fatigue accuracy statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FACTORS = (3, 5)


@dataclass(frozen=True)
class CaseComparison:
    case: str
    measured: float
    predicted: float

    @property
    def ratio(self):
        return self.predicted / self.measured


@dataclass(frozen=True)
class EvaluationReport:
    cases: tuple
    fraction_within_factor: dict
    worst_overprediction_factor: float
    worst_underprediction_factor: float

    @property
    def case_count(self):
        return len(self.cases)

    @property
    def names(self):
        return [c.case for c in self.cases]

    def to_dict(self):
        return {
            "case_count": self.case_count,
            "fraction_within_factor": {str(k): v for k, v in self.fraction_within_factor.items()},
            "worst_overprediction_factor": self.worst_overprediction_factor,
            "worst_underprediction_factor": self.worst_underprediction_factor,
            "cases": [
                {"case": c.case, "measured": c.measured, "predicted": c.predicted, "ratio": c.ratio}
                for c in self.cases
            ],
        }

    def csv_rows(self):
        return [(c.case, repr(c.measured), repr(c.predicted), repr(c.ratio)) for c in self.cases]


def within_factor(ratios, k):
    r = np.asarray(ratios, dtype=float)
    return (r >= 1.0 / k) & (r <= k)


def evaluate(pairs, names=None, factors=FACTORS):
    """Accuracy report for ``(measured, predicted)`` damage pairs.

    A pair is within factor k when 1/k <= predicted/measured <= k.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no cases to evaluate")
    names = list(names) if names is not None else [f"case-{i}" for i in range(len(pairs))]
    if len(names) != len(pairs):
        raise ValueError("names and pairs differ in length")
    rows = []
    for name, (meas, pred) in zip(names, pairs):
        if not (meas > 0 and pred > 0):
            raise ValueError(f"case {name!r}: damage must be positive (measured={meas}, predicted={pred})")
        rows.append(CaseComparison(name, float(meas), float(pred)))
    ratios = np.array([c.ratio for c in rows])
    fractions = {k: float(np.mean(within_factor(ratios, k))) for k in sorted(factors)}
    return EvaluationReport(
        cases=tuple(rows),
        fraction_within_factor=fractions,
        worst_overprediction_factor=float(max(ratios.max(), 1.0)),
        worst_underprediction_factor=float(max(1.0 / ratios.min(), 1.0)),
    )


def compare_strategies(single, adaptive):
    """Side-by-side fractions of two reports over the same cases, with deltas."""
    if sorted(single.names) != sorted(adaptive.names):
        raise ValueError("reports cover different case sets")
    out = {}
    for k in sorted(set(single.fraction_within_factor) | set(adaptive.fraction_within_factor)):
        a = single.fraction_within_factor[k]
        b = adaptive.fraction_within_factor[k]
        out[k] = {"single": a, "adaptive": b, "delta": b - a}
    return out
