"""Command-line workflow: characterize, cluster, classify, calibrate, predict, evaluate.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio
from .calibrate import MIN_BUDGET, CalibrationError, calibrate_all
from .characterize import FeatureVector, ResponseError, features
from .clustering import ALGORITHMS, ClusteringError, classify, fit
from .evaluate import compare_strategies, evaluate
from .hydro import ce_grid, default_params
from .predictor import ConvergenceError, SNCurve, predict
from .synthetic import benchmark_population, multi_frequency_truth, single_frequency_truth

log = logging.getLogger("adaptviv")

CASE_FILES = """\
case JSON (one file per case, *.json in the --cases directory):
  {"schema_version": 1, "kind": "case", "name": str,
   "pipe": {"name", "length" [m], "outer_diameter" [m], "bending_stiffness" [N m^2],
            "mean_tension" [N], "mass_ratio" | "mass_per_length" [kg/m],
            "stress_per_curvature" [Pa m]},
   "profile": {"z": [m, starting at 0, ending at L], "U": [m/s]},
   "strouhal": float, "dominant_frequency": Hz or null,
   "measured_fatigue": [1/year per sensor] or null,
   "sensors": [{"z": m, "dt": s, "encoding": "csv"|"base64", "stress": Pa samples}],
   "meta": {}}"""

PARAMS_FILES = """\
parameter JSON: {"schema_version": 1, "kind": "ce_params", "fhat_min", "fhat_max",
   "low": {"ce0", "ad_peak", "ce_max", "ad_zero"}, "high": {...}, "added_mass", "damping"}
per-cluster parameter JSON: {"schema_version": 1, "kind": "ce_param_sets",
   "clusters": {label: parameter JSON}, "skipped": {label: reason}}"""

FEATURE_FILES = "feature CSV: header case,n,R31,F (mode order, 3x/1x stress ratio, stiffness ratio)"
LABEL_FILES = "label CSV: header case,cluster"
MODEL_FILES = ('model JSON: {"schema_version": 1, "kind": "cluster_model", "algorithm", "k", "seed",\n'
               '   "scaler": {"x_min", "x_max"}, "labels", "weights", "means", "covariances" | "centroids"}')


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _sn(text):
    try:
        return SNCurve.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _point(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected n,R31,F")
    return [float(p) for p in parts]


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -------------------------------------------------------------

def cmd_synth(args):
    out = _outdir(args.out)
    cases_dir = _outdir(out / "cases")
    rng = np.random.default_rng(args.seed)
    seeds = rng.integers(2**31, size=2)
    truths = {"tension": single_frequency_truth(), "bending": multi_frequency_truth()}
    pops = benchmark_population(
        truths["tension"], ["ndp", "shell"], args.n_cases, seed=int(seeds[0]),
        third_harmonic_ratio=lambda r: float(r.uniform(0.2, 0.4)), noise=args.noise, prefix="a",
    ) + benchmark_population(
        truths["bending"], ["exxonmobil", "hanoytangen"], args.n_cases, seed=int(seeds[1]),
        third_harmonic_ratio=lambda r: float(r.uniform(0.0, 0.1)), noise=args.noise, prefix="b",
    )
    for case in pops:
        dataio.save_case(case, cases_dir / f"{case.name}.json", args.encoding)
    for name, t in truths.items():
        dataio.save_params(t, out / f"truth-{name}.json")
    dataio.save_params(default_params(), out / "init.json")
    dataio.save_sn(args.sn, out / "sn.json")
    print(f"wrote {len(pops)} cases to {cases_dir}")


def cmd_characterize(args):
    cases = dataio.load_cases(args.cases)

    def one(case):
        try:
            return case.name, features(case, args.ca)
        except ResponseError as exc:
            log.warning("skipping %s: %s", case.name, exc)
            return case.name, None

    rows = [(n, fv) for n, fv in _map(one, cases, args.jobs) if fv is not None]
    if not rows:
        raise ResponseError("no case produced usable features")
    dataio.write_features(args.out, rows)
    print(f"wrote features for {len(rows)} of {len(cases)} cases to {args.out}")


def cmd_cluster(args):
    rows = dataio.read_features(args.features)
    if not rows:
        raise ClusteringError("feature table is empty")
    names = [n for n, _ in rows]
    model = fit([fv for _, fv in rows], args.algo, args.k, args.seed)
    out = _outdir(args.out)
    dataio.write_labels(out / "labels.csv", names, model.labels)
    dataio.save_model(model, out / "model.json")
    if args.plots:
        from . import plotting

        plotting.cluster_scatter([fv.as_array() for _, fv in rows], model.labels, out / "clusters.png")
    counts = np.bincount(model.labels, minlength=args.k)
    print("cluster sizes: " + ", ".join(f"{i}: {c}" for i, c in enumerate(counts)))


def cmd_classify(args):
    model = dataio.load_model(args.model)
    if args.point is not None:
        items = [("point", FeatureVector(*args.point))]
    else:
        items = dataio.read_features(args.features)
    rows = []
    for name, fv in items:
        label, post = classify(model, fv.as_array())
        rows.append([name, label, *[repr(float(p)) for p in post]])
    header = ["case", "cluster", *[f"p{j}" for j in range(model.k)]]
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _group(cases, labels):
    if labels is None:
        return {"all": list(cases)}
    groups = {}
    for c in cases:
        if c.name not in labels:
            raise dataio.SchemaError("", f"case {c.name!r} has no cluster label")
        groups.setdefault(labels[c.name], []).append(c)
    return groups


def cmd_calibrate(args):
    cases = dataio.load_cases(args.cases)
    init = dataio.load_params(args.params) if args.params else default_params()
    labels = dataio.read_labels(args.labels) if args.labels else None
    groups = _group(cases, labels)
    results, skipped = calibrate_all(groups, init, args.sn, budget=args.budget, jobs=args.jobs)
    if not results:
        raise CalibrationError("no cluster had enough cases to calibrate: " + json.dumps(skipped))
    out = _outdir(args.out)
    dataio.save_param_sets({k: r.params for k, r in results.items()}, out / "params.json", skipped)
    rows = [(k, ev, repr(obj)) for k, r in results.items() for ev, obj in r.history]
    _write_csv(out / "convergence.csv", ["cluster", "evaluation", "objective"], rows)
    for k, r in results.items():
        print(f"cluster {k}: {len(groups[k])} cases, objective {r.initial_objective:.4g} -> {r.objective:.4g} "
              f"({r.evaluations} evaluations)")
    for k, why in skipped.items():
        print(f"cluster {k}: skipped ({why})")


def _choose_params(cases, param_sets, labels, model, fallback, ca):
    if "all" in param_sets:
        return {c.name: param_sets["all"] for c in cases}
    chosen = {}
    for c in cases:
        if labels is not None:
            if c.name not in labels:
                raise dataio.SchemaError("", f"case {c.name!r} has no cluster label")
            lab = labels[c.name]
        elif model is not None:
            lab = str(classify(model, features(c, ca).as_array())[0])
        else:
            raise UsageError("per-cluster parameters need --labels or --model")
        if lab in param_sets:
            chosen[c.name] = param_sets[lab]
        elif fallback is not None:
            log.warning("cluster %s has no calibrated parameters; %s uses the fallback set", lab, c.name)
            chosen[c.name] = fallback
        else:
            raise CalibrationError(f"no parameters for cluster {lab} (case {c.name!r}); pass --fallback")
    return chosen


def cmd_predict(args):
    path = Path(args.cases)
    cases = dataio.load_cases(path) if path.is_dir() else [dataio.load_case(path)]
    param_sets = dataio.load_param_sets(args.params)
    labels = dataio.read_labels(args.labels) if args.labels else None
    model = dataio.load_model(args.model) if args.model else None
    fallback = dataio.load_params(args.fallback) if args.fallback else None
    chosen = _choose_params(cases, param_sets, labels, model, fallback, args.ca)
    results = _map(lambda c: predict(c, chosen[c.name], args.sn, args.st), cases, args.jobs)

    out = _outdir(args.out)
    doc = {"schema_version": dataio.SCHEMA_VERSION, "kind": "predictions", "sn": args.sn.to_dict(), "cases": []}
    rows = []
    for case, res in zip(cases, results):
        entry = {"case": case.name, **res.to_dict()}
        if case.measured_fatigue is not None:
            entry["measured_max_fatigue"] = float(case.measured_fatigue.max())
        doc["cases"].append(entry)
        meas = case.measured_fatigue if case.measured_fatigue is not None else [None] * len(case.sensors)
        for z, s, d, m in zip(res.sensor_positions, res.stress_std, res.damage, meas):
            rows.append([case.name, repr(float(z)), repr(float(s)), repr(float(d)), "" if m is None else repr(float(m))])
    dataio.write_json(out / "predictions.json", doc)
    _write_csv(out / "sensors.csv", ["case", "z", "stress_std", "damage", "measured"], rows)
    print(f"predicted {len(cases)} cases; max fatigue {max(r.max_fatigue for r in results):.4g} 1/year")


def _report_from(path):
    doc = dataio.read_json(path)
    if doc.get("kind") != "predictions":
        raise dataio.SchemaError("/kind", f"{path} is not a predictions file")
    pairs, names = [], []
    for i, c in enumerate(doc["cases"]):
        if "measured_max_fatigue" not in c:
            raise dataio.SchemaError(f"/cases/{i}", f"case {c['case']!r} has no measured fatigue")
        pairs.append((c["measured_max_fatigue"], c["max_fatigue"]))
        names.append(c["case"])
    return evaluate(pairs, names)


def cmd_evaluate(args):
    report = _report_from(args.predictions)
    out = _outdir(args.out)
    doc = {"schema_version": dataio.SCHEMA_VERSION, "kind": "evaluation", **report.to_dict()}
    if args.baseline:
        base = _report_from(args.baseline)
        doc["comparison"] = {str(k): v for k, v in compare_strategies(base, report).items()}
    dataio.write_json(out / "report.json", doc)
    _write_csv(out / "scatter.csv", ["case", "measured", "predicted", "ratio"], report.csv_rows())
    if args.plots:
        from . import plotting

        plotting.fatigue_scatter(report, out / "scatter.png")
    fr = report.fraction_within_factor
    print(f"{report.case_count} cases: within x3 {fr[3]:.3f}, within x5 {fr[5]:.3f}, "
          f"worst over {report.worst_overprediction_factor:.3g}, worst under {report.worst_underprediction_factor:.3g}")
    if args.baseline:
        for k, v in doc["comparison"].items():
            print(f"within x{k}: baseline {v['single']:.3f} -> {v['adaptive']:.3f} ({v['delta']:+.3f})")


def cmd_ce_grid(args):
    params = dataio.load_params(args.params) if args.params else default_params()
    fhat = np.linspace(0.8 * params.fhat_min, 1.2 * params.fhat_max, args.n_fhat)
    ad = np.linspace(0.0, 1.2 * params.max_ad_zero, args.n_ad)
    grid = ce_grid(params, fhat, ad)
    out = _outdir(args.out)
    rows = [(repr(float(f)), repr(float(a)), repr(float(grid[i, j]))) for i, f in enumerate(fhat) for j, a in enumerate(ad)]
    _write_csv(out / "ce_grid.csv", ["fhat", "ad", "ce"], rows)
    if args.plots:
        from . import plotting

        plotting.ce_contour(params, out / "ce.png")
    print(f"wrote {len(rows)} grid points to {out / 'ce_grid.csv'}")


# --- parser ------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="adaptviv", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, fn, help, epilog):
        sp = sub.add_parser(name, help=help, description=help, epilog=epilog,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(func=fn)
        return sp

    def add_sn(sp):
        sp.add_argument("--sn", type=_sn, default=SNCurve(), metavar="m=M,loga=A",
                        help="single-slope S-N curve, stress range in MPa (default m=3,loga=11.63)")

    def add_jobs(sp):
        sp.add_argument("--jobs", type=_positive_int, default=1, help="worker threads across cases (default 1)")

    def add_plots(sp):
        sp.add_argument("--no-plots", dest="plots", action="store_false", help="skip the PNG figure")

    sp = command("synth", cmd_synth, "generate a two-population synthetic benchmark",
                 "writes OUT/cases/*.json, OUT/truth-tension.json, OUT/truth-bending.json, OUT/init.json "
                 "and OUT/sn.json\n\n" + CASE_FILES + "\n" + PARAMS_FILES)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--n-cases", type=_positive_int, default=8, help="cases per population (default 8)")
    sp.add_argument("--noise", type=float, default=0.0, help="relative noise std in [0, 0.5] (default 0)")
    sp.add_argument("--encoding", choices=["csv", "base64"], default="csv", help="sample encoding")
    sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    add_sn(sp)

    sp = command("characterize", cmd_characterize, "extract clustering features from case records",
                 "reads: " + CASE_FILES + "\nwrites: " + FEATURE_FILES)
    sp.add_argument("--cases", required=True, help="directory of case JSON files")
    sp.add_argument("--out", required=True, help="feature CSV path")
    sp.add_argument("--ca", type=float, default=1.0, help="added-mass coefficient for mode matching (default 1)")
    add_jobs(sp)

    sp = command("cluster", cmd_cluster, "cluster feature vectors",
                 "reads: " + FEATURE_FILES + "\nwrites OUT/labels.csv, OUT/model.json, OUT/clusters.png\n"
                 + LABEL_FILES + "\n" + MODEL_FILES)
    sp.add_argument("--features", required=True, help="feature CSV")
    sp.add_argument("--algo", choices=ALGORITHMS, default="gmm", help="clustering algorithm (default gmm)")
    sp.add_argument("--k", type=_positive_int, default=3, help="number of clusters (default 3)")
    sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    sp.add_argument("--out", required=True, help="output directory")
    add_plots(sp)

    sp = command("classify", cmd_classify, "assign new feature vectors to clusters of a Gaussian mixture model",
                 "reads: " + MODEL_FILES + "\n" + FEATURE_FILES
                 + "\nwrites CSV case,cluster,p0..p{k-1} (posterior probabilities)")
    sp.add_argument("--model", required=True, help="model JSON from `cluster --algo gmm`")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--point", type=_point, metavar="n,R31,F", help="one feature triple")
    src.add_argument("--features", help="feature CSV")
    sp.add_argument("--out", help="output CSV (default stdout)")

    sp = command("calibrate", cmd_calibrate, "calibrate one excitation parameter set per cluster",
                 "reads: " + CASE_FILES + "\n" + LABEL_FILES + "\n" + PARAMS_FILES
                 + "\nwrites OUT/params.json (per-cluster sets) and OUT/convergence.csv "
                 "(cluster,evaluation,objective)")
    sp.add_argument("--cases", required=True, help="directory of case JSON files with measured fatigue")
    sp.add_argument("--labels", help="label CSV; without it all cases form one cluster labelled 'all'")
    sp.add_argument("--params", help="initial parameter JSON (default built-in set)")
    sp.add_argument("--budget", type=int, default=2000, help=f"objective evaluations per cluster (>= {MIN_BUDGET})")
    sp.add_argument("--out", required=True, help="output directory")
    add_sn(sp)
    add_jobs(sp)

    sp = command("predict", cmd_predict, "predict VIV stress and fatigue",
                 "reads: " + CASE_FILES + "\n" + PARAMS_FILES + "\n" + LABEL_FILES + "\n" + MODEL_FILES
                 + "\nwrites OUT/predictions.json and OUT/sensors.csv (case,z,stress_std,damage,measured)")
    sp.add_argument("--cases", required=True, help="case JSON file or directory")
    sp.add_argument("--params", required=True, help="parameter JSON or per-cluster parameter JSON")
    sp.add_argument("--labels", help="label CSV selecting each case's cluster")
    sp.add_argument("--model", help="model JSON used to classify cases when --labels is absent")
    sp.add_argument("--fallback", help="parameter JSON for cases whose cluster has no calibrated set")
    sp.add_argument("--st", type=_positive_float, default=None, help="Strouhal number (default: per case)")
    sp.add_argument("--ca", type=float, default=1.0, help="added-mass coefficient for classification features")
    sp.add_argument("--out", required=True, help="output directory")
    add_sn(sp)
    add_jobs(sp)

    sp = command("evaluate", cmd_evaluate, "compare predicted and measured maximum fatigue",
                 "reads OUT/predictions.json from `predict`\n"
                 "writes OUT/report.json, OUT/scatter.csv (case,measured,predicted,ratio), OUT/scatter.png")
    sp.add_argument("--predictions", required=True, help="predictions JSON")
    sp.add_argument("--baseline", help="second predictions JSON to compare against (e.g. single-set)")
    sp.add_argument("--out", required=True, help="output directory")
    add_plots(sp)

    sp = command("ce-grid", cmd_ce_grid, "tabulate the excitation-coefficient surface",
                 "reads: " + PARAMS_FILES + "\nwrites OUT/ce_grid.csv (fhat,ad,ce) and OUT/ce.png")
    sp.add_argument("--params", help="parameter JSON (default built-in set)")
    sp.add_argument("--n-fhat", type=_positive_int, default=61)
    sp.add_argument("--n-ad", type=_positive_int, default=61)
    sp.add_argument("--out", required=True, help="output directory")
    add_plots(sp)
    return p


DATA_ERRORS = (
    dataio.SchemaError, ResponseError, ClusteringError, CalibrationError, ConvergenceError,
    FileNotFoundError, json.JSONDecodeError, ValueError, OSError,
)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "budget", MIN_BUDGET) < MIN_BUDGET:
        parser.error(f"--budget must be >= {MIN_BUDGET}")
    if args.command == "synth" and not 0.0 <= args.noise <= 0.5:
        parser.error("--noise must be within [0, 0.5]")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"adaptviv: error: {exc}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"adaptviv: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
