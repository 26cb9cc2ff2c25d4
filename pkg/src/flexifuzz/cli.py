"""Command-line interface.

Subcommands::

    flexifuzz train        --data d.csv --label-map 0:-1,1:1 [--model flexi1 --C 1 --sigma 1 ...]
    flexifuzz predict      --model-file m.json --data d.csv --label-map 0:-1,1:1
    flexifuzz benchmark    manifest.json
    flexifuzz noise-sweep  manifest.json [--noise-rates 0.05,0.1]
    flexifuzz sensitivity  --data d.csv --label-map ... --axes C,sigma
    flexifuzz stats        accuracy_matrix.csv [--q-alpha 3.102]

Exit codes: 0 success, 2 input or configuration error, 3 numerical
failure, 4 some benchmark items failed (the others were still written).
"""

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import decision_function, load_model, save_model, sign_labels, train
from .dataio import (
    load_csv,
    load_manifest_datasets,
    parse_label_mapping,
    read_json,
    standardize_fit_apply,
    stratified_kfold,
)
from .evaluation.metrics import confusion, metrics
from .evaluation.ranking import average_ranks, rank_report
from .evaluation.search import HyperGrid, grid_search
from .exceptions import DataError, FlexiFuzzError
from .experiment import (
    SENSITIVITY_AXES,
    Protocol,
    evaluate_family,
    prepare,
    sensitivity_grid,
)
from .families import FAMILIES, GridPoint, get_family
from .membership import imbalance_ratio
from .reports import csv_meta, provenance, read_csv_table, write_csv_table, write_json

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4
DEFAULT_NOISE_RATES = (0.05, 0.10, 0.20, 0.30, 0.40)
GRID_KEYS = {"C": "C_values", "sigma": "sigma_values", "lambda": "lambda_values",
             "k": "k_values", "gamma": "gamma_values"}


class InputError(Exception):
    """Bad flags or configuration detected by the CLI itself."""


def _err(msg):
    print(f"flexifuzz: error: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- parsing


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _label_column(text):
    return int(text) if text.lstrip("-").isdigit() else text


def _grid_from_args(args, base=None):
    base = base or HyperGrid()
    return base.override(
        C_values=args.C, sigma_values=args.sigma, lambda_values=args.lam,
        k_values=args.k, gamma_values=args.gamma,
    )


def _grid_from_manifest(doc):
    if doc is None:
        return HyperGrid()
    if not isinstance(doc, dict):
        raise InputError("manifest 'grid' must be an object")
    unknown = sorted(set(doc) - set(GRID_KEYS))
    if unknown:
        raise InputError(f"unknown grid axes in manifest: {', '.join(unknown)}")
    kwargs = {}
    for key, values in doc.items():
        values = values if isinstance(values, list) else [values]
        if not values:
            raise InputError(f"grid axis {key!r} is empty")
        kwargs[GRID_KEYS[key]] = [int(v) for v in values] if key == "k" else [float(v) for v in values]
    return HyperGrid().override(**kwargs)


@dataclass
class RunManifest:
    path: Path
    datasets: list
    models: list
    grid: HyperGrid
    protocol: Protocol
    noise_rates: tuple
    output_dir: Path


def _manifest_model(spec):
    if isinstance(spec, str):
        return get_family(spec)
    if isinstance(spec, dict) and "family" in spec:
        family = get_family(spec["family"])
        if "scheme" in spec and spec["scheme"] != family.scheme.value:
            raise InputError(f"model {family.name}: scheme {spec['scheme']!r} does not match "
                             f"the family's {family.scheme.value!r}")
        if "center" in spec and spec["center"] != family.center.value:
            raise InputError(f"model {family.name}: center {spec['center']!r} does not match "
                             f"the family's {family.center.value!r}; use flexi1 (mean) or flexi2 (median)")
        return family
    raise InputError(f"bad model entry {spec!r}; expected a family name or {{\"family\": ...}}")


def load_run_manifest(path, seed=None, out=None):
    path = Path(path)
    doc = read_json(path)
    if not isinstance(doc, dict) or not doc.get("datasets"):
        raise InputError(f"{path}: manifest needs a non-empty 'datasets' list")
    base = path.parent
    datasets = load_manifest_datasets(doc["datasets"], base)
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise InputError(f"{path}: dataset names must be unique")
    models = [_manifest_model(m) for m in doc.get("models", list(FAMILIES))]
    protocol = Protocol(
        seed=int(doc.get("seed", 0) if seed is None else seed),
        folds=int(doc.get("folds", 5)),
        train_fraction=float(doc.get("train_fraction", 0.7)),
    )
    rates = tuple(float(r) for r in doc.get("noise_rates", DEFAULT_NOISE_RATES))
    output_dir = Path(out) if out is not None else base / doc.get("output_dir", "results")
    return RunManifest(path, datasets, models, _grid_from_manifest(doc.get("grid")), protocol,
                       rates, output_dir)


def _dataset_from_args(args, require_both=True):
    if not args.label_map:
        raise InputError("--label-map is required (e.g. --label-map 0:-1,1:1)")
    mapping = parse_label_mapping(args.label_map)
    return load_csv(args.data, args.label_column, mapping, require_both=require_both)


def _single(values, flag):
    if values is None:
        return None
    if len(values) != 1:
        raise InputError(f"{flag} takes a single value for this command")
    return values[0]


# ---------------------------------------------------------------- commands


def cmd_train(args):
    ds = _dataset_from_args(args)
    family = get_family(args.model)
    point = GridPoint(
        C=_single(args.C, "--C") or 1.0,
        sigma=_single(args.sigma, "--sigma") or 1.0,
        lam=(_single(args.lam, "--lambda") or 1.0) if "lambda" in family.axes else None,
        k=(_single(args.k, "--k") or 5) if "k" in family.axes else None,
        gamma=(_single(args.gamma, "--gamma") or 0.5) if "gamma" in family.axes else None,
    )
    tr, _, std = standardize_fit_apply(ds)
    model = train(tr.X, tr.y, family.train_config(point))
    model = dataclasses.replace(model, standardizer=std)
    prov = provenance(args.seed, [("data", args.data)], command="train", model=family.name)
    save_model(model, args.out, prov)

    counts = ds.class_counts()
    ir, minority = imbalance_ratio(ds.y)
    print(f"trained {family.label} on {len(ds)} samples "
          f"(+1: {counts[1]}, -1: {counts[-1]}, I.R. {ir:.4g}, minority {minority:+d})")
    print(f"hyperparameters: {point.to_dict()}")
    print(f"KKT residual (inf-norm): {model.kkt_residual():.3e}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_predict(args):
    model = load_model(args.model_file)
    ds = _dataset_from_args(args, require_both=False)
    if ds.X.shape[1] != model.train_X.shape[1]:
        raise InputError(f"data has {ds.X.shape[1]} features, model expects {model.train_X.shape[1]}")
    X = model.standardizer.transform(ds.X) if model.standardizer else ds.X
    scores = decision_function(model, X)
    pred = sign_labels(scores)
    if args.out:
        write_csv_table(args.out, ["index", "decision_value", "predicted", "label"],
                        [(i, float(s), int(p), int(t)) for i, (s, p, t) in enumerate(zip(scores, pred, ds.y))],
                        csv_meta(provenance(args.seed, [("model", args.model_file), ("data", args.data)])))
    m = metrics(confusion(ds.y, pred))
    print(_format_metrics(m))
    return EXIT_OK


def _format_metrics(m):
    parts = []
    for key, value in m.to_dict().items():
        parts.append(f"{key} {'n/a' if value is None else f'{100 * value:.2f}%'}")
    return ", ".join(parts)


def _report_rows(results):
    header = ["model", "status", "accuracy", "sensitivity", "specificity", "precision",
              "cv_accuracy", "C", "sigma", "lambda", "k", "gamma"]
    rows = []
    for r in results:
        s = r.summary()
        hp = s.get("hyperparameters", {})
        rows.append([s["model"], s["status"], s.get("accuracy"), s.get("sensitivity"),
                     s.get("specificity"), s.get("precision"), s.get("cv_accuracy")]
                    + [hp.get(k) for k in ("C", "sigma", "lambda", "k", "gamma")])
    return header, rows


def _cv_rows(table):
    header = ["C", "sigma", "lambda", "k", "gamma", "mean_accuracy", "status"]
    rows = []
    for row in table:
        d = row.to_dict()
        rows.append([d.get(k) for k in ("C", "sigma", "lambda", "k", "gamma")]
                    + [d["mean_accuracy"], d["status"]])
    return header, rows


def _run_dataset(entry, run, noise_rate=0.0):
    """Load, prepare and evaluate every model; returns ``(doc, results)``."""
    doc = {"dataset": entry.name, "path": str(entry.path.relative_to(run.path.parent))
           if entry.path.is_relative_to(run.path.parent) else str(entry.path)}
    try:
        ds = entry.load()
        prepared = prepare(ds, run.protocol, noise_rate)
    except FlexiFuzzError as exc:
        doc.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return doc, []
    ir, minority = imbalance_ratio(prepared.train.y)
    doc.update(
        status="ok",
        n=len(ds), n_train=len(prepared.train), n_test=len(prepared.test),
        n_features=ds.X.shape[1],
        train_class_counts={str(k): v for k, v in prepared.train.class_counts().items()},
        train_imbalance_ratio=ir,
        noise_rate=noise_rate,
        flipped_labels=int(prepared.flipped.size),
    )
    results = [evaluate_family(prepared, fam, run.grid, run.protocol) for fam in run.models]
    doc["results"] = [r.summary() for r in results]
    if any(r.error for r in results):
        doc["status"] = "partial"
    return doc, results


def _run_provenance(run, command):
    inputs = [("manifest", run.path)] + [(e.name, e.path) for e in run.datasets]
    return provenance(
        run.protocol.seed, inputs, command=command,
        protocol={"train_fraction": run.protocol.train_fraction, "folds": run.protocol.folds,
                  "split_seed": run.protocol.split_seed, "fold_seed": run.protocol.fold_seed,
                  "noise_seed": run.protocol.noise_seed},
    )


def cmd_benchmark(args):
    run = load_run_manifest(args.manifest, args.seed, args.out)
    prov = _run_provenance(run, "benchmark")
    meta = csv_meta(prov)
    out = run.output_dir
    matrix, failed = [], False
    for entry in run.datasets:
        doc, results = _run_dataset(entry, run)
        failed |= doc["status"] != "ok"
        write_json(out / "reports" / f"{entry.name}.json", {"provenance": prov, **doc})
        header, rows = _report_rows(results)
        write_csv_table(out / "reports" / f"{entry.name}.csv", header, rows, meta)
        for r in results:
            if r.cv_table:
                write_csv_table(out / "cv" / f"{entry.name}.{r.model}.csv", *_cv_rows(r.cv_table), meta)
        by_model = {r.model: r.scores.accuracy for r in results if r.scores is not None}
        matrix.append([entry.name] + [by_model.get(f.name) for f in run.models])
        print(f"{entry.name}: " + ", ".join(
            f"{f.name} {'failed' if by_model.get(f.name) is None else f'{100 * by_model[f.name]:.2f}%'}"
            for f in run.models))
    write_csv_table(out / "accuracy_matrix.csv", ["dataset"] + [f.name for f in run.models], matrix, meta)
    print(f"reports written to {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_noise_sweep(args):
    run = load_run_manifest(args.manifest, args.seed, args.out)
    rates = tuple(args.noise_rates) if args.noise_rates is not None else run.noise_rates
    if not rates:
        raise InputError("no noise rates given")
    for r in rates:
        if not 0 <= r < 1:
            raise InputError(f"noise rate {r} outside [0, 1)")
    prov = _run_provenance(run, "noise-sweep")
    prov["noise_rates"] = list(rates)
    meta = csv_meta(prov)
    out = run.output_dir / "noise"
    failed = False
    summary_rows = []
    for entry in run.datasets:
        per_rate, table = [], {}
        for rate in rates:
            doc, results = _run_dataset(entry, run, rate)
            failed |= doc["status"] != "ok"
            per_rate.append(doc)
            for r in results:
                table[(rate, r.model)] = r.scores.accuracy if r.scores is not None else None
        averages = {}
        for fam in run.models:
            accs = [table.get((rate, fam.name)) for rate in rates]
            averages[fam.name] = None if any(a is None for a in accs) else float(np.mean(accs))
        write_json(out / f"{entry.name}.json",
                   {"provenance": prov, "dataset": entry.name, "rates": per_rate, "average_accuracy": averages})
        rows = [[rate] + [table.get((rate, f.name)) for f in run.models] for rate in rates]
        rows.append(["average"] + [averages[f.name] for f in run.models])
        write_csv_table(out / f"{entry.name}.csv", ["noise_rate"] + [f.name for f in run.models], rows, meta)
        summary_rows.append([entry.name] + [averages[f.name] for f in run.models])
        print(f"{entry.name}: average accuracy over rates " + ", ".join(
            f"{name} {'failed' if v is None else f'{100 * v:.2f}%'}" for name, v in averages.items()))
    write_csv_table(out / "average_accuracy.csv", ["dataset"] + [f.name for f in run.models],
                    summary_rows, meta)
    print(f"reports written to {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sensitivity(args):
    axes = tuple(a.strip() for a in args.axes.split(","))
    if axes not in SENSITIVITY_AXES:
        raise InputError(f"unsupported axis pair {args.axes!r}; use C,sigma or lambda,k")
    family = get_family(args.model)
    if axes == ("lambda", "k") and "lambda" not in family.axes:
        raise InputError(f"model {family.name} has no lambda/k hyperparameters")
    ds = _dataset_from_args(args)
    protocol = Protocol(args.seed, args.folds, args.train_fraction)
    grid = _grid_from_args(args)
    prepared = prepare(ds, protocol)
    folds = stratified_kfold(prepared.train, protocol.folds, protocol.fold_seed)
    optimum, _ = grid_search(prepared.train, grid, family, fold_indices=folds)
    rows = sensitivity_grid(prepared, family, grid, axes, optimum)
    prov = provenance(args.seed, [("data", args.data)], command="sensitivity", model=family.name)
    meta = csv_meta(prov)
    meta["optimum"] = optimum.to_dict()
    write_csv_table(args.out, [axes[0], axes[1], "accuracy"], rows, meta)
    print(f"grid-search optimum: {optimum.to_dict()}")
    print(f"{len(rows)} rows written to {args.out}")
    return EXIT_OK


def cmd_stats(args):
    path = Path(args.matrix)
    if not path.is_file():
        raise DataError(f"accuracy matrix not found: {path}")
    header, rows = read_csv_table(path)
    if len(header) < 3 or not rows:
        raise InputError(f"{path}: need a header 'dataset,<model>,<model>,...' and at least one row")
    models, names, values = header[1:], [], []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(row)} fields, header has {len(header)}")
        names.append(row[0])
        try:
            values.append([float(v) if v.strip() else np.nan for v in row[1:]])
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric accuracy in row {i + 2} ({exc})") from None
    A = np.array(values)
    missing = [(names[i], models[j]) for i, j in zip(*np.nonzero(~np.isfinite(A)))]
    if missing:
        raise InputError("accuracy matrix has missing entries: "
                         + ", ".join(f"{d}/{m}" for d, m in missing[:5]))
    table = average_ranks(A, models, names)
    report = rank_report(table, q_alpha=args.q_alpha, alpha=args.alpha)
    report = {"provenance": provenance(None, [("matrix", path)], command="stats"), **report}
    if args.out:
        write_json(args.out, report)

    width = max(len(m) for m in models)
    print(f"{'model':<{width}}  avg rank")
    for m in models:
        print(f"{m:<{width}}  {report['avg_ranks'][m]:.3f}")
    f_text = "undefined (rankings agree on every dataset)" if report["f_stat"] is None \
        else f"{report['f_stat']:.4f} (df {report['f_df'][0]}, {report['f_df'][1]})"
    print(f"Friedman chi2 = {report['chi2']:.4f} (df {report['chi2_df']}), Iman-Davenport F = {f_text}")
    print(f"Nemenyi CD = {report['cd']:.4f} (q_alpha {report['q_alpha']}, p {report['p']}, D {report['D']})")
    sig = [f"{p['a']} vs {p['b']}" for p in report["pairwise_flags"] if p["significant"]]
    print("significant pairs: " + (", ".join(sig) if sig else "none"))
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--label-column", type=_label_column, default=-1,
                   help="label column name or index (default: last)")
    p.add_argument("--label-map", help="explicit label mapping, e.g. 0:-1,1:1 (required)")


def _add_hyper_flags(p):
    p.add_argument("--model", default="flexi1", choices=list(FAMILIES))
    p.add_argument("--C", type=_float_list)
    p.add_argument("--sigma", type=_float_list)
    p.add_argument("--lambda", dest="lam", type=_float_list)
    p.add_argument("--k", type=_int_list)
    p.add_argument("--gamma", type=_float_list)


def build_parser():
    parser = argparse.ArgumentParser(prog="flexifuzz", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and save it as JSON")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a labelled CSV with a saved model")
    _add_data_flags(p)
    p.add_argument("--model-file", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional predictions CSV")
    p.set_defaults(func=cmd_predict)

    for name, func, helptext in (
        ("benchmark", cmd_benchmark, "split / grid search / test every manifest dataset and model"),
        ("noise-sweep", cmd_noise_sweep, "benchmark under training-label noise"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("manifest")
        p.add_argument("--seed", type=int, help="override the manifest seed")
        p.add_argument("--out", help="override the manifest output directory")
        if name == "noise-sweep":
            p.add_argument("--noise-rates", type=_float_list,
                           help="comma-separated rates (default 0.05,0.1,0.2,0.3,0.4)")
        p.set_defaults(func=func)

    p = sub.add_parser("sensitivity", help="test accuracy over a 2-D hyperparameter slice")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--axes", default="C,sigma", help="C,sigma or lambda,k")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--out", default="sensitivity.csv")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("stats", help="Friedman / Iman-Davenport / Nemenyi on an accuracy matrix")
    p.add_argument("matrix")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--q-alpha", type=float, help="Nemenyi critical value (default: bundled table)")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which is already our input-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, DataError, FileNotFoundError) as exc:
        _err(exc)
        return EXIT_INPUT
    except ArithmeticError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:
        _err(exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
