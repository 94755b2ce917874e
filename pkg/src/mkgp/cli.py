"""Command-line front end.

Subcommands: generate, fit, predict, evaluate, benchmark.
Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure,
5 non-convergence (artifacts are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .benchmark import render_table, run_benchmark, write_benchmark_csv
from .classification import fit_classifier, predict_class_prob
from .dataio import read_dataset, write_dataset, write_predictions
from .errors import ConfigError, DataError, MkgpError, NumericalError
from .inference import fit
from .prediction import predictive
from .serialize import load_model, save_model
from .toydata import generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_NONCONVERGED = 5


def _log(args, msg: str) -> None:
    if getattr(args, "verbose", False):
        print(msg, file=sys.stderr)


def cmd_generate(args) -> int:
    doc = cfgmod.load_yaml(args.config) if args.config else {}
    if args.regime:
        doc.pop("active", None)
        doc["regime"] = args.regime
    if args.seed is not None:
        doc["seed"] = args.seed
    toy = cfgmod.parse_toy_config(doc)
    data = generate(toy)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    train_path = out.with_suffix(".csv")
    test_path = out.parent / (out.stem + "_test.csv")
    truth_path = out.parent / (out.stem + "_truth.json")
    write_dataset(train_path, data.X_train, data.y_train)
    write_dataset(test_path, data.X_test, data.y_test)
    truth = {
        "seed": toy.seed,
        "active": list(toy.active),
        "lengthscales": list(toy.lengthscales),
        "noise_std": toy.noise_std,
        "signal_train": data.signal_train.tolist(),
        "signal_test": data.signal_test.tolist(),
        "components_train": data.components_train.tolist(),
        "components_test": data.components_test.tolist(),
    }
    truth_path.write_text(json.dumps(truth) + "\n")
    _log(args, f"wrote {train_path}, {test_path}, {truth_path}")
    return EXIT_OK


def _weights_report(model) -> dict:
    return {
        "task": model.task,
        "converged": model.converged,
        "elbo": model.state.elbo,
        "elbo_trace": model.elbo_trace,
        "tau": model.hyper.tau,
        "family_preset": model.hyper.family_preset,
        "prior": {
            "omega": model.hyper.gig_prior.omega,
            "chi": model.hyper.gig_prior.chi,
            "phi": model.hyper.gig_prior.phi,
        },
        "normalized_weights": model.normalized_weights.tolist(),
        "gamma_mean": model.state.gamma_mean.tolist(),
        "warnings": list(model.state.warnings),
    }


def cmd_fit(args) -> int:
    run = cfgmod.parse_run_config(cfgmod.load_yaml(args.config))
    X, t, target_name = read_dataset(args.train)
    if run.task == "classification" and target_name != "t":
        raise DataError(f"classification requires a 't' label column, found {target_name!r}")
    if run.task == "regression" and target_name != "y":
        raise DataError(f"regression requires a 'y' target column, found {target_name!r}")
    gamma_init = np.asarray(run.gamma_init, dtype=float) if run.gamma_init else None
    if run.task == "classification":
        model = fit_classifier(X, t, run.kernels, run.hyper, run.fit)
    else:
        model = fit(X, t, run.kernels, run.hyper, run.fit, gamma_init=gamma_init)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report = _weights_report(model)
    report_path = out.parent / (out.stem + ".report.json")
    report_path.write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps({k: report[k] for k in ("task", "converged", "elbo", "tau", "normalized_weights")}, indent=2))
    _log(args, f"wrote {out} and {report_path}")
    return EXIT_OK if model.converged else EXIT_NONCONVERGED


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, _, _ = read_dataset(args.queries, expect_target=False)
    pred = predictive(model, X)
    if model.task == "binary-classification":
        prob = predict_class_prob(model, X)
        cols = {"prob_pos": prob, "label": np.where(pred.mean >= 0.0, 1.0, -1.0)}
    else:
        cols = {"mean": pred.mean, "latent_var": pred.latent_var, "total_var": pred.total_var}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_predictions(out, cols)
    _log(args, f"wrote {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    X, target, target_name = read_dataset(args.data)
    import csv

    with open(args.predictions, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{args.predictions}: empty predictions file")
    header = rows[0]
    preds = {h: np.array([float(r[i]) for r in rows[1:]]) for i, h in enumerate(header)}
    n = len(rows) - 1
    if n != len(target):
        raise DataError(f"{n} predictions for {len(target)} targets")
    report: dict[str, float] = {}
    if target_name == "t":
        if "label" not in preds:
            raise DataError("classification evaluation needs a 'label' column")
        report["accuracy"] = float(np.mean(preds["label"] == target))
        if "prob_pos" in preds:
            p = np.clip(preds["prob_pos"], 1e-300, 1.0 - 1e-16)
            tpos = target > 0
            report["log_loss"] = float(-np.mean(np.where(tpos, np.log(p), np.log1p(-p))))
    else:
        if "mean" not in preds:
            raise DataError("regression evaluation needs a 'mean' column")
        report["rmse"] = float(np.sqrt(np.mean((preds["mean"] - target) ** 2)))
        report["mae"] = float(np.mean(np.abs(preds["mean"] - target)))
    print(json.dumps(report, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report) + "\n")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = cfgmod.parse_benchmark_config(cfgmod.load_yaml(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    result = run_benchmark(cfg)
    out_dir = Path(args.out)
    results_path, weights_path = write_benchmark_csv(result, out_dir)
    table = render_table(result)
    (out_dir / "table.txt").write_text(table)
    print(table, end="")
    _log(args, f"wrote {results_path}, {weights_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mkgp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a toy dataset")
    p.add_argument("--config", help="toy-config YAML")
    p.add_argument("--regime", choices=["sparse", "semi", "dense"], help="active-kernel preset")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a model to a training CSV")
    p.add_argument("train", help="training CSV (features + trailing y/t column)")
    p.add_argument("--config", required=True, help="run-config YAML")
    p.add_argument("--out", required=True, help="model output path (JSON)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="batch prediction from a saved model")
    p.add_argument("model", help="model JSON written by fit")
    p.add_argument("queries", help="query CSV (feature columns only)")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against labeled data")
    p.add_argument("predictions", help="predictions CSV from predict")
    p.add_argument("data", help="labeled CSV with the true y/t column")
    p.add_argument("--out", help="optional JSON report path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="RMSE/weight summary over toy realizations")
    p.add_argument("--config", required=True, help="benchmark-config YAML")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, MkgpError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
