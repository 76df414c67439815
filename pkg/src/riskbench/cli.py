"""Command-line entry point for the offline pipeline and the service.

Subcommands: generate, impute, train, leaderboard, rfecv, score-mpl,
serve, tasks. Every command takes --seed and all randomness flows from
it. Exit codes: 0 success, 2 validation or usage error, 1 internal
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import elicitation as el
from . import synthdata as sd
from .defaults import DISPLAY_NAMES, REPORT_FAMILIES, default_grids
from .errors import ValidationError
from .evaluation import (
    fold_distribution_export,
    fold_summary_to_csv,
    fold_summary_to_json,
    importance_to_csv,
    lasso_importance,
    leaderboard,
    report_to_csv,
    report_to_json,
    report_to_text,
    rfecv,
)
from .models import FAMILIES, ModelSpec, fit as fit_model, model_to_json
from .pipeline import PipelineConfig, fit_pipeline
from .preprocess import ImputeConfig, SplitPlan, impute_summary_json, iterative_impute, stratified_split
from .table import read_csv, read_schema_kinds, schema_sidecar, write_csv

DEFAULT_ADDR_ENV = "RISKBENCH_ADDR"


def _read_table(data: str, schema: str | None):
    kinds = read_schema_kinds(schema) if schema else None
    return read_csv(Path(data), kinds=kinds)


def _parse_hyper(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _spec_from_args(args) -> ModelSpec:
    hp = {}
    for item in args.hyper or []:
        if "=" not in item:
            raise ValidationError(f"--hyper expects name=value, got {item!r}")
        name, raw = item.split("=", 1)
        hp[name] = _parse_hyper(raw)
    return ModelSpec(args.family, hp, args.seed)


def _load_grids(config_path: str | None, n_features: int, seed: int, families):
    grids = default_grids(n_features, seed, tuple(families))
    if not config_path:
        return grids
    doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    for family, entries in doc.get("grids", {}).items():
        if family not in FAMILIES:
            raise ValidationError(f"config grids: unknown family {family!r}")
        grids[family] = [ModelSpec(family, dict(hp), seed) for hp in entries]
    return grids


def cmd_generate(args) -> int:
    schema = sd.register_schema()
    if args.default_signal or not args.signal:
        signal = sd.DEFAULT_SIGNAL
    else:
        signal = []
        for item in args.signal:
            name, _, coef = item.partition("=")
            if not coef:
                raise ValidationError(f"--signal expects name=coef, got {item!r}")
            signal.append((name, float(coef)))
        signal = tuple(signal)
    config = sd.GenConfig(n_rows=args.rows, seed=args.seed, signal=signal,
                          noise_sd=args.noise_sd, target=args.target)
    table, truth = sd.generate(schema, config)
    if not args.complete:
        table = sd.apply_missingness(table, schema, seed=args.seed + 1)
    write_csv(table, args.out)
    schema_out = args.schema_out or (str(args.out) + ".schema.json")
    Path(schema_out).write_text(
        schema_sidecar(table, sd.schema_missing_rates(schema)), encoding="utf-8"
    )
    print(f"wrote {table.n_rows} rows to {args.out} (schema: {schema_out})")
    return 0


def cmd_impute(args) -> int:
    table = _read_table(args.data, args.schema)
    config = ImputeConfig(max_rounds=args.max_rounds, tol=args.tol)
    imputed = iterative_impute(table, config, seed=args.seed)
    write_csv(imputed, args.out)
    rounds = getattr(imputed, "impute_rounds_run", 0)
    print(impute_summary_json(config, rounds), end="")
    return 0


def _prepare_matrices(args):
    table = _read_table(args.data, args.schema)
    plan = SplitPlan(test_fraction=args.test_fraction, strata_bins=10, seed=args.seed)
    train, test, fell_back = stratified_split(table, plan, args.target)
    if fell_back:
        print("warning: degenerate target, plain random split used", file=sys.stderr)
    pipe, X_train, y_train = fit_pipeline(train, args.target, PipelineConfig(), seed=args.seed)
    X_test, y_test = pipe.transform(test)
    return pipe, X_train, y_train, X_test, y_test, table.feature_names


def cmd_train(args) -> int:
    spec = _spec_from_args(args)
    table = _read_table(args.data, args.schema)
    pipe, X, y = fit_pipeline(table, args.target, PipelineConfig(), seed=args.seed)
    model = fit_model(spec, X, y)
    Path(args.out).write_text(model_to_json(model), encoding="utf-8")
    print(f"fitted {DISPLAY_NAMES.get(spec.family, spec.family)} on {len(y)} rows -> {args.out}")
    return 0


def cmd_leaderboard(args) -> int:
    pipe, X_train, y_train, X_test, y_test, names = _prepare_matrices(args)
    grids = _load_grids(args.config, X_train.shape[1], args.seed, REPORT_FAMILIES)
    report = leaderboard(
        X_train, y_train, X_test, y_test, grids=grids, k=args.folds,
        seed=args.seed, metric=args.metric, target=args.target,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "leaderboard.csv").write_text(report_to_csv(report), encoding="utf-8")
    (out_dir / "leaderboard.txt").write_text(report_to_text(report), encoding="utf-8")
    (out_dir / "leaderboard.json").write_text(report_to_json(report), encoding="utf-8")
    lasso_row = report.row("lasso")
    if lasso_row.spec is not None:
        model = fit_model(lasso_row.spec, X_train, y_train)
        pairs, eliminated = lasso_importance(model, names)
        (out_dir / "lasso_importance.csv").write_text(
            importance_to_csv(pairs, eliminated), encoding="utf-8"
        )
    print(report_to_text(report), end="")
    return 0


def cmd_rfecv(args) -> int:
    pipe, X_train, y_train, _, _, names = _prepare_matrices(args)
    fold_scores = {}
    results = {}
    for family in args.family:
        spec = ModelSpec(family, {}, args.seed)
        result = rfecv(spec, X_train, y_train, feature_names=names, k=args.folds,
                       seed=args.seed, metric=args.metric)
        results[family] = {
            "sizes": list(result.sizes),
            "mean_scores": list(result.mean_scores),
            "selected_size": result.selected_size,
            "selected_features": list(result.selected_features),
        }
        fold_scores[DISPLAY_NAMES[family]] = list(result.fold_scores_at_selected)
        print(f"{family}: kept {result.selected_size} features")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "rfecv.json").write_text(
        json.dumps({"format": "rfecv", "version": 1, "metric": args.metric,
                    "results": results}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    summaries = fold_distribution_export(fold_scores)
    (out_dir / "fold_distribution.csv").write_text(fold_summary_to_csv(summaries), encoding="utf-8")
    (out_dir / "fold_distribution.json").write_text(fold_summary_to_json(summaries), encoding="utf-8")
    return 0


def cmd_score_mpl(args) -> int:
    doc = json.loads(Path(args.sheets).read_text(encoding="utf-8"))
    sheets = [el.ChoiceSheet(s["task_id"], tuple(s["choices"])) for s in doc["sheets"]]
    avg = el.avg_safe(sheets)
    measures = el.RiskMeasures(mpl_avg_safe=avg)
    if "likert" in doc:
        measures = measures.merged_with(el.record_likert(doc["likert"]))
    print(f"mpl_avg_safe {measures.mpl_avg_safe}")
    if measures.risk_grq is not None:
        print(f"risk_grq {measures.risk_grq}")
    for sheet in sheets:
        report = el.consistency(sheet)
        if report.multiple_switch or report.dominated_choices:
            print(
                f"note: task {sheet.task_id} switches {report.switch_count}x, "
                f"dominated rows {list(report.dominated_choices)}",
                file=sys.stderr,
            )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, port = args.host, args.port
    addr = os.environ.get(DEFAULT_ADDR_ENV)
    if addr and args.host is None and args.port is None:
        host, _, port_s = addr.partition(":")
        port = int(port_s or 8000)
    host = host or "127.0.0.1"
    port = port or 8000
    uvicorn.run(create_app(args.state_dir), host=host, port=int(port), log_level="warning")
    return 0


def cmd_tasks(args) -> int:
    text = el.tasks_to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic register-style CSV")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--schema-out")
    p.add_argument("--signal", action="append", metavar="NAME=COEF")
    p.add_argument("--default-signal", action="store_true")
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--target", choices=["mpl_avg_safe", "risk_grq", "both"], default="both")
    p.add_argument("--complete", action="store_true", help="skip the missingness pass")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("impute", help="fill numerical gaps in a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(fn=cmd_impute)

    p = sub.add_parser("train", help="fit one model spec on a full CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--target", required=True)
    p.add_argument("--family", choices=sorted(FAMILIES), required=True)
    p.add_argument("--hyper", action="append", metavar="NAME=VALUE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("leaderboard", help="tune, test and rank the model zoo")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--target", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["mae", "mse", "rmse", "r2", "rmsle", "mape"],
                   default="mape")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--config", help="JSON file overriding default grids")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_leaderboard)

    p = sub.add_parser("rfecv", help="recursive feature elimination with CV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--target", required=True)
    p.add_argument("--family", action="append", default=None,
                   choices=sorted(set(FAMILIES) - {"dummy", "knn"}))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["mae", "mse", "rmse", "r2", "rmsle", "mape"],
                   default="mape")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--config", help="JSON file overriding default grids")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_rfecv)

    p = sub.add_parser("score-mpl", help="score a JSON file of choice sheets")
    p.add_argument("--sheets", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_score_mpl)

    p = sub.add_parser("serve", help="run the elicitation HTTP service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--state-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("tasks", help="emit the built-in task document")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_tasks)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "family", None) == [] or (
            args.command == "rfecv" and not args.family
        ):
            args.family = ["lasso"]
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
