"""Command-line front end: ``tsfuzzy {fit,evaluate,predict,compare,dump-dataset}``.

Exit status is 0 on success, 1 when the numerical pipeline fails and 2 for
usage, input or I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .criteria import (Baseline, SplitSpec, UCUndefined, baseline_predict, error_index, mse,
                       unbiased_criterion)
from .data import (BUNDLED, DataError, Dataset, EmptyDataset, LagSpec, apply_lags, bundled,
                   load_csv, normalize)
from .inference import Mode, TSModel
from .membership import UnsupportedShapeError
from .regression import EmptyProblem, build_regressors
from .search import OptimizationFailed, SearchConfig, identify

EXIT_OK, EXIT_PIPELINE, EXIT_USAGE = 0, 1, 2

# bundled series that are forecast from lagged, unit-scaled features by default
TIME_SERIES = {"tianjin-precipitation", "security-situation"}


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------------

def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest round-tripping repr."""
    return json.dumps(_to_builtin(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def _prepare_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def _lag_spec(text, raw: Dataset, name: str):
    if text is None:
        text = "default" if name in TIME_SERIES else "none"
    if text == "none":
        return None
    if text == "default":
        return LagSpec.default(raw.n_inputs)
    try:
        return LagSpec.parse(text, raw.n_inputs)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad --lags value {text!r}: {exc}") from None


def load_dataset(source: str, lags=None):
    """Resolve a bundled name or CSV path and apply the requested lags.

    Returns ``(dataset, lag_spec_or_None)``.
    """
    if source in BUNDLED:
        raw = bundled(source)
    else:
        try:
            raw = load_csv(source)
        except FileNotFoundError:
            raise UsageError(f"dataset {source!r} is neither a bundled name "
                             f"({', '.join(sorted(BUNDLED))}) nor a readable file") from None
        except OSError as exc:
            raise UsageError(f"cannot read {source}: {exc.strerror or exc}") from None
    spec = _lag_spec(lags, raw, source)
    return (raw if spec is None else apply_lags(raw, spec)), spec


def _normalize_flag(flag, name):
    if flag is None:
        return name in TIME_SERIES
    return flag == "on"


class BuiltinModel:
    """Adapter giving the published closed-form predictors the model interface."""

    input_dim = 4
    normalization = None

    def __init__(self, kind):
        self.kind = Baseline(kind)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 4:
            raise UsageError(f"builtin:{self.kind.value} needs 4 inputs, dataset has {X.shape[1]}")
        return np.atleast_1d(baseline_predict(self.kind, X)), np.zeros(len(X), dtype=bool)


def load_model(spec: str):
    """Return ``(model, metadata)`` for a model file or ``builtin:<name>``."""
    if spec.startswith("builtin:"):
        try:
            return BuiltinModel(spec.split(":", 1)[1]), {}
        except ValueError:
            raise UsageError(f"unknown builtin model {spec!r}; choose from "
                             + ", ".join(f"builtin:{b.value}" for b in Baseline)) from None
    try:
        obj = json.loads(Path(spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read model {spec}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"model {spec} is not valid JSON: {exc}") from None
    try:
        return TSModel.from_json(obj), obj.get("features", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"model {spec} is malformed: {exc}") from None


def _dataset_for_model(args, meta):
    lags = args.lags
    if lags is None and meta.get("lags") is not None:
        lags = ";".join(f"u{j + 1}={','.join(map(str, ls))}"
                        for j, ls in enumerate(meta["lags"]["inputs"]) if ls)
        if meta["lags"]["output"]:
            lags += ";y=" + ",".join(map(str, meta["lags"]["output"]))
    elif lags is None and meta:
        lags = "none"
    return load_dataset(args.dataset, lags)


def _check_dims(model, ds):
    if ds.n_inputs != model.input_dim:
        raise UsageError(f"dimension mismatch: model expects {model.input_dim} inputs, "
                         f"dataset has {ds.n_inputs}")


def _fmt(v):
    return "-" if v is None else f"{v:.6g}"


# -- commands -----------------------------------------------------------------------------

def cmd_fit(args) -> int:
    ds, spec = load_dataset(args.dataset, args.lags)
    if ds.identification().n_rows < 2:
        raise UsageError("dataset has fewer than two identification rows")
    out = _prepare_dir(args.output or "tsfuzzy-out")
    config = SearchConfig(max_rules=args.max_rules, split=SplitSpec(args.split),
                          mode=Mode(args.mode), threads=args.threads,
                          normalize=_normalize_flag(args.normalize, args.dataset))
    report = identify(ds, config, log_stream=None if args.quiet else sys.stderr)

    model_json = report.model.to_json()
    model_json["features"] = {"input_names": list(ds.input_names),
                              "output_name": ds.output_name,
                              "lags": None if spec is None else spec.to_json()}
    report_json = report.to_json()
    report_json["dataset"] = {"source": args.dataset, "rows": ds.n_rows,
                              "lags": None if spec is None else spec.to_json()}
    _write(out / "model.json", dumps(model_json))
    _write(out / "report.json", dumps(report_json))
    if args.dump_z:
        _write(args.dump_z, _z_csv(report, ds))

    print("stage  rules  best UC       accepted")
    for s in report.stages:
        n = s.candidates[0].candidate.n_rules
        print(f"{s.stage:>5}  {n:>5}  {_fmt(s.best_uc):<12}  {'yes' if s.accepted else 'no'}")
    print(f"final structure: {report.partition.describe()}")
    for tag, m in report.metrics.items():
        print(f"{tag}: E={_fmt(m['E'])}%  MSE={_fmt(m['mse'])}  fallback_rows={m['fallback_rows']}")
    print(f"wrote {out / 'model.json'} and {out / 'report.json'}")
    return EXIT_OK


def _z_csv(report, ds):
    ident = ds.identification()
    X, y = ident.X, ident.y
    if report.model.normalization is not None:
        X = report.model.normalization.forward_inputs(X)
        y = report.model.normalization.forward_output(y)
    prob = build_regressors(report.partition.premises, report.mask, X, y, report.config.mode)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row"] + [f"z{j}_{i + 1}" for i, j in prob.column_map] + ["y"])
    for r, zrow, yv in zip(prob.kept_rows, prob.Z, prob.y):
        w.writerow([int(r) + 1] + [repr(float(v)) for v in zrow] + [repr(float(yv))])
    return buf.getvalue()


def _model_uc(model, ds, split, mode):
    if not isinstance(model, TSModel):
        return None
    ident = ds.identification()
    X, y = ident.X, ident.y
    if model.normalization is not None:
        X = model.normalization.forward_inputs(X)
        y = model.normalization.forward_output(y)
    try:
        return unbiased_criterion([r.premise for r in model.rules], model.mask_matrix,
                                  X, y, split, mode)
    except (UCUndefined, ValueError):
        return None


def evaluate_model(model, ds) -> dict:
    out = {}
    for tag, part in (("ident", ds.identification()), ("valid", ds.validation())):
        if part.n_rows == 0:
            continue
        y_hat, fallback = model.predict(part.X)
        entry = {"n": part.n_rows, "fallback_rows": int(fallback.sum()),
                 "mse_raw": mse(part.y, y_hat)}
        nrm = model.normalization
        entry["mse"] = (entry["mse_raw"] if nrm is None
                        else mse(nrm.forward_output(part.y), nrm.forward_output(y_hat)))
        entry["E"] = error_index(part.y, y_hat) if np.all(part.y != 0) else None
        out[tag] = entry
    return out


def cmd_evaluate(args) -> int:
    model, meta = load_model(args.model)
    ds, _ = _dataset_for_model(args, meta)
    _check_dims(model, ds)
    metrics = evaluate_model(model, ds)
    mode = model.mode if isinstance(model, TSModel) else Mode(args.mode)
    uc = _model_uc(model, ds, SplitSpec(args.split), mode)
    result = {"model": args.model, "dataset": args.dataset, "metrics": metrics, "uc": uc}
    ident, valid = metrics.get("ident", {}), metrics.get("valid", {})
    print("E_1(%)    E_2(%)    UC        MSE_1      MSE_2      fallback")
    print(f"{_fmt(ident.get('E')):<9} {_fmt(valid.get('E')):<9} {_fmt(uc):<9} "
          f"{_fmt(ident.get('mse')):<10} {_fmt(valid.get('mse')):<10} "
          f"{sum(m['fallback_rows'] for m in metrics.values())}")
    if args.output:
        _write(args.output, dumps(result))
    return EXIT_OK


def _parse_inputs(text, m):
    rows = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        try:
            rows.append([float(v) for v in chunk.split(",")])
        except ValueError:
            raise UsageError(f"cannot parse --input row {chunk!r}") from None
        if len(rows[-1]) != m:
            raise UsageError(f"dimension mismatch: model expects {m} inputs, "
                             f"--input row has {len(rows[-1])}")
    if not rows:
        raise UsageError("--input is empty")
    return np.array(rows)


def cmd_predict(args) -> int:
    model, meta = load_model(args.model)
    if (args.input is None) == (args.dataset is None):
        raise UsageError("give exactly one of --input or --dataset")
    if args.input is not None:
        X, y = _parse_inputs(args.input, model.input_dim), None
    else:
        ds, _ = _dataset_for_model(args, meta)
        _check_dims(model, ds)
        X, y = ds.X, ds.y
    y_hat, fallback = model.predict(X)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "y_hat", "fallback"] + ([] if y is None else ["y"]))
    for k, (p, f) in enumerate(zip(y_hat, fallback)):
        w.writerow([k + 1, repr(float(p)), int(f)] + ([] if y is None else [repr(float(y[k]))]))
    _write(args.output, buf.getvalue())
    return EXIT_OK


def compare_modes(model: TSModel, X) -> dict:
    """Predictions of one model under both rule-weight definitions."""
    moving, fb_m = model.with_mode(Mode.MOVING_RATE).predict(X) if len(X) else ([], [])
    matching, fb_g = model.with_mode(Mode.MATCHING_DEGREE).predict(X) if len(X) else ([], [])
    moving, matching = np.asarray(moving, float), np.asarray(matching, float)
    diff = np.abs(moving - matching)
    rows = [{"row": k + 1, "moving": float(a), "matching": float(b),
             "moving_fallback": bool(fa), "matching_fallback": bool(fb)}
            for k, (a, b, fa, fb) in enumerate(zip(moving, matching, fb_m, fb_g))]
    stats = {"n": len(rows),
             "max_abs_divergence": float(diff.max()) if len(rows) else 0.0,
             "mean_abs_divergence": float(diff.mean()) if len(rows) else 0.0,
             "rows_diverging": int(np.sum(diff > 1e-12))}
    return {"rows": rows, "stats": stats}


def cmd_compare(args) -> int:
    model, meta = load_model(args.model)
    if not isinstance(model, TSModel):
        raise UsageError("compare needs a fitted model file, not a builtin predictor")
    try:
        ds, _ = _dataset_for_model(args, meta)
        _check_dims(model, ds)
        X = ds.X
    except EmptyDataset:
        X = np.empty((0, model.input_dim))
    report = compare_modes(model, X)
    s = report["stats"]
    print(f"rows={s['n']}  diverging={s['rows_diverging']}  "
          f"max|moving-matching|={_fmt(s['max_abs_divergence'])}  "
          f"mean={_fmt(s['mean_abs_divergence'])}")
    if args.output:
        _write(args.output, dumps(report))
    return EXIT_OK


def cmd_dump_dataset(args) -> int:
    if args.dataset not in BUNDLED:
        raise UsageError(f"unknown bundled dataset {args.dataset!r}; "
                         f"choose from {', '.join(sorted(BUNDLED))}")
    ds, _ = load_dataset(args.dataset, args.lags or "none")
    if _normalize_flag(args.normalize or "off", args.dataset):
        ds, _ = normalize(ds)
    _write(args.output, ds.to_csv())
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsfuzzy",
                                description="T-S fuzzy model identification with moving-rate inference.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=False):
        if model:
            sp.add_argument("--model", required=True,
                            help="model JSON file or builtin:{true,gmdh,linear}")
        sp.add_argument("--lags", default=None,
                        help="lag spec such as 'u=3,4;y=1', 'default' or 'none'")
        sp.add_argument("--mode", choices=[m.value for m in Mode], default="moving")
        sp.add_argument("--split", choices=["interleaved", "halves"], default="interleaved")
        sp.add_argument("--output", default=None)

    fit = sub.add_parser("fit", help="identify a model")
    fit.add_argument("--dataset", required=True, help="bundled name or CSV path")
    common(fit)
    fit.add_argument("--max-rules", type=int, default=4)
    fit.add_argument("--normalize", choices=["on", "off"], default=None,
                     help="min-max scale to [0, 1] (default: on for bundled time series)")
    fit.add_argument("--threads", type=int, default=1)
    fit.add_argument("--dump-z", default=None, metavar="CSV",
                     help="write the final regression matrix for debugging")
    fit.add_argument("--quiet", action="store_true", help="suppress the stage log")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="error index, MSE and UC of a model")
    ev.add_argument("--dataset", required=True)
    common(ev, model=True)
    ev.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="predictions as CSV")
    pr.add_argument("--dataset", default=None)
    pr.add_argument("--input", default=None,
                    help="comma-separated feature row(s), rows separated by ';'")
    common(pr, model=True)
    pr.set_defaults(func=cmd_predict)

    cmp_ = sub.add_parser("compare", help="moving-rate vs matching-degree predictions")
    cmp_.add_argument("--dataset", required=True)
    common(cmp_, model=True)
    cmp_.set_defaults(func=cmd_compare)

    dump = sub.add_parser("dump-dataset", help="export a bundled table as CSV")
    dump.add_argument("--dataset", required=True)
    dump.add_argument("--lags", default=None)
    dump.add_argument("--normalize", choices=["on", "off"], default=None)
    dump.add_argument("--output", default=None)
    dump.set_defaults(func=cmd_dump_dataset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "max_rules", 1) < 1 or getattr(args, "threads", 1) < 1:
        print("error: --max-rules and --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, DataError, UnsupportedShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OptimizationFailed, EmptyProblem, UCUndefined, ArithmeticError,
            np.linalg.LinAlgError, ValueError) as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
