"""Command-line front end: train, evaluate, predict, and synthesize flow CSVs.

Exit codes: 0 success, 1 usage errors, 2 data errors, 3 training failures.
Every failure prints a single line to stderr prefixed with the failing stage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import logreg as lr_mod
from . import metrics as mt_mod
from . import preprocess as pp_mod
from . import svm as svm_mod

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

BUNDLE_FORMAT_VERSION = 1
DEFAULT_SVM_CAP = 20000
THREADS_ENV_VAR = "FLOODSIFT_THREADS"


class _StageFailure(Exception):
    """Carries the stage name and exit code of a failed pipeline step."""

    def __init__(self, stage: str, message: str, code: int):
        super().__init__(message)
        self.stage = stage
        self.message = message
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    """Validated training-run parameters; constructed before any work begins."""

    input_path: Path
    model_kind: str
    out_path: Path
    report_path: Path | None = None
    split_fraction: float = 0.8
    seed: int = 42
    svm_cap: int = DEFAULT_SVM_CAP
    logreg: lr_mod.LogRegConfig = field(default_factory=lr_mod.LogRegConfig)
    svm: svm_mod.SvmConfig = field(default_factory=svm_mod.SvmConfig)
    threads: int = 1

    def __post_init__(self):
        if self.model_kind not in ("logreg", "svm"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split fraction must lie strictly between 0 and 1")
        if self.svm_cap < 1:
            raise ValueError("svm cap must be at least 1")
        if self.threads < 1:
            raise ValueError("thread count must be at least 1")


@dataclass(eq=False)
class ModelBundle:
    """Everything needed to score new rows: schema, encoder, scaler, model."""

    model_kind: str  # "logreg" | "svm_ovo"
    schema: ds_mod.FeatureSchema
    encoder: ds_mod.LabelEncoder
    scaler: pp_mod.Scaler
    model: lr_mod.LogRegModel | svm_mod.OvoSvmModel
    metadata: dict
    format_version: int = BUNDLE_FORMAT_VERSION


def _model_to_dict(kind: str, model) -> dict:
    if kind == "logreg":
        return {
            "weights": model.weights.tolist(),
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "iterations_used": model.iterations_used,
            "final_loss": model.final_loss,
        }
    return {
        "n_classes": model.n_classes,
        "binaries": [
            {
                "class_pair": list(b.class_pair),
                "support_vectors": b.support_vectors.tolist(),
                "dual_coefs": b.dual_coefs.tolist(),
                "bias": b.bias,
                "gamma": b.gamma,
            }
            for b in model.binaries
        ],
    }


def _model_from_dict(kind: str, payload: dict):
    if kind == "logreg":
        return lr_mod.LogRegModel(
            weights=np.asarray(payload["weights"], dtype=np.float64),
            n_classes=int(payload["n_classes"]),
            n_features=int(payload["n_features"]),
            iterations_used=int(payload["iterations_used"]),
            final_loss=float(payload["final_loss"]),
        )
    binaries = tuple(
        svm_mod.BinarySvm(
            support_vectors=np.asarray(b["support_vectors"],
                                       dtype=np.float64).reshape(len(b["dual_coefs"]), -1)
            if b["dual_coefs"] else np.empty((0, ds_mod.N_FEATURES)),
            dual_coefs=np.asarray(b["dual_coefs"], dtype=np.float64),
            bias=float(b["bias"]),
            class_pair=(int(b["class_pair"][0]), int(b["class_pair"][1])),
            gamma=float(b["gamma"]),
        )
        for b in payload["binaries"]
    )
    return svm_mod.OvoSvmModel(n_classes=int(payload["n_classes"]), binaries=binaries)


def save_bundle(bundle: ModelBundle, path) -> None:
    """Write the bundle as JSON; floats round-trip exactly."""
    doc = {
        "format_version": bundle.format_version,
        "model_kind": bundle.model_kind,
        "class_names": list(ds_mod.CLASS_NAMES),
        "schema": [{"name": f.name, "kind": f.kind} for f in bundle.schema.features],
        "encoder": bundle.encoder.mapping,
        "scaler": {
            "mins": bundle.scaler.mins.tolist(),
            "maxs": bundle.scaler.maxs.tolist(),
            "newmin": bundle.scaler.newmin,
            "newmax": bundle.scaler.newmax,
        },
        "model": _model_to_dict(bundle.model_kind, bundle.model),
        "metadata": bundle.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_bundle(path) -> ModelBundle:
    """Read a bundle written by save_bundle; rejects unknown versions."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        version = doc["format_version"]
        if version != BUNDLE_FORMAT_VERSION:
            raise ValueError(f"unsupported bundle format version {version!r}")
        kind = doc["model_kind"]
        if kind not in ("logreg", "svm_ovo"):
            raise ValueError(f"unknown model kind {kind!r}")
        schema = ds_mod.FeatureSchema(tuple(
            ds_mod.FeatureDescriptor(f["name"], f["kind"]) for f in doc["schema"]
        ))
        encoder = ds_mod.LabelEncoder(
            {col: {cat: int(code) for cat, code in table.items()}
             for col, table in doc["encoder"].items()}
        )
        scaler = pp_mod.Scaler(
            mins=np.asarray(doc["scaler"]["mins"], dtype=np.float64),
            maxs=np.asarray(doc["scaler"]["maxs"], dtype=np.float64),
            newmin=float(doc["scaler"]["newmin"]),
            newmax=float(doc["scaler"]["newmax"]),
        )
        model = _model_from_dict(kind, doc["model"])
        metadata = doc.get("metadata", {})
    except KeyError as err:
        raise ValueError(f"bundle is missing field {err}") from None
    return ModelBundle(model_kind=kind, schema=schema, encoder=encoder,
                       scaler=scaler, model=model, metadata=metadata,
                       format_version=version)


def predict_with_bundle(bundle: ModelBundle, ds: ds_mod.Dataset) -> np.ndarray:
    """Score a dataset with a bundle's own encoder, scaler, and model.

    Nothing is refitted; unseen symbolic categories raise EncodingError.
    """
    X, _ = ds_mod.encode(ds, bundle.encoder)
    X = pp_mod.transform(X, bundle.scaler)
    if bundle.model_kind == "logreg":
        return lr_mod.predict(bundle.model, X)
    return svm_mod.predict_ovo(bundle.model, X)


def stratified_cap_indices(y: np.ndarray, cap: int, seed: int) -> np.ndarray:
    """Pick at most ``cap`` row indices, proportionally per class.

    Quotas use largest-remainder apportionment (ties to the lower class
    code) and every present class keeps at least one row. Rows within a
    class are chosen by the seeded shuffle, then indices are returned in
    original order.
    """
    n = len(y)
    if n <= cap:
        return np.arange(n, dtype=np.int64)
    counts = np.bincount(y)
    present = np.flatnonzero(counts > 0)
    if cap < len(present):
        raise ValueError(
            f"cap {cap} is below the number of classes present ({len(present)})"
        )
    shares = counts[present] * cap / n
    base = np.floor(shares).astype(np.int64)
    quotas = np.zeros(len(counts), dtype=np.int64)
    quotas[present] = base
    frac = shares - base
    order = np.lexsort((present, -frac))
    for idx in order[: cap - int(base.sum())]:
        quotas[present[idx]] += 1
    for c in present:
        if quotas[c] == 0:
            quotas[int(np.argmax(quotas))] -= 1
            quotas[c] = 1
    chosen = []
    for c in present:
        rows = np.flatnonzero(y == c)
        perm = pp_mod.shuffled_indices(len(rows), seed + int(c))
        chosen.append(rows[perm[: quotas[c]]])
    return np.sort(np.concatenate(chosen))


def _report_document(report: mt_mod.ClassificationReport, names) -> dict:
    """Key-value mirror of the formatted table for downstream tooling."""
    return {
        "accuracy": report.accuracy,
        "total_support": report.total_support,
        "classes": [
            {"name": name, "precision": m.precision, "recall": m.recall,
             "f1": m.f1, "support": m.support}
            for name, m in zip(names, report.per_class)
        ],
    }


def _write_report_json(report: mt_mod.ClassificationReport, names, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_report_document(report, names), fh, indent=2)
        fh.write("\n")


def _note(stage: str, message: str) -> None:
    print(f"{stage}: note: {message}", file=sys.stderr)


def cmd_train(cfg: RunConfig) -> int:
    """Load, encode, scale, split, fit, evaluate the held-out part, persist."""
    try:
        data = ds_mod.load_csv(cfg.input_path)
    except (ValueError, OSError) as err:
        raise _StageFailure("load", str(err), EXIT_DATA) from err

    duplicates = ds_mod.check_duplicates(data)
    if duplicates:
        _note("train", f"{duplicates} duplicate rows in {cfg.input_path}")

    try:
        encoder = ds_mod.fit_encoder(data)
        X_raw, y = ds_mod.encode(data, encoder)
        if y is None:
            raise ValueError("training data has no class column")
    except ValueError as err:
        raise _StageFailure("encode", str(err), EXIT_DATA) from err

    try:
        # The scaler sees the full matrix before splitting, so evaluation
        # ranges match training ranges exactly.
        scaler = pp_mod.fit_scaler(X_raw)
        X = pp_mod.transform(X_raw, scaler)
    except ValueError as err:
        raise _StageFailure("scale", str(err), EXIT_DATA) from err

    try:
        split = pp_mod.SplitSpec(train_fraction=cfg.split_fraction, seed=cfg.seed)
        X_train, y_train, X_test, y_test = pp_mod.train_test_split(X, y, split)
    except ValueError as err:
        raise _StageFailure("split", str(err), EXIT_DATA) from err

    effective_rows = len(y_train)
    try:
        if cfg.model_kind == "logreg":
            model = lr_mod.fit(X_train, y_train, cfg.logreg,
                               n_classes=ds_mod.N_CLASSES)
            model_kind = "logreg"
            config_echo = asdict(cfg.logreg)
        else:
            if len(y_train) > cfg.svm_cap:
                keep = stratified_cap_indices(y_train, cfg.svm_cap, cfg.seed)
                _note("train", f"training rows capped at {len(keep)} of "
                               f"{len(y_train)} (stratified)")
                X_train, y_train = X_train[keep], y_train[keep]
                effective_rows = len(keep)
            model = svm_mod.fit_ovo(X_train, y_train, cfg.svm,
                                    n_classes=ds_mod.N_CLASSES,
                                    threads=cfg.threads)
            model_kind = "svm_ovo"
            config_echo = asdict(cfg.svm)
    except ValueError as err:
        raise _StageFailure("train", str(err), EXIT_TRAINING) from err

    try:
        if cfg.model_kind == "logreg":
            predictions = lr_mod.predict(model, X_test)
        else:
            predictions = svm_mod.predict_ovo(model, X_test)
        cm = mt_mod.confusion_matrix(y_test, predictions, ds_mod.N_CLASSES)
        report = mt_mod.classification_report(cm)
    except ValueError as err:
        raise _StageFailure("evaluate", str(err), EXIT_DATA) from err

    metadata = {
        "seed": cfg.seed,
        "split_fraction": cfg.split_fraction,
        "trained_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config_echo,
        "svm_cap": cfg.svm_cap,
        "training_rows": len(y),
        "effective_training_rows": effective_rows,
        "duplicate_rows": duplicates,
    }
    bundle = ModelBundle(model_kind=model_kind, schema=data.schema,
                         encoder=encoder, scaler=scaler, model=model,
                         metadata=metadata)
    try:
        save_bundle(bundle, cfg.out_path)
        if cfg.report_path is not None:
            _write_report_json(report, ds_mod.CLASS_NAMES, cfg.report_path)
    except OSError as err:
        raise _StageFailure("persist", str(err), EXIT_DATA) from err

    sys.stdout.write(mt_mod.format_report(report, ds_mod.CLASS_NAMES))
    return EXIT_OK


def _load_fixture_matrix(path) -> mt_mod.ConfusionMatrix:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    matrix = np.asarray(doc["matrix"], dtype=np.int64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("fixture matrix must be square")
    if (matrix < 0).any():
        raise ValueError("fixture matrix counts must be non-negative")
    return mt_mod.ConfusionMatrix(matrix)


def cmd_evaluate(bundle_path, input_path, report_path=None,
                 fixture_path=None) -> int:
    """Report metrics for a bundle on labelled data, or from a count table.

    With ``fixture_path`` the confusion matrix is read from a JSON document
    {"matrix": [[...]]} instead of scoring any data.
    """
    if fixture_path is not None:
        try:
            cm = _load_fixture_matrix(fixture_path)
        except (ValueError, OSError) as err:
            raise _StageFailure("load", str(err), EXIT_DATA) from err
        names = (ds_mod.CLASS_NAMES if cm.n_classes == ds_mod.N_CLASSES
                 else [str(c) for c in range(cm.n_classes)])
    else:
        try:
            bundle = load_bundle(bundle_path)
            data = ds_mod.load_csv(input_path)
        except (ValueError, OSError) as err:
            raise _StageFailure("load", str(err), EXIT_DATA) from err
        try:
            _, y = ds_mod.encode(data, bundle.encoder)
            predictions = predict_with_bundle(bundle, data)
            cm = mt_mod.confusion_matrix(y, predictions, ds_mod.N_CLASSES)
        except ValueError as err:
            raise _StageFailure("evaluate", str(err), EXIT_DATA) from err
        names = ds_mod.CLASS_NAMES

    try:
        report = mt_mod.classification_report(cm)
    except ValueError as err:
        raise _StageFailure("evaluate", str(err), EXIT_DATA) from err
    if report_path is not None:
        try:
            _write_report_json(report, names, report_path)
        except OSError as err:
            raise _StageFailure("persist", str(err), EXIT_DATA) from err
    sys.stdout.write(mt_mod.format_report(report, names))
    return EXIT_OK


def cmd_predict(bundle_path, input_path, out_path) -> int:
    """Write one predicted class name per input row."""
    try:
        bundle = load_bundle(bundle_path)
        data = ds_mod.load_csv(input_path, require_label=False)
    except (ValueError, OSError) as err:
        raise _StageFailure("load", str(err), EXIT_DATA) from err
    try:
        codes = predict_with_bundle(bundle, data)
    except ValueError as err:
        raise _StageFailure("predict", str(err), EXIT_DATA) from err
    names = [ds_mod.CLASS_NAMES[c] for c in codes]
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            for name in names:
                fh.write(name + "\n")
    except OSError as err:
        raise _StageFailure("persist", str(err), EXIT_DATA) from err
    return EXIT_OK


def cmd_gensynth(n, seed, separation, proportions, out_path) -> int:
    """Generate a synthetic labelled corpus and write it as CSV."""
    try:
        data = ds_mod.generate_synthetic(n, proportions=proportions,
                                         separation=separation, seed=seed)
    except ValueError as err:
        raise _StageFailure("usage", str(err), EXIT_USAGE) from err
    try:
        ds_mod.save_csv(data, out_path)
    except OSError as err:
        raise _StageFailure("persist", str(err), EXIT_DATA) from err
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _StageFailure("usage", message, EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="floodsift",
                     description="Flow-record DDoS traffic classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a classifier on a labelled CSV")
    train.add_argument("--model", required=True, choices=("logreg", "svm"))
    train.add_argument("--input", required=True, type=Path)
    train.add_argument("--split", type=float, default=0.8,
                       help="training fraction (default 0.8)")
    train.add_argument("--seed", type=int, default=42)
    train.add_argument("--svm-cap", type=int, default=DEFAULT_SVM_CAP,
                       help="stratified row cap for SVM training")
    train.add_argument("--report", type=Path, default=None,
                       help="also write the metrics as JSON")
    train.add_argument("--out", required=True, type=Path)

    evaluate = sub.add_parser("evaluate", help="score a bundle on labelled data")
    evaluate.add_argument("--bundle", type=Path, default=None)
    evaluate.add_argument("--input", type=Path, default=None)
    evaluate.add_argument("--report", type=Path, default=None,
                          help="also write the metrics as JSON")
    evaluate.add_argument("--confusion-fixture", type=Path, default=None,
                          help=argparse.SUPPRESS)

    predict = sub.add_parser("predict", help="label new rows with a bundle")
    predict.add_argument("--bundle", required=True, type=Path)
    predict.add_argument("--input", required=True, type=Path)
    predict.add_argument("--out", required=True, type=Path)

    gensynth = sub.add_parser("gensynth", help="write a synthetic labelled CSV")
    gensynth.add_argument("--n", required=True, type=int)
    gensynth.add_argument("--seed", type=int, default=42)
    gensynth.add_argument("--separation", type=float, default=6.0)
    gensynth.add_argument("--proportions", type=str, default=None,
                          help="five comma-separated class fractions")
    gensynth.add_argument("--out", required=True, type=Path)

    return parser


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise _StageFailure(
            "usage", f"{THREADS_ENV_VAR} must be an integer, got {raw!r}",
            EXIT_USAGE) from None
    if threads < 1:
        raise _StageFailure(
            "usage", f"{THREADS_ENV_VAR} must be at least 1", EXIT_USAGE)
    return threads


def _parse_proportions(raw: str | None):
    if raw is None:
        return None
    parts = raw.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise _StageFailure("usage", f"bad proportions {raw!r}",
                            EXIT_USAGE) from None
    return values


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "train":
            try:
                cfg = RunConfig(input_path=args.input, model_kind=args.model,
                                out_path=args.out, report_path=args.report,
                                split_fraction=args.split, seed=args.seed,
                                svm_cap=args.svm_cap,
                                threads=_threads_from_env())
            except ValueError as err:
                raise _StageFailure("usage", str(err), EXIT_USAGE) from err
            return cmd_train(cfg)
        if args.command == "evaluate":
            if args.confusion_fixture is None and \
                    (args.bundle is None or args.input is None):
                raise _StageFailure(
                    "usage", "evaluate needs --bundle and --input", EXIT_USAGE)
            return cmd_evaluate(args.bundle, args.input, args.report,
                                args.confusion_fixture)
        if args.command == "predict":
            return cmd_predict(args.bundle, args.input, args.out)
        return cmd_gensynth(args.n, args.seed, args.separation,
                            _parse_proportions(args.proportions), args.out)
    except _StageFailure as failure:
        print(f"{failure.stage}: {failure.message}", file=sys.stderr)
        return failure.code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
