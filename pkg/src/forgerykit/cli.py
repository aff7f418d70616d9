"""Command-line surface wiring the pipeline end to end.

Subcommands: synth, prepare, train, score, calibrate, evaluate, compare.
Every command validates its inputs before doing work, writes outputs
atomically, and is idempotent: identical inputs and seeds produce
byte-identical outputs.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable or invalid files), 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import calibration as cal_mod
from . import codec
from . import config as cfg_mod
from . import dataset as ds_mod
from . import metrics as metrics_mod
from . import nn
from . import report as report_mod
from .errors import ForgerykitError
from .utils import atomic_write_text, format_real

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="forgerykit",
        description=(
            "Forgery-detection pipeline: compression-difference features, "
            "desk-scale CNN training, Youden threshold calibration, and "
            "balanced evaluation reports."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic splice-style dataset")
    p.add_argument("--authentic", type=int, required=True, help="number of authentic images")
    p.add_argument("--tampered", type=int, required=True, help="number of tampered images")
    p.add_argument("--size", type=int, default=64, help="square image size in pixels")
    p.add_argument("--seed", type=int, default=None, help="generator seed")
    p.add_argument("--out", type=Path, required=True, help="output dataset directory")
    p.add_argument("--base-quality", type=int, default=90, help="JPEG quality of the base images")
    p.add_argument("--patch-quality", type=int, default=40, help="JPEG quality of the spliced patch")
    p.add_argument("--patch-noise", type=float, default=24.0, help="noise sigma added to the patch source")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="scan a dataset tree and assign stratified splits")
    p.add_argument("--root", type=Path, required=True, help="dataset root directory")
    p.add_argument("--authentic-dir", default="authentic", help="authentic class subdirectory")
    p.add_argument("--tampered-dir", default="tampered", help="tampered class subdirectory")
    p.add_argument("--train-ratio", type=float, default=None, help="train fraction (default 0.7, or 0.8 with --replication-split)")
    p.add_argument("--val-ratio", type=float, default=None, help="validation fraction (three-way mode, default 0.1)")
    p.add_argument(
        "--replication-split",
        action="store_true",
        help="two-way 80:20 split with the test set doubling as validation",
    )
    p.add_argument("--seed", type=int, default=None, help="shuffle seed")
    p.add_argument("--out", type=Path, required=True, help="output manifest path (JSON Lines)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train the desk-scale classifier on a manifest")
    _add_run_config_flags(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--root", type=Path, required=True, help="dataset root the manifest ids are relative to")
    p.add_argument("--out", type=Path, required=True, help="output checkpoint path")
    p.add_argument(
        "--val-split",
        choices=["val", "test"],
        default=None,
        help="which split monitors early stopping (default: val, or test when absent)",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a manifest split with a trained model")
    p.add_argument("--model", type=Path, required=True, help="checkpoint path")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--input-mode", choices=sorted(cfg_mod.INPUT_MODES), default=None)
    p.add_argument("--jpeg-quality", type=int, default=None)
    p.add_argument("--chroma-subsampling", choices=["4:2:0", "4:4:4"], default=None)
    p.add_argument("--config", type=Path, default=None, help="TOML config file")
    p.add_argument("--jobs", type=int, default=None, help="preprocessing workers (default: logical cores)")
    p.add_argument("--out", type=Path, required=True, help="output score CSV path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", help="select the Youden-optimal threshold for a score set")
    p.add_argument("--scores", type=Path, required=True, help="score CSV path")
    p.add_argument("--model-id", required=True)
    p.add_argument(
        "--fixed-threshold",
        type=float,
        default=None,
        help="record a fixed cutoff instead of sweeping (baseline comparisons)",
    )
    p.add_argument("--out", type=Path, required=True, help="output calibration JSON path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="build the evaluation report for a score set")
    p.add_argument("--scores", type=Path, required=True, help="score CSV path")
    p.add_argument("--calibration", type=Path, default=None, help="calibration JSON path")
    p.add_argument("--fixed-threshold", type=float, default=None, help="evaluate at a fixed cutoff instead")
    p.add_argument("--model-id", default=None, help="model id (required with --fixed-threshold)")
    p.add_argument("--averaging", choices=sorted(cfg_mod.AVERAGING_MODES), default="weighted")
    p.add_argument("--config", type=Path, default=None,
                   help="TOML config whose preprocessing settings are echoed into the report")
    p.add_argument("--out", type=Path, required=True, help="output report JSON path")
    p.add_argument("--roc-csv", type=Path, default=None, help="also export the ROC curve as CSV")
    p.add_argument("--confusion-csv", type=Path, default=None, help="also export the confusion matrix as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compare evaluation reports column by column")
    p.add_argument("reports", nargs="+", type=Path, help="report JSON paths")
    p.add_argument("--out-csv", type=Path, default=None, help="also write the table as CSV")
    p.set_defaults(func=cmd_compare)

    return parser


def _add_run_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="TOML config file (flags win)")
    p.add_argument("--input-mode", choices=sorted(cfg_mod.INPUT_MODES), default=None)
    p.add_argument("--input-size", type=int, default=None, help="square input size (default 64)")
    p.add_argument("--jpeg-quality", type=int, default=None, help="recompression quality (default 90)")
    p.add_argument("--chroma-subsampling", choices=["4:2:0", "4:4:4"], default=None)
    p.add_argument("--hidden-units", type=int, default=None)
    p.add_argument("--dropout-rate", type=float, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="preprocessing workers (default: logical cores)")


def _resolve_seed(flag_seed: int | None) -> int:
    if flag_seed is not None:
        return flag_seed
    env = cfg_mod.env_seed()
    return env if env is not None else 0


def _jobs(flag_jobs: int | None) -> int:
    if flag_jobs is not None:
        if flag_jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return flag_jobs
    return os.cpu_count() or 1


def cmd_synth(args) -> int:
    manifest = ds_mod.generate_synthetic_dataset(
        n_authentic=args.authentic,
        n_tampered=args.tampered,
        size=args.size,
        seed=_resolve_seed(args.seed),
        out_dir=args.out,
        base_quality=args.base_quality,
        patch_quality=args.patch_quality,
        patch_noise=args.patch_noise,
    )
    counts = manifest.class_counts()
    print(
        f"wrote {counts[ds_mod.Label.AUTHENTIC]} authentic + "
        f"{counts[ds_mod.Label.TAMPERED]} tampered images to {args.out}"
    )
    return EXIT_OK


def cmd_prepare(args) -> int:
    layout = ds_mod.DatasetLayout(args.authentic_dir, args.tampered_dir)
    manifest = ds_mod.scan_dataset(args.root, layout)
    seed = _resolve_seed(args.seed)
    if args.replication_split:
        if args.val_ratio is not None:
            raise UsageError("--val-ratio has no effect with --replication-split")
        ratio = args.train_ratio if args.train_ratio is not None else 0.8
        manifest = ds_mod.stratified_split(manifest, ratio, seed)
    else:
        train_ratio = args.train_ratio if args.train_ratio is not None else 0.7
        val_ratio = args.val_ratio if args.val_ratio is not None else 0.1
        manifest = ds_mod.stratified_split_three(manifest, train_ratio, val_ratio, seed)
    manifest.save(args.out)
    splits = {s.value: len(manifest.by_split(s)) for s in ds_mod.Split}
    print(
        f"manifest {args.out}: train={splits['train']} val={splits['val']} "
        f"test={splits['test']}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    config_doc = cfg_mod.load_config_file(args.config) if args.config else {}
    run = cfg_mod.build_run_config(args, config_doc)
    manifest = ds_mod.Manifest.load(args.manifest)
    val_split = ds_mod.Split(args.val_split) if args.val_split else None

    def log_epoch(epoch: int, train_loss: float, val_loss: float) -> None:
        print(
            f"epoch={epoch} train_loss={train_loss:.6f} val_loss={val_loss:.6f}",
            flush=True,
        )

    model = nn.train(
        manifest,
        args.root,
        run.preprocess,
        run.model,
        run.training,
        val_split=val_split,
        on_epoch=log_epoch,
        jobs=_jobs(args.jobs),
    )
    nn.save_model(model, args.out)
    print(
        f"done epochs_run={model.epochs_run} "
        f"best_val_loss={format_real(model.best_val_loss)} checkpoint={args.out}"
    )
    return EXIT_OK


def cmd_score(args) -> int:
    config_doc = cfg_mod.load_config_file(args.config) if args.config else {}
    model = nn.load_model(args.model)
    # 6-channel checkpoints are unambiguously hybrid; 3-channel ones default
    # to rgb and need --input-mode fdiff when trained on residuals alone.
    default_mode = "hybrid" if model.config.input_channels == 6 else "rgb"
    mode_name = cfg_mod.resolve(args.input_mode, config_doc, "preprocess", "input_mode", default_mode)
    preprocess = codec.PreprocessConfig(
        target_size=(model.config.input_size, model.config.input_size),
        jpeg_quality=int(
            cfg_mod.resolve(args.jpeg_quality, config_doc, "preprocess", "jpeg_quality", 90)
        ),
        input_mode=cfg_mod.INPUT_MODES[mode_name],
        chroma_subsampling=cfg_mod.resolve(
            args.chroma_subsampling, config_doc, "preprocess", "chroma_subsampling", "4:2:0"
        ),
    )
    if preprocess.input_channels != model.config.input_channels:
        raise UsageError(
            f"input mode {mode_name!r} produces {preprocess.input_channels} channels "
            f"but the checkpoint expects {model.config.input_channels}"
        )
    manifest = ds_mod.Manifest.load(args.manifest)
    scores = nn.predict_scores(
        model,
        manifest,
        args.root,
        preprocess,
        split=ds_mod.Split(args.split),
        jobs=_jobs(args.jobs),
    )
    cal_mod.save_scores(scores, args.out)
    print(f"scored {len(scores)} {args.split} samples -> {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    scores = cal_mod.import_scores(args.scores)
    if args.fixed_threshold is not None:
        cal = cal_mod.fixed_threshold_calibration(scores, args.fixed_threshold, args.model_id)
    else:
        cal = cal_mod.youden_optimal_threshold(scores, args.model_id)
    cal_mod.save_calibration(cal, args.out)
    print(
        f"model={cal.model_id} threshold={format_real(cal.threshold)} "
        f"youden_j={format_real(cal.youden_j)} -> {args.out}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if (args.calibration is None) == (args.fixed_threshold is None):
        raise UsageError("provide exactly one of --calibration or --fixed-threshold")
    scores = cal_mod.import_scores(args.scores)
    if args.calibration is not None:
        cal = cal_mod.load_calibration(args.calibration)
    else:
        if args.model_id is None:
            raise UsageError("--fixed-threshold requires --model-id")
        cal = cal_mod.fixed_threshold_calibration(scores, args.fixed_threshold, args.model_id)
    averaging = cfg_mod.AVERAGING_MODES[args.averaging]
    echo = {
        "averaging": averaging.value,
        "threshold_source": "calibration" if args.calibration is not None else "fixed",
    }
    if args.config is not None:
        # Scores arrive as a bare CSV; a config file is how the producing
        # run's preprocessing settings reach the report.
        doc = cfg_mod.load_config_file(args.config)
        section = doc.get("preprocess", {})
        size = section.get("input_size")
        echo = {
            "input_mode": section.get("input_mode", "hybrid"),
            "target_size": [size, size] if size is not None else [64, 64],
            "jpeg_quality": section.get("jpeg_quality", 90),
            "chroma_subsampling": section.get("chroma_subsampling", "4:2:0"),
            **echo,
        }
    rep = report_mod.evaluate(scores, cal, averaging, config_echo=echo)
    report_mod.save_report(rep, args.out)
    if args.roc_csv is not None:
        atomic_write_text(args.roc_csv, metrics_mod.roc_to_csv(metrics_mod.roc_curve(scores)))
    if args.confusion_csv is not None:
        atomic_write_text(args.confusion_csv, report_mod.export_confusion(rep.confusion))
    m = rep.metrics
    print(
        f"model={rep.model_id} accuracy={m.accuracy:.3f} mcc={m.mcc:.3f} "
        f"auc={m.auc:.3f} threshold={format_real(m.threshold)} -> {args.out}"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    reports = [report_mod.load_report(path) for path in args.reports]
    table = report_mod.compare_models(reports)
    sys.stdout.write(table.to_text())
    if args.out_csv is not None:
        atomic_write_text(args.out_csv, table.to_csv())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ForgerykitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
