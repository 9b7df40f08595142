"""Command-line pipeline: synth, extract, train, eval, predict, dump-kernels.

Exit codes: 0 success, 2 empty/invalid dataset directory, 3 unreadable page,
4 malformed feature CSV, 5 model/flag contract mismatch, 6 degenerate
training data. Every command is deterministic given its flags and inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import classify, features, gabor, synth
from .preprocess import GABOR_INPUTS, POLARITIES, PreprocessConfig, prepare_page
from .quadtree import decompose
from .raster import GrayImage, load_image, to_grayscale

EXIT_EMPTY_DATASET = 2
EXIT_UNREADABLE_PAGE = 3
EXIT_MALFORMED_CSV = 4
EXIT_CONTRACT_MISMATCH = 5
EXIT_DEGENERATE_DATA = 6

ORIENTATION_STEPS = {"pi/6": math.pi / 6.0, "pi/8": math.pi / 8.0}
PAGE_SUFFIXES = (".png", ".bmp")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid hidden layer list: {text!r}")
    if not sizes or any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError("hidden layer sizes must be positive")
    return sizes


def _parse_levels(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level list: {text!r}")


def _extraction_parent(for_predict: bool = False) -> argparse.ArgumentParser:
    # predict mode defaults to None so only explicit flags are checked
    # against the model's stored extraction config
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: None) if for_predict else (lambda v: v)
    p.add_argument("--level", type=int, default=d(2), help="quad-tree decomposition level")
    p.add_argument("--sigma", type=float, default=d(gabor.DEFAULT_SIGMA),
                   help="Gabor envelope width sigma")
    p.add_argument("--kernel-size", type=int, default=d(gabor.DEFAULT_KERNEL_SIZE),
                   help="Gabor kernel side length in pixels")
    p.add_argument("--orientation-step", choices=sorted(ORIENTATION_STEPS),
                   default=d("pi/6"), help="angular spacing between orientations")
    p.add_argument("--min-foreground", type=float, default=d(0.0),
                   help="drop blocks with a lower foreground ratio (0 disables)")
    p.add_argument("--denoise-sigma", type=float, default=d(1.0),
                   help="Gaussian denoise sigma (pixels)")
    p.add_argument("--denoise-radius", type=int, default=d(3),
                   help="Gaussian denoise kernel radius (pixels)")
    p.add_argument("--polarity", choices=POLARITIES, default=d("auto"),
                   help="which side of the threshold is ink")
    p.add_argument("--gabor-input", choices=GABOR_INPUTS, default=d("smoothed-binary"),
                   help="raster fed to the filter bank")
    return p


def _train_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--hidden", type=_parse_hidden, default=(35,),
                   help="hidden layer sizes, comma separated")
    p.add_argument("--epochs", type=int, default=500, help="training epochs")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--momentum", type=float, default=0.9, help="momentum coefficient")
    p.add_argument("--l2", type=float, default=0.0, help="L2 weight decay")
    p.add_argument("--seed", type=int, default=42, help="RNG seed")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scriptid",
        description="Texture-based script identification over quad-tree page blocks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", help="generate a synthetic grating corpus",
                       formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, default=6, help="number of classes (1..12)")
    p.add_argument("--pages", type=int, default=10, help="pages per class")
    p.add_argument("--noise", type=float, default=0.1, help="additive noise stddev")
    p.add_argument("--seed", type=int, default=42, help="RNG seed")
    p.add_argument("--page-size", type=int, default=256, help="page side length in pixels")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract block features to CSV",
                       parents=[_extraction_parent()], formatter_class=fmt)
    p.add_argument("data_dir", help="dataset directory: <dir>/<label>/<page>.(png|bmp)")
    p.add_argument("--out", required=True, help="output feature CSV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the MLP on a feature CSV",
                       parents=[_extraction_parent(), _train_parent()], formatter_class=fmt)
    p.add_argument("features_csv", help="feature CSV from 'extract'")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validate and print the metric table",
                       parents=[_extraction_parent(), _train_parent()], formatter_class=fmt)
    p.add_argument("data", help="feature CSV, or a dataset directory to extract from")
    p.add_argument("--folds", type=int, default=3, help="cross-validation folds")
    p.add_argument("--classifier", choices=("mlp", "knn"), default="mlp",
                   help="classifier to evaluate")
    p.add_argument("--knn-k", type=int, default=1, help="neighbor count for knn")
    p.add_argument("--no-stratify", action="store_true",
                   help="plain shuffled folds instead of stratified")
    p.add_argument("--report", help="write the evaluation report JSON here")
    p.add_argument("--sweep-levels", type=_parse_levels, default=None,
                   help="comma list of levels to re-extract and evaluate")
    p.add_argument("--sweep-out", help="write the per-level accuracy CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one page with a trained model",
                       parents=[_extraction_parent(for_predict=True)], formatter_class=fmt)
    p.add_argument("model", help="model JSON from 'train'")
    p.add_argument("image", help="page image (PNG or BMP)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("dump-kernels", help="write kernel grids as CSV and PGM",
                       formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sigma", type=float, default=gabor.DEFAULT_SIGMA,
                   help="Gabor envelope width sigma")
    p.add_argument("--kernel-size", type=int, default=gabor.DEFAULT_KERNEL_SIZE,
                   help="kernel side length in pixels")
    p.add_argument("--orientation-step", choices=sorted(ORIENTATION_STEPS), default="pi/6",
                   help="angular spacing between orientations")
    p.set_defaults(func=cmd_dump_kernels)

    return parser


def _extraction_config(args) -> dict:
    return {
        "level": args.level,
        "sigma": args.sigma,
        "kernel_size": args.kernel_size,
        "orientation_step": args.orientation_step,
        "min_foreground": args.min_foreground,
        "denoise_sigma": args.denoise_sigma,
        "denoise_radius": args.denoise_radius,
        "polarity": args.polarity,
        "gabor_input": args.gabor_input,
    }


def _bank_from(config: dict) -> gabor.FilterBank:
    return gabor.make_filter_bank(
        size=config["kernel_size"],
        sigma=config["sigma"],
        orientation_step=ORIENTATION_STEPS[config["orientation_step"]],
    )


def _pre_from(config: dict) -> PreprocessConfig:
    return PreprocessConfig(
        denoise_sigma=config["denoise_sigma"],
        denoise_radius=config["denoise_radius"],
        polarity=config["polarity"],
        gabor_input=config["gabor_input"],
    )


def _scan_dataset_dir(root: Path) -> list[tuple[str, str, Path]]:
    """Sorted (page_id, label, path) triples from <root>/<label>/<page>."""
    pages = []
    if root.is_dir():
        for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            for path in sorted(class_dir.iterdir()):
                if path.suffix.lower() in PAGE_SUFFIXES and path.is_file():
                    pages.append((path.stem, class_dir.name, path))
    return pages


def _load_pages(entries) -> list[tuple[str, str, GrayImage]]:
    loaded = []
    for page_id, label, path in entries:
        try:
            loaded.append((page_id, label, to_grayscale(load_image(path))))
        except (OSError, ValueError) as exc:
            raise _PageLoadError(path, exc) from exc
    return loaded


class _PageLoadError(Exception):
    def __init__(self, path: Path, cause: Exception):
        super().__init__(f"cannot read page {path}: {cause}")
        self.path = path


def cmd_synth(args) -> int:
    spec = synth.default_spec(
        n_classes=args.classes,
        pages_per_class=args.pages,
        noise_level=args.noise,
        seed=args.seed,
        page_size=(args.page_size, args.page_size),
    )
    written = synth.write_corpus(spec, args.out)
    print(f"wrote {len(written)} pages for {len(spec.classes)} classes under {args.out}")
    return 0


def _extract_dataset_from_dir(root: str, config: dict) -> features.Dataset:
    entries = _scan_dataset_dir(Path(root))
    if not entries:
        raise _EmptyDatasetError(root)
    pages = _load_pages(entries)
    return features.extract_dataset(
        pages,
        level=config["level"],
        bank=_bank_from(config),
        min_foreground=config["min_foreground"],
        pre=_pre_from(config),
    )


class _EmptyDatasetError(Exception):
    def __init__(self, root):
        super().__init__(f"no class directories with pages found under {root}")


def cmd_extract(args) -> int:
    config = _extraction_config(args)
    try:
        ds = _extract_dataset_from_dir(args.data_dir, config)
    except _EmptyDatasetError as exc:
        return _fail(EXIT_EMPTY_DATASET, str(exc))
    except _PageLoadError as exc:
        return _fail(EXIT_UNREADABLE_PAGE, str(exc))
    features.write_csv(ds, args.out)
    print(f"wrote {len(ds.samples)} samples x {features.FEATURE_COUNT} features to {args.out}")
    return 0


def _train_config(args) -> classify.TrainConfig:
    return classify.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        momentum=args.momentum,
        seed=args.seed,
        hidden_sizes=args.hidden,
        l2=args.l2,
    )


def cmd_train(args) -> int:
    try:
        ds = features.read_csv(args.features_csv)
    except features.MalformedCsvError as exc:
        return _fail(EXIT_MALFORMED_CSV, f"{args.features_csv}: {exc}")
    except OSError as exc:
        return _fail(EXIT_MALFORMED_CSV, str(exc))
    try:
        model = classify.train_mlp(ds, _train_config(args))
    except classify.DegenerateDatasetError as exc:
        return _fail(EXIT_DEGENERATE_DATA, str(exc))
    labels, _ = classify.predict_batch(model, ds.matrix())
    train_acc = float(np.mean([a == b for a, b in zip(labels, ds.labels())]))
    classify.save_model(model, args.out, _extraction_config(args))
    print(f"trained on {len(ds.samples)} samples, {len(ds.classes)} classes")
    print(f"final training accuracy {train_acc:.4f}, loss {model.loss_history[-1]:.6f}")
    print(f"model written to {args.out}")
    return 0


def _format_table(report: classify.EvalReport) -> str:
    header = ["Class", "Kappa", "MAE", "RMSE", "TPR", "FPR",
              "Precision", "Recall", "F-measure", "AUC"]
    rows = [header]
    for m in report.per_class:
        rows.append([m.label, "-", "-", "-",
                     f"{m.tpr:.3f}", f"{m.fpr:.3f}", f"{m.precision:.3f}",
                     f"{m.recall:.3f}", f"{m.f_measure:.3f}", f"{m.auc:.3f}"])
    rows.append(["Mean", f"{report.kappa:.4f}", f"{report.mae:.4f}", f"{report.rmse:.4f}",
                 f"{report.mean_tpr:.3f}", f"{report.mean_fpr:.3f}",
                 f"{report.mean_precision:.3f}", f"{report.mean_recall:.3f}",
                 f"{report.mean_f_measure:.3f}", f"{report.mean_auc:.3f}"])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                               for i, cell in enumerate(r)))
    return "\n".join(lines)


def _per_class_counts(ds: features.Dataset) -> dict[str, int]:
    counts = {c: 0 for c in ds.classes}
    for s in ds.samples:
        counts[s.label] += 1
    return counts


def cmd_eval(args) -> int:
    config = _extraction_config(args)
    cfg = _train_config(args)
    source = Path(args.data)

    if args.sweep_levels:
        if not source.is_dir():
            return _fail(EXIT_EMPTY_DATASET,
                         "--sweep-levels needs a dataset directory to re-extract from")
        sweep_rows = []
        for level in args.sweep_levels:
            level_config = dict(config, level=level)
            try:
                ds = _extract_dataset_from_dir(args.data, level_config)
            except _EmptyDatasetError as exc:
                return _fail(EXIT_EMPTY_DATASET, str(exc))
            except _PageLoadError as exc:
                return _fail(EXIT_UNREADABLE_PAGE, str(exc))
            try:
                report, _ = classify.cross_validate(
                    ds, args.folds, cfg, args.classifier, args.knn_k,
                    stratify=not args.no_stratify)
            except (classify.DegenerateDatasetError, classify.StratificationError) as exc:
                return _fail(EXIT_DEGENERATE_DATA, str(exc))
            counts = set(_per_class_counts(ds).values())
            per_class = str(counts.pop()) if len(counts) == 1 else ""
            sweep_rows.append((level, per_class, len(ds.samples), report.accuracy))
        lines = ["level,blocks_per_class,samples,accuracy"]
        for level, per_class, n, acc in sweep_rows:
            lines.append(f"{level},{per_class},{n},{repr(acc)}")
            print(f"level {level}: {per_class or '?'} blocks/class, "
                  f"{n} samples, accuracy {100.0 * acc:.2f}%")
        if args.sweep_out:
            Path(args.sweep_out).write_text("\n".join(lines) + "\n",
                                            encoding="utf-8", newline="\n")
            print(f"sweep CSV written to {args.sweep_out}")
        return 0

    if source.is_dir():
        try:
            ds = _extract_dataset_from_dir(args.data, config)
        except _EmptyDatasetError as exc:
            return _fail(EXIT_EMPTY_DATASET, str(exc))
        except _PageLoadError as exc:
            return _fail(EXIT_UNREADABLE_PAGE, str(exc))
    else:
        try:
            ds = features.read_csv(args.data)
        except features.MalformedCsvError as exc:
            return _fail(EXIT_MALFORMED_CSV, f"{args.data}: {exc}")
        except OSError as exc:
            return _fail(EXIT_MALFORMED_CSV, str(exc))

    try:
        report, fold_reports = classify.cross_validate(
            ds, args.folds, cfg, args.classifier, args.knn_k,
            stratify=not args.no_stratify)
    except (classify.DegenerateDatasetError, classify.StratificationError) as exc:
        return _fail(EXIT_DEGENERATE_DATA, str(exc))

    print(f"{args.classifier} {args.folds}-fold cross-validation on "
          f"{len(ds.samples)} samples, {len(ds.classes)} classes")
    print(f"aggregate accuracy {100.0 * report.accuracy:.2f}%")
    print(_format_table(report))
    if args.report:
        doc = report.to_dict()
        doc["folds"] = [r.to_dict() for r in fold_reports]
        doc["metadata"] = {
            "level": config["level"],
            "sigma": config["sigma"],
            "kernel_size": config["kernel_size"],
            "orientation_step": config["orientation_step"],
            "seed": cfg.seed,
            "folds": args.folds,
            "classifier": args.classifier,
        }
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"report written to {args.report}")
    return 0


def cmd_predict(args) -> int:
    try:
        model, extraction = classify.load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(EXIT_CONTRACT_MISMATCH, f"cannot load model {args.model}: {exc}")
    if not extraction:
        return _fail(EXIT_CONTRACT_MISMATCH,
                     f"model {args.model} carries no extraction config")

    requested = _extraction_config(args)
    conflicts = {
        key: (extraction.get(key), val)
        for key, val in requested.items()
        if val is not None and extraction.get(key) != val
    }
    if conflicts:
        detail = ", ".join(f"{k}: model={m!r} flag={f!r}" for k, (m, f) in conflicts.items())
        print(f"model extraction config: {extraction}", file=sys.stderr)
        print(f"requested overrides:     {requested}", file=sys.stderr)
        return _fail(EXIT_CONTRACT_MISMATCH, f"extraction contract mismatch ({detail})")

    try:
        page = to_grayscale(load_image(args.image))
    except (OSError, ValueError) as exc:
        return _fail(EXIT_UNREADABLE_PAGE, f"cannot read page {args.image}: {exc}")

    bank = _bank_from(extraction)
    prepared = prepare_page(page, _pre_from(extraction))
    decomp = decompose(prepared, extraction["level"], Path(args.image).stem)
    blocks = []
    prob_sums = np.zeros(len(model.class_labels))
    votes = {label: 0 for label in model.class_labels}
    for block in decomp.blocks:
        fv = features.extract_features(block.pixels, bank)
        label, probs = classify.predict(model, fv)
        votes[label] += 1
        prob_sums += probs
        blocks.append((block.row, block.col, label, float(probs.max())))

    top = max(votes.values())
    tied = [label for label, n in votes.items() if n == top]
    if len(tied) == 1:
        page_label = tied[0]
    else:
        mean_probs = prob_sums / len(decomp.blocks)
        page_label = max(tied, key=lambda lab: mean_probs[model.class_labels.index(lab)])

    if args.json:
        print(json.dumps({
            "page": Path(args.image).stem,
            "page_label": page_label,
            "votes": votes,
            "blocks": [
                {"row": r, "col": c, "label": lab, "probability": p}
                for r, c, lab, p in blocks
            ],
        }, indent=2))
    else:
        for r, c, lab, p in blocks:
            print(f"block ({r},{c}): {lab} p={p:.4f}")
        print(f"page label: {page_label} ({votes[page_label]}/{len(blocks)} blocks)")
    return 0


def cmd_dump_kernels(args) -> int:
    bank = gabor.make_filter_bank(
        size=args.kernel_size,
        sigma=args.sigma,
        orientation_step=ORIENTATION_STEPS[args.orientation_step],
    )
    written = gabor.dump_kernels(bank, args.out)
    print(f"wrote {len(written)} kernel files to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        # parameter errors not claimed by a more specific exit code
        return _fail(EXIT_EMPTY_DATASET, str(exc))


if __name__ == "__main__":
    sys.exit(main())
