"""``padbench`` command-line entry point.

stdout carries machine-readable results (JSON or CSV); diagnostics go to
stderr. Exit status: 0 success, 1 domain/validation error, 2 usage error.
Every invocation writes a run manifest (config, seed, library versions) to
``--run-dir`` (default ``$PADBENCH_RUN_DIR`` or ``.padbench/runs``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
from pathlib import Path

import yaml

from padbench import __version__
from padbench.errors import ConfigurationError, PadbenchError

log = logging.getLogger("padbench")

CONFIG_SCHEMA_VERSION = 1
TRAIN_KEYS = ("epochs", "batch_size", "learning_rate", "momentum", "seed")


def _versions() -> dict[str, str]:
    import numpy
    import sklearn
    import torch
    import torchvision

    return {
        "padbench": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "torch": torch.__version__,
        "torchvision": torchvision.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_run_manifest(args: argparse.Namespace, results: dict | None = None) -> Path:
    run_dir = Path(args.run_dir or os.environ.get("PADBENCH_RUN_DIR") or ".padbench/runs")
    run_dir.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "run_dir", "verbose")}
    doc = {
        "schema_version": 1,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config": _jsonable(config),
        "versions": _versions(),
        "results": _jsonable(results or {}),
    }
    path = run_dir / f"{args.command}.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------


def cmd_backbone(args) -> dict:
    from padbench.model import write_backbone_checkpoint

    path = write_backbone_checkpoint(args.out, seed=args.seed, source=args.source)
    result = {"checkpoint": str(path), "source": args.source}
    _emit(result)
    return result


def cmd_fixture(args) -> dict:
    from padbench.dataset import FixtureConfig, save_manifest, synthesize_fixture

    cfg = FixtureConfig(
        n_subjects=args.subjects,
        n_bonafide_per_subject=args.bonafide_per_subject,
        pais_list=tuple(p.strip() for p in args.pais.split(",") if p.strip()),
        n_attack_per_pais=args.attacks_per_pais,
        image_size=args.image_size,
        seed=args.seed,
    )
    manifest = synthesize_fixture(cfg, args.out)
    manifest_path = Path(args.manifest_out or Path(args.out) / "manifest.json")
    save_manifest(manifest, manifest_path)
    result = {"directory": args.out, "manifest": str(manifest_path), "counts": manifest.counts}
    _emit(result)
    return result


def cmd_ingest(args) -> dict:
    from padbench.dataset import build_manifest, save_manifest

    claimed = json.loads(Path(args.claimed_totals).read_text()) if args.claimed_totals else None
    manifest = build_manifest(args.root, claimed)
    save_manifest(manifest, args.out)
    for path, reason in manifest.skipped:
        log.warning("skipped %s: %s", path, reason)
    result = {"manifest": args.out, "counts": manifest.counts, "skipped": len(manifest.skipped)}
    _emit(result)
    return result


def cmd_validate(args) -> dict:
    from padbench.dataset import load_manifest, validate_manifest

    findings = validate_manifest(load_manifest(args.manifest), check_files=not args.no_check_files)
    result = {"passed": not findings, "findings": [{"kind": f.kind, "message": f.message} for f in findings]}
    _emit(result)
    if findings:
        for f in findings:
            log.error("%s", f)
        raise _Failed(result)
    return result


def cmd_split(args) -> dict:
    from padbench.dataset import SplitSpec, load_manifest, save_manifest, split

    spec = SplitSpec(args.mode, args.test_fraction, args.held_out, args.seed)
    parts = split(load_manifest(args.manifest), spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = {}
    for name, m in parts.items():
        save_manifest(m, out / f"{name}.json")
        result[name] = {"manifest": str(out / f"{name}.json"), "counts": m.counts}
    _emit(result)
    return result


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict) or data.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ConfigurationError(f"{path}: config needs schema_version: {CONFIG_SCHEMA_VERSION}")
    unknown = set(data) - {"schema_version", "variant", "backbone", "task", "train"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown config keys {sorted(unknown)}")
    bad = set(data.get("train") or {}) - set(TRAIN_KEYS)
    if bad:
        raise ConfigurationError(f"{path}: unknown train keys {sorted(bad)}")
    return data


def cmd_train(args) -> dict:
    from padbench.dataset import load_manifest
    from padbench.model import PADNetSpec, build_padnet, save_model, train
    from padbench.model.training import TrainConfig

    cfg = load_config(args.config)
    variant = args.variant or cfg.get("variant", "padnet1")
    task = args.task or cfg.get("task", "pad")
    backbone = args.backbone or cfg.get("backbone")
    overrides = dict(cfg.get("train") or {})
    for key in TRAIN_KEYS:
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    args.seed = overrides.setdefault("seed", 0)
    manifest = load_manifest(args.manifest)

    if task == "embed":
        from padbench.viz import build_embedder, save_embedder

        config = TrainConfig.from_dict({**TrainConfig(epochs=10).to_dict(), **overrides})
        embedder, history = build_embedder(manifest, backbone, config, label_by=args.label_by)
        save_embedder(embedder, args.out)
        result = {"model": args.out, "task": task, "classes": embedder.classes}
    else:
        spec = PADNetSpec.for_variant(variant, **overrides)
        model = build_padnet(spec, backbone)
        log.info("parameters: %s", model.parameter_report())
        history = train(model, manifest).history
        save_model(model, args.out)
        result = {
            "model": args.out,
            "task": task,
            "spec": spec.to_dict(),
            "parameters": model.parameter_report(),
        }
    result["history"] = [{"epoch": h.epoch, "loss": h.loss, "accuracy": h.accuracy} for h in history]
    _emit(result)
    return result


def _scores_from_args(args):
    from padbench.scores import read_scores, write_scores

    if args.scores and not args.model:
        return read_scores(args.scores)
    if not (args.model and args.manifest):
        raise _Usage("give --scores FILE, or --model FILE with --manifest M")
    from padbench.dataset import load_manifest
    from padbench.model import load_model, predict_manifest

    records = predict_manifest(load_model(args.model), load_manifest(args.manifest))
    if args.scores:
        write_scores(args.scores, records)
    return records


def cmd_evaluate(args) -> dict:
    from padbench.metrics import metrics_report

    records = _scores_from_args(args)
    report = metrics_report([r.decision(args.tau) for r in records], args.tau)
    result = report.to_dict()
    _emit(result)
    return result


def cmd_report(args) -> dict:
    from padbench.metrics import metrics_report
    from padbench.report import render_tables
    from padbench.scores import read_scores

    records = read_scores(args.scores)
    report = metrics_report([r.decision(args.tau) for r in records], args.tau)
    tables = render_tables(report, args.style)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tables.txt").write_text(tables.text, encoding="utf-8")
    (out / "metrics.csv").write_text(tables.csv, encoding="utf-8")
    sys.stdout.write(tables.csv)
    return {"out": str(out), "metrics": report.to_dict()}


def cmd_audit(args) -> dict:
    from padbench.report import audit_paper_consistency, format_audit, read_table_csv

    rows = audit_paper_consistency(read_table_csv(args.apcer), read_table_csv(args.hter), args.tolerance)
    sys.stdout.write(format_audit(rows))
    result = {"rows": len(rows), "failed": [r.key for r in rows if not r.passed]}
    if result["failed"]:
        raise _Failed(result)
    return result


def cmd_published_tables(args) -> dict:
    from padbench.report import PUBLISHED_APCER_ACCURACY, PUBLISHED_HTER, write_table_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(out / "apcer.csv", PUBLISHED_APCER_ACCURACY)
    write_table_csv(out / "hter.csv", PUBLISHED_HTER)
    result = {"apcer": str(out / "apcer.csv"), "hter": str(out / "hter.csv")}
    _emit(result)
    return result


def cmd_visualize(args) -> dict:
    from padbench.dataset import load_manifest
    from padbench.model.padnet import read_model_file
    from padbench.viz import (
        EmbeddingPoint,
        embed,
        extract_features,
        load_embedder,
        pca_project,
        scatter_plot,
        tsne_project,
    )

    manifest = load_manifest(args.manifest)
    samples = list(manifest.samples)
    kind = read_model_file(args.model).get("kind")
    if args.method == "embed2d":
        if kind != "embedder":
            raise _Usage("--method embed2d needs an embedder model (padbench train --task embed)")
        points = embed(load_embedder(args.model), samples, manifest.root, label_by="group")
    else:
        if kind == "embedder":
            backbone = load_embedder(args.model).backbone
        else:
            from padbench.model import load_model

            backbone = load_model(args.model).backbone
        feats = extract_features(backbone, samples, manifest.root)
        coords = tsne_project(feats, args.perplexity, args.seed) if args.method == "tsne" else pca_project(feats)
        points = [EmbeddingPoint(s.path, (float(a), float(b)), s.group) for s, (a, b) in zip(samples, coords)]
    scatter_plot(points, args.out, title=args.method)
    result = {"out": args.out, "method": args.method, "points": len(points)}
    _emit(result)
    return result


# -- parser ------------------------------------------------------------------


class _Failed(Exception):
    """Command ran but its check failed (exit 1)."""

    def __init__(self, result: dict):
        super().__init__("check failed")
        self.result = result


class _Usage(Exception):
    """Invalid flag combination (exit 2)."""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="padbench", description="Presentation attack detection toolkit")
    p.add_argument("--version", action="version", version=f"padbench {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--run-dir", default=None, help="where the run manifest is written")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("backbone", parents=[common], help="write a backbone checkpoint")
    s.add_argument("--out", required=True)
    s.add_argument("--source", choices=["random", "imagenet"], default="random")
    s.set_defaults(func=cmd_backbone)

    s = sub.add_parser("fixture", parents=[common], help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--subjects", type=int, default=4)
    s.add_argument("--bonafide-per-subject", type=int, default=4)
    s.add_argument("--pais", default="Dell-GA7", help="comma-separated PAIS abbreviations")
    s.add_argument("--attacks-per-pais", type=int, default=16)
    s.add_argument("--image-size", type=int, default=64)
    s.add_argument("--manifest-out", default=None)
    s.set_defaults(func=cmd_fixture)

    s = sub.add_parser("ingest", parents=[common], help="build a manifest from a directory")
    s.add_argument("--root", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--claimed-totals", default=None, help="JSON file: representor -> image total")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("validate", parents=[common], help="validate a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--no-check-files", action="store_true")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("split", parents=[common], help="split a manifest into train/test")
    s.add_argument("--manifest", required=True)
    s.add_argument("--mode", choices=["subject", "loco"], required=True)
    s.add_argument("--held-out", default=None)
    s.add_argument("--test-fraction", type=float, default=0.25)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", parents=[common], help="train a PADNet (or 2-D embedder)")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", default=None, help="YAML config; flags override it")
    s.add_argument("--variant", choices=["padnet1", "padnet2"], default=None)
    s.add_argument("--task", choices=["pad", "embed"], default=None)
    s.add_argument("--label-by", choices=["subject", "group"], default="subject")
    s.add_argument("--backbone", default=None, help="backbone checkpoint (default: $PADBENCH_CACHE)")
    s.add_argument("--epochs", type=int, default=None)
    s.add_argument("--batch-size", type=int, default=None)
    s.add_argument("--learning-rate", type=float, default=None)
    s.add_argument("--momentum", type=float, default=None)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="compute APCER/BPCER/HTER")
    s.add_argument("--scores", default=None)
    s.add_argument("--model", default=None)
    s.add_argument("--manifest", default=None)
    s.add_argument("--tau", type=float, default=0.5)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", parents=[common], help="render metric tables")
    s.add_argument("--scores", required=True)
    s.add_argument("--tau", type=float, default=0.5)
    s.add_argument("--style", choices=["error", "paper"], default="error")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("audit", parents=[common], help="check APCER vs HTER table consistency")
    s.add_argument("--apcer", required=True)
    s.add_argument("--hter", required=True)
    s.add_argument("--tolerance", type=float, default=0.05)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("published-tables", parents=[common], help="write the published APCER/HTER tables as CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_published_tables)

    s = sub.add_parser("visualize", parents=[common], help="2-D scatter plot of sample embeddings")
    s.add_argument("--manifest", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--method", choices=["embed2d", "tsne", "pca"], default="tsne")
    s.add_argument("--out", required=True)
    s.add_argument("--perplexity", type=float, default=30.0)
    s.set_defaults(func=cmd_visualize)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.seed is None and args.command != "train":
        args.seed = 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        results = args.func(args)
        status = 0
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"padbench {args.command}: error: {exc}\n")
        results, status = {"error": str(exc)}, 2
    except _Failed as exc:
        results, status = exc.result, 1
    except (PadbenchError, OSError) as exc:
        sys.stderr.write(f"padbench {args.command}: {exc}\n")
        results, status = {"error": str(exc)}, 1
    results["exit_status"] = status
    write_run_manifest(args, results)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
