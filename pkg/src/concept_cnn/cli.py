"""Batch CLI: onehot | train | transfer | eval | synth.

Every invocation writes its outputs plus one ``manifest.json`` under
``--out``; the manifest echoes the fully resolved configuration, the seed,
and sha256 digests of every input file, which is enough to reproduce the
run byte-for-byte. Configuration precedence is flags > ``--config`` JSON
file > built-in defaults.

Exit codes: 0 success, 2 usage errors, 3 data errors (bad files, schema
or dimension violations), 4 numeric errors (non-finite values during
training).
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from datetime import date, datetime
from pathlib import Path

from . import __version__
from .data import (
    ConceptVocabulary,
    make_splits,
    influenza_vocabulary,
    parse_encounters,
    split_by_date,
    write_encounters_csv,
)
from .embedding import build_one_hot_table, encode_dataset, load_embedding_table
from .errors import DataError, NumericError, ToolkitError
from .evaluation import evaluate_model, render_report_table
from .jsontext import render
from .network import init_model
from .synth import (
    DEFAULT_SYNONYM_PAIRS,
    SynthConfig,
    build_synthetic_semantic_table,
    default_synthetic_vocabulary,
    generate_synthetic_sites,
)
from .training import TrainConfig, train
from .transfer import (
    Provenance,
    TransferStrategy,
    check_table_compatible,
    load_checkpoint,
    run_transfer,
    save_checkpoint,
)

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flag combinations that argparse alone cannot catch."""


TRAIN_DEFAULTS = {
    "seed": 0,
    "epochs": 30,
    "batch_size": 32,
    "learning_rate": 0.001,
    "num_filters": 100,
    "dropout": 0.5,
    "optimizer": "adam",
    "selection": "best_validation_auroc",
    "positive_class_weight": 1.0,
    "cutoff": "20140601",
    "train_ratio": 0.8,
    "freeze": "",
}

SYNTH_DEFAULTS = {
    "seed": 0,
    "n_source": 2000,
    "n_target": 2000,
    "prevalence_source": 0.15,
    "prevalence_target": 0.15,
    "signal_strength": 2.0,
    "noise_rate": 0.05,
    "embedding_dim": 32,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_text(path: str, what: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} file not found: {path}")
    return p.read_text(encoding="utf-8")


def _parse_cutoff(text: str) -> date:
    for fmt in ("%Y%m%d", "%Y-%m-%d"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise DataError(f"malformed cutoff date {text!r}, expected YYYYMMDD")


def _resolve_config(defaults: dict, args: argparse.Namespace, flag_keys: dict) -> dict:
    """flags > config file > defaults; unknown config-file keys are rejected."""
    resolved = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        import json

        try:
            file_cfg = json.loads(_read_text(config_path, "config"))
        except ValueError as exc:
            raise DataError(f"malformed config file {config_path}: {exc}") from exc
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_cfg)
    for key, attr in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _parse_freeze(text: str) -> frozenset[str]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return frozenset(parts)


def _train_config(resolved: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(resolved["learning_rate"]),
        epochs=int(resolved["epochs"]),
        batch_size=int(resolved["batch_size"]),
        seed=int(resolved["seed"]),
        freeze_mask=_parse_freeze(str(resolved["freeze"])),
        optimizer=str(resolved["optimizer"]),
        selection=str(resolved["selection"]),
        positive_class_weight=float(resolved["positive_class_weight"]),
    )


def _write_outputs(out_dir: Path, files: dict[str, str]) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out_dir / name).write_text(content, encoding="utf-8")
    return list(files)


def _write_manifest(
    out_dir: Path,
    subcommand: str,
    resolved: dict,
    inputs: dict[str, str],
    outputs: list[str],
) -> None:
    manifest = {
        "subcommand": subcommand,
        "toolkit_version": __version__,
        "seed": int(resolved.get("seed", 0)),
        "config": {k: resolved[k] for k in sorted(resolved)},
        "inputs": {
            name: {"path": path, "sha256": _sha256(Path(path))}
            for name, path in sorted(inputs.items())
        },
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(render(manifest, indent=2) + "\n", encoding="utf-8")


def _load_vocab(path: str) -> ConceptVocabulary:
    return ConceptVocabulary.from_json(_read_text(path, "vocabulary"))


def _data_window(records, cutoff: date) -> str:
    lo = min(r.admit_date for r in records)
    hi = max(r.admit_date for r in records)
    return f"{lo.isoformat()}..{hi.isoformat()}, cutoff {cutoff.isoformat()}"


def cmd_onehot(args: argparse.Namespace) -> int:
    resolved = {"seed": 0}
    vocab = (
        influenza_vocabulary() if args.vocab == "influenza" else _load_vocab(args.vocab)
    )
    table = build_one_hot_table(vocab)
    out_dir = Path(args.out)
    outputs = _write_outputs(out_dir, {"one_hot.table": table.to_text()})
    inputs = {} if args.vocab == "influenza" else {"vocab": args.vocab}
    _write_manifest(out_dir, "onehot", resolved, inputs, outputs)
    logger.info("wrote one-hot table (dimension %d) to %s", table.dimension, out_dir)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    resolved = _resolve_config(
        TRAIN_DEFAULTS,
        args,
        {
            "seed": "seed",
            "epochs": "epochs",
            "batch_size": "batch_size",
            "learning_rate": "learning_rate",
            "num_filters": "num_filters",
            "dropout": "dropout",
            "optimizer": "optimizer",
            "selection": "selection",
            "positive_class_weight": "positive_class_weight",
            "cutoff": "cutoff",
            "train_ratio": "train_ratio",
            "freeze": "freeze",
        },
    )
    freeze = _parse_freeze(str(resolved["freeze"]))
    if freeze == {"conv", "fc"}:
        raise UsageError("local training cannot freeze every layer; use transfer --strategy direct")
    vocab = _load_vocab(args.vocab)
    table = load_embedding_table(_read_text(args.table, "embedding table"))
    table.assert_covers(vocab)
    records = parse_encounters(_read_text(args.data, "encounter CSV"), vocab)
    cutoff = _parse_cutoff(str(resolved["cutoff"]))
    split = make_splits(records, cutoff, float(resolved["train_ratio"]), int(resolved["seed"]))
    if not split.validation:
        raise DataError("validation split is empty; need more pre-cutoff records")
    train_inst = encode_dataset(split.train, vocab, table)
    val_inst = encode_dataset(split.validation, vocab, table)
    cfg = _train_config(resolved)
    model = init_model(
        int(resolved["num_filters"]), table.dimension, float(resolved["dropout"]), cfg.seed
    )
    model, history = train(model, train_inst, val_inst, cfg)
    provenance = Provenance(
        config={k: resolved[k] for k in sorted(resolved)},
        seed=cfg.seed,
        data_window=_data_window(records, cutoff),
    )
    out_dir = Path(args.out)
    outputs = _write_outputs(
        out_dir,
        {
            "checkpoint.json": save_checkpoint(model, table.source_tag, provenance),
            "history.json": render(history.to_dict(), indent=2) + "\n",
        },
    )
    _write_manifest(
        out_dir,
        "train",
        resolved,
        {"data": args.data, "vocab": args.vocab, "table": args.table},
        outputs,
    )
    logger.info(
        "trained on %d instances, selected epoch %d, outputs in %s",
        len(train_inst),
        history.selected_epoch,
        out_dir,
    )
    return 0


_STRATEGIES = {s.value: s for s in TransferStrategy}
_SCENARIO_OF = {
    TransferStrategy.DIRECT_SHARE: "direct",
    TransferStrategy.TUNE_LINEAR: "tune_linear",
    TransferStrategy.TUNE_CONV_AND_LINEAR: "tune_full",
}


def cmd_transfer(args: argparse.Namespace) -> int:
    resolved = _resolve_config(
        TRAIN_DEFAULTS,
        args,
        {
            "seed": "seed",
            "epochs": "epochs",
            "batch_size": "batch_size",
            "learning_rate": "learning_rate",
            "optimizer": "optimizer",
            "selection": "selection",
            "positive_class_weight": "positive_class_weight",
            "cutoff": "cutoff",
            "train_ratio": "train_ratio",
        },
    )
    strategy = _STRATEGIES[args.strategy]
    ckpt = load_checkpoint(_read_text(args.checkpoint, "checkpoint"))
    vocab = _load_vocab(args.vocab)
    table = load_embedding_table(_read_text(args.table, "embedding table"))
    check_table_compatible(ckpt, table)
    table.assert_covers(vocab)
    records = parse_encounters(_read_text(args.data, "encounter CSV"), vocab)
    cutoff = _parse_cutoff(str(resolved["cutoff"]))
    split = make_splits(records, cutoff, float(resolved["train_ratio"]), int(resolved["seed"]))
    if not split.test:
        raise DataError("no post-cutoff target records to evaluate on")
    train_inst = encode_dataset(split.train, vocab, table)
    val_inst = encode_dataset(split.validation, vocab, table)
    cfg = _train_config(resolved)
    model, history = run_transfer(ckpt, strategy, train_inst, val_inst, cfg)
    scenario = _SCENARIO_OF[strategy]
    report = evaluate_model(model, split.test, table, vocab, scenario=scenario)
    provenance = Provenance(
        config={**{k: resolved[k] for k in sorted(resolved)}, "strategy": strategy.value},
        seed=cfg.seed,
        data_window=_data_window(records, cutoff),
    )
    out_dir = Path(args.out)
    outputs = _write_outputs(
        out_dir,
        {
            "checkpoint.json": save_checkpoint(model, table.source_tag, provenance),
            "history.json": render(history.to_dict(), indent=2) + "\n",
            "report.json": report.to_text(),
            "report.txt": render_report_table({table.source_tag: {scenario: report.auroc}}),
        },
    )
    _write_manifest(
        out_dir,
        "transfer",
        {**resolved, "strategy": strategy.value},
        {
            "checkpoint": args.checkpoint,
            "data": args.data,
            "vocab": args.vocab,
            "table": args.table,
        },
        outputs,
    )
    logger.info("%s transfer AUROC %.4f, outputs in %s", strategy.value, report.auroc, out_dir)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    resolved = {"seed": 0, "scenario": args.scenario, "after": args.after or ""}
    ckpt = load_checkpoint(_read_text(args.checkpoint, "checkpoint"))
    vocab = _load_vocab(args.vocab)
    table = load_embedding_table(_read_text(args.table, "embedding table"))
    check_table_compatible(ckpt, table)
    table.assert_covers(vocab)
    records = parse_encounters(_read_text(args.data, "encounter CSV"), vocab)
    if args.after:
        _, records = split_by_date(records, _parse_cutoff(args.after))
    report = evaluate_model(ckpt.to_model(), records, table, vocab, scenario=args.scenario)
    out_dir = Path(args.out)
    outputs = _write_outputs(
        out_dir,
        {
            "report.json": report.to_text(),
            "report.txt": render_report_table({table.source_tag: {args.scenario: report.auroc}}),
        },
    )
    _write_manifest(
        out_dir,
        "eval",
        resolved,
        {"checkpoint": args.checkpoint, "data": args.data, "vocab": args.vocab, "table": args.table},
        outputs,
    )
    logger.info("eval AUROC %.4f on %d records", report.auroc, report.n_positive + report.n_negative)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    resolved = _resolve_config(
        SYNTH_DEFAULTS,
        args,
        {
            "seed": "seed",
            "n_source": "n_source",
            "n_target": "n_target",
            "prevalence_source": "prevalence_source",
            "prevalence_target": "prevalence_target",
            "signal_strength": "signal_strength",
            "noise_rate": "noise_rate",
            "embedding_dim": "embedding_dim",
        },
    )
    vocab = default_synthetic_vocabulary()
    cfg = SynthConfig(
        n_source=int(resolved["n_source"]),
        n_target=int(resolved["n_target"]),
        prevalence_source=float(resolved["prevalence_source"]),
        prevalence_target=float(resolved["prevalence_target"]),
        signal_strength=float(resolved["signal_strength"]),
        noise_rate=float(resolved["noise_rate"]),
        seed=int(resolved["seed"]),
    )
    source, target = generate_synthetic_sites(cfg, vocab)
    semantic = build_synthetic_semantic_table(
        vocab, cfg.synonym_pairs, int(resolved["embedding_dim"]), cfg.seed
    )
    one_hot = build_one_hot_table(vocab)
    out_dir = Path(args.out)
    outputs = _write_outputs(
        out_dir,
        {
            "vocab.json": vocab.to_json(),
            "source.csv": write_encounters_csv(source, vocab),
            "target.csv": write_encounters_csv(target, vocab),
            "semantic.table": semantic.to_text(),
            "one_hot.table": one_hot.to_text(),
        },
    )
    _write_manifest(out_dir, "synth", resolved, {}, outputs)
    logger.info(
        "synthesized %d source / %d target encounters in %s",
        len(source),
        len(target),
        out_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concept-cnn",
        description="Concept-embedding CNN classifier with cross-site transfer learning",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("onehot", help="build a one-hot embedding table from a vocabulary")
    p.add_argument("--vocab", required=True, help="vocabulary JSON path, or 'influenza' for the built-in schema")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_onehot)

    def add_train_flags(p, include_model_flags: bool):
        p.add_argument("--data", required=True, help="encounter CSV")
        p.add_argument("--vocab", required=True)
        p.add_argument("--table", required=True, help="embedding table file")
        p.add_argument("--out", required=True)
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--lr", dest="learning_rate", type=float)
        p.add_argument("--optimizer", choices=["adam", "sgd"])
        p.add_argument("--selection", choices=["best_validation_auroc", "final_epoch"])
        p.add_argument("--positive-weight", dest="positive_class_weight", type=float)
        p.add_argument("--cutoff", help="test-window start date, YYYYMMDD")
        p.add_argument("--train-ratio", dest="train_ratio", type=float)
        if include_model_flags:
            p.add_argument("--filters", dest="num_filters", type=int)
            p.add_argument("--dropout", type=float)
            p.add_argument("--freeze", help="comma list over {conv, fc}")

    p = sub.add_parser("train", help="train a local model")
    add_train_flags(p, include_model_flags=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="adapt a source checkpoint to target data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--strategy", required=True, choices=sorted(_STRATEGIES))
    add_train_flags(p, include_model_flags=False)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("eval", help="evaluate a checkpoint on test data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", default="local", choices=["local", "direct", "tune_linear", "tune_full"])
    p.add_argument("--after", help="keep only records on/after this date (YYYYMMDD)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate the synthetic two-site benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-source", dest="n_source", type=int)
    p.add_argument("--n-target", dest="n_target", type=int)
    p.add_argument("--prevalence-source", dest="prevalence_source", type=float)
    p.add_argument("--prevalence-target", dest="prevalence_target", type=float)
    p.add_argument("--signal-strength", dest="signal_strength", type=float)
    p.add_argument("--noise-rate", dest="noise_rate", type=float)
    p.add_argument("--embedding-dim", dest="embedding_dim", type=int)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
