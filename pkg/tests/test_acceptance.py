"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines
inline; without ``-s`` they still appear for any failing criterion.
"""

import statistics
import time
from datetime import date

import numpy as np
import pytest

from concept_cnn.cli import main
from concept_cnn.data import make_splits
from concept_cnn.embedding import build_one_hot_table, encode_dataset
from concept_cnn.errors import DimensionMismatchError
from concept_cnn.evaluation import auroc, evaluate_model
from concept_cnn.network import (
    backward,
    conv_maxpool,
    forward,
    init_model,
    param_counts,
)
from concept_cnn.synth import (
    SynthConfig,
    build_synthetic_semantic_table,
    default_synthetic_vocabulary,
    generate_synthetic_sites,
)
from concept_cnn.training import TrainConfig, train
from concept_cnn.transfer import (
    Provenance,
    TransferStrategy,
    check_table_compatible,
    load_checkpoint,
    run_transfer,
    save_checkpoint,
)

from test_evaluation import pairwise_auroc, random_case
from test_network import finite_difference_gradients, max_relative_error


def verdict(name: str, ok: bool, detail: str = "") -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    return ok


def test_body_pain_filter_worked_example():
    body_pain = np.array([[-6.0, -1.0]])
    patient_1 = np.array([[-6.7620, -0.6463], [-0.0534, 0.0267]])
    patient_2 = np.array([[0.0, -0.0286], [-4.5, -0.8794], [-1.2, -0.1754]])

    r1 = conv_maxpool(patient_1, body_pain)
    r2 = conv_maxpool(patient_2, body_pain)
    ok = (
        np.allclose(r1.row_scores[:, 0], [41.2183, 0.2937], atol=1e-3)
        and abs(r1.pooled[0] - 41.2183) < 1e-3
        and np.allclose(r2.row_scores[:, 0], [0.0286, 27.8794, 7.3754], atol=1e-3)
        and abs(r2.pooled[0] - 27.8794) < 1e-3
    )
    assert verdict(
        "body-pain filter row scores and pooled strengths",
        ok,
        f"pooled {r1.pooled[0]:.4f} / {r2.pooled[0]:.4f}",
    )


def test_parameter_count_identities():
    expected = {145: 14_500, 768: 76_800, 1536: 153_600, 3072: 307_200}
    counts = {d: param_counts(init_model(100, d, 0.5, seed=0)) for d in expected}
    ok = all(counts[d] == (expected[d], 202) for d in expected)
    assert verdict(
        "parameter-count identities at F=100",
        ok,
        ", ".join(f"D={d}: {c[0]}/{c[1]}" for d, c in counts.items()),
    )


def test_gradient_correctness():
    start = time.time()
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(2000 + trial)
        concepts = int(rng.integers(2, 6))
        dim = int(rng.integers(2, 9))
        filters = int(rng.integers(1, 5))
        model = init_model(filters, dim, 0.5, seed=trial)
        from concept_cnn.embedding import EncodedInstance

        inst = EncodedInstance(rng.standard_normal((concepts, dim)), int(rng.integers(2)))
        mask = (rng.random(filters) >= 0.5) / 0.5
        _, cache = forward(model, inst, mode="train", dropout_mask=mask)
        analytic = backward(model, cache, inst.outcome)
        numeric = finite_difference_gradients(model, inst, inst.outcome, mask)
        worst = max(
            worst,
            max_relative_error(analytic.conv_filters, numeric["conv_filters"]),
            max_relative_error(analytic.fc_weights, numeric["fc_weights"]),
            max_relative_error(analytic.fc_bias, numeric["fc_bias"]),
        )
    elapsed = time.time() - start
    ok = worst < 1e-4 and elapsed < 10.0
    assert verdict(
        "analytic gradients vs central finite differences (20 models)",
        ok,
        f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_auroc_oracle_equivalence():
    start = time.time()
    rng = np.random.default_rng(77)
    worst = 0.0
    exact_ok = True
    for _ in range(100):
        scores, labels = random_case(rng)
        value = auroc(scores, labels)
        worst = max(worst, abs(value - pairwise_auroc(scores, labels)))
        exact_ok &= auroc(3.0 * scores + 1.0, labels) == value
        exact_ok &= auroc(scores**3, labels) == value
        exact_ok &= auroc(scores, 1 - labels) == 1.0 - value
    elapsed = time.time() - start
    ok = worst < 1e-12 and exact_ok and elapsed < 10.0
    assert verdict(
        "auroc rank form vs pairwise oracle, monotone/flip exactness",
        ok,
        f"max |diff| {worst:.2e}, {elapsed:.1f}s",
    )


def _toy_instances(n, dim_vocab):
    table = build_one_hot_table(dim_vocab)
    rng = np.random.default_rng(0)
    from helpers import make_record

    records = [
        make_record(
            dim_vocab,
            encounter_id=f"Z{i}",
            outcome=i % 2,
            **{dim_vocab.concept_ids[0]: "P" if i % 2 else "A"},
        )
        for i in range(n)
    ]
    return encode_dataset(records, dim_vocab, table)


def test_freeze_semantics():
    from concept_cnn.data import ConceptVocabulary, binary_entry

    vocab = ConceptVocabulary((binary_entry("a"), binary_entry("b")))
    instances = _toy_instances(176, vocab)
    train_inst, val_inst = instances[:160], instances[160:]
    prov = Provenance(config={}, seed=0, data_window="toy")
    ckpt = load_checkpoint(save_checkpoint(init_model(6, 4, 0.5, seed=0), "one-hot", prov))

    # 160 instances / batch 16 = 10 steps per epoch, 10 epochs = 100 steps
    cfg = TrainConfig(epochs=10, batch_size=16, seed=0)
    linear_model, hist = run_transfer(ckpt, TransferStrategy.TUNE_LINEAR, train_inst, val_inst, cfg)
    conv_identical = linear_model.conv_filters is ckpt.conv_filters and np.array_equal(
        linear_model.conv_filters, ckpt.conv_filters
    )
    steps = len(hist.train_loss) * 10

    direct_model, _ = run_transfer(ckpt, TransferStrategy.DIRECT_SHARE, [], [], cfg)
    direct_zero_writes = (
        direct_model.conv_filters is ckpt.conv_filters
        and direct_model.fc_weights is ckpt.fc_weights
        and direct_model.fc_bias is ckpt.fc_bias
        and not direct_model.conv_filters.flags.writeable
    )

    base = init_model(6, 4, 0.5, seed=1)
    full_cfg = TrainConfig(epochs=3, freeze_mask=frozenset({"conv", "fc"}), seed=1)
    frozen_model, _ = train(base, train_inst, val_inst, full_cfg)
    full_freeze_identity = frozen_model is base

    ok = conv_identical and direct_zero_writes and full_freeze_identity
    assert verdict(
        "freeze semantics (linear-only, direct share, full freeze)",
        ok,
        f"{steps} tuning steps, conv untouched: {conv_identical}",
    )


def test_checkpoint_round_trip():
    prov = Provenance(config={"epochs": 2}, seed=3, data_window="toy")
    model = init_model(7, 9, 0.5, seed=3)
    first = save_checkpoint(model, "synthetic-semantic", prov)
    second = save_checkpoint(load_checkpoint(first).to_model(), "synthetic-semantic", prov)
    byte_identical = first == second

    from concept_cnn.data import ConceptVocabulary, binary_entry

    table_145 = build_one_hot_table(default_synthetic_vocabulary())
    wide = load_checkpoint(save_checkpoint(init_model(3, 768, 0.5, seed=4), "one-hot", prov))
    try:
        check_table_compatible(wide, table_145)
        declared_error = False
    except DimensionMismatchError as exc:
        declared_error = "dimension mismatch" in str(exc)
    ok = byte_identical and declared_error
    assert verdict(
        "checkpoint save/load/save byte identity and fail-fast composition",
        ok,
        f"{len(first)} bytes",
    )


def _transfer_trend_run(seed: int) -> dict[str, float]:
    vocab = default_synthetic_vocabulary()
    cfg = SynthConfig(seed=seed)  # n=2000/site, prevalence 0.15, strength 2.0, noise 0.05
    source, target = generate_synthetic_sites(cfg, vocab)
    semantic = build_synthetic_semantic_table(vocab, cfg.synonym_pairs, 32, seed)
    one_hot = build_one_hot_table(vocab)
    cutoff = date(2013, 6, 1)
    tune_cfg = TrainConfig(epochs=15, seed=seed)
    out: dict[str, float] = {}
    for tag, table in (("one_hot", one_hot), ("semantic", semantic)):
        src_split = make_splits(source, cutoff, 0.8, seed)
        tgt_split = make_splits(target, cutoff, 0.8, seed)
        enc = lambda recs: encode_dataset(recs, vocab, table)
        local = init_model(100, table.dimension, 0.5, seed)
        local, _ = train(local, enc(src_split.train), enc(src_split.validation), tune_cfg)
        prov = Provenance(config={}, seed=seed, data_window="synthetic")
        ckpt = load_checkpoint(save_checkpoint(local, table.source_tag, prov))
        strategies = (
            (TransferStrategy.DIRECT_SHARE, "direct"),
            (TransferStrategy.TUNE_LINEAR, "tune_linear"),
            (TransferStrategy.TUNE_CONV_AND_LINEAR, "tune_full"),
        )
        if tag == "semantic":
            strategies = strategies[:1]
        for strategy, scenario in strategies:
            adapted, _ = run_transfer(
                ckpt, strategy, enc(tgt_split.train), enc(tgt_split.validation), tune_cfg
            )
            report = evaluate_model(adapted, tgt_split.test, table, vocab, scenario=scenario)
            out[f"{tag}_{scenario}"] = report.auroc
    return out


def test_synthetic_transfer_trends():
    start = time.time()
    runs = [_transfer_trend_run(seed) for seed in range(5)]
    elapsed = time.time() - start

    gaps = [r["semantic_direct"] - r["one_hot_direct"] for r in runs]
    median_gap = statistics.median(gaps)
    med = {
        key: statistics.median(r[key] for r in runs)
        for key in ("one_hot_direct", "one_hot_tune_linear", "one_hot_tune_full")
    }
    semantic_beats_one_hot = median_gap > 0.03
    tuning_order = (
        med["one_hot_tune_full"] >= med["one_hot_tune_linear"] >= med["one_hot_direct"]
    )
    ok = semantic_beats_one_hot and tuning_order and elapsed < 300.0
    assert verdict(
        "synthetic two-site trends (5 seeds, n=2000/site)",
        ok,
        f"median gap {median_gap:.3f}; one-hot medians "
        f"direct {med['one_hot_direct']:.3f} <= linear {med['one_hot_tune_linear']:.3f} "
        f"<= full {med['one_hot_tune_full']:.3f}; {elapsed:.0f}s",
    )


def test_cli_reruns_are_byte_identical(tmp_path):
    def pipeline(root):
        synth = root / "synth"
        assert main(["synth", "--out", str(synth), "--n-source", "300", "--n-target", "300", "--seed", "5"]) == 0
        trained = root / "train"
        assert (
            main(
                [
                    "train",
                    "--data", str(synth / "source.csv"),
                    "--vocab", str(synth / "vocab.json"),
                    "--table", str(synth / "semantic.table"),
                    "--out", str(trained),
                    "--epochs", "2", "--filters", "16", "--seed", "5", "--cutoff", "20130601",
                ]
            )
            == 0
        )
        adapted = root / "transfer"
        assert (
            main(
                [
                    "transfer",
                    "--checkpoint", str(trained / "checkpoint.json"),
                    "--strategy", "linear",
                    "--data", str(synth / "target.csv"),
                    "--vocab", str(synth / "vocab.json"),
                    "--table", str(synth / "semantic.table"),
                    "--out", str(adapted),
                    "--epochs", "2", "--seed", "5", "--cutoff", "20130601",
                ]
            )
            == 0
        )
        return {
            name: (root / sub / name).read_bytes()
            for sub, names in (
                ("synth", ["source.csv", "target.csv", "semantic.table", "one_hot.table", "vocab.json"]),
                ("train", ["checkpoint.json", "history.json"]),
                ("transfer", ["checkpoint.json", "history.json", "report.json", "report.txt"]),
            )
            for name in names
        }

    first = pipeline(tmp_path / "run1")
    second = pipeline(tmp_path / "run2")
    mismatched = [name for name in first if first[name] != second[name]]
    ok = not mismatched
    assert verdict(
        "CLI reruns produce byte-identical checkpoints and reports",
        ok,
        "all outputs equal" if ok else f"mismatch: {mismatched}",
    )
