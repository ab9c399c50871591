import dataclasses
import itertools

import pytest
import torch

import rxcheck.training as training
from rxcheck.corpus import LabeledPair
from rxcheck.encoder import ModelConfig, PairClassifier, load_checkpoint, save_checkpoint
from rxcheck.pairgen import DatasetSplit
from rxcheck.subword import train_vocabulary
from rxcheck.training import LineageError, TrainConfig, predict, train


def _pair(i, rx, ctx, label):
    origin = "natural" if label == 1 else "sampled_negative"
    return LabeledPair(f"t{i}", rx, ctx, label, origin)


def _toy_split():
    """Linearly separable by a single token: 'good' contexts are valid."""
    pairs = []
    rxes = ["alpha pill", "beta pill", "gamma pill", "delta pill"]
    for i, (rx, good) in enumerate(itertools.product(rxes, [1, 0])):
        ctx = "good sign" if good else "bad sign"
        for k in range(6):
            pairs.append(_pair(i * 10 + k, rx, ctx, good))
    train_part = [p for i, p in enumerate(pairs) if i % 3 != 2]
    val_part = [p for i, p in enumerate(pairs) if i % 3 == 2]
    return DatasetSplit(train=train_part, validation=val_part, test=val_part)


@pytest.fixture(scope="module")
def toy():
    split = _toy_split()
    texts = [p.prescription for p in split.train] + [p.context for p in split.train]
    vocab = train_vocabulary(texts, 80)
    return split, vocab


def _toy_mcfg(vocab, **over):
    base = dict(vocab_size=len(vocab), max_len=16, hidden_dim=16, num_layers=1,
                num_heads=2, ffn_dim=32, dropout=0.0, head_variant="clm", seed=0)
    base.update(over)
    return ModelConfig(**base)


class TestTrainConfig:
    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            TrainConfig(threshold=1.0)

    def test_bad_patience(self):
        with pytest.raises(ValueError):
            TrainConfig(patience=0)


class TestTrain:
    def test_learns_separable_toy(self, toy):
        split, vocab = toy
        model, report = train(split, TrainConfig(max_epochs=20, patience=20, seed=0),
                              _toy_mcfg(vocab), vocab)
        decisions = predict(split.validation, model, vocab)
        acc = sum(d == p.label for (_, d), p in zip(decisions, split.validation)) / len(decisions)
        assert acc == 1.0
        assert report.best_epoch >= 1

    def test_single_label_split_rejected(self, toy):
        split, vocab = toy
        bad = DatasetSplit(
            train=[p for p in split.train if p.label == 1],
            validation=split.validation,
            test=split.test,
        )
        with pytest.raises(ValueError, match="train"):
            train(bad, TrainConfig(max_epochs=1), _toy_mcfg(vocab), vocab)

    def test_deterministic(self, toy):
        split, vocab = toy
        cfg = TrainConfig(max_epochs=3, patience=3, seed=4)
        _, r1 = train(split, cfg, _toy_mcfg(vocab), vocab)
        _, r2 = train(split, cfg, _toy_mcfg(vocab), vocab)
        assert [dataclasses.asdict(e) for e in r1.epochs] == [dataclasses.asdict(e) for e in r2.epochs]

    def test_early_stop_contract(self, toy, monkeypatch):
        split, vocab = toy
        # scripted validation losses: improve once, then worsen forever
        losses = iter([1.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.1, 1.2])
        monkeypatch.setattr(training, "_eval_epoch", lambda *a, **k: (next(losses), 0.5))
        model, report = train(split, TrainConfig(max_epochs=30, patience=3, seed=0),
                              _toy_mcfg(vocab), vocab)
        assert report.stopped_early
        assert report.best_epoch == 2
        assert len(report.epochs) == 5  # best at 2, then 3 bad epochs
        assert report.best_val_loss == 0.5

    def test_runs_all_epochs_when_improving(self, toy, monkeypatch):
        split, vocab = toy
        counter = itertools.count()
        monkeypatch.setattr(training, "_eval_epoch",
                            lambda *a, **k: (1.0 / (next(counter) + 1), 0.5))
        _, report = train(split, TrainConfig(max_epochs=4, patience=2, seed=0),
                          _toy_mcfg(vocab), vocab)
        assert not report.stopped_early
        assert len(report.epochs) == 4 and report.best_epoch == 4

    def test_best_val_loss_is_minimum(self, toy):
        split, vocab = toy
        _, report = train(split, TrainConfig(max_epochs=6, patience=6, seed=1),
                          _toy_mcfg(vocab), vocab)
        assert report.best_val_loss == min(e.val_loss for e in report.epochs)

    def test_report_roundtrip_and_render(self, toy, tmp_path):
        split, vocab = toy
        _, report = train(split, TrainConfig(max_epochs=2, patience=2, seed=0),
                          _toy_mcfg(vocab), vocab)
        report.save(tmp_path / "report.json")
        assert (tmp_path / "report.json").stat().st_size > 0
        text = report.render()
        assert "*" in text and "val_loss" in text


class TestPredict:
    def test_partition_invariance(self, toy):
        split, vocab = toy
        model, _ = train(split, TrainConfig(max_epochs=2, patience=2, seed=0),
                         _toy_mcfg(vocab), vocab)
        pairs = split.validation * 7
        base = predict(pairs, model, vocab, batch_size=32)
        for bs in (1, 7, 101):
            got = predict(pairs, model, vocab, batch_size=bs)
            for (s1, d1), (s2, d2) in zip(base, got):
                assert abs(s1 - s2) < 1e-6 and d1 == d2

    def test_boundary_score_counts_valid(self, toy):
        split, vocab = toy
        model = PairClassifier(_toy_mcfg(vocab))
        # zero the head so every score is exactly sigmoid(0) = 0.5
        with torch.no_grad():
            for p in model.head.parameters():
                p.zero_()
        model.metadata = dict(model.metadata)
        model.metadata["vocab_hash"] = vocab.content_hash()
        out = predict(split.validation[:5], model, vocab, threshold=0.5)
        assert all(s == 0.5 and d == 1 for s, d in out)

    def test_threshold_sweep_monotone(self, toy):
        split, vocab = toy
        model, _ = train(split, TrainConfig(max_epochs=2, patience=2, seed=0),
                         _toy_mcfg(vocab), vocab)
        counts = []
        for thr in (0.1, 0.3, 0.5, 0.7, 0.9):
            out = predict(split.validation, model, vocab, threshold=thr)
            counts.append(sum(d for _, d in out))
        assert counts == sorted(counts, reverse=True)

    def test_lineage_mismatch(self, toy):
        split, vocab = toy
        model, _ = train(split, TrainConfig(max_epochs=1, patience=1, seed=0),
                         _toy_mcfg(vocab), vocab)
        other = train_vocabulary(["completely unrelated words here"], 60)
        with pytest.raises(LineageError):
            predict(split.validation, model, other)

    def test_checkpoint_roundtrip_scores(self, toy, tmp_path):
        split, vocab = toy
        model, _ = train(split, TrainConfig(max_epochs=2, patience=2, seed=0),
                         _toy_mcfg(vocab), vocab)
        before = predict(split.validation, model, vocab)
        save_checkpoint(model, tmp_path / "m.pt")
        loaded = load_checkpoint(tmp_path / "m.pt")
        after = predict(split.validation, loaded, vocab)
        assert before == after
