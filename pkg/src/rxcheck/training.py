"""Fine-tuning with early stopping, plus thresholded prediction."""

from __future__ import annotations

import copy
import json
import math
import random
from dataclasses import dataclass, field, asdict
from pathlib import Path

import torch
import torch.nn.functional as F

from .corpus import LabeledPair
from .encoder import ModelConfig, PairClassifier, batch_tensors
from .pairgen import DatasetSplit
from .subword import Vocabulary, encode_pair


class LineageError(RuntimeError):
    """Checkpoint and vocabulary come from different runs."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-3
    max_epochs: int = 30
    patience: int = 3
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    diverged: bool = False
    config: dict = field(default_factory=dict)

    @property
    def best_val_loss(self) -> float:
        return self.epochs[self.best_epoch - 1].val_loss

    def save(self, path: str | Path) -> None:
        payload = {
            "epochs": [asdict(e) for e in self.epochs],
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "diverged": self.diverged,
            "config": self.config,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)

    def render(self) -> str:
        lines = [f"{'epoch':>5}  {'train_loss':>10}  {'train_acc':>9}  {'val_loss':>10}  {'val_acc':>9}"]
        for e in self.epochs:
            marker = " *" if e.epoch == self.best_epoch else ""
            lines.append(
                f"{e.epoch:>5}  {e.train_loss:>10.4f}  {e.train_accuracy:>9.4f}"
                f"  {e.val_loss:>10.4f}  {e.val_accuracy:>9.4f}{marker}"
            )
        return "\n".join(lines)


def encode_pairs(pairs: list[LabeledPair], vocab: Vocabulary, max_len: int):
    return [
        encode_pair(p.prescription, p.context, vocab, max_len, label=p.label)
        for p in pairs
    ]


def _eval_epoch(model: PairClassifier, encoded, batch_size: int, threshold: float):
    total_loss, correct, n = 0.0, 0, 0
    model.train(False)
    with torch.no_grad():
        for i in range(0, len(encoded), batch_size):
            batch = encoded[i:i + batch_size]
            ids, segments, mask, labels = batch_tensors(batch)
            scores, _ = model(ids, segments, mask, mode="infer")
            loss = F.binary_cross_entropy(scores, labels)
            total_loss += float(loss.item()) * len(batch)
            correct += int(((scores >= threshold).float() == labels).sum().item())
            n += len(batch)
    return total_loss / n, correct / n


def train(
    split: DatasetSplit,
    cfg: TrainConfig,
    mcfg: ModelConfig,
    vocab: Vocabulary,
    init: PairClassifier | None = None,
) -> tuple[PairClassifier, TrainReport]:
    """Minimize binary cross-entropy with Adam; early-stop on validation loss
    and return the model restored to its best-validation checkpoint.
    """
    for part, name in ((split.train, "train"), (split.validation, "validation")):
        labels = {p.label for p in part}
        if labels != {0, 1}:
            raise ValueError(f"{name} split must contain both labels, saw {labels}")
    torch.manual_seed(cfg.seed)
    model = init if init is not None else PairClassifier(mcfg)
    model.metadata = dict(model.metadata)
    model.metadata["vocab_hash"] = vocab.content_hash()
    train_enc = encode_pairs(split.train, vocab, mcfg.max_len)
    val_enc = encode_pairs(split.validation, vocab, mcfg.max_len)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    rng = random.Random(cfg.seed)
    report = TrainReport(config={"train": asdict(cfg), "model": asdict(mcfg)})
    best_state = copy.deepcopy(model.state_dict())
    best_val = math.inf
    bad_epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = list(range(len(train_enc)))
        rng.shuffle(order)
        model.train(True)
        total_loss, correct = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            batch = [train_enc[j] for j in order[i:i + cfg.batch_size]]
            ids, segments, mask, labels = batch_tensors(batch)
            scores, _ = model(ids, segments, mask, mode="train")
            loss = F.binary_cross_entropy(scores, labels)
            if not torch.isfinite(loss):
                report.diverged = True
                model.load_state_dict(best_state)
                return model, report
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss.item()) * len(batch)
            correct += int(((scores >= cfg.threshold).float() == labels).sum().item())
        train_loss = total_loss / len(train_enc)
        train_acc = correct / len(train_enc)
        val_loss, val_acc = _eval_epoch(model, val_enc, cfg.batch_size, cfg.threshold)
        report.epochs.append(EpochStats(epoch, train_loss, train_acc, val_loss, val_acc))
        if val_loss < best_val:
            best_val = val_loss
            best_state = copy.deepcopy(model.state_dict())
            report.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                report.stopped_early = True
                break
    model.load_state_dict(best_state)
    return model, report


def predict(
    pairs: list[LabeledPair],
    model: PairClassifier,
    vocab: Vocabulary,
    threshold: float = 0.5,
    batch_size: int = 32,
) -> list[tuple[float, int]]:
    """Score pairs and decide validity; the boundary score counts as valid.

    Scores are invariant to how the list is batched.
    """
    stored = model.metadata.get("vocab_hash")
    if stored is not None and stored != vocab.content_hash():
        raise LineageError("vocabulary does not match the checkpoint's training vocabulary")
    encoded = encode_pairs(pairs, vocab, model.cfg.max_len)
    out: list[tuple[float, int]] = []
    model.train(False)
    with torch.no_grad():
        for i in range(0, len(encoded), batch_size):
            batch = encoded[i:i + batch_size]
            ids, segments, mask, _ = batch_tensors(batch)
            scores, _ = model(ids, segments, mask, mode="infer")
            for s in scores.tolist():
                out.append((s, 1 if s >= threshold else 0))
    return out
