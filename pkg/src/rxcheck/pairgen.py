"""Uncorrelated-pair sampling, duplication balancing, and dataset splitting."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .corpus import LabeledPair, read_pairs, write_pairs


@dataclass(frozen=True)
class SamplerConfig:
    target_negatives: int = 0
    distance_threshold: float = 0.5
    discard_polarity: str = "discard_if_similar"  # or discard_if_distant
    duplication_factor: int = 10
    split_ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    split_order: str = "duplicate_then_split"  # or split_then_duplicate
    seed: int = 0

    def __post_init__(self):
        if self.duplication_factor < 1:
            raise ValueError("duplication_factor must be >= 1")
        if not 0.0 <= self.distance_threshold <= 1.0:
            raise ValueError("distance_threshold must lie in [0, 1]")
        if self.discard_polarity not in ("discard_if_similar", "discard_if_distant"):
            raise ValueError(f"unknown polarity: {self.discard_polarity}")
        if self.split_order not in ("duplicate_then_split", "split_then_duplicate"):
            raise ValueError(f"unknown split order: {self.split_order}")
        if len(self.split_ratios) != 3 or any(r <= 0 for r in self.split_ratios):
            raise ValueError("split_ratios must be three positive fractions")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split_ratios must sum to 1")


def diagnosis_distance(a: str, b: str) -> float:
    """1 - Jaccard overlap of token sets. Symmetric; 0 for equal token sets,
    1 for disjoint ones. One empty side is maximally distant; two empty sides
    coincide.
    """
    ta, tb = set(a.split()), set(b.split())
    if not ta and not tb:
        return 0.0
    if not ta or not tb:
        return 1.0
    return 1.0 - len(ta & tb) / len(ta | tb)


@dataclass
class NegativeSample:
    pairs: list[LabeledPair]
    shortfall: int
    attempts: int


def _candidate_accepted(dist: float, cfg: SamplerConfig) -> bool:
    if cfg.discard_polarity == "discard_if_similar":
        return dist >= cfg.distance_threshold
    return dist <= cfg.distance_threshold


def sample_negatives(
    pairs: list[LabeledPair],
    cfg: SamplerConfig,
    max_attempts_factor: int = 50,
) -> NegativeSample:
    """Recombine prescriptions with foreign contexts into label-0 pairs.

    A candidate survives only if the distance between its prescription's source
    diagnosis and the sampled diagnosis passes the configured polarity test, and
    its text pair does not duplicate a natural pair. Deterministic per seed; if
    the target cannot be reached within the attempt budget the partial result is
    returned with an explicit shortfall.
    """
    if cfg.target_negatives == 0:
        return NegativeSample([], 0, 0)
    if len(pairs) < 2:
        return NegativeSample([], cfg.target_negatives, 0)
    rng = random.Random(cfg.seed)
    natural_texts = {(p.prescription, p.context) for p in pairs}
    out: list[LabeledPair] = []
    attempts = 0
    budget = max_attempts_factor * cfg.target_negatives
    while len(out) < cfg.target_negatives and attempts < budget:
        attempts += 1
        src = rng.randrange(len(pairs))
        ctx = rng.randrange(len(pairs))
        if src == ctx:
            continue
        prescription = pairs[src].prescription
        context = pairs[ctx].context
        if (prescription, context) in natural_texts:
            continue
        dist = diagnosis_distance(pairs[src].context, context)
        if not _candidate_accepted(dist, cfg):
            continue
        out.append(LabeledPair(
            pair_id=f"neg-{len(out):06d}",
            prescription=prescription,
            context=context,
            label=0,
            origin="sampled_negative",
        ))
    return NegativeSample(out, cfg.target_negatives - len(out), attempts)


@dataclass
class DatasetSplit:
    train: list[LabeledPair]
    validation: list[LabeledPair]
    test: list[LabeledPair]
    manifest: dict = field(default_factory=dict)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


def _count_manifest(splits: dict[str, list[LabeledPair]]) -> dict:
    manifest: dict = {}
    for name, items in splits.items():
        counts: dict[str, int] = {}
        for p in items:
            key = f"label={p.label},origin={p.origin}"
            counts[key] = counts.get(key, 0) + 1
        manifest[name] = {"total": len(items), "counts": counts}
    return manifest


def _duplicate(positives: list[LabeledPair], factor: int) -> list[LabeledPair]:
    replicas = []
    for p in positives:
        for k in range(factor - 1):
            replicas.append(LabeledPair(
                pair_id=f"{p.pair_id}-dup{k}",
                prescription=p.prescription,
                context=p.context,
                label=1,
                origin="duplicated",
            ))
    return replicas


def _cut(items: list[LabeledPair], ratios: tuple[float, float, float]):
    n = len(items)
    n_train = round(ratios[0] * n)
    n_val = round(ratios[1] * n)
    return items[:n_train], items[n_train:n_train + n_val], items[n_train + n_val:]


def balance_and_split(pairs: list[LabeledPair], cfg: SamplerConfig) -> DatasetSplit:
    """Replicate positives duplication_factor times, shuffle with the seed, and
    split per the configured ratios and order.
    """
    positives = [p for p in pairs if p.label == 1]
    negatives = [p for p in pairs if p.label == 0]
    if not positives or not negatives:
        raise ValueError("balance_and_split needs both labels present")
    rng = random.Random(cfg.seed)
    if cfg.split_order == "duplicate_then_split":
        combined = positives + _duplicate(positives, cfg.duplication_factor) + negatives
        rng.shuffle(combined)
        train, val, test = _cut(combined, cfg.split_ratios)
    else:
        combined = positives + negatives
        rng.shuffle(combined)
        train, val, test = _cut(combined, cfg.split_ratios)
        parts = []
        for part in (train, val, test):
            pos = [p for p in part if p.label == 1]
            dup = _duplicate(pos, cfg.duplication_factor)
            merged = part + dup
            rng.shuffle(merged)
            parts.append(merged)
        train, val, test = parts
    split = DatasetSplit(train=train, validation=val, test=test)
    split.manifest = _count_manifest({"train": train, "validation": val, "test": test})
    split.manifest["config"] = asdict(cfg)
    return split


def save_split(split: DatasetSplit, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pairs(split.train, out / "train.jsonl")
    write_pairs(split.validation, out / "validation.jsonl")
    write_pairs(split.test, out / "test.jsonl")
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(split.manifest, f, indent=2)


def load_split(in_dir: str | Path) -> DatasetSplit:
    src = Path(in_dir)
    with open(src / "manifest.json", "r", encoding="utf-8") as f:
        manifest = json.load(f)
    return DatasetSplit(
        train=read_pairs(src / "train.jsonl"),
        validation=read_pairs(src / "validation.jsonl"),
        test=read_pairs(src / "test.jsonl"),
        manifest=manifest,
    )
