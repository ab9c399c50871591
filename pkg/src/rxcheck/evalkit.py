"""Classification metrics and the variant/channel comparison tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

from .corpus import LabeledPair
from .encoder import PairClassifier, variant_display_name
from .subword import Vocabulary
from .training import predict


@dataclass
class MetricsRow:
    variant: str
    channel: str  # text | speech
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool = False


def score_metrics(
    decisions: list[tuple[int, int]],
    variant: str = "",
    channel: str = "text",
) -> MetricsRow:
    """Confusion counts and derived metrics from (predicted, actual) pairs.

    Undefined ratios (empty denominators) are reported as 0 and the row is
    flagged degenerate.
    """
    if not decisions:
        raise ValueError("cannot score an empty decision list")
    tp = fp = fn = tn = 0
    for predicted, actual in decisions:
        if predicted == 1 and actual == 1:
            tp += 1
        elif predicted == 1 and actual == 0:
            fp += 1
        elif predicted == 0 and actual == 1:
            fn += 1
        else:
            tn += 1
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total
    degenerate = False
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0:
        f1, degenerate = 0.0, True
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsRow(variant, channel, tp, fp, fn, tn, accuracy, precision, recall, f1, degenerate)


def render_table(rows: list[MetricsRow], title: str = "") -> str:
    """Aligned plain-text table; the best value per metric column is starred."""
    columns = ("accuracy", "precision", "recall", "f1")
    best = {c: max(getattr(r, c) for r in rows) for c in columns} if rows else {}
    header = f"{'Model':<14}" + "".join(f"{c.capitalize():>12}" for c in columns)
    lines = []
    if title:
        lines.append(title)
    lines.append(header)
    for r in rows:
        cells = []
        for c in columns:
            v = getattr(r, c)
            mark = "*" if v == best[c] else " "
            cells.append(f"{mark}{v:.4f}".rjust(12))
        lines.append(f"{r.variant:<14}" + "".join(cells))
    return "\n".join(lines)


def run_benchmark(
    variants: list[str | Path],
    vocab: Vocabulary,
    text_test: list[LabeledPair],
    speech_test: list[LabeledPair],
    threshold: float = 0.5,
    out_dir: str | Path | None = None,
) -> tuple[list[MetricsRow], str]:
    """Evaluate each checkpoint on both channels; returns the rows and the
    rendered pair of tables. Missing checkpoints are skipped with a notice.
    """
    from .encoder import load_checkpoint

    rows: list[MetricsRow] = []
    notices: list[str] = []
    for ckpt in variants:
        path = Path(ckpt)
        if not path.exists():
            notices.append(f"checkpoint not found, row skipped: {path}")
            continue
        model = load_checkpoint(path)
        name = variant_display_name(model.metadata)
        for channel, pairs in (("text", text_test), ("speech", speech_test)):
            if not pairs:
                continue
            scored = predict(pairs, model, vocab, threshold)
            decisions = [(dec, p.label) for (_, dec), p in zip(scored, pairs)]
            rows.append(score_metrics(decisions, variant=name, channel=channel))
    text_rows = [r for r in rows if r.channel == "text"]
    speech_rows = [r for r in rows if r.channel == "speech"]
    parts = []
    if text_rows:
        parts.append(render_table(text_rows, title="Performance for text input"))
    if speech_rows:
        parts.append(render_table(speech_rows, title="Performance for speech input"))
    parts.extend(notices)
    rendered = "\n\n".join(parts)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "benchmark.json", "w", encoding="utf-8") as f:
            json.dump([asdict(r) for r in rows], f, indent=2)
        (out / "benchmark.txt").write_text(rendered + "\n", encoding="utf-8")
    return rows, rendered
