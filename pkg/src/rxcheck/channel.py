"""Simulated transcription channel: seeded corruption toward a target word error
rate, word-level WER, essential-entity extraction, and label adjustment."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import NUMBER_WORDS, LabeledPair

DEFAULT_FILLERS = ("um", "uh", "ah", "er")
DEFAULT_SUB_POOL = (
    "pressure", "blood", "heart", "morning", "evening", "little",
    "bottle", "water", "table", "label", "paper", "number",
)
DEFAULT_ERROR_MIX = (0.60, 0.25, 0.15)  # substitution, deletion, insertion

UNIT_WORDS = frozenset({"milligrams", "micrograms", "milliliters", "grams", "units"})
USAGE_PHRASES = (
    "oral administration", "orally administration", "by mouth", "orally",
    "intravenous", "intramuscular", "subcutaneous",
    "once a day", "twice a day", "three times a day", "four times a day",
    "at bedtime", "as needed", "daily", "every morning", "every evening",
)


@dataclass
class ConfusionLexicon:
    """Word -> weighted plausible mis-transcriptions."""

    entries: dict[str, list[tuple[str, float]]]

    def __post_init__(self):
        for word, alts in self.entries.items():
            for repl, weight in alts:
                if repl == word:
                    raise ValueError(f"lexicon maps {word!r} to itself")
                if weight <= 0:
                    raise ValueError(f"non-positive weight for {word!r} -> {repl!r}")

    @classmethod
    def default(cls) -> "ConfusionLexicon":
        with resources.files("rxcheck.data").joinpath("confusion.json").open("r", encoding="utf-8") as f:
            raw = json.load(f)
        return cls({w: [(r, float(wt)) for r, wt in alts] for w, alts in raw.items()})

    @classmethod
    def load(cls, path: str | Path) -> "ConfusionLexicon":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        return cls({w: [(r, float(wt)) for r, wt in alts] for w, alts in raw.items()})


def edit_counts(reference: list[str], hypothesis: list[str]) -> tuple[int, int, int]:
    """Minimum word-level edit alignment: (substitutions, deletions, insertions)."""
    n, m = len(reference), len(hypothesis)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][0] = i
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = reference[i - 1] == hypothesis[j - 1]
            dp[i][j] = min(
                dp[i - 1][j - 1] + (0 if same else 1),
                dp[i - 1][j] + 1,
                dp[i][j - 1] + 1,
            )
    subs = dels = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (0 if reference[i - 1] == hypothesis[j - 1] else 1):
            if reference[i - 1] != hypothesis[j - 1]:
                subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, dels, ins


def word_error_rate(reference: str, hypothesis: str) -> float:
    """(S + D + I) / |reference words|; may exceed 1."""
    ref = reference.split()
    if not ref:
        raise ValueError("reference must be non-empty")
    s, d, i = edit_counts(ref, hypothesis.split())
    return (s + d + i) / len(ref)


def corpus_word_error_rate(references: list[str], hypotheses: list[str]) -> float:
    """Aggregate WER over aligned utterances: total edits / total reference words."""
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses must align one-to-one")
    edits = 0
    words = 0
    for ref, hyp in zip(references, hypotheses):
        r = ref.split()
        if not r:
            raise ValueError("reference must be non-empty")
        s, d, i = edit_counts(r, hyp.split())
        edits += s + d + i
        words += len(r)
    return edits / words


@dataclass(frozen=True)
class CorruptionOp:
    position: int  # index into the reference word sequence
    kind: str  # substitute | delete | insert
    original: str
    replacement: str  # "" for deletions; inserted/substituted-in text otherwise


def _expected_sub_edits(word: str, lexicon: ConfusionLexicon) -> float:
    alts = lexicon.entries.get(word)
    if not alts:
        return 1.0
    total_w = sum(w for _, w in alts)
    expected = 0.0
    for repl, w in alts:
        s, d, i = edit_counts([word], repl.split())
        expected += (s + d + i) * w / total_w
    return expected


def corrupt_with_log(
    text: str,
    lexicon: ConfusionLexicon | None = None,
    target_wer: float = 0.2869,
    seed: int = 0,
    error_mix: tuple[float, float, float] = DEFAULT_ERROR_MIX,
    fillers: tuple[str, ...] = DEFAULT_FILLERS,
    sub_pool: tuple[str, ...] = DEFAULT_SUB_POOL,
) -> tuple[str, list[CorruptionOp]]:
    """Corrupt a word sequence so the expected per-word edit rate equals
    target_wer. Lexicon entries drive substitutions where available; otherwise a
    generic confusion pool is used. Deterministic per seed; identity at target 0.
    """
    if not 0.0 <= target_wer < 1.0:
        raise ValueError("target_wer must lie in [0, 1)")
    if lexicon is None:
        lexicon = ConfusionLexicon.default()
    words = text.split()
    if target_wer == 0.0 or not words:
        return text, []
    rng = random.Random(seed)
    p_sub, p_del, p_ins = error_mix
    out: list[str] = []
    ops: list[CorruptionOp] = []
    for pos, w in enumerate(words):
        expected_edits = p_sub * _expected_sub_edits(w, lexicon) + p_del + p_ins
        p_event = min(1.0, target_wer / expected_edits)
        if rng.random() >= p_event:
            out.append(w)
            continue
        kind = rng.choices(("substitute", "delete", "insert"), weights=error_mix)[0]
        if kind == "substitute":
            alts = lexicon.entries.get(w)
            if alts:
                repl = rng.choices([r for r, _ in alts], weights=[wt for _, wt in alts])[0]
            else:
                choices = [s for s in sub_pool if s != w] or ["uh"]
                repl = rng.choice(choices)
            out.extend(repl.split())
            ops.append(CorruptionOp(pos, "substitute", w, repl))
        elif kind == "delete":
            ops.append(CorruptionOp(pos, "delete", w, ""))
        else:
            filler = rng.choice(fillers)
            out.extend([w, filler])
            ops.append(CorruptionOp(pos, "insert", w, filler))
    return " ".join(out), ops


def corrupt(
    text: str,
    lexicon: ConfusionLexicon | None = None,
    target_wer: float = 0.2869,
    seed: int = 0,
    **kwargs,
) -> str:
    transcript, _ = corrupt_with_log(text, lexicon, target_wer, seed, **kwargs)
    return transcript


@dataclass(frozen=True)
class EntityRecord:
    medications: frozenset[str] = frozenset()
    dosages: frozenset[str] = frozenset()
    usages: frozenset[str] = frozenset()

    def diff(self, other: "EntityRecord") -> list[str]:
        out = []
        if self.medications != other.medications:
            out.append("medication")
        if self.dosages != other.dosages:
            out.append("dosage")
        if self.usages != other.usages:
            out.append("usage")
        return out

    def is_empty(self) -> bool:
        return not (self.medications or self.dosages or self.usages)


def _match_phrases(tokens: list[str], phrases: list[str]) -> set[str]:
    """Greedy longest-match of multi-word phrases over the token sequence."""
    by_len = sorted(phrases, key=lambda p: -len(p.split()))
    found: set[str] = set()
    i = 0
    while i < len(tokens):
        matched = False
        for phrase in by_len:
            parts = phrase.split()
            if tokens[i:i + len(parts)] == parts:
                found.add(phrase)
                i += len(parts)
                matched = True
                break
        if not matched:
            i += 1
    return found


def extract_entities(text: str, drug_lexicon: frozenset[str] | None = None) -> EntityRecord:
    """Pull the essential entities out of normalized prescription text:
    lexicon-matched medication names, number-word + unit dosages, and
    route/frequency usage phrases.
    """
    tokens = text.split()
    meds = _match_phrases(tokens, sorted(drug_lexicon)) if drug_lexicon else set()
    dosages: set[str] = set()
    i = 0
    while i < len(tokens):
        if tokens[i] in NUMBER_WORDS:
            j = i
            while j < len(tokens) and tokens[j] in NUMBER_WORDS:
                j += 1
            if j < len(tokens) and tokens[j] in UNIT_WORDS:
                dosages.add(" ".join(tokens[i:j + 1]))
                i = j + 1
                continue
            i = j
        else:
            i += 1
    usages = _match_phrases(tokens, list(USAGE_PHRASES))
    return EntityRecord(frozenset(meds), frozenset(dosages), frozenset(usages))


@dataclass
class ChannelReport:
    pair_id: str
    original: str
    transcript: str
    substitutions: int
    deletions: int
    insertions: int
    entity_diff: list[str] = field(default_factory=list)
    relabeled: bool = False


def relabel(
    pairs: list[LabeledPair],
    transcripts: list[str],
    drug_lexicon: frozenset[str],
) -> tuple[list[LabeledPair], list[ChannelReport]]:
    """Flip label-1 pairs to 0 when the transcript's essential entities differ
    from the original's; label-0 pairs never change. The returned pairs carry
    the transcript as their prescription text.
    """
    if len(pairs) != len(transcripts):
        raise ValueError(f"{len(pairs)} pairs but {len(transcripts)} transcripts")
    out_pairs: list[LabeledPair] = []
    reports: list[ChannelReport] = []
    for pair, transcript in zip(pairs, transcripts):
        s, d, i = edit_counts(pair.prescription.split(), transcript.split())
        diff = extract_entities(pair.prescription, drug_lexicon).diff(
            extract_entities(transcript, drug_lexicon)
        )
        flipped = pair.label == 1 and bool(diff)
        new_label = 0 if flipped else pair.label
        origin = pair.origin
        if flipped and origin in ("natural", "duplicated"):
            # origin invariants forbid label-0 naturals; mark the provenance
            origin = "relabeled"
        out_pairs.append(LabeledPair(
            pair_id=pair.pair_id,
            prescription=transcript,
            context=pair.context,
            label=new_label,
            origin=origin,
        ))
        reports.append(ChannelReport(
            pair_id=pair.pair_id,
            original=pair.prescription,
            transcript=transcript,
            substitutions=s,
            deletions=d,
            insertions=i,
            entity_diff=diff,
            relabeled=flipped,
        ))
    return out_pairs, reports


def save_reports(reports: list[ChannelReport], path: str | Path, config: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        if config is not None:
            f.write(json.dumps({"_config": config}) + "\n")
        for r in reports:
            f.write(json.dumps({
                "pair_id": r.pair_id,
                "original": r.original,
                "transcript": r.transcript,
                "substitutions": r.substitutions,
                "deletions": r.deletions,
                "insertions": r.insertions,
                "entity_diff": r.entity_diff,
                "relabeled": r.relabeled,
            }) + "\n")
