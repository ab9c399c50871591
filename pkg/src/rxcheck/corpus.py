"""Clinical record ingestion, prescription text normalization, and synthetic data generation."""

from __future__ import annotations

import functools
import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

_ONES = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
    "seventeen", "eighteen", "nineteen",
]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]

NUMBER_WORDS = frozenset(_ONES) | frozenset(t for t in _TENS if t) | {"hundred", "thousand"}


def spell_number(n: int) -> str:
    """Spell out a non-negative integer, e.g. 81 -> 'eighty one'."""
    if n < 0:
        raise ValueError("negative numbers are not verbalized")
    if n < 20:
        return _ONES[n]
    if n < 100:
        tens, rest = divmod(n, 10)
        return _TENS[tens] + (" " + _ONES[rest] if rest else "")
    if n < 1000:
        hundreds, rest = divmod(n, 100)
        return _ONES[hundreds] + " hundred" + (" " + spell_number(rest) if rest else "")
    if n < 1_000_000:
        thousands, rest = divmod(n, 1000)
        return spell_number(thousands) + " thousand" + (" " + spell_number(rest) if rest else "")
    raise ValueError(f"number too large to verbalize: {n}")


def _load_data_json(name: str) -> dict:
    with resources.files("rxcheck.data").joinpath(name).open("r", encoding="utf-8") as f:
        return json.load(f)


@functools.lru_cache(maxsize=1)
def load_default_abbreviations() -> dict[str, str]:
    """Abbreviation -> full-name phrase table shipped with the package."""
    return {k.lower(): v for k, v in _load_data_json("abbreviations.json").items()}


@dataclass(frozen=True)
class ClinicalRecord:
    record_id: str
    diagnosis: str
    medications: tuple[str, ...]
    provenance: str = "ingested"  # ingested | synthetic


@dataclass(frozen=True)
class LabeledPair:
    pair_id: str
    prescription: str
    context: str
    label: int
    origin: str  # natural | sampled_negative | duplicated

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.origin == "natural" and self.label != 1:
            raise ValueError("natural pairs must carry label 1")
        if self.origin == "sampled_negative" and self.label != 0:
            raise ValueError("sampled negatives must carry label 0")


@dataclass(frozen=True)
class MedicationTemplate:
    med_id: str
    drug: str
    doses: tuple[int, ...]
    unit: str


@dataclass
class CompatibilityTable:
    """Synthetic ground truth: which medication templates fit which diagnoses."""

    diagnoses: dict[str, str]
    medications: dict[str, MedicationTemplate]
    compatible: dict[str, frozenset[str]]
    _drug_to_med: dict[str, str] = field(init=False, repr=False)

    def __post_init__(self):
        for dx_id, meds in self.compatible.items():
            if not meds:
                raise ValueError(f"diagnosis {dx_id} has no compatible medications")
        self._drug_to_med = {t.drug: m for m, t in self.medications.items()}

    @classmethod
    def default(cls) -> "CompatibilityTable":
        raw = _load_data_json("compatibility.json")
        meds = {
            m: MedicationTemplate(m, spec["drug"], tuple(spec["doses"]), spec["unit"])
            for m, spec in raw["medications"].items()
        }
        return cls(
            diagnoses=dict(raw["diagnoses"]),
            medications=meds,
            compatible={d: frozenset(v) for d, v in raw["compatible"].items()},
        )

    def is_compatible(self, dx_id: str, med_id: str) -> bool:
        return med_id in self.compatible.get(dx_id, frozenset())

    def diagnosis_id_for(self, text: str) -> str | None:
        norm = normalize_prescription(text)
        for dx_id, dx_text in self.diagnoses.items():
            if normalize_prescription(dx_text) == norm:
                return dx_id
        return None

    def medication_id_for(self, text: str) -> str | None:
        """Recover the medication template id from (normalized) item text via its drug name."""
        norm = normalize_prescription(text)
        for drug, med_id in self._drug_to_med.items():
            if re.search(rf"\b{re.escape(drug)}\b", norm):
                return med_id
        return None

    def drug_lexicon(self) -> frozenset[str]:
        return frozenset(t.drug for t in self.medications.values())


_SERIAL_RE = re.compile(r"^\s*\d{1,3}\s*[.):–-]\s*")
_DIGIT_LETTER_RE = re.compile(r"(?<=\d)(?=[a-zA-Z])|(?<=[a-zA-Z])(?=\d)")
_PUNCT_RE = re.compile(r"[^a-z0-9\s]")


def normalize_prescription(
    raw: str,
    abbrev_table: dict[str, str] | None = None,
    verbalize_numbers: bool = True,
) -> str:
    """Normalize free prescription text: drop serial prefixes, lowercase, strip
    punctuation, expand abbreviations, and spell out numerals.

    Total and idempotent; an all-punctuation input maps to the empty string.
    """
    if abbrev_table is None:
        abbrev_table = load_default_abbreviations()
    text = _SERIAL_RE.sub("", raw)
    text = text.lower()
    text = _DIGIT_LETTER_RE.sub(" ", text)
    text = _PUNCT_RE.sub(" ", text)
    out: list[str] = []
    for tok in text.split():
        expanded = abbrev_table.get(tok, tok)
        for word in expanded.split():
            if verbalize_numbers and word.isdigit():
                out.append(spell_number(int(word)))
            else:
                out.append(word)
    return " ".join(out)


class IngestError(ValueError):
    pass


def ingest_records(path: str | Path, format: str = "jsonl") -> tuple[list[ClinicalRecord], list[str]]:
    """Read one record object per line. Returns (records, warnings); a record
    missing its diagnosis is skipped with a warning, a malformed line is fatal.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported format: {format}")
    records: list[ClinicalRecord] = []
    warnings: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"line {lineno}: malformed record: {exc}") from exc
            if not isinstance(obj, dict):
                raise IngestError(f"line {lineno}: expected an object")
            diagnosis = obj.get("diagnosis")
            if not diagnosis or not normalize_prescription(str(diagnosis)):
                warnings.append(f"line {lineno}: missing or empty diagnosis, record skipped")
                continue
            meds = obj.get("medications", [])
            if not isinstance(meds, list):
                raise IngestError(f"line {lineno}: medications must be an array")
            records.append(
                ClinicalRecord(
                    record_id=str(obj.get("record_id", f"rec-{lineno:06d}")),
                    diagnosis=str(diagnosis),
                    medications=tuple(str(m) for m in meds),
                    provenance="ingested",
                )
            )
    return records, warnings


def extract_correlated_pairs(
    records: Iterable[ClinicalRecord],
    abbrev_table: dict[str, str] | None = None,
    drug_lexicon: frozenset[str] | None = None,
) -> tuple[list[LabeledPair], int]:
    """One label-1 pair per (record, medication item). Items that normalize to
    empty text, or contain no lexicon drug when a lexicon is given, are dropped;
    the drop count is returned alongside the pairs.
    """
    if abbrev_table is None:
        abbrev_table = load_default_abbreviations()
    pairs: list[LabeledPair] = []
    dropped = 0
    for rec in records:
        context = normalize_prescription(rec.diagnosis, abbrev_table)
        for j, item in enumerate(rec.medications):
            prescription = normalize_prescription(item, abbrev_table)
            if not prescription:
                dropped += 1
                continue
            if drug_lexicon is not None:
                toks = set(prescription.split())
                if not any(set(drug.split()) <= toks for drug in drug_lexicon):
                    dropped += 1
                    continue
            pairs.append(
                LabeledPair(
                    pair_id=f"{rec.record_id}-m{j}",
                    prescription=prescription,
                    context=context,
                    label=1,
                    origin="natural",
                )
            )
    return pairs, dropped


_ROUTE_FORMS = {
    "PO": ["PO", "po", "oral administration"],
    "IV": ["IV", "intravenous"],
    "SUBQ": ["subq", "subcutaneous"],
}
_FREQ_FORMS = {
    "QD": ["QD", "qd", "once a day", "daily"],
    "BID": ["BID", "twice a day"],
    "TID": ["TID", "three times a day"],
    "QHS": ["qhs", "at bedtime"],
    "PRN": ["prn", "as needed"],
}


def _render_medication(rng: random.Random, tmpl: MedicationTemplate, serial: int) -> str:
    dose = rng.choice(tmpl.doses)
    unit = rng.choice([tmpl.unit, {"mg": "milligrams", "mcg": "micrograms", "units": "units"}[tmpl.unit]])
    route = rng.choice(_ROUTE_FORMS[rng.choice(list(_ROUTE_FORMS))])
    freq = rng.choice(_FREQ_FORMS[rng.choice(list(_FREQ_FORMS))])
    drug = tmpl.drug.title() if rng.random() < 0.4 else tmpl.drug
    dose_txt = str(dose) if rng.random() < 0.7 else spell_number(dose)
    prefix = f"{serial}. " if rng.random() < 0.5 else ""
    return f"{prefix}{drug} {dose_txt} {unit} {route} {freq}"


def generate_synthetic_records(
    n: int,
    table: CompatibilityTable | None = None,
    seed: int = 0,
) -> list[ClinicalRecord]:
    """Deterministic synthetic records; every medication is drawn from its
    diagnosis's compatible set, so ground truth is recoverable from the table.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if table is None:
        table = CompatibilityTable.default()
    rng = random.Random(seed)
    dx_ids = sorted(table.diagnoses)
    records: list[ClinicalRecord] = []
    for i in range(n):
        dx_id = rng.choice(dx_ids)
        dx_text = table.diagnoses[dx_id]
        if rng.random() < 0.3:
            dx_text = dx_text.title()
        med_ids = sorted(table.compatible[dx_id])
        k = rng.randint(1, min(4, len(med_ids)))
        chosen = rng.sample(med_ids, k)
        meds = tuple(
            _render_medication(rng, table.medications[m], serial=j + 1)
            for j, m in enumerate(chosen)
        )
        records.append(
            ClinicalRecord(
                record_id=f"syn-{i:06d}",
                diagnosis=dx_text,
                medications=meds,
                provenance="synthetic",
            )
        )
    return records


def write_records(records: Iterable[ClinicalRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps({
                "record_id": rec.record_id,
                "diagnosis": rec.diagnosis,
                "medications": list(rec.medications),
            }) + "\n")


def write_pairs(pairs: Iterable[LabeledPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps({
                "pair_id": p.pair_id,
                "prescription": p.prescription,
                "context": p.context,
                "label": p.label,
                "origin": p.origin,
            }) + "\n")


def read_pairs(path: str | Path) -> list[LabeledPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            pairs.append(LabeledPair(
                pair_id=obj["pair_id"],
                prescription=obj["prescription"],
                context=obj["context"],
                label=int(obj["label"]),
                origin=obj["origin"],
            ))
    return pairs
