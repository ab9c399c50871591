import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxcheck.channel import (
    ChannelReport,
    ConfusionLexicon,
    CorruptionOp,
    EntityRecord,
    corpus_word_error_rate,
    corrupt,
    corrupt_with_log,
    edit_counts,
    extract_entities,
    relabel,
    word_error_rate,
)
from rxcheck.corpus import LabeledPair, spell_number

small_words = st.lists(st.sampled_from("a b c d".split()), max_size=6)


def _oracle_edit_distance(ref, hyp):
    """Independent plain recurrence, no traceback."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i]
        for j, h in enumerate(hyp, 1):
            cur.append(min(prev[j - 1] + (r != h), prev[j] + 1, cur[-1] + 1))
        prev = cur
    return prev[-1]


class TestWer:
    def test_identity(self):
        assert word_error_rate("aspirin daily", "aspirin daily") == 0.0

    def test_single_deletion(self):
        ref = "aspirin eighty one milligrams daily"
        hyp = "aspirin eighty milligrams daily"
        assert word_error_rate(ref, hyp) == pytest.approx(0.2)

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            word_error_rate("", "anything")

    def test_can_exceed_one(self):
        assert word_error_rate("a", "x y z") > 1.0

    @given(small_words, small_words)
    @settings(max_examples=150, deadline=None)
    def test_matches_independent_oracle(self, ref, hyp):
        s, d, i = edit_counts(ref, hyp)
        assert s + d + i == _oracle_edit_distance(ref, hyp)

    @given(small_words.filter(bool), small_words, small_words)
    @settings(max_examples=100, deadline=None)
    def test_triangle_sanity(self, a, b, c):
        ab = sum(edit_counts(a, b))
        ac = sum(edit_counts(a, c))
        cb = sum(edit_counts(c, b))
        assert ab / len(a) <= (ac + cb) / len(a)

    def test_zero_iff_identical(self):
        assert word_error_rate("a b", "a b") == 0.0
        assert word_error_rate("a b", "a c") > 0.0

    def test_corpus_wer_alignment_required(self):
        with pytest.raises(ValueError):
            corpus_word_error_rate(["a"], ["a", "b"])


class TestCorrupt:
    @given(st.lists(st.sampled_from("alpha beta gamma delta".split()), max_size=8).map(" ".join))
    @settings(max_examples=50, deadline=None)
    def test_target_zero_is_identity(self, text):
        assert corrupt(text, target_wer=0.0, seed=1) == text

    def test_deterministic(self):
        text = "lisinopril five milligrams oral administration"
        assert corrupt(text, target_wer=0.3, seed=7) == corrupt(text, target_wer=0.3, seed=7)

    def test_reference_transcription_error(self):
        # the documented mis-transcription: the drug name heard as common words
        # and the route slightly mangled
        lex = ConfusionLexicon({
            "lopressor": [("blood pressure lopressor", 1.0)],
            "oral": [("orally", 1.0)],
        })
        out = corrupt("lopressor seventy five milligrams oral administration",
                      lex, target_wer=0.45, seed=32)
        assert out == "blood pressure lopressor seventy five milligrams orally administration"

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_corpus_wer_converges(self, seed):
        refs = [
            "aspirin eighty one milligrams daily",
            "lisinopril five milligrams oral administration once a day",
            "warfarin two milligrams at bedtime",
        ] * 900
        assert sum(len(r.split()) for r in refs) >= 10_000
        lex = ConfusionLexicon.default()
        hyps = [corrupt(r, lex, 0.2869, seed=seed * 100_000 + i) for i, r in enumerate(refs)]
        measured = corpus_word_error_rate(refs, hyps)
        assert abs(measured - 0.2869) <= 0.02, measured

    def test_bad_target_rejected(self):
        with pytest.raises(ValueError):
            corrupt("a", target_wer=1.0)

    def test_log_matches_transcript(self):
        text = "lisinopril five milligrams oral administration once a day"
        transcript, ops = corrupt_with_log(text, target_wer=0.4, seed=5)
        # replay the log against the original to reproduce the transcript
        words = text.split()
        out = []
        by_pos = {op.position: op for op in ops}
        for i, w in enumerate(words):
            op = by_pos.get(i)
            if op is None:
                out.append(w)
            elif op.kind == "substitute":
                out.extend(op.replacement.split())
            elif op.kind == "insert":
                out.extend([w, op.replacement])
        assert " ".join(out) == transcript


class TestConfusionLexicon:
    def test_self_mapping_rejected(self):
        with pytest.raises(ValueError):
            ConfusionLexicon({"a": [("a", 1.0)]})

    def test_non_positive_weight_rejected(self):
        with pytest.raises(ValueError):
            ConfusionLexicon({"a": [("b", 0.0)]})

    def test_default_loads(self):
        lex = ConfusionLexicon.default()
        assert "lopressor" in lex.entries


class TestExtractEntities:
    def test_reference_prescription(self, table):
        rec = extract_entities(
            "lisinopril five milligrams oral administration once a day",
            table.drug_lexicon(),
        )
        assert rec.medications == {"lisinopril"}
        assert rec.dosages == {"five milligrams"}
        assert rec.usages == {"oral administration", "once a day"}

    def test_empty_text(self):
        assert extract_entities("").is_empty()

    def test_multiword_drug(self, table):
        rec = extract_entities("insulin glargine twenty units subcutaneous at bedtime",
                               table.drug_lexicon())
        assert rec.medications == {"insulin glargine"}
        assert rec.dosages == {"twenty units"}
        assert rec.usages == {"subcutaneous", "at bedtime"}

    def test_template_slots_roundtrip(self, table):
        rng = random.Random(3)
        units = {"mg": "milligrams", "mcg": "micrograms", "units": "units"}
        usages = ["oral administration", "intravenous", "once a day", "twice a day",
                  "at bedtime", "as needed", "daily"]
        for _ in range(200):
            tmpl = rng.choice(list(table.medications.values()))
            dose = rng.choice(tmpl.doses)
            route = rng.choice(usages)
            freq = rng.choice(usages)
            dose_txt = f"{spell_number(dose)} {units[tmpl.unit]}"
            text = f"{tmpl.drug} {dose_txt} {route} {freq}"
            rec = extract_entities(text, table.drug_lexicon())
            assert rec.medications == {tmpl.drug}
            assert rec.dosages == {dose_txt}
            assert rec.usages == {route, freq}


def _pair(i, rx, ctx="essential hypertension", label=1):
    origin = "natural" if label == 1 else "sampled_negative"
    return LabeledPair(f"p{i}", rx, ctx, label, origin)


class TestRelabel:
    def test_identical_transcript_unchanged(self, table):
        pairs = [_pair(0, "lisinopril five milligrams daily")]
        out, reports = relabel(pairs, [pairs[0].prescription], table.drug_lexicon())
        assert out[0].label == 1 and not reports[0].relabeled

    def test_entity_change_flips_positive(self, table):
        pairs = [_pair(0, "lisinopril five milligrams daily")]
        out, reports = relabel(pairs, ["warfarin five milligrams daily"], table.drug_lexicon())
        assert out[0].label == 0 and reports[0].relabeled
        assert reports[0].entity_diff == ["medication"]

    def test_negative_never_flips_up(self, table):
        pairs = [_pair(0, "lisinopril five milligrams daily", label=0)]
        out, reports = relabel(pairs, ["totally different words"], table.drug_lexicon())
        assert out[0].label == 0 and not reports[0].relabeled

    def test_non_entity_noise_keeps_label(self, table):
        pairs = [_pair(0, "lisinopril five milligrams daily")]
        out, reports = relabel(pairs, ["lisinopril um five milligrams daily"], table.drug_lexicon())
        assert out[0].label == 1 and not reports[0].relabeled

    def test_length_mismatch_rejected(self, table):
        with pytest.raises(ValueError):
            relabel([_pair(0, "a b")], [], table.drug_lexicon())

    def test_report_invariant(self, table):
        rng = random.Random(5)
        pairs = [
            _pair(i, "lisinopril five milligrams oral administration",
                  label=rng.randint(0, 1) if i % 2 else 1)
            for i in range(60)
        ]
        transcripts = [corrupt(p.prescription, target_wer=0.4, seed=i) for i, p in enumerate(pairs)]
        out, reports = relabel(pairs, transcripts, table.drug_lexicon())
        for before, after, rep in zip(pairs, out, reports):
            assert rep.relabeled == (before.label == 1 and bool(rep.entity_diff))
            if before.label == 0:
                assert after.label == 0
