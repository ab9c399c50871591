import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxcheck.subword import (
    CLS,
    CONTINUATION,
    SEP,
    SPECIAL_TOKENS,
    UNK,
    Vocabulary,
    decode_pair,
    encode_pair,
    train_vocabulary,
)

CORPUS = [
    "lisinopril five milligrams oral administration once a day",
    "aspirin eighty one milligrams daily",
    "essential hypertension",
    "atrial fibrillation",
    "warfarin five milligrams at bedtime",
]

word_strategy = st.text(alphabet="abcdefor", min_size=1, max_size=8)
text_strategy = st.lists(word_strategy, min_size=1, max_size=6).map(" ".join)


@pytest.fixture(scope="module")
def vocab():
    return train_vocabulary(CORPUS, 300)


class TestTrainVocabulary:
    def test_merge_trace(self):
        v = train_vocabulary(["aa aa"], 10)
        assert "a" in v.token_to_id
        assert "##a" in v.token_to_id
        assert "aa" in v.token_to_id

    def test_character_vocab_when_no_merge_budget(self):
        alphabet = {"a", "b", "##a", "##b"}
        v = train_vocabulary(["ab ba"], len(SPECIAL_TOKENS) + len(alphabet))
        assert set(v.tokens) == set(SPECIAL_TOKENS) | alphabet

    def test_deterministic(self):
        a = train_vocabulary(CORPUS, 100, seed=1)
        b = train_vocabulary(CORPUS, 100, seed=1)
        assert a.tokens == b.tokens

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            train_vocabulary([], 50)
        with pytest.raises(ValueError):
            train_vocabulary(["   "], 50)

    def test_size_budget_respected(self, vocab):
        assert len(vocab) <= 300

    def test_undersized_budget_rejected(self):
        with pytest.raises(ValueError):
            train_vocabulary(CORPUS, 6)

    def test_specials_reserved_once(self, vocab):
        for i, tok in enumerate(SPECIAL_TOKENS):
            assert vocab.tokens[i] == tok
            assert vocab.tokens.count(tok) == 1


class TestEncodePair:
    def test_minimal_layout(self):
        v = train_vocabulary(["a b"], 10)
        pair = encode_pair("a", "b", v, max_len=8)
        a_id, b_id = v.token_to_id["a"], v.token_to_id["b"]
        assert pair.ids == (v.cls_id, a_id, v.sep_id, b_id, v.sep_id, 0, 0, 0)
        assert pair.segments == (0, 0, 0, 1, 1, 0, 0, 0)
        assert pair.mask == (1, 1, 1, 1, 1, 0, 0, 0)

    def test_unknown_word_decomposes_without_unk(self, vocab):
        # word never seen, but all characters are in the training alphabet
        pair = encode_pair("pillar", "daily", vocab, max_len=32)
        assert vocab.unk_id not in pair.ids

    def test_out_of_alphabet_char_maps_to_unk(self, vocab):
        pieces = vocab.piece_tokenize("daily#zzz~q")
        assert pieces == [UNK]

    def test_max_len_too_small(self, vocab):
        with pytest.raises(ValueError):
            encode_pair("a", "b", vocab, max_len=4)

    def test_truncation_trims_longer_span_first(self, vocab):
        long_ctx = " ".join(["daily"] * 30)
        pair = encode_pair("aspirin", long_ctx, vocab, max_len=16)
        h, c = decode_pair(pair, vocab)
        assert h.replace(" ", "") == "aspirin"  # prescription survives intact
        assert len(pair.ids) == 16

    @given(text_strategy, text_strategy)
    @settings(max_examples=100, deadline=None)
    def test_structure_invariants(self, h, c):
        v = train_vocabulary(CORPUS + ["abcdefor"], 300)
        pair = encode_pair(h, c, v, max_len=64)
        real = [v.tokens[i] for i, m in zip(pair.ids, pair.mask) if m == 1]
        assert real[0] == CLS
        assert real.count(SEP) == 2
        assert pair.ids[0] == v.cls_id
        # mask marks exactly the non-pad prefix
        first_pad = pair.mask.index(0) if 0 in pair.mask else len(pair.mask)
        assert all(m == 1 for m in pair.mask[:first_pad])
        assert all(m == 0 for m in pair.mask[first_pad:])
        assert all(i == v.pad_id for i in pair.ids[first_pad:])

    @given(st.lists(st.sampled_from("lisinopril five milligrams oral daily aspirin".split()),
                    min_size=1, max_size=5).map(" ".join),
           st.lists(st.sampled_from("essential hypertension atrial fibrillation".split()),
                    min_size=1, max_size=4).map(" ".join))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_restores_words(self, h, c):
        v = train_vocabulary(CORPUS, 300)
        pair = encode_pair(h, c, v, max_len=64)
        assert decode_pair(pair, v) == (h, c)

    def test_greedy_longest_match(self, vocab):
        for word in ["lisinopril", "milligrams", "administration", "daily"]:
            pieces = vocab.piece_tokenize(word)
            pos = 0
            for piece in pieces:
                bare = piece[len(CONTINUATION):] if pos > 0 else piece
                # no longer in-vocabulary piece exists at this position
                for longer in range(len(bare) + 1, len(word) - pos + 1):
                    candidate = word[pos:pos + longer]
                    if pos > 0:
                        candidate = CONTINUATION + candidate
                    assert candidate not in vocab.token_to_id
                pos += len(bare)
            assert pos == len(word)


class TestVocabularyIO:
    def test_save_load_roundtrip(self, vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.tokens == vocab.tokens
        assert loaded.content_hash() == vocab.content_hash()

    def test_ids_are_line_numbers(self, vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#!")]
        assert lines == vocab.tokens
