"""Subword vocabulary learning and pair encoding.

The vocabulary is learned by frequency-greedy pair merging over whitespace
pretokenized words; word-internal pieces carry the "##" continuation marker.
Encoding uses greedy longest-match segmentation, so any text over the training
alphabet encodes without failure.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK)
CONTINUATION = "##"


@dataclass
class Vocabulary:
    tokens: list[str]
    token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        for sp in SPECIAL_TOKENS:
            if sp not in self.token_to_id:
                raise ValueError(f"missing special token {sp}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset(self.token_to_id[t] for t in SPECIAL_TOKENS)

    def content_hash(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

    def piece_tokenize(self, word: str) -> list[str]:
        """Greedy longest-match split of one word into vocabulary pieces."""
        if not word:
            return []
        pieces: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                piece = word[start:end]
                if start > 0:
                    piece = CONTINUATION + piece
                if piece in self.token_to_id:
                    match = piece
                    break
                end -= 1
            if match is None:
                # character outside the training alphabet
                return [UNK]
            pieces.append(match)
            start = end
        return pieces

    def tokenize(self, text: str) -> list[str]:
        out: list[str] = []
        for word in text.split():
            out.extend(self.piece_tokenize(word))
        return out

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"#! specials {' '.join(SPECIAL_TOKENS)}\n")
            for tok in self.tokens:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.startswith("#!"):
                    continue
                tokens.append(line.rstrip("\n"))
        return cls(tokens)


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple([word[0]] + [CONTINUATION + ch for ch in word[1:]])


def train_vocabulary(corpus: list[str], size: int, seed: int = 0) -> Vocabulary:
    """Learn a subword vocabulary by merging the most frequent adjacent piece
    pair until the size budget is reached. Deterministic; ties break on the
    lexicographically smallest pair.
    """
    word_freq = Counter(w for text in corpus for w in text.split())
    if not word_freq:
        raise ValueError("cannot train a vocabulary on an empty corpus")
    words = {w: list(_word_symbols(w)) for w in word_freq}
    # both forms of every character, so any word over the training alphabet
    # encodes regardless of where the character appears
    chars = {ch for w in word_freq for ch in w}
    alphabet = sorted(chars | {CONTINUATION + ch for ch in chars})
    base = len(SPECIAL_TOKENS) + len(alphabet)
    if size < base:
        raise ValueError(f"size {size} below alphabet + specials ({base})")
    tokens = list(SPECIAL_TOKENS) + alphabet
    while len(tokens) < size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for w, syms in words.items():
            f = word_freq[w]
            for a, b in zip(syms, syms[1:]):
                pair_freq[(a, b)] += f
        if not pair_freq:
            break
        top = max(pair_freq.values())
        a, b = min(p for p, f in pair_freq.items() if f == top)
        merged = a + b[len(CONTINUATION):]
        if merged in tokens:
            # already present (possible with repeated structure); drop the pair
            # by rewriting occurrences anyway without growing the vocabulary
            pass
        else:
            tokens.append(merged)
        for w, syms in words.items():
            i = 0
            while i < len(syms) - 1:
                if syms[i] == a and syms[i + 1] == b:
                    syms[i:i + 2] = [merged]
                else:
                    i += 1
    return Vocabulary(tokens)


@dataclass(frozen=True)
class TokenizedPair:
    ids: tuple[int, ...]
    segments: tuple[int, ...]
    mask: tuple[int, ...]
    label: int = 0

    def __post_init__(self):
        if not (len(self.ids) == len(self.segments) == len(self.mask)):
            raise ValueError("ids, segments and mask must share one length")


def encode_pair(
    prescription: str,
    context: str,
    vocab: Vocabulary,
    max_len: int = 64,
    label: int = 0,
) -> TokenizedPair:
    """Lay out [CLS] prescription [SEP] context [SEP] with padding to max_len.

    Segments are 0 over the first span (including CLS and its SEP) and 1 over
    the second; truncation removes tokens from the longer span first.
    """
    if max_len < 5:
        raise ValueError("max_len must be >= 5 to hold CLS + token + SEP + token + SEP")
    h = vocab.tokenize(prescription)
    c = vocab.tokenize(context)
    budget = max_len - 3
    while len(h) + len(c) > budget:
        if len(c) >= len(h) and len(c) > 1:
            c.pop()
        elif len(h) > 1:
            h.pop()
        else:
            c.pop()
    tokens = [CLS] + h + [SEP] + c + [SEP]
    ids = [vocab.token_to_id[t] for t in tokens]
    segments = [0] * (len(h) + 2) + [1] * (len(c) + 1)
    mask = [1] * len(ids)
    pad = max_len - len(ids)
    ids += [vocab.pad_id] * pad
    segments += [0] * pad
    mask += [0] * pad
    return TokenizedPair(tuple(ids), tuple(segments), tuple(mask), label)


def decode_pair(pair: TokenizedPair, vocab: Vocabulary) -> tuple[str, str]:
    """Inverse of encode_pair up to truncation: recover the two word sequences."""
    spans: list[list[str]] = [[], []]
    span = 0
    for i, tid in enumerate(pair.ids):
        if pair.mask[i] == 0:
            break
        tok = vocab.tokens[tid]
        if tok == CLS:
            continue
        if tok == SEP:
            span += 1
            continue
        spans[span].append(tok)

    def join(pieces: list[str]) -> str:
        words: list[str] = []
        for p in pieces:
            if p.startswith(CONTINUATION) and words:
                words[-1] += p[len(CONTINUATION):]
            else:
                words.append(p)
        return " ".join(words)

    return join(spans[0]), join(spans[1])
