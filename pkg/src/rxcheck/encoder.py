"""Transformer pair encoder with selectable classification heads and MLM pretraining.

The encoder follows the post-norm arrangement: each layer applies multi-head
self-attention, residual + layer norm, a position-wise feed-forward block, and
a second residual + layer norm. Head variants:

  baseline_linear  affine map on the CLS state
  mlp              CLS state through a one-hidden-layer perceptron
  clm              [CLS ; masked max-pool ; masked mean-pool] (3d) -> perceptron
  clm_lstm         Bi-LSTM over token states, pooled, concatenated with CLS

Pooling ignores PAD, CLS and SEP positions. Special token ids follow the
vocabulary convention PAD=0, UNK=1, CLS=2, SEP=3, MASK=4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from pathlib import Path

import torch
import torch.nn as nn

from .subword import TokenizedPair

PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = 0, 1, 2, 3, 4
_NUM_SPECIALS = 5

HEAD_VARIANTS = ("baseline_linear", "mlp", "clm", "clm_lstm")


class NumericalError(RuntimeError):
    """A non-finite activation was produced; the message names the layer."""


@dataclass
class ModelConfig:
    vocab_size: int
    max_len: int = 64
    hidden_dim: int = 64
    num_layers: int = 2
    num_heads: int = 4
    ffn_dim: int = 128
    lstm_hidden: int = 64
    dropout: float = 0.1
    head_variant: str = "clm"
    seed: int = 0

    def __post_init__(self):
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError("hidden_dim must be divisible by num_heads")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.head_variant not in HEAD_VARIANTS:
            raise ValueError(f"unknown head variant: {self.head_variant}")


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.hidden_dim
        self.num_heads = cfg.num_heads
        self.head_dim = d // cfg.num_heads
        self.qkv = nn.Linear(d, 3 * d)
        self.attn_out = nn.Linear(d, d)
        self.norm1 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(nn.Linear(d, cfg.ffn_dim), nn.GELU(), nn.Linear(cfg.ffn_dim, d))
        self.norm2 = nn.LayerNorm(d)
        self.drop = nn.Dropout(cfg.dropout)

    def attention(self, x: torch.Tensor, pad_mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        b, s, d = x.shape
        qkv = self.qkv(x).view(b, s, 3, self.num_heads, self.head_dim)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))  # (b, h, s, dh)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        neg = torch.finfo(x.dtype).max
        scores = scores.masked_fill(pad_mask[:, None, None, :] == 0, -neg)
        weights = torch.softmax(scores, dim=-1)
        ctx = (weights @ v).transpose(1, 2).reshape(b, s, d)
        return self.attn_out(ctx), weights

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        attn, _ = self.attention(x, pad_mask)
        x = self.norm1(x + self.drop(attn))
        x = self.norm2(x + self.drop(self.ffn(x)))
        return x


class PairClassifier(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        d = cfg.hidden_dim
        self.tok_emb = nn.Embedding(cfg.vocab_size, d)
        self.pos_emb = nn.Embedding(cfg.max_len, d)
        self.seg_emb = nn.Embedding(2, d)
        self.emb_norm = nn.LayerNorm(d)
        self.drop = nn.Dropout(cfg.dropout)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.num_layers))
        if cfg.head_variant == "baseline_linear":
            self.head = nn.Linear(d, 1)
        elif cfg.head_variant == "mlp":
            self.head = nn.Sequential(nn.Linear(d, d), nn.Tanh(), nn.Linear(d, 1))
        elif cfg.head_variant == "clm":
            self.head = nn.Sequential(nn.Linear(3 * d, d), nn.Tanh(), nn.Linear(d, 1))
        else:  # clm_lstm
            self.lstm = nn.LSTM(d, cfg.lstm_hidden, batch_first=True, bidirectional=True)
            self.head = nn.Sequential(
                nn.Linear(d + 4 * cfg.lstm_hidden, d), nn.Tanh(), nn.Linear(d, 1)
            )
        self.mlm_bias = nn.Parameter(torch.zeros(cfg.vocab_size))
        self.apply(self._init_param)
        self.metadata: dict = {"head_variant": cfg.head_variant, "domain_pretrained": False}

    @staticmethod
    def _init_param(module: nn.Module) -> None:
        # small-std init keeps early logits near zero, so the untrained MLM
        # predictor is close to uniform over the vocabulary
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, std=0.02)

    def head_input_dim(self) -> int:
        first = self.head if isinstance(self.head, nn.Linear) else self.head[0]
        return first.in_features

    def encode(self, ids: torch.Tensor, segments: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if ids.max().item() >= self.cfg.vocab_size:
            raise ValueError(f"token id {ids.max().item()} out of range for vocab {self.cfg.vocab_size}")
        b, s = ids.shape
        pos = torch.arange(s, device=ids.device).expand(b, s)
        x = self.tok_emb(ids) + self.pos_emb(pos) + self.seg_emb(segments)
        x = self.drop(self.emb_norm(x))
        if not torch.isfinite(x).all():
            raise NumericalError("non-finite activation in embedding")
        for i, layer in enumerate(self.layers):
            x = layer(x, mask)
            if not torch.isfinite(x).all():
                raise NumericalError(f"non-finite activation in encoder layer {i}")
        return x

    def pool_mask(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Positions eligible for max/mean pooling: real tokens excluding CLS/SEP."""
        pm = (mask == 1) & (ids != SEP_ID) & (ids != CLS_ID)
        # a fully-excluded row would poison the pools; guaranteed non-empty by
        # encode_pair (each span holds >= 1 token), but guard anyway
        empty = pm.sum(dim=1) == 0
        if empty.any():
            pm = pm.clone()
            pm[empty, 0] = True
        return pm

    def _pooled_features(self, states: torch.Tensor, pm: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        neg = torch.finfo(states.dtype).max
        masked = states.masked_fill(~pm[:, :, None], -neg)
        max_pool = masked.max(dim=1).values
        counts = pm.sum(dim=1, keepdim=True).clamp(min=1)
        mean_pool = (states * pm[:, :, None]).sum(dim=1) / counts
        return max_pool, mean_pool

    def forward(
        self,
        ids: torch.Tensor,
        segments: torch.Tensor,
        mask: torch.Tensor,
        mode: str = "infer",
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Score a batch; returns (probabilities, per-position hidden states)."""
        if mode not in ("train", "infer"):
            raise ValueError(f"unknown mode: {mode}")
        self.train(mode == "train")
        states = self.encode(ids, segments, mask)
        cls_state = states[:, 0]
        variant = self.cfg.head_variant
        if variant == "baseline_linear" or variant == "mlp":
            feats = cls_state
        elif variant == "clm":
            pm = self.pool_mask(ids, mask)
            max_pool, mean_pool = self._pooled_features(states, pm)
            feats = torch.cat([cls_state, max_pool, mean_pool], dim=-1)
        else:  # clm_lstm
            pm = self.pool_mask(ids, mask)
            # packed so padding never feeds the backward direction
            lengths = mask.sum(dim=1).cpu()
            packed = nn.utils.rnn.pack_padded_sequence(
                states, lengths, batch_first=True, enforce_sorted=False
            )
            lstm_packed, _ = self.lstm(packed)
            lstm_out, _ = nn.utils.rnn.pad_packed_sequence(
                lstm_packed, batch_first=True, total_length=states.shape[1]
            )
            max_pool, mean_pool = self._pooled_features(lstm_out, pm)
            feats = torch.cat([cls_state, max_pool, mean_pool], dim=-1)
        logit = self.head(feats).squeeze(-1)
        if not torch.isfinite(logit).all():
            raise NumericalError("non-finite activation in classification head")
        return torch.sigmoid(logit), states

    def mlm_logits(self, states: torch.Tensor) -> torch.Tensor:
        """Tied-embedding output projection over the vocabulary."""
        return states @ self.tok_emb.weight.t() + self.mlm_bias


def batch_tensors(
    batch: list[TokenizedPair], dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    ids = torch.tensor([p.ids for p in batch], dtype=torch.long)
    segments = torch.tensor([p.segments for p in batch], dtype=torch.long)
    mask = torch.tensor([p.mask for p in batch], dtype=torch.long)
    labels = torch.tensor([p.label for p in batch], dtype=dtype)
    return ids, segments, mask, labels


def mask_for_mlm(
    ids: torch.Tensor,
    mask: torch.Tensor,
    mask_rate: float,
    generator: torch.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Replace mask_rate of the real non-special positions with MASK.

    Returns (masked input ids, boolean selection of masked positions).
    """
    if not 0.0 < mask_rate < 1.0:
        raise ValueError("mask_rate must lie in (0, 1)")
    maskable = (mask == 1) & (ids >= _NUM_SPECIALS)
    draw = torch.rand(ids.shape, generator=generator) < mask_rate
    selected = maskable & draw
    masked_ids = torch.where(selected, torch.full_like(ids, MASK_ID), ids)
    return masked_ids, selected


def mlm_pretrain_step(
    model: PairClassifier,
    batch: list[TokenizedPair],
    optimizer: torch.optim.Optimizer,
    mask_rate: float = 0.15,
    generator: torch.Generator | None = None,
) -> float:
    """One masked-language-model step; returns the loss. A batch with no
    maskable position contributes loss 0 and leaves the state untouched.
    """
    if generator is None:
        generator = torch.Generator().manual_seed(0)
    ids, segments, mask, _ = batch_tensors(batch)
    masked_ids, selected = mask_for_mlm(ids, mask, mask_rate, generator)
    if not selected.any():
        return 0.0
    model.train(True)
    states = model.encode(masked_ids, segments, mask)
    logits = model.mlm_logits(states)[selected]
    targets = ids[selected]
    loss = nn.functional.cross_entropy(logits, targets)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return float(loss.item())


def mlm_eval_loss(
    model: PairClassifier,
    batch: list[TokenizedPair],
    mask_rate: float = 0.15,
    seed: int = 0,
) -> float:
    """Held-out MLM loss with a fixed masking draw (no parameter update)."""
    generator = torch.Generator().manual_seed(seed)
    ids, segments, mask, _ = batch_tensors(batch)
    masked_ids, selected = mask_for_mlm(ids, mask, mask_rate, generator)
    if not selected.any():
        return 0.0
    model.train(False)
    with torch.no_grad():
        states = model.encode(masked_ids, segments, mask)
        logits = model.mlm_logits(states)[selected]
        loss = nn.functional.cross_entropy(logits, ids[selected])
    return float(loss.item())


def domain_variant(
    model: PairClassifier,
    domain_corpus: list[str],
    vocab,
    steps: int,
    batch_size: int = 16,
    mask_rate: float = 0.15,
    lr: float = 1e-3,
    seed: int = 0,
) -> PairClassifier:
    """Continue MLM pretraining on in-domain text; the returned model carries a
    domain-pretrained tag so downstream reports can label it as the bio variant.
    Identity when steps == 0.
    """
    from .subword import encode_pair

    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        return model
    if not domain_corpus:
        raise ValueError("domain corpus is empty")
    torch.manual_seed(seed)
    rng_gen = torch.Generator().manual_seed(seed)
    import random as _random

    rng = _random.Random(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    for _ in range(steps):
        batch = []
        for _ in range(batch_size):
            a = rng.choice(domain_corpus)
            b = rng.choice(domain_corpus)
            batch.append(encode_pair(a, b, vocab, model.cfg.max_len))
        mlm_pretrain_step(model, batch, optimizer, mask_rate, rng_gen)
    model.metadata = dict(model.metadata)
    model.metadata["domain_pretrained"] = True
    model.metadata["pretrain_steps"] = model.metadata.get("pretrain_steps", 0) + steps
    return model


def variant_display_name(metadata: dict) -> str:
    """Report label for a checkpoint: baseline, mlp, clm, clm_lstm, clm_bio, clm_biolstm."""
    base = metadata.get("head_variant", "clm")
    bio = metadata.get("domain_pretrained", False)
    names = {
        ("baseline_linear", False): "baseline",
        ("baseline_linear", True): "baseline_bio",
        ("mlp", False): "mlp",
        ("mlp", True): "mlp_bio",
        ("clm", False): "clm",
        ("clm", True): "clm_bio",
        ("clm_lstm", False): "clm_lstm",
        ("clm_lstm", True): "clm_biolstm",
    }
    return names[(base, bio)]


def save_checkpoint(model: PairClassifier, path: str | Path, metadata: dict | None = None) -> None:
    payload = {
        "config": asdict(model.cfg),
        "metadata": {**model.metadata, **(metadata or {})},
        "params": model.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> PairClassifier:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    cfg = ModelConfig(**payload["config"])
    model = PairClassifier(cfg)
    model.load_state_dict(payload["params"], strict=True)
    model.metadata = dict(payload["metadata"])
    return model
