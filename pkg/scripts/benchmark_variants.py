#!/usr/bin/env python3
"""Train every head variant (plus the domain-pretrained ones) on one synthetic
split and print the text/speech comparison tables.
"""

import argparse
import time
from pathlib import Path

import torch

from rxcheck.channel import ConfusionLexicon, corrupt, relabel
from rxcheck.corpus import (
    CompatibilityTable,
    extract_correlated_pairs,
    generate_synthetic_records,
)
from rxcheck.encoder import (
    ModelConfig,
    PairClassifier,
    domain_variant,
    save_checkpoint,
)
from rxcheck.evalkit import run_benchmark
from rxcheck.pairgen import SamplerConfig, balance_and_split, sample_negatives
from rxcheck.subword import train_vocabulary
from rxcheck.training import TrainConfig, train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("benchmark_out"))
    ap.add_argument("--records", type=int, default=700)
    ap.add_argument("--max-epochs", type=int, default=15)
    ap.add_argument("--pretrain-steps", type=int, default=300)
    ap.add_argument("--target-wer", type=float, default=0.12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    torch.set_num_threads(2)
    t0 = time.monotonic()
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    table = CompatibilityTable.default()
    records = generate_synthetic_records(args.records, table, seed=args.seed)
    naturals, _ = extract_correlated_pairs(records, drug_lexicon=table.drug_lexicon())
    naturals = naturals[:800]
    cfg = SamplerConfig(target_negatives=800, duplication_factor=1, seed=args.seed)
    negatives = sample_negatives(naturals, cfg)
    split = balance_and_split(naturals + negatives.pairs, cfg)

    lex = ConfusionLexicon.default()
    train_texts = sorted({p.prescription for p in split.train}
                         | {p.context for p in split.train})
    corrupted = [corrupt(t, lex, args.target_wer, seed=900 + i)
                 for i, t in enumerate(train_texts * 2)]
    vocab = train_vocabulary(train_texts + corrupted, 600)
    vocab.save(out / "vocab.txt")

    transcripts = [corrupt(p.prescription, lex, args.target_wer, seed=5000 + i)
                   for i, p in enumerate(split.test)]
    speech_test, _ = relabel(split.test, transcripts, table.drug_lexicon())

    tcfg = TrainConfig(max_epochs=args.max_epochs, patience=args.max_epochs,
                       seed=args.seed)
    checkpoints = []
    for variant in ("baseline_linear", "mlp", "clm", "clm_lstm"):
        mcfg = ModelConfig(vocab_size=len(vocab), max_len=48,
                           head_variant=variant, seed=args.seed)
        model, _ = train(split, tcfg, mcfg, vocab)
        path = out / f"{variant}.pt"
        save_checkpoint(model, path)
        checkpoints.append(path)
        print(f"trained {variant}  {time.monotonic() - t0:.0f}s", flush=True)

    for variant in ("clm", "clm_lstm"):
        mcfg = ModelConfig(vocab_size=len(vocab), max_len=48,
                           head_variant=variant, seed=args.seed)
        init = PairClassifier(mcfg)
        init = domain_variant(init, train_texts + corrupted, vocab,
                              steps=args.pretrain_steps, lr=3e-4, seed=args.seed)
        model, _ = train(split, tcfg, mcfg, vocab, init=init)
        path = out / f"{variant}_bio.pt"
        save_checkpoint(model, path)
        checkpoints.append(path)
        print(f"trained {variant} (pretrained)  {time.monotonic() - t0:.0f}s", flush=True)

    _, rendered = run_benchmark(checkpoints, vocab, split.test, speech_test,
                                out_dir=out)
    print()
    print(rendered)
    print(f"\ntotal {time.monotonic() - t0:.0f}s; artifacts in {out}/")


if __name__ == "__main__":
    main()
