#!/usr/bin/env python3
"""Run the full pipeline end to end at a small scale.

Produces records, a balanced split, a vocabulary, a trained checkpoint, a
corrupted speech test set, and the benchmark tables under --out-dir.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def sh(*args: str) -> None:
    print("+", " ".join(args), flush=True)
    subprocess.run([sys.executable, "-m", "rxcheck.cli", *args], check=True)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("pipeline_out"))
    ap.add_argument("--records", type=int, default=700)
    ap.add_argument("--negatives", type=int, default=1000)
    ap.add_argument("--vocab-size", type=int, default=600)
    ap.add_argument("--max-epochs", type=int, default=15)
    ap.add_argument("--target-wer", type=float, default=0.2869)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    seed = str(args.seed)

    sh("gen-data", "--n", str(args.records), "--seed", seed,
       "--out", str(out / "records.jsonl"))
    sh("make-pairs", "--records", str(out / "records.jsonl"),
       "--out-dir", str(out / "split"),
       "--target-negatives", str(args.negatives), "--seed", seed)
    sh("train-vocab", "--split-dir", str(out / "split"),
       "--size", str(args.vocab_size), "--out", str(out / "vocab.txt"))
    sh("train", "--vocab", str(out / "vocab.txt"), "--split-dir", str(out / "split"),
       "--max-len", "48", "--max-epochs", str(args.max_epochs),
       "--patience", str(args.max_epochs), "--seed", seed,
       "--out", str(out / "clm.pt"), "--report", str(out / "report.json"))
    sh("corrupt", "--pairs", str(out / "split" / "test.jsonl"),
       "--target-wer", str(args.target_wer), "--seed", seed,
       "--out-dir", str(out / "speech"))
    sh("evaluate", "--checkpoint", str(out / "clm.pt"),
       "--vocab", str(out / "vocab.txt"),
       "--text-test", str(out / "split" / "test.jsonl"),
       "--speech-test", str(out / "speech" / "speech_test.jsonl"),
       "--out-dir", str(out / "bench"))
    print(f"\nartifacts in {out}/")


if __name__ == "__main__":
    main()
