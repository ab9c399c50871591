"""Command-line entry points for the full pipeline and the serving layer."""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import channel as channel_mod
from . import corpus as corpus_mod
from . import pairgen as pairgen_mod
from .encoder import ModelConfig, PairClassifier, domain_variant, load_checkpoint, save_checkpoint
from .subword import Vocabulary, train_vocabulary
from .training import TrainConfig, train as run_train


@click.group()
@click.option("--config", envvar="RXCHECK_CONFIG", type=click.Path(exists=True), default=None,
              help="JSON file of per-command option defaults.")
@click.pass_context
def main(ctx, config):
    """Prescription validity pipeline: data synthesis, training, evaluation, serving."""
    if config:
        with open(config, "r", encoding="utf-8") as f:
            ctx.default_map = json.load(f)


@main.command("gen-data")
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def gen_data(n, seed, out):
    """Generate synthetic clinical records against the default compatibility table."""
    records = corpus_mod.generate_synthetic_records(n, seed=seed)
    corpus_mod.write_records(records, out)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command("make-pairs")
@click.option("--records", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--target-negatives", type=int, default=2000, show_default=True)
@click.option("--distance-threshold", type=float, default=0.5, show_default=True)
@click.option("--polarity", type=click.Choice(["discard_if_similar", "discard_if_distant"]),
              default="discard_if_similar", show_default=True)
@click.option("--duplication-factor", type=int, default=1, show_default=True)
@click.option("--ratios", default="0.6,0.2,0.2", show_default=True)
@click.option("--split-order", type=click.Choice(["duplicate_then_split", "split_then_duplicate"]),
              default="duplicate_then_split", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def make_pairs(records, out_dir, target_negatives, distance_threshold, polarity,
               duplication_factor, ratios, split_order, seed):
    """Extract correlated pairs, sample negatives, balance, and split."""
    recs, warnings = corpus_mod.ingest_records(records)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    table = corpus_mod.CompatibilityTable.default()
    naturals, dropped = corpus_mod.extract_correlated_pairs(recs, drug_lexicon=table.drug_lexicon())
    cfg = pairgen_mod.SamplerConfig(
        target_negatives=target_negatives,
        distance_threshold=distance_threshold,
        discard_polarity=polarity,
        duplication_factor=duplication_factor,
        split_ratios=tuple(float(r) for r in ratios.split(",")),
        split_order=split_order,
        seed=seed,
    )
    sample = pairgen_mod.sample_negatives(naturals, cfg)
    if sample.shortfall:
        click.echo(f"warning: negative shortfall of {sample.shortfall}", err=True)
    split = pairgen_mod.balance_and_split(naturals + sample.pairs, cfg)
    pairgen_mod.save_split(split, out_dir)
    click.echo(
        f"{len(naturals)} naturals ({dropped} items dropped), {len(sample.pairs)} negatives; "
        f"splits {split.sizes} written to {out_dir}"
    )


@main.command("train-vocab")
@click.option("--split-dir", type=click.Path(exists=True), required=True)
@click.option("--size", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def train_vocab(split_dir, size, seed, out):
    """Learn a subword vocabulary from the training split's texts."""
    split = pairgen_mod.load_split(split_dir)
    texts = [p.prescription for p in split.train] + [p.context for p in split.train]
    vocab = train_vocabulary(texts, size, seed)
    vocab.save(out)
    click.echo(f"vocabulary of {len(vocab)} tokens written to {out}")


def _model_config(vocab, max_len, hidden_dim, num_layers, num_heads, ffn_dim,
                  lstm_hidden, dropout, variant, seed) -> ModelConfig:
    return ModelConfig(
        vocab_size=len(vocab), max_len=max_len, hidden_dim=hidden_dim,
        num_layers=num_layers, num_heads=num_heads, ffn_dim=ffn_dim,
        lstm_hidden=lstm_hidden, dropout=dropout, head_variant=variant, seed=seed,
    )


_model_options = [
    click.option("--max-len", type=int, default=64, show_default=True),
    click.option("--hidden-dim", type=int, default=64, show_default=True),
    click.option("--num-layers", type=int, default=2, show_default=True),
    click.option("--num-heads", type=int, default=4, show_default=True),
    click.option("--ffn-dim", type=int, default=128, show_default=True),
    click.option("--lstm-hidden", type=int, default=64, show_default=True),
    click.option("--dropout", type=float, default=0.1, show_default=True),
    click.option("--variant", type=click.Choice(["baseline_linear", "mlp", "clm", "clm_lstm"]),
                 default="clm", show_default=True),
]


def _with_model_options(fn):
    for opt in reversed(_model_options):
        fn = opt(fn)
    return fn


@main.command("pretrain")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True)
@click.option("--split-dir", type=click.Path(exists=True), required=True)
@click.option("--steps", type=int, default=300, show_default=True)
@click.option("--mask-rate", type=float, default=0.15, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_with_model_options
def pretrain(vocab_path, split_dir, steps, mask_rate, seed, out, **model_kw):
    """Masked-language-model pretraining on the split's texts (bio variants)."""
    vocab = Vocabulary.load(vocab_path)
    split = pairgen_mod.load_split(split_dir)
    texts = sorted({p.prescription for p in split.train} | {p.context for p in split.train})
    mcfg = _model_config(vocab, seed=seed, **{k.replace("-", "_"): v for k, v in model_kw.items()})
    model = PairClassifier(mcfg)
    model = domain_variant(model, texts, vocab, steps, mask_rate=mask_rate, seed=seed)
    save_checkpoint(model, out)
    click.echo(f"pretrained {steps} steps; checkpoint written to {out}")


@main.command("train")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True)
@click.option("--split-dir", type=click.Path(exists=True), required=True)
@click.option("--init", type=click.Path(exists=True), default=None,
              help="Start from this checkpoint (e.g. a pretrained bio variant).")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3, show_default=True)
@click.option("--max-epochs", type=int, default=30, show_default=True)
@click.option("--patience", type=int, default=3, show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--report", type=click.Path(), default=None)
@_with_model_options
def train_cmd(vocab_path, split_dir, init, batch_size, learning_rate, max_epochs,
              patience, threshold, seed, out, report, **model_kw):
    """Fine-tune a head variant on a dataset split."""
    vocab = Vocabulary.load(vocab_path)
    split = pairgen_mod.load_split(split_dir)
    tcfg = TrainConfig(batch_size=batch_size, learning_rate=learning_rate,
                       max_epochs=max_epochs, patience=patience,
                       threshold=threshold, seed=seed)
    if init:
        model_init = load_checkpoint(init)
        mcfg = model_init.cfg
    else:
        model_init = None
        mcfg = _model_config(vocab, seed=seed, **{k.replace("-", "_"): v for k, v in model_kw.items()})
    model, train_report = run_train(split, tcfg, mcfg, vocab, init=model_init)
    save_checkpoint(model, out)
    if report:
        train_report.save(report)
    click.echo(train_report.render())
    click.echo(f"checkpoint written to {out}")


@main.command("corrupt")
@click.option("--pairs", "pairs_path", type=click.Path(exists=True), required=True)
@click.option("--target-wer", type=float, default=0.2869, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def corrupt_cmd(pairs_path, target_wer, seed, out_dir):
    """Run the simulated transcription channel over a pairs file and relabel."""
    pairs = corpus_mod.read_pairs(pairs_path)
    lexicon = channel_mod.ConfusionLexicon.default()
    transcripts = [
        channel_mod.corrupt(p.prescription, lexicon, target_wer, seed=seed + i)
        for i, p in enumerate(pairs)
    ]
    table = corpus_mod.CompatibilityTable.default()
    relabeled, reports = channel_mod.relabel(pairs, transcripts, table.drug_lexicon())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_mod.write_pairs(relabeled, out / "speech_test.jsonl")
    channel_mod.save_reports(reports, out / "channel_reports.jsonl",
                             config={"target_wer": target_wer, "seed": seed})
    flips = sum(r.relabeled for r in reports)
    click.echo(f"{len(pairs)} pairs corrupted, {flips} labels flipped; outputs in {out_dir}")


@main.command("evaluate")
@click.option("--checkpoint", "checkpoints", type=click.Path(), multiple=True, required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True)
@click.option("--text-test", type=click.Path(exists=True), required=True)
@click.option("--speech-test", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--out-dir", type=click.Path(), default=None)
def evaluate(checkpoints, vocab_path, text_test, speech_test, threshold, out_dir):
    """Benchmark checkpoints over the text and speech channels."""
    from .evalkit import run_benchmark

    vocab = Vocabulary.load(vocab_path)
    text_pairs = corpus_mod.read_pairs(text_test)
    speech_pairs = corpus_mod.read_pairs(speech_test) if speech_test else []
    _, rendered = run_benchmark(list(checkpoints), vocab, text_pairs, speech_pairs,
                                threshold=threshold, out_dir=out_dir)
    click.echo(rendered)


@main.command("serve")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=0.5, show_default=True)
def serve(checkpoint, vocab_path, host, port, log_path, threshold):
    """Serve validity decisions over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint, vocab_path, log_path=log_path, threshold=threshold)
    uvicorn.run(app, host=host, port=port)


@main.command("validate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True)
@click.option("--diagnosis", required=True)
@click.option("--prescription", required=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
def validate_once(checkpoint, vocab_path, diagnosis, prescription, threshold):
    """One-shot validity decision without starting the server."""
    from .corpus import LabeledPair
    from .training import predict

    model = load_checkpoint(checkpoint)
    vocab = Vocabulary.load(vocab_path)
    pair = LabeledPair(
        pair_id="cli",
        prescription=corpus_mod.normalize_prescription(prescription),
        context=corpus_mod.normalize_prescription(diagnosis),
        label=1,
        origin="natural",
    )
    (score, decision), = predict([pair], model, vocab, threshold)
    click.echo(json.dumps({"score": score, "valid": bool(decision)}))


if __name__ == "__main__":
    main()
