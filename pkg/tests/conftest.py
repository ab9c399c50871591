import pytest
import torch

from rxcheck.corpus import CompatibilityTable, extract_correlated_pairs, generate_synthetic_records
from rxcheck.encoder import ModelConfig
from rxcheck.pairgen import SamplerConfig, balance_and_split, sample_negatives
from rxcheck.subword import train_vocabulary
from rxcheck.training import TrainConfig, train

torch.set_num_threads(2)


@pytest.fixture(scope="session")
def table():
    return CompatibilityTable.default()


@pytest.fixture(scope="session")
def tiny_dataset(table):
    """Small synthetic split shared across model-level tests."""
    records = generate_synthetic_records(300, table, seed=11)
    naturals, _ = extract_correlated_pairs(records, drug_lexicon=table.drug_lexicon())
    naturals = naturals[:500]
    cfg = SamplerConfig(target_negatives=500, duplication_factor=1, seed=12)
    negatives = sample_negatives(naturals, cfg)
    split = balance_and_split(naturals + negatives.pairs, cfg)
    texts = [p.prescription for p in split.train] + [p.context for p in split.train]
    vocab = train_vocabulary(texts, 500)
    return split, vocab


@pytest.fixture(scope="session")
def tiny_trained(tiny_dataset):
    """A quickly trained clm checkpoint over the tiny dataset."""
    split, vocab = tiny_dataset
    mcfg = ModelConfig(vocab_size=len(vocab), max_len=48, head_variant="clm", seed=5)
    tcfg = TrainConfig(max_epochs=25, patience=25, seed=5)
    model, report = train(split, tcfg, mcfg, vocab)
    return model, report, split, vocab
