"""Contextual prescription validity checking."""

from .corpus import (
    ClinicalRecord,
    CompatibilityTable,
    LabeledPair,
    extract_correlated_pairs,
    generate_synthetic_records,
    ingest_records,
    normalize_prescription,
)
from .pairgen import DatasetSplit, SamplerConfig, balance_and_split, diagnosis_distance, sample_negatives
from .subword import TokenizedPair, Vocabulary, encode_pair, train_vocabulary
from .encoder import ModelConfig, PairClassifier, domain_variant, load_checkpoint, save_checkpoint
from .training import TrainConfig, TrainReport, predict, train
from .channel import ConfusionLexicon, corrupt, extract_entities, relabel, word_error_rate
from .evalkit import MetricsRow, render_table, run_benchmark, score_metrics

__all__ = [
    "ClinicalRecord", "CompatibilityTable", "LabeledPair",
    "extract_correlated_pairs", "generate_synthetic_records", "ingest_records",
    "normalize_prescription",
    "DatasetSplit", "SamplerConfig", "balance_and_split", "diagnosis_distance", "sample_negatives",
    "TokenizedPair", "Vocabulary", "encode_pair", "train_vocabulary",
    "ModelConfig", "PairClassifier", "domain_variant", "load_checkpoint", "save_checkpoint",
    "TrainConfig", "TrainReport", "predict", "train",
    "ConfusionLexicon", "corrupt", "extract_entities", "relabel", "word_error_rate",
    "MetricsRow", "render_table", "run_benchmark", "score_metrics",
]
