"""Rhetorical relation identification and tree construction."""

from .data import N_CLASSES, PairLabel, TextPair, Vocab, build_vocabs, class_index, class_label, load_pairs, save_pairs
from .infer import HeuristicScorer, ModelScorer, heuristic_score, infer_tree, resolve_label
from .model import ModelConfig, RelationModel
from .train import (
    TrainConfig,
    back_translate,
    classification_loss,
    load_checkpoint,
    save_checkpoint,
    sequence_nll,
    total_loss,
    train,
    translation_loss,
)
