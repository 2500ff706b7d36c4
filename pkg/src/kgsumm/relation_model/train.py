"""Losses, back-translation, training loop and checkpoints."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

import torch
from torch.nn import functional as F

from .data import LANGS, TextPair, Vocab, build_vocabs, other_lang
from .model import ModelConfig, RelationModel, ensure_nonempty

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.001
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 10
    lambda_trans: float = 1.0
    lambda_clas: float = 1.0
    seed: int = 0
    max_decode_len: int = 64
    min_count: int = 2

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.lambda_trans < 0 or self.lambda_clas < 0 or self.lambda_trans + self.lambda_clas == 0:
            raise ValueError("loss weights must be non-negative and not both zero")


def sequence_nll(log_probs: torch.Tensor, targets) -> torch.Tensor:
    """Sum of token-level cross-entropies. ``log_probs`` is (L, V), ``targets`` length L."""
    targets = torch.as_tensor(targets, dtype=torch.long)
    return -log_probs.gather(-1, targets.unsqueeze(-1)).sum()


# -- back-translation ------------------------------------------------------


@dataclass
class Reconstruction:
    """Discrete sequences produced by greedy decoding for one pair.

    ``mid`` holds the two spans rendered in the other language, ``back`` the
    rendering of ``mid`` returned to the pair's own language.
    """

    mid: tuple
    back: tuple


def _ids(model: RelationModel, pair: TextPair) -> tuple:
    v = model.vocabs[pair.lang]
    return v.encode(pair.span1), v.encode(pair.span2)


@torch.no_grad()
def back_translate(batch: list, model: RelationModel, max_len: int = 64) -> list:
    out: list = [None] * len(batch)
    for lang in LANGS:
        idx = [i for i, p in enumerate(batch) if p.lang == lang]
        if not idx:
            continue
        src = []
        for i in idx:
            src.extend(_ids(model, batch[i]))
        limit = [min(max_len, len(s) + 2) for s in src]
        cap = max(limit)
        mid = model.decode_greedy(model.encode_ids(src, lang), other_lang(lang), cap)
        mid = ensure_nonempty([m[:l] for m, l in zip(mid, limit)])
        back = model.decode_greedy(model.encode_ids(mid, other_lang(lang)), lang, cap)
        back = ensure_nonempty([b[:l] for b, l in zip(back, limit)])
        for k, i in enumerate(idx):
            out[i] = Reconstruction(tuple(mid[2 * k : 2 * k + 2]), tuple(back[2 * k : 2 * k + 2]))
    return out


def _decode_nll(model: RelationModel, sources: list, src_lang: str, targets: list, tgt_lang: str) -> torch.Tensor:
    """Per-sequence summed cross-entropy of ``targets`` given encoded ``sources``: shape (B,)."""
    enc = model.encode_ids(sources, src_lang)
    log_probs, gold = model.teacher_forced_log_probs(enc, targets, tgt_lang)
    nll = -log_probs.gather(-1, gold.unsqueeze(-1)).squeeze(-1)
    lengths = torch.tensor([len(t) + 1 for t in targets])
    mask = torch.arange(gold.shape[1]).unsqueeze(0) < lengths.unsqueeze(1)
    return (nll * mask).sum(dim=1)


def translation_loss(batch: list, reconstructions: list, model: RelationModel) -> torch.Tensor:
    """Round-trip reconstruction loss summed over the batch.

    For a pair in language L1 with spans T, ``mid`` = L2 rendering of T and
    ``back`` = L1 rendering of ``mid``. The two terms are the cross-entropy of
    T decoded from ``mid`` and of ``mid`` decoded from ``back``.
    """
    total = torch.zeros((), dtype=next(model.parameters()).dtype)
    for lang in LANGS:
        idx = [i for i, p in enumerate(batch) if p.lang == lang]
        if not idx:
            continue
        orig, mid, back = [], [], []
        for i in idx:
            orig.extend(_ids(model, batch[i]))
            mid.extend(reconstructions[i].mid)
            back.extend(reconstructions[i].back)
        total = total + _decode_nll(model, mid, other_lang(lang), orig, lang).sum()
        total = total + _decode_nll(model, back, lang, mid, other_lang(lang)).sum()
    return total


def _pair_feats(model: RelationModel, pairs: list, lang: str) -> torch.Tensor:
    v = model.vocabs[lang]
    return model.pair_features(
        [v.encode(p.span1) for p in pairs],
        [v.encode(p.span2) for p in pairs],
        [v.encode(p.dkb1) for p in pairs],
        [v.encode(p.dkb2) for p in pairs],
        lang,
    )


def classification_loss(batch: list, model: RelationModel) -> torch.Tensor:
    """Merge cross-entropy for every labelled pair plus relation cross-entropy for merged ones."""
    total = torch.zeros((), dtype=next(model.parameters()).dtype)
    for lang in LANGS:
        pairs = [p for p in batch if p.lang == lang and p.label is not None]
        if not pairs:
            continue
        feats = _pair_feats(model, pairs, lang)
        merge = torch.tensor([float(p.label.merge) for p in pairs], dtype=feats.dtype)
        total = total + F.binary_cross_entropy_with_logits(model.span_logit(feats), merge, reduction="sum")
        rel_rows = [k for k, p in enumerate(pairs) if p.label.class_index is not None]
        if rel_rows:
            logits = model.relation_logits(feats[rel_rows])
            gold = torch.tensor([pairs[k].label.class_index for k in rel_rows])
            total = total + F.cross_entropy(logits, gold, reduction="sum")
    return total


def total_loss(
    batch: list,
    model: RelationModel,
    lambda_trans: float = 1.0,
    lambda_clas: float = 1.0,
    reconstructions: Optional[list] = None,
) -> torch.Tensor:
    """Weighted sum of translation and classification losses, averaged per pair.

    ``reconstructions`` fixes the back-translated sequences; when omitted they
    are produced by greedy decoding with the current parameters.
    """
    if not batch:
        raise ValueError("empty batch")
    dtype = next(model.parameters()).dtype
    loss = torch.zeros((), dtype=dtype)
    if lambda_trans:
        if reconstructions is None:
            reconstructions = back_translate(batch, model, model.config.max_decode_len)
        loss = loss + lambda_trans * translation_loss(batch, reconstructions, model)
    if lambda_clas:
        loss = loss + lambda_clas * classification_loss(batch, model)
    return loss / len(batch)


# -- training ----------------------------------------------------------------


@dataclass
class TrainResult:
    model: RelationModel
    history: list = field(default_factory=list)  # mean batch loss per epoch
    initial_loss: float = math.nan
    final_loss: float = math.nan


def dataset_loss(model: RelationModel, pairs: list, cfg: TrainConfig) -> float:
    with torch.no_grad():
        total = 0.0
        for start in range(0, len(pairs), cfg.batch_size):
            batch = pairs[start : start + cfg.batch_size]
            total += float(total_loss(batch, model, cfg.lambda_trans, cfg.lambda_clas)) * len(batch)
    return total / len(pairs)


def train(
    pairs: list,
    config: Optional[TrainConfig] = None,
    model_config: Optional[ModelConfig] = None,
    vocabs: Optional[dict] = None,
) -> TrainResult:
    cfg = config or TrainConfig()
    if not pairs:
        raise TrainingError("empty training set")
    torch.manual_seed(cfg.seed)
    mcfg = model_config or ModelConfig()
    mcfg.max_decode_len = cfg.max_decode_len
    vocabs = vocabs or build_vocabs(pairs, cfg.min_count)
    model = RelationModel(vocabs, mcfg, seed=cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=tuple(cfg.betas), eps=cfg.eps)
    rng = random.Random(cfg.seed)
    result = TrainResult(model)
    result.initial_loss = dataset_loss(model, pairs, cfg)
    order = list(range(len(pairs)))
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            opt.zero_grad()
            loss = total_loss(batch, model, cfg.lambda_trans, cfg.lambda_clas)
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss {float(loss)} at epoch {epoch}, batch starting at {start}")
            loss.backward()
            opt.step()
            losses.append(loss.item())
        result.history.append(sum(losses) / len(losses))
        logger.info("epoch %d loss %.4f", epoch + 1, result.history[-1])
    result.final_loss = dataset_loss(model, pairs, cfg)
    return result


# -- checkpoints ---------------------------------------------------------------


def save_checkpoint(model: RelationModel, path, train_config: Optional[TrainConfig] = None) -> None:
    data = {
        "model_config": model.config.to_dict(),
        "train_config": asdict(train_config) if train_config else None,
        "vocabs": {lang: model.vocabs[lang].itos for lang in LANGS},
        "params": {name: t.detach().tolist() for name, t in sorted(model.state_dict().items())},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False)


def load_checkpoint(path) -> RelationModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    vocabs = {lang: Vocab(itos[4:]) for lang, itos in data["vocabs"].items()}
    model = RelationModel(vocabs, ModelConfig(**data["model_config"]))
    dtype = next(model.parameters()).dtype
    model.load_state_dict({k: torch.tensor(v, dtype=dtype) for k, v in data["params"].items()})
    return model
