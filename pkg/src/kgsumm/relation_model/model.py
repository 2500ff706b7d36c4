"""Attentional encoder-decoder with span and relation classifiers.

Two bidirectional GRU encoders (text and keyword sequences), one GRU decoder
with additive attention shared across languages (only the embedding and
output tables differ per language), a logistic merge classifier and a
54-way relation x nuclearity classifier over the concatenated final encoder
states of both spans and both keyword sequences.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
from torch import nn
from torch.nn import functional as F
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .data import BOS_ID, EOS_ID, LANGS, N_CLASSES, PAD_ID, UNK_ID


@dataclass
class ModelConfig:
    emb_dim: int = 100
    hidden: int = 300
    attn_dim: int = 0  # 0 means same as hidden
    max_decode_len: int = 64
    dtype: str = "float32"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Encoding:
    states: torch.Tensor  # (B, T, 2H), zero beyond each length
    mask: torch.Tensor  # (B, T) bool
    final: torch.Tensor  # (B, 2H)


def pad_batch(seqs: list, device=None) -> tuple:
    lengths = torch.tensor([len(s) for s in seqs], dtype=torch.long)
    out = torch.full((len(seqs), int(lengths.max())), PAD_ID, dtype=torch.long, device=device)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.tensor(s, dtype=torch.long)
    return out, lengths


class RelationModel(nn.Module):
    def __init__(self, vocabs: dict, config: ModelConfig | None = None, seed: int = 0):
        super().__init__()
        cfg = config or ModelConfig()
        self.config = cfg
        self.vocabs = vocabs
        E, H = cfg.emb_dim, cfg.hidden
        A = cfg.attn_dim or H
        self.embed = nn.ModuleDict({lang: nn.Embedding(len(vocabs[lang]), E, padding_idx=PAD_ID) for lang in LANGS})
        self.out = nn.ModuleDict({lang: nn.Linear(H + 2 * H, len(vocabs[lang])) for lang in LANGS})
        self.encoder = nn.GRU(E, H, batch_first=True, bidirectional=True)
        self.dkb_encoder = nn.GRU(E, H, batch_first=True, bidirectional=True)
        self.dec_init = nn.Linear(2 * H, H)
        self.decoder = nn.GRUCell(E + 2 * H, H)
        self.attn_query = nn.Linear(H, A, bias=False)
        self.attn_key = nn.Linear(2 * H, A)
        self.attn_v = nn.Linear(A, 1, bias=False)
        self.span_clf = nn.Linear(8 * H, 1)
        self.rel_clf = nn.Linear(8 * H, N_CLASSES)
        self.to(getattr(torch, cfg.dtype))
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int) -> None:
        """Uniform in +-1/sqrt(fan_in), drawn from a generator seeded with ``seed``."""
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for _, p in sorted(self.named_parameters()):
                fan_in = p.shape[1] if p.dim() > 1 else p.shape[0]
                bound = 1.0 / math.sqrt(fan_in)
                p.copy_(torch.rand(p.shape, generator=gen, dtype=p.dtype) * 2 * bound - bound)
            for emb in self.embed.values():
                emb.weight[PAD_ID].zero_()

    # -- encoders --------------------------------------------------------

    def _run_encoder(self, rnn: nn.GRU, ids: list, lang: str) -> Encoding:
        if any(len(s) == 0 for s in ids):
            raise ValueError("cannot encode an empty sequence")
        padded, lengths = pad_batch(ids)
        x = self.embed[lang](padded)
        packed = pack_padded_sequence(x, lengths, batch_first=True, enforce_sorted=False)
        out, h_n = rnn(packed)
        states, _ = pad_packed_sequence(out, batch_first=True, total_length=padded.shape[1])
        final = torch.cat([h_n[0], h_n[1]], dim=-1)
        return Encoding(states, _length_mask(ids), final)

    def encode_ids(self, ids: list, lang: str) -> Encoding:
        return self._run_encoder(self.encoder, ids, lang)

    def encode_dkb_ids(self, ids: list, lang: str) -> Encoding:
        ids = [s if s else [PAD_ID] for s in ids]
        return self._run_encoder(self.dkb_encoder, ids, lang)

    def encode(self, tokens: list, lang: str) -> Encoding:
        """Encode one token sequence; OOV tokens map to UNK."""
        return self.encode_ids([self.vocabs[lang].encode(tokens)], lang)

    def encode_dkb(self, keywords: list, lang: str) -> Encoding:
        return self.encode_dkb_ids([self.vocabs[lang].encode(keywords)], lang)

    # -- attention and decoding -------------------------------------------

    def attend(self, query: torch.Tensor, states: torch.Tensor, mask: torch.Tensor | None = None) -> tuple:
        """Additive attention. ``query`` (B, H), ``states`` (B, T, 2H) -> context (B, 2H), weights (B, T)."""
        scores = self.attn_v(torch.tanh(self.attn_query(query).unsqueeze(1) + self.attn_key(states))).squeeze(-1)
        if mask is not None:
            scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        context = torch.bmm(weights.unsqueeze(1), states).squeeze(1)
        return context, weights

    def init_state(self, enc: Encoding) -> torch.Tensor:
        return torch.tanh(self.dec_init(enc.final))

    def step(self, prev_ids: torch.Tensor, state: torch.Tensor, enc: Encoding, lang: str) -> tuple:
        context, _ = self.attend(state, enc.states, enc.mask)
        state = self.decoder(torch.cat([self.embed[lang](prev_ids), context], dim=-1), state)
        logits = self.out[lang](torch.cat([state, context], dim=-1))
        return logits, state

    def teacher_forced_log_probs(self, enc: Encoding, targets: list, lang: str) -> tuple:
        """Log-probabilities for ``targets`` (each followed by EOS). Returns (B, L, V) and gold ids (B, L)."""
        gold, _ = pad_batch([list(t) + [EOS_ID] for t in targets])
        prev = torch.cat([torch.full((gold.shape[0], 1), BOS_ID, dtype=torch.long), gold[:, :-1]], dim=1)
        state = self.init_state(enc)
        steps = []
        for t in range(gold.shape[1]):
            logits, state = self.step(prev[:, t], state, enc, lang)
            steps.append(F.log_softmax(logits, dim=-1))
        return torch.stack(steps, dim=1), gold

    @torch.no_grad()
    def decode_greedy(self, enc: Encoding, lang: str, max_len: int) -> list:
        if max_len < 1:
            raise ValueError("max_len must be at least 1")
        batch = enc.final.shape[0]
        state = self.init_state(enc)
        prev = torch.full((batch,), BOS_ID, dtype=torch.long)
        out = [[] for _ in range(batch)]
        done = [False] * batch
        for _ in range(max_len):
            logits, state = self.step(prev, state, enc, lang)
            logits[:, PAD_ID] = float("-inf")
            logits[:, BOS_ID] = float("-inf")
            prev = logits.argmax(dim=-1)
            for i, tok in enumerate(prev.tolist()):
                if done[i]:
                    continue
                if tok == EOS_ID:
                    done[i] = True
                else:
                    out[i].append(tok)
            if all(done):
                break
        return out

    # -- classifiers ------------------------------------------------------

    def pair_features(self, span1: list, span2: list, dkb1: list, dkb2: list, lang: str) -> torch.Tensor:
        """Concatenated final states for a batch of id-encoded pairs: (B, 8H)."""
        spans = self.encode_ids(span1 + span2, lang).final
        keys = self.encode_dkb_ids(dkb1 + dkb2, lang).final
        n = len(span1)
        return torch.cat([spans[:n], spans[n:], keys[:n], keys[n:]], dim=-1)

    def span_logit(self, feats: torch.Tensor) -> torch.Tensor:
        return self.span_clf(feats).squeeze(-1)

    def relation_logits(self, feats: torch.Tensor) -> torch.Tensor:
        return self.rel_clf(feats)

    def span_classify(self, feats: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.span_logit(feats))

    def relation_classify(self, feats: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.relation_logits(feats), dim=-1)


def _length_mask(ids: list) -> torch.Tensor:
    width = max(len(s) for s in ids)
    lengths = torch.tensor([len(s) for s in ids])
    return torch.arange(width).unsqueeze(0) < lengths.unsqueeze(1)


def ensure_nonempty(ids: list) -> list:
    """Greedy decoding may emit EOS immediately; an empty output is read as a lone UNK."""
    return [s if s else [UNK_ID] for s in ids]
