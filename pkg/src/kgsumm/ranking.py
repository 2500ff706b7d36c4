"""Damped fixed-point ranking over weighted graphs (TextRank-style)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RankResult:
    scores: np.ndarray
    iterations: int
    converged: bool
    # max |delta| and sum |delta| per iteration
    max_deltas: list = field(default_factory=list)
    l1_deltas: list = field(default_factory=list)


def rank_graph(weights, d: float = 0.85, tol: float = 1e-6, max_iter: int = 100) -> RankResult:
    """Iterate ``s_i = (1 - d) + d * sum_j w[j, i] / sum_k w[j, k] * s_j``.

    ``weights`` is a square non-negative matrix; ``weights[j, i]`` is the
    weight of the edge from j to i. Starts from all ones and stops once the
    largest absolute change drops below ``tol`` or after ``max_iter`` sweeps.
    """
    if not 0.0 < d < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weights must be a square matrix")
    if w.shape[0] == 0:
        raise ValueError("empty graph")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    out = w.sum(axis=1)
    trans = np.divide(w, out[:, None], out=np.zeros_like(w), where=out[:, None] > 0)
    scores = np.ones(w.shape[0])
    result = RankResult(scores, 0, False)
    for it in range(1, max_iter + 1):
        new = (1.0 - d) + d * (trans.T @ scores)
        delta = np.abs(new - scores)
        scores = new
        result.max_deltas.append(float(delta.max()))
        result.l1_deltas.append(float(delta.sum()))
        result.iterations = it
        if delta.max() < tol:
            result.converged = True
            break
    result.scores = scores
    return result
