"""Contrastive objectives over the twin-encoder embeddings.

Three families share one InfoNCE kernel on cosine similarities:
  - time loss: anchor h_t, positive its jittered view, in-batch negatives
  - symbol loss: same on the histogram-encoder embeddings
  - cross-domain pairs and the margin consistency term on projected embeddings
The total is mean(time) + mean(symbol) + lambda * mean(consistency).

`simclr_standard` mode keeps the positive pair in the denominator (losses are
then non-negative); `paper_literal` excludes it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError

SIMCLR_STANDARD = "simclr_standard"
PAPER_LITERAL = "paper_literal"


@dataclass(frozen=True)
class LossConfig:
    tau: float = 0.2
    delta: float = 1.0
    lam: float = 0.5
    denominator_mode: str = SIMCLR_STANDARD

    def __post_init__(self):
        if self.tau <= 0:
            raise DataError("tau must be > 0")
        if self.delta < 0 or self.lam < 0:
            raise DataError("delta and lambda must be >= 0")
        if self.denominator_mode not in (SIMCLR_STANDARD, PAPER_LITERAL):
            raise DataError(f"unknown denominator_mode {self.denominator_mode!r}")


@dataclass
class LossBreakdown:
    per_sample_time: np.ndarray
    per_sample_symbol: np.ndarray
    per_sample_consistency: np.ndarray
    time: float
    symbol: float
    consistency: float
    total: float


@dataclass
class EmbeddingGrads:
    """Gradients of the total loss w.r.t. the eight embedding matrices."""

    ht: np.ndarray
    ht_aug: np.ndarray
    hs: np.ndarray
    hs_aug: np.ndarray
    zt: np.ndarray
    zt_aug: np.ndarray
    zs: np.ndarray
    zs_aug: np.ndarray


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise NumericalError("cosine similarity of a zero vector is undefined")
    return float(a @ b / (na * nb))


def _unit_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise NumericalError(f"zero embedding vector at row {int(np.argmax(norms == 0))}")
    return x / norms[:, None], norms


def _info_nce(anchors, positives, pools, cfg: LossConfig, want_grads: bool):
    """Shared kernel: per-sample losses and optional gradients.

    `pools` is a list of negative-candidate matrices; for anchor i, row i of
    every pool is excluded. In simclr_standard mode the positive joins the
    denominator.
    """
    n = anchors.shape[0]
    if n < 2:
        raise DataError("contrastive loss needs a batch of at least 2 samples")
    tau = cfg.tau
    a_unit, a_norm = _unit_rows(anchors)
    p_unit, p_norm = _unit_rows(positives)
    s_pos = np.einsum("ij,ij->i", a_unit, p_unit)

    sims, units, norms = [], [], []
    off_diag = ~np.eye(n, dtype=bool)
    for pool in pools:
        u, nm = _unit_rows(pool)
        sims.append(a_unit @ u.T)
        units.append(u)
        norms.append(nm)

    # log-sum-exp over the allowed candidates per row
    neg_logits = np.concatenate([s / tau for s in sims], axis=1)
    neg_mask = np.concatenate([off_diag] * len(pools), axis=1)
    columns = [np.where(neg_mask, neg_logits, -np.inf)]
    if cfg.denominator_mode == SIMCLR_STANDARD:
        columns.append((s_pos / tau)[:, None])
    logits = np.concatenate(columns, axis=1)
    peak = logits.max(axis=1, keepdims=True)
    exps = np.exp(logits - peak)
    denom = exps.sum(axis=1)
    lse = peak[:, 0] + np.log(denom)
    losses = -s_pos / tau + lse

    if not want_grads:
        return losses, None

    d_anchors = np.zeros_like(anchors)
    d_positives = np.zeros_like(positives)
    d_pools = [np.zeros_like(p) for p in pools]

    # d loss / d similarity, via softmax weights over the denominator
    if cfg.denominator_mode == SIMCLR_STANDARD:
        g_pos = (np.exp(s_pos / tau - lse) - 1.0) / tau
    else:
        g_pos = np.full(n, -1.0 / tau)

    def add_pair_grads(g, s, a_u, a_n, b_u, b_n, d_a, d_b, diagonal):
        # gradient of cosine(a_i, b_j) scaled by g for matched index pairs
        if diagonal:
            d_a += (g[:, None] * (b_u - s[:, None] * a_u)) / a_n[:, None]
            d_b += (g[:, None] * (a_u - s[:, None] * b_u)) / b_n[:, None]
        else:
            d_a += (g @ b_u - (g * s).sum(axis=1)[:, None] * a_u) / a_n[:, None]
            d_b += (g.T @ a_u - (g * s).sum(axis=0)[:, None] * b_u) / b_n[:, None]

    add_pair_grads(g_pos, s_pos, a_unit, a_norm, p_unit, p_norm,
                   d_anchors, d_positives, diagonal=True)
    for s, u, nm, d_pool in zip(sims, units, norms, d_pools):
        g = np.where(off_diag, np.exp(s / tau - lse[:, None]), 0.0) / tau
        add_pair_grads(g, s, a_unit, a_norm, u, nm, d_anchors, d_pool,
                       diagonal=False)
    return losses, (d_anchors, d_positives, d_pools)


def info_nce(anchors, positives, negatives_pool, cfg: LossConfig) -> np.ndarray:
    """Per-sample InfoNCE losses; negatives_pool is one matrix or a list."""
    pools = [negatives_pool] if isinstance(negatives_pool, np.ndarray) else list(negatives_pool)
    losses, _ = _info_nce(anchors, positives, pools, cfg, want_grads=False)
    return losses


def time_loss(embeddings, cfg: LossConfig) -> np.ndarray:
    """Anchor h_t against its augmented view; negatives are the other samples'
    embeddings from both views."""
    return info_nce(embeddings.ht, embeddings.ht_aug,
                    [embeddings.ht, embeddings.ht_aug], cfg)


def symbol_loss(embeddings, cfg: LossConfig) -> np.ndarray:
    return info_nce(embeddings.hs, embeddings.hs_aug,
                    [embeddings.hs, embeddings.hs_aug], cfg)


def cross_pair_loss(a, b, pool=None, cfg: LossConfig | None = None) -> np.ndarray:
    """Cross-domain InfoNCE: anchor a_i, positive b_i, negatives = other
    samples from the b-side pool (defaults to b)."""
    if cfg is None:
        raise DataError("cross_pair_loss requires a LossConfig")
    losses, _ = _info_nce(a, b, [b if pool is None else pool], cfg, want_grads=False)
    return losses


_CROSS_PAIRS = (("zt", "zs"), ("zt", "zs_aug"), ("zt_aug", "zs"), ("zt_aug", "zs_aug"))


def consistency_loss(embeddings, cfg: LossConfig) -> np.ndarray:
    """Margin term: sum over the four (time, symbol) view pairs of
    (L_ref - L_pair + delta), where L_ref is the (zt, zs) pair loss."""
    pair_losses = {
        (a, b): cross_pair_loss(getattr(embeddings, a), getattr(embeddings, b), cfg=cfg)
        for a, b in _CROSS_PAIRS
    }
    ref = pair_losses[("zt", "zs")]
    total = np.full_like(ref, 4.0 * cfg.delta)
    for pair, loss in pair_losses.items():
        total += ref - loss
    return total


def total_loss(embeddings, cfg: LossConfig) -> tuple[LossBreakdown, EmbeddingGrads]:
    """Batch-mean objective with gradients w.r.t. all eight embedding matrices."""
    n = embeddings.ht.shape[0]
    grads = EmbeddingGrads(
        ht=np.zeros_like(embeddings.ht),
        ht_aug=np.zeros_like(embeddings.ht_aug),
        hs=np.zeros_like(embeddings.hs),
        hs_aug=np.zeros_like(embeddings.hs_aug),
        zt=np.zeros_like(embeddings.zt),
        zt_aug=np.zeros_like(embeddings.zt_aug),
        zs=np.zeros_like(embeddings.zs),
        zs_aug=np.zeros_like(embeddings.zs_aug),
    )

    lt, (d_a, d_p, d_pools) = _info_nce(
        embeddings.ht, embeddings.ht_aug,
        [embeddings.ht, embeddings.ht_aug], cfg, want_grads=True)
    grads.ht += (d_a + d_pools[0]) / n
    grads.ht_aug += (d_p + d_pools[1]) / n

    ls, (d_a, d_p, d_pools) = _info_nce(
        embeddings.hs, embeddings.hs_aug,
        [embeddings.hs, embeddings.hs_aug], cfg, want_grads=True)
    grads.hs += (d_a + d_pools[0]) / n
    grads.hs_aug += (d_p + d_pools[1]) / n

    # consistency: sum over pairs of (L_ref - L_pair + delta); the reference
    # (zt, zs) pair therefore carries net coefficient 4 - 1 = 3
    lts = np.full(n, 4.0 * cfg.delta)
    for a_name, b_name in _CROSS_PAIRS:
        coeff = 3.0 if (a_name, b_name) == ("zt", "zs") else -1.0
        a = getattr(embeddings, a_name)
        b = getattr(embeddings, b_name)
        pair, (d_a, d_p, d_pools) = _info_nce(a, b, [b], cfg, want_grads=True)
        lts += coeff * pair
        scale = cfg.lam * coeff / n
        getattr(grads, a_name).__iadd__(scale * d_a)
        getattr(grads, b_name).__iadd__(scale * (d_p + d_pools[0]))

    breakdown = LossBreakdown(
        per_sample_time=lt,
        per_sample_symbol=ls,
        per_sample_consistency=lts,
        time=float(lt.mean()),
        symbol=float(ls.mean()),
        consistency=float(lts.mean()),
        total=float(lt.mean() + ls.mean() + cfg.lam * lts.mean()),
    )
    return breakdown, grads
