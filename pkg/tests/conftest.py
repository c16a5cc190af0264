"""Shared fixtures and independent oracles used across the test suite.

The contrastive-loss oracles here are deliberately naive (per-sample Python
loops over raw similarity values) so they cannot share bugs with the
vectorized implementations they check.
"""

import math

import numpy as np
import pytest

from stc.data import TimeSeriesSample
from stc.losses import SIMCLR_STANDARD


def make_sample(values, subject_id=0, label=None):
    return TimeSeriesSample(
        values=np.asarray(values, dtype=np.float64),
        subject_id=subject_id,
        label=label,
    )


def brute_cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def brute_info_nce(anchors, positives, pools, tau, mode=SIMCLR_STANDARD):
    """Loop-based InfoNCE: for anchor i the negatives are row j != i of every
    pool; in simclr_standard mode the positive joins the denominator."""
    n = anchors.shape[0]
    losses = []
    for i in range(n):
        s_pos = brute_cosine(anchors[i], positives[i])
        denom = 0.0
        for pool in pools:
            for j in range(n):
                if j != i:
                    denom += math.exp(brute_cosine(anchors[i], pool[j]) / tau)
        if mode == SIMCLR_STANDARD:
            denom += math.exp(s_pos / tau)
        losses.append(-math.log(math.exp(s_pos / tau) / denom))
    return np.array(losses)


def brute_consistency(zt, zt_aug, zs, zs_aug, tau, delta, mode=SIMCLR_STANDARD):
    """Literal margin sum over the four (time-view, symbol-view) pairs."""
    ref = brute_info_nce(zt, zs, [zs], tau, mode)
    pairs = [
        brute_info_nce(zt, zs, [zs], tau, mode),
        brute_info_nce(zt, zs_aug, [zs_aug], tau, mode),
        brute_info_nce(zt_aug, zs, [zs], tau, mode),
        brute_info_nce(zt_aug, zs_aug, [zs_aug], tau, mode),
    ]
    total = np.full(zt.shape[0], 4.0 * delta)
    for pair in pairs:
        total += ref - pair
    return total


def brute_total(emb, cfg):
    """Scalar recomputation of the full objective from an EmbeddingSet."""
    lt = brute_info_nce(emb.ht, emb.ht_aug, [emb.ht, emb.ht_aug],
                        cfg.tau, cfg.denominator_mode)
    ls = brute_info_nce(emb.hs, emb.hs_aug, [emb.hs, emb.hs_aug],
                        cfg.tau, cfg.denominator_mode)
    lts = brute_consistency(emb.zt, emb.zt_aug, emb.zs, emb.zs_aug,
                            cfg.tau, cfg.delta, cfg.denominator_mode)
    return lt, ls, lts, float(lt.mean() + ls.mean() + cfg.lam * lts.mean())


def random_embedding_set(rng, batch, h_dim=5, z_dim=4):
    from stc.model import EmbeddingSet

    def mat(d):
        return rng.standard_normal((batch, d))

    return EmbeddingSet(
        ht=mat(h_dim), ht_aug=mat(h_dim), hs=mat(h_dim), hs_aug=mat(h_dim),
        zt=mat(z_dim), zt_aug=mat(z_dim), zs=mat(z_dim), zs_aug=mat(z_dim),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
