"""Twin-encoder model: time encoder, symbol encoder, and the two projectors
into the shared latent space, plus forward/backward over the eight embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .nn_core import MlpCache, MlpGrads, MlpParams, init_mlp, mlp_backward, mlp_forward

PARAM_GROUPS = ("time_encoder", "symbol_encoder", "time_projector", "symbol_projector")


@dataclass(frozen=True)
class ModelDims:
    n_channels: int
    window_len: int
    n_symbols: int
    h_dim: int
    z_dim: int


@dataclass
class StcModel:
    time_encoder: MlpParams
    symbol_encoder: MlpParams
    time_projector: MlpParams
    symbol_projector: MlpParams
    dims: ModelDims
    # preprocessing record fitted on the pretraining split; makes checkpoints
    # self-contained for probing
    channel_mean: np.ndarray
    channel_sigma: np.ndarray

    def __post_init__(self):
        d = self.dims
        if self.time_projector.out_dim != self.symbol_projector.out_dim:
            raise DataError("both projectors must share the same output dimension")
        if self.time_projector.out_dim != d.z_dim:
            raise DataError("projector output does not match z_dim")
        if self.time_encoder.in_dim != d.n_channels * d.window_len:
            raise DataError("time encoder input does not match K * L")
        if self.symbol_encoder.in_dim != d.n_channels * d.n_symbols:
            raise DataError("symbol encoder input does not match K * n_symbols")

    def group(self, name: str) -> MlpParams:
        return getattr(self, name)

    def parameter_arrays(self) -> tuple[list[np.ndarray], list[str]]:
        arrays, names = [], []
        for group in PARAM_GROUPS:
            params = self.group(group)
            for l in range(params.n_layers):
                arrays.extend((params.weights[l], params.biases[l]))
                names.extend((f"{group}.w{l}", f"{group}.b{l}"))
        return arrays, names


@dataclass
class EmbeddingSet:
    """Encoder-level (h) and projection-level (z) embeddings for both views."""

    ht: np.ndarray
    ht_aug: np.ndarray
    hs: np.ndarray
    hs_aug: np.ndarray
    zt: np.ndarray
    zt_aug: np.ndarray
    zs: np.ndarray
    zs_aug: np.ndarray


def build_model(
    dims: ModelDims,
    channel_mean: np.ndarray,
    channel_sigma: np.ndarray,
    encoder_hidden: tuple[int, ...] = (256,),
    projector_hidden: tuple[int, ...] = (64,),
    seed: int = 0,
) -> StcModel:
    rng = np.random.default_rng(seed)
    d = dims
    return StcModel(
        time_encoder=init_mlp([d.n_channels * d.window_len, *encoder_hidden, d.h_dim], rng),
        symbol_encoder=init_mlp([d.n_channels * d.n_symbols, *encoder_hidden, d.h_dim], rng),
        time_projector=init_mlp([d.h_dim, *projector_hidden, d.z_dim], rng),
        symbol_projector=init_mlp([d.h_dim, *projector_hidden, d.z_dim], rng),
        dims=dims,
        channel_mean=np.asarray(channel_mean, dtype=np.float64),
        channel_sigma=np.asarray(channel_sigma, dtype=np.float64),
    )


def forward_embeddings(
    model: StcModel,
    xt: np.ndarray,
    xt_aug: np.ndarray,
    xs: np.ndarray,
    xs_aug: np.ndarray,
) -> tuple[EmbeddingSet, dict[str, MlpCache]]:
    """Run both views of both domains through the shared-weight encoders and
    projectors; caches are kept for the backward pass."""
    batch = xt.shape[0]
    for name, mat in (("xt", xt), ("xt_aug", xt_aug), ("xs", xs), ("xs_aug", xs_aug)):
        if mat.shape[0] != batch:
            raise DataError(f"{name} batch size {mat.shape[0]} != {batch}")
    caches = {
        "ht": mlp_forward(model.time_encoder, xt),
        "ht_aug": mlp_forward(model.time_encoder, xt_aug),
        "hs": mlp_forward(model.symbol_encoder, xs),
        "hs_aug": mlp_forward(model.symbol_encoder, xs_aug),
    }
    caches["zt"] = mlp_forward(model.time_projector, caches["ht"].output)
    caches["zt_aug"] = mlp_forward(model.time_projector, caches["ht_aug"].output)
    caches["zs"] = mlp_forward(model.symbol_projector, caches["hs"].output)
    caches["zs_aug"] = mlp_forward(model.symbol_projector, caches["hs_aug"].output)
    embeddings = EmbeddingSet(**{k: c.output for k, c in caches.items()})
    return embeddings, caches


def backward_embeddings(model: StcModel, caches, grads) -> dict[str, MlpGrads]:
    """Map embedding gradients to parameter gradients.

    Projection-level gradients flow back through the projectors into the
    encoder-level gradients; each encoder sees both views and its parameter
    gradients are summed across them.
    """
    out: dict[str, MlpGrads] = {}

    def _merge(a: MlpGrads, b: MlpGrads) -> MlpGrads:
        return MlpGrads(
            weights=[x + y for x, y in zip(a.weights, b.weights)],
            biases=[x + y for x, y in zip(a.biases, b.biases)],
        )

    pt1, d_ht_proj = mlp_backward(model.time_projector, caches["zt"], grads.zt)
    pt2, d_ht_aug_proj = mlp_backward(model.time_projector, caches["zt_aug"], grads.zt_aug)
    out["time_projector"] = _merge(pt1, pt2)
    ps1, d_hs_proj = mlp_backward(model.symbol_projector, caches["zs"], grads.zs)
    ps2, d_hs_aug_proj = mlp_backward(model.symbol_projector, caches["zs_aug"], grads.zs_aug)
    out["symbol_projector"] = _merge(ps1, ps2)

    et1, _ = mlp_backward(model.time_encoder, caches["ht"], grads.ht + d_ht_proj)
    et2, _ = mlp_backward(model.time_encoder, caches["ht_aug"], grads.ht_aug + d_ht_aug_proj)
    out["time_encoder"] = _merge(et1, et2)
    es1, _ = mlp_backward(model.symbol_encoder, caches["hs"], grads.hs + d_hs_proj)
    es2, _ = mlp_backward(model.symbol_encoder, caches["hs_aug"], grads.hs_aug + d_hs_aug_proj)
    out["symbol_encoder"] = _merge(es1, es2)
    return out


def _embed(encoder: MlpParams, projector: MlpParams, x: np.ndarray):
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("embedding requires a non-empty 2-D batch")
    h = mlp_forward(encoder, x).output
    z = mlp_forward(projector, h).output
    return z, h


def embed_time(model: StcModel, xt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inference path: returns (z_t, h_t) without caches."""
    return _embed(model.time_encoder, model.time_projector, xt)


def embed_symbol(model: StcModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inference path: returns (z_s, h_s) without caches."""
    return _embed(model.symbol_encoder, model.symbol_projector, xs)
