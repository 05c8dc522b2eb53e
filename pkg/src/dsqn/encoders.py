"""The two text encoders: a single-layer transformer with max pooling over
time for trajectories, and a single-layer LSTM (final hidden state) for
action commands. Each has its own word-embedding table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .params import ParameterStore
from .text import PAD, Trajectory, Vocabulary, flatten_trajectory

STATE_PREFIX = "state_enc."
ACTION_PREFIX = "action_enc."

MAX_ACTION_TOKENS = 10


@dataclass
class EncoderConfig:
    model_dim: int = 128
    heads: int = 8
    inner_dim: int = 256
    layers: int = 1
    word_embed_dim: int = 64
    max_tokens: int = 500
    action_units: int = 32

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError(f"model_dim {self.model_dim} not divisible by heads {self.heads}")
        if self.layers != 1:
            raise ValueError("only single-layer encoders are supported")
        for field in ("model_dim", "heads", "inner_dim", "word_embed_dim", "max_tokens", "action_units"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive")


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Fixed sine/cosine position table (not trained)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, (2.0 * (i // 2)) / dim)
    table = np.empty((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table


def init_state_encoder(store: ParameterStore, vocab_size: int, cfg: EncoderConfig, rng: np.random.Generator) -> None:
    d, we, inner = cfg.model_dim, cfg.word_embed_dim, cfg.inner_dim
    p = STATE_PREFIX
    store.add(p + "emb", xavier_uniform(rng, vocab_size, we, (vocab_size, we)))
    store.add(p + "up_w", xavier_uniform(rng, we, d, (we, d)))
    store.add(p + "up_b", np.zeros(d))
    for name in ("q", "k", "v", "o"):
        store.add(p + f"attn_w{name}", xavier_uniform(rng, d, d, (d, d)))
        store.add(p + f"attn_b{name}", np.zeros(d))
    store.add(p + "ln1_g", np.ones(d))
    store.add(p + "ln1_b", np.zeros(d))
    store.add(p + "ff_w1", xavier_uniform(rng, d, inner, (d, inner)))
    store.add(p + "ff_b1", np.zeros(inner))
    store.add(p + "ff_w2", xavier_uniform(rng, inner, d, (inner, d)))
    store.add(p + "ff_b2", np.zeros(d))
    store.add(p + "ln2_g", np.ones(d))
    store.add(p + "ln2_b", np.zeros(d))


def init_action_encoder(store: ParameterStore, vocab_size: int, cfg: EncoderConfig, rng: np.random.Generator) -> None:
    we, u = cfg.word_embed_dim, cfg.action_units
    p = ACTION_PREFIX
    store.add(p + "emb", xavier_uniform(rng, vocab_size, we, (vocab_size, we)))
    store.add(p + "wx", xavier_uniform(rng, we, 4 * u, (we, 4 * u)))
    store.add(p + "wh", xavier_uniform(rng, u, 4 * u, (u, 4 * u)))
    bias = np.zeros(4 * u)
    bias[u : 2 * u] = 1.0  # forget gate opens at init
    store.add(p + "b", bias)


_POS_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _positions(length: int, dim: int) -> np.ndarray:
    key = (length, dim)
    table = _POS_CACHE.get(key)
    if table is None:
        table = sinusoidal_positions(length, dim)
        _POS_CACHE[key] = table
    return table


def _transformer_block(store: ParameterStore, cfg: EncoderConfig, x: Tensor, key_mask: np.ndarray | None) -> Tensor:
    """One post-norm transformer layer over (batch, time, model_dim)."""
    p = STATE_PREFIX
    batch, length, d = x.shape
    heads, dh = cfg.heads, d // cfg.heads

    def heads_view(t: Tensor) -> Tensor:
        return ad.swapaxes(ad.reshape(t, (batch, length, heads, dh)), 1, 2)

    q = heads_view(ad.linear(x, store[p + "attn_wq"], store[p + "attn_bq"]))
    k = heads_view(ad.linear(x, store[p + "attn_wk"], store[p + "attn_bk"]))
    v = heads_view(ad.linear(x, store[p + "attn_wv"], store[p + "attn_bv"]))

    scores = ad.scale(ad.matmul(q, ad.swapaxes(k, 2, 3)), 1.0 / math.sqrt(dh))
    if key_mask is not None:
        # -inf on padded keys: exp() of the masked scores is an exact zero,
        # so padding cannot leak into valid positions in either direction
        add_mask = np.where(key_mask, 0.0, -np.inf)[:, None, None, :]
        scores = ad.add(scores, ad.constant(np.broadcast_to(add_mask, scores.shape)))
    attn = ad.softmax_rows(scores)
    ctx = ad.reshape(ad.swapaxes(ad.matmul(attn, v), 1, 2), (batch, length, d))
    ctx = ad.linear(ctx, store[p + "attn_wo"], store[p + "attn_bo"])

    x = ad.layer_norm(ad.add(x, ctx), store[p + "ln1_g"], store[p + "ln1_b"])
    ff = ad.linear(ad.relu(ad.linear(x, store[p + "ff_w1"], store[p + "ff_b1"])), store[p + "ff_w2"], store[p + "ff_b2"])
    return ad.layer_norm(ad.add(x, ff), store[p + "ln2_g"], store[p + "ln2_b"])


def encode_token_batch(store: ParameterStore, cfg: EncoderConfig, id_lists: list[list[int]]) -> Tensor:
    """Encode a batch of token-id sequences into (batch, model_dim) vectors.

    Sequences are right-padded to the longest one; padded positions are
    masked out of attention and of the time max-pool.
    """
    if not id_lists:
        raise ValueError("empty batch")
    lengths = [len(ids) for ids in id_lists]
    if min(lengths) < 1:
        raise ValueError("cannot encode an empty token sequence")
    batch, length = len(id_lists), max(lengths)
    ids = np.full((batch, length), PAD, dtype=np.int64)
    valid = np.zeros((batch, length), dtype=bool)
    for row, seq in enumerate(id_lists):
        ids[row, : len(seq)] = seq
        valid[row, : len(seq)] = True

    p = STATE_PREFIX
    x = ad.embedding(store[p + "emb"], ids)
    x = ad.linear(x, store[p + "up_w"], store[p + "up_b"])
    pos = np.broadcast_to(_positions(length, cfg.model_dim), x.shape)
    x = ad.add(x, ad.constant(pos))

    key_mask = None if bool(valid.all()) else valid
    x = _transformer_block(store, cfg, x, key_mask)

    if key_mask is not None:
        pool_mask = np.where(valid, 0.0, -np.inf)[:, :, None]
        x = ad.add(x, ad.constant(np.broadcast_to(pool_mask, x.shape)))
    return ad.max_over_axis(x, axis=1)


def encode_trajectories(
    store: ParameterStore,
    cfg: EncoderConfig,
    trajectories: list[Trajectory],
    vocab: Vocabulary,
) -> Tensor:
    return encode_token_batch(
        store, cfg, [flatten_trajectory(t, vocab, cfg.max_tokens) for t in trajectories]
    )


def encode_state(store: ParameterStore, cfg: EncoderConfig, traj: Trajectory, vocab: Vocabulary) -> Tensor:
    """Encode a single trajectory to a (model_dim,) vector."""
    ids = flatten_trajectory(traj, vocab, cfg.max_tokens)
    if not ids:
        raise ValueError("cannot encode an empty trajectory; seed it with the game's opening text")
    return ad.reshape(encode_token_batch(store, cfg, [ids]), (cfg.model_dim,))


def encode_action_batch(store: ParameterStore, cfg: EncoderConfig, id_lists: list[list[int]]) -> Tensor:
    """Encode action token sequences into (batch, action_units) final hidden states.

    Short sequences are left-padded; masking pins h and c at exactly zero
    until a sequence starts, so the batched result matches the one-by-one
    encoding and every final state lands at the last timestep.
    """
    if not id_lists:
        raise ValueError("empty action batch")
    for seq in id_lists:
        if not 1 <= len(seq) < MAX_ACTION_TOKENS:
            raise ValueError(f"action length {len(seq)} outside [1, {MAX_ACTION_TOKENS})")
    lengths = [len(ids) for ids in id_lists]
    batch, length = len(id_lists), max(lengths)
    u = cfg.action_units
    ids = np.full((batch, length), PAD, dtype=np.int64)
    active = np.zeros((batch, length), dtype=np.float64)
    for row, seq in enumerate(id_lists):
        ids[row, length - len(seq) :] = seq
        active[row, length - len(seq) :] = 1.0

    p = ACTION_PREFIX
    x = ad.embedding(store[p + "emb"], ids)
    xw = ad.linear(x, store[p + "wx"], store[p + "b"])  # (batch, length, 4u)
    wh = store[p + "wh"]

    all_active = bool(active.all())
    h = ad.constant(np.zeros((batch, u)))
    c = ad.constant(np.zeros((batch, u)))
    for t in range(length):
        z = ad.add(ad.take_timestep(xw, t), ad.matmul(h, wh))
        gi, gf, gg, go = ad.split(z, 4, axis=1)
        c_new = ad.add(ad.mul(ad.sigmoid(gf), c), ad.mul(ad.sigmoid(gi), ad.tanh_(gg)))
        h_new = ad.mul(ad.sigmoid(go), ad.tanh_(c_new))
        if all_active:
            h, c = h_new, c_new
        else:
            m = ad.constant(np.broadcast_to(active[:, t : t + 1], (batch, u)))
            h = ad.mul(h_new, m)
            c = ad.mul(c_new, m)
    return h


def encode_action(store: ParameterStore, cfg: EncoderConfig, ids: list[int]) -> Tensor:
    """Encode one action command to a (action_units,) vector."""
    return ad.reshape(encode_action_batch(store, cfg, [ids]), (cfg.action_units,))
