"""Q-network heads, the siamese state-equivalence head, Q-value
factorization, the auto-weighted two-task loss, replay memory and the
exploration schedule.

Three agent modes share one trajectory encoder:

  dqn_only       Q(t,a) = f_e(t) . W_dqn . f_a(a)
  dsqn           same Q head, plus the siamese head on f_e
  dsqn_factored  Q = Q_sem + Q_var from two nonlinear views of f_e(t);
                 the siamese head reads the semantic view only
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoders import EncoderConfig, encode_action_batch, encode_token_batch, xavier_uniform
from .params import ParameterStore
from .text import Trajectory, Vocabulary, flatten_trajectory

MODES = ("dqn_only", "dsqn", "dsqn_factored")

HEAD_PREFIX = "heads."


@dataclass
class EpsilonSchedule:
    """Linear decay from start to end over decay_steps, clamped after."""

    start: float = 1.0
    end: float = 0.0001
    decay_steps: int = 10_000_000

    def value(self, step: int) -> float:
        frac = min(1.0, max(0, step) / self.decay_steps)
        return self.start + (self.end - self.start) * frac


@dataclass
class Transition:
    trajectory: Trajectory
    action: str
    reward: float
    next_trajectory: Trajectory
    terminal: bool
    admissible_next: tuple[str, ...]
    state_label: int
    # bookkeeping for compact serialization: both trajectories are prefixes
    # of one episode's utterance log
    episode: int = -1
    t_len: int = 0
    t2_len: int = 0


class ReplayMemory:
    """Ring buffer addressed by monotonically increasing global ids."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("replay capacity must be positive")
        self.capacity = capacity
        self._items: deque[Transition] = deque()
        self._base = 0  # gid of the oldest live entry

    def __len__(self) -> int:
        return len(self._items)

    @property
    def base(self) -> int:
        return self._base

    @property
    def next_gid(self) -> int:
        return self._base + len(self._items)

    def append(self, item: Transition) -> tuple[int, Transition | None]:
        """Store item; returns (its gid, evicted transition or None)."""
        evicted = None
        if len(self._items) == self.capacity:
            evicted = self._items.popleft()
            self._base += 1
        gid = self._base + len(self._items)
        self._items.append(item)
        return gid, evicted

    def get(self, gid: int) -> Transition:
        idx = gid - self._base
        if not 0 <= idx < len(self._items):
            raise KeyError(f"gid {gid} not live (base {self._base}, size {len(self._items)})")
        return self._items[idx]

    def sample_gids(self, rng: np.random.Generator, k: int) -> list[int]:
        """Uniform sample of live gids without replacement."""
        n = len(self._items)
        k = min(k, n)
        return [int(i) + self._base for i in rng.choice(n, size=k, replace=False)]

    def items(self):
        return iter(self._items)


def init_agent_heads(
    store: ParameterStore,
    cfg: EncoderConfig,
    rng: np.random.Generator,
    dense_activation: str = "tanh",
) -> None:
    """Register the Q/SNN head parameters.

    dense_activation controls the nonlinearity of the two factorization
    layers; "identity" exists so algebraic checks can bypass the tanh.
    """
    if dense_activation not in ("tanh", "identity"):
        raise ValueError(f"unknown dense activation {dense_activation!r}")
    d, u = cfg.model_dim, cfg.action_units
    p = HEAD_PREFIX
    store.add(p + "w_dqn", xavier_uniform(rng, d, u, (d, u)))
    store.add(p + "w_snn", xavier_uniform(rng, d, 1, (1, d)))
    store.add(p + "b_snn", np.zeros(()))
    store.add(p + "s1", np.zeros(()))
    store.add(p + "s2", np.zeros(()))
    store.add(p + "sem_w", xavier_uniform(rng, d, d, (d, d)))
    store.add(p + "sem_b", np.zeros(d))
    store.add(p + "var_w", xavier_uniform(rng, d, d, (d, d)))
    store.add(p + "var_b", np.zeros(d))
    store.dense_activation = dense_activation  # type: ignore[attr-defined]


def _dense(store: ParameterStore, which: str, h: Tensor) -> Tensor:
    z = ad.linear(h, store[HEAD_PREFIX + which + "_w"], store[HEAD_PREFIX + which + "_b"])
    if getattr(store, "dense_activation", "tanh") == "identity":
        return z
    return ad.tanh_(z)


def semantic_view(store: ParameterStore, h: Tensor) -> Tensor:
    """The equivalence-constrained state view (siamese side of the split)."""
    return _dense(store, "sem", h)


def variance_view(store: ParameterStore, h: Tensor) -> Tensor:
    """The time-sensitive state view that absorbs shaped rewards."""
    return _dense(store, "var", h)


def state_vector(store: ParameterStore, cfg: EncoderConfig, traj: Trajectory, vocab: Vocabulary) -> Tensor:
    ids = flatten_trajectory(traj, vocab, cfg.max_tokens)
    if not ids:
        raise ValueError("cannot encode an empty trajectory; seed it with the game's opening text")
    return encode_token_batch(store, cfg, [ids])  # (1, d)


def _action_matrix(store: ParameterStore, cfg: EncoderConfig, actions, vocab: Vocabulary) -> Tensor:
    id_lists = [list(vocab.encode_text(a)) for a in actions]
    return encode_action_batch(store, cfg, id_lists)  # (n, units)


def q_values_plain(
    store: ParameterStore, cfg: EncoderConfig, traj: Trajectory, actions, vocab: Vocabulary
) -> np.ndarray:
    """Q_i = f_e(t) . W_dqn . f_a(a_i), in input action order."""
    if not actions:
        raise ValueError("empty action list")
    h = state_vector(store, cfg, traj, vocab)
    fa = _action_matrix(store, cfg, actions, vocab)
    q = ad.matmul(ad.matmul(h, store[HEAD_PREFIX + "w_dqn"]), ad.swapaxes(fa, 0, 1))
    return q.data.reshape(-1).copy()


def q_values_factored(
    store: ParameterStore, cfg: EncoderConfig, traj: Trajectory, actions, vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (q, q_sem, q_var) with q = q_sem + q_var, elementwise."""
    if not actions:
        raise ValueError("empty action list")
    h = state_vector(store, cfg, traj, vocab)
    fa_t = ad.swapaxes(_action_matrix(store, cfg, actions, vocab), 0, 1)
    w = store[HEAD_PREFIX + "w_dqn"]
    q_sem = ad.matmul(ad.matmul(semantic_view(store, h), w), fa_t).data.reshape(-1)
    q_var = ad.matmul(ad.matmul(variance_view(store, h), w), fa_t).data.reshape(-1)
    return q_sem + q_var, q_sem.copy(), q_var.copy()


def q_values(store, cfg, mode: str, traj, actions, vocab) -> np.ndarray:
    if mode == "dsqn_factored":
        return q_values_factored(store, cfg, traj, actions, vocab)[0]
    return q_values_plain(store, cfg, traj, actions, vocab)


def snn_logit_pairs(store: ParameterStore, left: Tensor, right: Tensor, factored: bool) -> Tensor:
    """Pairwise equivalence logits for two (n, d) stacks of encoded states."""
    if factored:
        left = semantic_view(store, left)
        right = semantic_view(store, right)
    diff = ad.abs_(ad.sub(left, right))
    w_t = ad.swapaxes(store[HEAD_PREFIX + "w_snn"], 0, 1)  # (d, 1)
    n = diff.shape[0]
    bias = ad.reshape(store[HEAD_PREFIX + "b_snn"], (1, 1))
    bias_col = ad.matmul(ad.constant(np.ones((n, 1))), bias)  # scalar bias per row
    logits = ad.add(ad.matmul(diff, w_t), bias_col)
    return ad.reshape(logits, (n,))


def snn_predict(
    store: ParameterStore,
    cfg: EncoderConfig,
    t_i: Trajectory,
    t_j: Trajectory,
    vocab: Vocabulary,
    factored: bool = False,
) -> float:
    """Probability that two trajectories describe the same state."""
    hi = state_vector(store, cfg, t_i, vocab)
    hj = state_vector(store, cfg, t_j, vocab)
    logit = snn_logit_pairs(store, hi, hj, factored)
    return float(ad.sigmoid(logit).data[0])


def td_target(
    reward: float,
    terminal: bool,
    next_q_values: np.ndarray | None,
    discount: float,
) -> float:
    """r, or r + discount * max next-Q from the delayed network."""
    if terminal:
        return float(reward)
    if next_q_values is None or len(next_q_values) == 0:
        raise ValueError("non-terminal transition with no admissible next actions")
    if discount == 0.0:
        return float(reward)
    return float(reward) + discount * float(np.max(next_q_values))


def dqn_loss(predicted: Tensor, targets: np.ndarray) -> Tensor:
    """Mean squared TD error; targets are constants."""
    if predicted.data.size == 0:
        raise ValueError("empty batch")
    diff = ad.sub(predicted, ad.constant(np.asarray(targets, dtype=np.float64)))
    return ad.mean_(ad.mul(diff, diff))


def snn_loss(prob: Tensor | float, equivalent: bool) -> Tensor:
    """Binary cross entropy on one pair probability, clamped at 1e-12."""
    if not isinstance(prob, Tensor):
        prob = ad.constant(np.asarray(prob, dtype=np.float64))
    p = prob if equivalent else ad.sub(ad.constant(np.ones_like(prob.data)), prob)
    return ad.scale(ad.log_(ad.clip_(p, 1e-12, 1.0)), -1.0)


def multitask_loss(l_dqn: Tensor, l_snn: Tensor, s1: Tensor, s2: Tensor) -> Tensor:
    """0.5 e^{-s1} l_dqn + e^{-s2} l_snn + 0.5 s1 + 0.5 s2."""
    term1 = ad.mul(ad.scale(ad.exp_(ad.scale(s1, -1.0)), 0.5), l_dqn)
    term2 = ad.mul(ad.exp_(ad.scale(s2, -1.0)), l_snn)
    reg = ad.add(ad.scale(s1, 0.5), ad.scale(s2, 0.5))
    return ad.add(ad.add(term1, term2), reg)


def adjust_q_bandit(q: np.ndarray, counts: np.ndarray, c: float) -> np.ndarray:
    """Discourage within-episode repeats: q_i - c * count_i."""
    q = np.asarray(q, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if q.shape != counts.shape:
        raise ValueError(f"q/counts length mismatch: {q.shape} vs {counts.shape}")
    return q - c * counts


def select_action(
    store: ParameterStore,
    cfg: EncoderConfig,
    mode: str,
    traj: Trajectory,
    admissible,
    vocab: Vocabulary,
    step: int,
    schedule: EpsilonSchedule,
    rng: np.random.Generator,
    train: bool = True,
    counts: np.ndarray | None = None,
    bandit_c: float = 0.0,
) -> int:
    """Index into `admissible`. Train mode is epsilon-greedy; eval mode is
    greedy over bandit-adjusted Q (ties break to the lowest index)."""
    if not admissible:
        raise ValueError("empty admissible action set")
    if train:
        if rng.random() < schedule.value(step):
            return int(rng.integers(len(admissible)))
        q = q_values(store, cfg, mode, traj, admissible, vocab)
        return int(np.argmax(q))
    q = q_values(store, cfg, mode, traj, admissible, vocab)
    if counts is not None and bandit_c != 0.0:
        q = adjust_q_bandit(q, counts, bandit_c)
    return int(np.argmax(q))


def sync_target(online: ParameterStore, target: ParameterStore) -> None:
    """Hard-copy online values into the delayed network, bit-identically."""
    target.copy_from(online)
