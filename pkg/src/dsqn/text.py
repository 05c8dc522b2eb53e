"""Tokenization, vocabulary and dialogue trajectories.

The token stream an agent sees is the alternating game/player dialogue
joined with a separator token, head-trimmed so only the most recent
`max_tokens` ids survive.
"""

from __future__ import annotations

import re
from typing import Iterable

PAD, UNK, SEP = 0, 1, 2
RESERVED = ("<pad>", "<unk>", "<sep>")

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into words / single punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Dense token -> id map with reserved PAD/UNK/SEP ids."""

    def __init__(self, tokens: Iterable[str]):
        self._tokens = list(RESERVED)
        seen = set(RESERVED)
        for tok in tokens:
            if tok not in seen:
                seen.add(tok)
                self._tokens.append(tok)
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}
        self._text_cache: dict[str, tuple[int, ...]] = {}

    @classmethod
    def from_lexicon(cls, words: Iterable[str]) -> "Vocabulary":
        return cls(sorted(set(words)))

    def __len__(self) -> int:
        return len(self._tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        ids = self._ids
        return [ids.get(tok, UNK) for tok in tokens]

    def encode_text(self, text: str) -> tuple[int, ...]:
        cached = self._text_cache.get(text)
        if cached is None:
            cached = tuple(self.encode(tokenize(text)))
            self._text_cache[text] = cached
        return cached

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self._tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh]
        if tokens[: len(RESERVED)] != list(RESERVED):
            raise ValueError(f"{path}: vocabulary file missing reserved tokens")
        return cls(tokens[len(RESERVED) :])


GAME, PLAYER = "game", "player"


class Trajectory:
    """Immutable alternating dialogue history, starting with a game utterance."""

    __slots__ = ("utterances",)

    def __init__(self, utterances: tuple[tuple[str, str], ...]):
        for i, (speaker, _) in enumerate(utterances):
            expected = GAME if i % 2 == 0 else PLAYER
            if speaker != expected:
                raise ValueError(f"utterance {i} spoken by {speaker!r}, expected {expected!r}")
        self.utterances = utterances

    @classmethod
    def start(cls, opening_text: str) -> "Trajectory":
        return cls(((GAME, opening_text),))

    def extend(self, command: str, response: str) -> "Trajectory":
        t = object.__new__(Trajectory)
        t.utterances = self.utterances + ((PLAYER, command), (GAME, response))
        return t

    def __len__(self) -> int:
        return len(self.utterances)

    def __eq__(self, other) -> bool:
        return isinstance(other, Trajectory) and self.utterances == other.utterances

    def __hash__(self) -> int:
        return hash(self.utterances)

    def __repr__(self) -> str:
        return f"Trajectory({len(self.utterances)} utterances)"


def flatten_trajectory(traj: Trajectory, vocab: Vocabulary, max_tokens: int) -> list[int]:
    """Join utterances with SEP and keep only the most recent max_tokens ids."""
    ids: list[int] = []
    for i, (_, text) in enumerate(traj.utterances):
        if i:
            ids.append(SEP)
        ids.extend(vocab.encode_text(text))
    if len(ids) > max_tokens:
        ids = ids[-max_tokens:]
    return ids
