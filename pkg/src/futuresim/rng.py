"""Deterministic, splittable random streams.

A single 64-bit game seed fans out into independent sub-streams keyed by
(turn, step, actor), so adding one actor's order never perturbs another
actor's rolls. Values come from counter-mode SHA-256 over the key, which
is platform-independent and needs no carried generator state: the draw
counter alone identifies the next value.

The modulo step carries a bias of about sides/2**64, many orders of
magnitude below what any of the statistical gates can resolve.
"""
from __future__ import annotations

import hashlib


def stream_key(seed: int, turn: int, step: str, actor: str) -> str:
    return f"{seed}:{turn}:{step}:{actor}"


def _value(key: str, counter: int) -> int:
    digest = hashlib.sha256(f"{key}#{counter}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def roll_dice(key: str, start: int, n: int, sides: int) -> list[int]:
    """Roll dice number start..start+n-1 of the stream `key`."""
    return [_value(key, start + i) % sides + 1 for i in range(n)]


def uniform(key: str, counter: int) -> float:
    """Draw number `counter` of the stream, uniform in [0, 1)."""
    return _value(key, counter) / 2**64


def pick(key: str, counter: int, n: int) -> int:
    """Draw number `counter` of the stream, uniform in range(n)."""
    return _value(key, counter) % n


class Stream:
    """Stateful cursor over one keyed sub-stream; used by agent policies."""

    def __init__(self, key: str):
        self.key = key
        self._counter = 0

    def random(self) -> float:
        value = uniform(self.key, self._counter)
        self._counter += 1
        return value

    def randrange(self, n: int) -> int:
        value = pick(self.key, self._counter, n)
        self._counter += 1
        return value

    def randint(self, low: int, high: int) -> int:
        """Inclusive bounds, like random.randint."""
        return low + self.randrange(high - low + 1)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]
