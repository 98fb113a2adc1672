"""Reproducible Wiener increments with one independent substream per path.

Generator, fixed for bit-exact reproducibility across releases:

* each path ``i`` of a run with master seed ``s`` owns a ``PCG64`` bit
  generator seeded with ``SeedSequence(entropy=s, spawn_key=(i,))``;
* standard normals come from ``numpy.random.Generator.standard_normal``
  (numpy's ziggurat sampler, float64);
* an increment over a step of length ``delta`` is ``sqrt(delta) * z``.

Drawing ``n`` then ``m`` normals from a numpy ``Generator`` yields the same
values as drawing ``n + m`` at once, so block-wise consumption by the
vectorised path driver reproduces one-at-a-time consumption exactly.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = ["IncrementStream", "make_stream", "next_increment"]

_REFILL = 1024


class IncrementStream:
    """Seeded source of standard normals for one path.

    ``cursor`` counts the values consumed so far; ``(master_seed,
    path_index, cursor)`` determines the next value. Values can be looked
    at ahead of consumption with :meth:`peek`; only :meth:`advance`,
    :meth:`next_normal` and :meth:`next_increment` move the cursor.
    """

    def __init__(self, master_seed, path_index):
        if path_index < 0:
            raise DomainError("path_index must be nonnegative")
        self.master_seed = int(master_seed)
        self.path_index = int(path_index)
        self.cursor = 0
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.path_index,))
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self._buf = np.empty(0)
        self._pos = 0

    def _fill(self, n):
        have = self._buf.size - self._pos
        if have >= n:
            return
        fresh = self._gen.standard_normal(max(n - have, _REFILL))
        self._buf = np.concatenate([self._buf[self._pos:], fresh])
        self._pos = 0

    def peek(self, n):
        """Next ``n`` standard normals, without consuming them."""
        self._fill(n)
        return self._buf[self._pos:self._pos + n]

    def advance(self, n):
        """Consume ``n`` values (which need not have been peeked)."""
        self._fill(n)
        self._pos += n
        self.cursor += n

    def next_normal(self):
        z = self.peek(1)[0]
        self.advance(1)
        return float(z)

    def next_increment(self, delta):
        """One Wiener increment over a step of length ``delta``."""
        if not delta > 0:
            raise DomainError(f"delta must be positive, got {delta!r}")
        return math.sqrt(delta) * self.next_normal()

    def increments(self, delta, n):
        """Consume ``n`` increments at once."""
        if not delta > 0:
            raise DomainError(f"delta must be positive, got {delta!r}")
        out = math.sqrt(delta) * self.peek(n)
        self.advance(n)
        return out

    def __repr__(self):
        return (
            f"IncrementStream(master_seed={self.master_seed}, "
            f"path_index={self.path_index}, cursor={self.cursor})"
        )


def make_stream(master_seed, path_index):
    return IncrementStream(master_seed, path_index)


def next_increment(stream, delta):
    return stream.next_increment(delta)
