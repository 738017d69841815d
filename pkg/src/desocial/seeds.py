"""Deterministic random-stream derivation.

All randomness in an experiment flows from one global seed through
numpy SeedSequence keyed by (global seed, domain tag, period, entity...).
Distinct key tuples never alias, so per-validator training, per-user
selection, per-query negative sampling etc. are independent streams and
any parallel schedule reproduces the same results.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams for different purposes disjoint even when the
# remaining key components collide.
TAG_DATA = 1        # synthetic dataset generation
TAG_SPLIT = 2       # per-period supervision/validation split
TAG_TRAIN = 3       # per-validator training (init, dropout, negatives)
TAG_SELECT = 4      # per-user pair sampling for algorithm selection
TAG_ASSIGN = 5      # per-user random strategy draws
TAG_COMMITTEE = 6   # per-(period, kind) committee permutation
TAG_QUERY = 7       # per-query evaluation negatives

# Sentinel entity id for the canonical (non-validator-owned) scorer of a
# backbone kind; real user ids are always >= 0.
CANONICAL_OWNER = -1


class SeedScheme:
    """Derives named substreams from one global seed."""

    def __init__(self, global_seed: int):
        self.global_seed = int(global_seed)

    def _key(self, tag: int, *parts: int) -> list[int]:
        # SeedSequence entropy words must be non-negative; shift signed ids.
        return [self.global_seed & 0xFFFFFFFF, tag] + [int(p) + 2 for p in parts]

    def sequence(self, tag: int, *parts: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self._key(tag, *parts))

    def rng(self, tag: int, *parts: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(tag, *parts))

    def integer(self, tag: int, *parts: int) -> int:
        """A stable 63-bit integer seed (for APIs that take plain ints)."""
        word = self.sequence(tag, *parts).generate_state(1, np.uint64)[0]
        return int(word >> np.uint64(1))
