"""Synthetic scorers and vote streams for calibration and oracle tests.

These fixtures exercise the consensus and evaluation machinery with
known closed-form behavior: committees of i.i.d. validators with accuracy
theta follow the exact binomial majority law, and a scorer emitting
i.i.d. uniform pair scores ranks the positive first with probability 1/K.
"""

from __future__ import annotations

import math

import numpy as np

from .consensus import VerificationResult, VoteContext, verify


def binomial_majority_prob(theta: float, n: int) -> float:
    """Exact P(strict majority of n i.i.d. Bernoulli(theta) votes):
    sum_{k > floor(n/2)} C(n,k) theta^k (1-theta)^(n-k)."""
    return sum(math.comb(n, k) * theta ** k * (1.0 - theta) ** (n - k)
               for k in range(n // 2 + 1, n + 1))


class UniformPairScorer:
    """Deterministic i.i.d.-uniform score per unordered user pair.

    Scores come from a splitmix64-style hash of (min, max, seed), so they
    are symmetric, reproducible, and effectively independent across
    pairs. score_pairs returns values in [0, 1); pair_logits is omitted
    on purpose so rank comparisons use these scores directly.
    """

    def __init__(self, seed: int = 0):
        self.seed = np.uint64(seed)

    def score_pairs(self, src, dst) -> np.ndarray:
        a = np.asarray(src, dtype=np.uint64)
        b = np.asarray(dst, dtype=np.uint64)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        with np.errstate(over="ignore"):
            x = lo * np.uint64(0x9E3779B97F4A7C15)
            x ^= hi + np.uint64(0xBF58476D1CE4E5B9) + (x << np.uint64(6))
            x *= np.uint64(0x94D049BB133111EB) + self.seed
            x ^= x >> np.uint64(31)
            x *= np.uint64(0xBF58476D1CE4E5B9)
            x ^= x >> np.uint64(27)
        return (x >> np.uint64(11)).astype(np.float64) / float(1 << 53)

    def score(self, p: int, q: int) -> float:
        return float(self.score_pairs([p], [q])[0])


def bernoulli_vote_results(theta: float, n: int, num_queries: int,
                           seed: int, k: int = 2,
                           requesters=None) -> list[VerificationResult]:
    """Verification results for committees of n i.i.d. validators that
    each vote true with probability theta, one result per query."""
    rng = np.random.default_rng(seed)
    if requesters is None:
        requesters = np.zeros(num_queries, dtype=np.int64)
    else:
        requesters = np.asarray(requesters, dtype=np.int64)
    votes = rng.random((num_queries, n)) < theta
    results = []
    for i in range(num_queries):
        vote_row = tuple(bool(v) for v in votes[i])
        decision, agree = verify(vote_row)
        results.append(VerificationResult(
            context=VoteContext((int(requesters[i]), -1),
                                tuple(range(k - 1)), 0),
            votes=vote_row, decision=decision, agree_count=agree,
            requester=int(requesters[i]), k=k))
    return results
