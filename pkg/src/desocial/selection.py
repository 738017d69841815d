"""Per-user backbone assignment.

A requesting user picks its scoring backbone one of four ways:
personalized (weighted pairwise-ranking score of each candidate on the
user's own neighborhood history), rule-based (degree/clustering
thresholds), uniform-random, or a fixed backbone for everyone.

Personalized selection scores candidate f as
    sum over sampled (v_p, v_n) pairs of
        1[P_f(u, v_p) > P_f(u, v_n)] * exp(alpha * (t - t_e))
where v_p is a historical neighbor, v_n a historical non-neighbor, and
t_e the latest period the (u, v_p) connection occurred at or before t.
Ties between candidates break by the canonical pool order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbones import CANONICAL_POOL, BackboneKind
from .errors import SamplingError
from .graph_store import (CumulativeView, NodeStats, SnapshotSequence,
                          clustering_coefficient, sample_negatives)


@dataclass(frozen=True)
class NeighborPair:
    positive: int
    negative: int
    weight: float
    emerged: int


@dataclass
class PairSample:
    """Sampled positive/negative neighbor pairs for one user."""

    owner: int
    period: int
    pairs: list[NeighborPair]


@dataclass
class AlgorithmAssignment:
    """Chosen backbone per user plus the inverse user-per-backbone index."""

    choices: dict[int, BackboneKind]
    by_backbone: dict[BackboneKind, list[int]]
    strategy: str

    @classmethod
    def from_choices(cls, choices: dict[int, BackboneKind],
                     strategy: str) -> "AlgorithmAssignment":
        inverse: dict[BackboneKind, list[int]] = {}
        for user in sorted(choices):
            inverse.setdefault(choices[user], []).append(user)
        return cls(choices, inverse, strategy)

    def pool_of(self, kind: BackboneKind) -> list[int]:
        return self.by_backbone.get(kind, [])


def sample_pair_set(u: int, view: CumulativeView, seq: SnapshotSequence,
                    gamma: int, alpha: float,
                    rng: np.random.Generator) -> PairSample:
    """gamma (positive, negative) pairs for user u at period view.upto.

    Positives are drawn with replacement from u's historical neighbors;
    each pair gets a fresh negative. Weights use the latest occurrence
    period of (u, v_p) no later than the evaluation period.
    """
    if gamma < 1:
        raise SamplingError("gamma must be >= 1")
    nbrs = view.neighbors(u)
    if nbrs.shape[0] == 0:
        raise SamplingError(f"no positive neighbors for user {u}")
    t = view.upto
    positives = rng.choice(nbrs, size=gamma, replace=True)
    pairs = []
    for v_p in positives:
        v_n = int(sample_negatives(view, u, 1, rng=rng)[0])
        t_e = seq.last_seen(u, int(v_p), upto=t)
        weight = float(np.exp(alpha * (t - t_e)))
        pairs.append(NeighborPair(int(v_p), v_n, weight, t_e))
    return PairSample(u, t, pairs)


def select_algorithm(u: int, sample: PairSample,
                     candidate_scorers: dict[BackboneKind, "object"],
                     pool: tuple[BackboneKind, ...] | None = None
                     ) -> BackboneKind:
    """Argmax over the pool of the weighted pairwise-ranking score.

    candidate_scorers must cover the pool; each scorer needs score_pairs.
    Equal pair scores contribute nothing (strict inequality); ties between
    backbones break by canonical order.
    """
    if pool is None:
        pool = tuple(k for k in CANONICAL_POOL if k in candidate_scorers)
    if not pool:
        raise SamplingError("empty backbone pool")
    if not sample.pairs:
        raise SamplingError("empty pair sample")
    missing = [k for k in pool if k not in candidate_scorers]
    if missing:
        raise SamplingError(f"no candidate scorer for {missing}")

    src = np.full(len(sample.pairs), u, dtype=np.int64)
    pos = np.asarray([p.positive for p in sample.pairs], dtype=np.int64)
    neg = np.asarray([p.negative for p in sample.pairs], dtype=np.int64)
    weights = np.asarray([p.weight for p in sample.pairs])

    best_kind, best_score = None, None
    for kind in CANONICAL_POOL:
        if kind not in pool:
            continue
        scorer = candidate_scorers[kind]
        # Only the score ordering matters; raw logits avoid the sigmoid's
        # float64 saturation and order identically.
        rank = getattr(scorer, "pair_logits", scorer.score_pairs)
        sp = rank(src, pos)
        sn = rank(src, neg)
        score = float(np.sum((sp > sn) * weights))
        if best_score is None or score > best_score:
            best_kind, best_score = kind, score
    return best_kind


def rule_based_select(stats: NodeStats,
                      pool: tuple[BackboneKind, ...]) -> BackboneKind:
    """Threshold rules on degree and clustering; first match wins, the
    last pool entry is the fallback."""
    if not pool:
        raise SamplingError("empty backbone pool")
    deg, c = stats.degree, stats.clustering
    if deg >= 6 and BackboneKind.SGC in pool:
        return BackboneKind.SGC
    if c < 0.2 and deg >= 4 and BackboneKind.SAGE in pool:
        return BackboneKind.SAGE
    if deg <= 2 and BackboneKind.MLP in pool:
        return BackboneKind.MLP
    if c >= 0.4 and BackboneKind.GCN in pool:
        return BackboneKind.GCN
    return pool[-1]


def assign_all(strategy: str, requesters, *, pool, view=None, seq=None,
               candidate_scorers=None, gamma=250, alpha=-0.1,
               rng_for_user=None, fixed_kind: BackboneKind | None = None
               ) -> AlgorithmAssignment:
    """Apply a selection strategy to every requester.

    `rng_for_user` maps a user id to that user's independent random
    stream (personalized / random strategies). The fixed strategy gives
    everyone the same backbone, so a single-kind personalized pool and a
    fixed assignment coincide exactly.
    """
    pool = tuple(pool)
    if not pool:
        raise SamplingError("empty backbone pool")
    choices: dict[int, BackboneKind] = {}

    if strategy == "fixed":
        if fixed_kind is None:
            raise SamplingError("fixed strategy needs a backbone")
        if fixed_kind not in pool:
            raise SamplingError(f"{fixed_kind} not in pool")
        for u in sorted(set(int(x) for x in requesters)):
            choices[u] = fixed_kind
        return AlgorithmAssignment.from_choices(choices, "fixed")

    for u in sorted(set(int(x) for x in requesters)):
        if strategy == "random":
            rng = rng_for_user(u)
            choices[u] = pool[int(rng.integers(0, len(pool)))]
        elif strategy == "rule":
            choices[u] = rule_based_select(clustering_coefficient(view, u),
                                           pool)
        elif strategy == "personalized":
            rng = rng_for_user(u)
            try:
                sample = sample_pair_set(u, view, seq, gamma, alpha, rng)
            except SamplingError:
                # No usable neighbor pairs (isolated user or complete
                # neighborhood): fall back to the structural rule.
                choices[u] = rule_based_select(
                    clustering_coefficient(view, u), pool)
                continue
            choices[u] = select_algorithm(u, sample, candidate_scorers, pool)
        else:
            raise SamplingError(f"unknown strategy {strategy!r}")
    return AlgorithmAssignment.from_choices(choices, strategy)
