"""Committee formation, per-validator voting, and majority verification.

A requesting user's candidate connections are judged by a committee of
validators sampled uniformly (without replacement) from the users sharing
the requester's backbone, requester excluded. Each validator votes true
on a candidate only when its own scorer ranks the candidate strictly
above every sampled negative; the committee accepts when strictly more
than half the votes are true.

Committee sampling draws a permutation of the pool and takes the first n
entries after filtering out the requester, which is exactly a uniform
sample without replacement. Callers that derive the permutation stream
per (period, backbone) therefore give all same-backbone requesters a
shared committee (minus themselves), which keeps the number of trained
validators per period at most n+1 per backbone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backbones import BackboneKind
from .errors import ConsensusError
from .selection import AlgorithmAssignment


@dataclass(frozen=True)
class Committee:
    requester: int
    period: int
    backbone: BackboneKind
    validators: tuple[int, ...]


@dataclass(frozen=True)
class VoteContext:
    """One candidate edge plus the shared negative destinations."""

    positive: tuple[int, int]
    negatives: tuple[int, ...]
    period: int


@dataclass
class VerificationResult:
    context: VoteContext
    votes: tuple[bool, ...]
    decision: bool
    agree_count: int
    requester: int = -1
    k: int = 0  # number of candidates (1 positive + len(negatives))

    @property
    def unanimous(self) -> bool:
        return self.decision and all(self.votes)


def sample_committee(assignment: AlgorithmAssignment, requester: int,
                     n: int, rng: np.random.Generator) -> Committee:
    """Uniform committee of min(n, pool size) validators, requester
    excluded, clamped rather than sampled with replacement."""
    if n < 1:
        raise ConsensusError("committee size must be >= 1")
    kind = assignment.choices.get(requester)
    if kind is None:
        raise ConsensusError(f"user {requester} has no backbone assignment")
    pool = assignment.pool_of(kind)
    perm = rng.permutation(np.asarray(pool, dtype=np.int64))
    members = [int(v) for v in perm if v != requester][:n]
    if not members:
        raise ConsensusError(
            f"no validators for backbone {kind} (requester {requester})")
    return Committee(requester, -1, kind, tuple(members))


def committee_from_permutation(perm, requester: int, n: int, period: int,
                               kind: BackboneKind) -> Committee:
    """Committee as the first n permutation entries that are not the
    requester (the shared-permutation fast path)."""
    members = [int(v) for v in perm if v != requester][:n]
    if not members:
        raise ConsensusError(
            f"no validators for backbone {kind} (requester {requester})")
    return Committee(requester, period, kind, tuple(members))


def cast_vote(scorer, ctx: VoteContext) -> bool:
    """True iff the positive outranks every sampled negative (strictly).

    An empty negative set is vacuously true. Ranks on logits when the
    scorer exposes them (sigmoid-monotone, saturation-free).
    """
    p, q = ctx.positive
    if not ctx.negatives:
        return True
    rank = getattr(scorer, "pair_logits", scorer.score_pairs)
    pos = rank(np.asarray([p]), np.asarray([q]))[0]
    neg = rank(np.full(len(ctx.negatives), p, dtype=np.int64),
               np.asarray(ctx.negatives, dtype=np.int64))
    return bool(pos > neg.max())


def verify(votes) -> tuple[bool, int]:
    """Majority decision: accept iff agree_count > floor(n/2)."""
    votes = list(votes)
    if not votes:
        raise ConsensusError("empty vote list")
    agree = sum(1 for v in votes if v)
    return agree > len(votes) // 2, agree


def batch_requests(items: list, batch_size: int) -> list[list]:
    """Contiguous chunks of batch_size (last may be smaller)."""
    if batch_size < 1:
        raise ConsensusError("batch size must be >= 1")
    return [items[i:i + batch_size]
            for i in range(0, len(items), batch_size)]


@dataclass
class PeriodVotes:
    """All verification results of one test period."""

    period: int
    results: list[VerificationResult] = field(default_factory=list)
    validator_set: set[int] = field(default_factory=set)
    committees: dict[int, Committee] = field(default_factory=dict)


def run_period(queries, committees: dict[int, Committee],
               scorers: dict[int, "object"], k_values, b_req: int,
               b_vote: int, period: int,
               per_validator_negatives=None) -> PeriodVotes:
    """Vote on every query with its requester's committee.

    `queries` carry the positive edge and max(k_values)-1 nested
    negatives (see evaluation.build_queries); one VerificationResult is
    emitted per (query, K) with the K-1 negative prefix. Requests are
    processed in per-requester batches of b_req and aggregated in batches
    of b_vote; batching affects iteration only, never results.

    When `per_validator_negatives(query_index, validator)` is given, each
    validator draws its own negative set instead of sharing the query's.
    """
    out = PeriodVotes(period)
    for committee in committees.values():
        out.validator_set.update(committee.validators)
    out.committees = committees
    k_values = sorted(k_values)

    by_requester: dict[int, list] = {}
    for index, query in enumerate(queries):
        by_requester.setdefault(query.positive[0], []).append((index, query))

    pending = []
    for requester in sorted(by_requester):
        committee = committees[requester]
        for batch in batch_requests(by_requester[requester], b_req):
            for index, query in batch:
                pending.append((committee, index, query))

    for vote_batch in batch_requests(pending, b_vote):
        for committee, index, query in vote_batch:
            p, q = query.positive
            shared = np.asarray(query.negatives, dtype=np.int64)
            # Per-validator logits for the positive and all negatives,
            # shared across the nested K prefixes.
            member_pos = []
            member_neg = []
            for validator in committee.validators:
                scorer = scorers[validator]
                rank = getattr(scorer, "pair_logits", scorer.score_pairs)
                if per_validator_negatives is None:
                    negs = shared
                else:
                    negs = np.asarray(
                        per_validator_negatives(index, validator),
                        dtype=np.int64)
                member_pos.append(
                    rank(np.asarray([p], dtype=np.int64),
                         np.asarray([q], dtype=np.int64))[0])
                member_neg.append(
                    rank(np.full(negs.shape[0], p, dtype=np.int64), negs))
            for k in k_values:
                take = k - 1
                votes = []
                for pos_logit, neg_logits in zip(member_pos, member_neg):
                    if take == 0:
                        votes.append(True)
                    else:
                        votes.append(bool(pos_logit >
                                          neg_logits[:take].max()))
                decision, agree = verify(votes)
                out.results.append(VerificationResult(
                    context=VoteContext((p, q),
                                        tuple(int(x) for x in shared[:take]),
                                        period),
                    votes=tuple(votes), decision=decision, agree_count=agree,
                    requester=p, k=k))
    return out
