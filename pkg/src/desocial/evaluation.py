"""Consensus-based evaluation: Acc@K queries and reports, full agreement
by degree quartile, pool sweeps and committee-size gain curves.

Acc@K asks whether the decision procedure ranks a true test edge above
K-1 sampled alternatives. Negative sets are nested across the configured
K values (the K=5 set contains the K=3 set contains the K=2 set), which
makes Acc@2 >= Acc@3 >= Acc@5 a structural invariant: extra negatives can
only flip votes from true to false.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, SamplingError
from .graph_store import CumulativeView, Snapshot, sample_negatives


@dataclass(frozen=True)
class EvalQuery:
    """One test edge plus max(Ks)-1 nested negative destinations."""

    positive: tuple[int, int]
    negatives: tuple[int, ...]
    period: int

    def negative_set(self, k: int) -> tuple[int, ...]:
        return self.negatives[:k - 1]


@dataclass
class QueryBundle:
    queries: list[EvalQuery]
    skipped: int
    period: int


@dataclass
class AccReport:
    """Per-period and overall Acc@K for one decision method."""

    method: str
    per_period: dict[tuple[int, int], float] = field(default_factory=dict)
    query_count: dict[int, int] = field(default_factory=dict)

    def add_period(self, period: int, k: int, accuracy: float,
                   count: int) -> None:
        self.per_period[(period, k)] = accuracy
        self.query_count[period] = count

    @property
    def overall(self) -> dict[int, float]:
        ks = sorted({k for _, k in self.per_period})
        out = {}
        for k in ks:
            num = den = 0.0
            for (period, kk), acc in self.per_period.items():
                if kk != k:
                    continue
                n = self.query_count[period]
                num += acc * n
                den += n
            out[k] = num / den if den else float("nan")
        return out


@dataclass
class AgreementReport:
    """Unanimity proportion among accepted queries, per degree quartile.

    Quartiles with no accepted queries report None.
    """

    accepted: dict[int, int] = field(default_factory=dict)
    unanimous: dict[int, int] = field(default_factory=dict)

    def add(self, quartile: int, accepted: int, unanimous: int) -> None:
        self.accepted[quartile] = self.accepted.get(quartile, 0) + accepted
        self.unanimous[quartile] = self.unanimous.get(quartile, 0) + unanimous

    @property
    def per_quartile(self) -> dict[int, float | None]:
        out = {}
        for q in range(4):
            acc = self.accepted.get(q, 0)
            out[q] = (self.unanimous.get(q, 0) / acc) if acc else None
        return out


def build_queries(test: Snapshot, view: CumulativeView, k_values,
                  rng_for_query, period: int | None = None) -> QueryBundle:
    """One query per test edge with nested negatives.

    `rng_for_query(index)` returns the independent stream of the index-th
    edge in canonical (src, dst) order, so query sets are identical for
    every method variant under one seed. Edges whose negative pool is
    exhausted are skipped and counted.
    """
    k_max = max(k_values)
    period = test.index if period is None else period
    queries: list[EvalQuery] = []
    skipped = 0
    for index, (p, q) in enumerate(test.sorted_edges()):
        rng = rng_for_query(index)
        try:
            negs = sample_negatives(view, p, k_max - 1, exclude=(q,), rng=rng)
        except SamplingError:
            skipped += 1
            continue
        queries.append(EvalQuery((p, q), tuple(int(x) for x in negs), period))
    return QueryBundle(queries, skipped, period)


def acc_single(scorer, queries, k: int) -> float:
    """Fraction of queries whose positive outranks its K-1 negatives
    under one scorer (strict comparison, on logits)."""
    if not queries:
        return float("nan")
    hits = 0
    rank = getattr(scorer, "pair_logits", scorer.score_pairs)
    for query in queries:
        p, q = query.positive
        negs = query.negative_set(k)
        if not negs:
            hits += 1
            continue
        pos = rank(np.asarray([p], dtype=np.int64),
                   np.asarray([q], dtype=np.int64))[0]
        neg = rank(np.full(len(negs), p, dtype=np.int64),
                   np.asarray(negs, dtype=np.int64))
        hits += bool(pos > neg.max())
    return hits / len(queries)


def acc_consensus(results, k: int,
                  expected_queries: int | None = None) -> float:
    """Fraction of majority-accepted positives among the K-variant
    results of one period's vote stream."""
    selected = [r for r in results if r.k == k]
    if expected_queries is not None and len(selected) != expected_queries:
        raise EvaluationError(
            f"result/query mismatch: {len(selected)} results for "
            f"{expected_queries} queries at K={k}")
    if not selected:
        return float("nan")
    return sum(1 for r in selected if r.decision) / len(selected)


def full_agreement_by_quartile(results, quartiles, k: int = 2
                               ) -> AgreementReport:
    """Among accepted (majority-true) K-variant queries per quartile, the
    proportion whose votes were unanimously true. Quartile membership is
    the requester's."""
    member: dict[int, int] = {}
    for qi, group in enumerate(quartiles):
        for u in group:
            member[int(u)] = qi
    report = AgreementReport()
    for qi in range(4):
        report.add(qi, 0, 0)
    for r in results:
        if r.k != k or not r.decision:
            continue
        qi = member.get(r.requester)
        if qi is None:
            raise EvaluationError(
                f"requester {r.requester} not in any quartile")
        report.add(qi, 1, 1 if all(r.votes) else 0)
    return report


def gain_curve(consensus_by_n: dict[int, AccReport],
               baseline: AccReport) -> dict[int, float]:
    """Mean over K of (consensus overall Acc@K - baseline overall Acc@K)
    for each committee size."""
    out = {}
    base = baseline.overall
    for n, report in sorted(consensus_by_n.items()):
        overall = report.overall
        ks = sorted(base)
        out[n] = float(np.mean([overall[k] - base[k] for k in ks]))
    return out


def prefix_majorities(results, n_values) -> dict[int, list[bool]]:
    """Majority decisions over vote prefixes of each size in n_values.

    Valid when committees were sampled as permutation prefixes: the first
    n votes of a size-n_max committee are exactly the size-n committee's.
    Sizes clamp to the available vote count.
    """
    out: dict[int, list[bool]] = {n: [] for n in n_values}
    for r in results:
        for n in n_values:
            take = min(n, len(r.votes))
            agree = sum(1 for v in r.votes[:take] if v)
            out[n].append(agree > take // 2)
    return out
