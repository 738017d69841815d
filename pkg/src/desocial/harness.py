"""Experiment orchestration under the rolling leave-one-out protocol.

For each test period p (predicting slice p):
  1. requesters are the sources of slice p's edges;
  2. every requester picks a backbone (strategy-dependent) by evaluating
     the cached previous-period candidate scorers on its neighborhood in
     the cumulative view at p-1;
  3. committees are sampled per backbone from the users sharing it;
  4. only committee members' scorers (plus one canonical scorer per pool
     backbone, used for the single-model baseline and as the next
     period's selection candidates) are trained: message graph is the
     cumulative view at p-2, supervision is slice p-1 with a 10% held-out
     validation split, early stopping on validation Acc@2;
  5. trained scorers are bound to the view at p-1 and vote on the test
     queries; majority decisions and the per-backbone baselines are
     scored as Acc@K, and unanimity is tallied per degree quartile.

All randomness is derived from (seed, tag, period, entity); per-validator
training tasks are independent and may run on a thread pool without
changing any result.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import seeds as sd
from .backbones import (BackboneKind, LinkScorer, TrainingHyper, init_scorer,
                        train_scorer)
from .config import ExperimentConfig, thread_count
from .consensus import (Committee, PeriodVotes, committee_from_permutation,
                        run_period)
from .errors import ConfigError, DesocialError
from .evaluation import (AccReport, AgreementReport, QueryBundle, acc_consensus,
                         acc_single, build_queries, full_agreement_by_quartile,
                         prefix_majorities)
from .graph_store import (CumulativeView, SnapshotSequence, cumulative_view,
                          generate_synthetic, ingest_edge_list,
                          partition_slices, quartile_partition)
from .selection import AlgorithmAssignment, assign_all

_KIND_ID = {kind: i for i, kind in enumerate(BackboneKind)}


def load_dataset(spec: str, num_slices: int) -> SnapshotSequence:
    """Either an edge-list path or `synthetic:users=..,edges=..,
    model=..,seed=..`."""
    if spec.startswith("synthetic:"):
        params = {}
        for part in spec[len("synthetic:"):].split(","):
            key, _, value = part.partition("=")
            params[key.strip()] = value.strip()
        try:
            return generate_synthetic(
                int(params.get("users", 200)),
                int(params.get("edges", 6000)),
                num_slices,
                model=params.get("model", "preferential"),
                seed=int(params.get("seed", 1)))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad synthetic spec {spec!r}: {exc}") from exc
    result = ingest_edge_list(spec)
    return partition_slices(result.edges, num_slices)


def _empty_view(num_users: int) -> CumulativeView:
    return CumulativeView(-1, num_users,
                          np.zeros(num_users + 1, dtype=np.int64),
                          np.zeros(0, dtype=np.int64))


def _view(seq: SnapshotSequence, t: int) -> CumulativeView:
    if t < 0:
        return _empty_view(seq.num_users)
    return cumulative_view(seq, t)


def _prewarm(view: CumulativeView) -> None:
    # Build the lazily cached derived structures in the main thread so
    # parallel training tasks only read.
    view.loop_csr()
    view.sym_norm_data()
    view.mean_data()
    view.loop_transpose_perm()
    view.pair_keys()


@dataclass
class PeriodPlan:
    """Training/evaluation data layout for one test period."""

    period: int                 # current period t; the test slice is t+1
    train_view: CumulativeView  # cumulative view at t-1 (message graph)
    eval_view: CumulativeView   # cumulative view at t (voting/selection)
    supervision: "object"       # slice t
    test: "object"              # slice t+1
    validator_set: set[int] = field(default_factory=set)
    committees: dict[int, Committee] = field(default_factory=dict)

    @property
    def test_period(self) -> int:
        return self.period + 1


def make_plan(seq: SnapshotSequence, test_period: int) -> PeriodPlan:
    if test_period < 2:
        raise ConfigError(
            "test periods start at 2 (a message view and a supervision "
            "slice must precede the test slice)")
    if test_period >= len(seq):
        raise ConfigError(f"test period {test_period} out of range")
    t = test_period - 1
    return PeriodPlan(
        period=t,
        train_view=_view(seq, t - 1),
        eval_view=_view(seq, t),
        supervision=seq.snapshots[t],
        test=seq.snapshots[test_period],
    )


class ScorerCache:
    """Trained scorers keyed by (seed, supervision period, kind, owner).

    Owner -1 is the canonical scorer of a backbone. Shared across variant
    runs so seed-matched experiments reuse identical trainings.
    """

    def __init__(self):
        self._store: dict = {}

    def key(self, seed, sup_period, kind, owner):
        return (seed, sup_period, kind, owner)

    def get(self, key):
        return self._store.get(key)

    def put(self, key, scorer) -> None:
        self._store[key] = scorer


@dataclass
class SeedRunResult:
    seed: int
    acc: dict[str, AccReport]
    agreement: AgreementReport
    query_counts: dict[int, int]
    skipped: dict[int, int]
    validators: dict[int, int]
    assignments: dict[int, dict[int, str]]
    verification: list[dict]
    prefix_acc: dict[int, AccReport] | None = None


@dataclass
class RunBundle:
    config: ExperimentConfig
    per_seed: list[SeedRunResult]
    wall_seconds: float

    def mean_overall(self, method: str) -> dict[int, float]:
        ks = self.config.K_values
        return {k: float(np.mean([r.acc[method].overall[k]
                                  for r in self.per_seed])) for k in ks}

    def std_overall(self, method: str) -> dict[int, float]:
        ks = self.config.K_values
        return {k: float(np.std([r.acc[method].overall[k]
                                 for r in self.per_seed])) for k in ks}


class _SeedRun:
    """One (seed, config) pipeline execution."""

    def __init__(self, cfg: ExperimentConfig, seq: SnapshotSequence,
                 seed: int, cache: ScorerCache, threads: int,
                 collect_votes: bool = False):
        self.cfg = cfg
        self.seq = seq
        self.seed = seed
        self.scheme = sd.SeedScheme(seed)
        self.cache = cache
        self.threads = threads
        self.collect_votes = collect_votes
        self.candidate_cache: dict[tuple[int, BackboneKind], LinkScorer] = {}

    # -- training ---------------------------------------------------------

    def _split_supervision(self, plan: PeriodPlan):
        """90/10 train/validation split of the supervision slice; each
        held-out edge is paired with one negative for Acc@2 early stop."""
        edges = plan.supervision.sorted_edges()
        rng = self.scheme.rng(sd.TAG_SPLIT, plan.period)
        if len(edges) >= 10:
            n_val = max(1, len(edges) // 10)
            idx = rng.permutation(len(edges))
            val_idx = set(int(i) for i in idx[:n_val])
        else:
            val_idx = set()
        train_edges = [e for i, e in enumerate(edges) if i not in val_idx]
        val_pairs = []
        from .graph_store import sample_negatives
        from .errors import SamplingError
        for i in sorted(val_idx):
            p, q = edges[i]
            try:
                neg = sample_negatives(plan.train_view, p, 1,
                                       exclude=(q,), rng=rng)
            except SamplingError:
                continue
            val_pairs.append((p, q, int(neg[0])))
        if not train_edges:
            train_edges = edges
            val_pairs = []
        return train_edges, val_pairs

    def _grid_hyper(self, kind: BackboneKind, plan: PeriodPlan,
                    train_edges, val_pairs) -> TrainingHyper:
        """Optional per-(period, kind) grid search by validation Acc@2.
        The probe trainings are discarded; only the winning hyper is used
        for the period's real trainings."""
        base = self.cfg.hyper_for(kind)
        if not self.cfg.grid_search or not val_pairs:
            return base
        best, best_score = base, -1.0
        for lr in self.cfg.grid_learning_rates:
            for dropout in self.cfg.grid_dropouts:
                hyper = dataclasses.replace(base, learning_rate=lr,
                                            dropout=dropout)
                scorer = init_scorer(
                    kind, self.seq.num_users, hyper,
                    self.scheme.integer(sd.TAG_TRAIN, plan.period,
                                        _KIND_ID[kind], sd.CANONICAL_OWNER))
                report = train_scorer(
                    scorer, plan.train_view, train_edges, val_pairs,
                    self.scheme.rng(sd.TAG_TRAIN, plan.period,
                                    _KIND_ID[kind], sd.CANONICAL_OWNER),
                    max_period=plan.test_period)
                if report.best_val > best_score:
                    best, best_score = hyper, report.best_val
        return best

    def _train_one(self, kind: BackboneKind, owner: int, plan: PeriodPlan,
                   train_edges, val_pairs, hyper) -> LinkScorer:
        scorer = init_scorer(
            kind, self.seq.num_users, hyper,
            self.scheme.integer(sd.TAG_TRAIN, plan.period,
                                _KIND_ID[kind], owner),
            owner=owner)
        train_scorer(
            scorer, plan.train_view, train_edges, val_pairs,
            self.scheme.rng(sd.TAG_TRAIN, plan.period, _KIND_ID[kind], owner),
            max_period=plan.test_period)
        scorer.bind(plan.eval_view)
        return scorer

    def _train_period_scorers(self, plan: PeriodPlan,
                              assignment: AlgorithmAssignment,
                              kinds_needed) -> dict:
        """Train committee members and canonical scorers (cached)."""
        train_edges, val_pairs = self._split_supervision(plan)
        hyper_by_kind = {k: self._grid_hyper(k, plan, train_edges, val_pairs)
                         for k in set(kinds_needed) | set(self.cfg.pool)}

        tasks = []
        for kind in sorted(set(self.cfg.pool), key=lambda k: _KIND_ID[k]):
            tasks.append((kind, sd.CANONICAL_OWNER))
        for uid in sorted(plan.validator_set):
            tasks.append((assignment.choices[uid], uid))

        todo = []
        for kind, owner in tasks:
            key = self.cache.key(self.seed, plan.period, kind, owner)
            if self.cache.get(key) is None:
                todo.append((key, kind, owner))

        def work(item):
            key, kind, owner = item
            return key, self._train_one(kind, owner, plan, train_edges,
                                        val_pairs, hyper_by_kind[kind])

        if self.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                for key, scorer in pool.map(work, todo):
                    self.cache.put(key, scorer)
        else:
            for item in todo:
                key, scorer = work(item)
                self.cache.put(key, scorer)

        scorers = {}
        for kind, owner in tasks:
            key = self.cache.key(self.seed, plan.period, kind, owner)
            scorer = self.cache.get(key)
            if scorer._bound_upto != plan.eval_view.upto:
                scorer.bind(plan.eval_view)
            if owner == sd.CANONICAL_OWNER:
                scorers[("canonical", kind)] = scorer
            else:
                scorers[uid_key(owner)] = scorer
        return scorers

    # -- selection --------------------------------------------------------

    def _candidate_scorers(self, plan: PeriodPlan) -> dict:
        """Previous-period canonical scorers, re-encoded on the current
        view (parameters trained through period-(t-1) data)."""
        out = {}
        prev_sup = plan.period - 1
        prev_msg = _view(self.seq, plan.period - 2)
        _prewarm(prev_msg)
        edges = self.seq.snapshots[prev_sup].sorted_edges() \
            if prev_sup >= 0 else []
        rng = self.scheme.rng(sd.TAG_SPLIT, prev_sup)
        for kind in self.cfg.pool:
            key = self.cache.key(self.seed, prev_sup, kind,
                                 sd.CANONICAL_OWNER)
            scorer = self.cache.get(key)
            if scorer is None:
                hyper = self.cfg.hyper_for(kind)
                seed_int = self.scheme.integer(sd.TAG_TRAIN, prev_sup,
                                               _KIND_ID[kind],
                                               sd.CANONICAL_OWNER)
                scorer = init_scorer(kind, self.seq.num_users, hyper,
                                     seed_int, owner=sd.CANONICAL_OWNER)
                if edges:
                    train_scorer(
                        scorer, prev_msg, edges, [],
                        self.scheme.rng(sd.TAG_TRAIN, prev_sup,
                                        _KIND_ID[kind], sd.CANONICAL_OWNER),
                        max_period=plan.period)
                self.cache.put(key, scorer)
            if scorer._bound_upto != plan.eval_view.upto:
                scorer.bind(plan.eval_view)
            out[kind] = scorer
        return out

    def _assign(self, plan: PeriodPlan, requesters) -> AlgorithmAssignment:
        cfg = self.cfg
        if cfg.strategy == "fixed":
            return assign_all("fixed", requesters, pool=cfg.pool,
                              fixed_kind=cfg.fixed_backbone)
        if cfg.strategy == "personalized":
            candidates = self._candidate_scorers(plan)
        else:
            candidates = None
        test_period = plan.test_period

        def rng_for_user(u):
            tag = sd.TAG_ASSIGN if cfg.strategy == "random" else sd.TAG_SELECT
            return self.scheme.rng(tag, test_period, u)

        return assign_all(cfg.strategy, requesters, pool=cfg.pool,
                          view=plan.eval_view, seq=self.seq,
                          candidate_scorers=candidates, gamma=cfg.gamma,
                          alpha=cfg.alpha, rng_for_user=rng_for_user)

    # -- one period -------------------------------------------------------

    def run_test_period(self, test_period: int):
        cfg = self.cfg
        plan = make_plan(self.seq, test_period)
        _prewarm(plan.train_view)
        _prewarm(plan.eval_view)

        requesters = plan.test.sources
        if not requesters:
            return None

        queries = build_queries(
            plan.test, plan.eval_view, cfg.K_values,
            lambda index: self.scheme.rng(sd.TAG_QUERY, test_period, index),
            period=test_period)
        if not queries.queries:
            return None
        live_requesters = sorted({q.positive[0] for q in queries.queries})

        assignment = self._assign(plan, requesters)

        perms = {}
        committees = {}
        for requester in live_requesters:
            kind = assignment.choices[requester]
            if kind not in perms:
                pool = np.asarray(assignment.pool_of(kind), dtype=np.int64)
                rng = self.scheme.rng(sd.TAG_COMMITTEE, test_period,
                                      _KIND_ID[kind])
                perms[kind] = rng.permutation(pool)
            committees[requester] = committee_from_permutation(
                perms[kind], requester, cfg.n, test_period, kind)
        plan.committees = committees
        for committee in committees.values():
            plan.validator_set.update(committee.validators)

        kinds_needed = [assignment.choices[u] for u in plan.validator_set]
        scorers = self._train_period_scorers(plan, assignment, kinds_needed)
        validator_scorers = {uid: scorers[uid_key(uid)]
                             for uid in plan.validator_set}

        per_validator = None
        if cfg.per_validator_negatives:
            per_validator = self._per_validator_negatives(plan, queries)

        votes = run_period(queries.queries, committees, validator_scorers,
                           cfg.K_values, cfg.B_req, cfg.B_vote, test_period,
                           per_validator_negatives=per_validator)

        singles = {kind: scorers[("canonical", kind)]
                   for kind in cfg.pool}
        return plan, queries, assignment, votes, singles

    def _per_validator_negatives(self, plan: PeriodPlan,
                                 queries: QueryBundle):
        """Per-(query, validator) negative draws for the Eq.-9-literal
        voting variant."""
        from .graph_store import sample_negatives
        k_max = max(self.cfg.K_values)
        cache = {}

        def supply(index, validator):
            key = (index, validator)
            if key not in cache:
                query = queries.queries[index]
                rng = self.scheme.rng(sd.TAG_QUERY, plan.test_period,
                                      index, validator)
                cache[key] = tuple(int(x) for x in sample_negatives(
                    plan.eval_view, query.positive[0], k_max - 1,
                    exclude=(query.positive[1],), rng=rng))
            return cache[key]

        return supply

    # -- full seed run ----------------------------------------------------

    def run(self, n_values=None) -> SeedRunResult:
        cfg = self.cfg
        acc: dict[str, AccReport] = {"consensus": AccReport("consensus")}
        for kind in cfg.pool:
            acc[f"single_{kind.value}"] = AccReport(f"single_{kind.value}")
        agreement = AgreementReport()
        query_counts: dict[int, int] = {}
        skipped: dict[int, int] = {}
        validators: dict[int, int] = {}
        assignments: dict[int, dict[int, str]] = {}
        verification: list[dict] = []
        prefix_acc = {n: AccReport(f"consensus_n{n}") for n in n_values} \
            if n_values else None

        for test_period in cfg.test_periods():
            outcome = self.run_test_period(test_period)
            if outcome is None:
                continue
            plan, queries, assignment, votes, singles = outcome
            n_queries = len(queries.queries)
            query_counts[test_period] = n_queries
            skipped[test_period] = queries.skipped
            validators[test_period] = len(plan.validator_set)
            assignments[test_period] = {
                u: kind.value for u, kind in sorted(assignment.choices.items())}

            for k in cfg.K_values:
                acc["consensus"].add_period(
                    test_period, k,
                    acc_consensus(votes.results, k,
                                  expected_queries=n_queries),
                    n_queries)
                for kind in cfg.pool:
                    acc[f"single_{kind.value}"].add_period(
                        test_period, k,
                        acc_single(singles[kind], queries.queries, k),
                        n_queries)

            if prefix_acc is not None:
                k2_results = {k: [r for r in votes.results if r.k == k]
                              for k in cfg.K_values}
                for n in prefix_acc:
                    for k in cfg.K_values:
                        decisions = prefix_majorities(k2_results[k], [n])[n]
                        prefix_acc[n].add_period(
                            test_period, k,
                            sum(decisions) / len(decisions), n_queries)

            live = sorted(set(q.positive[0] for q in queries.queries))
            if len(live) >= 4:
                quartiles = quartile_partition(plan.eval_view, live)
                period_agreement = full_agreement_by_quartile(
                    votes.results, quartiles, k=2)
                for qi in range(4):
                    agreement.add(qi, period_agreement.accepted.get(qi, 0),
                                  period_agreement.unanimous.get(qi, 0))

            if self.collect_votes:
                for r in votes.results:
                    verification.append({
                        "period": test_period,
                        "requester": r.requester,
                        "target": r.context.positive[1],
                        "k": r.k,
                        "negatives": list(r.context.negatives),
                        "votes": [int(v) for v in r.votes],
                        "decision": int(r.decision),
                    })

        return SeedRunResult(self.seed, acc, agreement, query_counts,
                             skipped, validators, assignments, verification,
                             prefix_acc)


def uid_key(uid: int):
    return ("validator", uid)


def run_experiment(cfg: ExperimentConfig, cache: ScorerCache | None = None,
                   n_values=None, collect_votes: bool = True) -> RunBundle:
    cfg = cfg.resolved()
    start = time.perf_counter()
    seq = load_dataset(cfg.dataset, cfg.T)
    if cfg.end_test_period >= len(seq):
        raise ConfigError("end_test_period beyond the last slice")
    cache = cache if cache is not None else ScorerCache()
    threads = thread_count()
    per_seed = []
    for seed in cfg.seeds:
        run = _SeedRun(cfg, seq, seed, cache, threads,
                       collect_votes=collect_votes)
        per_seed.append(run.run(n_values=n_values))
    return RunBundle(cfg, per_seed, time.perf_counter() - start)


ABLATION_VARIANTS = ("single", "no_personalized", "random_select",
                     "simple_select", "no_consensus")


def ablation_config(cfg: ExperimentConfig, variant: str,
                    backbone: BackboneKind | None = None) -> ExperimentConfig:
    """Translate an ablation variant into a concrete configuration."""
    name = variant
    if "(" in variant:
        name, _, inner = variant.partition("(")
        from .backbones import parse_kind
        backbone = parse_kind(inner.rstrip(")"))
    if name not in ABLATION_VARIANTS:
        raise ConfigError(f"unknown ablation variant {variant!r}")
    if name == "single":
        if backbone is None:
            raise ConfigError("single variant needs a backbone")
        return dataclasses.replace(cfg, strategy="fixed",
                                   fixed_backbone=backbone, n=1)
    if name == "no_personalized":
        if backbone is None:
            raise ConfigError("no_personalized variant needs a backbone")
        return dataclasses.replace(cfg, strategy="fixed",
                                   fixed_backbone=backbone)
    if name == "random_select":
        return dataclasses.replace(cfg, strategy="random",
                                   fixed_backbone=None)
    if name == "simple_select":
        return dataclasses.replace(cfg, strategy="rule",
                                   fixed_backbone=None)
    return dataclasses.replace(cfg, strategy="personalized",
                               fixed_backbone=None, n=1)


def run_ablation(cfg: ExperimentConfig, variant: str,
                 backbone: BackboneKind | None = None,
                 cache: ScorerCache | None = None) -> RunBundle:
    return run_experiment(ablation_config(cfg, variant, backbone),
                          cache=cache)


def gain_vs_n(cfg: ExperimentConfig, n_values,
              cache: ScorerCache | None = None
              ) -> tuple[RunBundle, dict[int, float]]:
    """Run once at max(n_values); evaluate every n on committee-prefix
    votes. Returns the bundle and the mean-gain curve (vs n=1)."""
    n_values = sorted(set(int(n) for n in n_values))
    run_cfg = dataclasses.replace(cfg, n=max(n_values))
    bundle = run_experiment(run_cfg, cache=cache, n_values=n_values)
    gains = {}
    for n in n_values:
        diffs = []
        for result in bundle.per_seed:
            base = result.prefix_acc[1].overall
            cur = result.prefix_acc[n].overall
            diffs.append(np.mean([cur[k] - base[k]
                                  for k in sorted(base)]))
        gains[n] = float(np.mean(diffs))
    return bundle, gains


def pool_sweep(cfg: ExperimentConfig, subsets,
               cache: ScorerCache | None = None) -> list[dict]:
    """Personalized runs restricted to each subset; flags subsets whose
    Acc beats every singleton member's."""
    cache = cache if cache is not None else ScorerCache()
    subsets = [tuple(s) for s in subsets]
    needed = set(subsets)
    for subset in subsets:
        for kind in subset:
            needed.add((kind,))
    results: dict[tuple, dict[int, float]] = {}
    for subset in sorted(needed, key=lambda s: (len(s),
                                                [_KIND_ID[k] for k in s])):
        sub_cfg = dataclasses.replace(cfg, pool=subset,
                                      strategy="personalized",
                                      fixed_backbone=None)
        bundle = run_experiment(sub_cfg, cache=cache, collect_votes=False)
        results[subset] = bundle.mean_overall("consensus")
    rows = []
    for subset in subsets:
        accs = results[subset]
        row = {"subset": "+".join(k.value for k in subset)}
        for k, acc_value in accs.items():
            best_single = max(results[(kind,)][k] for kind in subset)
            row[f"acc@{k}"] = acc_value
            row[f"improved@{k}"] = bool(acc_value > best_single) \
                if len(subset) > 1 else False
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _atomic_write(path: str, data: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(data)
    os.replace(tmp, path)


def bundle_to_report(bundle: RunBundle) -> dict:
    cfg = bundle.config
    report = {
        "config": cfg.to_dict(),
        "seeds": list(cfg.seeds),
        "per_seed": {},
        "aggregate": {"acc_mean": {}, "acc_std": {}},
    }
    methods = sorted(bundle.per_seed[0].acc) if bundle.per_seed else []
    for result in bundle.per_seed:
        seed_block = {
            "acc": {},
            "query_counts": {str(p): c
                             for p, c in sorted(result.query_counts.items())},
            "skipped": {str(p): c for p, c in sorted(result.skipped.items())},
            "validators": {str(p): c
                           for p, c in sorted(result.validators.items())},
            "agreement": {
                "accepted": {str(q): result.agreement.accepted.get(q, 0)
                             for q in range(4)},
                "unanimous": {str(q): result.agreement.unanimous.get(q, 0)
                              for q in range(4)},
                "proportion": {str(q): result.agreement.per_quartile[q]
                               for q in range(4)},
            },
        }
        for method in methods:
            rep = result.acc[method]
            seed_block["acc"][method] = {
                "overall": {str(k): v for k, v in rep.overall.items()},
                "per_period": {f"{p},{k}": v
                               for (p, k), v in sorted(rep.per_period.items())},
            }
        report["per_seed"][str(result.seed)] = seed_block
    for method in methods:
        report["aggregate"]["acc_mean"][method] = {
            str(k): v for k, v in bundle.mean_overall(method).items()}
        report["aggregate"]["acc_std"][method] = {
            str(k): v for k, v in bundle.std_overall(method).items()}
    return report


def emit_report(bundle: RunBundle, output_dir: str) -> dict[str, str]:
    """Write report.json plus the CSV/JSONL interfaces; returns paths.

    report.json is byte-stable for a fixed (config, seeds); the manifest
    carries timing and is not.
    """
    os.makedirs(output_dir, exist_ok=True)
    paths = {}

    report = bundle_to_report(bundle)
    report_path = os.path.join(output_dir, "report.json")
    _atomic_write(report_path,
                  json.dumps(report, sort_keys=True, indent=2) + "\n")
    paths["report"] = report_path

    acc_lines = ["seed,period,K,method,accuracy,query_count"]
    for result in bundle.per_seed:
        for method in sorted(result.acc):
            rep = result.acc[method]
            for (period, k), value in sorted(rep.per_period.items()):
                acc_lines.append(
                    f"{result.seed},{period},{k},{method},{value:.6f},"
                    f"{rep.query_count[period]}")
    acc_path = os.path.join(output_dir, "acc.csv")
    _atomic_write(acc_path, "\n".join(acc_lines) + "\n")
    paths["acc"] = acc_path

    agree_lines = ["seed,quartile,proportion,accepted_count"]
    for result in bundle.per_seed:
        for q in range(4):
            prop = result.agreement.per_quartile[q]
            prop_txt = "" if prop is None else f"{prop:.6f}"
            agree_lines.append(
                f"{result.seed},Q{q + 1},{prop_txt},"
                f"{result.agreement.accepted.get(q, 0)}")
    agree_path = os.path.join(output_dir, "agreement.csv")
    _atomic_write(agree_path, "\n".join(agree_lines) + "\n")
    paths["agreement"] = agree_path

    for result in bundle.per_seed:
        if not result.verification:
            continue
        log_path = os.path.join(output_dir,
                                f"verification_seed{result.seed}.jsonl")
        _atomic_write(log_path, "\n".join(
            json.dumps(rec, sort_keys=True)
            for rec in result.verification) + "\n")
        paths[f"verification_{result.seed}"] = log_path

    assign_dir = os.path.join(output_dir, "assignments")
    os.makedirs(assign_dir, exist_ok=True)
    for result in bundle.per_seed:
        for period, choices in sorted(result.assignments.items()):
            lines = ["user,backbone"]
            lines += [f"{u},{kind}" for u, kind in sorted(choices.items())]
            _atomic_write(os.path.join(
                assign_dir, f"seed{result.seed}_period{period}.csv"),
                "\n".join(lines) + "\n")

    manifest = {
        "config_hash": _config_hash(bundle.config),
        "seeds": list(bundle.config.seeds),
        "wall_seconds": bundle.wall_seconds,
    }
    manifest_path = os.path.join(output_dir, "manifest.json")
    _atomic_write(manifest_path,
                  json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    paths["manifest"] = manifest_path
    return paths


def _config_hash(cfg: ExperimentConfig) -> str:
    import hashlib
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def emit_gain_csv(gains: dict[int, float], output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    lines = ["n,mean_gain"]
    lines += [f"{n},{gain:.6f}" for n, gain in sorted(gains.items())]
    path = os.path.join(output_dir, "gain_vs_n.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def emit_pool_sweep_csv(rows: list[dict], k_values, output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    header = ["subset"]
    for k in k_values:
        header += [f"acc@{k}", f"improved@{k}"]
    lines = [",".join(header)]
    for row in rows:
        cells = [row["subset"]]
        for k in k_values:
            cells.append(f"{row[f'acc@{k}']:.6f}")
            cells.append(str(int(row[f"improved@{k}"])))
        lines.append(",".join(cells))
    path = os.path.join(output_dir, "pool_sweep.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    return path
