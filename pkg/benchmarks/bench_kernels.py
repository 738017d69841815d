#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Builds a preferential-attachment graph at the desk-run scale, then times
each kernel on representative shapes (the self-loop CSR of the cumulative
view, embed_dim-wide features). Also times one full training epoch per
backbone under each backend.

Usage: python benchmarks/bench_kernels.py [--users 1899] [--edges 59835]
"""

import argparse
import time

import numpy as np

from desocial import graph_store as gs
from desocial._kernels import _numpy_impl
from desocial.backbones import CANONICAL_POOL, TrainingHyper, init_scorer

try:
    from desocial._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(view, d):
    indptr, indices, rows = view.loop_csr()
    data = view.sym_norm_data()
    rng = np.random.default_rng(0)
    x = rng.normal(size=(view.num_users, d))
    logits = rng.normal(size=indices.shape[0])
    attn = rng.normal(size=d)
    grads = rng.normal(size=(indices.shape[0], d))

    cases = [
        ("csr_matmul", lambda impl: impl.csr_matmul(indptr, indices, data,
                                                    x)),
        ("segment_softmax", lambda impl: impl.segment_softmax(indptr,
                                                              logits)),
        ("edge_rowdot", lambda impl: impl.edge_rowdot(rows, indices, x, x)),
        ("scatter_rows_add", lambda impl: impl.scatter_rows_add(
            rows, grads, view.num_users)),
        ("gat_edge_logits", lambda impl: impl.gat_edge_logits(
            rows, indices, x, x, attn, 0.2)),
        ("gat_edge_logits_backward", lambda impl:
            impl.gat_edge_logits_backward(rows, indices, x, x, attn, 0.2,
                                          logits)),
    ]
    print(f"\nkernels on |V|={view.num_users} |E+loops|={indices.shape[0]} "
          f"d={d}")
    print(f"{'kernel':<26}{'numpy':>10}{'compiled':>10}{'speedup':>9}")
    for name, fn in cases:
        t_py = timeit(lambda: fn(_numpy_impl))
        if _core is None:
            print(f"{name:<26}{t_py * 1e3:9.2f}ms{'-':>10}{'-':>9}")
            continue
        t_c = timeit(lambda: fn(_core))
        got, want = fn(_core), fn(_numpy_impl)
        if not isinstance(got, tuple):
            got, want = (got,), (want,)
        for g, w in zip(got, want):
            np.testing.assert_allclose(g, w, rtol=1e-9, atol=1e-12)
        print(f"{name:<26}{t_py * 1e3:9.2f}ms{t_c * 1e3:9.2f}ms"
              f"{t_py / t_c:8.1f}x")


def bench_epoch(view, supervision, d):
    import os

    from desocial import _kernels
    from desocial import autograd as ag

    src = np.asarray([e[0] for e in supervision], dtype=np.int64)
    dst = np.asarray([e[1] for e in supervision], dtype=np.int64)

    def one_epoch(scorer, rng):
        for p in scorer.params.values():
            p.grad = None
        z = scorer.encode(view, training=True, rng=rng)
        pos = ag.pair_dots(z, src, dst)
        neg = ag.pair_dots(z, src, (dst + 7) % view.num_users)
        loss = ag.binary_cross_entropy_with_logits(pos, neg)
        loss.backward()

    print(f"\nfull train epoch (forward+backward, {len(src)} positives, "
          f"d={d}) with backend '{_kernels.BACKEND}'")
    for kind in CANONICAL_POOL:
        hyper = TrainingHyper(embed_dim=d, dropout=0.3)
        scorer = init_scorer(kind, view.num_users, hyper, seed=1)
        rng = np.random.default_rng(2)
        one_epoch(scorer, rng)  # warm caches
        t = timeit(lambda: one_epoch(scorer, rng), repeats=3)
        print(f"  {str(kind):<6} {t * 1e3:8.1f} ms/epoch")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--users", type=int, default=1899)
    parser.add_argument("--edges", type=int, default=59835)
    parser.add_argument("--dim", type=int, default=64)
    args = parser.parse_args()

    print(f"generating preferential stream: {args.users} users, "
          f"{args.edges} interactions")
    seq = gs.generate_synthetic(args.users, args.edges, 40,
                                model="preferential", seed=1)
    view = seq.view(29)
    bench_kernels(view, args.dim)
    bench_epoch(view, seq.snapshots[29].sorted_edges(), args.dim)
    if _core is None:
        print("\ncompiled core unavailable; numpy numbers only")


if __name__ == "__main__":
    main()
