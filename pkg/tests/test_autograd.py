"""VJP correctness of every autograd op against central finite
differences, plus tape mechanics (diamond graphs, broadcasting)."""

import numpy as np
import pytest

from desocial import autograd as ag


def fd_check(make_loss, params, rng, eps=1e-6, rtol=1e-6, n_coords=8):
    """Analytic grads of a scalar loss vs central differences."""
    for p in params:
        p.grad = None
    loss = make_loss()
    loss.backward()
    grads = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
             for p in params]
    for p, g in zip(params, grads):
        flat = p.data.ravel()
        gflat = g.ravel()
        for i in rng.choice(flat.size, size=min(n_coords, flat.size),
                            replace=False):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(make_loss().data)
            flat[i] = orig - eps
            down = float(make_loss().data)
            flat[i] = orig
            fd = (up - down) / (2 * eps)
            assert abs(fd - gflat[i]) <= rtol * max(abs(fd), abs(gflat[i]),
                                                    1.0), \
                f"coord {i}: fd={fd} analytic={gflat[i]}"


def scalarize(t):
    ones = np.ones_like(t.data)
    out = ag.Tensor(np.sum(t.data * ones), (t,))
    out._vjp = lambda g: t._accumulate(g * ones)
    return out


def test_matmul_add_relu_chain():
    rng = np.random.default_rng(0)
    a = ag.Parameter(rng.normal(size=(5, 4)))
    w = ag.Parameter(rng.normal(size=(4, 3)))
    b = ag.Parameter(rng.normal(size=(1, 3)))
    fd_check(lambda: scalarize(ag.relu(ag.add(ag.matmul(a, w), b))),
             [a, w, b], rng)


def test_bias_broadcast_gradient_shape():
    a = ag.Parameter(np.ones((6, 3)))
    b = ag.Parameter(np.zeros((1, 3)))
    out = scalarize(ag.add(a, b))
    out.backward()
    assert b.grad.shape == (1, 3)
    np.testing.assert_allclose(b.grad, 6.0)


def test_diamond_graph_accumulates_both_paths():
    x = ag.Parameter(np.array([2.0]))
    y = ag.add(x, x)  # dy/dx = 2
    z = ag.add(y, x)  # dz/dx = 3
    z.backward()
    np.testing.assert_allclose(x.grad, 3.0)


def test_gather_and_pair_dots():
    rng = np.random.default_rng(1)
    z = ag.Parameter(rng.normal(size=(8, 4)))
    idx = np.array([0, 3, 3, 7], dtype=np.int64)
    fd_check(lambda: scalarize(ag.gather_rows(z, idx)), [z], rng)
    src = np.array([0, 1, 1], dtype=np.int64)
    dst = np.array([2, 2, 5], dtype=np.int64)
    fd_check(lambda: scalarize(ag.pair_dots(z, src, dst)), [z], rng)


def _sym_structure(rng, n, m):
    pairs = set()
    while len(pairs) < m:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    arr = np.asarray(sorted(pairs), dtype=np.int64)
    both = np.concatenate([arr, arr[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, both[:, 0] + 1, 1)
    np.cumsum(indptr, out=indptr)
    rows = np.ascontiguousarray(both[:, 0])
    cols = np.ascontiguousarray(both[:, 1])
    tperm = np.lexsort((rows, cols))
    return indptr, rows, cols, tperm


def test_csr_propagate_vjp():
    rng = np.random.default_rng(2)
    indptr, rows, cols, tperm = _sym_structure(rng, 9, 12)
    data = rng.normal(size=cols.shape[0])
    data_t = data[tperm]
    x = ag.Parameter(rng.normal(size=(9, 3)))
    fd_check(lambda: scalarize(
        ag.csr_propagate(x, indptr, cols, data, data_t)), [x], rng)


def test_edge_softmax_and_aggregate_vjp():
    rng = np.random.default_rng(3)
    indptr, rows, cols, tperm = _sym_structure(rng, 10, 14)
    logits = ag.Parameter(rng.normal(size=cols.shape[0]))
    values = ag.Parameter(rng.normal(size=(10, 3)))

    def loss():
        alpha = ag.edge_softmax(logits, indptr)
        return scalarize(ag.edge_aggregate(alpha, values, indptr, cols,
                                           rows, tperm))

    fd_check(loss, [logits, values], rng)


def test_gat_attention_logits_vjp():
    rng = np.random.default_rng(4)
    indptr, rows, cols, _ = _sym_structure(rng, 8, 10)
    s = ag.Parameter(rng.normal(size=(8, 4)))
    t = ag.Parameter(rng.normal(size=(8, 4)))
    a = ag.Parameter(rng.normal(size=4))
    fd_check(lambda: scalarize(
        ag.gat_attention_logits(s, t, a, rows, cols, 0.2)), [s, t, a], rng)


def test_bce_with_logits_matches_reference():
    rng = np.random.default_rng(5)
    pos = ag.Parameter(rng.normal(size=7))
    neg = ag.Parameter(rng.normal(size=5))
    loss = ag.binary_cross_entropy_with_logits(pos, neg)
    p = 1.0 / (1.0 + np.exp(-pos.data))
    q = 1.0 / (1.0 + np.exp(-neg.data))
    ref = (-np.log(p).sum() - np.log1p(-q).sum()) / 12
    np.testing.assert_allclose(float(loss.data), ref, rtol=1e-12)
    fd_check(lambda: ag.binary_cross_entropy_with_logits(pos, neg),
             [pos, neg], rng)


def test_backward_requires_scalar():
    t = ag.Parameter(np.ones((2, 2)))
    with pytest.raises(ValueError):
        t.backward()


def test_mul_const_and_concat():
    rng = np.random.default_rng(6)
    a = ag.Parameter(rng.normal(size=(4, 3)))
    b = ag.Parameter(rng.normal(size=(4, 2)))
    mask = rng.random(size=(4, 3))
    fd_check(lambda: scalarize(ag.mul_const(a, mask)), [a], rng)
    fd_check(lambda: scalarize(ag.concat_cols(a, b)), [a, b], rng)
