"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just the operations the link scorers need: dense affine maps, pointwise
nonlinearities, row gathers, CSR graph propagation, per-edge attention
softmax and pairwise dot products. Graph structure (CSR arrays, edge
lists, dropout masks) is treated as constant; gradients flow only through
float tensors.

Heavy per-edge work is delegated to desocial._kernels so the compiled
backend accelerates both the forward and backward passes.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_vjp")

    def __init__(self, data, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    def backward(self):
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._vjp is not None and node.grad is not None:
                node._vjp(node.grad)

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __add__(self, other):
        return add(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """A leaf tensor updated by the optimizer."""

    def __init__(self, data):
        super().__init__(np.array(data, dtype=np.float64))


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, (a, b))

    def vjp(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out._vjp = vjp
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data @ b.data, (a, b))

    def vjp(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out._vjp = vjp
    return out


def mul_const(a: Tensor, c) -> Tensor:
    """Elementwise product with a constant array (dropout masks, scales)."""
    c = np.asarray(c, dtype=np.float64)
    out = Tensor(a.data * c, (a,))
    out._vjp = lambda g: a._accumulate(g * c)
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0
    out = Tensor(np.where(mask, a.data, 0.0), (a,))
    out._vjp = lambda g: a._accumulate(g * mask)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(np.concatenate([a.data, b.data], axis=1), (a, b))
    split = a.data.shape[1]

    def vjp(g):
        a._accumulate(g[:, :split])
        b._accumulate(g[:, split:])

    out._vjp = vjp
    return out


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    out = Tensor(a.data[idx], (a,))
    out._vjp = lambda g: a._accumulate(
        K.scatter_rows_add(idx, np.ascontiguousarray(g), a.data.shape[0]))
    return out


def csr_propagate(a: Tensor, indptr, indices, data, data_t) -> Tensor:
    """out = M @ a for a CSR matrix M with symmetric structure; data_t is
    the transpose's data array (equal to data when M is symmetric)."""
    out = Tensor(K.csr_matmul(indptr, indices, data, a.data), (a,))
    out._vjp = lambda g: a._accumulate(
        K.csr_matmul(indptr, indices, data_t, np.ascontiguousarray(g)))
    return out


def edge_softmax(logits: Tensor, indptr) -> Tensor:
    """Softmax over each node's incident-edge segment."""
    alpha = K.segment_softmax(indptr, logits.data)
    out = Tensor(alpha, (logits,))
    out._vjp = lambda g: logits._accumulate(
        K.segment_softmax_backward(indptr, alpha, np.ascontiguousarray(g)))
    return out


def gat_attention_logits(src_feat: Tensor, dst_feat: Tensor, attn: Tensor,
                         rows, cols, negative_slope: float) -> Tensor:
    """Per-edge logits a . leaky(src[row] + dst[col]) (fused)."""
    out = Tensor(K.gat_edge_logits(rows, cols, src_feat.data, dst_feat.data,
                                   attn.data, negative_slope),
                 (src_feat, dst_feat, attn))

    def vjp(g):
        g_src, g_dst, g_attn = K.gat_edge_logits_backward(
            rows, cols, src_feat.data, dst_feat.data, attn.data,
            negative_slope, np.ascontiguousarray(g))
        src_feat._accumulate(g_src)
        dst_feat._accumulate(g_dst)
        attn._accumulate(g_attn)

    out._vjp = vjp
    return out


def edge_aggregate(alpha: Tensor, values: Tensor, indptr, indices, rows,
                   tperm) -> Tensor:
    """out[i] = sum over row i's edges of alpha_e * values[col_e].

    `tperm` maps each edge position to its reversed pair's position, so
    the values-gradient is one CSR product on the shared structure.
    """
    out = Tensor(K.csr_matmul(indptr, indices, alpha.data, values.data),
                 (alpha, values))

    def vjp(g):
        g = np.ascontiguousarray(g)
        alpha._accumulate(K.edge_rowdot(rows, indices, g, values.data))
        values._accumulate(
            K.csr_matmul(indptr, indices, alpha.data[tperm], g))

    out._vjp = vjp
    return out


def pair_dots(z: Tensor, src, dst) -> Tensor:
    """Logits dot(z[src_e], z[dst_e]) for a batch of pairs."""
    out = Tensor(K.edge_rowdot(src, dst, z.data, z.data), (z,))

    def vjp(g):
        g = np.ascontiguousarray(g)
        z._accumulate(K.scatter_rows_add(
            src, np.ascontiguousarray(g[:, None] * z.data[dst]),
            z.data.shape[0]))
        z._accumulate(K.scatter_rows_add(
            dst, np.ascontiguousarray(g[:, None] * z.data[src]),
            z.data.shape[0]))

    out._vjp = vjp
    return out


def binary_cross_entropy_with_logits(pos: Tensor, neg: Tensor) -> Tensor:
    """Mean BCE over positive-labeled and negative-labeled logits.

    softplus is evaluated in the overflow-safe form
    log1p(exp(-|x|)) + max(x, 0).
    """
    total = pos.data.shape[0] + neg.data.shape[0]
    loss_val = (_softplus(-pos.data).sum() + _softplus(neg.data).sum()) / total
    out = Tensor(loss_val, (pos, neg))

    def vjp(g):
        scale = float(g) / total
        pos._accumulate(scale * (_sigmoid(pos.data) - 1.0))
        neg._accumulate(scale * _sigmoid(neg.data))

    out._vjp = vjp
    return out


def _softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
