"""Numpy reference implementations of the hot kernels.

Used when the compiled extension is unavailable or explicitly disabled
(DESOCIAL_KERNELS=python). Semantics are bit-for-bit checked against the
Cython core in the test suite; keep both in lockstep.

Conventions: CSR structure arrays are int64, dense matrices are C-order
float64. Empty rows are legal and produce zero outputs.
"""

from __future__ import annotations

import numpy as np


def _reduceat_rows(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Segment sums over CSR rows, tolerating empty rows.

    np.add.reduceat misbehaves for empty segments (it returns the element
    at the start index, and errors when a start equals len(values)), so
    the values are padded with one zero row (keeping every start index
    valid without shifting segment boundaries) and empty rows are zeroed
    afterwards.
    """
    n_rows = indptr.shape[0] - 1
    if values.shape[0] == 0:
        shape = (n_rows,) + values.shape[1:]
        return np.zeros(shape, dtype=values.dtype)
    pad_shape = (1,) + values.shape[1:]
    padded = np.concatenate([values, np.zeros(pad_shape, values.dtype)])
    out = np.add.reduceat(padded, indptr[:-1], axis=0)
    empty = indptr[1:] == indptr[:-1]
    if empty.any():
        out[empty] = 0.0
    return out


def csr_matmul(indptr, indices, data, x):
    """out[i] = sum_k data[k] * x[indices[k]] over row i's slice."""
    weighted = data[:, None] * x[indices]
    return _reduceat_rows(weighted, indptr)


def segment_softmax(indptr, logits):
    """Softmax within each CSR row segment of per-edge logits."""
    if logits.shape[0] == 0:
        return np.zeros_like(logits)
    counts = np.diff(indptr)
    padded = np.concatenate([logits, [-np.inf]])
    row_max = np.maximum.reduceat(padded, indptr[:-1])
    row_max[counts == 0] = 0.0
    shifted = np.exp(logits - np.repeat(row_max, counts))
    row_sum = _reduceat_rows(shifted, indptr)
    return shifted / np.repeat(row_sum, counts)


def segment_softmax_backward(indptr, alpha, grad_alpha):
    """Gradient of segment_softmax: a_e * (g_e - sum_seg a*g)."""
    counts = np.diff(indptr)
    inner = _reduceat_rows(alpha * grad_alpha, indptr)
    return alpha * (grad_alpha - np.repeat(inner, counts))


def edge_rowdot(rows, cols, a, b):
    """out[e] = dot(a[rows[e]], b[cols[e]])."""
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    return np.einsum("ij,ij->i", a[rows], b[cols])


def scatter_rows_add(idx, grads, num_rows):
    """out[idx[e]] += grads[e]; duplicate indices accumulate."""
    out = np.zeros((num_rows, grads.shape[1]), dtype=np.float64)
    np.add.at(out, idx, grads)
    return out


def gat_edge_logits(rows, cols, src_feat, dst_feat, attn, negative_slope):
    """Attention logits: sum_d attn[d] * leaky(src[row,d] + dst[col,d])."""
    pre = src_feat[rows] + dst_feat[cols]
    act = np.where(pre >= 0.0, pre, negative_slope * pre)
    return act @ attn


def gat_edge_logits_backward(rows, cols, src_feat, dst_feat, attn,
                             negative_slope, grad_logits):
    """Gradients of gat_edge_logits w.r.t. src_feat, dst_feat and attn."""
    pre = src_feat[rows] + dst_feat[cols]
    mask = np.where(pre >= 0.0, 1.0, negative_slope)
    act = pre * np.where(pre >= 0.0, 1.0, negative_slope)
    grad_attn = act.T @ grad_logits
    grad_pre = mask * (grad_logits[:, None] * attn[None, :])
    n_src = src_feat.shape[0]
    n_dst = dst_feat.shape[0]
    grad_src = scatter_rows_add(rows, grad_pre, n_src)
    grad_dst = scatter_rows_add(cols, grad_pre, n_dst)
    return grad_src, grad_dst, grad_attn
