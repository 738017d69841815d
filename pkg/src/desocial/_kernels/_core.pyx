# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: CSR propagation, segment softmax, attention
logits and per-edge dot products.

Must stay semantically identical to _numpy_impl; the test suite compares
both backends on random fixtures.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


def csr_matmul(const i64[::1] indptr, const i64[::1] indices,
               const f64[::1] data, const f64[:, ::1] x):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.zeros((n_rows, d), dtype=np.float64)
    cdef f64[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, j, c
    cdef f64 w
    with nogil:
        for i in range(n_rows):
            for k in range(indptr[i], indptr[i + 1]):
                c = indices[k]
                w = data[k]
                for j in range(d):
                    out[i, j] += w * x[c, j]
    return out_arr


def segment_softmax(const i64[::1] indptr, const f64[::1] logits):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    out_arr = np.zeros(logits.shape[0], dtype=np.float64)
    cdef f64[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef f64 m, s
    with nogil:
        for i in range(n_rows):
            if indptr[i] == indptr[i + 1]:
                continue
            m = logits[indptr[i]]
            for k in range(indptr[i] + 1, indptr[i + 1]):
                if logits[k] > m:
                    m = logits[k]
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                out[k] = exp(logits[k] - m)
                s += out[k]
            for k in range(indptr[i], indptr[i + 1]):
                out[k] /= s
    return out_arr


def segment_softmax_backward(const i64[::1] indptr, const f64[::1] alpha,
                             const f64[::1] grad_alpha):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    out_arr = np.zeros(alpha.shape[0], dtype=np.float64)
    cdef f64[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef f64 inner
    with nogil:
        for i in range(n_rows):
            inner = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                inner += alpha[k] * grad_alpha[k]
            for k in range(indptr[i], indptr[i + 1]):
                out[k] = alpha[k] * (grad_alpha[k] - inner)
    return out_arr


def edge_rowdot(const i64[::1] rows, const i64[::1] cols,
                const f64[:, ::1] a, const f64[:, ::1] b):
    cdef Py_ssize_t n_edges = rows.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    out_arr = np.zeros(n_edges, dtype=np.float64)
    cdef f64[::1] out = out_arr
    cdef Py_ssize_t e, j, r, c
    cdef f64 acc
    with nogil:
        for e in range(n_edges):
            r = rows[e]
            c = cols[e]
            acc = 0.0
            for j in range(d):
                acc += a[r, j] * b[c, j]
            out[e] = acc
    return out_arr


def scatter_rows_add(const i64[::1] idx, const f64[:, ::1] grads,
                     Py_ssize_t num_rows):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = grads.shape[1]
    out_arr = np.zeros((num_rows, d), dtype=np.float64)
    cdef f64[:, ::1] out = out_arr
    cdef Py_ssize_t e, j, r
    with nogil:
        for e in range(n):
            r = idx[e]
            for j in range(d):
                out[r, j] += grads[e, j]
    return out_arr


def gat_edge_logits(const i64[::1] rows, const i64[::1] cols,
                    const f64[:, ::1] src_feat, const f64[:, ::1] dst_feat,
                    const f64[::1] attn, f64 negative_slope):
    cdef Py_ssize_t n_edges = rows.shape[0]
    cdef Py_ssize_t d = src_feat.shape[1]
    out_arr = np.zeros(n_edges, dtype=np.float64)
    cdef f64[::1] out = out_arr
    cdef Py_ssize_t e, j, r, c
    cdef f64 acc, pre
    with nogil:
        for e in range(n_edges):
            r = rows[e]
            c = cols[e]
            acc = 0.0
            for j in range(d):
                pre = src_feat[r, j] + dst_feat[c, j]
                if pre < 0.0:
                    pre *= negative_slope
                acc += attn[j] * pre
            out[e] = acc
    return out_arr


def gat_edge_logits_backward(const i64[::1] rows, const i64[::1] cols,
                             const f64[:, ::1] src_feat,
                             const f64[:, ::1] dst_feat,
                             const f64[::1] attn, f64 negative_slope,
                             const f64[::1] grad_logits):
    cdef Py_ssize_t n_edges = rows.shape[0]
    cdef Py_ssize_t d = src_feat.shape[1]
    g_src_arr = np.zeros((src_feat.shape[0], d), dtype=np.float64)
    g_dst_arr = np.zeros((dst_feat.shape[0], d), dtype=np.float64)
    g_attn_arr = np.zeros(d, dtype=np.float64)
    cdef f64[:, ::1] g_src = g_src_arr
    cdef f64[:, ::1] g_dst = g_dst_arr
    cdef f64[::1] g_attn = g_attn_arr
    cdef Py_ssize_t e, j, r, c
    cdef f64 pre, g, slope
    with nogil:
        for e in range(n_edges):
            r = rows[e]
            c = cols[e]
            g = grad_logits[e]
            for j in range(d):
                pre = src_feat[r, j] + dst_feat[c, j]
                if pre >= 0.0:
                    slope = 1.0
                    g_attn[j] += pre * g
                else:
                    slope = negative_slope
                    g_attn[j] += pre * negative_slope * g
                g_src[r, j] += slope * attn[j] * g
                g_dst[c, j] += slope * attn[j] * g
    return g_src_arr, g_dst_arr, g_attn_arr
