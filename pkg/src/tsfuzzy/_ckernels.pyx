# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rule-weight and regressor kernels (see ``_kernels_py`` for the
reference implementation)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

cdef enum:
    Z = 0
    S = 1
    TRAP = 2
    MOVING = 0


cdef inline double _center(long code, const double* p) noexcept nogil:
    cdef double a_left, a_mid, a_right, moment
    if code == Z:
        return p[0] + (p[1] - p[0]) / 3.0
    if code == S:
        return p[0] + 2.0 * (p[1] - p[0]) / 3.0
    if code == TRAP:
        a_left = 0.5 * (p[1] - p[0])
        a_mid = p[2] - p[1]
        a_right = 0.5 * (p[3] - p[2])
        moment = (a_left * (p[0] + 2.0 * (p[1] - p[0]) / 3.0)
                  + a_mid * 0.5 * (p[1] + p[2])
                  + a_right * (p[2] + (p[3] - p[2]) / 3.0))
        return moment / (a_left + a_mid + a_right)
    return p[0]


cdef inline double _moving(double x, long code, const double* p, double xg) noexcept nogil:
    cdef double lo = p[0], hi, width, left, right
    if code == TRAP:
        hi = p[3]
    else:
        hi = p[1]
    if x < lo or x > hi:
        return 0.0
    width = hi - lo
    if code == TRAP:
        left = p[1] if p[1] < xg else xg
        right = p[2] if p[2] > xg else xg
        if x <= left:
            return (left - x) / width
        if x <= xg:
            return (xg - x) / width
        if x <= right:
            return (x - xg) / width
        return (x - right) / width
    if x <= xg:
        return (xg - x) / width
    return (x - xg) / width


cdef inline double _grade(double x, long code, const double* p) noexcept nogil:
    if code == Z:
        if x <= p[0]:
            return 1.0
        if x >= p[1]:
            return 0.0
        return (p[1] - x) / (p[1] - p[0])
    if code == S:
        if x <= p[0]:
            return 0.0
        if x >= p[1]:
            return 1.0
        return (x - p[0]) / (p[1] - p[0])
    if code == TRAP:
        if x < p[0] or x > p[3]:
            return 0.0
        if x < p[1]:
            return (x - p[0]) / (p[1] - p[0])
        if x <= p[2]:
            return 1.0
        return (p[3] - x) / (p[3] - p[2])
    return exp(-((x - p[0]) * (x - p[0])) / p[1])


def rule_weights(X, clause_rule, clause_var, clause_shape, clause_params, int n_rules, int mode):
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long[:] rule = np.ascontiguousarray(clause_rule, dtype=np.int_)
    cdef const long[:] var = np.ascontiguousarray(clause_var, dtype=np.int_)
    cdef const long[:] shape = np.ascontiguousarray(clause_shape, dtype=np.int_)
    cdef const double[:, ::1] params = np.ascontiguousarray(
        np.asarray(clause_params, dtype=np.float64).reshape(len(clause_rule), -1)
        if len(clause_rule) else np.zeros((0, 4)))
    cdef Py_ssize_t p = Xv.shape[0], n_cl = rule.shape[0], i, k
    out = np.ones((p, n_rules), dtype=np.float64)
    cdef double[:, :] W = out
    cdef double[:] xg = np.empty(n_cl, dtype=np.float64)
    with nogil:
        for k in range(n_cl):
            xg[k] = _center(shape[k], &params[k, 0])
        for i in range(p):
            for k in range(n_cl):
                if mode == MOVING:
                    W[i, rule[k]] *= _moving(Xv[i, var[k]], shape[k], &params[k, 0], xg[k])
                else:
                    W[i, rule[k]] *= _grade(Xv[i, var[k]], shape[k], &params[k, 0])
    return out


def regressor_matrix(W, X, mask):
    cdef const double[:, :] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, :] Xv = np.ascontiguousarray(X, dtype=np.float64)
    flat = np.asarray(mask, dtype=bool).ravel()
    cdef const long[:] cols = np.flatnonzero(flat).astype(np.int_)
    cdef Py_ssize_t p = Wv.shape[0], n = Wv.shape[1], m1 = Xv.shape[1] + 1
    cdef Py_ssize_t q = cols.shape[0], i, r, c, j, col, kept = 0
    cdef double total
    keep_arr = np.zeros(p, dtype=np.uint8)
    cdef cnp.uint8_t[:] keep = keep_arr
    out = np.empty((p, q), dtype=np.float64)
    cdef double[:, :] Zv = out
    with nogil:
        for i in range(p):
            total = 0.0
            for r in range(n):
                total += Wv[i, r]
            if total <= 0.0:
                continue
            keep[i] = 1
            for c in range(q):
                col = cols[c]
                r = col // m1
                j = col % m1
                if j == 0:
                    Zv[kept, c] = Wv[i, r] / total
                else:
                    Zv[kept, c] = Wv[i, r] / total * Xv[i, j - 1]
            kept += 1
    return out[:kept], keep_arr.view(bool)
