# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scorer kernels; mirrors _kernels_np function for function."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

LOG_CLAMP = 1e-12
cdef double _CLAMP = 1e-12


def aggregate_batch(double[:, ::1] W, double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], d_out = W.shape[0], d_cat = W.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    out = np.empty((n, d_out), dtype=np.float64)
    cdef double[:, ::1] H = out
    for i in range(n):
        for j in range(d_out):
            acc = 0.0
            for k in range(d_cat):
                acc += W[j, k] * X[i, k]
            H[i, j] = acc if acc > 0.0 else 0.0
    return out


def mlp_batch(double[:, ::1] W1, double[::1] b1, double[:, ::1] W2,
              double[::1] b2, double[:, ::1] H):
    cdef Py_ssize_t n = H.shape[0], d_mlp = W1.shape[0], d_h = W1.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, l0, l1, m, e0, e1, s
    out = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] P = out
    a_buf = np.empty(d_mlp, dtype=np.float64)
    cdef double[::1] a = a_buf
    for i in range(n):
        for j in range(d_mlp):
            acc = b1[j]
            for k in range(d_h):
                acc += W1[j, k] * H[i, k]
            a[j] = acc if acc > 0.0 else 0.0
        l0 = b2[0]
        l1 = b2[1]
        for j in range(d_mlp):
            l0 += W2[0, j] * a[j]
            l1 += W2[1, j] * a[j]
        m = l0 if l0 > l1 else l1
        e0 = exp(l0 - m)
        e1 = exp(l1 - m)
        s = e0 + e1
        P[i, 0] = e0 / s
        P[i, 1] = e1 / s
    return out


def loss_and_grads(double[:, ::1] W, double[:, ::1] W1, double[::1] b1,
                   double[:, ::1] W2, double[::1] b2,
                   double[:, ::1] CM, double[:, ::1] Q, long[::1] labels):
    cdef Py_ssize_t n = CM.shape[0], d_cat = CM.shape[1]
    cdef Py_ssize_t d_gnn = W.shape[0], d_mlp = W1.shape[0], d_h = W1.shape[1]
    cdef Py_ssize_t d_in = d_h - d_gnn
    cdef Py_ssize_t i, j, k, y
    cdef double acc, l0, l1, m, e0, e1, s, picked, loss = 0.0
    cdef double dz2_0, dz2_1, g

    dW_arr = np.zeros((d_gnn, d_cat), dtype=np.float64)
    dW1_arr = np.zeros((d_mlp, d_h), dtype=np.float64)
    db1_arr = np.zeros(d_mlp, dtype=np.float64)
    dW2_arr = np.zeros((2, d_mlp), dtype=np.float64)
    db2_arr = np.zeros(2, dtype=np.float64)
    cdef double[:, ::1] dW = dW_arr
    cdef double[:, ::1] dW1 = dW1_arr
    cdef double[::1] db1 = db1_arr
    cdef double[:, ::1] dW2 = dW2_arr
    cdef double[::1] db2 = db2_arr

    z0_b = np.empty(d_gnn, dtype=np.float64)
    h_b = np.empty(d_h, dtype=np.float64)
    z1_b = np.empty(d_mlp, dtype=np.float64)
    a_b = np.empty(d_mlp, dtype=np.float64)
    dz1_b = np.empty(d_mlp, dtype=np.float64)
    dz0_b = np.empty(d_gnn, dtype=np.float64)
    cdef double[::1] z0 = z0_b
    cdef double[::1] h = h_b
    cdef double[::1] z1 = z1_b
    cdef double[::1] a = a_b
    cdef double[::1] dz1 = dz1_b
    cdef double[::1] dz0 = dz0_b

    for i in range(n):
        # forward
        for j in range(d_gnn):
            acc = 0.0
            for k in range(d_cat):
                acc += W[j, k] * CM[i, k]
            z0[j] = acc
            h[j] = acc if acc > 0.0 else 0.0
        for k in range(d_in):
            h[d_gnn + k] = Q[i, k]
        for j in range(d_mlp):
            acc = b1[j]
            for k in range(d_h):
                acc += W1[j, k] * h[k]
            z1[j] = acc
            a[j] = acc if acc > 0.0 else 0.0
        l0 = b2[0]
        l1 = b2[1]
        for j in range(d_mlp):
            l0 += W2[0, j] * a[j]
            l1 += W2[1, j] * a[j]
        m = l0 if l0 > l1 else l1
        e0 = exp(l0 - m)
        e1 = exp(l1 - m)
        s = e0 + e1
        y = labels[i]
        picked = (e1 if y == 1 else e0) / s
        if picked > _CLAMP:
            loss += -log(picked)
        else:
            loss += -log(_CLAMP)
            continue  # clamped example: zero gradient

        # backward, scaled by 1/n up front
        dz2_0 = (e0 / s - (1.0 if y == 0 else 0.0)) / n
        dz2_1 = (e1 / s - (1.0 if y == 1 else 0.0)) / n
        db2[0] += dz2_0
        db2[1] += dz2_1
        for j in range(d_mlp):
            dW2[0, j] += dz2_0 * a[j]
            dW2[1, j] += dz2_1 * a[j]
            g = W2[0, j] * dz2_0 + W2[1, j] * dz2_1
            dz1[j] = g if z1[j] > 0.0 else 0.0
        for j in range(d_mlp):
            if dz1[j] != 0.0:
                db1[j] += dz1[j]
                for k in range(d_h):
                    dW1[j, k] += dz1[j] * h[k]
        for j in range(d_gnn):
            g = 0.0
            for k in range(d_mlp):
                g += W1[k, j] * dz1[k]
            dz0[j] = g if z0[j] > 0.0 else 0.0
        for j in range(d_gnn):
            if dz0[j] != 0.0:
                for k in range(d_cat):
                    dW[j, k] += dz0[j] * CM[i, k]

    return loss / n, dW_arr, dW1_arr, db1_arr, dW2_arr, db2_arr
