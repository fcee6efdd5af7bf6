"""Numba @njit kernel implementations (default backend).

Same contracts as ``_kernels_numpy``; loops are fused so the divergence
math makes a single pass per array.  No ``parallel=True`` anywhere: results
must be bit-reproducible run to run.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def windowed_frames(x_padded, window, hop, n_frames):
    W = window.shape[0]
    out = np.empty((n_frames, W), dtype=np.float64)
    for n in range(n_frames):
        base = n * hop
        for j in range(W):
            out[n, j] = x_padded[base + j] * window[j]
    return out


@njit(cache=True, nogil=True)
def overlap_add(frames, window, hop, out_len):
    n_frames, W = frames.shape
    out = np.zeros(out_len, dtype=frames.dtype)
    for n in range(n_frames):
        base = n * hop
        for j in range(W):
            out[base + j] += frames[n, j] * window[j]
    return out


@njit(cache=True, nogil=True)
def unit_phase(c, eps):
    out = np.empty_like(c)
    for k in range(c.shape[0]):
        m = abs(c[k])
        if m < eps:
            out[k] = 1.0 + 0.0j
        else:
            out[k] = c[k] / m
    return out


@njit(cache=True, nogil=True, inline="always")
def _psi_val(x, kind, beta):
    if kind == 0:
        return x * x
    if kind == 1:
        return x * math.log(x)
    if kind == 2:
        return -math.log(x)
    return x ** beta / (beta * (beta - 1.0)) - x / (beta - 1.0) + 1.0 / beta


@njit(cache=True, nogil=True, inline="always")
def _psi_d1(x, kind, beta):
    if kind == 0:
        return 2.0 * x
    if kind == 1:
        return math.log(x) + 1.0
    if kind == 2:
        return -1.0 / x
    return (x ** (beta - 1.0) - 1.0) / (beta - 1.0)


@njit(cache=True, nogil=True, inline="always")
def _psi_d2(x, kind, beta):
    if kind == 0:
        return 2.0
    if kind == 1:
        return 1.0 / x
    if kind == 2:
        return 1.0 / (x * x)
    return x ** (beta - 2.0)


@njit(cache=True, nogil=True)
def psi_sum(v, kind, beta, eps):
    acc = 0.0
    for k in range(v.shape[0]):
        acc += _psi_val(max(v[k], eps), kind, beta)
    return acc


@njit(cache=True, nogil=True)
def psi_grad(v, kind, beta, eps):
    out = np.empty(v.shape[0], dtype=np.float64)
    for k in range(v.shape[0]):
        out[k] = _psi_d1(max(v[k], eps), kind, beta)
    return out


@njit(cache=True, nogil=True)
def psi_hess(v, kind, beta, eps):
    out = np.empty(v.shape[0], dtype=np.float64)
    for k in range(v.shape[0]):
        out[k] = _psi_d2(max(v[k], eps), kind, beta)
    return out


@njit(cache=True, nogil=True)
def bregman_sum(p, q, kind, beta, eps):
    acc = 0.0
    for k in range(p.shape[0]):
        pf = max(p[k], eps)
        qf = max(q[k], eps)
        acc += (_psi_val(pf, kind, beta) - _psi_val(qf, kind, beta)
                - _psi_d1(qf, kind, beta) * (pf - qf))
    return acc


@njit(cache=True, nogil=True)
def gradient_weights(y, r, kind, beta, eps, left):
    out = np.empty(y.shape[0], dtype=np.float64)
    if left:
        for k in range(y.shape[0]):
            out[k] = (_psi_d1(max(y[k], eps), kind, beta)
                      - _psi_d1(max(r[k], eps), kind, beta))
    else:
        for k in range(y.shape[0]):
            yf = max(y[k], eps)
            out[k] = _psi_d2(yf, kind, beta) * (yf - max(r[k], eps))
    return out
