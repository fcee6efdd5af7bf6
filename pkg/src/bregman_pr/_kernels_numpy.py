"""Pure-numpy kernel implementations (fallback backend).

Semantics must match ``_kernels_numba`` exactly up to floating-point
summation order.  Divergence kind codes: 0=l2, 1=kl, 2=is, 3=beta.
"""

import numpy as np


def windowed_frames(x_padded, window, hop, n_frames):
    """(n_frames, W) matrix with row n = x_padded[n*hop : n*hop+W] * window."""
    W = window.shape[0]
    idx = hop * np.arange(n_frames)[:, None] + np.arange(W)[None, :]
    return x_padded[idx] * window[None, :]


def overlap_add(frames, window, hop, out_len):
    """Accumulate window-weighted frames into a length-out_len signal."""
    n_frames, W = frames.shape
    out = np.zeros(out_len, dtype=frames.dtype)
    weighted = frames * window[None, :]
    for n in range(n_frames):
        base = n * hop
        out[base:base + W] += weighted[n]
    return out


def unit_phase(c, eps):
    """c/|c| elementwise; bins with |c| < eps get phase 1+0j."""
    mag = np.abs(c)
    small = mag < eps
    out = np.where(small, 1.0 + 0.0j, c / np.where(small, 1.0, mag))
    return out


def _floored(v, eps):
    return np.maximum(v, eps)


def _psi_val(x, kind, beta):
    if kind == 0:
        return x * x
    if kind == 1:
        return x * np.log(x)
    if kind == 2:
        return -np.log(x)
    return x ** beta / (beta * (beta - 1.0)) - x / (beta - 1.0) + 1.0 / beta


def _psi_d1(x, kind, beta):
    if kind == 0:
        return 2.0 * x
    if kind == 1:
        return np.log(x) + 1.0
    if kind == 2:
        return -1.0 / x
    return (x ** (beta - 1.0) - 1.0) / (beta - 1.0)


def _psi_d2(x, kind, beta):
    if kind == 0:
        return np.full_like(x, 2.0)
    if kind == 1:
        return 1.0 / x
    if kind == 2:
        return 1.0 / (x * x)
    return x ** (beta - 2.0)


def psi_sum(v, kind, beta, eps):
    return float(np.sum(_psi_val(_floored(v, eps), kind, beta)))


def psi_grad(v, kind, beta, eps):
    return _psi_d1(_floored(v, eps), kind, beta)


def psi_hess(v, kind, beta, eps):
    return _psi_d2(_floored(v, eps), kind, beta)


def bregman_sum(p, q, kind, beta, eps):
    pf = _floored(p, eps)
    qf = _floored(q, eps)
    terms = (_psi_val(pf, kind, beta) - _psi_val(qf, kind, beta)
             - _psi_d1(qf, kind, beta) * (pf - qf))
    return float(np.sum(terms))


def gradient_weights(y, r, kind, beta, eps, left):
    yf = _floored(y, eps)
    rf = _floored(r, eps)
    if left:
        return _psi_d1(yf, kind, beta) - _psi_d1(rf, kind, beta)
    return _psi_d2(yf, kind, beta) * (yf - rf)
