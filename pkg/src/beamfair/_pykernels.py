"""Numpy implementation of the hot kernels.

Same signatures as the compiled ``_ckernels`` module. Arrays are float64,
gains are indexed ``[ue, ap]``.
"""
import numpy as np

LN2 = np.log(2.0)


def interference(interf, p):
    """Interference ``I[n, m] = sum_{k != n} p[k] * interf[k, m]``."""
    contrib = p[:, None] * interf
    mask = 1.0 - np.eye(p.shape[0])
    return mask @ contrib


def best_ratio(serving, interf, noise, p):
    """Per-UE best ``h/(I + noise)`` over APs and its (lowest) AP index."""
    ratio = serving / (interference(interf, p) + noise)
    arg = np.argmax(ratio, axis=1)
    return ratio[np.arange(ratio.shape[0]), arg], arg.astype(np.int64)


def rates(serving, interf, bandwidth, noise, p):
    q, arg = best_ratio(serving, interf, noise, p)
    return bandwidth * np.log1p(p * q) / LN2, arg


def apply_T(serving, interf, ifr, bandwidth, noise, p):
    q, arg = best_ratio(serving, interf, noise, p)
    scale = ifr * LN2 / bandwidth
    out = np.empty_like(p)
    pos = p > 0.0
    out[pos] = scale[pos] * p[pos] / np.log1p(p[pos] * q[pos])
    out[~pos] = scale[~pos] / q[~pos]
    return out, arg


def fixed_point(serving, interf, ifr, bandwidth, noise, budget, p0, tol, max_iter):
    """Normalized iteration ``x <- budget * T(x) / max(T(x))``.

    Returns ``(x, c, iterations, residual, converged, history)``.
    """
    x = np.array(p0, dtype=np.float64, copy=True)
    history = np.empty(max_iter, dtype=np.float64)
    residual = np.inf
    converged = False
    k = 0
    while k < max_iter:
        t, _ = apply_T(serving, interf, ifr, bandwidth, noise, x)
        xn = budget / t.max() * t
        residual = float(np.max(np.abs(xn - x)))
        history[k] = residual
        x = xn
        k += 1
        if residual <= tol * budget:
            converged = True
            break
    t, _ = apply_T(serving, interf, ifr, bandwidth, noise, x)
    c = budget / t.max()
    return x, float(c), k, residual, converged, history[:k].copy()
