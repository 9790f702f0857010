"""Vectorized signed-log arithmetic on numpy arrays.

A signed-log array is a pair ``(sign, logmag)`` where ``sign`` is an integer
array in {-1, 0, +1} and ``logmag`` holds the natural log of the magnitude
(``-inf`` exactly where ``sign == 0``).  All helpers broadcast.
"""

from __future__ import annotations

import numpy as np

LOG_ZERO = -np.inf


def from_values(x):
    """Decompose ordinary floats into (sign, logmag)."""
    x = np.asarray(x, dtype=float)
    sign = np.sign(x).astype(np.int8)
    safe = np.where(sign == 0, 1.0, np.abs(x))
    logmag = np.where(sign == 0, LOG_ZERO, np.log(safe))
    return sign, logmag


def to_values(sign, logmag):
    """Recompose floats; overflows saturate to +-inf, zeros stay exact."""
    with np.errstate(over="ignore"):
        return np.where(sign == 0, 0.0, sign * np.exp(logmag))


def multiply(s1, l1, s2, l2):
    s = (s1 * s2).astype(np.int8)
    l = np.where(s == 0, LOG_ZERO, l1 + l2)
    return s, l


def add(signs, logs):
    """Signed sum of the stacked leading axis of (signs, logs).

    Factors out the largest magnitude so the exponentials never overflow.
    Exact cancellation yields a clean zero.
    """
    signs = np.asarray(signs)
    logs = np.asarray(logs)
    m = np.max(logs, axis=0)
    finite = np.isfinite(m)
    m_safe = np.where(finite, m, 0.0)
    t = np.sum(signs * np.exp(logs - m_safe), axis=0)
    out_sign = np.sign(t).astype(np.int8)
    nonzero = out_sign != 0
    safe_t = np.where(nonzero, np.abs(t), 1.0)
    out_log = np.where(nonzero & finite, m_safe + np.log(safe_t), LOG_ZERO)
    out_sign = np.where(finite, out_sign, np.int8(0)).astype(np.int8)
    return out_sign, out_log


def logsumexp_mags(logs, axis=None):
    """log(sum(exp(logs))) treating -inf slots as absent."""
    logs = np.asarray(logs, dtype=float)
    m = np.max(logs, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(np.exp(logs - m_safe), axis=axis, keepdims=True)
    out = np.where(np.isfinite(m), m_safe + np.log(np.where(s > 0, s, 1.0)), LOG_ZERO)
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())[()]
