"""Small shared numeric helpers (stable log-sums, extrapolation, slopes)."""

from __future__ import annotations

import numpy as np


def logsumexp(values) -> float:
    """log(sum(exp(values))) computed without overflow/underflow."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return float("-inf")
    m = float(np.max(a))
    if m == float("-inf"):
        return float("-inf")
    return m + float(np.log(np.sum(np.exp(a - m))))


def combine_logsumexp(a: float, b: float) -> float:
    """logsumexp of two already-reduced values."""
    if a == float("-inf"):
        return b
    if b == float("-inf"):
        return a
    m = max(a, b)
    return m + float(np.log(np.exp(a - m) + np.exp(b - m)))


def aitken(x1: float, x2: float, x3: float) -> float:
    """Aitken delta-squared extrapolation of three consecutive terms."""
    denom = (x3 - x2) - (x2 - x1)
    if abs(denom) < 1e-14:
        return x3
    return x3 - (x3 - x2) ** 2 / denom


def least_squares_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])
