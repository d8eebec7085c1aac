"""Sample-mean expectations over complex records.

``E[ab]`` for real processes is read as ``Re{E[a * conj(b)]}``.
"""

import numpy as np


def _arr(a):
    return getattr(a, "samples", a)


def power(a) -> float:
    a = _arr(a)
    return float(np.mean(a.real**2 + a.imag**2))


def cross(a, b) -> float:
    """Re{E[a conj(b)]}."""
    a, b = _arr(a), _arr(b)
    return float(np.mean(a.real * b.real + a.imag * b.imag))


def cross_complex(a, b) -> complex:
    a, b = _arr(a), _arr(b)
    return complex(np.mean(a * np.conj(b)))


def variance(a, ddof=0) -> float:
    """E|a - E[a]|^2 (ddof=1 gives the unbiased estimate)."""
    a = _arr(a)
    n = a.size
    c = a - a.mean()
    return float(np.sum(c.real**2 + c.imag**2) / (n - ddof))


def covariance(a, b) -> float:
    """Re{E[(a - Ea) conj(b - Eb)]}."""
    a, b = _arr(a), _arr(b)
    return cross(a - a.mean(), b - b.mean())
