"""The phi functions of exponential integrators.

phi_0(z) = exp(z) and

    phi_k(z) = (phi_{k-1}(z) - 1/(k-1)!) / z,
    phi_k(0) = 1/k!,

equivalently phi_k(z) = int_0^1 exp((1-theta) z) theta^(k-1)/(k-1)! dtheta.
Small arguments (|z| < 1) use the Taylor series sum_j z^j/(j+k)! truncated
after 20 terms, which is accurate to ~1/(20+k)! at the switch radius; larger
arguments evaluate the recurrence starting from exp(z), which divides the
rounding error by |z| at every level and is therefore stable there.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["phi_scalar", "phi_values", "phi_table"]

_SERIES_RADIUS = 1.0
_SERIES_TERMS = 20


def _phi_series(k: int, z: np.ndarray) -> np.ndarray:
    # Horner evaluation of sum_{j=0}^{terms-1} z^j / (j+k)!
    acc = np.full_like(z, 1.0 / math.factorial(k + _SERIES_TERMS - 1))
    for j in range(_SERIES_TERMS - 2, -1, -1):
        acc = acc * z + 1.0 / math.factorial(j + k)
    return acc


def _phi_recurrence(k: int, z: np.ndarray) -> np.ndarray:
    acc = np.exp(z)
    for j in range(k):
        acc = (acc - 1.0 / math.factorial(j)) / z
    return acc


def phi_values(k: int, z) -> np.ndarray:
    """phi_k evaluated elementwise on a complex array."""
    if k < 0:
        raise ValueError(f"phi order must be >= 0, got {k}")
    z = np.asarray(z, dtype=complex)
    if k == 0:
        return np.exp(z)
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_RADIUS
    if np.any(small):
        out[small] = _phi_series(k, z[small])
    if np.any(~small):
        out[~small] = _phi_recurrence(k, z[~small])
    return out


def phi_scalar(k: int, z: complex) -> complex:
    """phi_k at a single complex argument."""
    return complex(phi_values(k, np.asarray([z]))[0])


def phi_table(z, k_max: int) -> np.ndarray:
    """Rows phi_0(z) .. phi_kmax(z) for a vector of arguments.

    Each order is evaluated independently (series or recurrence per entry), so
    the recurrence identity holds across rows only up to rounding; that
    residual is what the consistency tests measure.
    """
    z = np.asarray(z, dtype=complex)
    table = np.empty((k_max + 1,) + z.shape, dtype=complex)
    for k in range(k_max + 1):
        table[k] = phi_values(k, z)
    return table
