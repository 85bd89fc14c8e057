"""Faddeeva function ``w(z) = exp(-z**2) erfc(-i z)``.

Thin wrapper over :func:`scipy.special.wofz`, which is entire and so also
gives the analytic continuation into the lower half-plane needed when
searching for complex poles.
"""
import numpy as np
from scipy.special import wofz


def faddeeva(z):
    """Evaluate w(z) for scalar or array complex ``z``."""
    z = np.asarray(z, dtype=complex)
    out = wofz(z)
    return out[()] if out.ndim == 0 else out


def faddeeva_derivative(z):
    """dw/dz = -2 z w(z) + 2i/sqrt(pi)."""
    z = np.asarray(z, dtype=complex)
    return -2.0 * z * faddeeva(z) + 2j / np.sqrt(np.pi)
