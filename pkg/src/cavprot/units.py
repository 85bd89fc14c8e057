"""Unit helpers. Internal frequencies are angular, in rad/ns; times in ns.

User-facing values are ordinary frequencies in GHz and times in ps.
"""
import numpy as np

TWO_PI = 2.0 * np.pi
PS_PER_NS = 1e3


def ghz(f):
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * (np.asarray(f) if np.ndim(f) else f)


def to_ghz(w):
    """Angular frequency in rad/ns -> ordinary frequency in GHz."""
    return (np.asarray(w) if np.ndim(w) else w) / TWO_PI


def mhz(f):
    return ghz(f) * 1e-3


def ps_to_ns(t):
    return (np.asarray(t) if np.ndim(t) else t) / PS_PER_NS


def ns_to_ps(t):
    return (np.asarray(t) if np.ndim(t) else t) * PS_PER_NS
