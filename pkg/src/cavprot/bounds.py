"""Classical benchmark for storing a weak coherent qubit.

An intercept-resend memory that measures N copies of a qubit reaches
fidelity (N+1)/(N+2). With a Poissonian source of mean photon number mu and
an efficiency budget eta, the best classical strategy keeps only the
multi-photon events (largest N first) until the fraction eta(1 - P(0)) of
non-vacuum events is used up, and fills the remainder with the fraction p
of N_min + 1 photon events.
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats

TERM_TOL = 1e-15
# ties such as eta = 1, where the tail equals 1 - P(0) up to rounding
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ClassicalBoundQuery:
    mu: float
    eta: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mean photon number must be positive, got {self.mu!r}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.eta!r}")


def fock_fidelity(n):
    """Optimal measure-and-prepare fidelity (N+1)/(N+2) for N copies."""
    n = np.asarray(n, dtype=float)
    return (n + 1.0) / (n + 2.0)


def photon_distribution(mu, tol=TERM_TOL):
    """Poisson P(N) for N = 0..N_max, truncated once the terms past the mode
    fall below ``tol`` of the accumulated sum."""
    n_max = int(stats.poisson.ppf(1.0 - tol, mu)) + 1
    while stats.poisson.pmf(n_max, mu) >= tol * stats.poisson.cdf(n_max, mu):
        n_max += 1
    return stats.poisson.pmf(np.arange(n_max + 1), mu)


def _tails(pn):
    # tails[i] = sum_{N >= i} P(N)
    return np.cumsum(pn[::-1])[::-1]


def n_min(q: ClassicalBoundQuery):
    """Smallest i with sum_{N >= i+1} P(N) <= eta (1 - P(0))."""
    pn = photon_distribution(q.mu)
    budget = q.eta * (1.0 - pn[0])
    tails = np.append(_tails(pn), 0.0)
    for i in range(pn.size):
        if tails[i + 1] <= budget * (1.0 + TIE_TOL):
            return i
    return pn.size - 1


def fill_fraction(q: ClassicalBoundQuery, nmin=None):
    """Probability p of N_min + 1 photon events kept to meet the budget,
    ``p = eta (1 - P(0)) - sum_{N >= N_min + 1} P(N)``.

    At eta = 1, N_min = 0 and p = 0: every non-vacuum event is kept.
    """
    pn = photon_distribution(q.mu)
    k = n_min(q) if nmin is None else nmin
    tails = np.append(_tails(pn), 0.0)
    return max(q.eta * (1.0 - pn[0]) - tails[k + 1], 0.0)


def classical_fidelity(q: ClassicalBoundQuery):
    """Best intercept-resend storage fidelity for a coherent qubit."""
    pn = photon_distribution(q.mu)
    k = n_min(q)
    p = fill_fraction(q, k)
    n = np.arange(pn.size)
    kept = n >= k + 1
    num = fock_fidelity(k) * p + np.sum(fock_fidelity(n[kept]) * pn[kept])
    return float(num / (q.eta * (1.0 - pn[0])))
