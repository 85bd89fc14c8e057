"""Frequency-domain model of a cavity coupled to an inhomogeneous ensemble.

The ensemble enters only through its normalized spectral density rho(w) and
the collective coupling Omega. Everything here works in rad/ns.

Conventions
-----------
The transmission is ``t(w) = (i kappa/2) / D(w)`` with denominator

    D(w) = w0 - i kappa/2 - w + Omega**2 * F(w),
    F(w) = integral rho(x) dx / (w - x + i gamma_h/2).

Poles are the complex zeros of D. A pole ``w_p`` gives a peak of |t|**2 at
``Re w_p`` with FWHM ``Gamma = -2 Im w_p``.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import QuadratureError, RootFindingError
from .faddeeva import faddeeva, faddeeva_derivative

SQRT_PI = np.sqrt(np.pi)
Q_TOL = 64 * np.finfo(float).eps


class Kind(str, Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"
    QGAUSSIAN = "qgaussian"
    DOUBLE_GAUSSIAN = "double-gaussian"


@dataclass(frozen=True)
class SpectralDensity:
    """Normalized ensemble lineshape.

    ``width`` is the scale parameter Delta (rad/ns): the Lorentzian HWHM, the
    1/e half-width of the Gaussian, and the matching scale of the q-Gaussian.
    ``half_splitting`` is the branch offset of the double Gaussian, whose two
    equal-weight components sit at ``center +- half_splitting``.
    """

    kind: Kind
    width: float
    center: float = 0.0
    q: float = 1.0
    half_splitting: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.width > 0 or not np.isfinite(self.width):
            raise ValueError(f"width must be positive and finite, got {self.width}")
        if not np.isfinite(self.center):
            raise ValueError("center must be finite")
        if self.kind is Kind.QGAUSSIAN:
            if self.q >= 2:
                raise ValueError(f"q-Gaussian with q={self.q} >= 2 is not supported")
            if self.q < 1 - Q_TOL:
                raise ValueError(f"q-Gaussian with q={self.q} < 1 is not supported")
        if self.kind is Kind.DOUBLE_GAUSSIAN and self.half_splitting < 0:
            raise ValueError("half_splitting must be non-negative")

    @classmethod
    def lorentzian(cls, width, center=0.0):
        return cls(Kind.LORENTZIAN, width, center)

    @classmethod
    def gaussian(cls, width, center=0.0):
        return cls(Kind.GAUSSIAN, width, center)

    @classmethod
    def qgaussian(cls, width, q, center=0.0):
        return cls(Kind.QGAUSSIAN, width, center, q=q)

    @classmethod
    def double_gaussian(cls, width, half_splitting, center=0.0):
        return cls(Kind.DOUBLE_GAUSSIAN, width, center, half_splitting=half_splitting)

    @property
    def gaussian_limit(self):
        """True for a q-Gaussian whose q is 1 to machine tolerance."""
        return self.kind is Kind.QGAUSSIAN and abs(self.q - 1.0) <= Q_TOL

    def fwhm(self):
        """Full width at half maximum in rad/ns.

        For the double Gaussian this is found numerically, since the two
        branches may or may not be resolved.
        """
        d = self.width
        if self.kind is Kind.LORENTZIAN:
            return 2.0 * d
        if self.kind is Kind.GAUSSIAN or self.gaussian_limit:
            return 2.0 * np.sqrt(np.log(2.0)) * d
        if self.kind is Kind.QGAUSSIAN:
            return 2.0 * d * np.sqrt((2.0**self.q - 2.0) / (2.0 * self.q - 2.0))
        return _numeric_fwhm(self)

    def equivalent_width(self):
        """Width of a single Gaussian with the same variance (double Gaussian only
        differs from ``width``)."""
        if self.kind is Kind.DOUBLE_GAUSSIAN:
            return np.sqrt(self.width**2 + 2.0 * self.half_splitting**2)
        return self.width

    def __call__(self, omega):
        return spectral_density(self, omega)


def _numeric_fwhm(d):
    span = d.half_splitting + 6.0 * d.width
    x = np.linspace(d.center - span, d.center + span, 200001)
    y = spectral_density(d, x)
    above = np.nonzero(y >= 0.5 * y.max())[0]
    return x[above[-1]] - x[above[0]]


def _qgauss_norm(q):
    """Normalization constant C_q such that rho = e_q(-x^2) / (Delta C_q)."""
    a = q - 1.0
    return np.exp(0.5 * np.log(np.pi) + gammaln((3.0 - q) / (2.0 * a)) - 0.5 * np.log(a) - gammaln(1.0 / a))


def spectral_density(d: SpectralDensity, omega):
    """Evaluate rho(omega) in ns/rad.

    Accepts complex ``omega`` as well; the result is then the analytic
    continuation of the lineshape, used for pole searches below the real axis.
    """
    x = (np.asarray(omega) - d.center) / d.width
    if d.kind is Kind.LORENTZIAN:
        return 1.0 / (np.pi * d.width * (1.0 + x * x))
    if d.kind is Kind.GAUSSIAN or d.gaussian_limit:
        return np.exp(-x * x) / (SQRT_PI * d.width)
    if d.kind is Kind.DOUBLE_GAUSSIAN:
        s = d.half_splitting / d.width
        return (np.exp(-(x - s) ** 2) + np.exp(-(x + s) ** 2)) / (2.0 * SQRT_PI * d.width)
    a = d.q - 1.0
    if np.iscomplexobj(x):
        eq = np.exp(-np.log(1.0 + a * x * x) / a)
    else:
        eq = np.exp(-np.log1p(a * x * x) / a)
    return eq / (d.width * _qgauss_norm(d.q))


@dataclass(frozen=True)
class SystemParams:
    """Cavity and ensemble constants, all in rad/ns.

    kappa is the cavity energy decay rate (FWHM of the bare resonance),
    omega0 the cavity resonance, coupling the collective coupling Omega with
    Omega**2 = sum g_k**2, and gamma_h the homogeneous linewidth.
    """

    kappa: float
    omega0: float
    coupling: float
    gamma_h: float
    density: SpectralDensity

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be non-negative, got {self.coupling}")
        if self.gamma_h < 0:
            raise ValueError(f"gamma_h must be non-negative, got {self.gamma_h}")
        if not np.isfinite(self.omega0):
            raise ValueError("omega0 must be finite")

    @property
    def detuning(self):
        """Cavity-ensemble detuning delta = omega0 - omega_a."""
        return self.omega0 - self.density.center

    def with_detuning(self, delta):
        return replace(self, omega0=self.density.center + delta)


@dataclass(frozen=True)
class PolaritonPair:
    """Upper and lower polariton poles.

    Positions are the real parts of the poles; linewidths are intensity FWHM,
    ``Gamma = -2 Im(pole)``.
    """

    omega_plus: float
    omega_minus: float
    gamma_plus: float
    gamma_minus: float
    degenerate: bool = False
    poles: tuple = field(default=(), compare=False)

    @property
    def rabi_splitting(self):
        return self.omega_plus - self.omega_minus

    @property
    def rabi_period(self):
        """2 pi / Omega_R in ns."""
        return 2.0 * np.pi / self.rabi_splitting


# --------------------------------------------------------------------------
# susceptibility


def _cauchy_integral(d, u, epsabs=1e-13, epsrel=1e-11, cut=40.0):
    """F(u) = integral rho(x) / (u - x) dx for Im u != 0, by quadrature.

    The near-singular part is removed by subtracting rho(Re u); the remainder
    is smooth and integrated adaptively on +-cut*width, with the tails
    integrated out to infinity.
    """
    c, w = d.center, d.width
    lo, hi = c - cut * w, c + cut * w
    s = min(max(u.real, lo), hi)
    rho_s = float(spectral_density(d, s))

    def core(x, part):
        v = (spectral_density(d, x) - rho_s) / (u - x)
        return v.real if part == 0 else v.imag

    def tail(x, part):
        v = spectral_density(d, x) / (u - x)
        return v.real if part == 0 else v.imag

    pts = [p for p in (s, c) if lo < p < hi]
    if d.kind is Kind.DOUBLE_GAUSSIAN:
        pts += [c - d.half_splitting, c + d.half_splitting]
    pts = sorted(set(pts))
    total = rho_s * (np.log(u - lo) - np.log(u - hi))
    err = 0.0
    for part, unit in ((0, 1.0), (1, 1j)):
        val, e, info = integrate.quad(core, lo, hi, args=(part,), points=pts or None,
                                      limit=400, epsabs=epsabs, epsrel=epsrel, full_output=1)[:3]
        total += unit * val
        err += e
        for a, b in ((-np.inf, lo), (hi, np.inf)):
            val, e = integrate.quad(tail, a, b, args=(part,), limit=200, epsabs=epsabs, epsrel=epsrel)[:2]
            total += unit * val
            err += e
    scale = max(abs(total), 1.0 / w)
    if err > 1e-7 * scale:
        raise QuadratureError("susceptibility quadrature did not converge", err)
    return total


def ensemble_response(p: SystemParams, omega):
    """F(w) = integral rho(x)/(w - x + i gamma_h/2) dx, analytically continued.

    For complex ``omega`` below ``-gamma_h/2`` the continuation from the
    upper half-plane is returned, so zeros of the transmission denominator
    found there are genuine resonances.
    """
    d = p.density
    omega = np.asarray(omega, dtype=complex)
    u = omega + 0.5j * p.gamma_h
    if d.kind is Kind.LORENTZIAN:
        return 1.0 / (u - d.center + 1j * d.width)
    if d.kind is Kind.GAUSSIAN or d.gaussian_limit:
        return -1j * SQRT_PI / d.width * faddeeva((u - d.center) / d.width)
    if d.kind is Kind.DOUBLE_GAUSSIAN:
        out = 0.0
        for c in (d.center - d.half_splitting, d.center + d.half_splitting):
            out = out + faddeeva((u - c) / d.width)
        return -0.5j * SQRT_PI / d.width * out
    flat = np.atleast_1d(u)
    res = np.empty_like(flat)
    for i, ui in enumerate(flat):
        if ui.imag == 0.0:
            # exactly on the real axis only happens for gamma_h = 0: take the
            # limit from above
            ui = ui + 1e-12j * d.width
        val = _cauchy_integral(d, ui)
        if ui.imag < 0:
            val = val - 2j * np.pi * spectral_density(d, ui)
        res[i] = val
    return res[0] if np.ndim(u) == 0 else res.reshape(np.shape(u))


def _ensemble_response_derivative(p, omega):
    d = p.density
    u = np.asarray(omega, dtype=complex) + 0.5j * p.gamma_h
    if d.kind is Kind.LORENTZIAN:
        return -1.0 / (u - d.center + 1j * d.width) ** 2
    if d.kind is Kind.GAUSSIAN or d.gaussian_limit:
        return -1j * SQRT_PI / d.width**2 * faddeeva_derivative((u - d.center) / d.width)
    if d.kind is Kind.DOUBLE_GAUSSIAN:
        out = 0.0
        for c in (d.center - d.half_splitting, d.center + d.half_splitting):
            out = out + faddeeva_derivative((u - c) / d.width)
        return -0.5j * SQRT_PI / d.width**2 * out
    h = 1e-4 * d.width
    return (ensemble_response(p, omega + h) - ensemble_response(p, omega - h)) / (2 * h)


def susceptibility(p: SystemParams, omega):
    """Collective ensemble term Omega**2 F(w) of the transmission denominator."""
    if p.coupling == 0:
        return np.zeros_like(np.asarray(omega, dtype=complex))
    return p.coupling**2 * ensemble_response(p, omega)


def denominator(p: SystemParams, omega):
    omega = np.asarray(omega, dtype=complex)
    return p.omega0 - 0.5j * p.kappa - omega + susceptibility(p, omega)


def transmission(p: SystemParams, omega):
    """Complex amplitude transmission t(w) of the two-sided cavity."""
    return 0.5j * p.kappa / denominator(p, omega)


# --------------------------------------------------------------------------
# poles


def lorentzian_poles(p: SystemParams, delta=None):
    """Closed-form pole pair for a Lorentzian ensemble of the same width.

    Returns ``(upper, lower)`` complex poles. Used directly for Lorentzian
    densities and as Newton seeds otherwise.
    """
    d = p.density
    delta = p.detuning if delta is None else delta
    width = d.equivalent_width()
    k, g, om = p.kappa, p.gamma_h, p.coupling
    base = d.center + delta / 2.0 - 0.25j * (k + g + 2.0 * width)
    root = np.sqrt(om**2 + ((1j * k - 2j * width - 1j * g - 2.0 * delta) / 4.0) ** 2 + 0j)
    a, b = base + root, base - root
    return (a, b) if (a.real, a.imag) >= (b.real, b.imag) else (b, a)


def find_pole(p: SystemParams, seed, tol=1e-9, maxiter=100):
    """Newton iteration for a zero of the transmission denominator.

    Converged when ``|D(w)| < tol * kappa``. Steps are capped at the scale of
    the problem so that a bad seed cannot throw the iterate far into the
    lower half-plane where the Gaussian continuation blows up.
    """
    w = complex(seed)
    cap = 2.0 * (p.coupling + p.kappa + p.density.equivalent_width())
    target = tol * p.kappa
    dw = complex(denominator(p, w))
    if not np.isfinite(dw):
        raise RootFindingError("denominator is not finite at the seed", w, abs(dw))
    for _ in range(maxiter):
        if abs(dw) < target:
            return w
        deriv = -1.0 + p.coupling**2 * complex(_ensemble_response_derivative(p, w))
        if deriv == 0 or not np.isfinite(deriv):
            break
        step = dw / deriv
        if abs(step) > cap:
            step *= cap / abs(step)
        trial = w - step
        d_trial = complex(denominator(p, trial))
        if not np.isfinite(d_trial):
            # keep the last finite iterate for the error report
            break
        w, dw = trial, d_trial
    if abs(dw) < target:
        return w
    raise RootFindingError("pole search did not converge", w, abs(dw))


def _pair_from_poles(up, lo, scale):
    if (up.real, up.imag) < (lo.real, lo.imag):
        up, lo = lo, up
    degenerate = abs(up - lo) < 1e-7 * scale
    return PolaritonPair(up.real, lo.real, -2.0 * up.imag, -2.0 * lo.imag, degenerate, (up, lo))


def polariton_modes(p: SystemParams, delta=None, seeds=None, tol=1e-9):
    """Upper and lower polariton poles at detuning ``delta``.

    Lorentzian densities use the closed form. Every other lineshape is
    solved by Newton iteration from ``seeds`` (defaults to the Lorentzian
    poles of equal width). A pair that collapses onto one root is returned
    with ``degenerate=True``.
    """
    if delta is not None:
        p = p.with_detuning(delta)
    scale = p.coupling + p.kappa + p.density.width
    if p.density.kind is Kind.LORENTZIAN and seeds is None:
        up, lo = lorentzian_poles(p)
        return _pair_from_poles(up, lo, scale)
    if seeds is not None:
        up = find_pole(p, seeds[0], tol=tol)
        lo = find_pole(p, seeds[1], tol=tol)
        return _pair_from_poles(up, lo, scale)
    # The continued lineshape can have several zeros near each polariton.
    # Seed from the equal-width Lorentzian and from the bare coupled modes and
    # keep the least-damped root of each branch: it dominates |t|**2.
    bare = replace(p, density=replace(p.density, kind=Kind.LORENTZIAN, width=1e-9 * scale,
                                      half_splitting=0.0))
    pairs = [lorentzian_poles(p), lorentzian_poles(bare)]
    best = []
    for branch in (0, 1):
        found, last_err = [], None
        for seeds in pairs:
            try:
                found.append(find_pole(p, seeds[branch], tol=tol))
            except RootFindingError as exc:
                last_err = exc
        if not found:
            raise last_err
        best.append(max(found, key=lambda w: w.imag))
    return _pair_from_poles(best[0], best[1], scale)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepTable:
    """Polariton positions and linewidths versus detuning (rad/ns).

    ``omega_middle`` holds the position of a middle transmission peak when
    the spectrum method finds one, NaN otherwise.
    """

    delta: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    omega_middle: np.ndarray

    def rows(self):
        return list(zip(self.delta, self.gamma_plus, self.gamma_minus,
                        self.omega_plus, self.omega_minus, self.omega_middle))


def _parabola_vertex(x, y, i):
    """Sub-grid position and value of the extremum at sample i."""
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return x[i], y1
    off = 0.5 * (y0 - y2) / denom
    h = x[i + 1] - x[i]
    return x[i] + off * h, y1 - 0.25 * (y0 - y2) * off


def _half_max_crossing(x, y, i0, i1, level):
    """Root of a parabola through three samples bracketing ``level``.

    The crossing lies between samples i0 and i1 (adjacent).
    """
    j = min(i0, i1)
    j = min(max(j, 1), len(x) - 2)
    xs, ys = x[j - 1:j + 2], y[j - 1:j + 2] - level
    c = np.polyfit(xs - xs[1], ys, 2)
    roots = np.roots(c)
    lo, hi = sorted((x[i0], x[i1]))
    good = [r.real + xs[1] for r in roots if abs(r.imag) < 1e-12 * (hi - lo + 1)
            and lo - 1e-12 <= r.real + xs[1] <= hi + 1e-12]
    if good:
        return good[0]
    # fall back to linear interpolation
    return x[i0] + (level - y[i0]) * (x[i1] - x[i0]) / (y[i1] - y[i0])


def _peak_fwhm(x, y, i):
    xp, ypk = _parabola_vertex(x, y, i)
    level = 0.5 * ypk
    left = i
    while left > 0 and y[left] >= level:
        if y[left - 1] > y[left] and y[left] >= level:
            return xp, np.nan
        left -= 1
    right = i
    while right < len(y) - 1 and y[right] >= level:
        if y[right + 1] > y[right] and y[right] >= level:
            return xp, np.nan
        right += 1
    if y[left] >= level or y[right] >= level:
        return xp, np.nan
    xl = _half_max_crossing(x, y, left, left + 1, level)
    xr = _half_max_crossing(x, y, right - 1, right, level)
    return xp, xr - xl


def spectrum_peaks(p: SystemParams, n_points=4096, span=None):
    """Local maxima of |t|**2 with their FWHM.

    Returns a list of ``(position, fwhm, height)`` sorted by position. The
    grid is centred between cavity and ensemble and spans
    ``+-(3 Omega + 3 kappa + |delta|/2)`` by default.
    """
    centre = p.density.center + p.detuning / 2.0
    if span is None:
        span = 3.0 * p.coupling + 3.0 * p.kappa + abs(p.detuning) / 2.0
    x = np.linspace(centre - span, centre + span, n_points)
    y = np.abs(transmission(p, x)) ** 2
    idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    idx = [i for i in idx if y[i] > 1e-6 * y.max()]
    out = []
    for i in idx:
        xp, width = _peak_fwhm(x, y, i)
        out.append((xp, width, y[i]))
    return out


def linewidth_sweep(p: SystemParams, deltas: Sequence[float], method="poles", n_points=4096):
    """Polariton linewidths and positions over a detuning grid.

    ``method="poles"`` tracks both poles by continuation, starting from the
    detuning closest to resonance. ``method="fwhm_of_spectrum"`` reads the
    FWHM of the outermost peaks of |t|**2, as an experiment would; a third
    peak between them is reported in ``omega_middle``.
    """
    deltas = np.sort(np.asarray(deltas, dtype=float))
    if deltas.size == 0:
        raise ValueError("empty detuning grid")
    n = deltas.size
    gp, gm, wp, wm, wmid = (np.full(n, np.nan) for _ in range(5))
    if method == "poles":
        start = int(np.argmin(np.abs(deltas)))
        order = [start] + list(range(start + 1, n)) + list(range(start - 1, -1, -1))
        prev = {}
        for i in order:
            q = p.with_detuning(deltas[i])
            if p.density.kind is Kind.LORENTZIAN:
                pair = polariton_modes(q)
            else:
                neighbour = i - 1 if i > start else i + 1
                seeds = prev.get(neighbour) if i != start else None
                if seeds is not None:
                    # shift seeds along with the cavity
                    lz_old = lorentzian_poles(p.with_detuning(deltas[neighbour]))
                    lz_new = lorentzian_poles(q)
                    seeds = (seeds[0] + (lz_new[0] - lz_old[0]), seeds[1] + (lz_new[1] - lz_old[1]))
                pair = polariton_modes(q, seeds=seeds)
            prev[i] = pair.poles
            gp[i], gm[i], wp[i], wm[i] = pair.gamma_plus, pair.gamma_minus, pair.omega_plus, pair.omega_minus
    elif method == "fwhm_of_spectrum":
        for i, dl in enumerate(deltas):
            q = p.with_detuning(dl)
            peaks = spectrum_peaks(q, n_points=n_points)
            if not peaks:
                continue
            if len(peaks) == 1:
                pos, width, _ = peaks[0]
                mid = q.density.center + dl / 2.0
                if pos >= mid:
                    wp[i], gp[i] = pos, width
                else:
                    wm[i], gm[i] = pos, width
                continue
            wm[i], gm[i] = peaks[0][0], peaks[0][1]
            wp[i], gp[i] = peaks[-1][0], peaks[-1][1]
            if len(peaks) >= 3:
                inner = peaks[1:-1]
                wmid[i] = max(inner, key=lambda t: t[2])[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return SweepTable(deltas, gp, gm, wp, wm, wmid)


def protection_residual(p: SystemParams):
    """Residual broadening pi Omega**2 rho(omega_a + Omega) on resonance."""
    d = p.density
    return float(np.pi * p.coupling**2 * spectral_density(d, d.center + p.coupling))


def protected_linewidth(p: SystemParams):
    """Strong-coupling linewidth estimate kappa/2 + gamma_h + residual."""
    return 0.5 * p.kappa + p.gamma_h + protection_residual(p)
