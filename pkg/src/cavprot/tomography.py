"""Frequency-bin qubit tomography from two-pulse fringe amplitudes.

Basis: |0> is the lower polariton, |1> the upper one. Pauli matrices are
sigma_1 = X, sigma_2 = Y, sigma_3 = Z with |0> the +1 eigenvector of Z.

The four probe encodings of the second photon are
``(|psi_1>/sqrt2, |+>, |R>, |0>)`` with ``|R> = (|0> + i|1>)/sqrt2``; the
resulting fringe amplitudes A_0..A_3 map onto Stokes parameters through
``S_j = (A_j/A_0)**2 - 1``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import dynamics
from .errors import OptimizationError
from .spectral import PolaritonPair, SystemParams, polariton_modes
from .units import ns_to_ps

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class QubitState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |alpha|^2 + |beta|^2 = {norm!r}")

    @classmethod
    def from_bloch(cls, theta, phi):
        return cls(complex(np.cos(theta / 2)), complex(np.exp(1j * phi) * np.sin(theta / 2)))

    @property
    def vector(self):
        return np.array([self.alpha, self.beta], dtype=complex)

    def projector(self):
        v = self.vector
        return np.outer(v, v.conj())


ZERO = QubitState(1.0, 0.0)
ONE = QubitState(0.0, 1.0)
PLUS = QubitState(1 / np.sqrt(2), 1 / np.sqrt(2))
CIRCULAR = QubitState(1 / np.sqrt(2), 1j / np.sqrt(2))


@dataclass(frozen=True)
class FringeAmplitudeSet:
    a0: float
    a1: float
    a2: float
    a3: float
    c0: float = 1.0

    def __post_init__(self):
        for name in ("a0", "a1", "a2", "a3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def as_array(self):
        return np.array([self.a0, self.a1, self.a2, self.a3])


class DensityMatrix2:
    """2x2 Hermitian, unit-trace matrix in the {|0>, |1>} polariton basis.

    Not necessarily positive: linear reconstructions from noisy amplitudes
    can leave the Bloch ball. Behaves as an array via ``np.asarray``.
    """

    def __init__(self, matrix, atol=1e-12):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValueError(f"trace is {np.trace(m).real!r}, expected 1")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.matrix = m

    def __array__(self, dtype=None, copy=None):
        return self.matrix.astype(dtype) if dtype is not None else self.matrix.copy()

    def __repr__(self):
        return f"DensityMatrix2({self.matrix.tolist()!r})"

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, atol=1e-12):
        return bool(self.eigenvalues()[0] >= -atol)

    def bloch(self):
        return bloch_vector(self.matrix)


def count_rate(psi1: QubitState, psi2: QubitState, phi):
    """Detector count rate 2 + 2 cos(phi) |<psi2|psi1>| (ideal polaritons,
    delay equal to one Rabi period)."""
    return 2.0 + 2.0 * np.cos(phi) * abs(np.vdot(psi2.vector, psi1.vector))


def tomography_amplitudes(psi1: QubitState, c0=1.0):
    """Ideal fringe amplitudes for the four probe encodings."""
    a, b = psi1.alpha, psi1.beta
    r = 1.0 / np.sqrt(2.0)
    return FringeAmplitudeSet(c0 * r * np.sqrt(abs(a) ** 2 + abs(b) ** 2),
                              c0 * r * abs(a + b),
                              c0 * r * abs(a - 1j * b),
                              c0 * abs(a),
                              c0)


def stokes(amps: FringeAmplitudeSet):
    """Normalized Stokes vector (S_1, S_2, S_3)/S_0 from fringe amplitudes."""
    if amps.a0 <= 0:
        raise ValueError("A_0 must be positive for reconstruction")
    arr = amps.as_array()
    return (arr[1:] / arr[0]) ** 2 - 1.0


def density_matrix(amps: FringeAmplitudeSet):
    """Linear reconstruction; Hermitian with unit trace, not necessarily PSD."""
    s = stokes(amps)
    return DensityMatrix2(0.5 * (SIGMA[0] + s[0] * SIGMA[1] + s[1] * SIGMA[2] + s[2] * SIGMA[3]))


def bloch_vector(rho):
    rho = np.asarray(rho)
    return np.array([np.real(np.trace(rho @ SIGMA[j])) for j in (1, 2, 3)])


def _rho_from_t(x):
    t = np.array([[x[0], 0.0], [x[2] + 1j * x[3], x[1]]], dtype=complex)
    m = t.conj().T @ t
    return m / np.real(np.trace(m))


def _t_from_rho(rho, floor=1e-6):
    """Parameters of the lower-triangular T with rho = T^dag T (after
    clipping negative eigenvalues)."""
    vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    vals = np.clip(vals, floor, None)
    r = (vecs * vals) @ vecs.conj().T
    r /= np.real(np.trace(r))
    t2 = np.sqrt(np.real(r[1, 1]))
    off = r[1, 0] / t2
    t1 = np.sqrt(max(np.real(r[0, 0]) - abs(off) ** 2, 0.0))
    return np.array([t1, t2, off.real, off.imag])


def mle_cost(rho, rho_raw):
    """Squared mismatch of predicted and measured (A_j/A_0)**2 ratios.

    For a state rho the predicted ratio is ``1 + Tr(rho sigma_j)``.
    """
    return float(np.sum((bloch_vector(rho) - bloch_vector(rho_raw)) ** 2))


def mle_project(rho_raw, maxiter=2000):
    """Closest physical state under :func:`mle_cost`.

    Parametrized as ``T^dag T / Tr(T^dag T)`` with T lower triangular,
    started from the eigenvalue-clipped input. Inputs that are already
    physical are returned unchanged. Raises OptimizationError (carrying
    the final cost) if BFGS exhausts ``maxiter``.
    """
    rho_raw = np.array(rho_raw, dtype=complex)
    if np.max(np.abs(rho_raw - rho_raw.conj().T)) > 1e-10:
        raise ValueError("input is not Hermitian")
    if abs(np.trace(rho_raw) - 1.0) > 1e-10:
        raise ValueError("input does not have unit trace")
    if np.min(np.linalg.eigvalsh(rho_raw)) >= -1e-12:
        return DensityMatrix2(rho_raw)
    x0 = _t_from_rho(rho_raw)
    res = optimize.minimize(lambda x: mle_cost(_rho_from_t(x), rho_raw), x0, method="BFGS",
                            options={"maxiter": maxiter, "gtol": 1e-12})
    rho = _rho_from_t(res.x)
    # BFGS reports precision loss near the optimum of this flat-bottomed
    # cost; only a cost that is still decreasing counts as non-convergence
    if not res.success and res.nit >= maxiter:
        raise OptimizationError("MLE projection did not converge", res.fun)
    return DensityMatrix2(rho)


def reconstruct(amps: FringeAmplitudeSet):
    """Linear reconstruction followed by the physicality projection."""
    return mle_project(density_matrix(amps))


def fidelity(psi: QubitState, rho):
    """<psi|rho|psi>, clipped to [0, 1] against rounding."""
    v = psi.vector
    f = float(np.real(v.conj() @ np.asarray(rho) @ v))
    return min(max(f, 0.0), 1.0)


def bloch_grid(n=100):
    """Roughly uniform pure states on the Bloch sphere (Fibonacci lattice)."""
    k = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * k / n)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    return [QubitState.from_bloch(th, ph) for th, ph in zip(theta, phi)]


# --------------------------------------------------------------------------
# tomography from simulated fringes

PROBES = {"a0": None, "a1": dynamics.Filter.NONE, "a2": dynamics.Filter.GTI,
          "a3": dynamics.Filter.BANDPASS_LOWER}

INPUTS = {"zero": (dynamics.Filter.BANDPASS_LOWER, ZERO),
          "plus": (dynamics.Filter.NONE, PLUS),
          "circular": (dynamics.Filter.GTI, CIRCULAR)}


class SimulatedFringes:
    """Single-pulse transmitted fields for every filter, from one bath.

    The fringe amplitude of a pulse pair at delay tau is ``4 |X(tau)|`` with
    X the delayed overlap of the two transmitted fields (see
    :func:`cavprot.dynamics.fringe_scan`), so four simulations cover every
    input/probe combination.
    """

    def __init__(self, p: SystemParams, bath, width_ps=4.0, gti_phase=0.52 * np.pi,
                 modes: PolaritonPair = None, span_ps=None):
        self.modes = polariton_modes(p) if modes is None else modes
        tau_r = ns_to_ps(self.modes.rabi_period)
        if span_ps is None:
            span_ps = 3.0 * tau_r + 10.0 * ns_to_ps(1.0 / p.kappa) + 5.0 * width_ps
        pulses = {f: dynamics.Pulse(width_ps, 0.0, 0.0, f, gti_phase) for f in dynamics.Filter}
        self.t_ps = dynamics.response_grid(list(pulses.values()), span_ps, self.modes)
        self.fields = {f: dynamics.simulate(p, bath, [pl], t_grid_ps=self.t_ps, modes=self.modes).c_t
                       for f, pl in pulses.items()}
        self.rabi_period_ps = tau_r

    def amplitude(self, first, second, tau_ps, second_scale=1.0):
        """Fringe amplitude C_max - C_min for the pair (first, second)."""
        f1 = self.fields[dynamics.Filter(first)]
        f2 = self.fields[dynamics.Filter(second)]
        return 4.0 * second_scale * np.abs(dynamics.delayed_overlap(self.t_ps, f1, f2, tau_ps))

    def rephasing_delay(self, resolution_ps=0.05):
        """Delay of the fringe maximum of two unfiltered pulses nearest tau_R.

        This is the operational storage time: the delay at which the
        two-polariton excitation rephases, shifted from 2 pi / Omega_R by the
        finite polariton linewidths.
        """
        tau_r = self.rabi_period_ps
        grid = np.arange(0.5 * tau_r, 1.5 * tau_r, resolution_ps)
        amp = self.amplitude("none", "none", grid)
        peaks = dynamics.local_maxima(grid, amp)
        if peaks.size == 0:
            return tau_r
        return float(peaks[np.argmin(np.abs(peaks - tau_r))])

    def amplitudes(self, input_filter, tau_ps):
        """A_0..A_3 for an input prepared with ``input_filter``.

        Each probe amplitude is calibrated by the autocorrelation fringes of
        the input and the probe at the same delay,
        ``A_j = C_0 |X_in,j| / sqrt(|X_in,in| |X_j,j|)``, so every probe acts
        as a unit-norm state after the same storage time. A_0 uses the input
        filter attenuated by 1/sqrt(2). C_0 is the autocorrelation amplitude
        of the input.
        """
        fin = dynamics.Filter(input_filter)
        self_in = self.amplitude(fin, fin, tau_ps)
        vals = {}
        for key, probe in PROBES.items():
            if probe is None:
                vals[key] = self.amplitude(fin, fin, tau_ps, 1.0 / np.sqrt(2.0)) / self_in
            else:
                norm = np.sqrt(self_in * self.amplitude(probe, probe, tau_ps))
                vals[key] = self.amplitude(fin, probe, tau_ps) / norm
        return FringeAmplitudeSet(*(self_in * vals[k] for k in ("a0", "a1", "a2", "a3")), c0=self_in)


def simulated_tomography(p: SystemParams, bath, tau_ps=None, **kwargs):
    """Reconstruct the three standard input states from simulated fringes.

    Returns a dict keyed by ``zero``, ``plus`` and ``circular`` with the
    amplitudes, the MLE state and its fidelity to the target, plus the
    delay used under ``tau_ps``. The default delay is tau_R = 2 pi / Omega_R,
    where the ideal polariton phases realign.
    """
    sim = SimulatedFringes(p, bath, **kwargs)
    tau = sim.rabi_period_ps if tau_ps is None else float(tau_ps)
    out = {"tau_ps": tau}
    for name, (filt, target) in INPUTS.items():
        amps = sim.amplitudes(filt, tau)
        rho = reconstruct(amps)
        out[name] = {"amplitudes": amps, "rho": rho, "fidelity": fidelity(target, rho)}
    return out
