"""Acceptance criteria, one test each. Every test prints a single
``PASS``/``FAIL`` line with the measured value and its target before
asserting at the stated tolerance. Criteria the model does not meet are
left failing."""
import time
from dataclasses import replace

import numpy as np
import pytest

from cavprot import spectral
from cavprot.bounds import ClassicalBoundQuery, classical_fidelity
from cavprot.dynamics import (DEFAULT_N_SIM, PulsePair, converged_fringe_scan, fit_decay, fringe_scan,
                              local_minima, retrieval_efficiency, sample_emitters, simulate, Pulse)
from cavprot.presets import preset
from cavprot.tomography import bloch_grid, fidelity, reconstruct, simulated_tomography, tomography_amplitudes
from cavprot.units import ghz, ns_to_ps, to_ghz

from conftest import local_maxima_count
from test_spectral import _oracle_response

TAU = np.arange(0.0, 100.0 + 1e-9, 0.5)
FIT_START_PS = 8.0  # twice the pulse width


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def gauss():
    return preset("nd-yvo-0.1pct", "gaussian")


@pytest.fixture(scope="module")
def modes(gauss):
    return spectral.polariton_modes(gauss)


@pytest.fixture(scope="module")
def scans(gauss, modes):
    """Converged fringe scans for the four excitation schemes."""
    t0 = time.perf_counter()
    uncoupled = replace(gauss, coupling=0.0)
    out = {}
    for key, p, first, second in [("uncoupled", uncoupled, "none", "none"),
                                  ("single", gauss, "bandpass-lower", "bandpass-lower"),
                                  ("two", gauss, "none", "none"),
                                  ("gti", gauss, "gti", "none")]:
        pp = PulsePair(first_filter=first, second_filter=second)
        out[key] = converged_fringe_scan(p, p.density, pp, TAU, modes=None if key == "uncoupled" else modes)
    out["seconds"] = time.perf_counter() - t0
    return out


def test_criterion_01_gaussian_resonant_linewidth(gauss, report):
    t0 = time.perf_counter()
    gamma = to_ghz(spectral.polariton_modes(gauss).gamma_plus)
    dt = time.perf_counter() - t0
    ok = abs(gamma - 22.0) <= 1.0 and dt < 1.0
    report("1 Gaussian Gamma(0)", ok, f"Gamma/2pi = {gamma:.4f} GHz (target 22 +- 1), {dt:.3f} s")
    assert ok


def test_criterion_02_residual_broadening(gauss, report):
    t0 = time.perf_counter()
    lorentz = replace(gauss, density=spectral.SpectralDensity.lorentzian(gauss.density.width))
    rg = to_ghz(spectral.protection_residual(gauss))
    rl = to_ghz(spectral.protection_residual(lorentz))
    dt = time.perf_counter() - t0
    ok = abs(rg - 0.1) <= 0.05 and abs(rl - 14.6) <= 0.05 * 14.6 and rl / rg > 100 and dt < 1.0
    report("2 residual broadening", ok, f"Gaussian {rg:.4f} GHz (target 0.1 +- 50%), Lorentzian {rl:.4f} GHz "
           f"(target 14.6 +- 5%), ratio {rl / rg:.1f} (target > 100), {dt:.3f} s")
    assert ok


def test_criterion_03_lorentzian_closed_form(report):
    t0 = time.perf_counter()
    p = preset("nd-yvo-0.1pct", "lorentzian")
    om = p.coupling
    deltas = np.concatenate(([0.0, 10 * om, -10 * om], np.linspace(-9.5 * om, 9.5 * om, 47)))
    worst = 0.0
    for dl in deltas:
        q = p.with_detuning(dl)
        for exact in spectral.lorentzian_poles(q):
            found = spectral.find_pole(q, exact * (1 + 0.02) + 0.05j * om, tol=1e-13)
            worst = max(worst, abs(found - exact) / abs(exact))
    dt = time.perf_counter() - t0
    ok = deltas.size == 50 and worst < 1e-9 and dt < 1.0
    report("3 Lorentzian poles", ok, f"max relative error {worst:.2e} over {deltas.size} detunings "
           f"(target < 1e-9), {dt:.3f} s")
    assert ok


def test_criterion_04_middle_peak(report):
    t0 = time.perf_counter()
    double = preset("nd-yvo-0.1pct", "double-gaussian")
    single = preset("nd-yvo-0.1pct", "gaussian")
    w = ghz(np.linspace(-150.0, 150.0, 30001))
    n_double = local_maxima_count(np.abs(spectral.transmission(double, w)) ** 2)
    n_single = local_maxima_count(np.abs(spectral.transmission(single, w)) ** 2)
    outer_d = [pk[0] for pk in spectral.spectrum_peaks(double)]
    outer_s = [pk[0] for pk in spectral.spectrum_peaks(single)]
    diff = max(abs(to_ghz(outer_d[0] - outer_s[0])), abs(to_ghz(outer_d[-1] - outer_s[-1])))
    dt = time.perf_counter() - t0
    ok = n_double == 3 and n_single == 2 and diff <= 1.0 and dt < 5.0
    report("4 middle peak", ok, f"maxima {n_double} (double) / {n_single} (single), outer peaks "
           f"{to_ghz(outer_d[-1]):.2f} vs {to_ghz(outer_s[-1]):.2f} GHz, difference {diff:.2f} GHz "
           f"(target <= 1), {dt:.2f} s")
    assert ok


def test_criterion_05_faddeeva_oracle(gauss, report):
    t0 = time.perf_counter()
    d = gauss.density
    omega = np.linspace(-3 * d.width, 3 * d.width, 101)
    chi = spectral.susceptibility(gauss, omega)
    ref = np.array([gauss.coupling**2 * _oracle_response(d, w + 0.5j * gauss.gamma_h) for w in omega])
    dt = time.perf_counter() - t0
    err = np.max(np.abs(chi - ref) / np.abs(ref))
    ok = err < 1e-6 and dt < 10.0
    report("5 Faddeeva vs quadrature", ok, f"max relative error {err:.2e} on 101 points (target < 1e-6), "
           f"{dt:.2f} s including the oracle")
    assert ok


def _period_from_nodes(tau, amp, tau_r):
    nodes = local_minima(tau, amp)
    nodes = nodes[nodes <= 5 * tau_r]
    return np.polyfit(np.arange(nodes.size), nodes, 1)[0], nodes


def _node_shift(tau, amp_tl, amp_gti, tau_r):
    tl = local_minima(tau, amp_tl)
    tl = tl[tl <= 4 * tau_r]
    gti = local_minima(tau, amp_gti)
    return float(np.mean([np.min(np.abs(gti - x)) for x in tl]))


def test_criterion_06_fringe_decays(scans, modes, report):
    tau_r = ns_to_ps(modes.rabi_period)
    uncoupled, _ = scans["uncoupled"]
    single, bath = scans["single"]
    two, _ = scans["two"]
    gti, _ = scans["gti"]
    da = fit_decay(TAU, uncoupled.amplitude, FIT_START_PS)
    db = fit_decay(TAU, single.amplitude, FIT_START_PS)
    period, _ = _period_from_nodes(TAU, two.amplitude, tau_r)
    shift = _node_shift(TAU, two.amplitude, gti.amplitude, tau_r)
    oks = [abs(da - 14.5) <= 0.05 * 14.5, abs(db - 29.0) <= 0.10 * 29.0,
           abs(period - tau_r) <= 0.05 * tau_r, abs(shift - tau_r / 4) <= 0.20 * tau_r / 4]
    runtime_ok = scans["seconds"] < 600
    report("6a uncoupled decay", oks[0], f"{da:.2f} ps (target 14.5 +- 5%)")
    report("6b single-polariton decay", oks[1], f"{db:.2f} ps (target 29.0 +- 10%), N_sim = {bath.n}")
    report("6c two-polariton period", oks[2], f"{period:.2f} ps (target tau_R = {tau_r:.2f} +- 5%)")
    report("6d GTI node shift", oks[3], f"{shift:.2f} ps (target tau_R/4 = {tau_r / 4:.2f} +- 20%)")
    report("6 runtime", runtime_ok, f"{scans['seconds']:.1f} s for four converged scans (target < 600)")
    assert all(oks) and runtime_ok


def test_criterion_07_convergence(gauss, scans, report):
    t0 = time.perf_counter()
    worst = 0.0
    for key, first, second in [("single", "bandpass-lower", "bandpass-lower"), ("two", "none", "none"),
                               ("gti", "gti", "none")]:
        trace, bath = scans[key]
        pp = PulsePair(first_filter=first, second_filter=second)
        doubled = fringe_scan(gauss, sample_emitters(gauss.density, 2 * bath.n, gauss.coupling, 0), pp, TAU)
        worst = max(worst, np.max(np.abs(doubled.amplitude - trace.amplitude)) / np.max(trace.amplitude))
    dt = time.perf_counter() - t0
    ok = worst < 0.01 and dt < 600
    report("7 convergence", ok, f"max change on doubling from N_sim = {scans['two'][1].n}: {100 * worst:.3f}% "
           f"of max A (target < 1%), {dt:.1f} s")
    assert ok


def test_criterion_08_tomography(gauss, scans, report):
    t0 = time.perf_counter()
    grid = [fidelity(psi, reconstruct(tomography_amplitudes(psi))) for psi in bloch_grid(100)]
    bath = scans["two"][1]
    res = simulated_tomography(gauss, bath)
    dt = time.perf_counter() - t0
    fids = {k: res[k]["fidelity"] for k in ("zero", "plus", "circular")}
    ok_grid = min(grid) > 0.999
    ok_e2e = all(f >= 0.98 for f in fids.values())
    report("8a noiseless round trip", ok_grid, f"min fidelity {min(grid):.6f} over 100 states (target > 0.999)")
    report("8b end-to-end", ok_e2e and dt < 300,
           "fidelities " + ", ".join(f"{k} {v:.4f}" for k, v in fids.items())
           + f" at tau = {res['tau_ps']:.2f} ps, N_sim = {bath.n} (target >= 0.98 each), {dt:.1f} s")
    assert ok_grid and ok_e2e and dt < 300


def test_criterion_09_classical_bounds(report):
    t0 = time.perf_counter()
    fa = classical_fidelity(ClassicalBoundQuery(0.5, 0.256))
    fb = classical_fidelity(ClassicalBoundQuery(0.5, 0.051))
    dt = time.perf_counter() - t0
    ok = abs(fa - 0.749) <= 1e-3 and abs(fb - 0.789) <= 1e-3 and dt < 1.0
    report("9 classical bounds", ok, f"{fa:.5f} (target 0.749 +- 0.001), {fb:.5f} (target 0.789 +- 0.001), "
           f"{dt:.3f} s")
    assert ok


def test_criterion_10_desk_scale_replacements(gauss, modes, report):
    tau_r = ns_to_ps(modes.rabi_period)
    bath = sample_emitters(gauss.density, DEFAULT_N_SIM, gauss.coupling, 0)
    trace = simulate(gauss, bath, Pulse())
    eff = {}
    for label, (a, b) in {"nominal": (0.5, 1.5), "early": (0.4, 1.4), "late": (0.6, 1.6),
                          "narrow": (0.6, 1.4), "wide": (0.4, 1.6)}.items():
        eff[label] = retrieval_efficiency(trace, (a * tau_r, b * tau_r))
    ok_eff = all(0 < v < 1 for v in eff.values())
    spread = max(eff.values()) - min(eff.values())

    deltas = ghz(np.linspace(-150, 150, 61))
    sweep = spectral.linewidth_sweep(gauss, deltas)
    sym = max(np.max(np.abs(sweep.gamma_plus - sweep.gamma_minus[::-1]) / sweep.gamma_plus),
              np.max(np.abs(sweep.omega_plus + sweep.omega_minus[::-1]) / np.abs(sweep.omega_plus)))
    half = deltas >= 0
    mono = bool(np.all(np.diff(sweep.gamma_plus[half]) > 0))
    ok = ok_eff and sym < 1e-9 and mono
    report("10 retrieval window", ok_eff, ", ".join(f"{k} {100 * v:.1f}%" for k, v in eff.items())
           + f" (window sensitivity {100 * spread:.1f} points; experiment 25.6% with device losses)")
    report("10 sweep invariants", sym < 1e-9 and mono, f"reflection asymmetry {sym:.1e} (target < 1e-9), "
           f"cavity-like branch monotonic: {mono}")
    assert ok
