"""Command-line interface.

Every subcommand writes one table, CSV by default or JSON with
``--format json``. Parameters come from built-in presets, an optional flat
``key = value`` config file (``--config``) and command-line flags, in
increasing priority. User-facing units are GHz (ordinary frequency), MHz
for gamma_h, and ps.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import bounds, dynamics, spectral, tomography
from .errors import CavprotError
from .presets import PRESETS, preset
from .spectral import SpectralDensity, SystemParams
from .units import ghz, mhz, ns_to_ps, to_ghz

OUTPUT_DIR_ENV = "CAVPROT_OUTPUT_DIR"
LINESHAPES = ("gaussian", "lorentzian", "qgaussian", "double-gaussian")
FILTERS = tuple(f.value for f in dynamics.Filter)
TARGETS = ("fig2b", "fig2e", "fig2f-theory", "fig3", "figS1", "figS2-theory", "figS3")
TOMO_STATES = ("zero", "plus", "circular", "none")


class ConfigError(Exception):
    pass


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"invalid boolean {text!r}")


def _choice(*allowed):
    def conv(text):
        if text not in allowed:
            raise ValueError(f"{text!r} is not one of {', '.join(allowed)}")
        return text
    conv.__name__ = "choice"
    return conv


@dataclass(frozen=True)
class Option:
    name: str
    type: Callable
    default: object
    help: str


SYSTEM = [
    Option("preset", _choice(*PRESETS), "nd-yvo-0.1pct", "device parameter set"),
    Option("lineshape", _choice(*LINESHAPES), "gaussian", "ensemble lineshape"),
    Option("kappa_ghz", float, None, "cavity linewidth kappa/2pi (overrides preset)"),
    Option("coupling_ghz", float, None, "collective coupling Omega/2pi (overrides preset)"),
    Option("width_ghz", float, None, "inhomogeneous width Delta/2pi; branch width for double-gaussian"),
    Option("half_splitting_ghz", float, None, "double-gaussian half splitting delta_a/2pi"),
    Option("q", float, None, "q-Gaussian shape parameter (default 1.01)"),
    Option("gamma_h_mhz", float, None, "homogeneous linewidth gamma_h/2pi in MHz"),
    Option("detuning_ghz", float, 0.0, "cavity-ensemble detuning delta/2pi"),
]

SIM = [
    Option("n_sim", int, dynamics.DEFAULT_N_SIM, "number of simulated emitters"),
    Option("seed", int, 0, "random seed for emitter sampling"),
    Option("width_ps", float, None, "pulse intensity FWHM (default from preset)"),
    Option("gti_phase_pi", float, 0.52, "GTI phase step in units of pi"),
]

OUTPUT = [
    Option("format", _choice("csv", "json"), "csv", "output format"),
    Option("output", str, None, f"output file ('-' for stdout; default ${OUTPUT_DIR_ENV}/<name> or stdout)"),
]

COMMANDS = {
    "spectrum": SYSTEM + [
        Option("f_min_ghz", float, -150.0, "lowest frequency relative to the ensemble centre"),
        Option("f_max_ghz", float, 150.0, "highest frequency"),
        Option("n_points", int, 3001, "number of frequency points"),
    ],
    "sweep": SYSTEM + [
        Option("delta_min_ghz", float, -150.0, "first detuning"),
        Option("delta_max_ghz", float, 150.0, "last detuning"),
        Option("n_delta", int, 61, "number of detunings"),
        Option("method", _choice("poles", "fwhm"), "poles", "linewidth from poles or spectrum FWHM"),
    ],
    "dynamics": SYSTEM + SIM + [
        Option("first_filter", _choice(*FILTERS), "none", "filter on the first pulse"),
        Option("second_filter", _choice(*FILTERS, "off"), "off", "filter on the second pulse, or off"),
        Option("delay_ps", float, 0.0, "delay of the second pulse"),
        Option("phase_rad", float, 0.0, "carrier phase of the second pulse"),
        Option("photons", float, 0.5, "photons per unfiltered pulse"),
        Option("dt_ps", float, 0.1, "output sampling step"),
        Option("window_start_ps", float, None, "retrieval window start (default last pulse + 0.5 tau_R)"),
        Option("window_end_ps", float, None, "retrieval window end (default last pulse + 1.5 tau_R)"),
    ],
    "fringes": SYSTEM + SIM + [
        Option("first_filter", _choice(*FILTERS), "none", "filter on the first pulse"),
        Option("second_filter", _choice(*FILTERS), "none", "filter on the second pulse"),
        Option("second_scale", float, 1.0, "field amplitude factor of the second pulse"),
        Option("tau_min_ps", float, 0.0, "first delay"),
        Option("tau_max_ps", float, 100.0, "last delay"),
        Option("tau_step_ps", float, 0.5, "delay step"),
        Option("converge", _bool, False, "double n_sim until amplitudes change < 1%"),
    ],
    "tomography": SYSTEM + SIM + [
        Option("a0", float, None, "measured fringe amplitude A_0 (with a1..a3: reconstruct these)"),
        Option("a1", float, None, "fringe amplitude A_1"),
        Option("a2", float, None, "fringe amplitude A_2"),
        Option("a3", float, None, "fringe amplitude A_3"),
        Option("target", _choice(*TOMO_STATES), "none", "target state for the fidelity of given amplitudes"),
        Option("tau_ps", float, None, "storage delay for simulated fringes (default tau_R)"),
    ],
    "classical-bound": [
        Option("mu", float, 0.5, "mean photon number"),
        Option("eta", float, 0.256, "storage and retrieval efficiency"),
        Option("digits", int, 3, "digits of the printed fidelity"),
    ],
    "reproduce": [
        Option("n_sim", int, dynamics.DEFAULT_N_SIM, "number of simulated emitters"),
        Option("seed", int, 0, "random seed for emitter sampling"),
        Option("n_points", int, 3001, "frequency points of spectra"),
        Option("n_delta", int, 121, "detunings of linewidth sweeps"),
        Option("converge", _bool, False, "double n_sim until fringe amplitudes change < 1%"),
    ],
}
for _name in COMMANDS:
    COMMANDS[_name] = COMMANDS[_name] + OUTPUT

COLUMNS = {
    "spectrum": ["freq_GHz", "t_re", "t_im", "abs_t2"],
    "sweep": ["delta_GHz", "gamma_plus_GHz", "gamma_minus_GHz", "omega_plus_GHz", "omega_minus_GHz",
              "omega_middle_GHz"],
    "dynamics": ["t_ps", "input_re", "input_im", "cavity_re", "cavity_im", "transmitted_per_ps",
                 "reflected_per_ps"],
    "fringes": ["tau_ps", "amplitude", "counts_0", "counts_pi"],
    "tomography": ["state", "a0", "a1", "a2", "a3", "bloch_x", "bloch_y", "bloch_z", "fidelity"],
    "classical-bound": ["mu", "eta", "n_min", "p", "fidelity"],
    "fig2b": ["freq_GHz", "abs_t2"],
    "fig2e": ["freq_GHz", "abs_t2"],
    "figS1": ["freq_GHz", "abs_t2_double_gaussian", "abs_t2_gaussian"],
    "fig2f-theory": ["delta_GHz", "gamma_plus_GHz", "gamma_minus_GHz", "lorentzian_gamma_plus_GHz",
                     "lorentzian_gamma_minus_GHz"],
    "figS2-theory": ["device", "delta_GHz", "gamma_plus_GHz", "gamma_minus_GHz",
                     "lorentzian_gamma_plus_GHz", "lorentzian_gamma_minus_GHz"],
    "fig3": ["panel", "tau_ps", "amplitude"],
    "figS3": ["panel", "tau_ps", "amplitude"],
}


# --------------------------------------------------------------------------
# configuration


def read_config(path, options):
    """Parse a flat ``key = value`` file. Returns ``{key: converted}``.

    Blank lines and ``#`` comments are ignored; dashes in keys are read as
    underscores. Raises ConfigError with the line number on any problem.
    """
    known = {o.name: o for o in options}
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = known[key].type(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return out


def resolve(args, options):
    """Merge defaults, config file and flags (flags win)."""
    cfg = read_config(args.config, options) if args.config else {}
    out = {}
    for o in options:
        flag = getattr(args, o.name, None)
        out[o.name] = flag if flag is not None else cfg.get(o.name, o.default)
    return out


def system_params(cfg):
    """SystemParams from a preset plus user overrides."""
    name = cfg["preset"]
    base = PRESETS[name]
    shape = cfg["lineshape"]
    p = preset(name, shape, cfg["detuning_ghz"])
    kappa = ghz(cfg["kappa_ghz"]) if cfg["kappa_ghz"] is not None else p.kappa
    coupling = ghz(cfg["coupling_ghz"]) if cfg["coupling_ghz"] is not None else p.coupling
    gamma_h = mhz(cfg["gamma_h_mhz"]) if cfg["gamma_h_mhz"] is not None else p.gamma_h
    d = p.density
    width = ghz(cfg["width_ghz"]) if cfg["width_ghz"] is not None else d.width
    if shape == "double-gaussian":
        split = cfg["half_splitting_ghz"]
        split = ghz(split) if split is not None else ghz(base["half_splitting"])
        d = SpectralDensity.double_gaussian(width, split)
    elif shape == "qgaussian":
        d = SpectralDensity.qgaussian(width, cfg["q"] if cfg["q"] is not None else d.q)
    elif shape == "lorentzian":
        d = SpectralDensity.lorentzian(width)
    else:
        d = SpectralDensity.gaussian(width)
    return SystemParams(kappa=kappa, omega0=p.omega0, coupling=coupling, gamma_h=gamma_h, density=d)


def _positive(cfg, *keys):
    for k in keys:
        if cfg.get(k) is not None and not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive, got {cfg[k]}")


def _pulse_width(cfg):
    return cfg["width_ps"] if cfg["width_ps"] is not None else PRESETS[cfg["preset"]]["pulse_ps"]


def _bath(p, cfg):
    return dynamics.sample_emitters(p.density, cfg["n_sim"], p.coupling, cfg["seed"])


# --------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def _json_value(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return None if math.isnan(v) else float(format(v, ".12g"))


def render(columns, rows, fmt, metadata=None):
    """Serialize a table as CSV or JSON text."""
    if fmt == "json":
        doc = {"columns": list(columns),
               "rows": [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]}
        if metadata:
            doc["metadata"] = {k: _json_value(v) for k, v in metadata.items()}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def emit(text, name, cfg, stdout):
    """Write ``text`` to --output, $CAVPROT_OUTPUT_DIR/<name>.<ext>, or stdout."""
    path = cfg["output"]
    if path is None:
        outdir = os.environ.get(OUTPUT_DIR_ENV)
        if outdir:
            os.makedirs(outdir, exist_ok=True)
            path = os.path.join(outdir, f"{name}.{cfg['format']}")
    if path is None or path == "-":
        stdout.write(text)
        return None
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


# --------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg, log):
    _positive(cfg, "n_points")
    if not cfg["f_max_ghz"] > cfg["f_min_ghz"]:
        raise ConfigError("f_max_ghz must exceed f_min_ghz")
    p = system_params(cfg)
    f = np.linspace(cfg["f_min_ghz"], cfg["f_max_ghz"], cfg["n_points"])
    t = spectral.transmission(p, p.density.center + ghz(f))
    return [(fi, ti.real, ti.imag, abs(ti) ** 2) for fi, ti in zip(f, t)], {}


def _delta_grid(cfg):
    _positive(cfg, "n_delta")
    if cfg["n_delta"] > 1 and not cfg["delta_max_ghz"] > cfg["delta_min_ghz"]:
        raise ConfigError("delta_max_ghz must exceed delta_min_ghz")
    return np.linspace(cfg["delta_min_ghz"], cfg["delta_max_ghz"], cfg["n_delta"])


def cmd_sweep(cfg, log):
    p = system_params(cfg)
    deltas = _delta_grid(cfg)
    method = "poles" if cfg["method"] == "poles" else "fwhm_of_spectrum"
    table = spectral.linewidth_sweep(p, ghz(deltas), method=method)
    rows = []
    for i, dl in enumerate(deltas):
        rows.append((dl, to_ghz(table.gamma_plus[i]), to_ghz(table.gamma_minus[i]),
                     to_ghz(table.omega_plus[i]), to_ghz(table.omega_minus[i]),
                     to_ghz(table.omega_middle[i])))
    return rows, {}


def cmd_dynamics(cfg, log):
    _positive(cfg, "n_sim", "width_ps", "photons", "dt_ps")
    p = system_params(cfg)
    width = _pulse_width(cfg)
    gti = cfg["gti_phase_pi"] * np.pi
    pulses = [dynamics.Pulse(width, 0.0, 0.0, cfg["first_filter"], gti, cfg["photons"])]
    if cfg["second_filter"] != "off":
        pulses.append(dynamics.Pulse(width, cfg["delay_ps"], cfg["phase_rad"], cfg["second_filter"], gti,
                                     cfg["photons"]))
    modes = spectral.polariton_modes(p) if p.coupling > 0 else None
    trace = dynamics.simulate(p, _bath(p, cfg), pulses, dt_ps=cfg["dt_ps"], modes=modes)
    last = max(pl.center_ps for pl in pulses)
    meta = {"transmitted_photons": trace.transmitted_photons(), "input_photons": trace.input_photons()}
    if trace.rabi_period_ps is not None:
        tau_r = trace.rabi_period_ps
        t0 = cfg["window_start_ps"] if cfg["window_start_ps"] is not None else last + 0.5 * tau_r
        t1 = cfg["window_end_ps"] if cfg["window_end_ps"] is not None else last + 1.5 * tau_r
        eff = dynamics.retrieval_efficiency(trace, (t0, t1))
        meta.update(rabi_period_ps=tau_r, window_start_ps=t0, window_end_ps=t1, retrieval_efficiency=eff)
    for k, v in meta.items():
        log(f"{k} = {_fmt(v)}")
    tr = np.abs(trace.c_t) ** 2 * 1e-3
    rf = np.abs(trace.c_r) ** 2 * 1e-3
    rows = [(t, ci.real, ci.imag, a.real, a.imag, x, y)
            for t, ci, a, x, y in zip(trace.t_ps, trace.c_in, trace.a, tr, rf)]
    return rows, meta


def _tau_grid(cfg):
    _positive(cfg, "tau_step_ps")
    if cfg["tau_max_ps"] < cfg["tau_min_ps"]:
        raise ConfigError("tau_max_ps must not be below tau_min_ps")
    n = int(math.floor((cfg["tau_max_ps"] - cfg["tau_min_ps"]) / cfg["tau_step_ps"] + 1e-9)) + 1
    return cfg["tau_min_ps"] + cfg["tau_step_ps"] * np.arange(n)


def _fringes(p, pp, taus, cfg, modes=None):
    if cfg["converge"]:
        trace, bath = dynamics.converged_fringe_scan(p, p.density, pp, taus, seed=cfg["seed"],
                                                     n_start=cfg["n_sim"], modes=modes)
        return trace, bath.n
    return dynamics.fringe_scan(p, _bath(p, cfg), pp, taus, modes=modes), cfg["n_sim"]


def cmd_fringes(cfg, log):
    _positive(cfg, "n_sim", "width_ps", "second_scale")
    p = system_params(cfg)
    pp = dynamics.PulsePair(_pulse_width(cfg), 0.0, 0.0, cfg["first_filter"], cfg["second_filter"],
                            cfg["gti_phase_pi"] * np.pi, second_scale=cfg["second_scale"])
    trace, n = _fringes(p, pp, _tau_grid(cfg), cfg)
    rows = list(zip(trace.tau_ps, trace.amplitude, trace.counts_0, trace.counts_pi))
    return rows, {"n_sim": n}


def _tomo_row(name, amps, rho, fid):
    b = tomography.bloch_vector(rho)
    return (name, amps.a0, amps.a1, amps.a2, amps.a3, b[0], b[1], b[2], fid)


def cmd_tomography(cfg, log):
    given = [cfg[k] for k in ("a0", "a1", "a2", "a3")]
    if any(v is not None for v in given):
        if any(v is None for v in given):
            raise ConfigError("give all of a0, a1, a2, a3 or none of them")
        try:
            amps = tomography.FringeAmplitudeSet(*given)
            rho = tomography.reconstruct(amps)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        target = cfg["target"]
        fid = float("nan")
        if target != "none":
            fid = tomography.fidelity(tomography.INPUTS[target][1], rho)
        return [_tomo_row("input", amps, rho, fid)], {}
    _positive(cfg, "n_sim", "width_ps")
    p = system_params(cfg)
    res = tomography.simulated_tomography(p, _bath(p, cfg), tau_ps=cfg["tau_ps"], width_ps=_pulse_width(cfg),
                                          gti_phase=cfg["gti_phase_pi"] * np.pi)
    rows = [_tomo_row(k, res[k]["amplitudes"], res[k]["rho"], res[k]["fidelity"]) for k in tomography.INPUTS]
    mean = float(np.mean([r[-1] for r in rows]))
    log(f"tau_ps = {_fmt(res['tau_ps'])}")
    log(f"mean_fidelity = {_fmt(mean)}")
    return rows, {"tau_ps": res["tau_ps"], "mean_fidelity": mean}


def cmd_classical_bound(cfg, log):
    try:
        q = bounds.ClassicalBoundQuery(cfg["mu"], cfg["eta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    f = bounds.classical_fidelity(q)
    return [(q.mu, q.eta, bounds.n_min(q), bounds.fill_fraction(q), f)], {}


# reproduce targets


def _spectrum_f(cfg, half_span=150.0):
    return np.linspace(-half_span, half_span, cfg["n_points"])


def _repro_fig2b(cfg, log):
    p = preset("nd-yvo-1pct")
    f = _spectrum_f(cfg, 250.0)
    return [(fi, abs(ti) ** 2) for fi, ti in zip(f, spectral.transmission(p, ghz(f)))]


def _repro_fig2e(cfg, log):
    p = preset("nd-yvo-0.1pct", "double-gaussian")
    f = _spectrum_f(cfg)
    return [(fi, abs(ti) ** 2) for fi, ti in zip(f, spectral.transmission(p, ghz(f)))]


def _repro_figS1(cfg, log):
    f = _spectrum_f(cfg)
    t2 = spectral.transmission(preset("nd-yvo-0.1pct", "double-gaussian"), ghz(f))
    t1 = spectral.transmission(preset("nd-yvo-0.1pct", "gaussian"), ghz(f))
    return [(fi, abs(a) ** 2, abs(b) ** 2) for fi, a, b in zip(f, t2, t1)]


def _gamma_tables(device, deltas):
    g = spectral.linewidth_sweep(preset(device, "gaussian"), ghz(deltas))
    lo = spectral.linewidth_sweep(preset(device, "lorentzian"), ghz(deltas))
    return [(dl, to_ghz(g.gamma_plus[i]), to_ghz(g.gamma_minus[i]), to_ghz(lo.gamma_plus[i]),
             to_ghz(lo.gamma_minus[i])) for i, dl in enumerate(deltas)]


def _repro_fig2f(cfg, log):
    rows = _gamma_tables("nd-yvo-0.1pct", np.linspace(-150.0, 150.0, cfg["n_delta"]))
    zero = min(rows, key=lambda r: abs(r[0]))
    log(f"gamma(0)_GHz = {_fmt(min(zero[1], zero[2]))}")
    return rows


def _repro_figS2(cfg, log):
    rows = []
    for dev, span in (("nd-yvo-1pct", 250.0), ("nd-yvo-0.1pct", 150.0)):
        rows += [(dev,) + r for r in _gamma_tables(dev, np.linspace(-span, span, cfg["n_delta"]))]
    return rows


def _fringe_panels(device, cfg, log, panels):
    """Fringe envelopes; decays are fitted from twice the pulse width on."""
    rows = []
    width = PRESETS[device]["pulse_ps"]
    taus = np.arange(0.0, 120.0 + 1e-9, 0.25)
    for panel, uncoupled, first, second, fit in panels:
        p = preset(device)
        if uncoupled:
            p = replace(p, coupling=0.0)
        pp = dynamics.PulsePair(width, 0.0, 0.0, first, second)
        modes = spectral.polariton_modes(p) if p.coupling > 0 else None
        trace, _ = _fringes(p, pp, taus, cfg, modes)
        rows += [(panel, t, a) for t, a in zip(trace.tau_ps, trace.amplitude)]
        if fit:
            tau_c = dynamics.fit_decay(trace.tau_ps, trace.amplitude, 2.0 * width, peaks_only=fit == "peaks")
            log(f"{panel}: fitted decay {tau_c:.3f} ps")
        if modes is not None and first in ("none", "gti") and second == "none":
            nodes = dynamics.local_minima(trace.tau_ps, trace.amplitude)
            log(f"{panel}: nodes {' '.join(f'{x:.2f}' for x in nodes)} ps; "
                f"tau_R {ns_to_ps(modes.rabi_period):.2f} ps")
    return rows


def _repro_fig3(cfg, log):
    return _fringe_panels("nd-yvo-0.1pct", cfg, log, _FRINGE_PANELS)


def _repro_figS3(cfg, log):
    return _fringe_panels("nd-yvo-1pct", cfg, log, _FRINGE_PANELS[:3])


_FRINGE_PANELS = [
    # panel, uncoupled, first filter, second filter, decay fit
    ("a", True, "none", "none", "all"),
    ("b", False, "bandpass-lower", "bandpass-lower", "all"),
    ("c", False, "none", "none", "peaks"),
    ("d", False, "gti", "none", None),
]

REPRODUCERS = {
    "fig2b": _repro_fig2b,
    "fig2e": _repro_fig2e,
    "fig2f-theory": _repro_fig2f,
    "fig3": _repro_fig3,
    "figS1": _repro_figS1,
    "figS2-theory": _repro_figS2,
    "figS3": _repro_figS3,
}

HANDLERS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "dynamics": cmd_dynamics,
    "fringes": cmd_fringes,
    "tomography": cmd_tomography,
    "classical-bound": cmd_classical_bound,
}


# --------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="cavprot", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, options in COMMANDS.items():
        sp = sub.add_parser(name, help=f"{name} table")
        if name == "reproduce":
            sp.add_argument("target", choices=TARGETS)
        sp.add_argument("--config", help="flat key = value config file")
        for o in options:
            flag = "--" + o.name.replace("_", "-")
            default = "" if o.default is None else f" (default {o.default})"
            # argparse %-formats help strings
            text = (o.help + default).replace("%", "%%")
            sp.add_argument(flag, dest=o.name, type=o.type, default=None, help=text)
    return parser


def run(argv=None, stdout=None, stderr=None):
    """Run the CLI; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr

    def log(msg):
        stderr.write(msg + "\n")

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = resolve(args, COMMANDS[args.command])
        if args.command == "reproduce":
            _positive(cfg, "n_sim", "n_points", "n_delta")
            name = args.target
            rows, meta = REPRODUCERS[name](cfg, log), {}
        else:
            name = args.command
            rows, meta = HANDLERS[name](cfg, log)
        text = render(COLUMNS[name], rows, cfg["format"], meta)
        if name == "classical-bound":
            stdout.write(f"{rows[0][-1]:.{cfg['digits']}f}\n")
            if cfg["output"] is None and not os.environ.get(OUTPUT_DIR_ENV):
                return 0
        emit(text, name, cfg, stdout)
    except ConfigError as exc:
        log(f"config error: {exc}")
        return 1
    except CavprotError as exc:
        log(f"numerical failure: {exc}")
        return 2
    except ValueError as exc:
        log(f"config error: {exc}")
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
