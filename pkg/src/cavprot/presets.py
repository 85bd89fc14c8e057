"""Device parameter sets for the two Nd:YVO nanocavities (user units: GHz)."""
from .spectral import SpectralDensity, SystemParams
from .units import ghz, mhz

PRESETS = {
    "nd-yvo-0.1pct": dict(kappa=44.0, coupling=25.0, gamma_h_mhz=0.82, width=14.6,
                          branch_width=5.0, half_splitting=8.5, pulse_ps=4.0),
    "nd-yvo-1pct": dict(kappa=20.0, coupling=55.0, gamma_h_mhz=40.0, width=45.6,
                        branch_width=None, half_splitting=None, pulse_ps=1.5),
}


def preset(name, lineshape="gaussian", detuning_ghz=0.0):
    """Build SystemParams for a named device.

    ``lineshape`` is one of ``gaussian``, ``lorentzian``, ``double-gaussian``
    (0.1% device only) or ``qgaussian`` (q = 1.01 on the single-Gaussian
    width).
    """
    try:
        c = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if lineshape == "gaussian":
        d = SpectralDensity.gaussian(ghz(c["width"]))
    elif lineshape == "lorentzian":
        d = SpectralDensity.lorentzian(ghz(c["width"]))
    elif lineshape == "qgaussian":
        d = SpectralDensity.qgaussian(ghz(c["width"]), 1.01)
    elif lineshape == "double-gaussian":
        if c["branch_width"] is None:
            raise ValueError(f"preset {name!r} has no double-Gaussian parameters")
        d = SpectralDensity.double_gaussian(ghz(c["branch_width"]), ghz(c["half_splitting"]))
    else:
        raise ValueError(f"unknown lineshape {lineshape!r}")
    return SystemParams(kappa=ghz(c["kappa"]), omega0=ghz(detuning_ghz), coupling=ghz(c["coupling"]),
                        gamma_h=mhz(c["gamma_h_mhz"]), density=d)
