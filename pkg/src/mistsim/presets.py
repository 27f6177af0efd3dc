"""Built-in device parameter presets.

Values follow the fitted and quoted device parameters: device A (shallow
transmon, flux tunable), device B in its three fitted variants, and the deep
E_J/E_C = 100 study transmon.  Frequencies are stored in GHz/MHz here and
converted to rad/ns on construction.
"""

from __future__ import annotations

from functools import lru_cache

from scipy.optimize import brentq

from . import transmon as tm
from .circuit import CircuitParams
from .units import ghz, mhz

# drive frequencies used in the experiments (GHz)
DRIVE_GHZ = {
    "device-A": 6.11972,
    "device-B-multiharmonic": 7.0535,
    "device-B-conventional": 7.0535,
    "device-B-series-L": 7.0535,
    "deep-transmon-appF": 7.0535,
}

_DEVICE_B_KAPPA_MHZ = 0.92


def _device_a() -> CircuitParams:
    t = tm.TransmonParams(e_c=ghz(0.365), e_j=(ghz(6.71),))
    return CircuitParams(transmon=t, omega_r=ghz(6.12), g=mhz(13.0),
                         kappa=mhz(2.6))


def _device_b_multiharmonic() -> CircuitParams:
    e_j1 = ghz(8.718)
    t = tm.TransmonParams(e_c=ghz(0.2166),
                          e_j=(e_j1, -0.00768 * e_j1, 0.000398 * e_j1))
    return CircuitParams(transmon=t, omega_r=ghz(7.04767), g=mhz(186.5),
                         kappa=mhz(_DEVICE_B_KAPPA_MHZ))


def _device_b_conventional() -> CircuitParams:
    t = tm.TransmonParams(e_c=ghz(0.2056), e_j=(ghz(8.948),))
    return CircuitParams(transmon=t, omega_r=ghz(7.04765), g=mhz(181.9),
                         kappa=mhz(_DEVICE_B_KAPPA_MHZ))


def _device_b_series_l() -> CircuitParams:
    harmonics = tm.series_inductance_harmonics(ghz(8.693), ghz(284.2))
    t = tm.TransmonParams(e_c=ghz(0.2174), e_j=harmonics)
    return CircuitParams(transmon=t, omega_r=ghz(7.04805), g=mhz(180.7),
                         kappa=mhz(_DEVICE_B_KAPPA_MHZ))


def _deep_transmon() -> CircuitParams:
    # E_J/E_C = 100 with omega_01/2pi = 3.61 GHz; coupling and resonator
    # borrowed from device B (only the photon-number conversion uses them).
    def w01(e_c_ghz):
        t = tm.TransmonParams(e_c=ghz(e_c_ghz), e_j=(ghz(100.0 * e_c_ghz),))
        spec = tm.spectrum(t, 2, cutoff=60)
        return tm.transition_frequency(spec, 0, 1) - ghz(3.61)

    e_c = brentq(w01, 0.08, 0.25, xtol=1e-10)
    t = tm.TransmonParams(e_c=ghz(e_c), e_j=(ghz(100.0 * e_c),))
    return CircuitParams(transmon=t, omega_r=ghz(7.04767), g=mhz(186.5),
                         kappa=mhz(_DEVICE_B_KAPPA_MHZ))


_FACTORIES = {
    "device-A": _device_a,
    "device-B-multiharmonic": _device_b_multiharmonic,
    "device-B-conventional": _device_b_conventional,
    "device-B-series-L": _device_b_series_l,
    "deep-transmon-appF": _deep_transmon,
}

PRESET_NAMES = tuple(_FACTORIES)


@lru_cache(maxsize=None)
def preset(name: str) -> CircuitParams:
    """Look up a named device preset."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return factory()
