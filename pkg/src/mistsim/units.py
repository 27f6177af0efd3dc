"""Unit conventions and conversions.

Internal quantities are angular frequencies in rad/ns (hbar = 1) and times
in ns.  All configuration, file and CLI I/O uses ordinary frequencies in
GHz (or MHz where conventional); conversion happens only at the boundary.
"""

import numpy as np
from scipy import constants

TWO_PI = 2.0 * np.pi


def ghz(f: float) -> float:
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * f


def mhz(f: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/ns."""
    return TWO_PI * 1e-3 * f


def to_ghz(w) -> float:
    """Angular frequency in rad/ns -> ordinary frequency in GHz."""
    return w / TWO_PI


def to_mhz(w) -> float:
    """Angular frequency in rad/ns -> ordinary frequency in MHz."""
    return 1e3 * w / TWO_PI


def inductance_nH(e_l: float) -> float:
    """Linear inductance in nH for an inductive energy e_l (rad/ns).

    Uses E_L = (Phi_0 / 2 pi)^2 / L with Phi_0 = h / 2e.
    """
    w_si = e_l * 1e9  # rad/s
    l_si = constants.hbar / (4.0 * constants.e**2 * w_si)
    return l_si * 1e9
