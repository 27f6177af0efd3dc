"""Independent reference implementations used to pin expected values.

Everything here is deliberately written from scratch against the package:
plain dense constructions, textbook formulas, and generic scipy integrators.
"""

import numpy as np
from scipy.integrate import solve_ivp

TWO_PI = 2.0 * np.pi


def brute_force_levels(e_c, e_js, n_g, n_levels, cutoff=200, flux=0.0):
    """Charge-basis diagonalization with explicit loops at a high cutoff."""
    scale = abs(np.cos(np.pi * flux))
    dim = 2 * cutoff + 1
    h = np.zeros((dim, dim))
    for row in range(dim):
        k = row - cutoff
        h[row, row] = 4.0 * e_c * (k - n_g) ** 2
        for m, e_jm in enumerate(e_js, start=1):
            if row + m < dim:
                h[row, row + m] = -0.5 * e_jm * scale
                h[row + m, row] = -0.5 * e_jm * scale
    vals = np.linalg.eigvalsh(h)
    return vals[:n_levels] - vals[0]


def free_rotor_levels(e_c, n_g, n_levels, k_max=40):
    """Exact eigenvalues 4 E_C (k - n_g)^2, sorted."""
    ks = np.arange(-k_max, k_max + 1)
    return np.sort(4.0 * e_c * (ks - n_g) ** 2)[:n_levels]


def lorentzian_steady_state(eps_d, detuning, kappa):
    """Linear-cavity steady-state photon number."""
    return (eps_d / 2.0) ** 2 / (detuning**2 + kappa**2 / 4.0)


def landau_zener_formula(gap, speed):
    return np.exp(-np.pi * gap**2 / (2.0 * speed))


def rabi_angle_per_period(eps, coupling, omega_d):
    """RWA Rabi rotation angle over one period of a resonant cosine drive.

    Rabi rate is eps * |coupling| for H = H0 + eps cos(w t) V with
    <0|V|1> = coupling and w = E1 - E0."""
    period = TWO_PI / omega_d
    return eps * abs(coupling) * period


def reference_propagator(h_func, t0, t1, dim, rtol=1e-12, atol=1e-14):
    """Propagator from a generic high-accuracy ODE integration."""

    def rhs(t, y):
        u = y.reshape(dim, dim)
        return (-1j * h_func(t) @ u).ravel()

    sol = solve_ivp(rhs, (t0, t1), np.eye(dim, dtype=complex).ravel(),
                    method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1].reshape(dim, dim)


def master_equation_reference(h_func, collapse_ops, rho0, t_eval,
                              rtol=1e-10, atol=1e-12):
    """Direct Lindblad integration; h_func(t) -> Hermitian matrix."""
    dim = rho0.shape[0]
    cs = [np.asarray(c, dtype=complex) for c in collapse_ops]
    cdc = [c.conj().T @ c for c in cs]

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        h = h_func(t)
        drho = -1j * (h @ rho - rho @ h)
        for c, nn in zip(cs, cdc):
            drho += c @ rho @ c.conj().T - 0.5 * (nn @ rho + rho @ nn)
        return drho.ravel()

    sol = solve_ivp(rhs, (t_eval[0], t_eval[-1]), rho0.ravel().astype(complex),
                    t_eval=t_eval, method="DOP853", rtol=rtol, atol=atol)
    return sol.y.T.reshape(len(t_eval), dim, dim)
