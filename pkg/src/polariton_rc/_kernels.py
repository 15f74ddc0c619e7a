"""Compiled per-lattice integration kernels.

Each call integrates one N x N lattice; nothing is shared between calls, so
results for a digit do not depend on which batch or thread processed it.
"""

import numba
import numpy as np

STATUS_CONVERGED = 0
STATUS_TIMEOUT = 1
STATUS_DIVERGED = 2


@numba.njit(cache=True, nogil=True)
def lattice_rhs(psi, F, delta, gamma, g, J, J2, out):
    N = psi.shape[0]
    a = complex(-delta, -0.5 * gamma)
    for r in range(N):
        for c in range(N):
            s = 0j
            if r > 0:
                s += psi[r - 1, c]
            if r < N - 1:
                s += psi[r + 1, c]
            if c > 0:
                s += psi[r, c - 1]
            if c < N - 1:
                s += psi[r, c + 1]
            d = 0j
            if r > 0 and c > 0:
                d += psi[r - 1, c - 1]
            if r > 0 and c < N - 1:
                d += psi[r - 1, c + 1]
            if r < N - 1 and c > 0:
                d += psi[r + 1, c - 1]
            if r < N - 1 and c < N - 1:
                d += psi[r + 1, c + 1]
            p = psi[r, c]
            n = p.real * p.real + p.imag * p.imag
            h = a * p - J * s - J2 * d + g * n * p + F[r, c]
            # -i * h
            out[r, c] = complex(h.imag, -h.real)


@numba.njit(cache=True, nogil=True)
def rk4_inplace(psi, F, delta, gamma, g, J, J2, dt, k1, k2, k3, k4, tmp):
    """One RK4 step; ``k1`` must already hold rhs(psi)."""
    N = psi.shape[0]
    for r in range(N):
        for c in range(N):
            tmp[r, c] = psi[r, c] + 0.5 * dt * k1[r, c]
    lattice_rhs(tmp, F, delta, gamma, g, J, J2, k2)
    for r in range(N):
        for c in range(N):
            tmp[r, c] = psi[r, c] + 0.5 * dt * k2[r, c]
    lattice_rhs(tmp, F, delta, gamma, g, J, J2, k3)
    for r in range(N):
        for c in range(N):
            tmp[r, c] = psi[r, c] + dt * k3[r, c]
    lattice_rhs(tmp, F, delta, gamma, g, J, J2, k4)
    for r in range(N):
        for c in range(N):
            psi[r, c] += dt / 6.0 * (k1[r, c] + 2.0 * k2[r, c] + 2.0 * k3[r, c] + k4[r, c])


@numba.njit(cache=True, nogil=True)
def evolve_kernel(psi, F, delta, gamma, g, J, J2, dt, tol, t_max, avg_intensity):
    """Integrate ``psi`` in place until the residual test passes or t_max.

    Returns (status, steps taken). ``avg_intensity`` receives |psi|^2 averaged
    over the last 10% of t_max when the run times out, else the final |psi|^2.
    """
    N = psi.shape[0]
    k1 = np.empty_like(psi)
    k2 = np.empty_like(psi)
    k3 = np.empty_like(psi)
    k4 = np.empty_like(psi)
    tmp = np.empty_like(psi)
    n_steps = int(round(t_max / dt))
    window_start = n_steps - max(1, int(round(0.1 * n_steps)))
    for r in range(N):
        for c in range(N):
            avg_intensity[r, c] = 0.0
    n_avg = 0
    for step in range(n_steps + 1):
        lattice_rhs(psi, F, delta, gamma, g, J, J2, k1)
        res = 0.0
        scale = 1.0
        finite = True
        for r in range(N):
            for c in range(N):
                v = abs(k1[r, c])
                m = abs(psi[r, c])
                if not (np.isfinite(v) and np.isfinite(m)):
                    finite = False
                if v > res:
                    res = v
                if m > scale:
                    scale = m
        if not finite:
            return STATUS_DIVERGED, step
        if res < tol * scale:
            for r in range(N):
                for c in range(N):
                    p = psi[r, c]
                    avg_intensity[r, c] = p.real * p.real + p.imag * p.imag
            return STATUS_CONVERGED, step
        if step == n_steps:
            break
        rk4_inplace(psi, F, delta, gamma, g, J, J2, dt, k1, k2, k3, k4, tmp)
        if step + 1 > window_start:
            for r in range(N):
                for c in range(N):
                    p = psi[r, c]
                    avg_intensity[r, c] += p.real * p.real + p.imag * p.imag
            n_avg += 1
    for r in range(N):
        for c in range(N):
            avg_intensity[r, c] /= n_avg
    return STATUS_TIMEOUT, n_steps
