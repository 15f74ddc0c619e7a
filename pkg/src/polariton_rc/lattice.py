"""Driven-dissipative Kerr lattice in the rotating frame.

Each node obeys

    i dpsi_n/dt = (-delta - i*gamma/2) psi_n - J * sum_NN psi_m - J2 * sum_diag psi_m
                  + g |psi_n|^2 psi_n + F_n

on an N x N grid with open boundaries. Units are set by gamma (gamma = 1 means
time in units of the inverse loss rate).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .encoder import PumpPattern, checkerboard_phase
from .errors import DivergenceError, ParameterError


@dataclass(frozen=True)
class LatticeParams:
    N: int = 8
    delta: float = 1.5
    gamma: float = 1.0
    g: float = 0.01
    J: float = 0.3
    J2: float = 0.15
    dt: float = 0.01
    t_max: float = 200.0
    tol: float = 1e-9

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("lattice side N must be >= 1")
        if self.gamma < 0:
            raise ParameterError("loss rate gamma must be nonnegative")
        if self.g < 0:
            raise ParameterError("Kerr coefficient g must be nonnegative")
        if self.dt <= 0 or self.t_max <= 0 or self.tol <= 0:
            raise ParameterError("dt, t_max and tol must be positive")
        check_step(self, self.dt)

    def with_(self, **changes) -> "LatticeParams":
        return replace(self, **changes)


def check_step(p: LatticeParams, dt: float) -> None:
    if dt * max(abs(p.delta), p.gamma, abs(p.J)) >= 0.5:
        raise ParameterError(f"dt={dt} violates the stability guard dt*max(|delta|, gamma, |J|) < 0.5")


def _require_loss(p: LatticeParams) -> None:
    # gamma = 0 is allowed for conservative checks of rhs/rk4_step only
    if p.gamma <= 0:
        raise ParameterError("a steady state needs gamma > 0")


def _drive(pump) -> np.ndarray:
    return np.asarray(pump.drive if isinstance(pump, PumpPattern) else pump, dtype=np.complex128)


def _check_shape(psi: np.ndarray, F: np.ndarray, p: LatticeParams) -> None:
    if psi.shape[-2:] != (p.N, p.N) or F.shape[-2:] != (p.N, p.N):
        raise ParameterError(f"fields must be {p.N}x{p.N}, got psi {psi.shape} and F {F.shape}")


def neighbor_sum(psi: np.ndarray, J: float, J2: float) -> np.ndarray:
    """J * (edge neighbors) + J2 * (diagonal neighbors), open boundaries; last two axes are the grid."""
    s = np.zeros_like(psi)
    s[..., 1:, :] += psi[..., :-1, :]
    s[..., :-1, :] += psi[..., 1:, :]
    s[..., :, 1:] += psi[..., :, :-1]
    s[..., :, :-1] += psi[..., :, 1:]
    d = np.zeros_like(psi)
    d[..., 1:, 1:] += psi[..., :-1, :-1]
    d[..., :-1, :-1] += psi[..., 1:, 1:]
    d[..., 1:, :-1] += psi[..., :-1, 1:]
    d[..., :-1, 1:] += psi[..., 1:, :-1]
    return J * s + J2 * d


def rhs(psi, pump, p: LatticeParams) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    F = _drive(pump)
    _check_shape(psi, F, p)
    with np.errstate(over="ignore", invalid="ignore"):
        h = (-p.delta - 0.5j * p.gamma) * psi - neighbor_sum(psi, p.J, p.J2) + p.g * transmission(psi) * psi + F
    return -1j * h


def rk4_step(psi, pump, p: LatticeParams, dt: float | None = None) -> np.ndarray:
    dt = p.dt if dt is None else dt
    check_step(p, dt)
    psi = np.asarray(psi, dtype=np.complex128)
    k1 = rhs(psi, pump, p)
    k2 = rhs(psi + 0.5 * dt * k1, pump, p)
    k3 = rhs(psi + 0.5 * dt * k2, pump, p)
    k4 = rhs(psi + dt * k3, pump, p)
    with np.errstate(over="ignore", invalid="ignore"):
        out = psi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite amplitudes after an RK4 step with dt={dt}; reduce dt")
    return out


class SteadyState(NamedTuple):
    psi: np.ndarray
    converged: bool
    t_elapsed: float
    # |psi|^2 if converged, else averaged over the final 10% of t_max
    intensity: np.ndarray


def evolve_to_steady(psi0, pump, p: LatticeParams) -> SteadyState:
    """Integrate with RK4 until max|dpsi/dt| < tol * max(1, max|psi|) or t_max."""
    F = _drive(pump)
    psi = np.array(psi0, dtype=np.complex128)
    _check_shape(psi, F, p)
    _require_loss(p)
    if not np.all(np.isfinite(psi)):
        raise ParameterError("initial field contains NaN/Inf")
    avg = np.empty(psi.shape)
    status, steps = _kernels.evolve_kernel(
        psi, np.ascontiguousarray(F), p.delta, p.gamma, p.g, p.J, p.J2, p.dt, p.tol, p.t_max, avg
    )
    if status == _kernels.STATUS_DIVERGED:
        raise DivergenceError(f"lattice amplitudes diverged after {steps} steps; reduce dt")
    return SteadyState(psi, status == _kernels.STATUS_CONVERGED, steps * p.dt, avg)


class BatchSteadyState(NamedTuple):
    psi: np.ndarray  # (count, N, N)
    converged: np.ndarray  # (count,) bool
    t_elapsed: np.ndarray
    intensity: np.ndarray


def evolve_batch(drives, p: LatticeParams, threads: int = 1) -> BatchSteadyState:
    """Cold-start steady states for a stack of drives, one independent run each.

    A divergent sample raises DivergenceError naming its index.
    """
    F = np.ascontiguousarray(drives, dtype=np.complex128)
    if F.ndim != 3:
        raise ParameterError("drives must be a (count, N, N) stack")
    count = len(F)
    psi = np.zeros_like(F)
    avg = np.empty(F.shape)
    status = np.zeros(count, dtype=np.int64)
    steps = np.zeros(count, dtype=np.int64)
    _check_shape(psi, F, p)
    _require_loss(p)

    def work(idx):
        for i in idx:
            status[i], steps[i] = _kernels.evolve_kernel(
                psi[i], F[i], p.delta, p.gamma, p.g, p.J, p.J2, p.dt, p.tol, p.t_max, avg[i]
            )

    chunks = np.array_split(np.arange(count), max(1, threads))
    if threads <= 1:
        work(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    bad = np.flatnonzero(status == _kernels.STATUS_DIVERGED)
    if len(bad):
        raise DivergenceError(f"{len(bad)} simulations diverged (first sample index {bad[0]}); reduce dt")
    return BatchSteadyState(psi, status == _kernels.STATUS_CONVERGED, steps * p.dt, avg)


def transmission(psi) -> np.ndarray:
    psi = np.asarray(psi)
    return psi.real ** 2 + psi.imag ** 2


def single_node_roots(p: LatticeParams, drive_power: float) -> list[float]:
    """All steady intensities n >= 0 of one node: n * ((g n - delta)^2 + gamma^2/4) = |F|^2.

    The cubic is split at its critical points into monotone pieces and each
    piece with a sign change is bisected to machine precision.
    """
    P = float(drive_power)
    if P < 0:
        raise ParameterError("drive power must be nonnegative")
    g, d, q = p.g, p.delta, 0.25 * p.gamma ** 2
    if P == 0:
        return [0.0]
    if g == 0:
        return [P / (d * d + q)]

    def f(n):
        return n * ((g * n - d) ** 2 + q) - P

    # f'(n) = 3 g^2 n^2 - 4 g d n + d^2 + q
    disc = 4 * g * g * (d * d - 3 * q)
    crit = []
    if disc > 0:
        r = np.sqrt(disc)
        crit = sorted(c for c in ((4 * g * d - r) / (6 * g * g), (4 * g * d + r) / (6 * g * g)) if c > 0)
    upper = P / q  # n * gamma^2/4 <= P for any root
    edges = [0.0] + [c for c in crit if c < upper] + [upper]
    found = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi = f(lo), f(hi)
        if flo == 0 or fhi == 0:
            found.append(lo if flo == 0 else hi)
            continue
        if flo * fhi > 0:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            fmid = f(mid)
            if fmid * flo > 0:
                lo, flo = mid, fmid
            else:
                hi = mid
        found.append(0.5 * (lo + hi))
    # a tangential touch at a fold has no sign change, so bisection cannot see it
    found += [c for c in crit if abs(f(c)) <= 1e-12 * P]
    roots = []
    for n in sorted(found):
        if not roots or n - roots[-1] > 1e-9 * max(1.0, n):
            roots.append(n)
    return sorted(roots)


def uniform_drive(p: LatticeParams, power: float) -> np.ndarray:
    """Equal power on every node with the checkerboard phase."""
    return np.sqrt(power) * checkerboard_phase(p.N).astype(np.complex128)


def response_curve(p: LatticeParams, drive_powers, sweep: str = "up") -> list[tuple[float, float]]:
    """Steady output vs input power under a warm-started sweep.

    Output is the node-averaged transmission. The list is returned in
    ascending power order for both sweep directions.
    """
    if sweep not in ("up", "down"):
        raise ParameterError(f"sweep must be 'up' or 'down', not {sweep!r}")
    powers = [float(x) for x in drive_powers]
    if any(b < a for a, b in zip(powers, powers[1:])):
        raise ParameterError("drive powers must be ascending")
    order = powers if sweep == "up" else powers[::-1]
    psi = np.zeros((p.N, p.N), dtype=np.complex128)
    out = {}
    for i, P in enumerate(order):
        ss = evolve_to_steady(psi, uniform_drive(p, P), p)
        psi = ss.psi
        out[i] = (P, float(np.mean(ss.intensity)))
    points = [out[i] for i in range(len(order))]
    return points if sweep == "up" else points[::-1]


def render_camera(intensities, R: int, sigma: float) -> np.ndarray:
    """Sum of Gaussian spots (width sigma, in node pitches) sampled on an R x R grid.

    The grid covers the lattice footprint [-1/2, N - 1/2]^2, so for R = N the
    pixel centers sit exactly on the nodes. Accepts a leading batch axis.
    """
    if R < 1:
        raise ParameterError("camera resolution must be >= 1")
    if sigma <= 0:
        raise ParameterError("point-spread width must be positive")
    I = np.asarray(intensities, dtype=np.float64)
    N = I.shape[-1]
    centers = (np.arange(R) + 0.5) * N / R - 0.5
    G = np.exp(-((centers[:, None] - np.arange(N)[None, :]) ** 2) / (2 * sigma ** 2))
    return np.einsum("ij,...jk,lk->...il", G, I, G)


def quad_dev_image(intensities) -> np.ndarray:
    """(I - mean I)^2 for display; never used as a classifier feature."""
    I = np.asarray(intensities, dtype=np.float64)
    if I.size == 0:
        raise ParameterError("empty intensity map")
    return (I - I.mean()) ** 2


@dataclass(frozen=True)
class ConnectivityResult:
    probe: tuple[int, int]
    powers: np.ndarray
    all_neighbors: np.ndarray  # scenario (i): every node but the probe pumped
    second_only: np.ndarray  # scenario (ii): probe and its edge neighbors dark

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.all_neighbors > 0, self.second_only / self.all_neighbors, np.nan)


def connectivity_masks(N: int, probe: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    r, c = probe
    if not (0 <= r < N and 0 <= c < N):
        raise ParameterError(f"probe {probe} outside the {N}x{N} lattice")
    first = np.ones((N, N))
    first[r, c] = 0.0
    second = first.copy()
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        if 0 <= r + dr < N and 0 <= c + dc < N:
            second[r + dr, c + dc] = 0.0
    return first, second


def connectivity_experiment(p: LatticeParams, powers, probe: tuple[int, int] | None = None) -> ConnectivityResult:
    """Probe-node transmission when only its surroundings are pumped.

    Both scenarios sweep the neighbor power upward, warm-starting each point
    from the previous steady state.
    """
    probe = probe if probe is not None else ((p.N - 1) // 2, (p.N - 1) // 2)
    powers = np.asarray(powers, dtype=np.float64)
    if np.any(powers < 0):
        raise ParameterError("pump powers must be nonnegative")
    curves = []
    for mask in connectivity_masks(p.N, probe):
        psi = np.zeros((p.N, p.N), dtype=np.complex128)
        vals = []
        for P in powers:
            ss = evolve_to_steady(psi, mask * uniform_drive(p, P), p)
            psi = ss.psi
            vals.append(ss.intensity[probe])
        curves.append(np.array(vals))
    return ConnectivityResult(probe, powers, curves[0], curves[1])
