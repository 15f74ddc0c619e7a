"""Sparse random input projection and checkerboard-phase pump patterns."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray  # (out_dim, in_dim), nonnegative
    seed: int | None
    density: float

    @property
    def out_dim(self) -> int:
        return self.entries.shape[0]

    @property
    def in_dim(self) -> int:
        return self.entries.shape[1]


def build_projection(seed: int, in_dim: int, out_dim: int, density: float = 0.5) -> ProjectionMatrix:
    """Seeded sparse nonnegative matrix with entries uniform on (0, 1].

    Exactly ``round(density * size)`` entries are nonzero, placed uniformly at
    random, so every entry is nonzero with marginal probability ``density``.
    """
    if in_dim < 1 or out_dim < 1:
        raise ParameterError("in_dim and out_dim must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    size = in_dim * out_dim
    nnz = max(1, int(round(density * size)))
    flat = np.zeros(size)
    where = rng.choice(size, size=nnz, replace=False)
    flat[where] = 1.0 - rng.random(nnz)  # (0, 1]
    return ProjectionMatrix(flat.reshape(out_dim, in_dim), seed, density)


def make_mask_family(base_seed: int, k: int, in_dim: int, out_dim: int, density: float = 0.5):
    if k < 1:
        raise ParameterError("mask count k must be >= 1")
    return [build_projection(base_seed + i, in_dim, out_dim, density) for i in range(k)]


def encode(a, W: ProjectionMatrix) -> np.ndarray:
    """Node intensities b = W a for one input vector or a batch of row vectors."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1] != W.in_dim:
        raise ParameterError(f"input length {a.shape[-1]} does not match projection in_dim {W.in_dim}")
    if np.any(a < 0):
        raise ParameterError("input intensities must be nonnegative")
    return a @ W.entries.T


def checkerboard_phase(N: int) -> np.ndarray:
    """+1/-1 pattern exp(i*pi*((row + col) mod 2))."""
    rows, cols = np.indices((N, N))
    return np.where((rows + cols) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class PumpPattern:
    drive: np.ndarray  # (N, N) complex, or (count, N, N) for a batch
    background_power: float
    scale: float

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.drive) ** 2


def pump_scale(b_max: float, p_peak: float, p0: float) -> float:
    """Scale s such that the largest encoded intensity maps to ``p_peak`` total power."""
    if b_max <= 0:
        raise ParameterError("cannot normalize an all-zero encoded dataset")
    if p_peak <= p0:
        raise ParameterError(f"peak power {p_peak} must exceed background {p0}")
    return (p_peak - p0) / b_max


def to_pump(b, p0: float, s: float, N: int) -> PumpPattern:
    """Drive F_n = sqrt(P0 + s*b_n) * exp(i*pi*((row + col) mod 2)).

    ``b`` has N*N entries per pattern; a leading batch axis is kept.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[-1] != N * N:
        raise ParameterError(f"expected {N * N} node intensities, got {b.shape[-1]}")
    if np.any(b < 0):
        raise ParameterError("encoded intensities must be nonnegative")
    if p0 < 0 or s <= 0:
        raise ParameterError("need P0 >= 0 and s > 0")
    amp = np.sqrt(p0 + s * b).reshape(b.shape[:-1] + (N, N))
    return PumpPattern((amp * checkerboard_phase(N)).astype(np.complex128), p0, s)


def save_projection(path, W: ProjectionMatrix) -> None:
    lines = [f"# seed={W.seed} density={W.density!r}", f"{W.out_dim},{W.in_dim}"]
    lines += [",".join(repr(float(v)) for v in row) for row in W.entries]
    Path(path).write_text("\n".join(lines) + "\n")


def load_projection(path) -> ProjectionMatrix:
    seed, density = None, float("nan")
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "seed" and val != "None":
                    seed = int(val)
                elif key == "density":
                    density = float(val)
        elif line.strip():
            rows.append([float(v) for v in line.split(",")])
    if not rows or len(rows[0]) != 2:
        raise FormatError(f"{path}: missing 'out_dim,in_dim' header")
    out_dim, in_dim = (int(v) for v in rows[0])
    entries = np.array(rows[1:], dtype=np.float64)
    if entries.shape != (out_dim, in_dim):
        raise FormatError(f"{path}: header says {out_dim}x{in_dim}, body is {entries.shape}")
    return ProjectionMatrix(entries, seed, density)
