"""Quantum Fisher information for quadrature displacements and metrological power.

The generator is ``g_phi = (a e^{-i phi} + a^dagger e^{i phi}) / sqrt(2)``, i.e. the
quadrature rescaled to vacuum variance 1/2, so that the vacuum sits exactly at
F = 2 (the standard quantum limit) and ``M = max(F - 2, 0) / 4`` vanishes for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .fock import DensityMatrix

EIGEN_FLOOR = 1e-12
PHASE_GRID = 64
FLAT_TOL = 1e-10


@dataclass(frozen=True)
class QfiReport:
    f_max: float
    optimal_phase: float
    metrological_power: float
    phase_independent: bool = False

    def to_text(self) -> str:
        return (
            f"f_max = {self.f_max:.12g}\n"
            f"optimal_phase = {self.optimal_phase:.12g}\n"
            f"metrological_power = {self.metrological_power:.12g}\n"
            f"phase_independent = {str(self.phase_independent).lower()}\n"
        )


def power_from_qfi(f: float) -> float:
    return max(f - 2.0, 0.0) / 4.0


def _generator(dim: int, phase: float) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    g = a * np.exp(-1j * phase)
    return (g + g.conj().T) / math.sqrt(2)


def _eigensystem(rho: DensityMatrix):
    # one extra level so the top of the truncation couples to the next state
    el = rho.normalized().elements
    dim = rho.dim + 1
    padded = np.zeros((dim, dim), dtype=complex)
    padded[:-1, :-1] = el
    lam, vec = np.linalg.eigh(padded)
    return np.clip(lam, 0, None), vec


def _qfi(lam, vec, phase):
    g = vec.conj().T @ _generator(len(lam), phase) @ vec
    total = lam[:, None] + lam[None, :]
    diff = (lam[:, None] - lam[None, :]) ** 2
    mask = total > EIGEN_FLOOR
    weights = np.zeros_like(total)
    weights[mask] = diff[mask] / total[mask]
    return float(2 * np.sum(weights * np.abs(g) ** 2))


def qfi_quadrature(rho: DensityMatrix, phase: float) -> float:
    lam, vec = _eigensystem(rho)
    return _qfi(lam, vec, phase)


def metrological_power(rho: DensityMatrix) -> QfiReport:
    """Maximise the QFI over quadrature phase in [0, pi)."""
    lam, vec = _eigensystem(rho)
    grid = np.arange(PHASE_GRID) * (math.pi / PHASE_GRID)
    values = np.array([_qfi(lam, vec, ph) for ph in grid])
    if values.max() - values.min() <= FLAT_TOL:
        f = float(values[0])
        return QfiReport(f, 0.0, power_from_qfi(f), phase_independent=True)
    best = int(np.argmax(values))
    step = math.pi / PHASE_GRID
    res = minimize_scalar(
        lambda ph: -_qfi(lam, vec, ph),
        bounds=(grid[best] - step, grid[best] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    f, phase = values[best], float(grid[best])
    if -res.fun > f:
        f, phase = -res.fun, float(res.x) % math.pi
    return QfiReport(float(f), phase, power_from_qfi(float(f)))
