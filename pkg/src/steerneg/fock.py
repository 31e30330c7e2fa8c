"""Truncated Fock-basis states of a single mode.

Phase-space conventions match :mod:`steerneg.wigner` (vacuum variance 1), so the
number-state Wigner kernel is ``W_kk(u) = (-1)^k exp(-u/2) L_k(u) / (2 pi)`` and the
trace of a product is a phase-space overlap: ``Tr(rho sigma) = 4 pi * int W_rho W_sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import eval_laguerre, gammaln

from .wigner import SubtractedStateParams

DEFAULT_N_MAX = 15
HERMITIAN_TOL = 1e-12
EIGEN_CLIP_TOL = 1e-10
OVERLAP_CONSTANT = 4 * math.pi
_LAGUERRE_NODES = 96


class InvalidStateError(ValueError):
    """Matrix is not a valid (sub-normalised) density matrix."""


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive, trace <= 1 matrix in the number basis.

    Eigenvalues in ``[-1e-10, 0)`` are clipped on construction with the
    trace kept fixed; anything more negative is rejected.
    """

    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError(f"expected a square matrix, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T), initial=0) > HERMITIAN_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if tr <= 0 or tr > 1 + 1e-9:
            raise InvalidStateError(f"trace {tr} outside (0, 1]")
        lam, vec = np.linalg.eigh(rho)
        if lam[0] < -EIGEN_CLIP_TOL:
            raise InvalidStateError(f"negative eigenvalue {lam[0]:.3g}")
        if lam[0] < 0:
            lam = np.clip(lam, 0, None)
            lam *= tr / lam.sum()
            rho = (vec * lam) @ vec.conj().T
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)

    @classmethod
    def from_populations(cls, populations) -> "DensityMatrix":
        return cls(np.diag(np.asarray(populations, dtype=float)))

    @classmethod
    def number_state(cls, k: int, dim: int) -> "DensityMatrix":
        p = np.zeros(dim)
        p[k] = 1.0
        return cls.from_populations(p)

    @classmethod
    def thermal(cls, variance: float, dim: int) -> "DensityMatrix":
        return cls.from_populations(thermal_populations(variance, dim - 1))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    @property
    def trace_deficit(self) -> float:
        return max(0.0, 1.0 - self.trace)

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.elements).real.copy()

    @property
    def is_diagonal(self) -> bool:
        off = self.elements - np.diag(np.diag(self.elements))
        return bool(np.max(np.abs(off), initial=0) < HERMITIAN_TOL)

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.elements / self.trace)

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.dim), self.populations))

    def resized(self, dim: int) -> "DensityMatrix":
        """Truncate or zero-pad to ``dim``."""
        out = np.zeros((dim, dim), dtype=complex)
        k = min(dim, self.dim)
        out[:k, :k] = self.elements[:k, :k]
        return DensityMatrix(out)

    def to_text(self) -> str:
        lines = [f"# density-matrix dim={self.dim} basis=fock"]
        for row in self.elements:
            lines.append(" ".join(f"{z.real:.12g} {z.imag:.12g}" for z in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DensityMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        header = lines[0]
        if not header.startswith("#") or "dim=" not in header:
            raise ValueError("missing density-matrix header")
        dim = int(header.split("dim=")[1].split()[0])
        vals = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        if vals.shape != (dim, 2 * dim):
            raise ValueError(f"expected {dim} rows of {2 * dim} numbers, got {vals.shape}")
        return cls(vals[:, 0::2] + 1j * vals[:, 1::2])


@dataclass(frozen=True)
class FockPopulations:
    probabilities: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    @property
    def truncation_error(self) -> float:
        return max(0.0, 1.0 - float(np.sum(self.probabilities)))

    @property
    def truncated(self) -> bool:
        """Flag set when more than 1% of the weight lies above n_max."""
        return self.truncation_error > 0.01

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_populations(self.probabilities)

    def to_csv(self) -> str:
        rows = "".join(f"{k},{p:.12g}\n" for k, p in enumerate(self.probabilities))
        return "k,p\n" + rows


def thermal_populations(variance: float, n_max: int) -> np.ndarray:
    """Geometric populations of a thermal state with quadrature variance ``variance``."""
    k = np.arange(n_max + 1)
    return 2 / (variance + 1) * ((variance - 1) / (variance + 1)) ** k


def number_state_wigner(k: int, u):
    """Wigner function of |k> as a function of u = x^2 + p^2."""
    u = np.asarray(u, dtype=float)
    return (-1) ** k * np.exp(-u / 2) * eval_laguerre(k, u) / (2 * math.pi)


def populations_from_radial_wigner(
    params: SubtractedStateParams, n_max: int = DEFAULT_N_MAX
) -> FockPopulations:
    """Number-state populations of the (radially symmetric) heralded state.

    ``p_k = 4 pi * int W W_kk dx dp``. With ``dx dp = pi du`` both factors are
    exp(-lambda u) times a polynomial, so Gauss-Laguerre quadrature in
    ``t = lambda u`` is exact up to rounding.
    """
    prof = params.radial_profile()
    lam = 1 / (2 * prof.width) + 0.5
    t, w = np.polynomial.laguerre.laggauss(_LAGUERRE_NODES)
    u = t / lam
    bracket = prof.quadratic * u + prof.constant
    probs = np.empty(n_max + 1)
    for k in range(n_max + 1):
        kernel = (-1) ** k * eval_laguerre(k, u) / (2 * math.pi)
        probs[k] = OVERLAP_CONSTANT * math.pi / lam * np.dot(w, bracket * kernel)
    probs[(probs < 0) & (probs > -EIGEN_CLIP_TOL)] = 0.0
    return FockPopulations(probs)


def wigner_from_density(rho: DensityMatrix, x, p=None):
    """Wigner function of ``rho`` at the given quadrature coordinates.

    Walks the upper triangle of |m><n| phase-space functions row by row with
    the three-term recursion ``K[m,n] = (2 alpha K[m,n-1] - sqrt(m) K[m-1,n-1]) / sqrt(n)``,
    ``alpha = (x + i p) / 2``, keeping only one row in memory.
    """
    if p is None and hasattr(x, "p"):
        x, p = x.x, x.p
    alpha = 0.5 * (np.asarray(x, dtype=float) + 1j * np.asarray(p, dtype=float))
    el = rho.elements
    dim = rho.dim
    row = np.empty((dim, *alpha.shape), dtype=complex)
    row[0] = np.exp(-2 * np.abs(alpha) ** 2) / math.pi
    for n in range(1, dim):
        row[n] = 2 * alpha * row[n - 1] / math.sqrt(n)
    total = el[0, 0].real * row[0].real
    for n in range(1, dim):
        total += 2 * np.real(el[0, n] * row[n])
    for m in range(1, dim):
        prev = row
        row = np.empty_like(prev)
        row[m] = (2 * np.conj(alpha) * prev[m] - math.sqrt(m) * prev[m - 1]) / math.sqrt(m)
        total += el[m, m].real * row[m].real
        for n in range(m + 1, dim):
            row[n] = (2 * alpha * row[n - 1] - math.sqrt(m) * prev[n - 1]) / math.sqrt(n)
            total += 2 * np.real(el[m, n] * row[n])
    out = 0.5 * total
    return out.item() if np.ndim(out) == 0 else out


def negativity_of_density(rho: DensityMatrix, half_width: float = 7.0, points: int = 281) -> float:
    """int |W| - int W of ``rho`` on a square Simpson grid."""
    axis = np.linspace(-half_width, half_width, points)
    xx, pp = np.meshgrid(axis, axis, indexing="ij")
    w = wigner_from_density(rho, xx, pp)
    total = integrate.simpson(integrate.simpson(w, x=axis, axis=1), x=axis)
    absolute = integrate.simpson(integrate.simpson(np.abs(w), x=axis, axis=1), x=axis)
    return max(0.0, float(absolute - total))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    lam, vec = np.linalg.eigh(rho.elements)
    sq = (vec * np.sqrt(np.clip(lam, 0, None))) @ vec.conj().T
    inner = np.linalg.eigvalsh(sq @ sigma.elements @ sq)
    f = float(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def _loss_coefficients(dim: int, eta: float) -> np.ndarray:
    """coef[k, j] = sqrt(C(j, k) eta^(j-k) (1-eta)^k) for j >= k, else 0.

    Valid for eta > 1 as well (formal inverse); then the loss weight (1 - eta)^k
    carries a sign, so it is returned as a signed 'square root'.
    """
    coef = np.zeros((dim, dim))
    j = np.arange(dim)
    for k in range(dim):
        jj = j[k:]
        log_binom = gammaln(jj + 1) - gammaln(k + 1) - gammaln(jj - k + 1)
        coef[k, k:] = np.exp(0.5 * log_binom) * eta ** (0.5 * (jj - k))
    return coef


def _loss_map(el: np.ndarray, eta: float) -> np.ndarray:
    dim = el.shape[0]
    coef = _loss_coefficients(dim, eta)
    out = np.zeros_like(el, dtype=complex)
    for k in range(dim):
        a = coef[k, k:]
        block = el[k:, k:] * np.outer(a, a) * (1 - eta) ** k
        out[: dim - k, : dim - k] += block
    return out


def _loss_adjoint(op: np.ndarray, eta: float) -> np.ndarray:
    dim = op.shape[0]
    coef = _loss_coefficients(dim, eta)
    out = np.zeros_like(op, dtype=complex)
    for k in range(dim):
        a = coef[k, k:]
        out[k:, k:] += op[: dim - k, : dim - k] * np.outer(a, a) * (1 - eta) ** k
    return out


def apply_loss_fock(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Pure-loss channel of transmissivity ``eta`` acting in the number basis."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if eta == 1:
        return rho
    return DensityMatrix(_loss_map(rho.elements, eta))


def invert_loss_fock(rho: DensityMatrix, eta: float, *, project: bool = True) -> DensityMatrix:
    """Undo a known loss by applying the binomial map with 1/eta.

    The raw inverse can leave the state slightly unphysical; with ``project``
    negative eigenvalues are removed and the trace restored.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    el = _loss_map(rho.elements, 1 / eta)
    el = 0.5 * (el + el.conj().T)
    if project:
        tr = np.trace(el).real
        lam, vec = np.linalg.eigh(el)
        lam = np.clip(lam, 0, None)
        lam *= tr / lam.sum()
        el = (vec * lam) @ vec.conj().T
    return DensityMatrix(el)


def loss_adjoint(op: np.ndarray, eta: float) -> np.ndarray:
    """Heisenberg-picture loss map, used to smear measurement operators."""
    if eta == 1:
        return np.asarray(op, dtype=complex)
    return _loss_adjoint(np.asarray(op, dtype=complex), eta)
