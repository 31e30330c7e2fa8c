"""State recovery from quadrature data."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityMatrix, loss_adjoint, _loss_map
from .gaussian import TwoModeCovariance

MIN_CM_SAMPLES = 100
CM_BATCHES = 20


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sample covariance matrix with batch standard errors, both 4x4."""

    matrix: np.ndarray
    errors: np.ndarray
    samples: int

    @property
    def cm(self) -> TwoModeCovariance:
        return TwoModeCovariance.from_matrix(self.matrix)


def _difference_cm(samples: np.ndarray) -> np.ndarray:
    # cross terms from Var(a) + Var(b) - Var(a - b), as measured in the lab;
    # shifting by the first record keeps constant columns exactly zero
    samples = samples - samples[0]
    var = np.var(samples, axis=0, ddof=1)
    k = samples.shape[1]
    out = np.diag(var)
    for i in range(k):
        for j in range(i + 1, k):
            d = np.var(samples[:, i] - samples[:, j], ddof=1)
            out[i, j] = out[j, i] = 0.5 * (var[i] + var[j] - d)
    return out


def estimate_cm(samples, batches: int = CM_BATCHES) -> CovarianceEstimate:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 4:
        raise ValueError(f"expected an (N, 4) array, got shape {samples.shape}")
    if len(samples) < MIN_CM_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_CM_SAMPLES} samples, got {len(samples)}")
    full = _difference_cm(samples)
    parts = np.array([_difference_cm(b) for b in np.array_split(samples, batches)])
    errors = parts.std(axis=0, ddof=1) / math.sqrt(batches)
    return CovarianceEstimate(full, errors, len(samples))


@dataclass(frozen=True)
class MleOptions:
    n_max: int = 15
    max_iterations: int = 2000
    tolerance: float = 1e-9
    detection_efficiency: float | None = None

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        eff = self.detection_efficiency
        if eff is not None and not 0 < eff <= 1:
            raise ValueError(f"detection efficiency must lie in (0, 1], got {eff}")


@dataclass
class MleResult:
    rho: DensityMatrix
    iterations: int
    log_likelihood: float
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def report(self) -> str:
        return (
            f"iterations = {self.iterations}\n"
            f"converged = {str(self.converged).lower()}\n"
            f"log_likelihood = {self.log_likelihood:.12g}\n"
            f"trace_deficit = {self.rho.trace_deficit:.12g}\n"
        )


@functools.lru_cache(maxsize=None)
def _check_vacuum_variance():
    x, w = np.polynomial.hermite_e.hermegauss(40)
    # hermegauss weight exp(-x^2/2) with psi_0^2 = exp(-x^2/2)/sqrt(2 pi)
    second = np.dot(w, x * x) / math.sqrt(2 * math.pi)
    if abs(second - 1) > 1e-12:
        raise AssertionError(f"vacuum quadrature variance {second}, expected 1")
    return True


def quadrature_wavefunctions(x, n_max: int) -> np.ndarray:
    """psi_k(x) = <x|k> for k = 0..n_max, shape (len(x), n_max + 1).

    Normalised recursion psi_k = (x psi_{k-1} - sqrt(k-1) psi_{k-2}) / sqrt(k),
    which follows from x = a + a^dagger and never forms factorials.
    """
    _check_vacuum_variance()
    x = np.asarray(x, dtype=float)
    psi = np.empty((x.size, n_max + 1))
    psi[:, 0] = (2 * math.pi) ** -0.25 * np.exp(-x * x / 4)
    if n_max >= 1:
        psi[:, 1] = x * psi[:, 0]
    for k in range(2, n_max + 1):
        psi[:, k] = (x * psi[:, k - 1] - math.sqrt(k - 1) * psi[:, k - 2]) / math.sqrt(k)
    return psi


def measurement_vectors(phases, values, n_max: int) -> np.ndarray:
    """Rows are <k|x_theta> = exp(i k theta) psi_k(x) for each record."""
    psi = quadrature_wavefunctions(values, n_max)
    k = np.arange(n_max + 1)
    return psi * np.exp(1j * np.outer(np.asarray(phases, dtype=float), k))


def _probabilities(vecs, rho, eta):
    seen = rho if eta is None else _loss_map(rho, eta)
    return np.einsum("ik,ik->i", vecs.conj(), vecs @ seen.T).real


def mle_reconstruct(records, opts: MleOptions | None = None) -> MleResult:
    """Iterative maximum-likelihood reconstruction, one projector per record.

    Each step is ``rho <- R rho R / Tr`` with ``R = mean_i Pi_i / p_i``. When a
    full step would lower the likelihood, the diluted update
    ``(1 + eps R) rho (1 + eps R)`` is used with shrinking ``eps``, so the
    log-likelihood is non-decreasing.
    """
    opts = opts or MleOptions()
    if hasattr(records, "phases"):
        phases, values = records.phases, records.values
    else:
        phases = np.array([r.phase for r in records])
        values = np.array([r.value for r in records])
    eta = opts.detection_efficiency
    if eta == 1:
        eta = None
    vecs = measurement_vectors(phases, values, opts.n_max)
    dim = opts.n_max + 1
    count = len(values)
    eye = np.eye(dim)
    rho = eye / dim

    def evaluate(r):
        probs = np.clip(_probabilities(vecs, r, eta), 1e-300, None)
        return probs, float(np.sum(np.log(probs)))

    probs, current = evaluate(rho)
    history = [current]
    converged = False
    it = 0
    for it in range(1, opts.max_iterations + 1):
        big_r = (vecs.T * (1 / probs)) @ vecs.conj() / count
        if eta is not None:
            big_r = loss_adjoint(big_r, eta)
        step = big_r
        eps = None
        while True:
            cand = step @ rho @ step.conj().T
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            cand_probs, new = evaluate(cand)
            if new >= current or (eps is not None and eps < 1e-12):
                break
            eps = 1.0 if eps is None else eps / 2
            step = eye + eps * big_r
        if new < current:
            # numerically stationary: no ascent step left
            converged = True
            break
        change = new - current
        rho, probs, current = cand, cand_probs, new
        history.append(current)
        if abs(change) <= opts.tolerance * abs(current):
            converged = True
            break
    return MleResult(DensityMatrix(rho), it, current, converged, history)
