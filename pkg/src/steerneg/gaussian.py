"""Lossy two-mode Gaussian EPR states.

Quadratures follow ``x = a + a^dagger`` and ``p = i(a^dagger - a)`` throughout the
package, so the vacuum has unit variance and every covariance matrix of a
physical state has symplectic eigenvalues >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CONVENTION = "vacuum-variance=1"
PHYSICALITY_TOL = 1e-9

# symplectic form for ordering (x_A, p_A, x_B, p_B)
OMEGA = np.array(
    [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float
)


class UnphysicalStateError(ValueError):
    """Covariance matrix violates the uncertainty principle."""


class NoThresholdError(ValueError):
    """No critical efficiency exists inside (0, 1]."""


@dataclass(frozen=True)
class SqueezingSpec:
    v_plus: float
    v_minus: float

    def __post_init__(self):
        if not (self.v_plus > 0 and self.v_minus > 0):
            raise ValueError(f"variances must be positive, got {self.v_plus}, {self.v_minus}")
        if self.v_plus * self.v_minus < 1 - PHYSICALITY_TOL:
            raise UnphysicalStateError(
                f"V+ * V- = {self.v_plus * self.v_minus:.6g} < 1 violates the uncertainty bound"
            )

    @classmethod
    def from_db(cls, db_plus: float, db_minus: float) -> "SqueezingSpec":
        return cls(db_to_variance(db_plus), db_to_variance(db_minus))

    @property
    def mean(self) -> float:
        """(V+ + V-)/2, the local variance of each lossless mode."""
        return 0.5 * (self.v_plus + self.v_minus)

    @property
    def half_difference(self) -> float:
        return 0.5 * (self.v_minus - self.v_plus)


@dataclass(frozen=True)
class ChannelParams:
    eta_a: float
    eta_b: float

    def __post_init__(self):
        for name, eta in (("eta_a", self.eta_a), ("eta_b", self.eta_b)):
            if not 0 < eta <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {eta}")


@dataclass(frozen=True)
class PurityTriple:
    mu_a: float
    mu_b: float
    mu_ab: float


@dataclass(frozen=True)
class TwoModeCovariance:
    """Covariance matrix with the block structure

        [[n, 0, c1, 0], [0, n, 0, c2], [c1, 0, m, 0], [0, c2, 0, m]]
    """

    n: float
    m: float
    c1: float
    c2: float

    @classmethod
    def symmetric(cls, n: float, m: float, c: float) -> "TwoModeCovariance":
        """The EPR family with c1 = -c2 = c."""
        return cls(n, m, c, -c)

    @classmethod
    def vacuum(cls) -> "TwoModeCovariance":
        return cls(1.0, 1.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, sigma) -> "TwoModeCovariance":
        """Collapse a 4x4 matrix onto the block form, averaging the x/p diagonals."""
        s = np.asarray(sigma, dtype=float)
        if s.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {s.shape}")
        n = 0.5 * (s[0, 0] + s[1, 1])
        m = 0.5 * (s[2, 2] + s[3, 3])
        c1 = 0.5 * (s[0, 2] + s[2, 0])
        c2 = 0.5 * (s[1, 3] + s[3, 1])
        return cls(float(n), float(m), float(c1), float(c2))

    @property
    def matrix(self) -> np.ndarray:
        n, m, c1, c2 = self.n, self.m, self.c1, self.c2
        return np.array(
            [[n, 0, c1, 0], [0, n, 0, c2], [c1, 0, m, 0], [0, c2, 0, m]], dtype=float
        )

    @property
    def sigma_a(self) -> np.ndarray:
        return self.n * np.eye(2)

    @property
    def sigma_b(self) -> np.ndarray:
        return self.m * np.eye(2)

    @property
    def gamma_ab(self) -> np.ndarray:
        return np.diag([self.c1, self.c2])

    @property
    def det_a(self) -> float:
        return self.n * self.n

    @property
    def det_b(self) -> float:
        return self.m * self.m

    @property
    def det_ab(self) -> float:
        # block-diagonal in (x_A, x_B) and (p_A, p_B)
        return (self.n * self.m - self.c1 ** 2) * (self.n * self.m - self.c2 ** 2)

    @property
    def is_symmetric_family(self) -> bool:
        return math.isclose(self.c1, -self.c2, rel_tol=0, abs_tol=1e-12)

    @property
    def c_squared(self) -> float:
        """Correlation strength -c1*c2; equals c^2 on the c1 = -c2 family."""
        return -self.c1 * self.c2

    def symplectic_eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(1j * OMEGA @ self.matrix)
        return np.sort(np.abs(ev.real))[::2]

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        if self.n <= 0 or self.m <= 0:
            return False
        return bool(np.all(self.symplectic_eigenvalues() >= 1 - tol))

    def check_physical(self, tol: float = PHYSICALITY_TOL) -> "TwoModeCovariance":
        if not self.is_physical(tol):
            nu = self.symplectic_eigenvalues()
            raise UnphysicalStateError(f"symplectic eigenvalues {nu} fall below 1")
        return self

    def to_text(self) -> str:
        rows = [" ".join(f"{v:.12g}" for v in row) for row in self.matrix]
        return "\n".join([f"# {CONVENTION}", *rows]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TwoModeCovariance":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing convention header")
        if CONVENTION not in lines[0]:
            raise ValueError(f"unsupported convention header {lines[0]!r}")
        return cls.from_matrix([[float(v) for v in ln.split()] for ln in lines[1:]])


def db_to_variance(db: float) -> float:
    return 10.0 ** (db / 10.0)


def variance_to_db(variance: float) -> float:
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    return 10.0 * math.log10(variance)


def cm_from_squeezing(spec: SqueezingSpec, ch: ChannelParams) -> TwoModeCovariance:
    """Covariance matrix after sending each EPR mode through a pure-loss channel."""
    s, q = spec.mean, spec.half_difference
    n = ch.eta_a * s + (1 - ch.eta_a)
    m = ch.eta_b * s + (1 - ch.eta_b)
    c = -math.sqrt(ch.eta_a * ch.eta_b) * q
    return TwoModeCovariance.symmetric(n, m, c).check_physical()


def purities(cm: TwoModeCovariance) -> PurityTriple:
    cm.check_physical()
    return PurityTriple(
        mu_a=1.0 / math.sqrt(cm.det_a),
        mu_b=1.0 / math.sqrt(cm.det_b),
        mu_ab=1.0 / math.sqrt(cm.det_ab),
    )


def purities_closed_form(spec: SqueezingSpec, ch: ChannelParams) -> PurityTriple:
    """Purities written directly in terms of V+-, eta_A and eta_B."""
    vp, vm, ea, eb = spec.v_plus, spec.v_minus, ch.eta_a, ch.eta_b
    t = vm + vp - 2
    return PurityTriple(
        mu_a=2 / (2 + t * ea),
        mu_b=2 / (2 + t * eb),
        mu_ab=2 / (2 * ea * eb * (vm - 1) * (vp - 1) + ea * t + eb * t + 2),
    )


def steerability_raw(cm: TwoModeCovariance) -> float:
    """Signed log-determinant ratio; positive iff B can steer A."""
    return 0.5 * math.log(cm.det_b / cm.det_ab)


def steerability_b_to_a(cm: TwoModeCovariance) -> float:
    cm.check_physical()
    return max(0.0, steerability_raw(cm))


def steering_threshold_eta_b(spec: SqueezingSpec, xi: float = 1.0) -> float:
    """Critical Bob efficiency where m(n-1) = xi*c^2.

    ``xi = 1`` gives the onset of steering; ``xi < 1`` the onset of Wigner
    negativity with dark counts. The eta_A dependence cancels.
    """
    if not 0 < xi <= 1:
        raise ValueError(f"xi must lie in (0, 1], got {xi}")
    s1 = spec.mean - 1
    q2 = spec.half_difference ** 2
    denom = xi * q2 - s1 * s1
    if denom <= 0:
        raise NoThresholdError("no threshold in (0, 1]: correlations too weak for this purity")
    eta = s1 / denom
    if not 0 < eta <= 1:
        raise NoThresholdError(f"no threshold in (0, 1]: solution eta_B = {eta:.6g}")
    return eta
