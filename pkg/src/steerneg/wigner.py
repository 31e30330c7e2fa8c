"""Wigner function of Bob's mode after a single photon is subtracted from Alice's.

For the EPR family (c1 = -c2 = c) the heralded state is radially symmetric::

    W(u) = exp(-u / 2m) * (a*u + b),   u = x^2 + p^2

with ``a = xi c^2 / (4 pi m^3 (n-1))`` and ``b = (m(n-1) - xi c^2) / (2 pi m^2 (n-1))``.
Dark counts enter as the convex mixture ``xi * W_subtracted + (1 - xi) * W_gaussian``,
which is the same as replacing c^2 by xi*c^2 in the bracket.

Negativity. The bracket is negative exactly on the disc ``u < 2m(1 - r)`` with
``r = m(n-1) / (xi c^2)``. Integrating the negative part gives
``N = (2/r) exp(r - 1) - 2``. When ``r >= 1`` the bracket never changes sign, so
N = 0; the bare formula would return a spurious positive value there, hence
the explicit clamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .gaussian import PurityTriple, TwoModeCovariance

RADIAL_RTOL = 1e-10
U_MAX_FACTOR = 40.0
GRID_POINTS = 601
GRID_HALF_WIDTH = 6.0
NORMALIZATION_TOL = 1e-6


class DiscretizationError(RuntimeError):
    """Numerical integration failed to reproduce unit normalization."""


@dataclass(frozen=True)
class SubtractedStateParams:
    n: float
    m: float
    c1: float
    c2: float
    xi: float = 1.0

    def __post_init__(self):
        # xi = 0 is admitted as the no-subtraction limit (pure Gaussian W_B)
        if not 0 <= self.xi <= 1:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi}")
        self.cm.check_physical()

    @classmethod
    def from_cm(cls, cm: TwoModeCovariance, xi: float = 1.0) -> "SubtractedStateParams":
        return cls(cm.n, cm.m, cm.c1, cm.c2, xi)

    @property
    def cm(self) -> TwoModeCovariance:
        return TwoModeCovariance(self.n, self.m, self.c1, self.c2)

    @property
    def c_squared(self) -> float:
        return -self.c1 * self.c2

    @property
    def is_symmetric_family(self) -> bool:
        return self.cm.is_symmetric_family

    @property
    def is_degenerate(self) -> bool:
        """No subtraction branch: Alice's mode is vacuum or xi = 0."""
        return self.n - 1 <= 0 or self.xi == 0

    @property
    def ratio(self) -> float:
        """r = m(n-1) / (xi c^2); inf when there is nothing to subtract against."""
        denom = self.xi * self.c_squared
        if denom <= 0:
            return math.inf
        return self.m * (self.n - 1) / denom

    def radial_profile(self) -> "RadialProfile":
        if not self.is_symmetric_family:
            raise ValueError("radial profile requires c1 = -c2")
        m = self.m
        if self.is_degenerate:
            return RadialProfile(0.0, 1.0 / (2 * math.pi * m), m)
        nm1 = self.n - 1
        xc2 = self.xi * self.c_squared
        a = xc2 / (4 * math.pi * m ** 3 * nm1)
        b = (m * nm1 - xc2) / (2 * math.pi * m ** 2 * nm1)
        return RadialProfile(a, b, m)


@dataclass(frozen=True)
class PhaseSpacePoint:
    x: float
    p: float


@dataclass(frozen=True)
class RadialProfile:
    """W(u) = exp(-u / 2 width) * (quadratic * u + constant)."""

    quadratic: float
    constant: float
    width: float

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(-u / (2 * self.width)) * (self.quadratic * u + self.constant)

    @property
    def negative_disc_u(self) -> float:
        """u-radius squared of the negative disc, 0 when there is none."""
        if self.constant >= 0 or self.quadratic <= 0:
            return 0.0
        return -self.constant / self.quadratic


def _wigner_general(params: SubtractedStateParams, x, p):
    """Matrix bilinear form; valid for any c1, c2."""
    cm = params.cm
    sb_inv = np.linalg.inv(cm.sigma_b)
    gamma = cm.gamma_ab
    schur = cm.sigma_a - gamma @ sb_inv @ gamma.T
    kernel = sb_inv.T @ gamma.T @ gamma @ sb_inv
    beta = np.stack([np.asarray(x, dtype=float), np.asarray(p, dtype=float)], axis=-1)
    quad_b = np.einsum("...i,ij,...j->...", beta, sb_inv, beta)
    quad_k = np.einsum("...i,ij,...j->...", beta, kernel, beta)
    gauss = np.exp(-0.5 * quad_b) / (2 * math.pi * math.sqrt(cm.det_b))
    if params.is_degenerate:
        return gauss
    trace_a = np.trace(cm.sigma_a) - 2
    subtracted = gauss * (quad_k + np.trace(schur) - 2) / trace_a
    return params.xi * subtracted + (1 - params.xi) * gauss


def wigner_subtracted(params: SubtractedStateParams, x, p=None, *, general: bool = False):
    """Heralded Wigner function of mode B, vectorised over ``x`` and ``p``.

    ``x`` may also be a :class:`PhaseSpacePoint`. The radial closed form is used
    on the symmetric family unless ``general`` is set.
    """
    if isinstance(x, PhaseSpacePoint):
        x, p = x.x, x.p
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if general or not params.is_symmetric_family:
        out = _wigner_general(params, x, p)
    else:
        out = params.radial_profile()(x * x + p * p)
    return out.item() if out.ndim == 0 else out


def negativity_closed_form(params: SubtractedStateParams) -> float:
    if not params.is_symmetric_family:
        raise ValueError("closed-form negativity requires c1 = -c2")
    r = params.ratio
    if r >= 1:
        return 0.0
    return 2.0 / r * math.exp(r - 1) - 2.0


def negativity_from_purities(pur: PurityTriple, xi: float = 1.0, tol: float = 1e-12) -> float:
    """Negativity expressed through local and global purities of the Gaussian resource.

    Uncorrelated inputs (mu_AB = mu_A mu_B) give 0. A pure mode A (mu_A = 1)
    paired with correlations is inconsistent and rejected.
    """
    mu_a, mu_b, mu_ab = pur.mu_a, pur.mu_b, pur.mu_ab
    correlation = mu_ab - mu_a * mu_b
    if abs(1 - mu_a) <= tol:
        if abs(correlation) > tol:
            raise ValueError("mu_A = 1 cannot coexist with A-B correlations")
        return 0.0
    if correlation <= tol or xi <= 0:
        return 0.0
    r = (mu_ab - mu_a * mu_ab) / (xi * correlation)
    if r >= 1:
        return 0.0
    return 2.0 * xi * correlation * math.exp(r - 1) / ((1 - mu_a) * mu_ab) - 2.0


def _sign_change_roots(f, lo, hi, samples=4001):
    grid = np.linspace(lo, hi, samples)
    vals = f(grid)
    roots = []
    for i in np.nonzero(np.signbit(vals[:-1]) != np.signbit(vals[1:]))[0]:
        if vals[i] == 0:
            roots.append(grid[i])
            continue
        roots.append(optimize.brentq(lambda t: float(f(t)), grid[i], grid[i + 1], xtol=1e-15))
    return roots


def _radial_volumes(params: SubtractedStateParams, u_max: float):
    """(integral of W, integral of |W|) over the plane; dA = pi du.

    Evaluates the general matrix form along the x axis so the result does not
    share code with the radial closed form it is checked against.
    """

    def f(u):
        return wigner_subtracted(params, np.sqrt(u), np.zeros_like(u), general=True)

    edges = [0.0, *_sign_change_roots(f, 0.0, u_max), u_max]
    total = absolute = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=RADIAL_RTOL, limit=200)
        total += math.pi * val
        absolute += math.pi * abs(val)
    return total, absolute


def _grid_volumes(params: SubtractedStateParams, points: int, half_width: float):
    axis = np.linspace(-half_width, half_width, points) * math.sqrt(params.m)
    xx, pp = np.meshgrid(axis, axis, indexing="ij")
    w = wigner_subtracted(params, xx, pp, general=True)
    total = integrate.simpson(integrate.simpson(w, x=axis, axis=1), x=axis)
    absolute = integrate.simpson(integrate.simpson(np.abs(w), x=axis, axis=1), x=axis)
    return float(total), float(absolute)


def negativity_numeric(
    params: SubtractedStateParams,
    *,
    method: str = "auto",
    u_max_factor: float = U_MAX_FACTOR,
    grid_points: int = GRID_POINTS,
    grid_half_width: float = GRID_HALF_WIDTH,
    norm_tol: float = NORMALIZATION_TOL,
) -> float:
    """Negativity as ``int |W| - int W`` by direct quadrature.

    ``method`` is ``"radial"`` (adaptive quadrature in u, symmetric family only),
    ``"grid"`` (2-D Simpson rule over a square of half-width ``grid_half_width``
    standard deviations), or ``"auto"``.
    """
    if method == "auto":
        method = "radial" if params.is_symmetric_family else "grid"
    if method == "radial":
        total, absolute = _radial_volumes(params, u_max_factor * params.m)
    elif method == "grid":
        total, absolute = _grid_volumes(params, grid_points, grid_half_width)
    else:
        raise ValueError(f"unknown method {method!r}")
    if abs(total - 1) > norm_tol:
        raise DiscretizationError(f"integral of W is {total:.12g}, expected 1")
    return max(0.0, absolute - total)


def marginal_pdf(params: SubtractedStateParams, x):
    """Homodyne quadrature density; identical for every phase."""
    if not params.is_symmetric_family:
        raise ValueError("marginal density requires c1 = -c2")
    x = np.asarray(x, dtype=float)
    m = params.m
    gauss = np.exp(-x * x / (2 * m)) / math.sqrt(2 * math.pi * m)
    if params.is_degenerate:
        return gauss
    prof = params.radial_profile()
    # integrating exp(-p^2/2m)(a p^2 + a x^2 + b) over p
    out = math.sqrt(2 * math.pi * m) * np.exp(-x * x / (2 * m)) * (
        prof.quadratic * (x * x + m) + prof.constant
    )
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class NegativityReport:
    r: float
    n_closed: float
    n_numeric: float
    negative_disc_radius: float

    @property
    def negative_region(self) -> bool:
        return self.negative_disc_radius > 0

    def to_text(self) -> str:
        return "".join(
            f"{k} = {v:.12g}\n"
            for k, v in (
                ("r", self.r),
                ("N_closed", self.n_closed),
                ("N_numeric", self.n_numeric),
                ("negative_disc_radius", self.negative_disc_radius),
            )
        )


def negativity_report(params: SubtractedStateParams) -> NegativityReport:
    return NegativityReport(
        r=params.ratio,
        n_closed=negativity_closed_form(params),
        n_numeric=negativity_numeric(params),
        negative_disc_radius=math.sqrt(params.radial_profile().negative_disc_u),
    )


def wigner_grid(params: SubtractedStateParams, half_width: float = 4.0, points: int = 81):
    """Evaluate W on a square grid; returns (axis, W[x_index, p_index])."""
    axis = np.linspace(-half_width, half_width, points)
    xx, pp = np.meshgrid(axis, axis, indexing="ij")
    return axis, wigner_subtracted(params, xx, pp)


def write_wigner_csv(path, axis, w, *, header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# grid points={len(axis)} x_min={axis[0]:.12g} x_max={axis[-1]:.12g}"
            f"{' ' + header if header else ''}\n"
        )
        fh.write("x,p,w\n")
        for i, x in enumerate(axis):
            for j, p in enumerate(axis):
                fh.write(f"{x:.12g},{p:.12g},{w[i, j]:.12g}\n")
