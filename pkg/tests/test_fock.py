import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg

from conftest import CM_A9, heralded
from steerneg.fock import (
    DensityMatrix,
    FockPopulations,
    InvalidStateError,
    apply_loss_fock,
    fidelity,
    invert_loss_fock,
    loss_adjoint,
    negativity_of_density,
    number_state_wigner,
    populations_from_radial_wigner,
    thermal_populations,
    wigner_from_density,
)
from steerneg.wigner import SubtractedStateParams, wigner_subtracted


def coherent_state(alpha, dim):
    k = np.arange(dim)
    log_fact = np.array([math.lgamma(j + 1) for j in k])
    amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * log_fact) * alpha ** k
    return np.outer(amp, amp.conj())


def kraus_loss(rho, eta):
    """Explicit Kraus sum: E_k = sum_n sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k><n|."""
    dim = rho.shape[0]
    out = np.zeros_like(rho, dtype=complex)
    for k in range(dim):
        e = np.zeros((dim, dim))
        for n in range(k, dim):
            e[n - k, n] = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1 - eta) ** k)
        out += e @ rho @ e.T
    return out


def random_density(seed, dim):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_vacuum_populations():
    probs = populations_from_radial_wigner(SubtractedStateParams(1, 1, 0, 0, 0), 10).probabilities
    np.testing.assert_allclose(probs, np.eye(11)[0], atol=1e-12)


@pytest.mark.parametrize("m", [1.054, 1.3, 2.0])
def test_thermal_populations_are_geometric(m):
    probs = populations_from_radial_wigner(SubtractedStateParams(1.2, m, 0, 0, 0.0), 20).probabilities
    nbar = (m - 1) / 2
    expected = nbar ** np.arange(21) / (1 + nbar) ** np.arange(1, 22)
    np.testing.assert_allclose(probs, expected, atol=1e-12)
    np.testing.assert_allclose(thermal_populations(m, 20), expected, atol=1e-14)


def test_number_state_kernels():
    assert number_state_wigner(0, 0.0) == pytest.approx(1 / (2 * math.pi))
    assert number_state_wigner(1, 0.0) == pytest.approx(-1 / (2 * math.pi))
    u = np.linspace(0, 9, 10)
    np.testing.assert_allclose(number_state_wigner(1, u), (u - 1) * np.exp(-u / 2) / (2 * math.pi))
    for k in range(4):
        total, _ = integrate.quad(lambda u: math.pi * number_state_wigner(k, u), 0, np.inf)
        assert total == pytest.approx(1, abs=1e-10)


def test_heralded_populations_sum_and_mean_photon_identity():
    params = heralded(CM_A9, 0.98)
    pops = populations_from_radial_wigner(params, 40)
    assert pops.probabilities.sum() == pytest.approx(1, abs=1e-10)
    assert pops.probabilities.min() >= 0
    assert not pops.truncated
    # <n> = <x^2 + p^2>/4 - 1/2 with dx dp = pi du
    second, _ = integrate.quad(lambda u: math.pi * u * wigner_subtracted(params, math.sqrt(u), 0.0), 0, np.inf)
    assert pops.mean_photon_number() == pytest.approx(second / 4 - 0.5, abs=1e-10)


def test_truncation_flag():
    pops = FockPopulations(thermal_populations(5.0, 3))
    assert pops.truncated and pops.truncation_error > 0.01
    assert pops.to_csv().splitlines()[0] == "k,p"


@pytest.mark.parametrize("alpha", [0.0, 0.7 - 0.3j, 1.2j])
def test_wigner_of_coherent_state(alpha):
    rho = DensityMatrix(coherent_state(alpha, 35))
    x0, p0 = 2 * alpha.real if isinstance(alpha, complex) else 2 * alpha, 2 * complex(alpha).imag
    xs = np.linspace(-3, 3, 9)
    xx, pp = np.meshgrid(xs, xs)
    expected = np.exp(-((xx - x0) ** 2 + (pp - p0) ** 2) / 2) / (2 * math.pi)
    np.testing.assert_allclose(wigner_from_density(rho, xx, pp), expected, atol=1e-10)


def test_coherence_sign_convention():
    # (|0> + i|1>)/sqrt(2): <a> = i/2, so <p> = <-i(a - a^dag)> = +1
    psi = np.array([1, 1j]) / math.sqrt(2)
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    axis = np.linspace(-8, 8, 321)
    xx, pp = np.meshgrid(axis, axis, indexing="ij")
    w = wigner_from_density(rho, xx, pp)
    mean_p = integrate.simpson(integrate.simpson(w * pp, x=axis, axis=1), x=axis)
    assert mean_p == pytest.approx(1, abs=1e-6)


def test_round_trip_of_heralded_state():
    params = heralded(CM_A9, 0.98)
    rho = populations_from_radial_wigner(params, 20).to_density()
    xs = np.linspace(-4, 4, 41)
    xx, pp = np.meshgrid(xs, xs)
    np.testing.assert_allclose(wigner_from_density(rho, xx, pp), wigner_subtracted(params, xx, pp), atol=1e-4)


def test_number_state_negativity():
    # |1>: W < 0 for u < 1, N = 4 e^{-1/2} - 2; the kink at u = 1 needs a fine grid
    assert negativity_of_density(DensityMatrix.number_state(1, 4), points=2001) == pytest.approx(
        4 * math.exp(-0.5) - 2, abs=2e-6
    )
    assert negativity_of_density(DensityMatrix.thermal(1.5, 20)) == pytest.approx(0, abs=1e-9)


def test_fidelity_basic_cases():
    a = DensityMatrix(random_density(1, 6))
    assert fidelity(a, a) == pytest.approx(1, abs=1e-10)
    assert fidelity(DensityMatrix.number_state(0, 4), DensityMatrix.number_state(2, 4)) == 0.0
    # vacuum vs thermal: F = p_0
    th = DensityMatrix.thermal(1.054, 30)
    assert fidelity(DensityMatrix.number_state(0, 30), th) == pytest.approx(2 / 2.054, abs=1e-12)
    assert fidelity(DensityMatrix.number_state(0, 30), th) == pytest.approx(0.974, abs=1e-3)


def test_fidelity_matches_sqrtm_oracle():
    a, b = random_density(2, 5), random_density(3, 5)
    s = linalg.sqrtm(a)
    expected = np.trace(linalg.sqrtm(s @ b @ s)).real ** 2
    assert fidelity(DensityMatrix(a), DensityMatrix(b)) == pytest.approx(expected, abs=1e-9)
    assert fidelity(DensityMatrix(b), DensityMatrix(a)) == pytest.approx(expected, abs=1e-9)


def test_loss_identity_and_single_photon():
    rho = DensityMatrix(random_density(4, 5))
    np.testing.assert_allclose(apply_loss_fock(rho, 1.0).elements, rho.elements)
    out = apply_loss_fock(DensityMatrix.number_state(1, 3), 0.9)
    np.testing.assert_allclose(out.populations, [0.1, 0.9, 0.0], atol=1e-15)


def test_loss_of_thermal_state():
    m, eta = 1.6, 0.7
    out = apply_loss_fock(DensityMatrix.thermal(m, 60), eta)
    np.testing.assert_allclose(out.populations[:20], thermal_populations(1 + eta * (m - 1), 19), atol=1e-12)


@pytest.mark.parametrize("eta", [0.2, 0.55, 0.93])
def test_loss_matches_kraus_oracle(eta):
    rho = random_density(5, 7)
    np.testing.assert_allclose(apply_loss_fock(DensityMatrix(rho), eta).elements, kraus_loss(rho, eta), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.integers(0, 1000))
def test_loss_composes(e1, e2, seed):
    rho = DensityMatrix(random_density(seed, 6))
    twice = apply_loss_fock(apply_loss_fock(rho, e1), e2)
    np.testing.assert_allclose(twice.elements, apply_loss_fock(rho, e1 * e2).elements, atol=1e-12)


def test_loss_adjoint_is_dual():
    rho = random_density(6, 6)
    op = random_density(7, 6)
    eta = 0.8
    lhs = np.trace(kraus_loss(rho, eta) @ op)
    rhs = np.trace(rho @ loss_adjoint(op, eta))
    assert lhs == pytest.approx(rhs, abs=1e-13)


def test_inverse_loss_recovers_state():
    rho = DensityMatrix(random_density(8, 6))
    back = invert_loss_fock(apply_loss_fock(rho, 0.85), 0.85, project=False)
    np.testing.assert_allclose(back.elements, rho.elements, atol=1e-10)
    projected = invert_loss_fock(apply_loss_fock(rho, 0.85), 0.85)
    assert fidelity(projected, rho) == pytest.approx(1, abs=1e-8)


def test_purity_of_thermal_state():
    assert DensityMatrix.thermal(1.4, 80).purity() == pytest.approx(1 / 1.4, abs=1e-12)


def test_invalid_density_rejected():
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([0.7, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2]))


def test_text_round_trip():
    rho = DensityMatrix(random_density(9, 4))
    text = rho.to_text()
    assert text.splitlines()[0] == "# density-matrix dim=4 basis=fock"
    np.testing.assert_allclose(DensityMatrix.from_text(text).elements, rho.elements, atol=1e-14)
