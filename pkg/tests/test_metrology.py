import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import CM_A9, heralded
from steerneg.fock import DensityMatrix, fidelity, populations_from_radial_wigner
from steerneg.gaussian import ChannelParams, SqueezingSpec, cm_from_squeezing
from steerneg.metrology import metrological_power, power_from_qfi, qfi_quadrature

ETA_B = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def heralded_rho(spec, eta_a, eta_b, xi=1.0, n_max=15):
    params = heralded(cm_from_squeezing(spec, ChannelParams(eta_a, eta_b)), xi)
    return populations_from_radial_wigner(params, n_max).to_density()


def bures_qfi(rho, phase, dtheta=1e-3, pad=25):
    """F = 8 (1 - sqrt(fidelity(rho, rho_dtheta))) / dtheta^2 from an explicit small displacement."""
    dim = rho.dim + pad
    el = np.zeros((dim, dim), dtype=complex)
    el[: rho.dim, : rho.dim] = rho.elements
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    g = (a * np.exp(-1j * phase) + a.T * np.exp(1j * phase)) / math.sqrt(2)
    u = expm(-1j * dtheta * g)
    big = DensityMatrix(el)
    moved = DensityMatrix(u @ el @ u.conj().T)
    return 8 * (1 - math.sqrt(fidelity(big, moved))) / dtheta ** 2


def test_vacuum_is_standard_quantum_limit():
    rep = metrological_power(DensityMatrix.number_state(0, 6))
    assert rep.f_max == pytest.approx(2, abs=1e-12)
    assert rep.metrological_power == pytest.approx(0, abs=1e-12)
    assert rep.phase_independent


def test_single_photon():
    rep = metrological_power(DensityMatrix.number_state(1, 4))
    assert rep.f_max == pytest.approx(6, abs=1e-12)
    assert rep.metrological_power == pytest.approx(1, abs=1e-12)


def test_thermal_state_below_limit():
    m = 2.0
    rep = metrological_power(DensityMatrix.thermal(m, 80))
    # displacement QFI of a Gaussian state is the inverse quadrature variance, scaled so vacuum gives 2
    assert rep.f_max == pytest.approx(2 / m, abs=1e-8)
    assert rep.metrological_power == 0.0


def test_power_from_qfi_clamps():
    assert power_from_qfi(1.5) == 0.0
    assert power_from_qfi(6.0) == 1.0


def test_pure_state_is_four_times_variance():
    rng = np.random.default_rng(1)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    dim = 7
    ext = np.append(psi, 0)
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    for phase in (0.0, 0.4, 2.0):
        g = (a * np.exp(-1j * phase) + a.T * np.exp(1j * phase)) / math.sqrt(2)
        var = (ext.conj() @ g @ g @ ext - (ext.conj() @ g @ ext) ** 2).real
        assert qfi_quadrature(rho, phase) == pytest.approx(4 * var, abs=1e-12)


@pytest.mark.parametrize("phase", [0.0, 0.9])
def test_matches_bures_finite_difference(phase):
    rng = np.random.default_rng(2)
    g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    el = g @ g.conj().T + 0.2 * np.eye(5)
    rho = DensityMatrix(el / np.trace(el).real)
    assert qfi_quadrature(rho, phase) == pytest.approx(bures_qfi(rho, phase), rel=1e-3)


def test_heralded_state_against_bures_oracle():
    rho = heralded_rho(SqueezingSpec(0.74, 1.38), 0.9, 0.9, 0.98, n_max=12)
    assert qfi_quadrature(rho, 0.0) == pytest.approx(bures_qfi(rho, 0.0), rel=1e-3)


def test_diagonal_states_are_phase_flat():
    rho = DensityMatrix.from_populations([0.6, 0.3, 0.1])
    vals = [qfi_quadrature(rho, ph) for ph in np.linspace(0, math.pi, 7)]
    assert max(vals) - min(vals) < 1e-12
    assert metrological_power(rho).phase_independent


def test_optimiser_finds_phase_of_squeezed_like_state():
    # superposition with a fixed phase has a phase-dependent QFI; compare with a dense scan
    psi = np.array([0.8, 0.0, 0.6 * np.exp(0.7j)])
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    scan = max(qfi_quadrature(rho, ph) for ph in np.linspace(0, math.pi, 20001))
    rep = metrological_power(rho)
    assert not rep.phase_independent
    assert rep.f_max == pytest.approx(scan, abs=1e-8)
    assert qfi_quadrature(rho, rep.optimal_phase) == pytest.approx(rep.f_max, abs=1e-12)


def test_independent_of_alice_loss():
    spec = SqueezingSpec(0.74, 1.38)
    for eb in (0.6, 0.9):
        a = metrological_power(heralded_rho(spec, 0.3, eb)).metrological_power
        b = metrological_power(heralded_rho(spec, 0.9, eb)).metrological_power
        assert a == pytest.approx(b, abs=1e-10)


def test_power_grows_with_efficiency_and_favours_weak_squeezing():
    low = SqueezingSpec.from_db(-1.0, 1.0)
    high = SqueezingSpec.from_db(-3.0, 3.0)
    m_low = [metrological_power(heralded_rho(low, 0.9, eb)).metrological_power for eb in ETA_B]
    m_high = [metrological_power(heralded_rho(high, 0.9, eb)).metrological_power for eb in ETA_B]
    assert np.all(np.diff(m_low) >= -1e-12) and np.all(np.diff(m_high) >= -1e-12)
    assert all(lo >= hi - 1e-12 for lo, hi in zip(m_low, m_high))
    assert m_low[-1] > 0.5 and m_high[-1] > 0.3


def test_measured_state_has_metrological_power():
    rho = populations_from_radial_wigner(heralded(CM_A9), 15).to_density()
    assert metrological_power(rho).metrological_power > 0


def test_report_text():
    text = metrological_power(DensityMatrix.number_state(1, 3)).to_text()
    for key in ("f_max", "optimal_phase", "metrological_power", "phase_independent"):
        assert f"{key} = " in text
