import math

import numpy as np
import pytest
from scipy.special import comb

from chiralchain.chain import (BetheUnavailable, ChainParams, TransformedParams, bethe_basis, bethe_energy,
                               bethe_state, build_sector_hamiltonian, dispersion, group_velocity,
                               group_velocity_mismatch, magnon_spectrum, sector_basis, solve_bethe_roots,
                               xxz_mapping)


@pytest.mark.parametrize("branch", ["plus", "minus"])
@pytest.mark.parametrize("L", [4, 7, 10])
def test_plane_waves_diagonalize_one_flip_sector(L, branch):
    p = ChainParams(L, -1.0, 1.0, 0.5, branch=branch)
    H, basis = build_sector_hamiltonian(p, 1)
    assert len(basis) == L
    for m in magnon_spectrum(p):
        # spin-1/2 exchange shifts every mode by the same constant relative to the dispersion
        v = m.amplitudes
        e = np.vdot(v, H @ v).real
        assert np.linalg.norm(H @ v - e * v) < 1e-12
    E = np.linalg.eigvalsh(H)
    w = np.sort([m.omega for m in magnon_spectrum(p)])
    assert np.allclose(E - E.mean(), w - w.mean(), atol=1e-12)


def test_dispersion_values():
    p = ChainParams(8, -1.0, 1.0, 0.5)
    assert dispersion(p, 0.0) == pytest.approx(0.0)
    assert dispersion(p, math.pi / 2) == pytest.approx(-1 + 0.5)
    assert dispersion(p.replace(branch="minus"), math.pi / 2) == pytest.approx(-1 - 0.5)


def test_group_velocity_is_derivative():
    p = ChainParams(10, -0.7, 0.3, 0.4, branch="minus")
    k = np.linspace(0, 2 * np.pi, 17)
    h = 1e-6
    fd = (dispersion(p, k + h) - dispersion(p, k - h)) / (2 * h)
    assert np.allclose(group_velocity(p, k), fd, atol=1e-8)


def test_branch_mismatch_vanishes_without_dm():
    k = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(group_velocity_mismatch(ChainParams(6, D=0.0), k), 0)
    assert np.allclose(group_velocity_mismatch(ChainParams(6, D=0.5), k), 2 * 0.5 * np.cos(k))


def test_params_validation():
    with pytest.raises(ValueError):
        ChainParams(1)
    with pytest.raises(ValueError):
        ChainParams(4, J1=float("nan"))
    with pytest.raises(ValueError):
        ChainParams(4, branch="left")


def test_transformed_params():
    t = TransformedParams.from_params(ChainParams(4, -1.0, 1.0, 0.5))
    assert t.J1p == pytest.approx(math.sqrt(1.25))
    assert t.J2p == pytest.approx(0.75 / 1.25)
    assert math.isnan(TransformedParams.from_params(ChainParams(4, 0.0, 1.0, 0.0)).Delta)


@pytest.mark.parametrize("L", [4, 5, 8])
def test_two_flip_sector_hermitian(L):
    H, basis = build_sector_hamiltonian(ChainParams(L), 2)
    assert H.shape == (comb(L, 2, exact=True),) * 2
    assert np.allclose(H, H.conj().T)
    assert basis == sector_basis(L, 2)


def test_pauli_convention_is_four_times_spin():
    p = ChainParams(5, -0.4, 0.9, 0.3)
    Hs, _ = build_sector_hamiltonian(p, 2)
    Hp, _ = build_sector_hamiltonian(p, 2, convention="pauli")
    assert np.allclose(Hp, 4 * Hs)


def test_field_shifts_sector_uniformly():
    p = ChainParams(6)
    H0, _ = build_sector_hamiltonian(p, 2)
    H1, _ = build_sector_hamiltonian(p.replace(Bz=0.3), 2)
    d = H1 - H0
    assert np.allclose(d, d[0, 0] * np.eye(len(d)))


def test_sector_rejects_bad_input():
    with pytest.raises(ValueError):
        build_sector_hamiltonian(ChainParams(4), 3)
    with pytest.raises(ValueError):
        build_sector_hamiltonian(ChainParams(4), 2, convention="natural")


def test_bethe_roots_free_limit():
    # Delta = 0: the phase is trivial mod 2 pi and the total momentum is fixed by I1 + I2
    N, I1, I2 = 8, 2, 5
    r = solve_bethe_roots(N, I1, I2, 0.0)
    assert r.residual < 1e-10
    assert abs(np.exp(1j * r.theta) - 1) < 1e-10
    K = 2 * np.pi * (I1 + I2 + 1) / N
    assert abs(np.exp(1j * (r.k1 + r.k2)) - np.exp(1j * K)) < 1e-10


@pytest.mark.parametrize("branch", ["plus", "minus"])
def test_bethe_states_are_eigenvectors(branch):
    p = ChainParams(8, -1.0, 0.0, 0.5, branch=branch)
    H, basis = build_sector_hamiltonian(p, 2)
    delta, twist = xxz_mapping(p)
    r = solve_bethe_roots(8, 2, 5, delta, twist)
    assert r.residual < 1e-10
    v = bethe_state(r, basis)
    e = bethe_energy(p, r)
    assert np.linalg.norm(H @ v - e * v) < 1e-9


def test_bethe_basis_reproduces_spectrum():
    p = ChainParams(8, -1.0, 0.0, 0.5)
    bb = bethe_basis(p)
    H, _ = build_sector_hamiltonian(p, 2)
    U = bb.vectors
    assert np.allclose(U.conj().T @ U, np.eye(U.shape[1]), atol=1e-9)
    assert np.allclose(np.sort(bb.energies), np.linalg.eigvalsh(H), atol=1e-9)
    assert bb.bethe_count > 0


def test_bethe_requires_no_next_neighbour():
    with pytest.raises(BetheUnavailable):
        bethe_basis(ChainParams(6, J2=0.5))


def test_bethe_quantum_number_checks():
    with pytest.raises(ValueError):
        solve_bethe_roots(6, 2, 2, 0.5)
    with pytest.raises(ValueError):
        solve_bethe_roots(6, 0, 2, 0.5)
