import numpy as np
import pytest

from chiralchain.chain import ChainParams, build_sector_hamiltonian, magnon_spectrum
from chiralchain.dynamics import TimeGrid
from chiralchain.otoc import (PerturbationPair, SpectralData, magnon_sigma_z, otoc_commutator_oracle,
                              otoc_infinite_time, otoc_single_excitation, otoc_spectral,
                              otoc_spectral_bruteforce, otoc_two_excitation, otoc_two_wavefunction,
                              sigma_z_diagonal, sigma_z_matrix_elements, single_excitation_data,
                              two_excitation_data)

GRID = TimeGrid(0, 0.3, 21)


def zdiag(basis, site, L):
    return np.diag(sigma_z_diagonal(basis, site, L)).astype(complex)


def test_magnon_sigma_z_matches_plane_waves():
    p = ChainParams(9)
    U = np.array([m.amplitudes for m in magnon_spectrum(p)]).T
    for site in (1, 4, 9):
        assert np.allclose(magnon_sigma_z(9, site), sigma_z_matrix_elements(U, site), atol=1e-12)


def test_contraction_matches_triple_sum():
    d = two_excitation_data(ChainParams(6, -1.0, 0.6, 0.4))
    for t in (0.0, 0.9, 4.2):
        fast = otoc_spectral(d, 3, TimeGrid(t, 1.0, 1)).values[0]
        assert fast == pytest.approx(otoc_spectral_bruteforce(d, 3, t), abs=1e-12)


@pytest.mark.parametrize("branch", ["plus", "minus"])
def test_single_excitation_matches_oracle(branch):
    p = ChainParams(8, -1.0, 1.0, 0.5, branch=branch)
    H, basis = build_sector_hamiltonian(p, 1)
    pair = PerturbationPair.default(8)
    c = otoc_single_excitation(p, 2, GRID)
    o = otoc_commutator_oracle(H, zdiag(basis, pair.siteV, 8), zdiag(basis, pair.siteW, 8), GRID,
                               magnon_spectrum(p)[2].amplitudes)
    assert np.max(np.abs(c.values - o.values)) < 1e-10


def test_two_excitation_matches_oracle():
    p = ChainParams(7, -0.6, 0.8, 0.3)
    H, basis = build_sector_hamiltonian(p, 2)
    w, U = np.linalg.eigh(H)
    c = otoc_two_excitation(p, GRID, n1=4)
    o = otoc_commutator_oracle(H, zdiag(basis, 3, 7), zdiag(basis, 1, 7), GRID, U[:, 4])
    assert np.max(np.abs(c.values - o.values)) < 1e-10


def test_wavefunction_overlap_form():
    p = ChainParams(6)
    H, basis = build_sector_hamiltonian(p, 2)
    w, U = np.linalg.eigh(H)
    A, B = zdiag(basis, 3, 6), zdiag(basis, 1, 6)
    c = otoc_two_excitation(p, TimeGrid(1.1, 1, 1), n1=0)
    assert otoc_two_wavefunction(H, A, B, 1.1, U[:, 0]) == pytest.approx(2 * c.values[0], abs=1e-10)


def test_starts_at_zero_and_stays_bounded():
    c = otoc_single_excitation(ChainParams(10), 1, TimeGrid(0, 0.5, 60))
    assert abs(c.values[0]) < 1e-12
    assert np.all(c.values > -1e-12) and np.all(c.values < 2 + 1e-12)


def test_infinite_time_equals_long_average():
    p = ChainParams(10)
    d = two_excitation_data(p)
    long = otoc_spectral(d, 0, TimeGrid(0, 0.37, 6000)).values
    assert np.mean(long) == pytest.approx(otoc_infinite_time(d, 0), abs=2e-2)


def test_infinite_time_on_commuting_operators():
    E = np.array([0.0, 1.0, 2.5])
    Z = np.diag([1.0, -1.0, 1.0]).astype(complex)
    d = SpectralData(E, Z, Z)
    assert otoc_infinite_time(d, 1) == pytest.approx(0)
    assert otoc_infinite_time(d) == pytest.approx(0)


def test_reflection_symmetric_pair_is_branch_independent():
    # sites 1 and 1 + L/2 map onto each other under the reflection that swaps the branches
    L = 8
    pair = PerturbationPair(1, 1 + L // 2)
    psi0 = np.zeros(L, complex)
    psi0[0] = 1
    vals = []
    for br in ("plus", "minus"):
        p = ChainParams(L, branch=br)
        H, basis = build_sector_hamiltonian(p, 1)
        vals.append(otoc_commutator_oracle(H, zdiag(basis, pair.siteV, L), zdiag(basis, pair.siteW, L),
                                           GRID, psi0).values)
    assert np.allclose(vals[0], vals[1], atol=1e-12)


def test_bethe_route_matches_ed():
    p = ChainParams(8, -1.0, 0.0, 0.5, branch="minus")
    a = otoc_two_excitation(p, GRID, "ed", n1=5)
    b = otoc_two_excitation(p, GRID, "bethe", n1=5)
    assert np.max(np.abs(a.values - b.values)) < 1e-8


def test_input_checks():
    with pytest.raises(IndexError):
        otoc_single_excitation(ChainParams(6), 6, GRID)
    with pytest.raises(ValueError):
        PerturbationPair(2, 2)
    with pytest.raises(ValueError):
        single_excitation_data(ChainParams(4), PerturbationPair(1, 5))
    with pytest.raises(ValueError):
        two_excitation_data(ChainParams(6), method="dmrg")
