"""Out-of-time-ordered correlators from spectral sums, with a dense
commutator oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chain import ChainParams, bethe_basis, build_sector_hamiltonian, magnon_spectrum, sector_basis
from .dynamics import TimeGrid


@dataclass(frozen=True)
class PerturbationPair:
    siteW: int
    siteV: int

    def __post_init__(self):
        if self.siteW == self.siteV or min(self.siteW, self.siteV) < 1:
            raise ValueError("sites must be distinct and 1-based")

    @classmethod
    def default(cls, L: int) -> "PerturbationPair":
        return cls(1, L // 2)

    def check(self, L: int):
        if max(self.siteW, self.siteV) > L:
            raise ValueError(f"site out of range for L={L}")


@dataclass(frozen=True)
class SpectralData:
    energies: np.ndarray
    sigmaW: np.ndarray
    sigmaV: np.ndarray


@dataclass(frozen=True)
class OTOCCurve:
    grid: TimeGrid
    values: np.ndarray
    branch: str = "plus"
    n1: int = 0


def sigma_z_diagonal(basis, site: int, L: int) -> np.ndarray:
    """sigma^z_site on flipped-site basis states: -1 if flipped, else +1."""
    if not 1 <= site <= L:
        raise ValueError(f"site {site} out of range 1..{L}")
    return np.array([-1.0 if site - 1 in occ else 1.0 for occ in basis])


def sigma_z_matrix_elements(eigvecs, site: int, basis=None) -> np.ndarray:
    """<n|sigma^z_site|m> for the columns of ``eigvecs`` over a flipped-site basis.

    With no basis given, eigvecs are taken to be single-flip site amplitudes.
    """
    V = np.asarray(eigvecs, dtype=complex)
    if basis is None:
        basis = [(j,) for j in range(V.shape[0])]
        L = V.shape[0]
    else:
        L = max(max(b) for b in basis) + 1
    z = sigma_z_diagonal(basis, site, L)
    return V.conj().T @ (z[:, None] * V)


def magnon_sigma_z(L: int, site: int) -> np.ndarray:
    """delta_nm - (2/L) e^{i 2 pi (n - m) site / L} for plane-wave modes."""
    if not 1 <= site <= L:
        raise ValueError(f"site {site} out of range 1..{L}")
    n = np.arange(L)
    return np.eye(L) - (2 / L) * np.exp(2j * np.pi * np.subtract.outer(n, n) * site / L)


def otoc_spectral(data: SpectralData, n1: int, grid: TimeGrid, branch: str = "plus") -> OTOCCurve:
    """C(t) = 1 - Re sum e^{it(E1 - E2 + E3 - E4)} V12 W23 V34 W41.

    The triple sum is evaluated as nested contractions, O(dim^2) per time.
    """
    E = np.asarray(data.energies, dtype=float)
    W, V = data.sigmaW, data.sigmaV
    if not 0 <= n1 < E.size:
        raise IndexError(f"n1={n1} outside 0..{E.size - 1}")
    if W.shape != (E.size, E.size) or V.shape != W.shape:
        raise ValueError("inconsistent spectral data")
    vals = np.empty(grid.count)
    for i, t in enumerate(grid.times):
        ph = np.exp(1j * E * t)
        # right to left: n4 -> n3 -> n2
        x = ph.conj() * W[:, n1]            # e^{-itE4} W_{n4 n1}
        x = ph * (V @ x)                    # e^{itE3} sum_n4 V_{n3 n4} ...
        x = ph.conj() * (W @ x)             # e^{-itE2} sum_n3 W_{n2 n3} ...
        F = ph[n1] * (V[n1] @ x)
        vals[i] = 1.0 - F.real
    return OTOCCurve(grid, vals, branch, n1)


def otoc_spectral_bruteforce(data: SpectralData, n1: int, t: float) -> float:
    """Explicit triple sum, for checking the contracted version."""
    E = data.energies
    W, V = data.sigmaW, data.sigmaV
    phase = np.exp(1j * t * (E[n1] - E[:, None, None] + E[None, :, None] - E[None, None, :]))
    # A[n2, n3, n4] = V[n1,n2] W[n2,n3] V[n3,n4] W[n4,n1]
    A = V[n1][:, None, None] * W[:, :, None] * V[None, :, :] * W[:, n1][None, None, :]
    return float(1 - np.sum(phase * A).real)


def otoc_infinite_time(data: SpectralData, n1: int | None = None) -> float:
    """Diagonal-ensemble value 1 - F for initial eigenstate n1.

    F = W_pp^2 V_pp^2 + sum_{q != p} (W_pp V_pq W_qq V_qp + W_pq V_qq W_qp V_pp), p = n1.
    With n1 = None the value is averaged over all eigenstates.
    """
    W, V = data.sigmaW, data.sigmaV
    dW, dV = np.diag(W), np.diag(V)

    def F(p):
        mask = np.ones(dW.size, bool)
        mask[p] = False
        first = (dW[p] ** 2) * (dV[p] ** 2)
        second = np.sum(dW[p] * V[p, mask] * dW[mask] * V[mask, p])
        third = np.sum(W[p, mask] * dV[mask] * W[mask, p] * dV[p])
        return (first + second + third).real

    if n1 is None:
        return float(1 - np.mean([F(p) for p in range(dW.size)]))
    return float(1 - F(n1))


def single_excitation_data(params: ChainParams, pair: PerturbationPair | None = None) -> SpectralData:
    pair = pair or PerturbationPair.default(params.L)
    pair.check(params.L)
    E = np.array([m.omega for m in magnon_spectrum(params)])
    return SpectralData(E, magnon_sigma_z(params.L, pair.siteW), magnon_sigma_z(params.L, pair.siteV))


def otoc_single_excitation(params: ChainParams, n1: int, grid: TimeGrid,
                           pair: PerturbationPair | None = None) -> OTOCCurve:
    if not 0 <= n1 < params.L:
        raise IndexError(f"n1={n1} outside 0..{params.L - 1}")
    return otoc_spectral(single_excitation_data(params, pair), n1, grid, params.branch)


def two_excitation_data(params: ChainParams, method: str = "ed",
                        pair: PerturbationPair | None = None) -> SpectralData:
    """Two-flip eigenbasis (sorted by energy) and sigma^z tables."""
    if params.L < 4:
        raise ValueError("need L >= 4")
    pair = pair or PerturbationPair.default(params.L)
    pair.check(params.L)
    basis = sector_basis(params.L, 2)
    if method == "ed":
        H, _ = build_sector_hamiltonian(params, 2)
        E, U = np.linalg.eigh(H)
    elif method == "bethe":
        bb = bethe_basis(params)
        order = np.argsort(bb.energies, kind="stable")
        E, U = bb.energies[order], bb.vectors[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpectralData(E, sigma_z_matrix_elements(U, pair.siteW, basis),
                        sigma_z_matrix_elements(U, pair.siteV, basis))


def otoc_two_excitation(params: ChainParams, grid: TimeGrid, method: str = "ed", n1: int = 0,
                        pair: PerturbationPair | None = None) -> OTOCCurve:
    """OTOC in the two-flip sector starting from eigenstate ``n1`` (0 = lowest energy)."""
    data = two_excitation_data(params, method, pair)
    return otoc_spectral(data, n1, grid, params.branch)


def otoc_commutator_oracle(H, evolved, static, grid: TimeGrid, state, rescale: float = 0.5) -> OTOCCurve:
    """rescale * <[A(t), B]^dag [A(t), B]> with A(t) = e^{iHt} A e^{-iHt}.

    The spectral sum places the evolved operator on V; pass ``evolved=sigma_V``
    and ``static=sigma_W`` to compare.
    """
    H = np.asarray(H)
    A = np.asarray(evolved)
    B = np.asarray(static)
    psi = np.asarray(state, dtype=complex)
    if not (H.shape == A.shape == B.shape == (psi.size, psi.size)):
        raise ValueError("dimension mismatch")
    vals = np.empty(grid.count)
    for i, t in enumerate(grid.times):
        U = scipy.linalg.expm(-1j * H * t)
        At = U.conj().T @ A @ U
        Cm = At @ B - B @ At
        vals[i] = rescale * np.vdot(Cm @ psi, Cm @ psi).real
    return OTOCCurve(grid, vals)


def otoc_two_wavefunction(H, evolved, static, t: float, state) -> float:
    """2 - 2 Re<phi|psi>, psi = A(t) B |0>, phi = B A(t) |0>."""
    U = scipy.linalg.expm(-1j * np.asarray(H) * t)
    psi0 = np.asarray(state, dtype=complex)

    def At(v):
        return U.conj().T @ (evolved @ (U @ v))

    psi = At(static @ psi0)
    phi = static @ At(psi0)
    return float(2 - 2 * np.vdot(phi, psi).real)
