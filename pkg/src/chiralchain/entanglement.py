"""Tangles, Wootters concurrence, CKW monogamy and vector chirality on four qubits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EIG_CLIP, DensityMatrix, TwoExcitationL4Solution, pair_to_qubits

NQ = 4
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SY, SY)


def as_state(state) -> np.ndarray:
    psi = np.asarray(state, dtype=complex).ravel()
    if psi.size != 2**NQ:
        raise ValueError(f"expected {2**NQ} amplitudes, got {psi.size}")
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("state not normalized")
    return psi


def _check_site(i):
    if not 1 <= i <= NQ:
        raise ValueError(f"site {i} out of range 1..{NQ}")


def reduced(state, sites) -> np.ndarray:
    """Marginal on the given 1-based sites (qubit 1 is the most significant bit)."""
    T = as_state(state).reshape((2,) * NQ)
    keep = [s - 1 for s in sites]
    rest = [i for i in range(NQ) if i not in keep]
    M = T.transpose(keep + rest).reshape(2 ** len(keep), -1)
    return M @ M.conj().T


def one_tangle(state, i: int) -> float:
    """4 det(rho_i)."""
    _check_site(i)
    return float(4 * np.linalg.det(reduced(state, [i])).real)


def concurrence(rho) -> float:
    """Wootters concurrence from the square roots of the eigenvalues of rho rho~.

    Those square roots are the singular values of sqrt(rho) YY sqrt(rho)*,
    which stay accurate when rho rho~ is rank deficient.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError("concurrence needs a two-qubit state")
    w, U = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -EIG_CLIP:
        raise ValueError(f"rho eigenvalue {w.min():.3e} is negative")
    s = U @ np.diag(np.sqrt(np.clip(w, 0, None))) @ U.conj().T
    r = np.linalg.svd(s @ YY @ s.conj(), compute_uv=False)
    return float(max(0.0, r[0] - r[1] - r[2] - r[3]))


@dataclass(frozen=True)
class TangleReport:
    site: int
    oneTangle: float
    twoTangles: dict
    slack: float


def ckw_report(state, i: int) -> TangleReport:
    _check_site(i)
    tau1 = one_tangle(state, i)
    pairs = {}
    for j in range(1, NQ + 1):
        if j != i:
            pairs[j] = concurrence(reduced(state, [i, j])) ** 2
    return TangleReport(i, tau1, pairs, tau1 - sum(pairs.values()))


def chirality_operator(i: int, spin: float = 0.5) -> np.ndarray:
    """S^x_i S^y_{i+1} - S^y_i S^x_{i+1} on the periodic 4-ring, S = spin * sigma."""
    _check_site(i)
    j = i % NQ + 1

    def op(mats):
        out = np.array([[1.0 + 0j]])
        for k in range(1, NQ + 1):
            out = np.kron(out, mats.get(k, np.eye(2)))
        return out

    return spin**2 * (op({i: SX, j: SY}) - op({i: SY, j: SX}))


def chirality_expectation(state, i: int, spin: float = 0.5) -> float:
    psi = as_state(state)
    return float(np.vdot(psi, chirality_operator(i, spin) @ psi).real)


def phi_state() -> np.ndarray:
    """(i/2)|1000> - 1/2|0100> - (i/2)|0010> + 1/2|0001>."""
    psi = np.zeros(16, dtype=complex)
    psi[0b1000], psi[0b0100], psi[0b0010], psi[0b0001] = 0.5j, -0.5, -0.5j, 0.5
    return psi


def ghz_state() -> np.ndarray:
    psi = np.zeros(16, dtype=complex)
    psi[0] = psi[-1] = 2**-0.5
    return psi


def w_state() -> np.ndarray:
    psi = np.zeros(16, dtype=complex)
    for k in range(NQ):
        psi[1 << k] = 0.5
    return psi


def psi2_state(sol: TwoExcitationL4Solution, hamiltonian: bool = False) -> np.ndarray:
    """psi_2 in its tabulated form, or its conjugate (the eigenvector of the Pauli-scale H)."""
    v = sol.hamiltonian_eigvecs[1] if hamiltonian else sol.eigvecs[1]
    return pair_to_qubits(v, 4)


def psi2_chirality_closed_form(sol: TwoExcitationL4Solution) -> float:
    """8 lambda gamma^2."""
    return 8 * sol.lam * sol.gamma**2
