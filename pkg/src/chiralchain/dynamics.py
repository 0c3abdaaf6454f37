"""Time evolution: single-magnon propagation, the closed-form L=4 two-magnon
solution, partial traces and a dense exact-diagonalization oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainParams, build_sector_hamiltonian, magnon_spectrum, sector_basis

EIG_CLIP = 1e-10


class DegenerateDM(ValueError):
    """Closed forms are singular at D = 0."""


@dataclass(frozen=True)
class DensityMatrix:
    """Dense Hermitian, unit-trace matrix with ordered subsystem labels."""

    matrix: np.ndarray = field(repr=False)
    labels: tuple = ("sys",)
    dims: tuple | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        labels = tuple(self.labels)
        if self.dims is not None:
            dims = tuple(int(d) for d in self.dims)
        elif len(labels) == 1:
            dims = (m.shape[0],)
        else:
            dims = (2,) * len(labels)  # qubits unless told otherwise
        if int(np.prod(dims)) != m.shape[0] or len(dims) != len(labels):
            raise ValueError(f"dims {dims} / labels {labels} inconsistent with shape {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise ValueError("matrix not Hermitian")
        if abs(np.trace(m) - 1) > 1e-10:
            raise ValueError(f"trace {np.trace(m).real:.12g} != 1")
        if np.linalg.eigvalsh(m).min() < -EIG_CLIP:
            raise ValueError("matrix has negative eigenvalues")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, psi, labels=("sys",), dims=None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), labels, dims)


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 0.1
    count: int = 101

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.count)

    @classmethod
    def span(cls, tmax: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        return cls(t0, dt, int(math.floor((tmax - t0) / dt + 1e-9)) + 1)


def _mat(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def ed_evolve(H, psi0, t):
    """exp(-iHt) psi0 via eigendecomposition. ``t`` may be an array, giving rows."""
    H = np.asarray(H)
    psi0 = np.asarray(psi0, dtype=complex)
    if H.shape != (psi0.size, psi0.size):
        raise ValueError(f"dimension mismatch: H {H.shape}, psi0 {psi0.shape}")
    w, U = np.linalg.eigh(H)
    c = U.conj().T @ psi0
    ts = np.asarray(t, dtype=float)
    out = (np.exp(-1j * np.multiply.outer(ts, w)) * c) @ U.T
    return out


def evolve_single_excitation(params: ChainParams, initial, t) -> DensityMatrix:
    """rho_jq(t) from the double mode sum over plane waves.

    ``initial`` is a length-L vector over the single-flip site basis.
    """
    psi0 = np.asarray(initial, dtype=complex)
    if psi0.shape != (params.L,):
        raise ValueError(f"initial state has length {psi0.size}, expected L={params.L}")
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state not normalized")
    modes = magnon_spectrum(params)
    Phi = np.array([m.amplitudes for m in modes]).T  # columns phi_n(j)
    omega = np.array([m.omega for m in modes])
    c = Phi.conj().T @ psi0
    psi = Phi @ (np.exp(-1j * omega * t) * c)
    return DensityMatrix(np.outer(psi, psi.conj()), ("sector",), (params.L,))


# ---------------------------------------------------------------------------
# L = 4, two magnons

@dataclass(frozen=True)
class TwoExcitationL4Solution:
    """Closed-form eigensystem for L=4 with two flipped spins (Pauli scale).

    ``eigvecs`` holds the five tabulated vectors psi_1..psi_5; the matching
    eigenvectors of ``build_sector_hamiltonian(..., convention="pauli")`` are
    their complex conjugates (``hamiltonian_eigvecs``).
    """

    params: ChainParams
    omegas: np.ndarray
    amps: np.ndarray
    eta: float
    lam: float
    alpha: float
    gamma: float
    eigvecs: np.ndarray  # rows psi_n

    @property
    def hamiltonian_eigvecs(self) -> np.ndarray:
        return self.eigvecs.conj()


L4_BASIS = sector_basis(4, 2)  # (0,1),(0,2),(0,3),(1,2),(1,3),(2,3) = 1100,1010,1001,0110,0101,0011


def two_excitation_l4_solution(params: ChainParams) -> TwoExcitationL4Solution:
    if params.L != 4:
        raise ValueError("closed form exists only for L = 4")
    if params.D == 0:
        raise DegenerateDM("D = 0: eta and lambda are singular")
    J1, J2 = params.J1, params.J2
    twoD = params.sign * 2 * params.D
    r = math.sqrt((J1 - 4 * J2) ** 2 + 8 * params.D**2)
    eta = (J1 - 4 * J2) / twoD - r / twoD
    lam = (J1 - 4 * J2) / twoD + r / twoD
    alpha = (4 + 2 * eta**2) ** -0.5
    gamma = (4 + 2 * lam**2) ** -0.5
    # psi_1 carries eta and pairs with +2r, psi_2 with -2r
    omegas = np.array([
        -2 * J1 - 4 * J2 + 2 * r,
        -2 * J1 - 4 * J2 - 2 * r,
        4 * J1 + 4 * J2,
        -8 * J1 + 4 * J2,
        -4 * J2,
    ])
    amps = np.array([alpha, gamma, 6**-0.5, 12**-0.5, -(2**-0.5)])
    vecs = np.array([
        alpha * np.array([1, -1j * eta, -1, -1, 1j * eta, 1]),
        gamma * np.array([1, -1j * lam, -1, -1, 1j * lam, 1]),
        np.array([1, 1, 1, 1, 1, 1]) / math.sqrt(6),
        np.array([1, -2, 1, 1, -2, 1]) / math.sqrt(12),
        np.array([-1, 0, 0, 0, 0, 1]) / math.sqrt(2),
    ], dtype=complex)
    return TwoExcitationL4Solution(params, omegas, amps, eta, lam, alpha, gamma, vecs)


def evolve_two_excitation_l4(sol: TwoExcitationL4Solution, t) -> np.ndarray:
    """Physical state exp(-iHt)|1100> over the pair basis.

    The tabulated sum sum_n a_n e^{+it Omega_n} psi_n is its complex conjugate.
    """
    ts = np.asarray(t, dtype=float)
    ph = np.exp(1j * np.multiply.outer(ts, sol.omegas)) * sol.amps
    return (ph @ sol.eigvecs).conj()


def pair_to_qubits(vec, L: int | None = None) -> np.ndarray:
    """Embed a two-flip sector vector into the 2^L qubit space.

    Site 1 is the most significant qubit and |1> marks a flipped spin.
    """
    vec = np.asarray(vec, dtype=complex)
    if L is None:
        L = int(round((1 + math.sqrt(1 + 8 * vec.size)) / 2))
    basis = sector_basis(L, 2)
    if len(basis) != vec.size:
        raise ValueError("vector length does not match the two-flip sector")
    full = np.zeros(2**L, dtype=complex)
    for amp, (a, b) in zip(vec, basis):
        full[(1 << (L - 1 - a)) | (1 << (L - 1 - b))] = amp
    return full


def sector_to_qubits(vec, L: int, excitations: int) -> np.ndarray:
    basis = sector_basis(L, excitations)
    full = np.zeros(2**L, dtype=complex)
    for amp, occ in zip(np.asarray(vec, dtype=complex), basis):
        full[sum(1 << (L - 1 - x) for x in occ)] = amp
    return full


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduce to the subsystems named in ``keep`` (output keeps rho's order)."""
    if isinstance(keep, str):
        keep = (keep,)
    keep = tuple(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    for tag in keep:
        if tag not in rho.labels:
            raise ValueError(f"unknown subsystem {tag!r}; have {rho.labels}")
    n = len(rho.dims)
    kept = [i for i, lab in enumerate(rho.labels) if lab in keep]
    traced = [i for i in range(n) if i not in kept]
    T = rho.matrix.reshape(rho.dims + rho.dims)
    perm = kept + traced + [n + i for i in kept] + [n + i for i in traced]
    T = T.transpose(perm)
    dk = int(np.prod([rho.dims[i] for i in kept]))
    dt = int(np.prod([rho.dims[i] for i in traced])) if traced else 1
    T = T.reshape(dk, dt, dk, dt)
    red = np.einsum("ajbj->ab", T)
    return DensityMatrix(red, tuple(rho.labels[i] for i in kept), tuple(rho.dims[i] for i in kept))


def von_neumann_entropy(rho) -> float:
    """-sum p log2 p, with eigenvalues in [-1e-10, 0) clipped to zero."""
    w = np.linalg.eigvalsh(_mat(rho))
    if w.min() < -EIG_CLIP:
        raise ValueError(f"eigenvalue {w.min():.3e} below clipping tolerance")
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def entropy_of_probs(p) -> float:
    p = np.asarray(p, dtype=float)
    if p.min(initial=0.0) < -EIG_CLIP:
        raise ValueError("negative probability")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def l4_hamiltonian(params: ChainParams) -> np.ndarray:
    return build_sector_hamiltonian(params, 2, convention="pauli")[0]
