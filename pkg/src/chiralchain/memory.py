"""Entropic uncertainty with quantum memory: post-measurement states,
conditional entropies and time-dependent LHS/RHS curves."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .chain import ChainParams, build_sector_hamiltonian
from .dynamics import (DegenerateDM, DensityMatrix, TimeGrid, TwoExcitationL4Solution, ed_evolve,
                       entropy_of_probs, evolve_single_excitation, partial_trace, sector_to_qubits,
                       two_excitation_l4_solution, von_neumann_entropy)

log = logging.getLogger(__name__)

LOG2_INV_C = 1.0  # c = 1/2 for the Z/X pair

_PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]]),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class MeasurementBasis:
    kind: str

    def __post_init__(self):
        if self.kind not in ("Z", "X"):
            raise ValueError("kind must be 'Z' or 'X'")

    @property
    def vectors(self) -> np.ndarray:
        if self.kind == "Z":
            return np.eye(2, dtype=complex)
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

    @property
    def projectors(self) -> list[np.ndarray]:
        return [np.outer(v, v.conj()) for v in self.vectors]


Z = MeasurementBasis("Z")
X = MeasurementBasis("X")


def _ab(rho: DensityMatrix) -> DensityMatrix:
    if set(rho.labels) != {"A", "B"} or rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state on (A, B), got {rho.labels} {rho.dims}")
    if rho.labels == ("A", "B"):
        return rho
    m = rho.matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return DensityMatrix(m, ("A", "B"), (2, 2))


def post_measurement_state(rhoAB: DensityMatrix, basis: MeasurementBasis) -> DensityMatrix:
    """sum_n (P_n x I) rho (P_n x I), measuring qubit A."""
    rho = _ab(rhoAB)
    out = np.zeros((4, 4), dtype=complex)
    for P in basis.projectors:
        K = np.kron(P, np.eye(2))
        out += K @ rho.matrix @ K
    return DensityMatrix((out + out.conj().T) / 2, ("A", "B"), (2, 2))


def conditional_entropy(rhoAB: DensityMatrix) -> float:
    rho = _ab(rhoAB)
    return von_neumann_entropy(rho) - von_neumann_entropy(partial_trace(rho, ["B"]))


def eur_sides(rhoAB: DensityMatrix) -> tuple[float, float]:
    """(S(X|B) + S(Z|B), log2(1/c) + S(A|B))."""
    rho = _ab(rhoAB)
    lhs = conditional_entropy(post_measurement_state(rho, X)) + conditional_entropy(post_measurement_state(rho, Z))
    return lhs, LOG2_INV_C + conditional_entropy(rho)


@dataclass(frozen=True)
class EURCurve:
    grid: TimeGrid
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.lhs - self.rhs


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x). Not used by the EUR curves."""
    return entropy_of_probs([x, 1 - x])


def dirac_decomposition(rhoAB: DensityMatrix) -> np.ndarray:
    """R[mu, nu] = Tr[rho (sigma^mu_A x sigma^nu_B)], sigma^0 = I."""
    rho = _ab(rhoAB).matrix
    R = np.empty((4, 4))
    for mu in range(4):
        for nu in range(4):
            R[mu, nu] = np.trace(rho @ np.kron(_PAULI[mu], _PAULI[nu])).real
    return R


# ---------------------------------------------------------------------------
# single excitation

def single_excitation_rho_ab(rho_sector: DensityMatrix, siteA: int = 1, siteB: int | None = None,
                             coherent: bool = False) -> DensityMatrix:
    """Two-qubit state of sites A and B from a one-flip sector density matrix.

    By default the A-B coherence is dropped, which is the block form with
    rho_11, rho_BB and the channel weight on |00>. ``coherent=True`` keeps
    <10|rho|01> = rho_{A,B}, the exact partial trace.
    """
    r = rho_sector.matrix
    L = r.shape[0]
    siteB = L if siteB is None else siteB
    if not (1 <= siteA <= L and 1 <= siteB <= L) or siteA == siteB:
        raise ValueError("bad site choice")
    a, b = siteA - 1, siteB - 1
    pA, pB = r[a, a].real, r[b, b].real
    m = np.zeros((4, 4), dtype=complex)
    # kron order (A, B): index = 2*A + B, with 1 = flipped
    m[0, 0] = 1 - pA - pB
    m[2, 2] = pA
    m[1, 1] = pB
    if coherent:
        m[2, 1] = r[a, b]
        m[1, 2] = r[b, a]
    return DensityMatrix(m, ("A", "B"), (2, 2))


def memory_curve_single_excitation(params: ChainParams, grid: TimeGrid, siteB: int | None = None,
                                   coherent: bool = False) -> EURCurve:
    """EUR sides for an initial flip on site 1, Alice on site 1, Bob on ``siteB`` (default L)."""
    if params.L < 3:
        raise ValueError("need L >= 3")
    psi0 = np.zeros(params.L)
    psi0[0] = 1.0
    lhs, rhs = [], []
    for t in grid.times:
        rho = evolve_single_excitation(params, psi0, t)
        l, r = eur_sides(single_excitation_rho_ab(rho, 1, siteB, coherent))
        lhs.append(l)
        rhs.append(r)
    return EURCurve(grid, np.array(lhs), np.array(rhs))


# ---------------------------------------------------------------------------
# L = 4, two excitations

@dataclass(frozen=True)
class RhoABElementsL4:
    """Reduced-state elements in the (00, 10, 01, 11) basis, A first.

    ``rho23`` is <10|rho|01>; ``rho32`` its conjugate.
    """

    t: float
    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho23: complex
    rho32: complex

    def matrix(self) -> np.ndarray:
        """4x4 in kron order (A, B): |00>, |01>, |10>, |11>."""
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0], m[2, 2], m[1, 1], m[3, 3] = self.rho11, self.rho22, self.rho33, self.rho44
        m[2, 1], m[1, 2] = self.rho23, self.rho32
        return m

    def density(self) -> DensityMatrix:
        m = self.matrix()
        return DensityMatrix((m + m.conj().T) / 2, ("A", "B"), (2, 2))


def rho_ab_elements_l4(sol: TwoExcitationL4Solution, t: float) -> RhoABElementsL4:
    """Closed-form reduced state of sites 1 and 4 at time t."""
    a2, g2 = sol.alpha**2, sol.gamma**2
    eta, lam = sol.eta, sol.lam
    O = sol.omegas

    def c(i, j):
        return np.cos((O[i - 1] - O[j - 1]) * t)

    def s(i, j):
        return np.sin((O[i - 1] - O[j - 1]) * t)

    rho11 = (a2**2 + g2**2 + 2 * a2 * g2 * c(1, 2)
             - a2 * c(1, 3) / 3 - a2 * c(1, 4) / 6
             - g2 * c(2, 3) / 3 - g2 * c(2, 4) / 6
             + c(3, 4) / 36 + 5 / 144)
    common = a2**2 * eta**2 + a2**2 + g2**2 * lam**2 + g2**2 + 2 * a2 * g2 * (eta * lam + 1) * c(1, 2)
    rho22 = (common
             + a2 / 3 * (c(1, 3) + eta * s(1, 3)) + a2 / 6 * (c(1, 4) - 2 * eta * s(1, 4))
             + a2 * c(1, 5)
             + g2 / 3 * (c(2, 3) + lam * s(2, 3)) + g2 / 6 * (c(2, 4) - 2 * lam * s(2, 4))
             + g2 * c(2, 5) - c(3, 4) / 36 + c(3, 5) / 6 + c(4, 5) / 12 + 49 / 144)
    rho33 = (common
             + a2 / 3 * (c(1, 3) - eta * s(1, 3)) + a2 / 6 * (c(1, 4) + 2 * eta * s(1, 4))
             - a2 * c(1, 5)
             + g2 / 3 * (c(2, 3) - lam * s(2, 3)) + g2 / 6 * (c(2, 4) + 2 * lam * s(2, 4))
             - g2 * c(2, 5) - c(3, 4) / 36 - c(3, 5) / 6 - c(4, 5) / 12 + 49 / 144)
    # coherence <10|rho|01> for the forward-in-time state
    inner = (72 * a2**2 * eta + 72 * g2**2 * lam + 72 * a2 * g2 * (eta + lam) * c(1, 2)
             + 12 * a2 * (eta - 1j) * c(1, 3) + 6 * a2 * (eta + 2j) * c(1, 4)
             + 36j * a2 * eta * s(1, 5) + 12 * g2 * (lam - 1j) * c(2, 3)
             + 6 * g2 * (lam + 2j) * c(2, 4) + 36j * g2 * lam * s(2, 5)
             + 1j * c(3, 4) + 6 * s(3, 5) - 6 * s(4, 5) - 1j)
    rho23 = 1j / 36 * inner
    return RhoABElementsL4(float(t), float(rho11), float(rho22), float(rho33), float(rho11),
                           complex(rho23), complex(np.conj(rho23)))


def _spectra(el: RhoABElementsL4):
    d = (el.rho22 - el.rho33) ** 2 + 4 * abs(el.rho23) ** 2
    sd = np.sqrt(d)
    ssum = el.rho22 + el.rho33
    wX = [0.25 * (1 - sd)] * 2 + [0.25 * (1 + sd)] * 2
    xZ = [el.rho11, el.rho22, el.rho33, el.rho11]
    x = [el.rho11, 0.5 * (ssum - sd), 0.5 * (ssum + sd), el.rho44]
    y = [el.rho11 + el.rho22, el.rho11 + el.rho33]
    return d, wX, xZ, x, y


def eigenvalue_lists(el: RhoABElementsL4) -> dict:
    d, wX, xZ, x, y = _spectra(el)
    return {"d": d, "wX": np.array(wX), "xZ": np.array(xZ), "x": np.array(x), "y": np.array(y)}


def closed_form_sides(el: RhoABElementsL4) -> tuple[float, float]:
    """LHS/RHS from the eigenvalue lists of the reduced, Z- and X-measured states."""
    _, wX, xZ, x, y = _spectra(el)
    SB = entropy_of_probs(y)
    lhs = (entropy_of_probs(wX) - SB) + (entropy_of_probs(xZ) - SB)
    rhs = LOG2_INV_C + entropy_of_probs(x) - SB
    return lhs, rhs


def _xlog2x(v):
    return 0.0 if v <= 0 else v * np.log2(v)


def compact_sides(el: RhoABElementsL4) -> tuple[float, float]:
    """Compact closed-form LHS/RHS expressions.

    Both differ from the true sides by the same offset
    2 - 2 rho11 log2 rho11 - S(B) (see ``compact_offset``), so their
    difference is still the EUR gap.
    """
    d, _, _, _, y = _spectra(el)
    sd = np.sqrt(d)
    SB = entropy_of_probs(y)
    s = el.rho22 + el.rho33
    lhs = (-0.5 * _xlog2x(1 - sd) - 0.5 * _xlog2x(1 + sd)
           - _xlog2x(el.rho22) - _xlog2x(el.rho33) - SB)
    rhs = -1 + s - 0.5 * _xlog2x(s - sd) - 0.5 * _xlog2x(s + sd)
    return lhs, rhs


def compact_offset(el: RhoABElementsL4) -> float:
    _, _, _, _, y = _spectra(el)
    return 2 - 2 * _xlog2x(el.rho11) - entropy_of_probs(y)


def memory_curve_two_excitation_l4(params: ChainParams, grid: TimeGrid) -> EURCurve:
    """Closed-form LHS/RHS for L=4 starting from |1100>, A = site 1, B = site 4."""
    try:
        sol = two_excitation_l4_solution(params)
    except DegenerateDM:
        log.warning("D = 0: closed form singular, using the generic pipeline")
        return memory_curve_generic(params, grid, excitations=2, convention="pauli")
    sides = np.array([closed_form_sides(rho_ab_elements_l4(sol, t)) for t in grid.times])
    return EURCurve(grid, sides[:, 0], sides[:, 1])


def site_labels(L: int, siteA: int = 1, siteB: int | None = None) -> tuple[str, ...]:
    siteB = L if siteB is None else siteB
    if L == 4 and (siteA, siteB) == (1, 4):
        return ("A", "C", "D", "B")
    labs = []
    for j in range(1, L + 1):
        labs.append("A" if j == siteA else "B" if j == siteB else f"C{j}")
    return tuple(labs)


def reduced_pair_from_pure(psi_full, L: int, siteA: int, siteB: int) -> DensityMatrix:
    """Two-site reduced state of a 2^L pure state, returned on (A, B)."""
    T = np.asarray(psi_full, dtype=complex).reshape((2,) * L)
    a, b = siteA - 1, siteB - 1
    rest = [i for i in range(L) if i not in (a, b)]
    M = T.transpose([a, b] + rest).reshape(4, -1)
    m = M @ M.conj().T
    return DensityMatrix((m + m.conj().T) / 2, ("A", "B"), (2, 2))


def memory_curve_generic(params: ChainParams, grid: TimeGrid, excitations: int = 2,
                         siteB: int | None = None, convention: str = "spin",
                         use_full_trace: bool | None = None) -> EURCurve:
    """Dense route: evolve the sector, embed in qubits, trace out the channel, measure.

    The initial state flips the first ``excitations`` sites. With
    ``use_full_trace`` (default for L <= 6) the full density matrix is built
    and reduced with ``partial_trace``.
    """
    L = params.L
    siteB = L if siteB is None else siteB
    H, _ = build_sector_hamiltonian(params, excitations, convention)
    psi0 = np.zeros(H.shape[0])
    psi0[0] = 1.0  # lexicographically first = sites 1..excitations flipped
    states = ed_evolve(H, psi0, grid.times)
    full_trace = L <= 6 if use_full_trace is None else use_full_trace
    labels = site_labels(L, 1, siteB)
    lhs, rhs = [], []
    for vec in states:
        full = sector_to_qubits(vec, L, excitations)
        if full_trace:
            rho = DensityMatrix.from_state(full, labels, (2,) * L)
            rab = partial_trace(rho, ["A", "B"])
        else:
            rab = reduced_pair_from_pure(full, L, 1, siteB)
        l, r = eur_sides(rab)
        lhs.append(l)
        rhs.append(r)
    return EURCurve(grid, np.array(lhs), np.array(rhs))
