"""Chain configuration, single-magnon spectrum, sector Hamiltonians and the
two-magnon Bethe ansatz for the chiral J1-J2 ring with DM coupling."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

BRANCHES = ("plus", "minus")


class NonConvergence(RuntimeError):
    """Fixed-point iteration for the Bethe roots did not converge."""


class BetheUnavailable(ValueError):
    """The Bethe path only exists for J2 = 0."""


@dataclass(frozen=True)
class ChainParams:
    L: int
    J1: float = -1.0
    J2: float = 1.0
    D: float = 0.5
    Bz: float = 0.0
    branch: str = "plus"

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L}")
        for name in ("J1", "J2", "D", "Bz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be 'plus' or 'minus', got {self.branch!r}")

    @property
    def sign(self) -> int:
        return 1 if self.branch == "plus" else -1

    def replace(self, **kw) -> "ChainParams":
        d = dict(L=self.L, J1=self.J1, J2=self.J2, D=self.D, Bz=self.Bz, branch=self.branch)
        d.update(kw)
        return ChainParams(**d)


@dataclass(frozen=True)
class TransformedParams:
    J1p: float
    J2p: float
    Dp: float
    Theta: float
    Delta: float

    @classmethod
    def from_params(cls, p: ChainParams) -> "TransformedParams":
        r2 = p.J1**2 + p.D**2
        if r2 == 0:
            return cls(0.0, 0.0, 0.0, 0.0, math.nan)
        J1p = math.sqrt(r2)
        theta = -math.atan(p.D / p.J1) if p.J1 != 0 else -math.copysign(math.pi / 2, p.D)
        delta = J1p / p.J1 if p.J1 != 0 else math.inf
        return cls(J1p, p.J2 * (p.J1**2 - p.D**2) / r2, p.D * p.J1 * p.J2 / r2, theta, delta)


@dataclass(frozen=True)
class MagnonMode:
    n: int
    k: float
    omega: float
    amplitudes: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class BetheRoots:
    N: int
    I1: int
    I2: int
    k1: float
    k2: float
    theta: float
    residual: float
    delta: float
    twist: float = 0.0
    iterations: int = 0


def dispersion(params: ChainParams, k):
    """J1 cos k + J2 cos 2k +/- D sin k."""
    k = np.asarray(k, dtype=float)
    return params.J1 * np.cos(k) + params.J2 * np.cos(2 * k) + params.sign * params.D * np.sin(k)


def group_velocity(params: ChainParams, k):
    k = np.asarray(k, dtype=float)
    return -params.J1 * np.sin(k) - 2 * params.J2 * np.sin(2 * k) + params.sign * params.D * np.cos(k)


def group_velocity_mismatch(params: ChainParams, k):
    plus = group_velocity(params.replace(branch="plus"), k)
    minus = group_velocity(params.replace(branch="minus"), k)
    return plus - minus


def plane_wave(L: int, n: int) -> np.ndarray:
    j = np.arange(1, L + 1)
    return np.exp(-2j * np.pi * n * j / L) / np.sqrt(L)


def magnon_spectrum(params: ChainParams) -> list[MagnonMode]:
    """Modes n = 0..L-1 with k = 2 pi n / L.

    The longitudinal field enters only as the uniform cost Bz of one flip.
    """
    L = params.L
    modes = []
    for n in range(L):
        k = 2 * np.pi * n / L
        omega = float(dispersion(params, k)) + params.Bz
        modes.append(MagnonMode(n, k, omega, plane_wave(L, n)))
    return modes


def sector_basis(L: int, excitations: int) -> list[tuple[int, ...]]:
    """Flipped-site tuples (0-based), lexicographic."""
    return list(itertools.combinations(range(L), excitations))


def _bonds(params: ChainParams):
    L = params.L
    out = [(i, (i + 1) % L, params.J1, params.D) for i in range(L)]
    if params.J2 != 0.0:
        out += [(i, (i + 2) % L, params.J2, 0.0) for i in range(L)]
    return out


def build_sector_hamiltonian(params: ChainParams, excitations: int, convention: str = "spin"):
    """Dense matrix of the Hamiltonian in a fixed-magnetization sector.

    Basis states are sets of flipped (down) sites. ``convention="spin"`` uses
    S = sigma/2, ``"pauli"`` uses S = sigma, which scales every bilinear by 4.
    The DM coupling sign is tied to the branch so that plane waves
    e^{-i k j} carry J1 cos k + J2 cos 2k +/- D sin k.

    Returns
    -------
    H : (dim, dim) complex ndarray
    basis : list of tuples of 0-based flipped sites
    """
    if excitations not in (1, 2):
        raise ValueError("excitations must be 1 or 2")
    L = params.L
    if L < 2 * excitations:
        raise ValueError(f"L={L} too small for {excitations} excitations")
    if convention == "spin":
        s = 0.5
    elif convention == "pauli":
        s = 1.0
    else:
        raise ValueError(f"unknown convention {convention!r}")

    basis = sector_basis(L, excitations)
    index = {b: i for i, b in enumerate(basis)}
    dim = len(basis)
    H = np.zeros((dim, dim), dtype=complex)
    bonds = _bonds(params)
    # flip-flop amplitude for hopping one magnon from site i to site j
    for a, occ in enumerate(basis):
        occ_set = set(occ)
        H[a, a] += -params.Bz * s * (L - 2 * excitations)
        for i, j, J, DM in bonds:
            zi = -s if i in occ_set else s
            zj = -s if j in occ_set else s
            H[a, a] += J * zi * zj
            if (i in occ_set) == (j in occ_set):
                continue
            src, dst = (i, j) if i in occ_set else (j, i)
            new = tuple(sorted((occ_set - {src}) | {dst}))
            c = index[new]
            amp = 2 * s * s * J
            if DM:
                # hop i -> i+1 picks up -i sign D, the reverse hop the conjugate
                amp += (-1j if dst == j else 1j) * params.sign * DM * 2 * s * s
            H[c, a] += amp
    return H, basis


# ---------------------------------------------------------------------------
# Bethe ansatz, J2 = 0

def xxz_mapping(params: ChainParams, convention: str = "spin") -> tuple[float, float]:
    """Effective XXZ anisotropy and twist of the J2 = 0 chain.

    The DM term is gauged into a uniform twist chi = arg(J1 - i sign D); the
    hopping magnitude becomes J1' / 2 so the anisotropy felt by the magnons
    is J1 / J1'. This is the reciprocal of ``TransformedParams.Delta``.
    """
    h = params.J1 - 1j * params.sign * params.D
    if abs(h) == 0:
        raise ValueError("J1 and D both zero: no hopping")
    return params.J1 / abs(h), float(np.angle(h))


def bethe_theta(k1, k2, delta: float, twist: float = 0.0):
    """Two-body phase 2 arctan[Delta sin(q-/2) / (cos(q+/2) - Delta cos(q-/2))]."""
    q1, q2 = k1 - twist, k2 - twist
    return 2 * np.arctan2(delta * np.sin((q1 - q2) / 2),
                          np.cos((q1 + q2) / 2) - delta * np.cos((q1 - q2) / 2))


def _quantized(N, I1, I2, theta):
    # hard-core exchange contributes a factor -1, hence the half-odd shift
    return ((2 * np.pi * (I1 + 0.5) - theta) / N,
            (2 * np.pi * (I2 + 0.5) + theta) / N)


def solve_bethe_roots(N: int, I1: int, I2: int, Delta: float, twist: float = 0.0,
                      damping: float = 0.5, tol: float = 1e-12, max_iter: int = 10_000) -> BetheRoots:
    """Real two-magnon roots by damped fixed-point iteration.

    Quantization: k1 = (2 pi (I1 + 1/2) - theta)/N, k2 = (2 pi (I2 + 1/2) + theta)/N,
    so the total momentum is 2 pi (I1 + I2 + 1)/N.
    """
    if not (1 <= I1 <= N - 1 and 1 <= I2 <= N - 1):
        raise ValueError(f"quantum numbers must lie in [1, {N - 1}]")
    if I1 == I2:
        raise ValueError("I1 and I2 must differ")
    k = np.array(_quantized(N, I1, I2, 0.0))
    for it in range(1, max_iter + 1):
        theta = bethe_theta(k[0], k[1], Delta, twist)
        new = np.array(_quantized(N, I1, I2, theta))
        step = np.max(np.abs(new - k))
        k = damping * k + (1 - damping) * new
        if step < tol:
            break
    else:
        raise NonConvergence(f"Bethe roots (N={N}, I1={I1}, I2={I2}) did not converge")
    theta = float(bethe_theta(k[0], k[1], Delta, twist))
    target = _quantized(N, I1, I2, theta)
    residual = float(max(abs(k[0] - target[0]), abs(k[1] - target[1])) * N)
    return BetheRoots(N, I1, I2, float(k[0]), float(k[1]), theta, residual, Delta, twist, it)


def bethe_state(roots: BetheRoots, basis=None) -> np.ndarray:
    """Normalized pair amplitudes over the lexicographic pair basis.

    f(j, j') = e^{-i theta/2} e^{i(k1 j + k2 j')} - e^{i theta/2} e^{i(k2 j + k1 j')}
    for 1-based sites j < j'.
    """
    if not roots.residual < 1e-10:
        raise ValueError(f"roots not converged (residual {roots.residual:.2e})")
    if basis is None:
        basis = sector_basis(roots.N, 2)
    pairs = np.array(basis) + 1
    a, b = pairs[:, 0], pairs[:, 1]
    k1, k2, th = roots.k1, roots.k2, roots.theta
    f = (np.exp(-0.5j * th) * np.exp(1j * (k1 * a + k2 * b))
         - np.exp(0.5j * th) * np.exp(1j * (k2 * a + k1 * b)))
    norm = np.linalg.norm(f)
    if norm < 1e-8:
        raise ValueError("Bethe wavefunction vanishes for these roots")
    return f / norm


def bethe_energy(params: ChainParams, roots: BetheRoots, convention: str = "spin") -> float:
    """Energy from the magnon dispersion in the twisted frame."""
    s = 0.5 if convention == "spin" else 1.0
    L = params.L
    J1p = math.hypot(params.J1, params.D)
    e0 = L * params.J1 * s * s - params.Bz * s * (L - 4)
    per = 4 * s * s * (J1p * np.cos(np.array([roots.k1, roots.k2]) - roots.twist) - params.J1)
    return float(e0 + per.sum())


@dataclass(frozen=True)
class BetheBasis:
    energies: np.ndarray
    vectors: np.ndarray  # columns
    roots: list
    bethe_count: int  # columns coming from real roots, the rest fill bound states
    failed: list


def _translation(basis, N):
    index = {b: i for i, b in enumerate(basis)}
    T = np.zeros((len(basis), len(basis)))
    for a, occ in enumerate(basis):
        T[index[tuple(sorted((x + 1) % N for x in occ))], a] = 1.0
    return T


def bethe_basis(params: ChainParams, convention: str = "spin") -> BetheBasis:
    """Complete two-magnon eigenbasis for J2 = 0 built from real Bethe roots.

    Every pair 1 <= I1 < I2 <= N-1 is solved. States that fail to converge,
    vanish or duplicate an earlier state are dropped. The remaining gap in each
    momentum sector holds the bound (complex-root) states, which are obtained
    by diagonalizing H on the orthogonal complement of the Bethe states.
    """
    if params.J2 != 0:
        raise BetheUnavailable("Bethe ansatz path requires J2 = 0")
    N = params.L
    if N < 4:
        raise ValueError("need L >= 4")
    delta, twist = xxz_mapping(params)
    basis = sector_basis(N, 2)
    H, _ = build_sector_hamiltonian(params, 2, convention)

    accepted: dict[int, list] = {}
    roots_kept, failed = [], []
    for I1 in range(1, N):
        for I2 in range(I1 + 1, N):
            try:
                r = solve_bethe_roots(N, I1, I2, delta, twist)
                v = bethe_state(r, basis)
            except (NonConvergence, ValueError):
                failed.append((I1, I2))
                continue
            K = (I1 + I2 + 1) % N
            group = accepted.setdefault(K, [])
            if any(abs(np.vdot(u, v)) > 1e-8 for _, u in group):
                failed.append((I1, I2))
                continue
            e = bethe_energy(params, r, convention)
            if np.linalg.norm(H @ v - e * v) > 1e-8:
                failed.append((I1, I2))
                continue
            group.append((e, v))
            roots_kept.append(r)

    T = _translation(basis, N)
    energies, vectors = [], []
    bethe_count = 0
    for K in range(N):
        # projector on total momentum 2 pi K / N; translated Bethe state picks up e^{-iK}
        ph = np.exp(2j * np.pi * K / N)
        P = np.zeros_like(H)
        Tm = np.eye(len(basis))
        for m in range(N):
            P += ph**m * Tm
            Tm = T @ Tm
        P /= N
        group = accepted.get(K, [])
        for e, v in group:
            energies.append(e)
            vectors.append(v)
        bethe_count += len(group)
        if group:
            B = np.array([v for _, v in group]).T
            P = P - B @ B.conj().T
        w, U = np.linalg.eigh((P + P.conj().T) / 2)
        Q = U[:, w > 0.5]
        if Q.shape[1]:
            ew, ev = np.linalg.eigh(Q.conj().T @ H @ Q)
            for e, c in zip(ew, ev.T):
                energies.append(float(e))
                vectors.append(Q @ c)
    V = np.array(vectors).T
    if V.shape[1] != len(basis):
        raise NonConvergence(f"Bethe basis incomplete: {V.shape[1]} of {len(basis)} states")
    return BetheBasis(np.array(energies), V, roots_kept, bethe_count, failed)
