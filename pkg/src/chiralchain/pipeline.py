"""Parameter sweeps, dataset files, train/test splits, evaluation and curve output."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainParams
from .dynamics import TimeGrid
from .memory import memory_curve_two_excitation_l4
from .nn import (NetworkModel, TrainConfig, fit_input_scaling, fit_output_scaling, forward, init_network, mse,
                 train)
from .otoc import otoc_single_excitation

TARGETS = ("otoc", "memory-lhs", "memory-rhs")
CURVE_GRID = TimeGrid(0.4, 0.4, 25)  # t = 0.4 i, i = 1..25
THREADS_ENV = "CHIRALCHAIN_THREADS"


class SolverError(RuntimeError):
    pass


def grid_values(lo: float, hi: float, count: int) -> np.ndarray:
    """Cell midpoints lo + (i + 1/2)(hi - lo)/count, strictly inside (lo, hi)."""
    return lo + (np.arange(count) + 0.5) * (hi - lo) / count


@dataclass(frozen=True)
class SweepSpec:
    J1: tuple = (-1.0, 0.0, 11)
    J2: tuple = (0.0, 1.0, 11)
    D: tuple = (0.0, 0.5, 11)
    L: int = 10
    n1: int = 1
    branch: str = "plus"
    target: str = "otoc"

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        for ax in (self.J1, self.J2, self.D):
            if int(ax[2]) < 1:
                raise ValueError("counts must be >= 1")

    @property
    def size(self) -> int:
        return int(self.J1[2] * self.J2[2] * self.D[2])

    def points(self):
        for a in grid_values(*self.J1):
            for b in grid_values(*self.J2):
                for c in grid_values(*self.D):
                    yield float(a), float(b), float(c)


@dataclass(frozen=True)
class DatasetRecord:
    L: int
    J1: float
    J2: float
    D: float
    n1: int
    branch: str
    target: str
    curve: np.ndarray = field(repr=False)

    @property
    def features(self) -> np.ndarray:
        return np.array([self.L, self.J1, self.J2, self.D, self.n1], dtype=float)


def exact_curve(target: str, L: int, J1: float, J2: float, D: float, n1: int, branch: str,
                grid: TimeGrid = CURVE_GRID) -> np.ndarray:
    if target == "otoc":
        return otoc_single_excitation(ChainParams(L, J1, J2, D, branch=branch), n1, grid).values
    c = memory_curve_two_excitation_l4(ChainParams(4, J1, J2, D, branch=branch), grid)
    return c.lhs if target == "memory-lhs" else c.rhs


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def generate_dataset(spec: SweepSpec = SweepSpec(), threads: int | None = None) -> list[DatasetRecord]:
    """Exact curves on the Cartesian grid, lexicographic in (J1, J2, D) indices."""
    L = spec.L if spec.target == "otoc" else 4
    n1 = spec.n1 if spec.target == "otoc" else 0
    pts = list(spec.points())

    def one(pt):
        J1, J2, D = pt
        try:
            v = exact_curve(spec.target, L, J1, J2, D, n1, spec.branch)
        except Exception as exc:
            raise SolverError(f"solver failed at J1={J1}, J2={J2}, D={D}: {exc}") from exc
        if not np.all(np.isfinite(v)):
            raise SolverError(f"non-finite curve at J1={J1}, J2={J2}, D={D}")
        return DatasetRecord(L, J1, J2, D, n1, spec.branch, spec.target, v)

    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, pts))
    return [one(p) for p in pts]


HEADER = ["L", "J1", "J2", "D", "n1", "branch", "target"] + [f"v{i}" for i in range(1, 26)]


def write_dataset(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n = len(records[0].curve) if records else 25
        w.writerow(HEADER[:7] + [f"v{i}" for i in range(1, n + 1)])
        for r in records:
            w.writerow([r.L, repr(r.J1), repr(r.J2), repr(r.D), r.n1, r.branch, r.target]
                       + [repr(float(v)) for v in r.curve])


def read_dataset(path) -> list[DatasetRecord]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd, None)
        if head is None or head[:7] != HEADER[:7]:
            raise ValueError(f"{path}: not a dataset file")
        for row in rd:
            out.append(DatasetRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]),
                                     int(row[4]), row[5], row[6], np.array([float(v) for v in row[7:]])))
    return out


def split(dataset, ratio: float = 0.8, seed: int = 0):
    """Seeded shuffle, then the first floor(ratio n) records train."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    n = len(dataset)
    if n == 0:
        raise ValueError("empty dataset")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(np.floor(ratio * n))
    return [dataset[i] for i in order[:cut]], [dataset[i] for i in order[cut:]]


def to_arrays(records):
    X = np.array([r.features for r in records])
    Y = np.array([r.curve for r in records])
    return X, Y


@dataclass(frozen=True)
class EvalReport:
    testMSE: float
    offsets: np.ndarray
    fraction: float

    def histogram(self) -> dict:
        vals, counts = np.unique(self.offsets, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def evaluate(model, test) -> EvalReport:
    """Test MSE and argmax peak offsets (in grid steps).

    ``model`` is a NetworkModel or any callable mapping a feature matrix to curves.
    """
    X, Y = to_arrays(test)
    pred = forward(model, X) if isinstance(model, NetworkModel) else np.asarray(model(X))
    if pred.shape != Y.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {Y.shape}")
    off = np.argmax(pred, axis=1) - np.argmax(Y, axis=1)
    return EvalReport(mse(pred, Y), off, float(np.mean(np.abs(off) <= 1)))


def train_on_records(train_set, test_set=None, config: TrainConfig = TrainConfig(), seed: int | None = None):
    """Fresh network with input standardization fitted on the training features."""
    X, Y = to_arrays(train_set)
    model = init_network((X.shape[1], 64, 32, Y.shape[1]), 0.1, config.seed if seed is None else seed)
    fit_input_scaling(model, X)
    fit_output_scaling(model, Y)
    Xt, Yt = to_arrays(test_set) if test_set else (None, None)
    return train(model, X, Y, config, Xt, Yt)


def d_stratified_probe(records, config: TrainConfig = TrainConfig(epochs=200), ratio: float = 0.8,
                       seed: int = 0) -> list[dict]:
    """Train one model per D value and report its held-out MSE.

    ``baseline_mse`` is the test MSE of predicting the mean training curve.
    """
    rows = []
    for D in sorted({r.D for r in records}):
        sub = [r for r in records if r.D == D]
        tr, te = split(sub, ratio, seed)
        model, hist = train_on_records(tr, te, config)
        mean_curve = to_arrays(tr)[1].mean(axis=0)
        rows.append({"D": D, "n_train": len(tr), "n_test": len(te),
                     "test_mse": evaluate(model, te).testMSE, "initial_test_mse": hist.test_loss[0],
                     "baseline_mse": mse(np.tile(mean_curve, (len(te), 1)), to_arrays(te)[1])})
    return rows


def write_table(rows: list[dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def emit_curve(times, curves: dict, path, fmt: str | None = None, title: str = "", ylabel: str = "value"):
    """Write named series on a shared time axis as CSV or SVG."""
    if not curves:
        raise ValueError("no curves")
    times = np.asarray(times, dtype=float)
    for name, v in curves.items():
        if len(v) != len(times):
            raise ValueError(f"curve {name} has {len(v)} points, grid has {len(times)}")
    fmt = fmt or os.path.splitext(str(path))[1].lstrip(".").lower() or "csv"
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + list(curves))
            for i, t in enumerate(times):
                w.writerow([repr(float(t))] + [repr(float(curves[k][i])) for k in curves])
    elif fmt == "svg":
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        for name, v in curves.items():
            ax.plot(times, v, label=name)
        ax.set_xlabel("t  [|J1|^-1]")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_curve_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd)
        rows = [[float(x) for x in r] for r in rd]
    arr = np.array(rows)
    return arr[:, 0], {name: arr[:, i + 1] for i, name in enumerate(head[1:])}
