"""Command-line interface. Exit codes: 0 ok, 1 usage or input error, 2 numerical failure."""
from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import __version__
from .chain import (BetheUnavailable, ChainParams, NonConvergence, group_velocity, magnon_spectrum)
from .dynamics import DegenerateDM, TimeGrid, two_excitation_l4_solution
from .entanglement import (chirality_expectation, ckw_report, phi_state, psi2_chirality_closed_form, psi2_state)
from .memory import memory_curve_generic, memory_curve_single_excitation, memory_curve_two_excitation_l4
from .nn import ModelFormatError, TrainConfig, forward, load_model, save_model
from .otoc import otoc_single_excitation, otoc_two_excitation
from . import pipeline as pl

log = logging.getLogger("chiralchain")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out(path):
    return open(path, "w", newline="") if path and path != "-" else None


def _write_rows(path, header, rows):
    fh = _out(path)
    w = csv.writer(fh or sys.stdout)
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    if fh:
        fh.close()


def _chain_args(p, L=10, with_L=True):
    if with_L:
        p.add_argument("--L", type=int, default=L)
    p.add_argument("--J1", type=float, default=-1.0)
    p.add_argument("--J2", type=float, default=1.0)
    p.add_argument("--D", type=float, default=0.5)
    p.add_argument("--Bz", type=float, default=0.0)
    p.add_argument("--branch", choices=["plus", "minus"], default="plus")


def _params(a, L=None):
    return ChainParams(L if L is not None else a.L, a.J1, a.J2, a.D, a.Bz, a.branch)


def _grid(a):
    if a.dt <= 0 or a.tmax < 0:
        raise UsageError("need dt > 0 and tmax >= 0")
    return TimeGrid.span(a.tmax, a.dt)


def cmd_spectrum(a):
    p = _params(a)
    rows = [(m.n, m.k, m.omega, float(group_velocity(p, m.k))) for m in magnon_spectrum(p)]
    _write_rows(a.csv, ["n", "k", "omega", "v_g"], rows)


def cmd_memory(a):
    p = _params(a)
    g = _grid(a)
    if a.excitations == 1:
        c = memory_curve_single_excitation(p, g, coherent=a.coherent)
    elif p.L == 4:
        c = memory_curve_two_excitation_l4(p, g)
    else:
        c = memory_curve_generic(p, g, excitations=2)
    _write_rows(a.csv, ["t", "lhs", "rhs", "gap"], zip(g.times, c.lhs, c.rhs, c.gap))


def cmd_otoc(a):
    p = _params(a)
    g = _grid(a)
    if a.excitations == 1:
        if a.method not in (None, "spectral"):
            raise UsageError("one excitation uses the spectral method")
        c = otoc_single_excitation(p, a.n1 if a.n1 is not None else 1, g)
    else:
        method = a.method or "ed"
        if method == "spectral":
            method = "ed"
        c = otoc_two_excitation(p, g, method, a.n1 if a.n1 is not None else 0)
    _write_rows(a.csv, ["t", "C"], zip(g.times, c.values))


def cmd_entangle(a):
    if a.state == "phi":
        psi, extra = phi_state(), []
        spin = 0.5
    else:
        sol = two_excitation_l4_solution(_params(a, L=4))
        psi = psi2_state(sol, hamiltonian=True)
        spin = 1.0
        extra = [("lambda", sol.lam), ("gamma", sol.gamma), ("8*lambda*gamma^2", psi2_chirality_closed_form(sol))]
    rows = []
    for i in range(1, 5):
        r = ckw_report(psi, i)
        rows.append((f"tau_{i}|rest", r.oneTangle))
        for j, v in r.twoTangles.items():
            rows.append((f"tau_{i}{j}", v))
        rows.append((f"slack_{i}", r.slack))
        rows.append((f"chirality_{i}{i % 4 + 1}", chirality_expectation(psi, i, spin)))
    _write_rows(a.csv, ["quantity", "value"], rows + extra)


def _spec_from(a):
    c = a.counts
    return pl.SweepSpec(J1=(-1.0, 0.0, c), J2=(0.0, 1.0, c), D=(0.0, 0.5, c), L=a.L, n1=a.n1,
                        branch=a.branch, target=a.target)


def cmd_dataset_generate(a):
    recs = pl.generate_dataset(_spec_from(a), threads=a.threads)
    pl.write_dataset(recs, a.out)
    print(f"wrote {len(recs)} records to {a.out}", file=sys.stderr)


def cmd_dataset_split(a):
    recs = pl.read_dataset(a.dataset)
    tr, te = pl.split(recs, a.ratio, a.seed)
    pl.write_dataset(tr, a.train_out)
    pl.write_dataset(te, a.test_out)
    print(f"train {len(tr)} / test {len(te)}", file=sys.stderr)


def _load_records(path, target=None):
    recs = pl.read_dataset(path)
    if target:
        recs = [r for r in recs if r.target == target]
    if not recs:
        raise UsageError(f"no records with target {target!r} in {path}")
    return recs


def cmd_train(a):
    recs = _load_records(a.dataset, a.target)
    if a.test_dataset:
        tr, te = recs, _load_records(a.test_dataset, a.target)
    else:
        tr, te = pl.split(recs, a.ratio, a.seed)
    cfg = TrainConfig(learning_rate=a.lr, batch_size=a.batch_size, epochs=a.epochs, seed=a.seed)
    model, hist = pl.train_on_records(tr, te, cfg)
    rep = pl.evaluate(model, te)
    save_model(model, a.out, meta={"target": a.target, "seed": a.seed, "epochs": a.epochs,
                                   "L": tr[0].L, "n1": tr[0].n1, "branch": tr[0].branch})
    if a.history:
        _write_rows(a.history, ["epoch", "train_mse", "test_mse"],
                    zip(range(len(hist.train_loss)), hist.train_loss, hist.test_loss))
    print(f"initial_test_mse={hist.test_loss[0]!r} final_test_mse={rep.testMSE!r} "
          f"peak_sync_fraction={rep.fraction!r}")


def cmd_predict(a):
    model, meta = load_model(a.model, expect_input_dim=5, return_meta=True)
    L = a.L if a.L is not None else meta.get("L", 10)
    n1 = a.n1 if a.n1 is not None else meta.get("n1", 1)
    x = np.array([L, a.J1, a.J2, a.D, n1], dtype=float)
    y = forward(model, x)
    g = pl.CURVE_GRID
    if len(y) != g.count:
        raise UsageError(f"model predicts {len(y)} points, expected {g.count}")
    curves = {"predicted": y}
    if a.exact:
        curves["exact"] = pl.exact_curve(meta.get("target", "otoc"), L, a.J1, a.J2, a.D, n1,
                                         meta.get("branch", "plus"))
    if a.csv:
        pl.emit_curve(g.times, curves, a.csv, "csv")
    else:
        _write_rows(None, ["t"] + list(curves), zip(g.times, *curves.values()))


def cmd_eval(a):
    model = load_model(a.model, expect_input_dim=5)
    recs = _load_records(a.dataset, a.target)
    rep = pl.evaluate(model, recs)
    print(f"test_mse={rep.testMSE!r}")
    print(f"peak_sync_fraction={rep.fraction!r}")
    print("offset_histogram=" + " ".join(f"{k}:{v}" for k, v in rep.histogram().items()))


def cmd_plot(a):
    t, curves = pl.read_curve_csv(a.input)
    pl.emit_curve(t, curves, a.out, "svg", title=a.title or "", ylabel=a.ylabel)


def cmd_probe(a):
    recs = _load_records(a.dataset, "memory-lhs")
    rows = pl.d_stratified_probe(recs, TrainConfig(epochs=a.epochs, seed=a.seed), seed=a.seed)
    if a.out:
        pl.write_table(rows, a.out)
    else:
        _write_rows(None, list(rows[0]), [r.values() for r in rows])


def build_parser():
    ap = _Parser(prog="chiralchain", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="single-magnon modes")
    _chain_args(p)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("memory", help="EUR LHS/RHS curve")
    _chain_args(p, L=4)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--excitations", type=int, choices=[1, 2], default=2)
    p.add_argument("--coherent", action="store_true", help="keep the A-B coherence (one excitation)")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_memory)

    p = sub.add_parser("otoc", help="OTOC curve")
    _chain_args(p)
    p.add_argument("--excitations", type=int, choices=[1, 2], default=1)
    p.add_argument("--n1", type=int, default=None,
                   help="initial eigenstate (mode index for one excitation, energy rank for two)")
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--method", choices=["ed", "bethe", "spectral"], default=None)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_otoc)

    p = sub.add_parser("entangle", help="tangles and chirality on four qubits")
    p.add_argument("--state", choices=["phi", "psi2"], default="phi")
    _chain_args(p, with_L=False)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_entangle)

    ds = sub.add_parser("dataset", help="dataset generation and splitting")
    dsub = ds.add_subparsers(dest="dcmd", required=True, parser_class=_Parser)
    p = dsub.add_parser("generate")
    p.add_argument("--target", choices=list(pl.TARGETS), default="otoc")
    p.add_argument("--branch", choices=["plus", "minus"], default="plus")
    p.add_argument("--L", type=int, default=10)
    p.add_argument("--n1", type=int, default=1)
    p.add_argument("--counts", type=int, default=11)
    p.add_argument("--threads", type=int, default=None, help=f"default from ${pl.THREADS_ENV}")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dataset_generate)
    p = dsub.add_parser("split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(fn=cmd_dataset_split)

    p = sub.add_parser("train", help="train a curve predictor")
    p.add_argument("--dataset", required=True)
    p.add_argument("--test-dataset")
    p.add_argument("--target", choices=list(pl.TARGETS), default="otoc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--history")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="predict one curve")
    p.add_argument("--model", required=True)
    p.add_argument("--J1", type=float, required=True)
    p.add_argument("--J2", type=float, required=True)
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--exact", action="store_true", help="add the exact curve as a second column")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("eval", help="test MSE and peak synchronization")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--target", choices=list(pl.TARGETS), default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("plot", help="render a curve CSV as SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    p.add_argument("--ylabel", default="value")
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("probe", help="test MSE of memory-LHS models per D value")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_probe)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.fn(a)
    except (NonConvergence, DegenerateDM, pl.SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, BetheUnavailable, ModelFormatError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
