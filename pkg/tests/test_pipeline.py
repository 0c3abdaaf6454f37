import numpy as np
import pytest

from chiralchain import pipeline as pl
from chiralchain.nn import TrainConfig

SMALL = pl.SweepSpec(J1=(-1.0, 0.0, 2), J2=(0.0, 1.0, 2), D=(0.0, 0.5, 3), L=6)


def test_grid_values_are_midpoints():
    v = pl.grid_values(0.0, 1.0, 4)
    assert np.allclose(v, [0.125, 0.375, 0.625, 0.875])
    assert pl.SweepSpec().size == 1331


def test_sweep_validation():
    with pytest.raises(ValueError):
        pl.SweepSpec(target="energy")
    with pytest.raises(ValueError):
        pl.SweepSpec(D=(0, 1, 0))


def test_generate_order_and_threads(monkeypatch):
    a = pl.generate_dataset(SMALL, threads=1)
    monkeypatch.setenv(pl.THREADS_ENV, "3")
    b = pl.generate_dataset(SMALL)
    assert len(a) == SMALL.size
    assert [(r.J1, r.J2, r.D) for r in a] == list(SMALL.points())
    for x, y in zip(a, b):
        assert np.array_equal(x.curve, y.curve)
    assert all(len(r.curve) == 25 for r in a)


def test_memory_records_use_four_sites():
    recs = pl.generate_dataset(pl.SweepSpec(J1=(-1, 0, 1), J2=(0, 1, 1), D=(0, 0.5, 2), target="memory-lhs"))
    assert {r.L for r in recs} == {4}
    assert all(np.all(r.curve > 0) for r in recs)


def test_dataset_round_trip(tmp_path):
    recs = pl.generate_dataset(SMALL)
    path = tmp_path / "d.csv"
    pl.write_dataset(recs, path)
    back = pl.read_dataset(path)
    assert len(back) == len(recs)
    for x, y in zip(recs, back):
        assert (x.J1, x.J2, x.D, x.L, x.n1, x.branch, x.target) == (y.J1, y.J2, y.D, y.L, y.n1, y.branch, y.target)
        assert np.array_equal(x.curve, y.curve)


def test_read_rejects_other_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        pl.read_dataset(p)


def test_split_is_seeded_partition():
    data = list(range(1331))
    tr, te = pl.split(data, 0.8, seed=7)
    assert (len(tr), len(te)) == (1064, 267)
    assert sorted(tr + te) == data
    assert pl.split(data, 0.8, seed=7) == (tr, te)
    assert pl.split(data, 0.8, seed=8) != (tr, te)
    with pytest.raises(ValueError):
        pl.split(data, 1.0)
    with pytest.raises(ValueError):
        pl.split([], 0.5)


def test_evaluate_with_exact_predictor():
    recs = pl.generate_dataset(SMALL)
    Y = np.array([r.curve for r in recs])
    rep = pl.evaluate(lambda X: Y, recs)
    assert rep.testMSE == 0 and rep.fraction == 1.0
    assert rep.histogram() == {0: len(recs)}
    shifted = pl.evaluate(lambda X: np.roll(Y, 3, axis=1), recs)
    assert shifted.fraction < 1.0


def test_train_and_probe_run():
    recs = pl.generate_dataset(SMALL)
    tr, te = pl.split(recs, 0.75, 0)
    model, hist = pl.train_on_records(tr, te, TrainConfig(epochs=30))
    assert hist.test_loss[-1] < hist.test_loss[0]
    rows = pl.d_stratified_probe(recs, TrainConfig(epochs=5), ratio=0.5)
    assert [r["D"] for r in rows] == sorted({r.D for r in recs})


def test_emit_curve_csv_and_svg(tmp_path):
    t = pl.CURVE_GRID.times
    curves = {"exact": np.sin(t), "predicted": np.cos(t)}
    pl.emit_curve(t, curves, tmp_path / "c.csv")
    tt, back = pl.read_curve_csv(tmp_path / "c.csv")
    assert np.array_equal(tt, t) and np.array_equal(back["exact"], curves["exact"])
    pl.emit_curve(t, curves, tmp_path / "c.svg", title="demo")
    assert (tmp_path / "c.svg").read_text().lstrip().startswith("<?xml")
    with pytest.raises(ValueError):
        pl.emit_curve(t, {"x": t[:3]}, tmp_path / "bad.csv")
    with pytest.raises(ValueError):
        pl.emit_curve(t, curves, tmp_path / "c.png", fmt="png")
