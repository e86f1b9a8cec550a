import numpy as np
import pytest

from beamtrain.arrays import dft_codebook
from beamtrain.channel import default_bs_geometry, default_ue_geometry
from beamtrain.dataset import (TRRow, build_rate_dataset, load_dataset, save_dataset,
                               split_dataset, to_atr, to_throughput_ratios)
from beamtrain.linkeval import RateRow
from beamtrain.scene import SceneConfig, generate_snapshot


def _small_corpus(seed_count=3, seed0=0):
    cfg = SceneConfig()
    snaps = [generate_snapshot(cfg, s, snapshot_id=s) for s in range(seed0, seed0 + seed_count)]
    bs_g, ue_g = default_bs_geometry(cfg), default_ue_geometry(cfg)
    rows = build_rate_dataset(snaps, dft_codebook(ue_g, "ue"), dft_codebook(bs_g, "bs"),
                              bs_g, ue_g, cfg)
    return cfg, rows


def test_build_rate_dataset_rows_and_order():
    _, rows = _small_corpus()
    assert rows
    keys = [(r.snapshot_id, r.ue_index) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r.rates.shape == (1024,)
        assert np.max(r.rates) > 0


def test_build_rate_dataset_deterministic():
    _, a = _small_corpus()
    _, b = _small_corpus()
    assert len(a) == len(b)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.rates, rb.rates)


def test_to_throughput_ratios_basic():
    row = RateRow(location=np.zeros(2), rates=np.array([2.0, 4.0, 8.0]), snapshot_id=0)
    tr = to_throughput_ratios([row])[0]
    assert np.allclose(tr.ratios, [0.25, 0.5, 1.0])
    assert tr.max_rate == 8.0
    assert tr.ratios.max() == 1.0  # exact


def test_to_throughput_ratios_constant_row():
    row = RateRow(location=np.zeros(2), rates=np.full(6, 3.3), snapshot_id=0)
    assert np.all(to_throughput_ratios([row])[0].ratios == 1.0)


def test_to_throughput_ratios_rejects_zero_row():
    row = RateRow(location=np.zeros(2), rates=np.zeros(4), snapshot_id=0)
    with pytest.raises(ValueError):
        to_throughput_ratios([row])


def test_to_throughput_ratios_matches_oracle():
    rng = np.random.default_rng(0)
    rates = rng.uniform(0.01, 4.0, size=64)
    tr = to_throughput_ratios([RateRow(np.zeros(2), rates, 0)])[0]
    assert np.allclose(tr.ratios, rates / rates.max(), atol=0)


def test_atr_uniform_row():
    tr = TRRow(location=np.zeros(2), ratios=np.full(8, 0.4), max_rate=1.0, snapshot_id=0)
    atr = to_atr([tr], 2, 4)[0]
    assert np.allclose(atr.atr_w, 0.4) and np.allclose(atr.atr_f, 0.4)


def test_atr_worked_example():
    # |W|=2, |F|=2, order (1,1),(1,2),(2,1),(2,2)
    tr = TRRow(np.zeros(2), np.array([1.0, 0.5, 0.25, 0.75]), 1.0, 0)
    atr = to_atr([tr], 2, 2)[0]
    assert np.allclose(atr.atr_w, [0.75, 0.5])
    assert np.allclose(atr.atr_f, [0.625, 0.625])


def test_atr_means_match_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        ratios = rng.uniform(0, 1, size=16 * 64)
        ratios[rng.integers(ratios.size)] = 1.0
        tr = TRRow(np.zeros(2), ratios, 1.0, 0)
        atr = to_atr([tr], 16, 64)[0]
        grid = ratios.reshape(16, 64)
        for i in range(16):
            assert atr.atr_w[i] == pytest.approx(np.mean([grid[i, j] for j in range(64)]), abs=1e-15)
        for j in range(64):
            assert atr.atr_f[j] == pytest.approx(np.mean([grid[i, j] for i in range(16)]), abs=1e-15)
        assert abs(atr.atr_w.mean() - atr.atr_f.mean()) < 1e-12
        assert abs(atr.atr_w.mean() - ratios.mean()) < 1e-12


def test_split_fractions_and_folds():
    split = split_dataset(100, test_fraction=0.2, folds=10, seed=3)
    assert len(split.test_rows) == 20 and len(split.train_rows) == 80
    assert not set(split.test_rows) & set(split.train_rows)
    assert sorted(np.concatenate([split.test_rows, split.train_rows])) == list(range(100))
    sizes = np.bincount(split.fold_assignments, minlength=10)
    assert sizes.max() - sizes.min() <= 1


def test_split_determinism_and_errors():
    a = split_dataset(57, seed=9)
    b = split_dataset(57, seed=9)
    assert np.array_equal(a.train_rows, b.train_rows)
    assert np.array_equal(a.fold_assignments, b.fold_assignments)
    with pytest.raises(ValueError):
        split_dataset(8, folds=10)
    with pytest.raises(ValueError):
        split_dataset(100, folds=1)


def _toy_rows(n=5, width=12, seed=0):
    rng = np.random.default_rng(seed)
    return [RateRow(location=rng.uniform(0, 100, 2), rates=rng.uniform(0.01, 3, width),
                    snapshot_id=k, ue_index=k) for k in range(n)]


def test_binary_roundtrip_bit_identical(tmp_path):
    rows = _toy_rows()
    path = str(tmp_path / "d.npz")
    save_dataset(rows, path, fmt="binary", num_combiners=3, num_beamformers=4)
    loaded = load_dataset(path, fmt="binary")
    for a, b in zip(rows, loaded):
        assert np.array_equal(a.rates, b.rates)
        assert np.array_equal(a.location, b.location)
        assert a.snapshot_id == b.snapshot_id


def test_csv_roundtrip_precision(tmp_path):
    rows = to_throughput_ratios(_toy_rows())
    path = str(tmp_path / "d.csv")
    save_dataset(rows, path, fmt="csv", num_combiners=3, num_beamformers=4)
    loaded = load_dataset(path, fmt="csv")
    for a, b in zip(rows, loaded):
        assert np.abs(a.ratios - b.rates).max() < 1e-8
    header = open(path).readline().strip().split(",")
    assert header[:3] == ["x", "y", "snapshot_id"]
    assert header[3] == "r_1_1" and header[-1] == "r_3_4"


def test_truncated_files_raise(tmp_path):
    rows = _toy_rows()
    binpath = tmp_path / "d.npz"
    save_dataset(rows, str(binpath), fmt="binary")
    binpath.write_bytes(binpath.read_bytes()[:40])
    with pytest.raises(ValueError):
        load_dataset(str(binpath), fmt="binary")

    csvpath = tmp_path / "d.csv"
    save_dataset(rows, str(csvpath), fmt="csv", num_combiners=3, num_beamformers=4)
    text = csvpath.read_text()
    csvpath.write_text(text[:len(text) // 2].rsplit(",", 1)[0])
    with pytest.raises(ValueError):
        load_dataset(str(csvpath), fmt="csv")


def test_tr_rows_have_unique_argmax_under_tie_rule():
    _, rows = _small_corpus(seed_count=2)
    for tr in to_throughput_ratios(rows):
        best = int(np.argmax(tr.ratios))
        assert tr.ratios[best] == 1.0
        # lowest-index rule: no earlier entry reaches the max
        assert not np.any(tr.ratios[:best] >= 1.0)
