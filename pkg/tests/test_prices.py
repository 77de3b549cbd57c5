import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pemdesign.prices import (PriceLoadError, PriceSeries, RepDaySet, cluster, load_prices,
                              reconstruct_annual, resample_day, synthetic_prices, write_prices)


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


def test_round_trip_csv(tmp_path):
    s = synthetic_prices("spiky", 40.0, 20.0, seed=3)
    write_prices(s, tmp_path / "p.csv")
    back = load_prices(tmp_path / "p.csv")
    assert np.array_equal(back.values, s.values)


def test_headerless_single_column(tmp_path):
    path = _write(tmp_path / "h.csv", [f"{v}" for v in np.arange(8760) % 50])
    assert load_prices(path, headerless=True).values[49] == 49.0


def test_leap_year_drops_feb_29(tmp_path):
    start = np.datetime64("2024-01-01T00:00")
    stamps = start + np.arange(8784) * np.timedelta64(1, "h")
    day = (np.arange(8784) // 24).astype(float)
    lines = ["timestamp,price_usd_per_mwh"] + [f"{t},{v}" for t, v in zip(stamps, day)]
    s = load_prices(_write(tmp_path / "leap.csv", lines))
    assert s.values.size == 8760
    assert 59.0 not in s.values  # day index 59 is Feb 29
    assert s.values[59 * 24] == 60.0


@pytest.mark.parametrize("lines, match", [
    (["timestamp,price_usd_per_mwh", "2022-01-01T00:00,1.0"], "8760"),
    (["time,price", "x,1"], "header"),
    (["timestamp,price_usd_per_mwh"] + ["t,abc"] * 8760, "parse"),
    (["timestamp,price_usd_per_mwh"] + ["t,nan"] * 8760, "non-finite"),
])
def test_malformed_files(tmp_path, lines, match):
    with pytest.raises(PriceLoadError, match=match):
        load_prices(_write(tmp_path / "bad.csv", lines))


def test_missing_file(tmp_path):
    with pytest.raises(PriceLoadError):
        load_prices(tmp_path / "nope.csv")


def test_negative_prices_allowed():
    s = PriceSeries(np.full(24, -5.0))
    assert s.values.min() == -5.0


def test_duration_pattern_hits_mean_and_volatility():
    s = synthetic_prices("duration", 62.55, 60.0, seed=0)
    assert s.values.size == 8760
    assert s.values.mean() == pytest.approx(62.55, rel=1e-12)
    assert s.values.std() == pytest.approx(60.0, rel=1e-12)
    # right-skewed: median below mean, long upper tail
    assert np.median(s.values) < s.values.mean()
    assert s.values.max() > s.values.mean() + 5 * 60.0


def test_synthetic_is_seeded():
    a = synthetic_prices("duration", 50, 30, seed=7).values
    b = synthetic_prices("duration", 50, 30, seed=7).values
    c = synthetic_prices("duration", 50, 30, seed=8).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_flat_and_diurnal_means():
    assert synthetic_prices("flat", 33.0).values.std() == 0.0
    assert synthetic_prices("diurnal", 40.0, 10.0).values.mean() == pytest.approx(40.0)
    with pytest.raises(ValueError):
        synthetic_prices("bogus")


def test_cluster_recovers_planted_groups():
    cheap, dear = np.full(24, 10.0), np.full(24, 90.0)
    rng = np.random.default_rng(0)
    days = np.array([cheap if d % 3 else dear for d in range(30)]) + rng.normal(0, 0.1, (30, 24))
    rep = cluster(PriceSeries(days.ravel()), 2, seed=1)
    truth = np.array([0 if d % 3 else 1 for d in range(30)])
    # up to label permutation
    same = np.array_equal(rep.mapping, truth) or np.array_equal(rep.mapping, 1 - truth)
    assert same
    assert sorted(rep.weights.tolist()) == [10, 20]


def test_cluster_medoid_is_member_and_representative(skewed_year):
    rep = cluster(skewed_year, 5, seed=0)
    assert rep.weights.sum() == 365
    for c, m in enumerate(rep.medoid_indices):
        assert rep.mapping[m] == c
        assert np.array_equal(rep.rep_days[c], skewed_year.daily()[m])
    assert np.all(np.diff(rep.medoid_indices) > 0)  # ordered by medoid day
    assert rep.objective_history == sorted(rep.objective_history, reverse=True)


def test_cluster_reduces_k_for_identical_days():
    rep = cluster(synthetic_prices("flat", 20.0), 4, seed=0)
    assert rep.k == 1


def test_repday_json_round_trip(tmp_path, rep2):
    rep2.save(tmp_path / "r.json")
    back = RepDaySet.load(tmp_path / "r.json")
    assert np.array_equal(back.mapping, rep2.mapping)
    assert np.array_equal(back.rep_days, rep2.rep_days)
    assert np.array_equal(back.medoid_indices, rep2.medoid_indices)


def test_repdayset_consistency_checks():
    with pytest.raises(ValueError):
        RepDaySet(rep_days=np.zeros((2, 24)), weights=[1, 1], mapping=[0, 0], medoid_indices=[0, 1])


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_cluster_invariants(k, seed):
    s = synthetic_prices("spiky", 50.0, 25.0, seed=seed % 1000, n_days=40)
    rep = cluster(s, k, seed=seed)
    assert rep.weights.sum() == 40
    assert np.all(rep.weights >= 1)
    assert np.array_equal(np.bincount(rep.mapping, minlength=rep.k), rep.weights)


@pytest.mark.parametrize("dt", [0.25, 0.5, 1.0, 2.0, 3.0])
def test_resample_preserves_daily_mean(dt):
    hourly = np.arange(24.0)
    out = resample_day(hourly, dt)
    assert out.size == round(24 / dt)
    assert out.mean() == pytest.approx(hourly.mean())


def test_reconstruct_annual():
    assert reconstruct_annual([5.0, 7.0], [1, 0, 1]).tolist() == [7.0, 5.0, 7.0]
