import math

import numpy as np
import pytest

from conftest import DATA
from tbp.errors import (
    DuplicateDate,
    MisalignedCalendars,
    MissingColumn,
    NonPositivePrice,
    TooFewMonths,
    UnparsableRow,
)
from tbp.market_data import (
    Aggregation,
    DailyBar,
    DatasetSplit,
    Month,
    MonthlyFeaturePanel,
    MonthlyBar,
    aggregate_monthly,
    build_panel,
    load_panel,
    make_windows,
    panel_to_csv,
    parse_daily_csv,
    read_panel_csv,
    reconstruct_levels,
    split_panel,
    summarize_split,
)

HEADER = "Date,Open,High,Low,Close,Adj Close,Volume\n"


def write(tmp_path, body, name="X.csv"):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return path


def bar(day, close, volume=100.0, month=1, year=2020):
    import datetime as dt
    return DailyBar(dt.date(year, month, day), close, close, close, close, volume)


# --- parsing -------------------------------------------------------------

def test_parse_two_rows_in_date_order(tmp_path):
    path = write(tmp_path, "2020-01-03,2,3,1,9,2.5,10\n2020-01-02,1,2,0.5,9,1.5,0\n")
    bars = parse_daily_csv(path)
    assert [b.date.day for b in bars] == [2, 3]
    # Adj Close is the close; raw Close ignored
    assert bars[0].adj_close == 1.5 and bars[1].adj_close == 2.5
    assert bars[0].volume == 0


def test_parse_header_only(tmp_path):
    assert parse_daily_csv(write(tmp_path, "")) == []


def test_negative_volume_is_unparsable(tmp_path):
    with pytest.raises(UnparsableRow) as exc:
        parse_daily_csv(write(tmp_path, "2020-01-02,1,1,1,1,1,10\n2020-01-03,1,1,1,1,1,-5\n"))
    assert exc.value.line == 3


@pytest.mark.parametrize("row, err", [
    ("2020-01-02,0,1,1,1,1,1\n", NonPositivePrice),
    ("2020-01-02,1,1,1,1,-2,1\n", NonPositivePrice),
    ("2020-01-02,1,1,null,1,1,1\n", UnparsableRow),
    ("02/01/2020,1,1,1,1,1,1\n", UnparsableRow),
    ("2020-01-02,1,1,1,1\n", UnparsableRow),
])
def test_bad_rows(tmp_path, row, err):
    with pytest.raises(err):
        parse_daily_csv(write(tmp_path, row))


def test_missing_column_named(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("Date,Open,High,Low,Close,Volume\n")
    with pytest.raises(MissingColumn) as exc:
        parse_daily_csv(path)
    assert exc.value.column == "Adj Close"


def test_duplicate_date(tmp_path):
    with pytest.raises(DuplicateDate):
        parse_daily_csv(write(tmp_path, "2020-01-02,1,1,1,1,1,1\n2020-01-02,1,1,1,1,1,1\n"))


# --- aggregation ---------------------------------------------------------

def test_single_day_month_identical_for_every_method():
    b = DailyBar(__import__("datetime").date(2020, 5, 7), 1.0, 2.0, 0.5, 1.5, 10.0)
    for method in Aggregation:
        (m,) = aggregate_monthly([b], method)
        assert m.values() == (1.0, 2.0, 0.5, 1.5, 10.0)
        assert m.month == Month(2020, 5)


def test_forced_arithmetic_closes():
    bars = [bar(1, 10.0), bar(2, 20.0), bar(3, 30.0)]
    got = {m: aggregate_monthly(bars, m)[0].close for m in Aggregation}
    assert got == {Aggregation.MEAN: 20.0, Aggregation.MAX: 30.0,
                   Aggregation.MIN: 10.0, Aggregation.LAST: 30.0}


def test_two_months_two_bars():
    bars = [bar(5, 1.0), bar(6, 2.0), bar(3, 3.0, month=2)]
    out = aggregate_monthly(bars, "last")
    assert [m.month for m in out] == [Month(2020, 1), Month(2020, 2)]


def test_last_round_trip_with_one_bar_per_month(rng):
    closes = rng.uniform(1, 100, 24)
    bars = [bar(1, c, month=k % 12 + 1, year=2000 + k // 12) for k, c in enumerate(closes)]
    out = aggregate_monthly(bars, Aggregation.LAST)
    assert [m.close for m in out] == list(closes)


# --- panel ---------------------------------------------------------------

def monthly(closes, start=Month(2000, 1), volume=1.0):
    out, m = [], start
    for c in closes:
        out.append(MonthlyBar(m, c, c, c, c, volume, Aggregation.LAST))
        m = m.next()
    return out


def test_pct_change_forced():
    p = build_panel({"A": monthly([100.0, 110.0])})
    assert p.features[0, 0, 3] == pytest.approx(0.10, abs=1e-15)


def test_constant_series_zero_features():
    p = build_panel({"A": monthly([5.0] * 6)})
    assert np.all(p.features == 0)


def test_panel_bookkeeping_10_by_240(rng):
    bars = {f"S{k}": monthly(list(rng.uniform(10, 20, 240))) for k in range(10)}
    p = build_panel(bars)
    assert p.features.shape == (10, 239, 5)
    assert np.isfinite(p.targets).sum(axis=1).tolist() == [238] * 10
    np.testing.assert_array_equal(p.targets[:, :-1], p.features[:, 1:, 3])


def test_misaligned_calendars_rejected():
    with pytest.raises(MisalignedCalendars) as exc:
        build_panel({"A": monthly([1.0, 2.0, 3.0]),
                     "B": monthly([1.0, 2.0, 3.0], start=Month(2000, 2))})
    assert exc.value.asset == "B"


def test_month_gap_rejected():
    bars = monthly([1.0, 2.0, 3.0])
    bars[2] = MonthlyBar(Month(2000, 6), 3, 3, 3, 3, 1, Aggregation.LAST)
    with pytest.raises(MisalignedCalendars):
        build_panel({"A": bars})


def test_zero_volume_base_gives_zero_change():
    bars = monthly([1.0, 2.0, 3.0], volume=0.0)
    assert np.all(build_panel({"A": bars}).features[0, :, 4] == 0.0)


def test_percent_change_inversion(rng):
    closes = rng.uniform(5, 500, 120)
    p = build_panel({"A": monthly(list(closes))})
    rebuilt = reconstruct_levels(closes[0], p.features[0, :, 3])
    np.testing.assert_allclose(rebuilt, closes, rtol=1e-12, atol=0)


def test_mini_fixture_matches_exact_oracle():
    # values from an exact Fraction computation over the CSVs (see tests/data/mini)
    p = load_panel(DATA / "mini", "last")
    assert p.assets == ["AAA", "BBB"]
    assert [str(m) for m in p.months] == ["2020-02", "2020-03", "2020-04", "2020-05", "2020-06"]
    np.testing.assert_allclose(p.features[0, 1], [-0.009174311926605505, -0.026785714285714284,
                                                  -0.10185185185185185, -0.1, 1.2222222222222223],
                               rtol=1e-14)
    np.testing.assert_allclose(p.features[1, 0], [0.0, 0.057692307692307696, 0.02040816326530612,
                                                  0.1, 0.2], rtol=1e-14, atol=1e-16)
    mean = load_panel(DATA / "mini", "mean")
    np.testing.assert_allclose(mean.features[0, 0], [0.05527638190954774, 0.06403940886699508,
                                                     0.05583756345177665, 0.1,
                                                     0.09090909090909091], rtol=1e-14)
    assert not np.array_equal(mean.features[0], p.features[0])


def test_summarize_split_matches_oracle():
    p = load_panel(DATA / "mini", "last")
    s = summarize_split(p, DatasetSplit(range(0, 3), range(3, 4), range(4, 5)))
    aaa = s["train"]["AAA"]
    np.testing.assert_allclose(aaa["mean"], [0.017682636765205574, 0.029867375084590413,
                                             0.020407395836949102, 0.03333333333333333,
                                             0.29074074074074074], rtol=1e-13)
    np.testing.assert_allclose(aaa["std"], [0.051697021218788684, 0.05160637562727936,
                                            0.08678835733427052, 0.09428090415820634,
                                            0.6614974491042787], rtol=1e-12)
    np.testing.assert_allclose(aaa["min"], [-0.027777777777777776, -0.026785714285714284,
                                            -0.10185185185185185, -0.1, -0.25], rtol=1e-14)
    assert aaa["max"][4] == pytest.approx(1.2222222222222223, rel=1e-14)
    assert np.all(s["validation"]["BBB"]["std"] == 0)


def test_summary_population_sd():
    feats = np.array([[[-1.0] * 5, [1.0] * 5]])
    p = MonthlyFeaturePanel(["A"], [Month(2000, 1), Month(2000, 2)], feats, np.full((1, 2), np.nan))
    st = summarize_split(p, DatasetSplit(range(0, 2), range(2, 2), range(2, 2)))["train"]["A"]
    assert np.all(st["mean"] == 0) and np.all(st["std"] == 1)


# --- splits and windows --------------------------------------------------

def test_split_100_months():
    s = split_panel(100)
    assert (len(s.train), len(s.validation), len(s.test)) == (49, 21, 30)


def test_split_too_few_months():
    with pytest.raises(TooFewMonths):
        split_panel(10)


def test_split_all_train():
    s = split_panel(50, train_frac=1.0, val_frac_of_train=0.0)
    assert s.train == range(0, 50) and len(s.validation) == 0 and len(s.test) == 0


@pytest.mark.parametrize("n", [39, 40, 77, 100, 239, 1000])
def test_split_order_and_cover(n):
    s = split_panel(n)
    assert s.train.stop == s.validation.start and s.validation.stop == s.test.start
    assert s.train.stop - 1 < s.validation.start <= s.validation.stop - 1 < s.test.start
    assert s.test.stop == n
    assert len(s.test) == math.floor(0.3 * n + 1e-9)


def test_windows_one_month_ten_assets(fixture_panel):
    samples = make_windows(fixture_panel, range(100, 101))
    assert len(samples) == 10
    assert {s.asset for s in samples} == set(fixture_panel.assets)


def test_window_at_35_uses_months_0_to_35(fixture_panel):
    (s, *_) = make_windows(fixture_panel, range(35, 36))
    np.testing.assert_array_equal(s.inputs, fixture_panel.features[0, 0:36])
    assert s.inputs.shape == (36, 5)
    assert s.target == fixture_panel.targets[0, 35]


def test_short_history_anchor_skipped(fixture_panel):
    assert make_windows(fixture_panel, range(10, 11)) == []


def test_last_month_has_no_target_window(fixture_panel):
    last = fixture_panel.n_months - 1
    assert make_windows(fixture_panel, range(last, last + 1)) == []


def test_no_look_ahead(fixture_panel, fixture_split):
    for months in (fixture_split.train, fixture_split.validation, fixture_split.test):
        for s in make_windows(fixture_panel, months):
            a = fixture_panel.assets.index(s.asset)
            t = s.anchor
            assert s.anchor in months
            # inputs end at the anchor; the target is the following month's close change
            np.testing.assert_array_equal(s.inputs[-1], fixture_panel.features[a, t])
            assert s.target == fixture_panel.features[a, t + 1, 3]


def test_panel_csv_round_trip(tmp_path, fixture_panel):
    path = tmp_path / "panel.csv"
    path.write_text(panel_to_csv(fixture_panel))
    back = read_panel_csv(path)
    assert back.assets == fixture_panel.assets and back.months == fixture_panel.months
    np.testing.assert_array_equal(back.features, fixture_panel.features)
    np.testing.assert_array_equal(back.targets, fixture_panel.targets)
    assert path.read_text().splitlines()[0] == "asset,month,f_open,f_high,f_low,f_close,f_volume,target"
