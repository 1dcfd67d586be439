import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracroute.traffic_gen import (CascadeParams, FgnParams, OnOffParams, TraceFormatError,
                                   TraceSeries, fgn_acf, gen_cascade, gen_fgn, gen_onoff,
                                   read_trace, sample_acf, write_trace)
from fracroute.fractal_estim import estimate


def test_fgn_acf_closed_form():
    assert fgn_acf(0.3, 0) == 1.0
    assert fgn_acf(0.8, 0) == 1.0
    assert fgn_acf(0.5, 3) == pytest.approx(0.0, abs=1e-15)
    # 0.5 * (2^1.6 - 2 * 1 + 0) = 2^0.6 - 1
    assert fgn_acf(0.8, 1) == pytest.approx(0.5157165665103982, abs=1e-12)


@given(st.floats(0.01, 0.99), st.integers(1, 1000))
def test_fgn_acf_is_symmetric_second_difference(h, k):
    # rho(k) = 0.5 * second difference of |k|^{2H}
    f = lambda x: abs(x) ** (2 * h)
    assert fgn_acf(h, k) == pytest.approx(0.5 * (f(k + 1) - 2 * f(k) + f(k - 1)), abs=1e-12)
    assert fgn_acf(h, -k) == pytest.approx(fgn_acf(h, k))


def test_fgn_white_noise_case():
    trace = gen_fgn(FgnParams(0.5, 100, 10, 4096, seed=7))
    assert abs(sample_acf(trace.values, 1)[1]) < 0.05


def test_fgn_lag_one_correlation():
    trace = gen_fgn(FgnParams(0.8, 100, 10, 16384, seed=7))
    assert abs(sample_acf(trace.values, 1)[1] - 0.5157) < 0.05


def test_fgn_determinism_and_seed_sensitivity():
    p = FgnParams(0.7, 50, 5, 1024, seed=3)
    a, b = gen_fgn(p), gen_fgn(p)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, gen_fgn(FgnParams(0.7, 50, 5, 1024, seed=4)).values)


def test_fgn_moments_and_nonnegative():
    trace = gen_fgn(FgnParams(0.5, 100, 10, 2 ** 14, seed=1))
    assert trace.values.mean() == pytest.approx(100, abs=0.5)
    assert trace.values.std() == pytest.approx(10, rel=0.03)
    clipped = gen_fgn(FgnParams(0.7, 1, 5, 1024, seed=1))
    assert clipped.values.min() == 0.0


@pytest.mark.parametrize("kw", [dict(hurst=0.0), dict(hurst=1.0), dict(hurst=1.2),
                                dict(n=1000), dict(std=-1.0)])
def test_fgn_params_rejected(kw):
    base = dict(hurst=0.7, mean=1.0, std=1.0, n=1024)
    base.update(kw)
    with pytest.raises(ValueError):
        FgnParams(**base)


@pytest.mark.parametrize("hurst", [0.6, 0.7, 0.8, 0.9])
def test_fgn_acf_matches_over_seeds(hurst):
    # sample ACF about the known mean, averaged over seeds: LRD makes single runs noisy
    lags = np.arange(1, 11)
    acfs = []
    for seed in range(10):
        y = gen_fgn(FgnParams(hurst, 100, 10, 2 ** 16, seed)).values - 100
        acfs.append([np.dot(y[:-k], y[k:]) / np.dot(y, y) for k in lags])
    assert np.max(np.abs(np.mean(acfs, axis=0) - fgn_acf(hurst, lags))) < 0.05


def test_fgn_lrd_decay_ratio():
    ratios = {8: [], 16: []}
    for seed in range(10):
        a = sample_acf(gen_fgn(FgnParams(0.8, 100, 10, 2 ** 16, seed)).values, 32)
        for k in ratios:
            ratios[k].append(a[2 * k] / a[k])
    for k, r in ratios.items():
        assert abs(np.mean(r) - 2 ** (-2 * (1 - 0.8))) < 0.15


def test_onoff_single_source_alternates():
    trace = gen_onoff(OnOffParams(1, 1.5, 2000, peak_rate=5.0, seed=2))
    assert set(np.unique(trace.values)) <= {0.0, 5.0}
    assert len(np.unique(trace.values)) == 2


def test_onoff_deterministic_and_bounded():
    p = OnOffParams(20, 1.3, 4096, min_sojourn=2, peak_rate=1.5, seed=9)
    a, b = gen_onoff(p), gen_onoff(p)
    assert np.array_equal(a.values, b.values)
    assert a.values.max() <= 20 * 1.5
    assert np.allclose(a.values / 1.5, np.round(a.values / 1.5))


@pytest.mark.parametrize("alpha", [1.0, 0.8, 2.0])
def test_onoff_rejects_non_heavy_tail(alpha):
    with pytest.raises(ValueError):
        OnOffParams(5, alpha, 100)


def test_onoff_long_range_dependence():
    est = [estimate(gen_onoff(OnOffParams(50, 1.4, 32768, seed=s))).hurst for s in range(3)]
    assert 0.6 <= np.mean(est) <= 0.95


def test_cascade_even_split_is_uniform():
    trace = gen_cascade(CascadeParams(3, 0.5, 8.0, seed=1))
    assert np.array_equal(trace.values, np.ones(8))


@given(st.integers(1, 14), st.floats(0.01, 0.5), st.floats(1e-3, 1e6), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_cascade_mass_conservation(depth, p, mass, seed):
    trace = gen_cascade(CascadeParams(depth, p, mass, seed))
    assert trace.n == 2 ** depth
    assert abs(trace.values.sum() - mass) <= 1e-9 * mass
    assert trace.values.min() >= 0


def test_cascade_burstiness_grows_as_split_skews():
    sv = {}
    for p in (0.3, 0.45):
        v = gen_cascade(CascadeParams(14, p, 1.0, seed=5)).values
        sv[p] = v.std() / v.mean()
    assert sv[0.3] > sv[0.45]


def test_cascade_deterministic():
    p = CascadeParams(10, 0.2, 3.0, seed=11)
    assert np.array_equal(gen_cascade(p).values, gen_cascade(p).values)


@pytest.mark.parametrize("kw", [dict(multiplier_low=0.0), dict(multiplier_low=0.6),
                                dict(depth=0)])
def test_cascade_params_rejected(kw):
    base = dict(depth=4, multiplier_low=0.3)
    base.update(kw)
    with pytest.raises(ValueError):
        CascadeParams(**base)


def test_trace_series_invariants():
    with pytest.raises(ValueError):
        TraceSeries(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        TraceSeries(np.array([]))
    with pytest.raises(ValueError):
        TraceSeries(np.ones(3), slot_width=0)


def test_trace_file_round_trip(tmp_path):
    trace = TraceSeries(np.array([0.0, 1.25, 3.5]), slot_width=0.01)
    path = tmp_path / "t.trace"
    write_trace(trace, path)
    assert path.read_text().splitlines()[0] == "slot_width=0.010000"
    back = read_trace(path)
    assert back.slot_width == 0.01
    assert np.array_equal(back.values, trace.values)


@pytest.mark.parametrize("text,line", [
    ("width=1\n1\n", 1),
    ("slot_width=1\n1\nabc\n", 3),
    ("slot_width=1\n1\n-2\n", 3),
])
def test_trace_file_errors_name_the_line(tmp_path, text, line):
    path = tmp_path / "bad.trace"
    path.write_text(text)
    with pytest.raises(TraceFormatError, match=f":{line}:"):
        read_trace(path)
