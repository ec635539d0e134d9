import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threeregion.errors import ConfigurationError
from threeregion.windows import (WindowSpec, band_index, eval_window, fourier_coefficients,
                                 gaussian_window, generator, local_frequency, max_frequency,
                                 raised_cosine_window, sample_window, superosc_window,
                                 tabulated_window)


def test_gaussian_peak_is_eps0():
    assert eval_window(gaussian_window(1.0, 2.0, 0.5), 0.0) == 1.0
    assert eval_window(gaussian_window(2.5, 2.0, 0.5), 0.0) == 2.5


@pytest.mark.parametrize("spec", [gaussian_window(1.0, 2.0), raised_cosine_window(1.0, 2.0),
                                  superosc_window(10, 4.0, 1.0, 2.0)])
def test_zero_outside_support(spec):
    assert eval_window(spec, spec.T) == 0.0
    assert eval_window(spec, -0.5 * spec.T - 1e-12) == 0.0


def test_gaussian_even_at_sigma():
    spec = gaussian_window(1.0, 2.0, 0.5)
    assert eval_window(spec, 0.5) == eval_window(spec, -0.5)


def test_superosc_n1_at_origin():
    assert eval_window(superosc_window(1, 2.0, 1.7), 0.0) == pytest.approx(1.7, rel=1e-15)


@pytest.mark.parametrize("kw", [dict(family="gaussian", sigma=-1.0), dict(family="gaussian", T=0.0),
                                dict(family="superoscillatory", N=0, a=2.0),
                                dict(family="superoscillatory", N=3, a=1.0),
                                dict(family="triangle")])
def test_invalid_specs_rejected(kw):
    with pytest.raises(ConfigurationError):
        WindowSpec(**kw)


def test_superosc_rejects_small_boost():
    with pytest.raises(ConfigurationError):
        superosc_window(4, 0.9)


def test_superosc_local_frequency_n10_a4():
    T = 1.0
    spec = superosc_window(10, 4.0, 1.0, T)
    assert local_frequency(spec, 0.0) == pytest.approx(40 * 2 * math.pi / T, rel=0.05)


def test_gaussian_local_frequency_zero():
    assert local_frequency(gaussian_window(1.0, 1.0), 0.1) == 0.0


def test_tabulated_cosine_local_frequency():
    T = 1.0
    t = np.linspace(0, T / 2, 201)
    spec = tabulated_window(t, np.cos(2 * math.pi * t / T), 1.0, T)
    assert local_frequency(spec, 0.0) == pytest.approx(2 * math.pi / T, rel=1e-3)


def test_local_frequency_nan_at_zero():
    # an identically zero window has no defined phase
    spec = WindowSpec("gaussian", eps0=0.0)
    assert math.isnan(local_frequency(spec, 0.0))


def test_superosc_generator_real_part_is_window():
    spec = superosc_window(6, 2.0, 0.8)
    t = np.linspace(-0.5, 0.5, 41)
    g = np.array([generator(spec, x) for x in t])
    assert np.allclose(g.real, eval_window(spec, t), atol=1e-13)


@pytest.mark.parametrize("N", range(1, 11))
@pytest.mark.parametrize("a", [1.5, 2.0, 4.0])
def test_superosc_band_limited(N, a):
    assert band_index(superosc_window(N, a)) <= N


@pytest.mark.parametrize("N,a", [(1, 1.5), (3, 2.0), (10, 4.0), (6, 1.1)])
def test_superoscillation_exceeds_band_limit(N, a):
    spec = superosc_window(N, a)
    assert local_frequency(spec, 0.0) > N * 2 * math.pi / spec.T


def test_fourier_coefficients_vanish_above_band():
    n, c = fourier_coefficients(superosc_window(3, 2.0))
    assert np.max(np.abs(c[np.abs(n) > 3])) < 1e-12 * np.max(np.abs(c))


def test_max_frequency_counts_superoscillation():
    assert max_frequency(superosc_window(10, 4.0)) >= 40 * 2 * math.pi


def test_sample_window_grid():
    t, e = sample_window(gaussian_window(), 11)
    assert t[0] == -0.5 and t[-1] == 0.5 and len(e) == 11


def test_scaled_multiplies_amplitude():
    spec = superosc_window(4, 2.0, 1.0)
    assert eval_window(spec.scaled(3.0), 0.1) == pytest.approx(3.0 * eval_window(spec, 0.1))


specs = st.one_of(
    st.builds(gaussian_window, st.floats(0.1, 5), st.floats(0.5, 4), st.none()),
    st.builds(raised_cosine_window, st.floats(0.1, 5), st.floats(0.5, 4)),
    st.builds(superosc_window, st.integers(1, 10), st.floats(1.01, 5), st.floats(0.1, 5),
              st.floats(0.5, 4)),
)


@settings(max_examples=40, deadline=None)
@given(specs, st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_windows_even_and_compact(spec, ts):
    t = np.array(ts)
    a, b = eval_window(spec, t), eval_window(spec, -t)
    assert np.array_equal(a, b)
    assert np.all(a[np.abs(t) > spec.T / 2] == 0)
    assert np.isrealobj(a)


def test_evenness_thousand_points():
    rng = np.random.default_rng(1)
    t = rng.uniform(-1, 1, 1000)
    for spec in (gaussian_window(), raised_cosine_window(), superosc_window(7, 3.0)):
        assert np.max(np.abs(eval_window(spec, t) - eval_window(spec, -t))) <= 1e-15
