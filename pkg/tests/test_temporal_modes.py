import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway_cvqkd import temporal_modes as tm
from twoway_cvqkd.errors import (
    DegenerateCalibrationError,
    DegenerateComplementError,
    InvalidArgumentError,
)

GRID = (-40.0, 80.0 / 8191, 8192)


def intensity_std(wp):
    p = np.abs(wp.samples) ** 2
    t = wp.times
    mean = np.trapezoid(t * p, dx=wp.dt)
    return math.sqrt(np.trapezoid((t - mean) ** 2 * p, dx=wp.dt))


# ---------------------------------------------------------------- types

def test_wavepacket_validation():
    with pytest.raises(InvalidArgumentError):
        tm.Wavepacket(np.zeros(10), 0.1)
    with pytest.raises(InvalidArgumentError):
        tm.Wavepacket(np.ones(10), 0.0)
    with pytest.raises(InvalidArgumentError):
        tm.Wavepacket([1.0], 0.1)


def test_normalize():
    wp = tm.Wavepacket(3.0 * np.exp(-np.linspace(-5, 5, 501) ** 2), 0.02)
    assert not wp.is_normalized()
    assert abs(wp.normalize().norm_sq - 1.0) < 1e-10


def test_dsp_kernel_validation():
    with pytest.raises(InvalidArgumentError):
        tm.DspKernel([], [], 1.0)
    with pytest.raises(InvalidArgumentError):
        tm.DspKernel([1.0, 2.0], [0.0], 1.0)
    with pytest.raises(InvalidArgumentError):
        tm.DspKernel([1.0, 2.0], [1.0, 0.0], 1.0)
    with pytest.raises(InvalidArgumentError):
        tm.DspKernel([1.0], [0.0], 0.0)


def test_snu_calibration_must_be_positive():
    with pytest.raises(DegenerateCalibrationError):
        tm.SnuCalibration(0.0, 1.0)


@pytest.mark.parametrize("make", [tm.gaussian, tm.raised_cosine, tm.rectangular])
def test_generators_are_normalized(make):
    assert make(1.5, 2.0).is_normalized()


def test_gaussian_width_is_intensity_std():
    assert intensity_std(tm.gaussian(1.3)) == pytest.approx(1.3, rel=1e-8)


# ---------------------------------------------------------------- DSP kernel

def test_single_tap_kernel_reverses_response():
    g = tm.DetectorResponse(np.array([0.0, 1.0, 3.0, 0.5, 0.0]), 0.5, t0=-1.0)
    kernel = tm.DspKernel([1.0], [0.0], 1.0)
    tau = np.linspace(-2, 2, 41)
    np.testing.assert_allclose(tm.dsp_kernel_eval(kernel, g, tau), g(-tau))


def test_symmetric_kernel_is_even():
    t = np.linspace(-3, 3, 301)
    g = tm.DetectorResponse(np.exp(-t ** 2), t[1] - t[0], t0=t[0])
    kernel = tm.DspKernel([0.7, 0.7], [-0.4, 0.4], 0.8)
    tau = np.linspace(-2, 2, 81)
    out = tm.dsp_kernel_eval(kernel, g, tau)
    np.testing.assert_allclose(out, out[::-1], atol=1e-14)


def test_kernel_matches_direct_summation(rng):
    ts = np.sort(rng.uniform(-1, 1, 7)) + np.arange(7) * 1e-3
    taps = rng.normal(size=7)
    t = np.linspace(-2, 2, 401)
    gs = rng.normal(size=t.size)
    g = tm.DetectorResponse(gs, t[1] - t[0], t0=t[0])
    kernel = tm.DspKernel(taps, ts, 0.25, time_offset=0.1)
    tau = np.linspace(-1.5, 1.5, 1001)
    direct = np.zeros_like(tau)
    for i, x in enumerate(tau):
        for f, tk in zip(taps, ts):
            arg = tk + 0.1 - x
            direct[i] += f * (np.interp(arg, t, gs) if t[0] <= arg <= t[-1] else 0.0)
    np.testing.assert_allclose(tm.dsp_kernel_eval(kernel, g, tau), direct, atol=1e-9)


# ---------------------------------------------------------------- SNU factor

def test_snu_constant_kernel_gives_sqrt_mu():
    lo = tm.gaussian(1.0)
    dts = 0.3
    cal = tm.snu_factor(lo, np.full(lo.samples.size, dts), dts, 1e6)
    assert cal.sigma_snu == pytest.approx(1e3, rel=1e-10)


def test_snu_square_root_scaling():
    lo = tm.gaussian(1.0)
    g = np.exp(-lo.times ** 2 / 3.0)
    a = tm.snu_factor(lo, g, 0.5, 100.0).sigma_snu
    b = tm.snu_factor(lo, g, 0.5, 400.0).sigma_snu
    assert b / a == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("sigma, s", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)])
def test_snu_gaussian_closed_form(sigma, s):
    # |xi|^2 is a unit normal density of std sigma, G = exp(-t^2 / (2 s^2))
    lo = tm.gaussian(sigma, grid=GRID)
    g = np.exp(-lo.times ** 2 / (2 * s ** 2))
    mu, dts = 1e8, 0.1
    expected = math.sqrt(mu / dts ** 2 / math.sqrt(1 + 2 * sigma ** 2 / s ** 2))
    assert tm.snu_factor(lo, g, dts, mu).sigma_snu == pytest.approx(expected, rel=1e-8)


def test_snu_time_translation_invariance():
    lo = tm.gaussian(1.0, grid=GRID)
    g = np.exp(-lo.times ** 2 / 2)
    moved = lo.shifted(3.7)
    ref = tm.snu_factor(lo, g, 0.2, 1e4).sigma_snu
    assert tm.snu_factor(moved, g, 0.2, 1e4).sigma_snu == pytest.approx(ref, rel=1e-12)


def test_snu_degenerate():
    lo = tm.gaussian(1.0)
    with pytest.raises(DegenerateCalibrationError):
        tm.snu_factor(lo, np.zeros(lo.samples.size), 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        tm.snu_factor(lo, np.ones(3), 1.0, 1.0)


# ---------------------------------------------------------------- receiver mode

def test_receiver_mode_constant_kernel():
    lo = tm.gaussian(1.0)
    rx = tm.receiver_mode(lo, np.full(lo.samples.size, 2.5))
    np.testing.assert_allclose(rx.samples, lo.samples, atol=1e-12)


def test_receiver_mode_is_normalized(rng):
    lo = tm.Wavepacket(rng.normal(size=300) + 1j * rng.normal(size=300), 0.05)
    rx = tm.receiver_mode(lo, rng.uniform(0.1, 2.0, size=300), omega_lo=3.0)
    assert abs(rx.norm_sq - 1.0) < 1e-10


def test_receiver_mode_gaussian_product_width():
    sigma = 1.0
    lo = tm.gaussian(sigma, grid=GRID)
    g = np.exp(-lo.times ** 2 / (4 * sigma ** 2))
    rx = tm.receiver_mode(lo, g)
    assert intensity_std(rx) == pytest.approx(sigma / math.sqrt(2), rel=1e-8)
    assert tm.mode_match(rx, tm.gaussian(sigma / math.sqrt(2), grid=GRID)) == 1.0


def test_receiver_mode_carrier_phase():
    lo = tm.gaussian(1.0)
    rx = tm.receiver_mode(lo, np.ones(lo.samples.size), omega_lo=2.0)
    expected = lo.samples * np.exp(-2j * lo.times)
    np.testing.assert_allclose(rx.samples, expected, atol=1e-12)
    assert rx.carrier == 2.0


# ---------------------------------------------------------------- mode matching

def test_mode_match_identical():
    a = tm.gaussian(1.0)
    assert tm.mode_match(a, a) == 1.0


def test_mode_match_even_vs_odd():
    t = np.linspace(-8, 8, 4001)
    even = tm.Wavepacket(np.exp(-t ** 2), t[1] - t[0], t[0]).normalize()
    odd = tm.Wavepacket(t * np.exp(-t ** 2), t[1] - t[0], t[0]).normalize()
    assert tm.mode_match(even, odd) == 0.0


def test_mode_match_disjoint_supports():
    a = tm.rectangular(1.0, 0.0)
    b = tm.rectangular(1.0, 100.0)
    assert tm.mode_match(a, b) == 0.0


@pytest.mark.parametrize("ratio", [0.0, 0.5, 1.0, 2.0, 4.0])
def test_gaussian_overlap_closed_form(ratio):
    sigma = 1.0
    a = tm.gaussian(sigma, 0.0, grid=GRID)
    b = tm.gaussian(sigma, ratio * sigma, grid=GRID)
    assert abs(tm.mode_match(a, b) - math.exp(-ratio ** 2 / 4)) < 1e-8


def test_gaussian_overlap_on_mismatched_grids():
    a = tm.gaussian(1.0, 0.0)
    b = tm.gaussian(1.0, 1.0, n_points=3001)
    assert tm.mode_match(a, b) == pytest.approx(math.exp(-0.25), abs=1e-5)


def test_mode_match_warns_and_normalizes():
    a = tm.gaussian(1.0)
    big = tm.Wavepacket(2.0 * a.samples, a.dt, a.t0)
    with pytest.warns(UserWarning):
        assert tm.mode_match(a, big) == 1.0


@settings(max_examples=50, deadline=None)
@given(delay=st.floats(-3, 3), phi=st.floats(0, 2 * math.pi), w=st.floats(0.5, 2.0))
def test_mode_match_symmetric_and_phase_invariant(delay, phi, w):
    a = tm.gaussian(1.0, 0.0, grid=GRID)
    b = tm.raised_cosine(w, delay, grid=GRID)
    ab = tm.mode_match(a, b)
    assert abs(ab - tm.mode_match(b, a)) < 1e-12
    assert abs(ab - tm.mode_match(a.with_phase(phi), b)) < 1e-12
    assert abs(ab - tm.mode_match(a, b.with_phase(phi))) < 1e-12
    assert 0.0 <= ab <= 1.0


def _common_grid(n):
    return (-20.0, 40.0 / (n - 1), n)


@pytest.mark.parametrize("pair", [
    (lambda g: tm.gaussian(1.0, 0.0, grid=g), lambda g: tm.gaussian(1.2, 0.7, grid=g)),
    (lambda g: tm.gaussian(1.0, 0.0, grid=g), lambda g: tm.raised_cosine(2.0, 0.3, grid=g)),
])
def test_grid_refinement_converges(pair):
    make_a, make_b = pair
    coarse = tm.mode_match(make_a(_common_grid(2049)), make_b(_common_grid(2049)))
    fine = tm.mode_match(make_a(_common_grid(4097)), make_b(_common_grid(4097)))
    assert abs(coarse - fine) / fine < 1e-6


def test_snu_grid_refinement_converges():
    def sigma(n):
        lo = tm.gaussian(1.0, n_points=n)
        return tm.snu_factor(lo, np.exp(-lo.times ** 2 / 2), 0.1, 1e6).sigma_snu
    assert abs(sigma(2049) - sigma(4097)) / sigma(4097) < 1e-6


# ---------------------------------------------------------------- orthogonal complement

def test_complement_of_orthogonal_mode():
    a = tm.rectangular(1.0, 0.0, grid=GRID)
    b = tm.rectangular(1.0, 10.0, grid=GRID)
    eta, psi = tm.orthogonal_complement(a, b)
    assert eta == 0.0
    np.testing.assert_allclose(psi.samples, a.samples, atol=1e-12)


def test_complement_of_identical_mode():
    a = tm.gaussian(1.0)
    with pytest.raises(DegenerateComplementError):
        tm.orthogonal_complement(a, a.with_phase(0.3))


def test_complement_reconstruction(rng):
    for _ in range(20):
        rx = tm.Wavepacket(rng.normal(size=200) + 1j * rng.normal(size=200), 0.1).normalize()
        sig = tm.Wavepacket(rng.normal(size=200) + 1j * rng.normal(size=200), 0.1).normalize()
        eta, psi = tm.orthogonal_complement(rx, sig)
        assert abs(psi.norm_sq - 1.0) < 1e-10
        assert abs(tm.inner_product(sig, psi)) < 1e-9
        phase = tm.inner_product(sig, rx) / abs(tm.inner_product(sig, rx))
        rebuilt = math.sqrt(eta) * phase * sig.samples + math.sqrt(1 - eta) * psi.samples
        assert np.max(np.abs(rebuilt - rx.samples)) < 1e-8
        assert abs(eta + abs(tm.inner_product(psi, rx)) ** 2 - 1.0) < 1e-8


def test_complement_eta_matches_mode_match():
    a = tm.gaussian(1.0, 0.0, grid=GRID)
    b = tm.gaussian(1.0, 1.3, grid=GRID)
    eta, _ = tm.orthogonal_complement(a, b)
    assert eta == tm.mode_match(a, b)


# ---------------------------------------------------------------- matrix and I/O

def test_mode_match_matrix_mapping():
    xi_a = tm.gaussian(1.0, 0.0, grid=GRID)
    xi_b = tm.gaussian(1.0, 1.0, grid=GRID)
    rx_a = tm.gaussian(1.0, 0.2, grid=GRID)
    rx_b = tm.gaussian(1.0, 1.6, grid=GRID)
    mm = tm.mode_match_matrix(xi_a, xi_b, rx_a, rx_b)
    assert mm.aa == pytest.approx(math.exp(-0.2 ** 2 / 4), abs=1e-9)
    assert mm.ab == pytest.approx(math.exp(-1.6 ** 2 / 4), abs=1e-9)
    assert mm.ba == pytest.approx(math.exp(-0.8 ** 2 / 4), abs=1e-9)
    assert mm.bb == pytest.approx(math.exp(-0.6 ** 2 / 4), abs=1e-9)


def test_waveform_round_trip(tmp_path):
    wp = tm.gaussian(1.0, 0.5, n_points=257).with_phase(0.4)
    path = tmp_path / "w.txt"
    tm.write_waveform(wp, path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "# t re im"
    back = tm.read_waveform(path)
    np.testing.assert_array_equal(back.samples, wp.samples)
    assert back.dt == pytest.approx(wp.dt, rel=1e-12)
    assert back.t0 == wp.t0


def test_read_waveform_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("t re im\n0 1 0\n1 1 0\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        tm.read_waveform(p)
    p.write_text("# t re im\n0 1 0\n1 1 0\n3 1 0\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        tm.read_waveform(p)


def test_no_warning_for_normalized_inputs():
    a = tm.gaussian(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tm.mode_match(a, a.shifted(0.5))
