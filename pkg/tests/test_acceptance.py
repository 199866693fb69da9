"""Acceptance criteria, one marked group per criterion.  The terminal summary
prints a PASS/FAIL line for each (see conftest.py)."""
import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from scipy.signal import freqz, welch

from ldv_lab import demod, dsp, harness, motion, noise, optics, report
from ldv_lab.harness import CALIBRATION_POINTS
from ldv_lab.motion import MotionProfile
from ldv_lab.noise import NoiseConfig, NoiseModel
from ldv_lab.optics import DetectorConfig, OpticalConfig
from ldv_lab.rng import RandomSeed
from ldv_lab.series import TimeSeries

SEED = RandomSeed(2024)
NOISELESS = {"enabled": ()}


@pytest.fixture(scope="module")
def calibration():
    start = time.perf_counter()
    rows = harness.run_calibration_table(SEED, workers=1)
    return rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def calibration_noiseless():
    return harness.run_calibration_table(SEED, noise=NOISELESS, workers=1)


@pytest.fixture(scope="module")
def components():
    return harness.run_component_suite(SEED, workers=1)


# 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1)
@pytest.mark.slow
def test_calibration_sweep(calibration):
    rows, elapsed = calibration
    assert len(rows) == 11
    assert [r.tolerance for r in rows] == [0.30, 0.20] + [0.15] * 9
    for r, (f, a, tol) in zip(rows, CALIBRATION_POINTS):
        assert (r.applied_frequency, r.applied_displacement) == (f, a)
        assert abs(r.indicated_frequency - f) <= tol, r
        assert r.passed
    assert elapsed < 120, f"calibration took {elapsed:.1f} s"


# 2 -----------------------------------------------------------------------

@pytest.mark.criterion(2)
@pytest.mark.slow
def test_component_suite(components):
    assert [(r.component, r.truth_frequency) for r in components] == [
        ("pad", 6.0), ("air filter", 32.0), ("gear", 76.0), ("gear variant", 85.0),
    ]
    for r in components:
        assert abs(r.ldv_error) <= 0.15, r
        assert abs(r.accel_error) <= 0.5, r
        assert abs(r.ldv_frequency - r.accel_frequency) <= 1.0, r
        assert r.passed


# 3 -----------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.slow
def test_air_filter_40hz():
    r = harness.run_scenario(harness.air_filter_40hz(SEED))
    assert 39.85 <= r.ldv_frequency <= 40.15
    assert abs(r.accel_frequency - 40.0) <= 0.5


# 4 -----------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.slow
def test_amplitude_round_trip_noiseless(calibration_noiseless):
    for r in calibration_noiseless:
        assert r.indicated_displacement == pytest.approx(r.applied_displacement, rel=0.01), r
        assert abs(r.indicated_frequency - r.applied_frequency) < 0.01, r


@pytest.mark.criterion(4)
@pytest.mark.slow
def test_amplitude_round_trip_default_noise(calibration):
    rows, _ = calibration
    for r in rows:
        assert r.indicated_displacement == pytest.approx(r.applied_displacement, rel=0.05), r


# 5 -----------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_shot_and_thermal_rms():
    fs, n = 2e6, 1_000_000
    det = DetectorConfig(sample_rate=fs)
    model = NoiseModel(NoiseConfig(enabled={"shot", "thermal"}), det, 6e-4, RandomSeed(1), n)
    shot = np.sqrt(np.mean(model.shot(0, n) ** 2))
    thermal = np.sqrt(np.mean(model.thermal(0, n) ** 2))
    assert shot == pytest.approx(math.sqrt(2 * 1.602176634e-19 * 6e-4 * fs / 2), rel=0.01)
    assert thermal == pytest.approx(math.sqrt(4 * 1.380649e-23 * 290 * (fs / 2) / 50), rel=0.01)


@pytest.mark.criterion(5)
@pytest.mark.parametrize("beta", [0.8, 1.0, 1.2])
def test_flicker_slope(beta):
    fs, n = 1e6, 1 << 20
    x = noise.gen_flicker_noise(1e-3, NoiseConfig(flicker_beta=beta), n, fs, RandomSeed(2)).samples
    f, p = welch(x, fs=fs, nperseg=1 << 15)
    sel = (f >= 200) & (f <= 20e3)
    slope = np.polyfit(np.log10(f[sel]), np.log10(p[sel]), 1)[0]
    assert slope == pytest.approx(-beta, abs=0.1)


@pytest.mark.criterion(5)
def test_speckle_ks():
    cfg = NoiseConfig(enabled={"speckle"}, speckle_correlation_time=1e-3)
    m = noise.gen_speckle_multiplier(cfg, 100_000, 1e3, RandomSeed(3)).samples
    assert stats.kstest(m, "expon").statistic < 0.01


@pytest.mark.criterion(5)
def test_default_dominance():
    prof = MotionProfile.sinusoid(4.15e-3, 20.0)
    plan = optics.plan_carrier(prof)
    opt = OpticalConfig(bragg_shift=plan.bragg_shift)
    det = DetectorConfig(sample_rate=plan.sample_rate)
    n = 1 << 20
    dc = det.responsivity * opt.dc_intensity
    clean = optics.detector_current_range(prof, opt, det, 0, n, 2.0)
    c = NoiseModel(NoiseConfig(), det, dc, RandomSeed(4), n).components(clean)

    def rms(x):
        return np.sqrt(np.mean(x ** 2))

    assert rms(c["shot"] + c["thermal"]) > rms(c["flicker"] + c["speckle"])


# 6 -----------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("fn, part", [(np.sin, "imag"), (np.cos, "real")])
def test_fft_line_pairs(fn, part):
    n, k = 2048, 101
    X = dsp.dft(TimeSeries(1.0, fn(2 * np.pi * k * np.arange(n) / n)))
    peak = abs(X[k])
    pos, neg = X[k], X[n - k]
    if part == "imag":
        # sine: purely imaginary, opposite signs
        assert pos.imag == pytest.approx(-n / 2, rel=1e-12) and neg.imag == pytest.approx(n / 2, rel=1e-12)
        assert max(abs(pos.real), abs(neg.real)) < 1e-10 * peak
    else:
        # cosine: purely real, equal signs
        assert pos.real == pytest.approx(n / 2, rel=1e-12) and neg.real == pytest.approx(n / 2, rel=1e-12)
        assert max(abs(pos.imag), abs(neg.imag)) < 1e-10 * peak
    assert np.delete(np.abs(X), [k, n - k]).max() < 1e-10 * peak


@pytest.mark.criterion(6)
def test_parseval():
    x = np.random.default_rng(6).standard_normal(40000)
    X = dsp.dft(TimeSeries(20e3, x))
    assert np.sum(x ** 2) == pytest.approx(np.sum(np.abs(X) ** 2) / x.size, rel=1e-9)


# 7 -----------------------------------------------------------------------

@pytest.mark.criterion(7)
def test_field_intensity_equivalence():
    g = np.random.default_rng(7)
    for _ in range(10):
        cfg = OpticalConfig(
            wavelength=g.uniform(400e-9, 1600e-9),
            bragg_shift=g.uniform(1e5, 1.5e6),
            mixing_efficiency=1.0,
            reflectivity=g.uniform(0.01, 1),
            intensity_measurement=g.uniform(1e-5, 1e-1),
            intensity_reference=g.uniform(1e-5, 1e-1),
            loss_reference=g.uniform(0.05, 1),
            loss_measurement=g.uniform(0.05, 1),
        )
        prof = MotionProfile.sinusoid(g.uniform(1e-7, 1e-5), g.uniform(5, 150))
        kin = motion.synth_kinematics(prof, 8e6, 0.005)
        e_ref, e_meas = optics.synth_fields(kin, cfg)
        intensity = optics.synth_detector_signal(kin, cfg, DetectorConfig(responsivity=1.0, sample_rate=8e6)).samples
        np.testing.assert_allclose(np.abs(e_meas + e_ref) ** 2, intensity, rtol=1e-12)


# 8 -----------------------------------------------------------------------

def _files(rows, directory, stem):
    return {fmt: report.emit_report(rows, fmt, directory / f"{stem}.{fmt}").read_bytes() for fmt in report.FORMATS}


@pytest.mark.criterion(8)
@pytest.mark.slow
def test_component_suite_byte_identical(tmp_path, components):
    again = harness.run_component_suite(SEED, workers=1)
    parallel = harness.run_component_suite(SEED, workers=2)
    first = _files(components, tmp_path, "a")
    assert _files(again, tmp_path, "b") == first
    assert _files(parallel, tmp_path, "c") == first


@pytest.mark.criterion(8)
@pytest.mark.slow
def test_calibration_parallel_matches_serial(tmp_path, calibration):
    rows, _ = calibration
    parallel = harness.run_calibration_table(SEED, workers=2)
    assert _files(parallel, tmp_path, "p") == _files(rows, tmp_path, "s")


# 9 -----------------------------------------------------------------------

@pytest.mark.criterion(9)
@given(st.floats(-50, 50), st.lists(st.floats(-3.14, 3.14), min_size=1, max_size=300))
def test_unwrap_identity(start, increments):
    theta = start + np.concatenate([[0.0], np.cumsum(increments)])
    out = demod.unwrap_phase(TimeSeries(1.0, np.angle(np.exp(1j * theta)))).samples
    shift = theta - out
    np.testing.assert_allclose(shift, 2 * np.pi * np.round(shift[0] / (2 * np.pi)), atol=1e-8)


@pytest.mark.criterion(9)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.integers(20, 200))
def test_henderson_cubic_reproduction(coefs, length):
    x = np.arange(length) / length
    y = np.polyval(coefs, x)
    out = dsp.henderson_smooth(TimeSeries(1.0, y), 13).samples
    np.testing.assert_allclose(out[6:-6], y[6:-6], atol=1e-9 * (1 + np.abs(y).max()))


@pytest.mark.criterion(9)
def test_henderson_center_weight():
    assert dsp.henderson_weights(13)[6] == pytest.approx(0.2402, abs=2e-4)


@pytest.mark.criterion(9)
@given(
    st.sampled_from([dsp.LOW, dsp.HIGH]),
    st.floats(300, 9000),
    st.floats(50, 500),
    st.floats(20, 100),
)
def test_fir_stopband(kind, cutoff, width, atten):
    fs = 20e3
    spec = dsp.FilterSpec(kind, (cutoff,), width, atten)
    try:
        taps = dsp.design_fir(spec, fs)
    except dsp.InvalidInputError:
        return  # transition band does not fit inside the Nyquist range
    (lo, hi), = spec.stopbands(fs)
    _, h = freqz(taps, worN=np.linspace(lo, hi, 5000), fs=fs)
    assert 20 * np.log10(np.abs(h).max()) <= -atten


@pytest.mark.criterion(9)
def test_peak_estimator_bias():
    fs, n = 20e3, 40000
    df = fs / n
    g = np.random.default_rng(9)
    t = np.arange(n) / fs
    for _ in range(100):
        f = (g.integers(8, n // 2 - 8) + g.uniform(-0.5, 0.5)) * df
        x = np.sin(2 * np.pi * f * t + g.uniform(0, 2 * np.pi)) + g.standard_normal(n) * math.sqrt(0.5e-3)
        est = dsp.peak_frequency(dsp.compute_spectrum(TimeSeries(fs, x)), (f - 4 * df, f + 4 * df))
        assert abs(est.frequency - f) / df < 0.01
