import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucabeam.beamform import (SteeringConfig, aperture_mode_cap, cbf_beam_pattern, cbf_padp,
                              cbf_pattern_array, cbf_weights, compensation_filter, compensation_filters,
                              compute_padp, default_mode_cap, fibf_padp, fibf_pattern_array,
                              mode_transform_array, phase_mode_transform, unit_patterns)
from ucabeam.numerics import DelayGrid
from ucabeam.scene import (SPEED_OF_LIGHT, ElementChannelMatrix, FrequencyGrid, PathTruth,
                           ScattererLocation, UcaGeometry, path_response, synthesize_channel)

UCA = UcaGeometry(0.5, 720)
F_C = 29e9


def single_path(D, theta=math.pi / 2, phi=math.pi, f=F_C, geom=UCA):
    return path_response(geom, [f], PathTruth(1.0, 0.0, ScattererLocation(D, theta, phi)))[:, 0]


def peak_db(pattern):
    return 20 * math.log10(np.max(np.abs(pattern)))


def random_channel(r, geom, grid):
    vals = r.standard_normal((geom.element_count, grid.count)) + 1j * r.standard_normal((geom.element_count, grid.count))
    return ElementChannelMatrix(vals, geom, grid)


# --- classical beamforming -----------------------------------------------------


def test_cbf_weights_basic():
    g = UcaGeometry(1e-12, 8)
    assert np.allclose(cbf_weights(g, F_C, 1.0), 1 / 8, atol=1e-12)
    w = cbf_weights(UcaGeometry(0.5, 8), F_C, math.pi)
    assert np.allclose(np.abs(w), 1 / 8)
    k = 2 * math.pi * F_C / SPEED_OF_LIGHT
    for p in range(8):
        ref = complex(mpmath.expj(-k * 0.5 * math.cos(math.pi - 2 * math.pi * p / 8))) / 8
        assert w[p] == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("n_az", [12, 7, 40])
def test_cbf_matches_naive_sum(rng, n_az):
    g = UcaGeometry(0.3, 12)
    freqs = np.array([28e9, 29.5e9])
    H = rng.standard_normal((12, 2)) + 1j * rng.standard_normal((12, 2))
    az = 2 * np.pi * np.arange(n_az) / n_az
    got = cbf_pattern_array(H, g, freqs, az)
    for i, f in enumerate(freqs):
        for a, phi in enumerate(az):
            ref = sum(cbf_weights(g, f, phi)[p] * H[p, i] for p in range(12))
            assert got[i, a] == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_cbf_far_field_unit_peak():
    cbf, _ = unit_patterns(UCA, F_C, single_path(1e6))
    a = np.abs(cbf)
    assert int(np.argmax(a)) == 360
    assert a[360] == pytest.approx(1.0, abs=1e-3)


def test_cbf_main_lobe_distorted_at_3m():
    cbf, _ = unit_patterns(UCA, F_C, single_path(3.0))
    a = np.abs(cbf)
    # Main-lobe centre sits well below the far-field unit peak.
    assert 20 * math.log10(a[360]) < -10


# --- compensation filters and the phase-mode transform ---------------------------


def test_compensation_filter_small_kr_limits():
    f = 1.0  # kr ~ 1e-8
    assert compensation_filter(0, f, 0.5) == pytest.approx(2.0, abs=1e-6)
    assert abs(compensation_filter(1, f, 0.5)) == pytest.approx(4.0, abs=1e-6)


def test_compensation_filter_high_precision():
    kr = 303.7
    f = kr * SPEED_OF_LIGHT / (2 * math.pi * 0.5)
    J = mpmath.besselj(100, kr)
    Jp = mpmath.besselj(100, kr, derivative=1)
    ref = 1 / complex(0.5 * (1j ** 100) * complex(J - 1j * Jp))
    assert compensation_filter(100, f, 0.5) == pytest.approx(ref, rel=1e-10)
    ref_classic = 1 / complex((1j ** 100) * J)
    assert compensation_filter(100, f, 0.5, "classic") == pytest.approx(ref_classic, rel=1e-10)


def test_compensation_filter_guards():
    f_zero = 2.404825557695773 * SPEED_OF_LIGHT / (2 * math.pi * 0.5)
    with pytest.raises(ValueError, match="degenerate"):
        compensation_filter(0, f_zero, 0.5, "classic")
    with pytest.raises(ValueError):
        compensation_filters([0], [0.0], 0.5)
    with pytest.raises(ValueError):
        compensation_filters([0], [1e9], 0.5, "other")


def test_mode_transform_matches_naive_sum(rng):
    g = UcaGeometry(0.2, 16)
    freqs = np.array([28e9, 30e9])
    H = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
    got = mode_transform_array(H, g, freqs, 5)
    for mi, m in enumerate(range(-5, 6)):
        for i, f in enumerate(freqs):
            s = sum(np.exp(1j * m * 2 * np.pi * p / 16) * H[p, i] for p in range(16)) / 16
            assert got[mi, i] == pytest.approx(s * compensation_filter(m, f, 0.2), rel=1e-12)


def test_mode_transform_zero_and_limits():
    g = UcaGeometry(0.2, 16)
    grid = FrequencyGrid(28e9, 30e9, 4)
    zero = ElementChannelMatrix(np.zeros((16, 4)), g, grid)
    assert not np.any(phase_mode_transform(zero, 7).values)
    with pytest.raises(ValueError, match="exceeds the element count"):
        phase_mode_transform(zero, 8)


def test_classic_filter_far_field_phase_law():
    grid = FrequencyGrid(28e9, 30e9, 3)
    k_min_r = 2 * math.pi * grid.f_start * UCA.radius / SPEED_OF_LIGHT
    M = int(0.9 * k_min_r)
    h = single_path(1e6, phi=math.pi / 3, f=F_C).reshape(-1, 1)
    modes = mode_transform_array(h, UCA, [F_C], M, "classic")[:, 0]
    m = np.arange(-M, M + 1)
    err = np.angle(modes * np.exp(-1j * m * math.pi / 3))
    assert np.max(np.abs(err)) <= 0.05
    assert np.max(np.abs(modes - np.exp(1j * m * math.pi / 3))) <= 5e-2


def test_modified_filter_far_field_oracle():
    # In-plane plane wave: the modified filter leaves 2 J_m / (J_m - j J'_m) on each mode.
    phi = 1.1
    h = single_path(1e6, phi=phi, f=F_C).reshape(-1, 1)
    M = 290
    modes = mode_transform_array(h, UCA, [F_C], M, "modified")[:, 0]
    kr = 2 * math.pi * F_C * UCA.radius / SPEED_OF_LIGHT
    for m in (-290, -200, -37, 0, 1, 5, 150, 289):
        J = mpmath.besselj(m, kr)
        Jp = mpmath.besselj(m, kr, derivative=1)
        ref = complex(mpmath.expj(m * phi) * 2 * J / (J - 1j * Jp))
        assert modes[m + M] == pytest.approx(ref, rel=1e-4, abs=1e-6)


# --- FIBF --------------------------------------------------------------------------


@pytest.mark.parametrize("A,M", [(64, 10), (16, 10), (7, 3)])
def test_fibf_matches_naive_sum(rng, A, M):
    X = rng.standard_normal((2 * M + 1, 3)) + 1j * rng.standard_normal((2 * M + 1, 3))
    got = fibf_pattern_array(X, A)
    for a in range(A):
        phi = 2 * np.pi * a / A
        ref = sum(np.exp(-1j * m * phi) * X[m + M] for m in range(-M, M + 1)) / (2 * M + 1)
        assert np.allclose(got[:, a], ref, rtol=1e-12, atol=1e-13)


def test_fibf_dirichlet_oracle():
    phi_n = math.pi
    M = 30
    _, fibf = unit_patterns(UCA, F_C, single_path(1e6, phi=phi_n), 720, M, "classic")
    az = 2 * np.pi * np.arange(720) / 720
    m = np.arange(-M, M + 1)
    ref = np.exp(1j * np.outer(phi_n - az, m)).sum(axis=1) / (2 * M + 1)
    assert np.max(np.abs(fibf - ref)) <= 5e-2


def test_zero_modes_zero_pattern():
    assert not np.any(fibf_pattern_array(np.zeros((9, 2)), 32))


DISTANCE_SET = [3, 5, 10, 30, 70, 193]


def peaks_over_distance():
    cbf_peaks, fibf_peaks = [], []
    for d in DISTANCE_SET:
        cbf, fibf = unit_patterns(UCA, F_C, single_path(d))
        cbf_peaks.append(20 * math.log10(abs(cbf[360])))
        fibf_peaks.append(peak_db(fibf))
    return cbf_peaks, fibf_peaks


def test_fibf_distance_invariance():
    _, fibf_peaks = peaks_over_distance()
    assert max(fibf_peaks) - min(fibf_peaks) <= 1.0
    assert abs(fibf_peaks[0] - fibf_peaks[-1]) <= 0.5


def test_cbf_spread_over_distance_set():
    cbf_peaks, _ = peaks_over_distance()
    assert max(cbf_peaks) - min(cbf_peaks) > 30.0, [round(v, 1) for v in cbf_peaks]


def test_cbf_deep_loss_in_dense_sweep():
    worst = min(20 * math.log10(abs(unit_patterns(UCA, F_C, single_path(d))[0][360]))
                for d in np.arange(15.0, 16.5, 0.05))
    assert worst < -35.0


def test_fibf_frequency_invariance():
    locs = []
    for f in (28e9, 29e9, 30e9):
        _, fibf = unit_patterns(UCA, f, single_path(1e6, phi=2.0, f=f), 720, aperture_cap(f))
        locs.append(int(np.argmax(np.abs(fibf))))
    target = round(2.0 / (2 * math.pi / 720))
    assert all(abs(i - target) <= 1 for i in locs)


def aperture_cap(f):
    return min(int(2 * math.pi * f * 0.5 / SPEED_OF_LIGHT), 74)


@pytest.mark.parametrize("theta_deg", [90, 75, 105, 60, 120])
def test_fibf_peak_location_and_level(theta_deg):
    step = 2 * math.pi / 720
    for d in (3, 5, 10, 70, 193):
        _, fibf = unit_patterns(UCA, F_C, single_path(d, theta=math.radians(theta_deg)))
        a = np.abs(fibf)
        assert abs(int(np.argmax(a)) * step - math.pi) <= step + 1e-12
        level = 20 * math.log10(a.max())
        assert -1.0 <= level <= 0.5, f"D={d} m: peak {level:+.2f} dB"


# --- PADP ----------------------------------------------------------------------------


def small_scene():
    g = UcaGeometry(0.05, 16)
    grid = FrequencyGrid(28e9, 30e9, 24)
    return g, grid


@given(seed=st.integers(0, 2**32 - 1), method=st.sampled_from(["cbf", "fibf"]),
       window=st.sampled_from(["hann", "none"]))
def test_padp_superposition(seed, method, window):
    r = np.random.default_rng(seed)
    g, grid = small_scene()
    a, b = random_channel(r, g, grid), random_channel(r, g, grid)
    ab = a.with_values(a.values + b.values)
    cfg = SteeringConfig(azimuth_count=32, window=window)
    fn = cbf_padp if method == "cbf" else fibf_padp
    lhs = fn(ab, cfg).values
    rhs = fn(a, cfg).values + fn(b, cfg).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(lhs))


def test_table1_padp_superposition(table1):
    cfg = SteeringConfig(azimuth_count=720)
    parts = [synthesize_channel(table1.geometry, table1.grid, [p]) for p in table1.truths]
    total = fibf_padp(synthesize_channel(table1.geometry, table1.grid, table1.truths), cfg).values
    summed = sum(fibf_padp(c, cfg).values for c in parts)
    assert np.max(np.abs(total - summed)) <= 1e-10 * np.max(np.abs(total))


@pytest.mark.parametrize("A", [16, 32])
def test_rotation_equivariance(A):
    g = UcaGeometry(0.05, 16)
    grid = FrequencyGrid(28e9, 30e9, 8)
    cfg = SteeringConfig(azimuth_count=A, mode_cap=7)
    step = A // 16

    def patterns(phi):
        ch = synthesize_channel(g, grid, [PathTruth(1.0, 0.0, ScattererLocation(2.0, 1.3, phi))])
        modes = phase_mode_transform(ch, 7)
        return cbf_beam_pattern(ch, cfg), fibf_pattern_array(modes.values, A)

    base_c, base_f = patterns(0.4)
    rot_c, rot_f = patterns(0.4 + 2 * math.pi / 16)
    assert np.max(np.abs(np.roll(base_c, step, axis=1) - rot_c)) <= 1e-10
    assert np.max(np.abs(np.roll(base_f, step, axis=1) - rot_f)) <= 1e-10


def test_padp_unit_path_peak():
    grid = FrequencyGrid(28e9, 30e9, 750)
    delays = DelayGrid.for_spectrum(grid.count, grid.spacing, 4)
    tau = 133 * delays.spacing
    ch = synthesize_channel(UCA, grid, [PathTruth(1.0, tau, ScattererLocation(1e6, math.pi / 2, math.pi))])
    padp = fibf_padp(ch)
    mag = padp.magnitude
    i, a = np.unravel_index(np.argmax(mag), mag.shape)
    assert (i, a) == (133, 360)
    assert mag[i, a] == pytest.approx(1.0, abs=0.05)
    # Back-lobe ridge on the opposite side, off the path delay.
    back = mag[:, 0]
    assert back.max() > 0.1 and int(np.argmax(back)) != 133


def test_compute_padp_shape_check():
    grid = FrequencyGrid(28e9, 30e9, 10)
    with pytest.raises(ValueError):
        compute_padp(np.zeros((9, 4)), grid)


def test_power_db_floor():
    grid = FrequencyGrid(28e9, 30e9, 4)
    padp = compute_padp(np.zeros((4, 8)), grid, SteeringConfig(azimuth_count=8))
    assert np.all(padp.power_db(-40.0) == -40.0)


# --- mode caps -----------------------------------------------------------------------


def test_aperture_mode_cap_examples():
    grid = FrequencyGrid(28e9, 30e9, 750)
    assert aperture_mode_cap(UCA, grid) == 293 == math.floor(2 * math.pi * 28e9 / SPEED_OF_LIGHT * 0.5)
    assert aperture_mode_cap(UcaGeometry(1e-6, 720), grid) == 0
    assert aperture_mode_cap(UcaGeometry(5.0, 5), grid) == 2


def test_default_mode_cap_near_field_limit():
    grid = FrequencyGrid(28e9, 30e9, 750)
    M = default_mode_cap(UCA, grid)
    k = 2 * math.pi * 28e9 / SPEED_OF_LIGHT
    assert M == 74
    assert M ** 2 / (2 * k * 3.0) <= math.pi / 2 < (M + 1) ** 2 / (2 * k * 3.0)
    assert default_mode_cap(UcaGeometry(5.0, 5), grid) == 2


@pytest.mark.parametrize("kind", ["modified", "classic"])
def test_mode_cap_safety(kind):
    grid = FrequencyGrid(28e9, 30e9, 750)
    caps = [default_mode_cap(UCA, grid)] + ([aperture_mode_cap(UCA, grid)] if kind == "modified" else [])
    for M in caps:
        G = compensation_filters(np.arange(-M, M + 1), grid.frequencies, UCA.radius, kind)
        assert np.max(np.abs(G)) <= 1e6


def test_steering_config_validation():
    with pytest.raises(ValueError):
        SteeringConfig(azimuth_count=4)
    with pytest.raises(ValueError):
        SteeringConfig(zero_pad_factor=0)
    with pytest.raises(ValueError):
        SteeringConfig(window="kaiser")
    with pytest.raises(ValueError):
        SteeringConfig(mode_cap=-1)
