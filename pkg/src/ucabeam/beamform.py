"""Element-space and phase-mode (beamspace) beamforming over a UCA, and PADPs.

Two beamformers are provided:

* classical beamforming (CBF) with plane-wave steering weights
  ``w_p = exp(-j k r cos(phi - phi_p)) / P``, kept as a diagnostic because its
  main lobe collapses in the near field;
* the frequency-invariant beamformer (FIBF): a spatial DFT over the elements
  into phase modes, a per-mode, per-frequency compensation filter, then a DFT
  back over modes to azimuth.

Both azimuth sums run on uniform grids and are evaluated with FFTs; the naive
sums live in the test suite as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import DelayGrid, bessel_j_and_prime, inverse_ft, raised_cosine
from .scene import SPEED_OF_LIGHT, ElementChannelMatrix, FrequencyGrid, UcaGeometry

COMPENSATIONS = ("modified", "classic")
WINDOWS = {None: None, "none": None, "hann": 0.0, "hamming": 0.08}

_DEGENERATE = 1e-12


@dataclass(frozen=True)
class SteeringConfig:
    """Azimuth grid, delay padding and mode-cap choices for beamforming.

    ``window`` selects the raised-cosine taper applied across frequency
    before the delay transform (``"hann"``, ``"hamming"`` or ``"none"``).
    The Hann default keeps delay sidelobes of a cancelled path out of the
    residual; a rectangular window leaves sinc leakage of several percent.
    """

    azimuth_count: int = 720
    zero_pad_factor: int = 4
    mode_cap: Optional[int] = None
    window: Optional[str] = "hann"
    compensation: str = "modified"

    def __post_init__(self):
        if self.azimuth_count < 8:
            raise ValueError("azimuth_count must be >= 8")
        if self.zero_pad_factor < 1:
            raise ValueError("zero_pad_factor must be >= 1")
        if self.mode_cap is not None and self.mode_cap < 0:
            raise ValueError("mode_cap must be non-negative")
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; choose from none, hann, hamming")
        if self.compensation not in COMPENSATIONS:
            raise ValueError(f"unknown compensation {self.compensation!r}")

    @property
    def azimuths(self) -> np.ndarray:
        return azimuth_axis(self.azimuth_count)

    def taper(self, n: int) -> Optional[np.ndarray]:
        pedestal = WINDOWS[self.window]
        return None if pedestal is None else raised_cosine(n, pedestal)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Compensated phase-mode responses, rows ordered ``m = -M .. M``."""

    values: np.ndarray
    max_mode: int
    grid: FrequencyGrid

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.max_mode, self.max_mode + 1)

    def mode(self, m: int) -> np.ndarray:
        return self.values[m + self.max_mode]


@dataclass(frozen=True, eq=False)
class PadpGrid:
    """Complex power-angle-delay profile, rows are delays and columns azimuths."""

    values: np.ndarray
    delay_axis: DelayGrid
    azimuths: np.ndarray

    @property
    def delays(self) -> np.ndarray:
        return self.delay_axis.delays

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def power_db(self, floor_db: float = -300.0) -> np.ndarray:
        mag = self.magnitude
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag)
        return np.maximum(db, floor_db)


def azimuth_axis(count: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(count) / count


DEFAULT_MIN_RANGE = 3.0


def aperture_mode_cap(geom: UcaGeometry, grid: FrequencyGrid) -> int:
    """Aperture and sampling limit ``min(floor(k_min r), floor((P - 1) / 2))``."""
    k_min = 2.0 * np.pi * grid.f_start / SPEED_OF_LIGHT
    return int(min(math.floor(k_min * geom.radius), (geom.element_count - 1) // 2))


def near_field_mode_cap(f_low: float, min_range: float = DEFAULT_MIN_RANGE) -> int:
    """Largest mode whose near-field phase ``m**2 / (2 k D)`` stays within pi/2.

    A spherical wavefront from range ``D`` adds roughly that quadratic phase to
    compensated mode ``m``; modes beyond the cap defocus the beam. The phase
    is largest at the lowest frequency and the shortest range.
    """
    k = 2.0 * np.pi * f_low / SPEED_OF_LIGHT
    return int(math.floor(math.sqrt(math.pi * k * min_range)))


def default_mode_cap(geom: UcaGeometry, grid: FrequencyGrid, min_range: float = DEFAULT_MIN_RANGE) -> int:
    """Aperture/sampling cap further limited by the near-field cap for ``min_range``."""
    return min(aperture_mode_cap(geom, grid), near_field_mode_cap(grid.f_start, min_range))


# ---------------------------------------------------------------------------
# Classical beamforming
# ---------------------------------------------------------------------------


def cbf_weights(geom: UcaGeometry, frequency: float, azimuth: float) -> np.ndarray:
    k = 2.0 * np.pi * frequency / SPEED_OF_LIGHT
    return np.exp(-1j * k * geom.radius * np.cos(azimuth - geom.element_angles)) / geom.element_count


def cbf_pattern_array(values: np.ndarray, geom: UcaGeometry, freqs: np.ndarray,
                      azimuths: np.ndarray) -> np.ndarray:
    """``sum_p w_p(f, phi) H_p(f)`` for ``values`` of shape ``(P, F)``; returns ``(F, A)``."""
    values = np.asarray(values, dtype=complex)
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    azimuths = np.asarray(azimuths, dtype=float)
    P = geom.element_count
    kr = 2.0 * np.pi * freqs * geom.radius / SPEED_OF_LIGHT
    out = np.empty((freqs.size, azimuths.size), dtype=complex)
    circulant = azimuths.size == P and np.allclose(azimuths, geom.element_angles)
    if circulant:
        # Weights depend only on phi_a - phi_p: a circular cross-correlation.
        cos_lag = np.cos(geom.element_angles)
        spec_h = np.fft.fft(values, axis=0)
        for i, z in enumerate(kr):
            g = np.exp(-1j * z * cos_lag) / P
            out[i] = np.fft.ifft(np.fft.fft(g) * spec_h[:, i])
        return out
    cos_ap = np.cos(azimuths[:, None] - geom.element_angles[None, :])
    for i, z in enumerate(kr):
        out[i] = np.exp(-1j * z * cos_ap) @ values[:, i] / P
    return out


def cbf_beam_pattern(channel: ElementChannelMatrix, config: SteeringConfig = SteeringConfig()) -> np.ndarray:
    """Classical beamformer output over frequency and azimuth, shape ``(L, A)``."""
    return cbf_pattern_array(channel.values, channel.geometry, channel.grid.frequencies, config.azimuths)


# ---------------------------------------------------------------------------
# Phase-mode beamforming
# ---------------------------------------------------------------------------


def compensation_filters(modes, freqs, radius: float, kind: str = "modified") -> np.ndarray:
    """Compensation gains ``G_m(f)`` on the grid ``modes x freqs``.

    ``kind="modified"`` inverts ``0.5 j^m [J_m(kr) - j J'_m(kr)]`` (valid for
    paths off the array plane); ``kind="classic"`` inverts ``j^m J_m(kr)``.
    """
    if kind not in COMPENSATIONS:
        raise ValueError(f"unknown compensation {kind!r}")
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    kr = 2.0 * np.pi * freqs * radius / SPEED_OF_LIGHT
    if np.any(kr <= 0):
        raise ValueError("compensation filter needs kr > 0")
    j, jp = bessel_j_and_prime(modes, kr)
    jm = (1j ** (modes % 4))[:, None]
    if kind == "modified":
        core = j - 1j * jp
        scale = 0.5
    else:
        core = j.astype(complex)
        scale = 1.0
    bad = np.abs(core) < _DEGENERATE
    if np.any(bad):
        m_bad = modes[np.nonzero(bad)[0][0]]
        raise ValueError(f"compensation filter degenerate for mode {m_bad}; lower the mode cap")
    return 1.0 / (scale * jm * core)


def compensation_filter(m: int, frequency: float, radius: float, kind: str = "modified") -> complex:
    return complex(compensation_filters([m], [frequency], radius, kind)[0, 0])


def mode_transform_array(values: np.ndarray, geom: UcaGeometry, freqs: np.ndarray, max_mode: int,
                         kind: str = "modified") -> np.ndarray:
    """``(1/P) G_m(f) sum_p exp(j m phi_p) H_p(f)`` for ``m = -M..M``; returns ``(2M+1, F)``."""
    P = geom.element_count
    if 2 * max_mode + 1 > P:
        raise ValueError(f"2M+1 = {2 * max_mode + 1} exceeds the element count {P}")
    values = np.asarray(values, dtype=complex)
    modes = np.arange(-max_mode, max_mode + 1)
    # ifft over elements gives (1/P) sum_p H_p exp(+j 2 pi m p / P).
    spatial = np.fft.ifft(values, axis=0)[modes % P]
    return spatial * compensation_filters(modes, freqs, geom.radius, kind)


def phase_mode_transform(channel: ElementChannelMatrix, max_mode: Optional[int] = None,
                         kind: str = "modified") -> ModeSpectrum:
    if max_mode is None:
        max_mode = default_mode_cap(channel.geometry, channel.grid)
    vals = mode_transform_array(channel.values, channel.geometry, channel.grid.frequencies, max_mode, kind)
    return ModeSpectrum(vals, max_mode, channel.grid)


def fibf_pattern_array(mode_values: np.ndarray, azimuth_count: int) -> np.ndarray:
    """``(1/(2M+1)) sum_m exp(-j m phi_a) H_m(f)`` on ``phi_a = 2 pi a / A``; returns ``(F, A)``."""
    mode_values = np.asarray(mode_values, dtype=complex)
    n_modes = mode_values.shape[0]
    max_mode = (n_modes - 1) // 2
    modes = np.arange(-max_mode, max_mode + 1)
    bins = np.zeros((azimuth_count, mode_values.shape[1]), dtype=complex)
    # Modes that alias onto the same bin share an identical steering phase.
    np.add.at(bins, modes % azimuth_count, mode_values)
    return np.fft.fft(bins, axis=0).T / n_modes


def fibf_beam_pattern(modes: ModeSpectrum, config: SteeringConfig = SteeringConfig()) -> np.ndarray:
    return fibf_pattern_array(modes.values, config.azimuth_count)


def compute_padp(beamspace: np.ndarray, grid: FrequencyGrid,
                 config: SteeringConfig = SteeringConfig()) -> PadpGrid:
    """Delay transform of each azimuth column of an ``(L, A)`` beamspace spectrum."""
    beamspace = np.asarray(beamspace, dtype=complex)
    if beamspace.shape[0] != grid.count:
        raise ValueError("beamspace rows must match the frequency grid")
    delays = DelayGrid.for_spectrum(grid.count, grid.spacing, config.zero_pad_factor)
    vals = inverse_ft(beamspace, delays.count, f_start=grid.f_start, df=grid.spacing,
                      axis=0, window=config.taper(grid.count))
    return PadpGrid(vals, delays, azimuth_axis(beamspace.shape[1]))


def mode_cap_for(channel: ElementChannelMatrix, config: SteeringConfig) -> int:
    if config.mode_cap is None:
        return default_mode_cap(channel.geometry, channel.grid)
    return config.mode_cap


def fibf_padp(channel: ElementChannelMatrix, config: SteeringConfig = SteeringConfig()) -> PadpGrid:
    """Phase-mode transform, FIBF and delay transform in one call."""
    modes = phase_mode_transform(channel, mode_cap_for(channel, config), config.compensation)
    return compute_padp(fibf_beam_pattern(modes, config), channel.grid, config)


def cbf_padp(channel: ElementChannelMatrix, config: SteeringConfig = SteeringConfig()) -> PadpGrid:
    return compute_padp(cbf_beam_pattern(channel, config), channel.grid, config)


# ---------------------------------------------------------------------------
# Single-frequency unit patterns
# ---------------------------------------------------------------------------


def single_frequency_mode_cap(geom: UcaGeometry, frequency: float,
                              min_range: float = DEFAULT_MIN_RANGE) -> int:
    kr = 2.0 * np.pi * frequency * geom.radius / SPEED_OF_LIGHT
    aperture = int(min(math.floor(kr), (geom.element_count - 1) // 2))
    return min(aperture, near_field_mode_cap(frequency, min_range))


def unit_patterns(geom: UcaGeometry, frequency: float, element_response: np.ndarray,
                  azimuth_count: int = 720, max_mode: Optional[int] = None,
                  kind: str = "modified") -> tuple[np.ndarray, np.ndarray]:
    """CBF and FIBF patterns over azimuth for one frequency and a ``(P,)`` response."""
    h = np.asarray(element_response, dtype=complex).reshape(-1, 1)
    if max_mode is None:
        max_mode = single_frequency_mode_cap(geom, frequency)
    az = azimuth_axis(azimuth_count)
    cbf = cbf_pattern_array(h, geom, [frequency], az)[0]
    modes = mode_transform_array(h, geom, [frequency], max_mode, kind)
    fibf = fibf_pattern_array(modes, azimuth_count)[0]
    return cbf, fibf
