"""Array geometry, multipath ground truth and spherical-wave channel synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class UcaGeometry:
    """Uniform circular array in the x-y plane, centred at the origin."""

    radius: float
    element_count: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if self.element_count < 3:
            raise ValueError(f"a UCA needs at least 3 elements, got {self.element_count}")

    @property
    def element_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.element_count) / self.element_count

    @property
    def element_positions(self) -> np.ndarray:
        phi = self.element_angles
        r = self.radius
        return np.stack([r * np.cos(phi), r * np.sin(phi), np.zeros_like(phi)], axis=1)


@dataclass(frozen=True)
class FrequencyGrid:
    f_start: float
    f_stop: float
    count: int

    def __post_init__(self):
        if not (self.f_stop > self.f_start > 0):
            raise ValueError("frequency grid needs f_stop > f_start > 0")
        if self.count < 2:
            raise ValueError("frequency grid needs at least 2 points")

    @classmethod
    def centred(cls, f_center: float, bandwidth: float, count: int) -> "FrequencyGrid":
        return cls(f_center - bandwidth / 2, f_center + bandwidth / 2, count)

    @property
    def spacing(self) -> float:
        return (self.f_stop - self.f_start) / (self.count - 1)

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.spacing * np.arange(self.count)

    @property
    def bandwidth(self) -> float:
        return self.f_stop - self.f_start

    @property
    def center(self) -> float:
        return 0.5 * (self.f_start + self.f_stop)

    @property
    def max_delay(self) -> float:
        """Unambiguous delay range ``1/df`` of the sampled response."""
        return 1.0 / self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ScattererLocation:
    """Spherical position of a scatterer: distance (m), elevation and azimuth (rad)."""

    distance: float
    elevation: float
    azimuth: float

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError("scatterer distance must be > 0")
        if not 0.0 < self.elevation < math.pi:
            raise ValueError("elevation must lie in (0, pi)")
        if not 0.0 <= self.azimuth < 2 * math.pi:
            raise ValueError("azimuth must lie in [0, 2 pi)")

    @property
    def cartesian(self) -> np.ndarray:
        d, th, ph = self.distance, self.elevation, self.azimuth
        return d * np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


@dataclass(frozen=True)
class PathTruth:
    amplitude: complex
    delay: float
    location: ScattererLocation

    def __post_init__(self):
        if not abs(self.amplitude) > 0:
            raise ValueError("path amplitude must be non-zero")
        if self.delay < 0:
            raise ValueError("path delay must be non-negative")

    @classmethod
    def from_db(cls, amp_db: float, delay: float, location: ScattererLocation,
                phase_deg: float = 0.0) -> "PathTruth":
        amp = 10 ** (amp_db / 20) * np.exp(1j * math.radians(phase_deg))
        return cls(complex(amp), delay, location)


@dataclass(frozen=True, eq=False)
class ElementChannelMatrix:
    """Per-element frequency responses, shape ``(P, L)``."""

    values: np.ndarray
    geometry: UcaGeometry
    grid: FrequencyGrid
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        expected = (self.geometry.element_count, self.grid.count)
        if v.shape != expected:
            raise ValueError(f"channel matrix has shape {v.shape}, expected {expected}")
        if not np.all(np.isfinite(v)):
            raise ValueError("channel matrix contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "ElementChannelMatrix":
        return ElementChannelMatrix(np.array(values, dtype=complex), self.geometry, self.grid)


def _check_outside(geom: UcaGeometry, loc: ScattererLocation) -> None:
    if not loc.distance > geom.radius:
        raise ValueError(f"scatterer at {loc.distance} m lies inside the array radius {geom.radius} m")


def element_distance(geom: UcaGeometry, p: int, loc: ScattererLocation) -> float:
    """Exact distance from scatterer to element ``p`` (0-based)."""
    if not 0 <= p < geom.element_count:
        raise IndexError(f"element index {p} outside [0, {geom.element_count})")
    _check_outside(geom, loc)
    return float(_distances(geom, loc)[p])


def _distances(geom: UcaGeometry, loc: ScattererLocation) -> np.ndarray:
    r, d = geom.radius, loc.distance
    c = np.cos(loc.azimuth - geom.element_angles)
    sq = d * d + r * r - 2.0 * r * d * math.sin(loc.elevation) * c
    return np.sqrt(np.maximum(sq, 0.0))


def _excess(geom: UcaGeometry, loc: ScattererLocation) -> tuple[np.ndarray, np.ndarray]:
    """Element distances and ``d - D`` without the cancellation of a direct subtraction."""
    r, d = geom.radius, loc.distance
    num = r * r - 2.0 * r * d * math.sin(loc.elevation) * np.cos(loc.azimuth - geom.element_angles)
    dist = np.sqrt(np.maximum(d * d + num, 0.0))
    return dist, num / (dist + d)


def relative_excess_distance(geom: UcaGeometry, p: int, loc: ScattererLocation) -> float:
    """Element distance minus the distance to the array centre."""
    element_distance(geom, p, loc)
    return float(_excess(geom, loc)[1][p])


def _delay_phase(freqs: np.ndarray, delay: float) -> np.ndarray:
    """``2 pi f tau`` reduced modulo ``2 pi`` in extended precision (thousands of cycles)."""
    cycles = np.asarray(freqs, dtype=np.longdouble) * np.longdouble(delay)
    return 2.0 * np.pi * np.asarray(cycles - np.floor(cycles), dtype=float)


def near_field_residual(geom: UcaGeometry, p: int, loc: ScattererLocation) -> float:
    """Part of the excess distance not captured by the plane-wave term ``-r sin(theta) cos(phi - phi_p)``."""
    phi_p = geom.element_angles[p]
    plane = -geom.radius * math.sin(loc.elevation) * math.cos(loc.azimuth - phi_p)
    return relative_excess_distance(geom, p, loc) - plane


def path_response(geom: UcaGeometry, freqs: np.ndarray, path: PathTruth) -> np.ndarray:
    """Spherical-wave response of one path, shape ``(P, len(freqs))``."""
    _check_outside(geom, path.location)
    freqs = np.asarray(freqs, dtype=float)
    d, excess = _excess(geom, path.location)
    gain = path.location.distance / d
    k = 2.0 * np.pi * freqs / SPEED_OF_LIGHT
    phase = np.outer(excess, k) + _delay_phase(freqs, path.delay)
    return path.amplitude * gain[:, None] * np.exp(-1j * phase)


def plane_wave_response(geom: UcaGeometry, freqs: np.ndarray, amplitude: complex, delay: float,
                        azimuth: float, elevation: float = math.pi / 2) -> np.ndarray:
    """Far-field response: unit element gain, excess distance ``-r sin(theta) cos(phi - phi_p)``."""
    freqs = np.asarray(freqs, dtype=float)
    k = 2.0 * np.pi * freqs / SPEED_OF_LIGHT
    proj = geom.radius * math.sin(elevation) * np.cos(azimuth - geom.element_angles)
    phase = np.outer(-proj, k) + _delay_phase(freqs, delay)
    return amplitude * np.exp(-1j * phase)


def _path_key(path: PathTruth) -> tuple:
    loc = path.location
    amp = complex(path.amplitude)
    return (path.delay, loc.azimuth, loc.elevation, loc.distance, amp.real, amp.imag)


def synthesize_channel(geom: UcaGeometry, grid: FrequencyGrid, paths: Sequence[PathTruth],
                       noise_floor_db: Optional[float] = None,
                       seed: Optional[int] = None) -> ElementChannelMatrix:
    """Superpose exact spherical-wave responses of ``paths`` over the array.

    ``noise_floor_db`` adds circular complex white noise whose mean power is
    that many dB relative to the strongest path power (e.g. ``-30``).
    """
    if not paths:
        raise ValueError("at least one path required")
    limit = grid.max_delay
    for n, path in enumerate(paths):
        if not path.delay < limit:
            raise ValueError(
                f"path {n + 1}: delay {path.delay * 1e9:.3f} ns exceeds the unambiguous "
                f"range {limit * 1e9:.3f} ns")
    freqs = grid.frequencies
    h = np.zeros((geom.element_count, grid.count), dtype=complex)
    # Canonical summation order: the result does not depend on how the list is ordered.
    for path in sorted(paths, key=_path_key):
        h += path_response(geom, freqs, path)
    if noise_floor_db is not None:
        rng = np.random.default_rng(seed)
        strongest = max(abs(p.amplitude) for p in paths) ** 2
        power = strongest * 10 ** (noise_floor_db / 10)
        noise = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
        h += noise * math.sqrt(power / 2)
    return ElementChannelMatrix(h, geom, grid)


def friis_path_loss_db(distance: float, frequency: float) -> float:
    """Free-space gain between isotropic antennas, ``-20 log10(4 pi d f / c)``."""
    if not (distance > 0 and frequency > 0):
        raise ValueError("distance and frequency must be positive")
    return -20.0 * math.log10(4.0 * math.pi * distance * frequency / SPEED_OF_LIGHT)


def fraunhofer_distance(geom: UcaGeometry, frequency: float) -> float:
    aperture = 2.0 * geom.radius
    return 2.0 * aperture ** 2 * frequency / SPEED_OF_LIGHT
