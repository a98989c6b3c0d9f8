"""Successive-cancellation multipath estimation on the beamspace PADP.

Each iteration forms the FIBF power-angle-delay profile of the current
element responses, takes its global peak as the next path's delay and
azimuth, reads that path's amplitude from the *original* PADP, rebuilds the
path over the array under a plane-wave model, masks the cells of the
per-element impulse responses it dominates, and transforms back.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .beamform import PadpGrid, SteeringConfig, fibf_padp
from .numerics import DelayGrid, find_global_peak, forward_ft, inverse_ft
from .scene import (ElementChannelMatrix, FrequencyGrid, PathTruth, ScattererLocation,
                    UcaGeometry, plane_wave_response, synthesize_channel)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CancellationConfig:
    """Stopping rule, trajectory-mask depth and beamforming settings.

    ``dynamic_range_db`` stops the search once a detected amplitude falls that
    far below the first (strongest) one; ``label_threshold_db`` sets how far
    below a path's amplitude its synthetic impulse response is still masked.
    """

    dynamic_range_db: float = 40.0
    label_threshold_db: float = 45.0
    max_iterations: int = 50
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    amplitude_source: str = "original"
    stop_rule: str = "detection"
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.dynamic_range_db < 0:
            raise ValueError("dynamic_range_db must be >= 0")
        if not self.label_threshold_db > 0:
            raise ValueError("label_threshold_db must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.amplitude_source not in ("original", "updated"):
            raise ValueError("amplitude_source must be 'original' or 'updated'")
        if self.stop_rule not in ("detection", "amplitude"):
            raise ValueError("stop_rule must be 'detection' or 'amplitude'")


@dataclass(frozen=True)
class PathEstimate:
    amplitude: complex
    azimuth: float
    delay: float
    iteration: int
    delay_index: int = 0
    azimuth_index: int = 0

    @property
    def magnitude(self) -> float:
        return abs(self.amplitude)

    @property
    def power_db(self) -> float:
        return 20.0 * math.log10(self.magnitude)


@dataclass
class IterationRecord:
    estimate: PathEstimate
    residual_energy: float
    padp: Optional[PadpGrid] = None
    cir: Optional[np.ndarray] = None


@dataclass
class EstimationTrace:
    initial_energy: float
    records: list = field(default_factory=list)
    stop_reason: str = ""
    # Rejected final detection, kept for diagnostics.
    discarded: Optional[PathEstimate] = None
    initial_cir: Optional[np.ndarray] = None

    @property
    def energies(self) -> list:
        return [self.initial_energy] + [r.residual_energy for r in self.records]


def synthesize_detected_path(geom: UcaGeometry, grid: FrequencyGrid, est: PathEstimate) -> ElementChannelMatrix:
    """Plane-wave, in-plane reconstruction of a detected path over the array."""
    if not est.magnitude > 0:
        raise ValueError("detected path amplitude must be non-zero")
    vals = plane_wave_response(geom, grid.frequencies, est.amplitude, est.delay, est.azimuth)
    return ElementChannelMatrix(vals, geom, grid)


def build_label_vector(synthetic_cir: np.ndarray, amplitude: float, threshold_db: float) -> np.ndarray:
    """0 where ``|h_hat| > amplitude * 10**(-threshold_db / 20)``, 1 elsewhere."""
    if not amplitude > 0:
        raise ValueError("amplitude must be > 0")
    level = amplitude * 10.0 ** (-threshold_db / 20.0)
    return (np.abs(synthetic_cir) <= level).astype(np.int8)


def cancel_path(current_cir: np.ndarray, labels: np.ndarray) -> np.ndarray:
    current_cir = np.asarray(current_cir)
    labels = np.asarray(labels)
    if current_cir.shape != labels.shape:
        raise ValueError(f"label shape {labels.shape} does not match CIR shape {current_cir.shape}")
    return np.where(labels != 0, current_cir, 0)


def residual_power_rate(original_cir: np.ndarray, cancelled_cir: np.ndarray) -> float:
    """Remaining CIR energy after cancellation, in percent."""
    original_cir = np.asarray(original_cir)
    cancelled_cir = np.asarray(cancelled_cir)
    if original_cir.shape != cancelled_cir.shape:
        raise ValueError("CIR shapes differ")
    total = float(np.sum(np.abs(original_cir) ** 2))
    if total == 0.0:
        raise ValueError("original CIR has zero energy")
    return 100.0 * float(np.sum(np.abs(cancelled_cir) ** 2)) / total


def _delay_transform(values: np.ndarray, grid: FrequencyGrid, delays: DelayGrid, taper) -> np.ndarray:
    return inverse_ft(values, delays.count, f_start=grid.f_start, df=grid.spacing, axis=1, window=taper)


def estimate_paths(channel: ElementChannelMatrix,
                   config: CancellationConfig = CancellationConfig()) -> tuple[list, EstimationTrace]:
    """Detect paths in descending order of power until the dynamic range is exhausted."""
    geom, grid, steer = channel.geometry, channel.grid, config.steering
    delays = DelayGrid.for_spectrum(grid.count, grid.spacing, steer.zero_pad_factor)
    taper = steer.taper(grid.count)
    azimuths = steer.azimuths

    current = np.array(channel.values)
    cir = _delay_transform(current, grid, delays, taper)
    trace = EstimationTrace(initial_energy=float(np.sum(np.abs(cir) ** 2)))
    if config.keep_snapshots:
        trace.initial_cir = cir.copy()

    estimates = []
    original = None
    alpha_max = None
    floor = 10.0 ** (-config.dynamic_range_db / 20.0)
    for n in range(1, config.max_iterations + 1):
        padp = fibf_padp(channel.with_values(current), steer)
        mag = padp.magnitude
        if original is None:
            if not np.any(mag > 0):
                raise ValueError("PADP of the input channel is identically zero")
            original = padp
        row, col, peak = find_global_peak(mag)
        if peak == 0.0:
            trace.stop_reason = "residual exhausted"
            break
        source = original if config.amplitude_source == "original" else padp
        est = PathEstimate(complex(source.values[row, col]), float(azimuths[col]),
                           float(delays.delays[row]), n, row, col)
        strength = peak if config.stop_rule == "detection" else est.magnitude
        if alpha_max is None:
            alpha_max = strength
        elif not strength > alpha_max * floor:
            trace.discarded = est
            trace.stop_reason = "below dynamic range"
            break
        if not est.magnitude > 0:
            trace.discarded = est
            trace.stop_reason = "zero amplitude"
            break
        estimates.append(est)
        log.debug("path %d: %.2f dB, %.2f deg, %.3f ns", n, est.power_db,
                  math.degrees(est.azimuth), est.delay * 1e9)

        synth = plane_wave_response(geom, grid.frequencies, est.amplitude, est.delay, est.azimuth)
        labels = build_label_vector(_delay_transform(synth, grid, delays, taper), est.magnitude,
                                    config.label_threshold_db)
        cir = cancel_path(cir, labels)
        current = forward_ft(cir, grid.count, f_start=grid.f_start, df=grid.spacing, axis=1, window=taper)
        trace.records.append(IterationRecord(
            est, float(np.sum(np.abs(cir) ** 2)),
            padp if config.keep_snapshots else None,
            cir.copy() if config.keep_snapshots else None))
    else:
        trace.stop_reason = "max iterations"
    return estimates, trace


def reconstruct_channel(geom: UcaGeometry, grid: FrequencyGrid, estimates: Sequence[PathEstimate]) -> np.ndarray:
    """Sum of plane-wave reconstructions of all detected paths, shape ``(P, L)``."""
    out = np.zeros((geom.element_count, grid.count), dtype=complex)
    for est in estimates:
        out += plane_wave_response(geom, grid.frequencies, est.amplitude, est.delay, est.azimuth)
    return out


@dataclass(frozen=True)
class RpPoint:
    bandwidth: float
    distance: float
    elevation: float
    rate: float


def single_path_rp(geom: UcaGeometry, grid: FrequencyGrid, distance: float, elevation: float,
                   config: CancellationConfig, azimuth: float = math.pi, delay: float = 0.0) -> float:
    """Residual power rate after cancelling the one detected path of a single-path scene."""
    path = PathTruth(1.0, delay, ScattererLocation(distance, elevation, azimuth))
    channel = synthesize_channel(geom, grid, [path])
    one = replace(config, max_iterations=1, keep_snapshots=True)
    _, trace = estimate_paths(channel, one)
    return residual_power_rate(trace.initial_cir, trace.records[0].cir)


def rp_sweep(geom: UcaGeometry, f_center: float, bandwidths: Sequence[float], distances: Sequence[float],
             elevations: Sequence[float], config: CancellationConfig = CancellationConfig(),
             points: int = 750, azimuth: float = math.pi) -> list:
    """Residual power rate over a bandwidth x distance x elevation grid of single-path scenes."""
    out = []
    for b in bandwidths:
        grid = FrequencyGrid.centred(f_center, b, points)
        for d in distances:
            for th in elevations:
                rate = single_path_rp(geom, grid, d, th, config, azimuth)
                out.append(RpPoint(b, d, th, rate))
    return out
