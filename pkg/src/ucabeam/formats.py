"""Text formats: scenario files, ``#uca-cfr v1`` matrices and CSV exporters.

Files carry degrees and nanoseconds; everything is converted to radians and
seconds at this boundary.

Scenario files are sectioned ``key = value`` text::

    [geometry]
    radius_m = 0.5
    elements = 720

    [frequency]
    f_start_hz = 28e9
    f_stop_hz = 30e9
    points = 750

    [paths]
    path = amp_db=0, azimuth_deg=90, elevation_deg=90, distance_m=4.98, delay_ns=16.6

    [estimator]
    dynamic_range_db = 40

    [noise]
    snr_db = 30
    seed = 1

``#`` starts a comment. Each ``path`` line may also set ``phase_deg``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .beamform import PadpGrid, SteeringConfig
from .estimator import CancellationConfig, EstimationTrace, PathEstimate
from .scene import (ElementChannelMatrix, FrequencyGrid, PathTruth, ScattererLocation, UcaGeometry,
                    synthesize_channel)

CFR_MAGIC = "#uca-cfr v1"
_CFR_KEYS = ("radius_m", "elements", "f_start_hz", "f_stop_hz", "points")
_UNIFORM_RTOL = 1e-6

PathLike = Union[str, Path]


class FormatError(ValueError):
    """Malformed scenario or matrix file; the message names the line and key."""


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSpec:
    """One path as written in a scenario file (dB, degrees, metres, ns)."""

    amp_db: float
    azimuth_deg: float
    elevation_deg: float
    distance_m: float
    delay_ns: float
    phase_deg: float = 0.0

    def to_truth(self) -> PathTruth:
        loc = ScattererLocation(self.distance_m, math.radians(self.elevation_deg),
                                math.radians(self.azimuth_deg % 360.0))
        return PathTruth.from_db(self.amp_db, self.delay_ns * 1e-9, loc, self.phase_deg)


@dataclass(frozen=True)
class EstimatorSpec:
    dynamic_range_db: float = 40.0
    label_threshold_db: float = 45.0
    zero_pad: int = 4
    azimuth_count: int = 720
    mode_cap: Optional[int] = None
    max_iterations: int = 50
    window: str = "hann"

    def to_config(self) -> CancellationConfig:
        steer = SteeringConfig(self.azimuth_count, self.zero_pad, self.mode_cap, self.window)
        return CancellationConfig(self.dynamic_range_db, self.label_threshold_db,
                                  self.max_iterations, steer)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: Optional[int] = None


@dataclass(frozen=True)
class Scenario:
    geometry: UcaGeometry
    grid: FrequencyGrid
    paths: tuple
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    noise: Optional[NoiseSpec] = None

    @property
    def truths(self) -> list:
        return [p.to_truth() for p in self.paths]

    def synthesize(self, seed: Optional[int] = None) -> ElementChannelMatrix:
        floor = seed_ = None
        if self.noise is not None:
            floor, seed_ = -self.noise.snr_db, self.noise.seed
        if seed is not None:
            seed_ = seed
        return synthesize_channel(self.geometry, self.grid, self.truths, floor, seed_)


_SECTIONS = {
    "geometry": {"radius_m": float, "elements": int},
    "frequency": {"f_start_hz": float, "f_stop_hz": float, "points": int},
    "estimator": {"dynamic_range_db": float, "label_threshold_db": float, "zero_pad": int,
                  "azimuth_count": int, "mode_cap": int, "max_iterations": int, "window": str},
    "noise": {"snr_db": float, "seed": int},
    "paths": {"path": str},
}
_PATH_FIELDS = {"amp_db": float, "phase_deg": float, "azimuth_deg": float,
                "elevation_deg": float, "distance_m": float, "delay_ns": float}
_REQUIRED = {"geometry": ("radius_m", "elements"), "frequency": ("f_start_hz", "f_stop_hz", "points")}


def _convert(kind, text: str, where: str):
    try:
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        return text
    except ValueError:
        raise FormatError(f"{where}: cannot parse {text!r} as {kind.__name__}") from None


def _parse_path(text: str, lineno: int) -> PathSpec:
    values = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, raw = item.partition("=")
        key = key.strip()
        where = f"line {lineno}: path field '{key}'"
        if not sep:
            raise FormatError(f"line {lineno}: path field {item!r} is not key=value")
        if key not in _PATH_FIELDS:
            raise FormatError(f"line {lineno}: unknown path field '{key}'")
        if key in values:
            raise FormatError(f"line {lineno}: duplicate path field '{key}'")
        values[key] = _convert(_PATH_FIELDS[key], raw.strip(), where)
    missing = [k for k in _PATH_FIELDS if k != "phase_deg" and k not in values]
    if missing:
        raise FormatError(f"line {lineno}: path is missing field '{missing[0]}'")
    return PathSpec(**values)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text, validating every value against the model types."""
    blocks: dict = {}
    paths: list = []
    path_lines: list = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise FormatError(f"line {lineno}: unknown section '{section}'")
            if section in blocks:
                raise FormatError(f"line {lineno}: duplicate section '{section}'")
            blocks[section] = {}
            continue
        if section is None:
            raise FormatError(f"line {lineno}: key outside any section")
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise FormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        allowed = _SECTIONS[section]
        if key not in allowed:
            raise FormatError(f"line {lineno}: unknown key '{key}' in section [{section}]")
        if section == "paths":
            paths.append(_parse_path(value, lineno))
            path_lines.append(lineno)
            continue
        if key in blocks[section]:
            raise FormatError(f"line {lineno}: duplicate key '{key}'")
        blocks[section][key] = (_convert(allowed[key], value.strip(), f"line {lineno}: key '{key}'"), lineno)

    for name, keys in _REQUIRED.items():
        if name not in blocks:
            raise FormatError(f"missing section [{name}]")
        for k in keys:
            if k not in blocks[name]:
                raise FormatError(f"section [{name}] is missing key '{k}'")
    if not paths:
        raise FormatError("at least one path required")

    def get(name, key):
        return blocks[name][key][0]

    def build(factory, name, *args):
        try:
            return factory(*args)
        except ValueError as exc:
            raise FormatError(f"section [{name}]: {exc}") from None

    geom = build(UcaGeometry, "geometry", get("geometry", "radius_m"), get("geometry", "elements"))
    grid = build(FrequencyGrid, "frequency", get("frequency", "f_start_hz"),
                 get("frequency", "f_stop_hz"), get("frequency", "points"))
    limit_ns = grid.max_delay * 1e9
    for spec, lineno in zip(paths, path_lines):
        if not 0.0 <= spec.delay_ns < limit_ns:
            raise FormatError(f"line {lineno}: key 'delay_ns' = {spec.delay_ns!r} outside the "
                              f"unambiguous delay range [0, {limit_ns:.6g}) ns")
        try:
            spec.to_truth()
            if not spec.distance_m > geom.radius:
                raise ValueError(f"distance {spec.distance_m} m is inside the array radius")
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None

    est = EstimatorSpec(**{k: v for k, (v, _) in blocks.get("estimator", {}).items()})
    build(est.to_config, "estimator")
    noise = None
    if "noise" in blocks:
        if "snr_db" not in blocks["noise"]:
            raise FormatError("section [noise] is missing key 'snr_db'")
        noise = NoiseSpec(**{k: v for k, (v, _) in blocks["noise"].items()})
    return Scenario(geom, grid, tuple(paths), est, noise)


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def serialize_scenario(sc: Scenario) -> str:
    """Text that :func:`parse_scenario` maps back to an identical ``Scenario``."""
    out = ["[geometry]", f"radius_m = {_fmt(float(sc.geometry.radius))}",
           f"elements = {sc.geometry.element_count}", "",
           "[frequency]", f"f_start_hz = {_fmt(float(sc.grid.f_start))}",
           f"f_stop_hz = {_fmt(float(sc.grid.f_stop))}", f"points = {sc.grid.count}", "",
           "[paths]"]
    for p in sc.paths:
        items = [f"{f.name}={_fmt(float(getattr(p, f.name)))}" for f in fields(PathSpec)]
        out.append("path = " + ", ".join(items))
    out += ["", "[estimator]"]
    for f in fields(EstimatorSpec):
        value = getattr(sc.estimator, f.name)
        if value is not None:
            out.append(f"{f.name} = {_fmt(value)}")
    if sc.noise is not None:
        out += ["", "[noise]", f"snr_db = {_fmt(float(sc.noise.snr_db))}"]
        if sc.noise.seed is not None:
            out.append(f"seed = {sc.noise.seed}")
    return "\n".join(out) + "\n"


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("ucabeam") / "data" / name))


def load_scenario(path: PathLike) -> Scenario:
    """Read a scenario file; a bare bundled name such as ``table1.scenario`` also works."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_scenario_path(p.name)
        if p.parent == Path(".") and bundled.exists():
            p = bundled
    try:
        text = p.read_text()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None
    try:
        return parse_scenario(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# CFR matrices
# ---------------------------------------------------------------------------


def format_cfr(channel: ElementChannelMatrix) -> str:
    g, grid = channel.geometry, channel.grid
    buf = io.StringIO()
    buf.write(CFR_MAGIC + "\n")
    buf.write(f"radius_m={float(g.radius)!r}\nelements={g.element_count}\n")
    buf.write(f"f_start_hz={float(grid.f_start)!r}\nf_stop_hz={float(grid.f_stop)!r}\npoints={grid.count}\n")
    inter = np.empty((g.element_count, 2 * grid.count))
    inter[:, 0::2] = channel.values.real
    inter[:, 1::2] = channel.values.imag
    for row in inter:
        buf.write(",".join(map(repr, row.tolist())))
        buf.write("\n")
    return buf.getvalue()


def write_cfr(channel: ElementChannelMatrix, path: PathLike) -> None:
    try:
        Path(path).write_text(format_cfr(channel))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None


def parse_cfr(text: str) -> ElementChannelMatrix:
    """Parse ``#uca-cfr v1`` text.

    An optional ``frequencies_hz=f0,f1,...`` metadata line is checked for
    uniform spacing against the declared grid.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CFR_MAGIC:
        raise FormatError(f"line 1: expected '{CFR_MAGIC}'")
    meta: dict = {}
    i = 1
    while i < len(lines) and "=" in lines[i] and lines[i].split("=", 1)[0].strip().isidentifier():
        key, _, value = lines[i].partition("=")
        key = key.strip()
        if key not in _CFR_KEYS and key != "frequencies_hz":
            raise FormatError(f"line {i + 1}: unknown header key '{key}'")
        meta[key] = (value.strip(), i + 1)
        i += 1
    for key in _CFR_KEYS:
        if key not in meta:
            raise FormatError(f"header is missing key '{key}'")

    def num(key, kind):
        raw, lineno = meta[key]
        return _convert(kind, raw, f"line {lineno}: key '{key}'")

    radius, count = num("radius_m", float), num("elements", int)
    f0, f1, points = num("f_start_hz", float), num("f_stop_hz", float), num("points", int)
    try:
        geom = UcaGeometry(radius, count)
        grid = FrequencyGrid(f0, f1, points)
    except ValueError as exc:
        raise FormatError(f"header: {exc}") from None
    if "frequencies_hz" in meta:
        raw, lineno = meta["frequencies_hz"]
        try:
            freqs = np.array([float(v) for v in raw.split(",")])
        except ValueError:
            raise FormatError(f"line {lineno}: key 'frequencies_hz' is not a number list") from None
        if freqs.size != grid.count:
            raise FormatError(f"line {lineno}: {freqs.size} frequencies listed, header declares {grid.count}")
        if np.max(np.abs(freqs - grid.frequencies)) > _UNIFORM_RTOL * grid.spacing:
            raise FormatError(f"line {lineno}: frequency grid is not uniform within {_UNIFORM_RTOL:g}")

    rows = [ln for ln in lines[i:] if ln.strip()]
    p_count, width = geom.element_count, 2 * grid.count
    if len(rows) != p_count:
        raise FormatError(f"dimension mismatch: header declares {p_count} elements, found {len(rows)} data rows")
    data = np.empty((p_count, width))
    for p, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != width:
            raise FormatError(f"data row {p + 1} (element {p + 1}): expected {width} fields, found {len(parts)}")
        try:
            data[p] = [float(v) for v in parts]
        except ValueError:
            raise FormatError(f"data row {p + 1} (element {p + 1}): non-numeric field") from None
    if not np.all(np.isfinite(data)):
        raise FormatError("data contains NaN or Inf")
    values = np.empty((p_count, grid.count), dtype=complex)
    values.real, values.imag = data[:, 0::2], data[:, 1::2]
    return ElementChannelMatrix(values, geom, grid)


def read_cfr(path: PathLike) -> ElementChannelMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None
    try:
        return parse_cfr(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# CSV exporters
# ---------------------------------------------------------------------------


def _num(x: float, digits: int = 6) -> str:
    return repr(round(float(x), digits) + 0.0)


def _write_rows(path: PathLike, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None


def padp_rows(padp: PadpGrid, floor_db: float = -40.0, peak_db: Optional[float] = None):
    """Rows of the PADP CSV; magnitude in dB, optionally relative to ``peak_db``."""
    db = padp.power_db(-np.inf)
    if peak_db is not None:
        db = db - peak_db
    db = np.maximum(db, floor_db)
    yield ["delay_ns"] + [_num(math.degrees(a)) for a in padp.azimuths]
    for tau, row in zip(padp.delays, db):
        yield [_num(tau * 1e9)] + [_num(v, 4) for v in row]


def export_padp(padp: PadpGrid, path: PathLike, floor_db: float = -40.0) -> None:
    """Write a PADP as CSV: delay (ns) column, azimuth (deg) header, dB clipped at ``floor_db``."""
    _write_rows(path, padp_rows(padp, floor_db))


ESTIMATE_HEADER = ["path", "power_db", "amplitude_re", "amplitude_im", "azimuth_deg", "delay_ns"]


def estimate_rows(estimates: Sequence[PathEstimate]):
    yield ESTIMATE_HEADER
    for e in estimates:
        yield [e.iteration, _num(e.power_db, 4), repr(e.amplitude.real), repr(e.amplitude.imag),
               _num(math.degrees(e.azimuth), 4), _num(e.delay * 1e9, 4)]


def export_estimates(estimates: Sequence[PathEstimate], path: PathLike) -> None:
    _write_rows(path, estimate_rows(estimates))


def export_trace_summary(trace: EstimationTrace, path: PathLike) -> None:
    """Residual CIR energy after each iteration, as a percentage of the input energy."""
    rows = [["iteration", "residual_energy", "residual_percent"],
            [0, repr(trace.initial_energy), "100.0"]]
    for rec in trace.records:
        rows.append([rec.estimate.iteration, repr(rec.residual_energy),
                     _num(100.0 * rec.residual_energy / trace.initial_energy, 6)])
    _write_rows(path, rows)


def export_cir(cir: np.ndarray, delays: np.ndarray, path: PathLike, floor_db: float = -60.0) -> None:
    """Per-element CIR magnitude in dB; rows are elements, columns delays (ns)."""
    with np.errstate(divide="ignore"):
        db = np.maximum(20.0 * np.log10(np.abs(cir)), floor_db)
    rows = [["element"] + [_num(t * 1e9) for t in delays]]
    rows += [[p + 1] + [_num(v, 4) for v in row] for p, row in enumerate(db)]
    _write_rows(path, rows)


def export_table(header: Sequence[str], rows, path: PathLike) -> None:
    _write_rows(path, [list(header)] + [list(r) for r in rows])


__all__ = [
    "CFR_MAGIC", "EstimatorSpec", "FormatError", "NoiseSpec", "PathSpec", "Scenario",
    "bundled_scenario_path", "estimate_rows", "export_cir", "export_estimates", "export_padp",
    "export_table", "export_trace_summary", "format_cfr", "load_scenario", "padp_rows",
    "parse_cfr", "parse_scenario", "read_cfr", "serialize_scenario", "write_cfr",
]
