"""Experiment configuration: TOML sections with unit-suffixed scalars.

Dimensional values are strings carrying a unit, e.g. ``optical_length =
"10 km"`` or ``coincidence_window = "0.5925 us"``; bare numbers are accepted
only for dimensionless fields.  Validation collects every violation before
raising, each tagged with its ``section.key`` path.
"""

import os
import re
from dataclasses import dataclass, field, fields
from enum import Enum
from importlib import resources

import numpy as np
import tomli

from .analysis import CBRFrameSpec, baseline_vector
from .collapse import AfterAfterRule, CollapseModelSpec, ModelVariant
from .engine import DetectorSpec, ScanPlan
from .exceptions import ConfigInvalid, MissingModelParams, ParseError, ValidationError
from .kinematics import InertialFrame
from .optics import (ChoiceDeviceSpec, DeviceKind, FiberLink, InterferometerSpec,
                     PhotonPairSource, Spectrum, wheel_rim_speed)

CONFIG_ENV = "MOVINGFRAMES_CONFIG"

# unit -> (dimension, factor to SI)
UNITS = {
    "m": ("length", 1.0), "km": ("length", 1e3), "cm": ("length", 1e-2),
    "mm": ("length", 1e-3), "um": ("length", 1e-6), "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6), "µs": ("time", 1e-6),
    "ns": ("time", 1e-9), "ps": ("time", 1e-12), "fs": ("time", 1e-15),
    "min": ("time", 60.0), "h": ("time", 3600.0), "hour": ("time", 3600.0),
    "m/s": ("speed", 1.0), "km/s": ("speed", 1e3),
    "hz": ("rate", 1.0), "/s": ("rate", 1.0), "1/s": ("rate", 1.0),
    "khz": ("rate", 1e3), "mhz": ("rate", 1e6),
    "rad": ("angle", 1.0), "deg": ("angle", np.pi / 180),
    "rad/s": ("angular_rate", 1.0),
    "rpm": ("rotation", 1.0),
    "db": ("loss", 1.0),
    "ps/(nm^2 km)": ("dispersion_slope", 1.0), "ps/nm^2/km": ("dispersion_slope", 1.0),
    "mm/h": ("drift", 1.0), "mm/hour": ("drift", 1.0), "um/h": ("drift", 1e-3),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(text, dimension, scale=1.0):
    """Parse ``"10.6 km"`` into a float in SI units divided by ``scale``.

    >>> parse_quantity("5 ps", "time")
    5e-12
    """
    if isinstance(text, bool):
        raise ValueError(f"expected a {dimension} quantity, got a boolean")
    if isinstance(text, (int, float)):
        if dimension == "dimensionless":
            return float(text)
        raise ValueError(f"missing unit for {dimension} quantity {text!r}")
    m = _QUANTITY.match(str(text))
    if not m:
        raise ValueError(f"cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not unit:
        if dimension == "dimensionless":
            return value
        raise ValueError(f"missing unit for {dimension} quantity {text!r}")
    key = unit if unit in UNITS else unit.lower()
    if key not in UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    dim, factor = UNITS[key]
    if dim != dimension:
        raise ValueError(f"unit {unit!r} is a {dim}, expected a {dimension}")
    return value * factor / scale


@dataclass(frozen=True)
class ExperimentConfig:
    source: PhotonPairSource
    link_a: FiberLink
    link_b: FiberLink
    ifo_a: InterferometerSpec = field(default_factory=InterferometerSpec)
    ifo_b: InterferometerSpec = field(default_factory=InterferometerSpec)
    choice_a: ChoiceDeviceSpec = field(default_factory=ChoiceDeviceSpec)
    choice_b: ChoiceDeviceSpec = field(default_factory=ChoiceDeviceSpec)
    det_a: DetectorSpec = field(default_factory=DetectorSpec)
    det_b: DetectorSpec = field(default_factory=DetectorSpec)
    latitude: float = 46.2  # deg
    baseline_azimuth: float = 180.0  # deg, bearing of side B seen from side A
    baseline_length: float = 10_600.0  # m, straight line between the choice devices
    post_selection: float = 0.5
    cbr: CBRFrameSpec = field(default_factory=CBRFrameSpec)
    model: CollapseModelSpec = None
    scan: ScanPlan = None

    @property
    def baseline_unit(self):
        return baseline_vector(1.0, self.baseline_azimuth)

    @property
    def position_a(self):
        return -0.5 * self.baseline_length * self.baseline_unit

    @property
    def position_b(self):
        return 0.5 * self.baseline_length * self.baseline_unit


class _Section:
    """Reads typed keys out of one TOML table, recording errors by path."""

    def __init__(self, name, table, errors):
        self.name = name
        self.table = dict(table or {})
        self.errors = errors
        self.used = set()

    def _path(self, key):
        return f"{self.name}.{key}"

    def get(self, key, dimension=None, scale=1.0, default=None, required=False, kind=None):
        self.used.add(key)
        if key not in self.table:
            if required:
                self.errors.append((self._path(key), "required"))
            return default
        raw = self.table[key]
        try:
            if kind is not None:
                return self._convert(raw, kind)
            return parse_quantity(raw, dimension or "dimensionless", scale)
        except (ValueError, TypeError) as exc:
            self.errors.append((self._path(key), str(exc)))
            return default

    @staticmethod
    def _convert(raw, kind):
        if kind is bool:
            if not isinstance(raw, bool):
                raise ValueError("expected true or false")
            return raw
        if kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ValueError("expected an integer")
            return raw
        if kind is str:
            if not isinstance(raw, str):
                raise ValueError("expected a string")
            return raw
        if isinstance(kind, type) and issubclass(kind, Enum):
            try:
                return kind(str(raw).lower())
            except ValueError:
                choices = ", ".join(m.value for m in kind)
                raise ValueError(f"{raw!r} is not one of: {choices}") from None
        return kind(raw)

    def raw(self, key):
        self.used.add(key)
        return self.table.get(key)

    def finish(self):
        for key in sorted(set(self.table) - self.used):
            self.errors.append((self._path(key), "unknown key"))


def _build(errors, path, factory, **kwargs):
    if any(v is None for v in kwargs.values()):
        return None
    try:
        return factory(**kwargs)
    except ConfigInvalid as exc:
        errors.append((path, str(exc)))
        return None


def _choice_frame(sec, side_sign, unit):
    motion = sec.get("motion", kind=str, default="rest")
    speed = sec.get("speed", "speed")
    radius = sec.get("wheel_radius", "length")
    rpm = sec.get("wheel_rpm", "rotation")
    if motion == "rest":
        return InertialFrame.lab()
    if speed is None:
        if radius is None or rpm is None:
            sec.errors.append((sec._path("speed"), f"motion {motion!r} needs speed or wheel_radius + wheel_rpm"))
            return None
        speed = wheel_rim_speed(radius, rpm)
    if motion not in ("receding", "approaching"):
        sec.errors.append((sec._path("motion"), "expected rest, receding or approaching"))
        return None
    # unit points from A to B; receding from the other side is -unit for A, +unit for B
    sign = -side_sign if motion == "receding" else side_sign
    try:
        return InertialFrame.along(unit, sign * speed, label=f"{sec.name} device")
    except ValueError as exc:
        sec.errors.append((sec._path("speed"), str(exc)))
        return None


def _parse_model(doc, errors):
    if "model" not in doc:
        return None
    sec = _Section("model", doc["model"], errors)
    variant = sec.get("variant", kind=ModelVariant, default=ModelVariant.STANDARD_QM)
    vis = sec.get("visibility", default=1.0)
    v_qi = sec.get("v_qi", "speed")
    rule = sec.get("after_after_rule", kind=AfterAfterRule, default=AfterAfterRule.CORRELATED)
    pref_raw = sec.raw("preferred_frame")
    pref = None
    if pref_raw == "lab":
        pref = InertialFrame.lab()
    elif pref_raw is not None:
        try:
            if not isinstance(pref_raw, list) or len(pref_raw) != 3:
                raise ValueError("expected \"lab\" or a list of three speeds (east, north, up)")
            pref = InertialFrame([parse_quantity(x, "speed") for x in pref_raw], label="preferred")
        except ValueError as exc:
            errors.append(("model.preferred_frame", str(exc)))
    sec.finish()
    if variant is ModelVariant.FINITE_SPEED and (v_qi is None or pref is None):
        missing = [n for n, v in (("v_qi", v_qi), ("preferred_frame", pref)) if v is None]
        raise MissingModelParams(f"model.{missing[0]}: FINITE_SPEED model requires {', '.join(missing)}")
    if vis is None or variant is None or rule is None:
        return None
    try:
        return CollapseModelSpec(variant=variant, visibility=vis, preferred_frame=pref,
                                 v_qi=v_qi, after_after_rule=rule)
    except ConfigInvalid as exc:
        errors.append(("model", str(exc)))
        return None


def parse_config(text, source_name="<string>"):
    """Parse and validate configuration text; see ``load_config``."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        raise ParseError(f"{source_name}: {msg}", line, col) from None

    errors = []
    known = {"experiment", "source", "link_a", "link_b", "ifo_a", "ifo_b", "choice_a",
             "choice_b", "det_a", "det_b", "model", "scan", "cbr"}
    for name in sorted(set(doc) - known):
        errors.append((name, "unknown section"))
    for name in ("source", "link_a", "link_b"):
        if name not in doc:
            errors.append((name, "required section missing"))

    exp = _Section("experiment", doc.get("experiment"), errors)
    latitude = exp.get("latitude", "angle", scale=np.pi / 180, default=46.2)
    azimuth = exp.get("baseline_azimuth", "angle", scale=np.pi / 180, default=180.0)
    length = exp.get("baseline_length", "length", default=10_600.0)
    post = exp.get("post_selection", default=0.5)
    exp.finish()
    if length is not None and not length > 0:
        errors.append(("experiment.baseline_length", "must be > 0"))
    if post is not None and not 0 < post <= 1:
        errors.append(("experiment.post_selection", "must lie in (0, 1]"))
    if latitude is not None and not -90 <= latitude <= 90:
        errors.append(("experiment.latitude", "must lie in [-90, 90] deg"))

    s = _Section("source", doc.get("source"), errors)
    source = _build(errors, "source", PhotonPairSource,
                    center_wavelength=s.get("center_wavelength", "length", 1e-9, 1310.0),
                    filter_bandwidth=s.get("filter_bandwidth", "length", 1e-9, required=True),
                    pair_rate=s.get("pair_rate", "rate", required=True),
                    spectrum=s.get("spectrum", kind=Spectrum, default=Spectrum.RECTANGULAR))
    s.finish()

    links = {}
    for name in ("link_a", "link_b"):
        sec = _Section(name, doc.get(name), errors)
        kw = dict(
            optical_length=sec.get("optical_length", "length", required=True),
            group_index=sec.get("group_index", default=1.468),
            loss=sec.get("loss", "loss", default=0.0),
            zero_dispersion_wavelength=sec.get("zero_dispersion_wavelength", "length", 1e-9, 1310.0),
            dispersion_slope=sec.get("dispersion_slope", "dispersion_slope", default=0.07),
            drift_rate=sec.get("drift_rate", "drift", default=0.0),
        )
        sec.finish()
        links[name] = _link(errors, name, kw)

    ifos = {}
    for name in ("ifo_a", "ifo_b"):
        sec = _Section(name, doc.get(name), errors)
        ifos[name] = _build(errors, name, InterferometerSpec,
                            phase=sec.get("phase", "angle", default=0.0),
                            arm_imbalance=sec.get("arm_imbalance", "time", 1e-12, 1200.0))
        sec.finish()
        if ifos[name] is not None and source is not None:
            try:
                ifos[name].check_franson(source)
            except ConfigInvalid as exc:
                errors.append((f"{name}.arm_imbalance", str(exc)))

    unit = baseline_vector(1.0, azimuth if azimuth is not None else 180.0)
    choices = {}
    for name, side_sign in (("choice_a", 1.0), ("choice_b", -1.0)):
        sec = _Section(name, doc.get(name), errors)
        kind = sec.get("kind", kind=DeviceKind, default=DeviceKind.DETECTOR)
        frame = _choice_frame(sec, side_sign, unit)
        extra = sec.get("extra_path_before_detector", "length", default=0.0)
        sec.finish()
        if extra is not None and extra < 0:
            errors.append((f"{name}.extra_path_before_detector", "must be >= 0"))
            extra = None
        choices[name] = _build(errors, name, ChoiceDeviceSpec, kind=kind, frame=frame,
                               extra_path_before_detector=extra)

    dets = {}
    for name in ("det_a", "det_b"):
        sec = _Section(name, doc.get(name), errors)
        kw = dict(efficiency=sec.get("efficiency", default=0.1),
                  dark_count_rate=sec.get("dark_count_rate", "rate", default=0.0),
                  coincidence_window=sec.get("coincidence_window", "time", default=1e-9),
                  timing_jitter_sigma=sec.get("timing_jitter_sigma", "time", default=0.0))
        sec.finish()
        checks = (("efficiency", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
                  ("dark_count_rate", lambda v: v >= 0, "must be >= 0"),
                  ("coincidence_window", lambda v: v > 0, "must be > 0"),
                  ("timing_jitter_sigma", lambda v: v >= 0, "must be >= 0"))
        dets[name] = _checked(errors, name, DetectorSpec, kw, checks)

    cbr = None
    sec = _Section("cbr", doc.get("cbr"), errors)
    d = CBRFrameSpec()
    cbr_kw = dict(speed=sec.get("speed", "speed", default=d.speed),
                  ra=sec.get("ra", "angle", np.pi / 180, d.ra),
                  dec=sec.get("dec", "angle", np.pi / 180, d.dec),
                  earth_rotation=sec.get("earth_rotation", kind=bool, default=d.earth_rotation),
                  orbital_speed=sec.get("orbital_speed", "speed", default=d.orbital_speed),
                  day_of_year=sec.get("day_of_year", default=d.day_of_year))
    sec.finish()
    if cbr_kw["speed"] is not None and not 0 <= cbr_kw["speed"] < 299_792_458.0:
        errors.append(("cbr.speed", "must lie in [0, c)"))
    elif None not in cbr_kw.values():
        cbr = CBRFrameSpec(**cbr_kw)

    model = _parse_model(doc, errors)

    scan = None
    if "scan" in doc:
        sec = _Section("scan", doc["scan"], errors)
        rate = sec.get("phase_rate", "angular_rate")
        period = sec.get("phase_period", "time")
        if rate is None and period is not None:
            rate = 2 * np.pi / period if period > 0 else None
            if rate is None:
                errors.append(("scan.phase_period", "must be > 0"))
        kw = dict(duration=sec.get("duration", "time", required=True),
                  bin_width=sec.get("bin_width", "time", default=100.0),
                  phase_start=sec.get("phase_start", "angle", default=0.0),
                  phase_rate=rate if rate is not None else 0.0,
                  seed=sec.get("seed", kind=int, default=0))
        sec.finish()
        scan = _build(errors, "scan", ScanPlan, **kw)

    if errors:
        raise ValidationError(errors)
    return ExperimentConfig(
        source=source, link_a=links["link_a"], link_b=links["link_b"],
        ifo_a=ifos["ifo_a"], ifo_b=ifos["ifo_b"],
        choice_a=choices["choice_a"], choice_b=choices["choice_b"],
        det_a=dets["det_a"], det_b=dets["det_b"],
        latitude=latitude, baseline_azimuth=azimuth, baseline_length=length,
        post_selection=post, cbr=cbr, model=model, scan=scan)


def _checked(errors, name, factory, kw, checks):
    ok = True
    for key, good, msg in checks:
        v = kw.get(key)
        if v is not None and not good(v):
            errors.append((f"{name}.{key}", msg))
            ok = False
    return _build(errors, name, factory, **kw) if ok else None


def _link(errors, name, kw):
    checks = (("optical_length", lambda v: v > 0, "must be > 0"),
              ("loss", lambda v: v >= 0, "must be >= 0"),
              ("group_index", lambda v: 1.3 <= v <= 1.7, "must lie in [1.3, 1.7]"))
    return _checked(errors, name, FiberLink, kw, checks)


def default_config_path():
    """Path from ``$MOVINGFRAMES_CONFIG``, else the bundled ``paper.cfg``."""
    env = os.environ.get(CONFIG_ENV)
    if env:
        return env
    return str(resources.files("movingframes") / "data" / "paper.cfg")


def load_config(path=None):
    """Read and validate a configuration file.

    Raises ``ParseError`` (with line/column) for malformed text,
    ``MissingModelParams`` for an incomplete FINITE_SPEED model and
    ``ValidationError`` listing every other violation.
    """
    path = default_config_path() if path is None else path
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, source_name=str(path))


def replace(cfg, **changes):
    """Copy of ``cfg`` with some fields replaced."""
    kw = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    kw.update(changes)
    return ExperimentConfig(**kw)
