"""Physical layer: pair source, fiber links, interferometers and choice devices.

Group delays use the group index; the default ``n_g = 1.468`` makes 1 mm of
fiber correspond to 4.90 ps.  Chromatic dispersion follows the linear-slope
model ``D(lambda) = S (lambda - lambda0)``, i.e. a quadratic group delay
around the zero-dispersion wavelength.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import ConfigInvalid
from .kinematics import C, ChoiceEvent, InertialFrame, IntervalSpec, SpacetimeEvent

DEFAULT_GROUP_INDEX = 1.468
DEFAULT_DISPERSION_SLOPE = 0.07  # ps / (nm^2 km)


class Spectrum(Enum):
    RECTANGULAR = "rectangular"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class PhotonPairSource:
    """Degenerate pair source behind a bandpass filter.

    ``filter_bandwidth`` is the FWHM in nm; for a rectangular filter the FWHM
    is the full width, for a Gaussian one sigma = FWHM / 2.3548.
    """

    center_wavelength: float = 1310.0  # nm
    filter_bandwidth: float = 10.0  # nm FWHM
    pair_rate: float = 0.0  # pairs/s
    spectrum: Spectrum = Spectrum.RECTANGULAR

    def __post_init__(self):
        if self.pair_rate < 0:
            raise ConfigInvalid("pair_rate must be >= 0")
        if self.filter_bandwidth <= 0:
            raise ConfigInvalid("filter_bandwidth must be > 0")

    def center_offset(self, link):
        """Offset of the source center from a link's zero-dispersion wavelength (nm)."""
        return self.center_wavelength - link.zero_dispersion_wavelength

    def detuning_moments(self):
        """Second and fourth moments (nm^2, nm^4) of the signal detuning from center."""
        if self.spectrum is Spectrum.RECTANGULAR:
            h = self.filter_bandwidth / 2
            return h**2 / 3, h**4 / 5
        s = self.filter_bandwidth / (2 * np.sqrt(2 * np.log(2)))
        return s**2, 3 * s**4

    def coherence_time(self):
        """Single-photon coherence time lambda^2 / (c dlambda), seconds."""
        lam = self.center_wavelength * 1e-9
        return lam**2 / (C * self.filter_bandwidth * 1e-9)


@dataclass(frozen=True)
class FiberLink:
    optical_length: float  # m
    group_index: float = DEFAULT_GROUP_INDEX
    loss: float = 0.0  # dB
    zero_dispersion_wavelength: float = 1310.0  # nm
    dispersion_slope: float = DEFAULT_DISPERSION_SLOPE  # ps/(nm^2 km)
    drift_rate: float = 0.0  # mm/hour, signed

    def __post_init__(self):
        if self.optical_length <= 0:
            raise ConfigInvalid("optical_length must be > 0")
        if self.loss < 0:
            raise ConfigInvalid("loss must be >= 0")
        if not 1.3 <= self.group_index <= 1.7:
            raise ConfigInvalid("group_index must lie in [1.3, 1.7]")

    @property
    def transmission(self):
        return 10 ** (-self.loss / 10)

    def length_at(self, elapsed):
        return self.optical_length + self.drift_rate * 1e-3 / 3600.0 * elapsed

    def group_delay(self, wavelength):
        """Dispersive part of the group delay at ``wavelength`` nm, in ps."""
        km = self.optical_length / 1000.0
        return self.dispersion_slope * km * (wavelength - self.zero_dispersion_wavelength) ** 2 / 2


@dataclass(frozen=True)
class InterferometerSpec:
    phase: float = 0.0  # rad
    arm_imbalance: float = 1200.0  # ps, long minus short

    def check_franson(self, source):
        """Raise unless the imbalance exceeds the single-photon coherence time."""
        tc = source.coherence_time() * 1e12
        if self.arm_imbalance <= tc:
            raise ConfigInvalid(
                f"arm_imbalance {self.arm_imbalance} ps does not exceed the "
                f"single-photon coherence time {tc:.3g} ps")


class DeviceKind(Enum):
    ABSORBER = "absorber"
    DETECTOR = "detector"


@dataclass(frozen=True)
class ChoiceDeviceSpec:
    """First absorber or detector met by the photon on one side.

    ``frame`` is the device rest frame; for the wheel this is the tangential
    velocity at the absorption point.  ``extra_path_before_detector`` is the
    fiber between an absorber and the detector that follows it.
    """

    kind: DeviceKind = DeviceKind.DETECTOR
    frame: InertialFrame = field(default_factory=InertialFrame.lab)
    extra_path_before_detector: float = 0.0  # m

    def __post_init__(self):
        if self.extra_path_before_detector < 0:
            raise ConfigInvalid("extra_path_before_detector must be >= 0")


def propagation_delay(link, elapsed_run_time=0.0):
    """Source-to-device delay in seconds ``(L + drift * t) n_g / c``."""
    if elapsed_run_time < 0:
        raise ValueError("elapsed_run_time must be >= 0")
    return link.length_at(elapsed_run_time) * link.group_index / C


def length_to_delay(length, group_index=DEFAULT_GROUP_INDEX):
    return length * group_index / C


def wheel_rim_speed(radius, rpm):
    """Rim speed 2 pi r f of a disk turning at ``rpm``."""
    if radius < 0 or rpm < 0:
        raise ValueError("radius and rpm must be >= 0")
    return 2 * np.pi * radius * rpm / 60.0


def path_difference(cfg, elapsed):
    """Lab delay between the two choice events, side B minus side A, in seconds.

    Computed from the difference of the drifting lengths so picosecond
    differences of ~50 us delays keep full precision.
    """
    a, b = cfg.link_a, cfg.link_b
    if a.group_index == b.group_index:
        dl = (b.optical_length - a.optical_length) + (b.drift_rate - a.drift_rate) * 1e-3 / 3600.0 * elapsed
        return dl * a.group_index / C
    return propagation_delay(b, elapsed) - propagation_delay(a, elapsed)


def _require_devices(cfg):
    missing = [s for s in ("choice_a", "choice_b") if getattr(cfg, s, None) is None]
    if missing:
        raise ConfigInvalid(f"no choice device on {', '.join(missing)}")


def choice_interval(cfg, elapsed):
    """Separation of the two choice events of a pair emitted at ``elapsed``."""
    _require_devices(cfg)
    return IntervalSpec(path_difference(cfg, elapsed), cfg.position_b - cfg.position_a)


def choice_events(cfg, emission, elapsed):
    """Choice events for a pair emitted at ``emission``; returns ``(side_a, side_b)``.

    Event times are ``emission.t`` plus the propagation delays. Use
    ``choice_interval`` when only the separation is needed.
    """
    _require_devices(cfg)
    out = []
    for link, dev, pos, side in ((cfg.link_a, cfg.choice_a, cfg.position_a, "A"),
                                 (cfg.link_b, cfg.choice_b, cfg.position_b, "B")):
        ev = SpacetimeEvent(emission.t + propagation_delay(link, elapsed), pos,
                            label=f"choice {side} ({dev.kind.value})")
        out.append(ChoiceEvent(ev, dev.frame))
    return tuple(out)


def differential_delay(source, link_a, link_b, detuning):
    """Arrival-time difference (ps) between signal at center+detuning via A and idler at center-detuning via B.

    The detuning-independent part (a pure length offset) is excluded.
    """
    lc = source.center_wavelength
    d = np.asarray(detuning, dtype=float)
    dtau = link_a.group_delay(lc + d) - link_b.group_delay(lc - d)
    return dtau - (link_a.group_delay(lc) - link_b.group_delay(lc))


def two_photon_spread(source, link_a, link_b):
    """RMS spread (ps) of the two-photon relative delay over the filter spectrum.

    With the quadratic delay model the differential delay is
    ``b d + c d^2``; for identical links c vanishes and the spread is
    ``2 S L eps d_rms``, zero when the source sits at the zero-dispersion
    wavelength.
    """
    ka = link_a.dispersion_slope * link_a.optical_length / 1000.0 / 2
    kb = link_b.dispersion_slope * link_b.optical_length / 1000.0 / 2
    ea, eb = source.center_offset(link_a), source.center_offset(link_b)
    lin = 2 * (ka * ea + kb * eb)
    quad = ka - kb
    m2, m4 = source.detuning_moments()
    return float(np.sqrt(lin**2 * m2 + quad**2 * (m4 - m2**2)))
