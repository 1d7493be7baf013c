"""Special-relativity kernel: interval boosts and event ordering per frame.

All arithmetic is done on interval differences (``IntervalSpec``), never on
absolute epochs: a 5 ps separation between events hours into a run is below
the resolution of a double holding the absolute time.

Distances in moving frames are taken as lab distances when only an ordering
is needed; length contraction at the speeds of interest (beta <= 1.3e-3) is a
relative effect below 1e-6.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import AmbiguousOrdering, FrameSuperluminal

C = 299_792_458.0  # m/s, exact


def _vec3(v, name):
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class InertialFrame:
    """A measuring (or preferred) frame moving at ``velocity`` m/s w.r.t. the lab."""

    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    label: str = ""

    def __post_init__(self):
        v = _vec3(self.velocity, "velocity")
        if np.linalg.norm(v) >= C:
            raise FrameSuperluminal(f"|velocity| = {np.linalg.norm(v):.6g} m/s is not below c")
        object.__setattr__(self, "velocity", v)

    @classmethod
    def lab(cls):
        return cls(np.zeros(3), label="lab")

    @classmethod
    def along(cls, direction, speed, label=""):
        """Frame moving at signed ``speed`` along ``direction`` (normalized here)."""
        d = _vec3(direction, "direction")
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("direction must be non-zero")
        return cls(d / n * float(speed), label=label)

    @property
    def speed(self):
        return float(np.linalg.norm(self.velocity))

    @property
    def gamma(self):
        return lorentz_gamma(self.speed)

    def __repr__(self):
        return f"InertialFrame(velocity={self.velocity.tolist()!r}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class SpacetimeEvent:
    """Lab-frame event; ``t`` is seconds from run start, ``pos`` meters."""

    t: float
    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("event time must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "pos", _vec3(self.pos, "pos"))


@dataclass(frozen=True, eq=False)
class IntervalSpec:
    """Separation event B minus event A: ``dt`` seconds, ``dx`` meters."""

    dt: float
    dx: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.dt):
            raise ValueError("dt must be finite")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "dx", _vec3(self.dx, "dx"))

    @classmethod
    def between(cls, a, b):
        return cls(b.t - a.t, b.pos - a.pos)

    @property
    def distance(self):
        return float(np.linalg.norm(self.dx))

    def reversed(self):
        return IntervalSpec(-self.dt, -self.dx)

    def is_timelike(self):
        return abs(self.dt) * C > self.distance


@dataclass(frozen=True)
class ChoiceEvent:
    """A choice-device event together with the device's rest frame."""

    event: SpacetimeEvent
    frame: InertialFrame


class Ordering(Enum):
    A_FIRST = "A_FIRST"
    B_FIRST = "B_FIRST"
    SIMULTANEOUS = "SIMULTANEOUS"

    def reverse(self):
        return {Ordering.A_FIRST: Ordering.B_FIRST,
                Ordering.B_FIRST: Ordering.A_FIRST}.get(self, self)


class PairClass(Enum):
    BEFORE_BEFORE = "BEFORE_BEFORE"
    AFTER_AFTER = "AFTER_AFTER"
    NORMAL_A_FIRST = "NORMAL_A_FIRST"
    NORMAL_B_FIRST = "NORMAL_B_FIRST"


def lorentz_gamma(speed):
    beta2 = (speed / C) ** 2
    if beta2 >= 1.0:
        raise FrameSuperluminal(f"speed {speed:.6g} m/s is not below c")
    return 1.0 / np.sqrt(1.0 - beta2)


def boost_interval(iv, frame):
    """Express ``iv`` in ``frame``.

    ``dt' = gamma (dt - v.dx / c^2)`` and
    ``dx' = dx + ((gamma - 1) (v.dx) / v^2 - gamma dt) v``.
    """
    v = frame.velocity
    v2 = float(v @ v)
    if v2 == 0.0:
        return IntervalSpec(iv.dt, iv.dx.copy())
    g = lorentz_gamma(np.sqrt(v2))
    vdx = float(v @ iv.dx)
    dt = g * (iv.dt - vdx / C**2)
    # (gamma - 1) / v^2 == gamma^2 / ((gamma + 1) c^2), no cancellation
    k = g * g / ((g + 1.0) * C**2)
    dx = iv.dx + (k * vdx - g * iv.dt) * v
    return IntervalSpec(dt, dx)


def reversal_delay(dx, frame):
    """Lab delay ``t_B - t_A`` at which events separated by ``dx`` are simultaneous in ``frame``.

    Event B follows event A in ``frame`` iff the lab delay exceeds this value.
    """
    return float(frame.velocity @ _vec3(dx, "dx")) / C**2


def _order_interval(iv, frame, tol):
    dt = boost_interval(iv, frame).dt
    if abs(dt) <= tol:
        return Ordering.SIMULTANEOUS
    return Ordering.A_FIRST if dt > 0 else Ordering.B_FIRST


def order_in_frame(a, b, frame, tol=0.0):
    """Which of ``a`` and ``b`` happens first in ``frame``."""
    return _order_interval(IntervalSpec.between(a, b), frame, tol)


def before_before_window(L, v):
    """Largest lab time difference ``L v / c^2`` that two frames with relative speed v can reverse.

    The gamma factor differs from one by < 1e-12 at lab speeds and is dropped.
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    if not 0 <= v < C:
        raise ValueError("v must satisfy 0 <= v < c")
    return L * v / C**2


def classify_interval(iv, frame_a, frame_b, tol=0.0):
    """Classify the separation ``iv`` (B minus A) seen from the two device frames."""
    in_a = _order_interval(iv, frame_a, tol)
    in_b = _order_interval(iv, frame_b, tol)
    if Ordering.SIMULTANEOUS in (in_a, in_b):
        raise AmbiguousOrdering(
            f"events simultaneous in a measuring frame (frame A: {in_a.value}, frame B: {in_b.value})")
    if in_a is Ordering.A_FIRST and in_b is Ordering.B_FIRST:
        return PairClass.BEFORE_BEFORE
    if in_a is Ordering.B_FIRST and in_b is Ordering.A_FIRST:
        return PairClass.AFTER_AFTER
    return PairClass.NORMAL_A_FIRST if in_a is Ordering.A_FIRST else PairClass.NORMAL_B_FIRST


def classify_pair(choice_a, choice_b, tol=0.0):
    """Classify a pair of choice events, each judged in its own device frame.

    BEFORE_BEFORE: each device sees its own measurement first.
    AFTER_AFTER: each device sees the distant measurement first.
    """
    iv = IntervalSpec.between(choice_a.event, choice_b.event)
    return classify_interval(iv, choice_a.frame, choice_b.frame, tol)
