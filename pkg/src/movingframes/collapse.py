"""Collapse models mapping a classified pair and analyzer phases to joint outcomes.

Outcomes are the two output ports of each interferometer, labelled +1/-1.
Every model here produces uniform marginals; models differ only in whether
the post-selected coincidences carry the two-photon fringe.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ConfigInvalid, MissingModelParams
from .kinematics import (C, IntervalSpec, PairClass, boost_interval,
                         reversal_delay)

OUTCOMES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class ModelVariant(Enum):
    STANDARD_QM = "standard_qm"
    SUAREZ_SCARANI = "suarez_scarani"
    FINITE_SPEED = "finite_speed"


class AfterAfterRule(Enum):
    CORRELATED = "correlated"
    UNCORRELATED = "uncorrelated"


@dataclass(frozen=True)
class CollapseModelSpec:
    variant: ModelVariant = ModelVariant.STANDARD_QM
    visibility: float = 1.0
    preferred_frame: object = None
    v_qi: float = None
    after_after_rule: AfterAfterRule = AfterAfterRule.CORRELATED

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ConfigInvalid("visibility must lie in [0, 1]")
        if self.v_qi is not None and not self.v_qi > C:
            raise ConfigInvalid("v_qi must exceed c")
        if self.variant is ModelVariant.FINITE_SPEED:
            _check_finite_speed(self)


def _check_finite_speed(model):
    missing = [n for n in ("preferred_frame", "v_qi") if getattr(model, n) is None]
    if missing:
        raise MissingModelParams(f"FINITE_SPEED model requires {', '.join(missing)}")


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities of the four (outcome_a, outcome_b) pairs."""

    p: dict

    def __getitem__(self, key):
        return self.p[key]

    @property
    def total(self):
        return sum(self.p.values())

    @property
    def correlation(self):
        return sum(i * j * q for (i, j), q in self.p.items())

    def marginal_a(self, i):
        return self.p[(i, 1)] + self.p[(i, -1)]

    def marginal_b(self, j):
        return self.p[(1, j)] + self.p[(-1, j)]

    @classmethod
    def uniform(cls):
        return cls({k: 0.25 for k in OUTCOMES})


def qm_joint(alpha, beta, V):
    """Post-selected Franson coincidence law ``p(i, j) = (1 + i j V cos(alpha + beta)) / 4``."""
    if not 0.0 <= V <= 1.0:
        raise ValueError("V must lie in [0, 1]")
    e = V * np.cos(alpha + beta)
    return JointDistribution({(i, j): (1 + i * j * e) / 4 for i, j in OUTCOMES})


def reachable_interval(preferred, iv, v_qi):
    """True iff an influence at ``v_qi`` (preferred frame) leaving event A reaches event B."""
    if v_qi <= 0:
        raise ValueError("v_qi must be > 0")
    b = boost_interval(iv, preferred)
    return b.dt >= b.distance / v_qi


def reachable(preferred, src, dst, v_qi):
    """Whether ``dst`` lies inside the v_qi-cone of ``src`` in the preferred frame."""
    return reachable_interval(preferred, IntervalSpec.between(src, dst), v_qi)


def model_joint(model, cls, choice_a, choice_b, alpha, beta):
    """Joint outcome distribution for one pair under ``model``.

    ``cls`` is the class returned by ``classify_pair`` for the two choice events.
    """
    qm = qm_joint(alpha, beta, model.visibility)
    if model.variant is ModelVariant.STANDARD_QM:
        return qm
    if model.variant is ModelVariant.SUAREZ_SCARANI:
        if cls is PairClass.BEFORE_BEFORE:
            return JointDistribution.uniform()
        if cls is PairClass.AFTER_AFTER and model.after_after_rule is AfterAfterRule.UNCORRELATED:
            return JointDistribution.uniform()
        return qm
    _check_finite_speed(model)
    iv = IntervalSpec.between(choice_a.event, choice_b.event)
    linked = (reachable_interval(model.preferred_frame, iv, model.v_qi)
              or reachable_interval(model.preferred_frame, iv.reversed(), model.v_qi))
    return qm if linked else JointDistribution.uniform()


def decorrelation_intervals(model, dx, frame_a, frame_b):
    """Lab delays ``t_B - t_A`` (s) for which ``model`` removes the correlations.

    Returned as a list of open ``(lo, hi)`` intervals for devices separated by
    ``dx`` and resting in ``frame_a`` / ``frame_b``.
    """
    if model.variant is ModelVariant.STANDARD_QM:
        return []
    if model.variant is ModelVariant.SUAREZ_SCARANI:
        ta, tb = reversal_delay(dx, frame_a), reversal_delay(dx, frame_b)
        out = []
        if ta < tb:
            out.append((ta, tb))
        elif tb < ta and model.after_after_rule is AfterAfterRule.UNCORRELATED:
            out.append((tb, ta))
        return out
    _check_finite_speed(model)
    frame = model.preferred_frame
    t0 = reversal_delay(dx, frame)
    # separation in the preferred frame at the moment it sees both events together
    d = boost_interval(IntervalSpec(t0, dx), frame).distance
    h = d / (frame.gamma * model.v_qi)
    return [(t0 - h, t0 + h)]
