"""Fringe fitting, windowed visibility scans and speed-of-influence bounds.

The fitters follow the scikit-learn estimator protocol: hyper-parameters go
to ``__init__``, ``fit`` learns attributes with a trailing underscore, and
``get_params``/``set_params``/``clone`` work as usual.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .exceptions import FitDegenerate
from .kinematics import C, InertialFrame, IntervalSpec, boost_interval

BELL_VISIBILITY = 1 / np.sqrt(2)
SIDEREAL_RATE = 7.2921159e-5  # rad/s
EARTH_RADIUS = 6.371e6  # m
OBLIQUITY = np.deg2rad(23.4393)


@dataclass
class FitResult:
    visibility: float
    amplitude: float
    baseline: float
    phase_offset: float
    visibility_std: float
    amplitude_std: float
    baseline_std: float
    phase_offset_std: float
    n_bins: int
    chi2: float = float("nan")

    @property
    def bell_threshold_exceeded(self):
        return bool(self.visibility > BELL_VISIBILITY)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["bell_threshold_exceeded"] = self.bell_threshold_exceeded
        return d


@dataclass
class BoundResult:
    distance: float
    delay: float
    v_min: float
    ratio_to_c: float
    frame_label: str = "lab"

    def to_dict(self):
        return dict(self.__dict__)


def _phase_column(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError("expected a single phase column")
        X = X[:, 0]
    return X


class FringeFitter(BaseEstimator, RegressorMixin):
    """Weighted least-squares fit of ``B + A cos(phase + phi0)`` to coincidence counts.

    Accidentals are subtracted before the fit; the Poisson variance of each
    bin is taken from the model prediction of the raw counts, refined over
    ``n_iter`` passes starting from the observed counts.  ``visibility_`` is
    ``A / B`` and the ``*_std_`` attributes are 1-sigma errors from the fit
    covariance.

    Parameters
    ----------
    min_bins : int
        Fewer bins raise ``FitDegenerate``.
    n_iter : int
        Reweighting passes.
    """

    def __init__(self, min_bins=8, n_iter=3):
        self.min_bins = min_bins
        self.n_iter = n_iter

    def fit(self, X, y, accidentals=None):
        phase = _phase_column(X)
        y = check_array(y, ensure_2d=False, dtype=float)
        check_consistent_length(phase, y)
        n = len(y)
        if n < self.min_bins:
            raise FitDegenerate(f"{n} bins, need at least {self.min_bins}")
        if np.ptp(phase) < 2 * np.pi:
            raise FitDegenerate(f"phase span {np.ptp(phase):.3g} rad is below one period")
        acc = np.broadcast_to(np.asarray(0.0 if accidentals is None else accidentals, float), y.shape)
        net = y - acc

        design = np.column_stack([np.ones(n), np.cos(phase), np.sin(phase)])
        var = np.maximum(y, 1.0)
        for _ in range(max(1, self.n_iter)):
            w = 1.0 / np.sqrt(var)
            coef, _, rank, _ = np.linalg.lstsq(design * w[:, None], net * w, rcond=None)
            if rank < 3:
                raise FitDegenerate("design matrix is rank deficient")
            var = np.maximum(design @ coef + acc, 1.0)
        w = 1.0 / np.sqrt(var)
        coef, _, rank, _ = np.linalg.lstsq(design * w[:, None], net * w, rcond=None)
        if rank < 3:
            raise FitDegenerate("design matrix is rank deficient")
        cov = np.linalg.inv((design * (1.0 / var)[:, None]).T @ design)

        b0, a, b = coef
        if not b0 > 0:
            raise FitDegenerate("fitted baseline is not positive")
        amp = float(np.hypot(a, b))
        if amp > 0:
            g_amp = np.array([0.0, a / amp, b / amp])
            g_phi = np.array([0.0, b / amp**2, -a / amp**2])
        else:
            g_amp = np.array([0.0, 1.0, 0.0])
            g_phi = np.zeros(3)
        g_vis = g_amp / b0 - np.array([amp / b0**2, 0.0, 0.0])

        self.coef_ = coef
        self.covariance_ = cov
        self.baseline_ = float(b0)
        self.amplitude_ = amp
        # a = A cos(phi0), b = -A sin(phi0)
        self.phase_offset_ = float(np.arctan2(-b, a))
        self.visibility_ = amp / float(b0)
        self.baseline_std_ = float(np.sqrt(cov[0, 0]))
        self.amplitude_std_ = float(np.sqrt(g_amp @ cov @ g_amp))
        self.phase_offset_std_ = float(np.sqrt(g_phi @ cov @ g_phi))
        self.visibility_std_ = float(np.sqrt(g_vis @ cov @ g_vis))
        self.chi2_ = float(np.sum((net - design @ coef) ** 2 / var))
        self.n_bins_ = n
        return self

    def predict(self, X):
        """Accidental-free counts per bin at the given phases."""
        check_is_fitted(self, "coef_")
        phase = _phase_column(X)
        return self.baseline_ + self.amplitude_ * np.cos(phase + self.phase_offset_)

    @property
    def result_(self):
        check_is_fitted(self, "coef_")
        return FitResult(
            visibility=self.visibility_, amplitude=self.amplitude_,
            baseline=self.baseline_, phase_offset=self.phase_offset_,
            visibility_std=self.visibility_std_, amplitude_std=self.amplitude_std_,
            baseline_std=self.baseline_std_, phase_offset_std=self.phase_offset_std_,
            n_bins=self.n_bins_, chi2=self.chi2_)


@dataclass
class WindowRecord:
    center: float  # ps
    visibility: float
    visibility_std: float
    n_bins: int
    outside_visibility: float = float("nan")
    outside_std: float = float("nan")
    significance: float = float("nan")
    skipped: bool = False
    reason: str = ""

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class WindowedVisibilityResult:
    records: list = field(default_factory=list)
    max_significance: float = float("nan")
    dip_center: float = float("nan")

    def to_dict(self):
        return {"max_significance": self.max_significance, "dip_center_ps": self.dip_center,
                "windows": [r.to_dict() for r in self.records]}


class WindowedVisibility(BaseEstimator):
    """Sliding fringe fits over path-difference windows.

    ``X`` has two columns, path difference (ps) and phase (rad).  Each window
    is fitted alone and against the complementary bins; the dip significance
    is ``(V_outside - V_inside) / sqrt(s_in^2 + s_out^2)``.  Windows whose
    fit is degenerate are kept and flagged as skipped.
    """

    def __init__(self, window_width=5.0, step=0.5, min_bins=8, n_iter=3):
        self.window_width = window_width
        self.step = step
        self.min_bins = min_bins
        self.n_iter = n_iter

    def _centers(self, pd):
        lo, hi = float(np.min(pd)), float(np.max(pd))
        half = self.window_width / 2
        if hi - lo <= self.window_width:
            return np.array([(lo + hi) / 2])
        if self.step <= 0:
            raise ValueError("step must be > 0")
        k = int(np.floor((hi - lo - self.window_width) / self.step + 1e-9))
        return lo + half + self.step * np.arange(k + 1)

    def fit(self, X, y, accidentals=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("X must have columns (path_diff_ps, phase_rad)")
        y = check_array(y, ensure_2d=False, dtype=float)
        check_consistent_length(X, y)
        acc = np.broadcast_to(np.asarray(0.0 if accidentals is None else accidentals, float), y.shape)
        pd, phase = X[:, 0], X[:, 1]
        fitter = FringeFitter(min_bins=self.min_bins, n_iter=self.n_iter)
        full_span = np.ptp(pd) <= self.window_width

        records = []
        for c in self._centers(pd):
            inside = np.ones_like(pd, bool) if full_span else np.abs(pd - c) <= self.window_width / 2
            rec = WindowRecord(center=float(c), visibility=float("nan"),
                               visibility_std=float("nan"), n_bins=int(inside.sum()))
            try:
                fitter.fit(phase[inside], y[inside], acc[inside])
            except FitDegenerate as exc:
                rec.skipped, rec.reason = True, str(exc)
                records.append(rec)
                continue
            rec.visibility, rec.visibility_std = fitter.visibility_, fitter.visibility_std_
            if (~inside).any():
                try:
                    fitter.fit(phase[~inside], y[~inside], acc[~inside])
                except FitDegenerate as exc:
                    rec.reason = f"outside: {exc}"
                else:
                    rec.outside_visibility = fitter.visibility_
                    rec.outside_std = fitter.visibility_std_
                    rec.significance = float((rec.outside_visibility - rec.visibility)
                                             / np.hypot(rec.visibility_std, rec.outside_std))
            records.append(rec)

        self.records_ = records
        sig = np.array([r.significance for r in records])
        if np.isfinite(sig).any():
            k = int(np.nanargmax(sig))
            self.max_significance_ = float(sig[k])
            self.dip_center_ = records[k].center
        else:
            self.max_significance_ = float("nan")
            self.dip_center_ = float("nan")
        return self

    @property
    def result_(self):
        check_is_fitted(self, "records_")
        return WindowedVisibilityResult(self.records_, self.max_significance_, self.dip_center_)


def _accidentals(data, accidental_rate):
    return data.accidental_est if accidental_rate is None else accidental_rate


def fit_interferogram(data, accidental_rate=None, **kwargs):
    """Fit one interferogram; ``accidental_rate`` (counts/bin) defaults to its estimate column."""
    est = FringeFitter(**kwargs).fit(data.phase_rad, data.coincidences,
                                     _accidentals(data, accidental_rate))
    return est.result_


def windowed_visibility(data, window_width, step, accidental_rate=None, **kwargs):
    X = np.column_stack([data.path_diff_ps, data.phase_rad])
    est = WindowedVisibility(window_width=window_width, step=step, **kwargs)
    return est.fit(X, data.coincidences, _accidentals(data, accidental_rate)).result_


def speed_bound(distance, delay, frame_label="lab"):
    """Smallest influence speed connecting events ``distance`` apart within ``delay``."""
    if not delay > 0 or not distance > 0:
        raise ValueError("distance and delay must be > 0")
    v = distance / delay
    return BoundResult(distance=float(distance), delay=float(delay), v_min=v,
                       ratio_to_c=v / C, frame_label=frame_label)


@dataclass(frozen=True)
class CBRFrameSpec:
    """Motion of the solar system w.r.t. the background radiation plus optional Earth terms.

    Apex default is the COBE dipole direction in equatorial coordinates.
    """

    speed: float = 371e3  # m/s
    ra: float = 167.88  # deg
    dec: float = -7.02  # deg
    earth_rotation: bool = True
    orbital_speed: float = 0.0  # m/s, 29.8e3 to enable
    day_of_year: float = 0.0


def equatorial_to_enu(vec, latitude_deg, sidereal_angle):
    """Rotate an equatorial (x toward RA 0) vector into local east/north/up axes.

    ``sidereal_angle`` is the local sidereal time in radians.
    """
    phi = np.deg2rad(latitude_deg)
    st, ct = np.sin(sidereal_angle), np.cos(sidereal_angle)
    sp, cp = np.sin(phi), np.cos(phi)
    east = np.array([-st, ct, 0.0])
    north = np.array([-sp * ct, -sp * st, cp])
    up = np.array([cp * ct, cp * st, sp])
    v = np.asarray(vec, float)
    return np.array([east @ v, north @ v, up @ v])


def _unit_radec(ra_deg, dec_deg):
    a, d = np.deg2rad(ra_deg), np.deg2rad(dec_deg)
    return np.array([np.cos(d) * np.cos(a), np.cos(d) * np.sin(a), np.sin(d)])


def earth_orbital_direction(day_of_year):
    """Approximate equatorial unit vector of Earth's orbital velocity on a given day."""
    sun_lon = np.deg2rad(280.46 + 0.9856474 * day_of_year)
    lon = sun_lon - np.pi / 2
    ecl = np.array([np.cos(lon), np.sin(lon), 0.0])
    ce, se = np.cos(OBLIQUITY), np.sin(OBLIQUITY)
    return np.array([ecl[0], ce * ecl[1] - se * ecl[2], se * ecl[1] + ce * ecl[2]])


def lab_velocity_in_cbr(sidereal_angle, latitude_deg, spec=CBRFrameSpec()):
    """Lab velocity relative to the CBR frame, in local ENU axes (m/s)."""
    v_eq = spec.speed * _unit_radec(spec.ra, spec.dec)
    if spec.orbital_speed:
        v_eq = v_eq + spec.orbital_speed * earth_orbital_direction(spec.day_of_year)
    v = equatorial_to_enu(v_eq, latitude_deg, sidereal_angle)
    if spec.earth_rotation:
        v = v + np.array([SIDEREAL_RATE * EARTH_RADIUS * np.cos(np.deg2rad(latitude_deg)), 0.0, 0.0])
    return v


def cbr_worst_case_delay(baseline, lab_velocity_in_cbr, timing_uncertainty_lab, day_samples=1440):
    """Largest separation in time, in the CBR frame, of two events along ``baseline``.

    ``lab_velocity_in_cbr`` is a constant 3-vector, an ``(n, 3)`` array of
    samples, or a callable of the day fraction in ``[0, 1)``.  The lab delay
    takes both signs of ``timing_uncertainty_lab``.
    """
    if timing_uncertainty_lab < 0:
        raise ValueError("timing_uncertainty_lab must be >= 0")
    if callable(lab_velocity_in_cbr):
        samples = [lab_velocity_in_cbr(k / day_samples) for k in range(day_samples)]
    else:
        samples = np.atleast_2d(np.asarray(lab_velocity_in_cbr, float))
    worst = 0.0
    for v in samples:
        # CBR frame moves at -v as seen from the lab
        frame = InertialFrame(-np.asarray(v, float))
        for sign in (1.0, -1.0):
            dt = boost_interval(IntervalSpec(sign * timing_uncertainty_lab, baseline), frame).dt
            worst = max(worst, abs(dt))
    return worst


def baseline_vector(length, azimuth_deg):
    """ENU vector from side A to side B for a horizontal baseline with bearing ``azimuth_deg``."""
    az = np.deg2rad(azimuth_deg)
    return length * np.array([np.sin(az), np.cos(az), 0.0])


def cbr_bound(cfg, timing_uncertainty_lab=0.0, day_samples=1440):
    """Worst-case CBR-frame delay for an experiment config and the matching speed bound."""
    b = cfg.position_b - cfg.position_a
    vel = lambda s: lab_velocity_in_cbr(2 * np.pi * s, cfg.latitude, cfg.cbr)  # noqa: E731
    delay = cbr_worst_case_delay(b, vel, timing_uncertainty_lab, day_samples)
    return delay, speed_bound(float(np.linalg.norm(b)), delay, frame_label="cbr")
