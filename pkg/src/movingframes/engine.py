"""Monte Carlo generation of a phase-scan run.

Each bin is simulated from its own random stream, derived from the run seed
and the bin index, so a run is bitwise reproducible whatever the number of
worker threads.  A bin is represented by the pair timing at its center; the
two-photon wave-packet spread smears the sharp model boundaries through a
Gaussian of RMS ``two_photon_spread``.
"""

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .collapse import ModelVariant, decorrelation_intervals, qm_joint
from .exceptions import ConfigInvalid
from .kinematics import classify_interval
from .optics import choice_interval, path_difference, two_photon_spread

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("bin_index", "elapsed_s", "phase_rad", "path_diff_ps",
               "coincidences", "accidental_est", "singles_a", "singles_b")


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.1
    dark_count_rate: float = 0.0  # counts/s
    coincidence_window: float = 1e-9  # s
    timing_jitter_sigma: float = 0.0  # s

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigInvalid("efficiency must lie in (0, 1]")
        if self.dark_count_rate < 0:
            raise ConfigInvalid("dark_count_rate must be >= 0")
        if self.coincidence_window <= 0:
            raise ConfigInvalid("coincidence_window must be > 0")
        if self.timing_jitter_sigma < 0:
            raise ConfigInvalid("timing_jitter_sigma must be >= 0")


@dataclass(frozen=True)
class ScanPlan:
    duration: float  # s
    bin_width: float  # s
    phase_start: float = 0.0  # rad
    phase_rate: float = 0.0  # rad/s, applied to interferometer A
    seed: int = 0

    def __post_init__(self):
        if self.bin_width <= 0 or self.duration <= 0:
            raise ConfigInvalid("duration and bin_width must be > 0")
        n = self.duration / self.bin_width
        if round(n) < 1 or abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigInvalid("duration must be an integer multiple (>= 1) of bin_width")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigInvalid("seed must be a 64-bit unsigned integer")

    @property
    def n_bins(self):
        return int(round(self.duration / self.bin_width))


@dataclass(eq=False)
class Interferogram:
    """Binned coincidence record of one scan; one array per CSV column."""

    bin_index: np.ndarray
    elapsed_s: np.ndarray
    phase_rad: np.ndarray
    path_diff_ps: np.ndarray
    coincidences: np.ndarray
    accidental_est: np.ndarray
    singles_a: np.ndarray
    singles_b: np.ndarray
    bin_width: float = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.bin_index)

    def __eq__(self, other):
        if not isinstance(other, Interferogram):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in CSV_COLUMNS)

    def subset(self, mask):
        cols = {c: getattr(self, c)[mask] for c in CSV_COLUMNS}
        return Interferogram(**cols, bin_width=self.bin_width, meta=dict(self.meta))

    def to_csv(self, path=None):
        """Write the fixed-format CSV; returns the text when ``path`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k in range(len(self)):
            w.writerow([
                int(self.bin_index[k]),
                f"{self.elapsed_s[k]:.3f}",
                f"{self.phase_rad[k]:.9f}",
                f"{self.path_diff_ps[k]:.6f}",
                int(self.coincidences[k]),
                f"{self.accidental_est[k]:.6f}",
                int(self.singles_a[k]),
                int(self.singles_b[k]),
            ])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)

    @classmethod
    def from_csv(cls, path_or_buffer):
        if hasattr(path_or_buffer, "read"):
            rows = list(csv.reader(path_or_buffer))
        else:
            with open(path_or_buffer, newline="") as fh:
                rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise ValueError(f"interferogram CSV must start with header {','.join(CSV_COLUMNS)}")
        body = rows[1:]
        ints = {"bin_index", "coincidences", "singles_a", "singles_b"}
        cols = {}
        for j, name in enumerate(CSV_COLUMNS):
            dtype = np.int64 if name in ints else float
            cols[name] = np.array([r[j] for r in body], dtype=dtype)
        bw = None
        if len(body) > 1:
            bw = float(np.median(np.diff(cols["elapsed_s"])))
        return cls(**cols, bin_width=bw)


def derive_bin_stream(seed, bin_index):
    """Independent, reproducible generator for one bin of one run."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(bin_index),))
    return np.random.Generator(np.random.PCG64(ss))


def fraction_outside(x, intervals, sigma):
    """Probability that a Gaussian (mean ``x``, RMS ``sigma``) falls outside all ``intervals``.

    Intervals are disjoint ``(lo, hi)`` pairs.  For ``sigma == 0`` a point on an
    interval edge counts as half inside.
    """
    inside = 0.0
    for lo, hi in intervals:
        if sigma > 0:
            inside += ndtr((hi - x) / sigma) - ndtr((lo - x) / sigma)
        elif lo < x < hi:
            inside += 1.0
        elif x == lo or x == hi:
            inside += 0.5
    return float(min(1.0, max(0.0, 1.0 - inside)))


def smoothed_visibility_factor(path_diff, window, spread_sigma):
    """Share of the two-photon delay distribution outside ``[-window, +window]``."""
    if spread_sigma < 0:
        raise ValueError("spread_sigma must be >= 0")
    return fraction_outside(path_diff, [(-window, window)], spread_sigma)


def _coincidence_capture(det_a, det_b, window):
    sig = np.hypot(det_a.timing_jitter_sigma, det_b.timing_jitter_sigma)
    if sig == 0:
        return 1.0
    return float(ndtr(window / 2 / sig) - ndtr(-window / 2 / sig))


class _ScanContext:
    """Quantities fixed for the whole run, computed once."""

    def __init__(self, cfg, model, plan):
        self.cfg, self.model, self.plan = cfg, model, plan
        src = cfg.source
        self.sigma = two_photon_spread(src, cfg.link_a, cfg.link_b) * 1e-12
        self.dx = cfg.position_b - cfg.position_a
        fa, fb = cfg.choice_a.frame, cfg.choice_b.frame
        self.frames = (fa, fb)
        self.intervals = decorrelation_intervals(model, self.dx, fa, fb)
        da, db = cfg.det_a, cfg.det_b
        self.window = 0.5 * (da.coincidence_window + db.coincidence_window)
        ta, tb = cfg.link_a.transmission, cfg.link_b.transmission
        r = src.pair_rate
        # one detector per side on one interferometer port
        self.pair_singles = (r * ta * da.efficiency / 2, r * tb * db.efficiency / 2)
        self.singles_rate = (self.pair_singles[0] + da.dark_count_rate,
                             self.pair_singles[1] + db.dark_count_rate)
        self.pair_coinc = (r * ta * tb * da.efficiency * db.efficiency * cfg.post_selection
                           * _coincidence_capture(da, db, self.window))
        self.accidental_rate = self.singles_rate[0] * self.singles_rate[1] * self.window

    def bin_state(self, i):
        plan = self.plan
        t = (i + 0.5) * plan.bin_width
        dt = path_difference(self.cfg, t)
        alpha = self.cfg.ifo_a.phase + plan.phase_start + plan.phase_rate * t
        beta = self.cfg.ifo_b.phase
        if self.model.variant is ModelVariant.SUAREZ_SCARANI:
            # surfaces AmbiguousOrdering for an exact tie
            classify_interval(choice_interval(self.cfg, t), *self.frames)
        factor = fraction_outside(dt, self.intervals, self.sigma)
        joint = qm_joint(alpha, beta, self.model.visibility * factor)
        return t, dt, alpha, joint[(1, 1)]

    def bin_means(self, i):
        """Poisson means ``(singles_a, singles_b, true_coinc, accidentals)`` for bin ``i``."""
        bw = self.plan.bin_width
        t, dt, alpha, p = self.bin_state(i)
        return (self.singles_rate[0] * bw, self.singles_rate[1] * bw,
                self.pair_coinc * p * bw, self.accidental_rate * bw)

    def simulate_bin(self, i):
        bw = self.plan.bin_width
        t, dt, alpha, p = self.bin_state(i)
        rng = derive_bin_stream(self.plan.seed, i)
        sa = rng.poisson(self.singles_rate[0] * bw)
        sb = rng.poisson(self.singles_rate[1] * bw)
        true = rng.poisson(self.pair_coinc * p * bw)
        acc = rng.poisson(self.accidental_rate * bw)
        est = sa * sb * self.window / bw
        return i, t, alpha, dt * 1e12, true + acc, est, sa, sb


def _validate(cfg, plan):
    if cfg.choice_a is None or cfg.choice_b is None:
        raise ConfigInvalid("both sides need a choice device")
    if plan.n_bins < 1:
        raise ConfigInvalid("scan has no bins")


def expected_bin_means(cfg, model, plan):
    """Array (n_bins, 4) of Poisson means: singles A, singles B, true coincidences, accidentals."""
    _validate(cfg, plan)
    ctx = _ScanContext(cfg, model, plan)
    return np.array([ctx.bin_means(i) for i in range(plan.n_bins)])


def simulate_scan(cfg, model, plan, n_jobs=1):
    """Simulate one phase scan and return its ``Interferogram``.

    ``n_jobs`` worker threads evaluate bins concurrently; the output does
    not depend on it.
    """
    _validate(cfg, plan)
    ctx = _ScanContext(cfg, model, plan)
    n = plan.n_bins
    logger.debug("simulating %d bins, model=%s, sigma=%.3g ps", n, model.variant.value, ctx.sigma * 1e12)
    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(ctx.simulate_bin, range(n)))
    else:
        rows = [ctx.simulate_bin(i) for i in range(n)]
    cols = list(zip(*rows))
    ints = (0, 4, 6, 7)
    arrays = [np.array(c, dtype=np.int64 if j in ints else float) for j, c in enumerate(cols)]
    meta = {
        "model": model.variant.value,
        "seed": int(plan.seed),
        "coincidence_window_s": ctx.window,
        "spread_sigma_ps": ctx.sigma * 1e12,
        "decorrelation_intervals_ps": [(lo * 1e12, hi * 1e12) for lo, hi in ctx.intervals],
    }
    return Interferogram(*arrays, bin_width=plan.bin_width, meta=meta)
