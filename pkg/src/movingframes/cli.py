"""Command-line entry point.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
runtime failures; every failure writes one JSON line to stderr.
"""

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .analysis import cbr_bound, fit_interferogram, speed_bound, windowed_visibility
from .collapse import CollapseModelSpec, ModelVariant
from .config import load_config
from .engine import Interferogram, simulate_scan
from .exceptions import ConfigInvalid, MovingFramesError, ParseError, ValidationError
from .kinematics import InertialFrame, IntervalSpec, before_before_window, classify_interval


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """Make ``obj`` JSON-safe: NaN/inf become null, tuples become lists."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _model_from_args(cfg, args):
    base = cfg.model or CollapseModelSpec(visibility=0.83)
    kw = {}
    if args.model:
        kw["variant"] = ModelVariant(args.model)
    if args.visibility is not None:
        kw["visibility"] = args.visibility
    if args.v_qi is not None:
        kw["v_qi"] = args.v_qi
    variant = kw.get("variant", base.variant)
    if variant is ModelVariant.FINITE_SPEED and base.preferred_frame is None:
        kw["preferred_frame"] = InertialFrame.lab()
    return replace(base, **kw)


def cmd_simulate(args):
    cfg = load_config(args.config)
    if cfg.scan is None:
        raise ConfigInvalid("scan: configuration has no [scan] section")
    plan = cfg.scan if args.seed is None else replace(cfg.scan, seed=args.seed)
    model = _model_from_args(cfg, args)
    data = simulate_scan(cfg, model, plan, n_jobs=args.threads)
    if args.out == "-":
        sys.stdout.write(data.to_csv())
    else:
        data.to_csv(args.out)
        print(f"wrote {args.out} ({len(data)} bins, model {model.variant.value}, seed {plan.seed})")
    return 0


def cmd_analyze(args):
    data = Interferogram.from_csv(args.run)
    fit = fit_interferogram(data, args.accidental_rate)
    win = windowed_visibility(data, args.window_width, args.step, args.accidental_rate)
    report = {
        "input": args.run,
        "n_bins": len(data),
        "path_diff_range_ps": [float(data.path_diff_ps.min()), float(data.path_diff_ps.max())],
        "fit": fit.to_dict(),
        "windowed": win.to_dict(),
        "dip": {
            "center_ps": win.dip_center,
            "significance": win.max_significance,
            "detected": bool(np.isfinite(win.max_significance) and win.max_significance > args.threshold),
            "threshold_sigma": args.threshold,
        },
    }
    text = _dump(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"V = {fit.visibility:.4f} +/- {fit.visibility_std:.4f}; "
              f"max dip {win.max_significance:.2f} sigma at {win.dip_center:.2f} ps; wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_window(args):
    w = before_before_window(args.L, args.v)
    print(f"{w * 1e12:.3f} ps")
    return 0


def _bound_line(b, extra=""):
    return (f"{b.frame_label}: v_min = {b.v_min:.3g} m/s = {b.ratio_to_c:.3g} c "
            f"(distance {b.distance:g} m, delay {b.delay:.4g} s{extra})")


def cmd_bounds(args):
    lab = speed_bound(args.distance, args.delay, "lab")
    cfg = load_config(args.config)
    cfg = replace(cfg, baseline_length=args.distance)
    delay, cbr = cbr_bound(cfg, timing_uncertainty_lab=args.delay, day_samples=args.day_samples)
    if args.json:
        sys.stdout.write(_dump({"lab": lab.to_dict(), "cbr": cbr.to_dict()}))
    else:
        print(_bound_line(lab))
        print(_bound_line(cbr, ", worst case over a sidereal day"))
    return 0


def cmd_classify(args):
    unit = np.array([1.0, 0.0, 0.0])
    iv = IntervalSpec(args.dt, args.L * unit)
    fa = InertialFrame(args.va * unit)
    fb = InertialFrame(args.vb * unit)
    print(classify_interval(iv, fa, fb, tol=args.tol).value)
    return 0


def build_parser():
    p = _Parser(prog="movingframes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a phase scan and write the interferogram CSV")
    s.add_argument("--config", help="config file (default: $MOVINGFRAMES_CONFIG or bundled paper.cfg)")
    s.add_argument("--model", choices=[v.value for v in ModelVariant])
    s.add_argument("--visibility", type=float)
    s.add_argument("--v-qi", dest="v_qi", type=float, help="influence speed, m/s (finite_speed)")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True, help="CSV path, or - for stdout")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="fit visibility and scan for a windowed dip")
    a.add_argument("run", help="interferogram CSV")
    a.add_argument("--out", help="JSON path (default: stdout)")
    a.add_argument("--window-width", type=float, default=5.0, help="ps")
    a.add_argument("--step", type=float, default=0.5, help="ps")
    a.add_argument("--accidental-rate", type=float, help="counts/bin; default: per-bin estimate column")
    a.add_argument("--threshold", type=float, default=5.0, help="dip detection threshold, sigma")
    a.set_defaults(func=cmd_analyze)

    w = sub.add_parser("window", help="largest reversible lab delay L v / c^2")
    w.add_argument("--L", type=float, required=True, help="distance, m")
    w.add_argument("--v", type=float, required=True, help="relative speed, m/s")
    w.set_defaults(func=cmd_window)

    b = sub.add_parser("bounds", help="speed-of-influence bounds in the lab and CBR frames")
    b.add_argument("--distance", type=float, required=True, help="m")
    b.add_argument("--delay", type=float, required=True, help="lab timing, s")
    b.add_argument("--config")
    b.add_argument("--day-samples", type=int, default=1440)
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("classify", help="pair class for collinear devices")
    c.add_argument("--dt", type=float, required=True, help="t_B - t_A in the lab, s")
    c.add_argument("--L", type=float, required=True, help="distance A to B, m")
    c.add_argument("--va", type=float, default=0.0, help="device A velocity along A->B, m/s")
    c.add_argument("--vb", type=float, default=0.0, help="device B velocity along A->B, m/s")
    c.add_argument("--tol", type=float, default=0.0, help="simultaneity tolerance, s")
    c.set_defaults(func=cmd_classify)
    return p


def _fail(exc, code):
    rec = {"error": type(exc).__name__, "message": str(exc).replace("\n", " ")}
    if isinstance(exc, ValidationError):
        rec["fields"] = [{"path": p, "message": m} for p, m in exc.errors]
    if isinstance(exc, ParseError):
        rec["line"], rec["column"] = exc.line, exc.column
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigInvalid, ParseError, ValueError) as exc:
        return _fail(exc, 1)
    except (MovingFramesError, OSError) as exc:
        return _fail(exc, 2)


run_command = main

if __name__ == "__main__":
    sys.exit(main())
