"""Batch command-line interface: solve, verify, sweep.

Outputs are files (CSV or JSON station tables, JSON verification reports,
gnuplot scripts); exit codes: 0 ok, 1 usage/config error, 2 validity
horizon truncated before x_max, 3 verification failure.

Precedence: command-line flags override config-file keys, which override
the RAMPLOADS_TOL environment default, which overrides built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .errors import RampLoadsError
from .geometry import RampProfile, build_chart, has_fatal, validate_profile
from .loads import (SurfaceStation, conservation_report, cumulative_loads,
                    surface_state, weak_weights)
from .solvers import (Coulomb, Frictionless, Frozen, VelocityPower,
                      VelocityScaled, frozen_limit_loads, solve)
from .verify import (convergence_study, standard_bumps, weak_form_residual,
                     BumpTestFunction)

COLUMNS = ("x", "s", "w", "u", "v", "w_rho", "wf1", "wf2", "N", "f",
           "drag_cum", "lift_cum")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRUNCATED = 2
EXIT_CHECK_FAILED = 3

# verification thresholds (pinned; mirrored by the acceptance suite)
R_MASS_TOL = 1e-13
R_XY_TOL = 1e-7
WEAK_TOL = 1e-6
NEG_CONTROL_MIN = 1e-3


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# descriptors

def parse_model(desc):
    """Model descriptor: frictionless | vpower:k=..,alpha=.. |
    coulomb:eta=.. | scaled:mu=.. | frozen."""
    name, _, rest = desc.partition(":")
    kv = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ConfigError(f"bad model parameter {item!r} in {desc!r}")
            kv[key.strip()] = float(val)
    try:
        if name == "frictionless":
            return Frictionless()
        if name == "vpower":
            return VelocityPower(k=kv.pop("k"), alpha=kv.pop("alpha"))
        if name == "coulomb":
            return Coulomb(eta=kv.pop("eta"))
        if name == "scaled":
            return VelocityScaled(mu=kv.pop("mu"))
        if name == "frozen":
            return Frozen()
    except KeyError as exc:
        raise ConfigError(f"model {desc!r} is missing parameter {exc}") from None
    except RampLoadsError as exc:
        raise ConfigError(f"model {desc!r}: {exc}") from None
    raise ConfigError(f"unknown model {desc!r}")


def parse_profile(desc, x_max):
    """Profile descriptor: straight:<deg>deg | poly:<c0>,<c1>,... |
    power:<c>,<q> | table:<path.csv>."""
    name, _, rest = desc.partition(":")
    try:
        if name == "straight":
            if not rest.endswith("deg"):
                raise ConfigError(f"straight profile needs an angle like 45deg, got {desc!r}")
            theta = math.radians(float(rest[:-3]))
            return RampProfile.straight(theta, _need_xmax(x_max, desc))
        if name == "poly":
            coeffs = [float(c) for c in rest.split(",")]
            return RampProfile.polynomial(coeffs, _need_xmax(x_max, desc))
        if name == "power":
            c, q = (float(v) for v in rest.split(","))
            return RampProfile.power(c, q, _need_xmax(x_max, desc))
        if name == "table":
            return RampProfile.from_csv(rest, x_max=x_max)
    except ConfigError:
        raise
    except (ValueError, RampLoadsError, OSError) as exc:
        raise ConfigError(f"profile {desc!r}: {exc}") from None
    raise ConfigError(f"unknown profile {desc!r}")


def _need_xmax(x_max, desc):
    if x_max is None:
        raise ConfigError(f"profile {desc!r} needs --xmax")
    return x_max


# ---------------------------------------------------------------------------
# run configuration

@dataclass
class RunConfig:
    """Resolved run parameters for one invocation."""
    profile: str
    model: str
    x_max: float | None = None
    stations: int = 512
    tol: float | None = None
    E0: float = 1.0
    output: str | None = None
    fmt: str = "csv"

    @classmethod
    def from_args(cls, args):
        file_cfg = {}
        if getattr(args, "config", None):
            try:
                with open(args.config) as fh:
                    file_cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}")

        def pick(flag, key, default=None):
            val = getattr(args, flag, None)
            if val is not None:
                return val
            return file_cfg.get(key, default)

        env_tol = os.environ.get("RAMPLOADS_TOL")
        tol = pick("tol", "tol", float(env_tol) if env_tol else None)
        cfg = cls(
            profile=pick("profile", "profile"),
            model=pick("model", "model", "frictionless"),
            x_max=pick("xmax", "x_max"),
            stations=int(pick("stations", "stations", 512)),
            tol=float(tol) if tol is not None else None,
            E0=float(pick("e0", "E0", 1.0)),
            output=pick("output", "output"),
            fmt=pick("format", "format", "csv"),
        )
        cfg.check()
        return cfg

    def check(self):
        if not self.profile:
            raise ConfigError("a profile is required (--profile or config key)")
        if self.stations < 2:
            raise ConfigError(f"stations must be >= 2, got {self.stations}")
        if self.E0 <= 0.5:
            raise ConfigError(f"E0 must exceed 0.5, got {self.E0}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        if self.x_max is not None:
            self.x_max = float(self.x_max)
            if self.x_max <= 0.0:
                raise ConfigError(f"x_max must be positive, got {self.x_max}")

    def quad_tol(self):
        return self.tol if self.tol is not None else 1e-10


# ---------------------------------------------------------------------------
# serialization

def _station_rows(stationed):
    return [[getattr(st, c) for c in COLUMNS] for st in stationed]


def write_station_csv(path, stationed, summary):
    with open(path, "w") as fh:
        fh.write("# ramploads station table\n")
        for key, val in summary.items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(COLUMNS) + "\n")
        for row in _station_rows(stationed):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_station_json(path, stationed, summary):
    doc = {
        "summary": summary,
        "columns": list(COLUMNS),
        "stations": [dict(zip(COLUMNS, (float(v) for v in row)))
                     for row in _station_rows(stationed)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_station_table(path):
    """Re-read a station table written by cmd_solve (CSV or JSON)."""
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        return [SurfaceStation(**{k: float(rec[k]) for k in COLUMNS})
                for rec in doc["stations"]]
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x,"):
                continue
            vals = [float(v) for v in line.split(",")]
            out.append(SurfaceStation(**dict(zip(COLUMNS, vals))))
    return out


def write_solve_plot(path, csv_path):
    lines = [
        "# gnuplot script: surface load distributions",
        'set datafile separator ","',
        "set key autotitle columnhead",
        'set xlabel "x"',
        f'plot "{csv_path}" using 1:9 with lines title "N", \\',
        f'     "{csv_path}" using 1:10 with lines title "f", \\',
        f'     "{csv_path}" using 1:11 with lines title "drag_cum"',
        "pause -1",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_plot(path, csv_path, param):
    lines = [
        "# gnuplot script: parameter sweep",
        'set datafile separator ","',
        "set key autotitle columnhead",
        f'set xlabel "{param}"',
        f'plot "{csv_path}" using 1:2 with linespoints title "drag", \\',
        f'     "{csv_path}" using 1:3 with linespoints title "lift"',
        "pause -1",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# solve

def _prepare(cfg):
    """Parse descriptors, validate, build the chart.  Raises ConfigError on
    anything the user must fix."""
    profile = parse_profile(cfg.profile, cfg.x_max)
    model = parse_model(cfg.model)
    findings = validate_profile(profile)
    for f in findings:
        print(f"[{f.level}] {f.code}: {f.message}", file=sys.stderr)
    if has_fatal(findings):
        raise ConfigError("profile failed admissibility checks")
    chart = build_chart(profile, quad_tol=cfg.quad_tol())
    return profile, model, chart


def _frozen_table(chart, svals):
    prof = chart.profile
    out = []
    for s in svals:
        x = chart.x_of_s(float(s))
        out.append(SurfaceStation(
            x=x, s=float(s), w=0.0, u=0.0, v=0.0, w_rho=math.inf,
            wf1=float(frozen_limit_loads(chart).wf1_of_x(x)),
            wf2=0.0,
            N=float(frozen_limit_loads(chart).n_of_x(x)),
            f=float(frozen_limit_loads(chart).f_of_x(x))))
    for st, (d, l) in zip(out, cumulative_loads(out)):
        st.drag_cum = d
        st.lift_cum = l
    return out


def cmd_solve(cfg):
    try:
        profile, model, chart = _prepare(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    summary = {
        "profile": profile.describe(), "model": model.label(),
        "x_max": chart.x_max, "s_max": chart.s_max,
        "stations": cfg.stations, "E0": cfg.E0,
    }
    if isinstance(model, Frozen):
        svals = np.linspace(0.0, chart.s_max, cfg.stations)
        stationed = _frozen_table(chart, svals)
        s_valid = chart.s_max
    else:
        try:
            field = solve(chart, model)
        except RampLoadsError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        s_end = min(field.s_valid, chart.s_max)
        if s_end <= 1e-12 * (1.0 + chart.s_max):
            summary.update({"s_valid": field.s_valid, "truncated": True,
                            "drag_total": 0.0, "lift_total": 0.0})
            _write_table(cfg, [], summary)
            print("validity horizon is empty (w <= 0 at the tip)", file=sys.stderr)
            return EXIT_TRUNCATED
        svals = np.linspace(0.0, s_end, cfg.stations)
        stationed = surface_state(chart, field, svals)
        s_valid = field.s_valid          # possibly tightened by loads
        if field.alpha1_integrand_root is not None:
            summary["alpha1_integrand_root"] = field.alpha1_integrand_root

    truncated = s_valid < chart.s_max * (1.0 - 1e-12)
    summary["s_valid"] = s_valid
    summary["truncated"] = truncated
    summary["drag_total"] = stationed[-1].drag_cum if stationed else 0.0
    summary["lift_total"] = stationed[-1].lift_cum if stationed else 0.0

    out_path = _write_table(cfg, stationed, summary)
    print(f"profile {summary['profile']}  model {summary['model']}  "
          f"s_max {chart.s_max:.6g}")
    print(f"s_valid {s_valid:.6g}" + ("  (truncated)" if truncated else ""))
    print(f"drag {summary['drag_total']:.6g}  lift {summary['lift_total']:.6g}")
    print(f"wrote {out_path}")
    return EXIT_TRUNCATED if truncated else EXIT_OK


def _write_table(cfg, stationed, summary):
    out_path = cfg.output or f"solution.{cfg.fmt}"
    if cfg.fmt == "json":
        write_station_json(out_path, stationed, summary)
    else:
        write_station_csv(out_path, stationed, summary)
        write_solve_plot(out_path + ".gp", out_path)
    return out_path


# ---------------------------------------------------------------------------
# verify

def cmd_verify(cfg, ds_list=(0.04, 0.02, 0.01), bumps=None, inject=0.0):
    try:
        profile, model, chart = _prepare(cfg)
        if isinstance(model, Frozen):
            raise ConfigError("verify needs a model with a speed field; "
                              "frozen has none")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        field = solve(chart, model)
    except RampLoadsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    s_end = min(field.s_valid, chart.s_max)
    if s_end <= 1e-9 * (1.0 + chart.s_max):
        print("error: validity horizon is empty; nothing to verify",
              file=sys.stderr)
        return EXIT_USAGE

    stations = max(cfg.stations, 128)
    svals = np.linspace(0.0, s_end, stations)
    stationed = surface_state(chart, field, svals)
    s_end = min(field.s_valid, chart.s_max)

    report = {"config": {"profile": profile.describe(), "model": model.label(),
                         "x_max": chart.x_max, "stations": stations,
                         "E0": cfg.E0, "ds_list": list(ds_list),
                         "inject_weight_error": inject},
              "note": ("weak-form residuals sample finitely many test "
                       "functions; they are evidence, not proof")}

    # conservation residuals
    cons = conservation_report(chart, field, stationed)
    b_at = [float(profile.height(st.x)) for st in stationed]
    ok_cons = all(
        abs(r.r_mass) <= R_MASS_TOL * (1.0 + b)
        and abs(r.r_x) <= R_XY_TOL * (1.0 + b)
        and abs(r.r_y) <= R_XY_TOL * (1.0 + b)
        and r.r_E == 0.0
        for r, b in zip(cons.rows, b_at))
    report["conservation"] = {"max_abs": cons.max_abs, "pass": ok_cons,
                              "thresholds": {"r_mass": R_MASS_TOL,
                                             "r_xy": R_XY_TOL}}

    # accretion oracle comparison
    if profile.slope(0.0) > 0.0 and ds_list:
        study = convergence_study(chart, model, ds_list)
        errs = [r.err_w for r in study.rows]
        decreasing = all(a >= b * 0.99 for a, b in zip(errs, errs[1:]))
        ok_acc = study.exact or (
            decreasing and study.order_w is not None
            and 0.5 <= study.order_w <= 1.6)
        report["accretion"] = {
            "rows": [{"ds": r.ds, "err_w": r.err_w, "err_N": r.err_N,
                      "err_f": r.err_f} for r in study.rows],
            "fitted_order": study.order_w, "exact": study.exact,
            "pass": ok_acc}
    else:
        ok_acc = True
        report["accretion"] = {"skipped": "flat tip or empty ds list",
                               "pass": True}

    # weak-form residual suite
    weights = weak_weights(chart, field, stationed, E0=cfg.E0)
    if inject:
        weights = _perturb_weights(weights, inject)
    x_hi = chart.x_of_s(s_end * (1.0 - 1e-9)) if s_end < chart.s_max else chart.x_max
    placements = bumps if bumps is not None else standard_bumps(chart, x_hi=x_hi)
    entries = []
    ok_weak = True
    for bump_name, phi in placements:
        for eq in ("mass", "x-momentum", "y-momentum", "energy"):
            res = weak_form_residual(chart, weights, phi, eq)
            entries.append({"bump": bump_name, "equation": eq,
                            "residual": res})
            ok_weak = ok_weak and res < WEAK_TOL
    report["weak_form"] = {"entries": entries,
                           "max_residual": max(e["residual"] for e in entries),
                           "threshold": WEAK_TOL, "pass": ok_weak}

    # negative control: dropping the momentum source term must break x-momentum
    straddle = next((p for n, p in placements if n == "straddle"), None)
    if straddle is not None:
        res_neg = weak_form_residual(chart, weights, straddle, "x-momentum",
                                     include_friction=False)
        ok_neg = res_neg > NEG_CONTROL_MIN
        report["negative_control"] = {"residual_without_source": res_neg,
                                      "minimum": NEG_CONTROL_MIN, "pass": ok_neg}
    else:
        ok_neg = True

    all_ok = ok_cons and ok_acc and ok_weak and ok_neg
    report["pass"] = all_ok
    out_path = cfg.output or "verify_report.json"
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    for name, ok in (("conservation", ok_cons), ("accretion", ok_acc),
                     ("weak_form", ok_weak), ("negative_control", ok_neg)):
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    print(f"report: {out_path}")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _perturb_weights(weights, factor):
    """Scale the x-momentum weights; diagnostics knob to demonstrate the
    weak-form check can fail."""
    wm1 = weights._wm[1]
    wn1 = weights._wn[1]
    weights._wm[1] = lambda s, _w=wm1: (1.0 + factor) * _w(s)
    weights._wn[1] = lambda s, _w=wn1: (1.0 + factor) * _w(s)
    return weights


# ---------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ("value", "drag_total", "lift_total", "s_valid", "N_at_end")


def cmd_sweep(cfg, param, values):
    if param not in ("k", "eta", "mu", "alpha", "theta"):
        print(f"error: unknown sweep parameter {param!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        base_model = parse_model(cfg.model)
        _check_sweepable(param, base_model, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rows = []
    for val in values:
        try:
            row = _sweep_point(cfg, param, float(val))
        except (ConfigError, RampLoadsError) as exc:
            print(f"error at {param}={val}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        rows.append(row)

    out_path = cfg.output or "sweep.csv"
    with open(out_path, "w") as fh:
        fh.write(f"# ramploads sweep {param} on {cfg.profile} / {cfg.model}\n")
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    write_sweep_plot(out_path + ".gp", out_path, param)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return EXIT_OK


def _check_sweepable(param, model, cfg):
    need = {"k": VelocityPower, "alpha": VelocityPower,
            "eta": Coulomb, "mu": VelocityScaled}
    if param in need and not isinstance(model, need[param]):
        raise ConfigError(f"sweeping {param} requires a {need[param].__name__} model")
    if param == "theta" and not cfg.profile.startswith("straight"):
        raise ConfigError("sweeping theta requires a straight profile")


def _sweep_point(cfg, param, val):
    profile_desc = cfg.profile
    model_desc = cfg.model
    if param == "theta":
        profile_desc = f"straight:{val}deg"
    else:
        base = parse_model(cfg.model)
        if param == "k":
            model_desc = "frictionless" if val == 0.0 else \
                f"vpower:k={val!r},alpha={base.alpha!r}"
        elif param == "alpha":
            model_desc = f"vpower:k={base.k!r},alpha={val!r}"
        elif param == "eta":
            model_desc = "frictionless" if val == 0.0 else f"coulomb:eta={val!r}"
        elif param == "mu":
            model_desc = "frozen" if val == 0.0 else f"scaled:mu={val!r}"

    profile = parse_profile(profile_desc, cfg.x_max)
    if has_fatal(validate_profile(profile)):
        raise ConfigError(f"profile {profile_desc!r} inadmissible")
    model = parse_model(model_desc)
    chart = build_chart(profile, quad_tol=cfg.quad_tol())
    if isinstance(model, Frozen):
        svals = np.linspace(0.0, chart.s_max, cfg.stations)
        stationed = _frozen_table(chart, svals)
        s_valid = chart.s_max
    else:
        field = solve(chart, model)
        s_end = min(field.s_valid, chart.s_max)
        if s_end <= 1e-12 * (1.0 + chart.s_max):
            return (val, 0.0, 0.0, 0.0, 0.0)
        svals = np.linspace(0.0, s_end, cfg.stations)
        stationed = surface_state(chart, field, svals)
        s_valid = field.s_valid
    last = stationed[-1]
    return (val, last.drag_cum, last.lift_cum, s_valid, last.N)


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p):
    p.add_argument("--profile", help="straight:<deg>deg | poly:<c0>,<c1>,... "
                                     "| power:<c>,<q> | table:<path.csv>")
    p.add_argument("--model", help="frictionless | vpower:k=,alpha= | "
                                   "coulomb:eta= | scaled:mu= | frozen")
    p.add_argument("--xmax", type=float, help="domain upper bound in x")
    p.add_argument("--stations", type=int, help="station count (default 512)")
    p.add_argument("--tol", type=float, help="quadrature tolerance override")
    p.add_argument("--e0", type=float, help="upstream total enthalpy (> 0.5)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="output path")
    p.add_argument("--format", choices=("csv", "json"), help="table format")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ramploads",
        description="Surface loads for hypersonic-limit flow over ramps "
                    "with skin-friction models.")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="compute the station table")
    _add_common(ps)

    pv = sub.add_parser("verify", help="run the verification suite")
    _add_common(pv)
    pv.add_argument("--ds", default="0.04,0.02,0.01",
                    help="comma list of oracle step sizes")
    pv.add_argument("--bump", action="append", default=None,
                    metavar="XC,YC,RX,RY",
                    help="extra bump placement (repeatable; replaces defaults)")
    pv.add_argument("--inject-weight-error", type=float, default=0.0,
                    help="perturb x-momentum weights by this relative factor "
                         "(negative-control diagnostics)")

    pw = sub.add_parser("sweep", help="sweep one parameter")
    _add_common(pw)
    pw.add_argument("--param", required=True,
                    choices=("k", "eta", "mu", "alpha", "theta"))
    pw.add_argument("--values", default="",
                    help="comma list of parameter values (may be empty)")

    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "solve":
        return cmd_solve(cfg)
    if args.command == "verify":
        try:
            ds_list = [float(v) for v in args.ds.split(",") if v.strip()]
            bumps = None
            if args.bump:
                bumps = []
                for i, spec in enumerate(args.bump):
                    vals = [float(v) for v in spec.split(",")]
                    if len(vals) != 4:
                        raise ValueError(f"bump needs 4 numbers, got {spec!r}")
                    name = "straddle" if i == 0 else f"bump{i}"
                    bumps.append((name, BumpTestFunction(*vals)))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_verify(cfg, ds_list=ds_list, bumps=bumps,
                          inject=args.inject_weight_error)
    if args.command == "sweep":
        values = [float(v) for v in args.values.split(",") if v.strip()]
        return cmd_sweep(cfg, args.param, values)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
