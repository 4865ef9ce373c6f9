"""Command-line front end: grid sweeps and reports as CSV or JSON.

Grid syntax shared by all commands: `lin:a:b:n`, `log:a:b:n`, or a comma
list like `0.1,0.4,1.5`. Output is deterministic: identical invocations
produce byte-identical files at any --parallelism setting.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import lattice as lat
from . import normalization, source_model, specfun, transition, units

SCHEMA_VERSION = "1"
LATTICE_SUMMARY_HORIZON = 220.0   # envelope fits need this much time to converge


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- plumbing

def parse_grid(text: str, name: str) -> List[float]:
    if text.startswith(("lin:", "log:")):
        kind, *rest = text.split(":")
        if len(rest) != 3:
            raise UsageError(f"{name}: expected {kind}:start:stop:count, got {text!r}")
        try:
            a, b, n = float(rest[0]), float(rest[1]), int(rest[2])
        except ValueError:
            raise UsageError(f"{name}: non-numeric grid spec {text!r}") from None
        if n < 1:
            raise UsageError(f"{name}: grid count must be >= 1")
        if n == 1:
            vals = [a]
        elif kind == "lin":
            vals = np.linspace(a, b, n).tolist()
        else:
            if a == 0.0 or b == 0.0 or (a < 0.0) != (b < 0.0):
                raise UsageError(f"{name}: log grid endpoints must be nonzero and same-signed")
            vals = np.geomspace(a, b, n).tolist()
    else:
        items = [s for s in text.split(",") if s.strip()]
        try:
            vals = [float(s) for s in items]
        except ValueError:
            raise UsageError(f"{name}: bad numeric list {text!r}") from None
    if not vals:
        raise UsageError(f"{name}: empty grid")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{name}: grid values must be finite")
    if any(hi <= lo for lo, hi in zip(vals, vals[1:])):
        raise UsageError(f"{name}: grid must be strictly increasing")
    return vals


def check_k0i(value: float) -> float:
    if not (-1.0 < value < 0.0):
        raise UsageError(f"k0I must lie in (-1, 0); got {value!r}")
    return value


def fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return repr(f)
    return str(v)


def _json_safe(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def write_text(out: Optional[str], text: str) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def emit_table(
    args,
    command: str,
    params: Dict[str, object],
    columns: Sequence[str],
    rows: Sequence[Sequence[object]],
    summary: Optional[Dict[str, object]] = None,
) -> None:
    if args.format == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(fmt_cell(v) for v in row) for row in rows)
        if summary:
            lines.extend(f"# {k} = {fmt_cell(v)}" for k, v in summary.items())
        write_text(args.out, "\n".join(lines) + "\n")
    else:
        obj = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "params": _json_safe(params),
            "columns": list(columns),
            "rows": [[_json_safe(v) for v in row] for row in rows],
        }
        if summary:
            obj["summary"] = _json_safe(summary)
        write_text(args.out, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def map_rows(worker, items: Sequence, parallelism: int) -> List:
    if parallelism <= 1 or len(items) <= 1:
        return [worker(it) for it in items]
    chunk = max(1, len(items) // (parallelism * 4))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(worker, items, chunksize=chunk))


# ------------------------------------------------------------ row workers
# Top-level functions so ProcessPoolExecutor can pickle them; each rebuilds
# its parameter records from primitives.

def _density_row(item) -> List[object]:
    k0I, x, t, n_total = item
    p = source_model.SourceParams(k0I)
    pt = source_model.SpaceTimePoint(x, t)
    dec = source_model.evaluate_exact(p, pt)
    rho = abs(dec.psi_exact) ** 2
    rho_saddle = math.nan if dec.psi_saddle is None else abs(dec.psi_saddle) ** 2
    rho_pole = abs(dec.psi_pole) ** 2
    if x > 0.0:
        try:
            ratio = transition.ratio_R(p, pt)
        except source_model.SingularConfigurationError:
            ratio = math.nan
    else:
        ratio = math.nan
    return [x, t, rho, rho_saddle, rho_pole, dec.pole_crossed, ratio, rho / n_total]


def _transition_row(item) -> List[object]:
    k0I, x, method = item
    p = source_model.SourceParams(k0I)
    tp = transition.transition_time(p, x, method=method)
    return [x, tp.t_p, tp.density_raw, tp.density_normalized, tp.valid, tp.method]


def _critical_row(item) -> List[object]:
    (k0I,) = item
    p = source_model.SourceParams(k0I)
    pt = transition.critical_density_curve([p], normalized=True)[0]
    return [k0I, pt.x_max, pt.t_p, pt.density_exact, pt.density_approx, pt.valid]


# --------------------------------------------------------------- commands

def cmd_density(args) -> int:
    k0I = check_k0i(args.k0i)
    xs = parse_grid(args.x, "--x")
    ts = parse_grid(args.t_grid, "--t-grid")
    if xs[0] < 0.0:
        raise UsageError("--x: positions must be >= 0")
    if ts[0] <= 0.0:
        raise UsageError("--t-grid: times must be > 0")
    n_total = normalization.total_emitted(source_model.SourceParams(k0I)).n_total
    items = [(k0I, x, t, n_total) for x in xs for t in ts]
    rows = map_rows(_density_row, items, args.parallelism)
    emit_table(
        args,
        "density",
        {"k0i": k0I, "x": args.x, "t_grid": args.t_grid},
        ["x", "t", "rho_exact", "rho_saddle", "rho_pole", "pole_crossed", "R", "rho_normalized"],
        rows,
    )
    return 0


def cmd_transition(args) -> int:
    k0I = check_k0i(args.k0i)
    xs = parse_grid(args.x_grid, "--x-grid")
    if xs[0] <= 0.0:
        raise UsageError("--x-grid: positions must be > 0")
    items = [(k0I, x, args.method) for x in xs]
    rows = map_rows(_transition_row, items, args.parallelism)
    emit_table(
        args,
        "transition",
        {"k0i": k0I, "x_grid": args.x_grid, "method": args.method},
        ["x", "t_p", "rho_at_tp_raw", "rho_at_tp_normalized", "valid", "method"],
        rows,
    )
    return 0


def cmd_critical(args) -> int:
    ks = parse_grid(args.k0i_grid, "--k0i-grid")
    for k in ks:
        check_k0i(k)
    items = [(k,) for k in ks]
    rows = map_rows(_critical_row, items, args.parallelism)
    emit_table(
        args,
        "critical",
        {"k0i_grid": args.k0i_grid},
        ["k0I", "x_max", "t_p", "rho_exact_normalized", "rho_approx_normalized", "valid"],
        rows,
    )
    return 0


def cmd_lattice(args) -> int:
    if not (0.0 < args.delta <= 1.0):
        raise UsageError(f"--delta must be in (0, 1]; got {args.delta!r}")
    try:
        sites = [int(s) for s in args.sites.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sites: bad integer list {args.sites!r}") from None
    if not sites or any(n < 1 for n in sites):
        raise UsageError("--sites: need site indices >= 1")
    if args.t_max <= 0.0:
        raise UsageError("--t-max must be positive")
    n_sites = args.n_sites if args.n_sites else lat.required_sites(args.t_max) + 20
    try:
        p = lat.LatticeParams(delta=args.delta, n_sites=n_sites, t_max=args.t_max)
    except lat.TruncationUnsoundError as err:
        raise UsageError(str(err)) from None
    if max(sites) > p.n_sites:
        raise UsageError(f"--sites: site {max(sites)} exceeds n_sites={p.n_sites}")

    if args.t_grid:
        ts = parse_grid(args.t_grid, "--t-grid")
        if ts[0] < 0.0 or ts[-1] > p.t_max:
            raise UsageError("--t-grid: times must lie within [0, t_max]")
    else:
        ts = np.linspace(0.0, p.t_max, 801).tolist()

    rows: List[List[object]] = []
    for n in sites:
        dens = lat.site_density(p, n, ts)
        rows.extend([t, n, float(d)] for t, d in zip(ts, dens))

    summary = _lattice_summary(args.delta, sites, args.t_max)
    emit_table(
        args,
        "lattice",
        {"delta": args.delta, "sites": args.sites, "t_max": args.t_max, "n_sites": p.n_sites},
        ["t", "n", "density"],
        rows,
        summary=summary,
    )
    return 0


def _lattice_summary(delta: float, sites: List[int], t_max: float) -> Dict[str, object]:
    """Rate/tail/transition metadata, computed on a long-enough horizon.

    The user's t_max may be too short for stable envelope fits, so the
    summary evolves its own chain out to at least LATTICE_SUMMARY_HORIZON.
    """
    t_res = max(t_max, LATTICE_SUMMARY_HORIZON)
    p_res = lat.LatticeParams.for_horizon(delta, t_res)
    summary: Dict[str, object] = {"delta": delta}
    if delta < 1.0:
        summary["gamma_formula"] = p_res.gamma
        summary["fitted_gamma"] = lat.fitted_decay_rate(p_res, n=1)
    else:
        summary["gamma_formula"] = math.nan
        summary["fitted_gamma"] = math.nan
    # Largest requested site: its exponential segment ends earliest, so the
    # late-window power fit is least contaminated by the crossover.
    tail_site = max(sites)
    try:
        summary["tail_exponent"] = lat.tail_exponent(
            p_res, tail_site, window=(0.55 * t_res, 0.95 * t_res)
        )
    except lat.InsufficientWindowError:
        summary["tail_exponent"] = math.nan
    summary["tail_exponent_site"] = tail_site

    reading = None
    if delta < 1.0:
        try:
            reading = lat.resolve_formula_reading(p_res).reading
        except lat.InsufficientWindowError:
            reading = None
    summary["resolved_reading"] = reading if reading else "n/a"
    for n in sites:
        key = f"transition_time_site_{n}"
        if reading and n >= 2:
            t_n = lat.lattice_transition_time(p_res, n, reading)
            summary[key] = math.nan if t_n is None else t_n
        else:
            summary[key] = math.nan
    return summary


def cmd_scenario(args) -> int:
    path = _resolve_config(args.config)
    scenario, config_distance = units.load_scenario_config(path)
    distance = args.distance if args.distance is not None else config_distance
    if distance is None:
        raise UsageError("config has no detector_distance_m; pass --distance")
    if distance <= 0.0:
        raise UsageError("--distance must be positive")
    report = units.scenario_transition_report(scenario, distance)
    obj = {
        "schema_version": SCHEMA_VERSION,
        "command": "scenario",
        "params": {"config": args.config, "distance_m": distance},
        "report": _json_safe(report.to_dict()),
    }
    write_text(args.out, json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return 0


def _resolve_config(name: str) -> str:
    if os.path.exists(name):
        return name
    from importlib import resources

    bundled = resources.files("postexp").joinpath("data", name)
    if bundled.is_file():
        return str(bundled)
    raise UsageError(f"config file {name!r} not found (not a path, not bundled)")


# --------------------------------------------------------------- selftest

def _check_boundary() -> float:
    worst = 0.0
    for k0I in (-0.3, -0.5):
        p = source_model.SourceParams(k0I)
        for t in np.geomspace(0.01, 100.0, 50):
            got = source_model.wavefunction(p, 0.0, float(t))
            worst = max(worst, abs(got - source_model.boundary_value(p, float(t))))
    if worst >= 1e-10:
        raise AssertionError(f"boundary deviation {worst:.3e} >= 1e-10")
    return worst


def _check_faddeeva() -> float:
    dev = abs(specfun.faddeeva(0.0 + 0.0j) - 1.0)
    worst = dev
    for z in (8.0 + 1.0j, -6.0 + 5.0j, 5.0 - 0.5j):
        a = specfun.faddeeva(z)
        b = specfun.faddeeva_asymptotic(z, 6)
        worst = max(worst, abs(a - b) / abs(a))
    z = 0.4 + 0.3j
    h = 1e-6
    fd = (specfun.faddeeva(z + h) - specfun.faddeeva(z - h)) / (2.0 * h)
    worst = max(worst, abs(specfun.faddeeva_derivative(z) - fd) / abs(fd))
    if worst >= 1e-4:
        raise AssertionError(f"worst faddeeva identity deviation {worst:.3e} >= 1e-4")
    return worst


def _check_continuity() -> float:
    p = source_model.SourceParams(-0.3)
    h = 1e-4
    worst = 0.0
    for x, t in ((0.7, 3.0), (2.0, 8.0), (4.0, 15.0)):
        rho_p = source_model.density_and_current(p, source_model.SpaceTimePoint(x, t + h))[0]
        rho_m = source_model.density_and_current(p, source_model.SpaceTimePoint(x, t - h))[0]
        j_p = source_model.density_and_current(p, source_model.SpaceTimePoint(x + h, t))[2]
        j_m = source_model.density_and_current(p, source_model.SpaceTimePoint(x - h, t))[2]
        drho_dt = (rho_p - rho_m) / (2.0 * h)
        dj_dx = (j_p - j_m) / (2.0 * h)
        scale = max(abs(drho_dt), abs(dj_dx), 1e-30)
        worst = max(worst, abs(drho_dt + dj_dx) / scale)
    if worst >= 1e-3:
        raise AssertionError(f"continuity residual {worst:.3e} >= 1e-3")
    return worst


def _check_lattice_norm() -> float:
    p = lat.LatticeParams.for_horizon(0.3, 30.0)
    worst = 0.0
    for state in lat.evolve(p, [0.0, 10.0, 30.0]):
        worst = max(worst, abs(state.norm() - 1.0))
    if worst >= 1e-10:
        raise AssertionError(f"lattice norm deviation {worst:.3e} >= 1e-10")
    return worst


SELFTEST_CHECKS = (
    ("boundary-identity", _check_boundary),
    ("faddeeva-identities", _check_faddeeva),
    ("continuity-residual", _check_continuity),
    ("lattice-norm", _check_lattice_norm),
)


def cmd_selftest(args) -> int:
    failed = False
    for name, fn in SELFTEST_CHECKS:
        try:
            fn()
        except Exception as err:
            print(f"SELFTEST {name}: FAIL ({err})")
            failed = True
            continue
        print(f"SELFTEST {name}: PASS")
    return 1 if failed else 0


# ------------------------------------------------------------------ main

def _add_common(sp) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default=None, help="output path (default stdout)")
    sp.add_argument(
        "--parallelism",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes for grid evaluation (result order is fixed)",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="postexp",
        description="Exponential-to-algebraic decay of an exponentially decaying source.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="density components on an (x, t) grid")
    d.add_argument("--k0i", type=float, required=True)
    d.add_argument("--x", required=True, help="positions: comma list or lin:/log: grid")
    d.add_argument("--t-grid", dest="t_grid", required=True)
    _add_common(d)

    tr = sub.add_parser("transition", help="transition time t_p over an x grid")
    tr.add_argument("--k0i", type=float, required=True)
    tr.add_argument("--x-grid", dest="x_grid", required=True)
    tr.add_argument("--method", choices=("exact_ratio", "late_time"), default="exact_ratio")
    _add_common(tr)

    cr = sub.add_parser("critical", help="largest transition distance over a k0I grid")
    cr.add_argument("--k0i-grid", dest="k0i_grid", required=True)
    _add_common(cr)

    la = sub.add_parser("lattice", help="tight-binding chain densities and fits")
    la.add_argument("--delta", type=float, required=True)
    la.add_argument("--sites", required=True, help="comma list of site indices")
    la.add_argument("--t-max", dest="t_max", type=float, required=True)
    la.add_argument("--n-sites", dest="n_sites", type=int, default=None)
    la.add_argument("--t-grid", dest="t_grid", default=None)
    _add_common(la)

    sc = sub.add_parser("scenario", help="physical-units transition report (JSON)")
    sc.add_argument("--config", required=True, help="scenario config path or bundled name")
    sc.add_argument("--distance", type=float, default=None, help="detector distance in meters")
    sc.add_argument("--out", default=None)
    _add_common_noop(sc)

    sub.add_parser("selftest", help="fast invariant checks, exit 0 iff all pass")
    return ap


def _add_common_noop(sp) -> None:
    # scenario emits a single JSON report; these exist for interface symmetry
    sp.add_argument("--format", choices=("json",), default="json")
    sp.add_argument("--parallelism", type=int, default=1)


DISPATCH = {
    "density": cmd_density,
    "transition": cmd_transition,
    "critical": cmd_critical,
    "lattice": cmd_lattice,
    "scenario": cmd_scenario,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return DISPATCH[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (
        ValueError,
        lat.TruncationUnsoundError,
        units.ScenarioUnrepresentableError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (
        OSError,
        source_model.EvaluationDomainError,
        source_model.SingularConfigurationError,
        normalization.InternalConsistencyError,
        transition.RangeExhaustedError,
        lat.InsufficientWindowError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
