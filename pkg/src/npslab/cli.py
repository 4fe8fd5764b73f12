"""Command-line interface.

Subcommands: steady | criteria | evolve | flowcheck | sweep | selftest.
Exit codes: 0 success, 2 numerical failure, 64 configuration error.
Output directory: --out, else the NPSLAB_OUT environment variable, else the
current directory.  Every artifact path is printed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from . import criteria as crit
from . import evolve as ev
from . import flowcheck, steady1d
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .core import ValidationError

EXIT_OK = 0
EXIT_NUMERIC = 2
EXIT_CONFIG = 64


def _outdir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get("NPSLAB_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x):
    if isinstance(x, float):
        return repr(float(x))
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return str(x)


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    print(f"wrote {path}")


def _json_default(obj):
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _load(args) -> RunConfig:
    if not getattr(args, "config", None):
        raise ConfigError("--config is required for this command")
    return load_config(args.config)


def _solve_with_grid(cfg: RunConfig, n=None, tol=None):
    spec = cfg.grid if n is None else dataclasses.replace(cfg.grid, n=n)
    grid = spec.build(cfg.bc.length)
    opts = steady1d.GummelOptions() if tol is None else steady1d.GummelOptions(
        outer_tol=tol, newton_tol=tol)
    return steady1d.solve_steady_1d(cfg.params, cfg.bc, grid, opts)


def _write_state_table(path: Path, state) -> None:
    eta1, eta2 = state.slotboom()
    mu1, mu2 = state.chemical_potentials()
    cols = np.column_stack([state.grid.nodes, state.c1, state.c2, state.phi,
                            eta1, eta2, mu1, mu2])
    with open(path, "w") as fh:
        fh.write("x c1 c2 phi eta1 eta2 mu1 mu2\n")
        for row in cols:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    print(f"wrote {path}")


def cmd_steady(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    state = _solve_with_grid(cfg, args.grid, args.tol)
    bounds = steady1d.check_bounds(state, cfg.bc)
    r1, r2, rphi = steady1d.residual_steady(state, cfg.params)
    d1, d2 = steady1d.current_deviation(state)
    summary = {
        "n": state.grid.n,
        "j1": state.j1, "j2": state.j2,
        "bounds": dataclasses.asdict(bounds),
        "residuals": {"r1": r1, "r2": r2, "rphi": rphi},
        "current_deviation": {"c1": d1, "c2": d2},
    }

    if args.refine:
        n0 = args.grid or cfg.grid.n
        rows = []
        prev = None
        for k in range(args.refine + 1):
            n = (n0 - 1) * 2**k + 1
            s = _solve_with_grid(cfg, n, args.tol)
            dev = max(steady1d.current_deviation(s))
            h = s.grid.length / (n - 1)
            order = (np.log(prev[1] / dev) / np.log(prev[0] / h)
                     if prev else float("nan"))
            rows.append({"n": n, "h": h, "flux_deviation": dev, "order": order})
            prev = (h, dev)
        summary["refinement"] = rows
        for row in rows:
            print(f"n={row['n']:>6d}  h={row['h']:.3e}  "
                  f"dev={row['flux_deviation']:.6e}  order={row['order']:.3f}")

    _write_state_table(out / "state.txt", state)
    _write_json(out / "steady_summary.json", summary)
    print(f"j1={state.j1:.12g} j2={state.j2:.12g} "
          f"bounds_ok={bounds.satisfied} max_violation={bounds.max_violation:.3e}")
    return EXIT_OK


def cmd_criteria(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    state = _solve_with_grid(cfg, args.grid, args.tol)
    j1, j2 = steady1d.currents(state)
    best_delta, best_kappa = crit.scan_delta(cfg.params, cfg.bc, j1, j2)
    report = crit.weak_current_check(cfg.params, cfg.bc, j1, j2, best_delta)
    suff = crit.sufficient_boundary_conditions(cfg.params, cfg.bc)
    summary = {
        "j1": j1, "j2": j2,
        "report": dataclasses.asdict(report),
        "sufficient": dataclasses.asdict(suff),
        "threshold": crit.THRESHOLD,
        "margin1": crit.THRESHOLD - report.lhs1,
        "margin2": crit.THRESHOLD - report.lhs2,
        "best_delta": best_delta, "best_kappa": best_kappa,
    }
    _write_json(out / "criteria_summary.json", summary)
    print(f"weak_current_ok={report.weak_current_ok} "
          f"lhs=({report.lhs1:.6g}, {report.lhs2:.6g}) threshold={crit.THRESHOLD:.6g} "
          f"kappa(delta={best_delta:g})={best_kappa:.6g}")
    return EXIT_OK


def _build_evolve_config(cfg: RunConfig, args) -> tuple[ev.EvolveConfig, float]:
    e = dict(cfg.evolve)
    if not e:
        raise ConfigError("config has no [evolve] section")
    delta = e.pop("delta", 0.0)
    if getattr(args, "seed", None) is not None:
        e["seed"] = args.seed
    try:
        return ev.EvolveConfig(params=cfg.params, bc=cfg.bc, **e), delta
    except (ValidationError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _write_diagnostics_csv(path: Path, series) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ev.FIELDS)
        for row in series:
            w.writerow([_fmt(getattr(row, f)) for f in ev.FIELDS])
    print(f"wrote {path}")


def _write_snapshot(path: Path, state, sim) -> None:
    ops = sim.ops
    uxc = 0.5 * (state.ux[:-1] + state.ux[1:])
    uyc = 0.5 * (state.uy + np.roll(state.uy, -1, axis=1))
    with open(path, "w") as fh:
        fh.write(f"nx {state.nx} ny {state.ny} L {state.length!r} "
                 f"time {state.time!r}\n")
        for i in range(state.nx):
            for j in range(state.ny):
                vals = (ops.xc[i], ops.yc[j], state.c1[i, j], state.c2[i, j],
                        state.phi[i, j], state.pressure[i, j],
                        uxc[i, j], uyc[i, j])
                fh.write(" ".join(repr(float(v)) for v in vals) + "\n")
    print(f"wrote {path}")


def _maybe_plot(out: Path, series) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping plots")
        return
    t = [r.time for r in series]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.semilogy(t, [max(r.energy_f, 1e-300) for r in series])
    ax1.set_xlabel("t"); ax1.set_ylabel("free energy")
    ax2.plot(t, [r.m_hi for r in series], label="max")
    ax2.plot(t, [r.m_lo for r in series], label="min")
    ax2.set_xlabel("t"); ax2.set_ylabel("concentration extremes")
    ax2.legend()
    fig.tight_layout()
    path = out / "evolve_monitors.svg"
    fig.savefig(path)
    plt.close(fig)
    print(f"wrote {path}")


def cmd_evolve(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    econf, delta = _build_evolve_config(cfg, args)
    sim = ev.StripSimulator(econf)
    series, final = ev.run(econf)
    _write_diagnostics_csv(out / "diagnostics.csv", series)
    _write_snapshot(out / "fields.txt", final, sim)

    j1, j2 = sim.ref_j
    report = crit.weak_current_check(cfg.params, cfg.bc, j1, j2, delta)
    t_entry = ev.entry_time(series, cfg.bc, delta)
    summary = {
        "t_end": final.time,
        "steps": int(round(econf.t_end / econf.dt)),
        "delta": delta,
        "entry_time": t_entry,
        "reference_currents": [j1, j2],
        "weak_current_ok": report.weak_current_ok,
        "kappa_delta": report.kappa_delta,
        "final_energy_f": series[-1].energy_f,
        "max_divergence": float(np.max(np.abs(sim.divergence(final)))),
    }

    certified = None
    if t_entry is not None:
        try:
            rate, certified = ev.decay_fit(series, report.kappa_delta, t_entry)
            summary["fitted_rate"] = rate
            summary["certified"] = certified
        except ValueError as exc:
            summary["decay_fit_error"] = str(exc)
    _write_json(out / "evolve_summary.json", summary)
    if args.plot:
        _maybe_plot(out, series)

    print(f"t={final.time:g} entry_time={t_entry} "
          f"energy_f={series[-1].energy_f:.6e} certified={certified}")
    if args.certify:
        if not report.weak_current_ok:
            print("certification not applicable: weak-current criterion false")
            return EXIT_OK
        return EXIT_OK if certified else EXIT_NUMERIC
    return EXIT_OK


def cmd_flowcheck(args) -> int:
    out = _outdir(args)
    curve = flowcheck.load_curve(args.curve)
    result = flowcheck.flow_indicator(curve, tol=args.tol)
    summary = {
        "i1": result.i1, "i2": result.i2,
        "predicts_flow": result.predicts_flow, "tol": result.tol,
        "components": [{"i1": a, "i2": b, "i1_plus_i2": a + b}
                       for a, b in result.per_component],
    }
    _write_json(out / "flowcheck_summary.json", summary)
    print(f"i1={result.i1:.12g} i2={result.i2:.12g} "
          f"predicts_flow={result.predicts_flow}")
    for k, (a, b) in enumerate(result.per_component):
        print(f"  component {k}: i1={a:.12g} i2={b:.12g} i1+i2={a + b:.3e}")
    return EXIT_OK


_SWEEP_COLUMNS = ("j1", "j2", "lhs1", "lhs2", "weak_current_ok",
                  "kappa0", "best_delta", "best_kappa")


def _sweep_point(cfg: RunConfig, keys, values, n, tol):
    point = apply_overrides(cfg, **dict(zip(keys, values)))
    state = _solve_with_grid(point, n, tol)
    j1, j2 = steady1d.currents(state)
    rep = crit.weak_current_check(point.params, point.bc, j1, j2, 0.0)
    bd, bk = crit.scan_delta(point.params, point.bc, j1, j2)
    return dict(zip(keys, values)) | {
        "j1": j1, "j2": j2, "lhs1": rep.lhs1, "lhs2": rep.lhs2,
        "weak_current_ok": rep.weak_current_ok, "kappa0": rep.kappa_delta,
        "best_delta": bd, "best_kappa": bk,
    }


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    keys = sorted(cfg.sweep)
    grids = [cfg.sweep[k] for k in keys]
    points = list(product(*grids)) if keys else [()]

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [pool.submit(_sweep_point, cfg, keys, vals, args.grid, args.tol)
                   for vals in points]
        rows = [f.result() for f in futures]   # completion order irrelevant

    path = out / "sweep.csv"
    header = list(keys) + list(_SWEEP_COLUMNS)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import acceptance
    failures = 0
    for number, name, passed, detail in acceptance.run_all(verbose=True):
        status = "PASS" if passed else "FAIL"
        print(f"[{status}] criterion {number}: {name} -- {detail}")
        failures += 0 if passed else 1
    print(f"{failures} failure(s)")
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="npslab",
        description="Electrodiffusion/Stokes laboratory: steady currents, "
                    "stability criteria, strip simulation, flow criterion.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="path to the INI configuration")
        p.add_argument("--out", help="output directory (default $NPSLAB_OUT or .)")
        p.add_argument("--tol", type=float, default=None,
                       help="solver tolerance override")

    p = sub.add_parser("steady", help="solve the 1D steady problem")
    common(p)
    p.add_argument("--grid", type=int, default=None, help="override grid size")
    p.add_argument("--refine", type=int, default=0,
                   help="extra grid doublings for a convergence-order table")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("criteria", help="evaluate stability constants and criteria")
    common(p)
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("evolve", help="run the 2D strip simulation")
    common(p)
    p.add_argument("--certify", action="store_true",
                   help="exit nonzero unless the decay certificate holds")
    p.add_argument("--seed", type=int, default=None,
                   help="override the random-initial-data seed")
    p.add_argument("--plot", action="store_true", help="emit SVG monitor charts")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("flowcheck", help="evaluate the nonzero-flow boundary integrals")
    p.add_argument("curve", help="columnar curve file (s x y gamma1 gamma2 w)")
    common(p, config=False)
    p.set_defaults(func=cmd_flowcheck)

    p = sub.add_parser("sweep", help="Cartesian parameter sweep of the criteria")
    common(p)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="concurrent solves")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the acceptance-criteria suite")
    common(p, config=False)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (flowcheck.CurveFormatError, ValidationError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (steady1d.ConvergenceError, ev.CFLError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
