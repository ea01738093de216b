"""
Command-line front end.

Subcommands ``bcf``, ``steady``, ``evolve``, ``sweep`` and ``converge`` read a
TOML config and write CSV (to ``--out`` or stdout). The exit status is 1 when
any row failed and 0 otherwise.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import io
import logging
import math
import sys

import numpy as np

from .bath import correlation_quadrature, validation_grid
from .config import ConfigError, build_model, load_config, \
    parameter_paths, set_path, solver_options, PROPAGATION_DEFAULTS
from .dynamics import converged_steady_state, propagate, steady_state
from .hierarchy import AdoState, build_space
from .models import gibbs_state
from .observables import currents_report, fidelity, report_columns
from .redfield import redfield_generator, redfield_heat_current, \
    redfield_steady_state

__all__ = ["main", "parse_grid", "run_point", "run_sweep",
           "convergence_report", "bcf_table", "evolve_table", "write_csv"]

log = logging.getLogger("heomheat")

METHODS = ("heom", "redfield", "both")


def parse_grid(text):
    """``start:stop:count:lin|log`` to an array (``count`` may be 0)."""
    parts = text.split(":")
    if len(parts) == 3:
        parts.append("lin")
    if len(parts) != 4:
        raise ValueError(f"grid must be start:stop:count:lin|log, got {text!r}")
    start, stop, count, kind = float(parts[0]), float(parts[1]), \
        int(parts[2]), parts[3]
    if count < 0:
        raise ValueError("grid count must be >= 0")
    if kind == "lin":
        return np.linspace(start, stop, count)
    if kind == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log grid needs positive bounds")
        return np.geomspace(start, stop, count)
    raise ValueError(f"grid spacing must be 'lin' or 'log', got {kind!r}")


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def write_csv(rows, columns, out=None):
    """Write ``rows`` (dicts) with a fixed header; returns the text."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore",
                       lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in columns})
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _redfield_row(model):
    gen = redfield_generator(model)
    rho = redfield_steady_state(model, gen)
    row = {}
    names = model.bath_names
    hc = [redfield_heat_current(model, rho, k, gen) for k in range(len(names))]
    for n, q in zip(names, hc):
        row[f"hc_{n}"] = q
        row[f"sec_{n}"] = q
        row[f"eint_{n}"] = math.nan
        row[f"tpc_{n}"] = math.nan
    row["power"] = 0.0
    row["entropy_production"] = -float(np.dot(model.betas, hc))
    row["first_law_residual"] = float(sum(hc))
    return row, rho


def run_point(cfg, method="heom", tol=None, auto_depth=None):
    """One steady-state row for ``cfg``.

    ``auto_depth`` (a relative tolerance) raises the depth from
    ``solver.depth`` until the currents are converged.
    """
    model = build_model(cfg)
    opts = solver_options(cfg)
    if tol is not None:
        opts = dataclasses.replace(opts, tol=tol)
    row = {"method": method}
    rho_heom = None
    if method in ("heom", "both"):
        if auto_depth:
            res = converged_steady_state(model, opts, rtol=auto_depth)
            state = res.state
        else:
            state = steady_state(model, opts)
        rho_heom = state.rho
        row.update(currents_report(model, state, tol=max(opts.tol, 1e-8))
                   .row())
        row["depth"] = state.space.depth
        row["n_ados"] = len(state.space)
    if method in ("redfield", "both"):
        re_row, rho_re = _redfield_row(model)
        if method == "redfield":
            row.update(re_row)
        else:
            for n in model.bath_names:
                row[f"re_hc_{n}"] = re_row[f"hc_{n}"]
            row["fidelity"] = fidelity(rho_heom, rho_re)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    row["status"] = "ok"
    return row


def _columns(cfg, method, lead=()):
    names = build_model(cfg).bath_names
    cols = list(lead) + ["status", "method", "depth", "n_ados"]
    cols += report_columns(names)
    if method == "both":
        cols += [f"re_hc_{n}" for n in names] + ["fidelity"]
    return cols + ["message"]


def _sweep_job(args):
    cfg, axis, value, method, tol, auto_depth = args
    cfg = cfg.copy()
    if axis.endswith(("depth", "n_terms")):
        value = int(round(value))
    set_path(cfg, axis, value)
    try:
        row = run_point(cfg, method, tol, auto_depth)
    except Exception as exc:  # noqa: BLE001 - recorded per row
        log.warning("row %s=%r failed: %s", axis, value, exc)
        row = {"status": "error", "method": method,
               "message": f"{type(exc).__name__}: {exc}"}
    row[axis] = value
    return row


def run_sweep(cfg, axis, grid, method="heom", jobs=1, tol=None,
              auto_depth=None):
    """Rows for every grid value of ``axis`` (in grid order) and columns."""
    valid = parameter_paths(cfg)
    if axis not in valid:
        raise ConfigError(f"unknown axis {axis!r}; valid paths: "
                          f"{', '.join(valid)}")
    columns = _columns(cfg, method, lead=(axis,))
    tasks = [(cfg, axis, float(v), method, tol, auto_depth) for v in grid]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_sweep_job, tasks))
    else:
        rows = [_sweep_job(t) for t in tasks]
    return rows, columns


def convergence_report(cfg, depths, terms, tol=None):
    """Currents for every ``(L, N)`` pair with successive relative changes.

    ``rel_change`` compares with the previous depth at the same ``L``,
    relative to the largest current; depth 0 rows are flagged
    ``current-incapable``.
    """
    model0 = build_model(cfg)
    names = model0.bath_names
    columns = (["n_terms", "depth", "n_ados", "status"]
               + [f"hc_{n}" for n in names] + [f"sec_{n}" for n in names]
               + ["rel_change", "message"])
    rows = []
    for L in terms:
        prev = None
        for N in depths:
            c = cfg.copy()
            set_path(c, "bath.*.n_terms", int(L))
            set_path(c, "solver.depth", int(N))
            row = {"n_terms": L, "depth": N}
            try:
                model = build_model(c)
                if N == 0:
                    space = build_space(model.decompositions(), 0)
                    row.update(n_ados=len(space), status="current-incapable",
                               message="depth 0 has no first-tier ADOs")
                    rows.append(row)
                    continue
                r = run_point(c, "heom", tol)
                row.update({k: r[k] for k in columns if k in r})
                obs = np.array([r[f"hc_{n}"] for n in names]
                               + [r[f"sec_{n}"] for n in names])
                if prev is not None:
                    row["rel_change"] = float(
                        np.max(np.abs(obs - prev))
                        / max(np.max(np.abs(obs)), 1e-300))
                prev = obs
            except Exception as exc:  # noqa: BLE001
                row.update(status="error",
                           message=f"{type(exc).__name__}: {exc}")
            rows.append(row)
    return rows, columns


def bcf_table(cfg, bath=None, grid=None, tol=1e-10):
    """Exact and decomposed ``C(t)`` of one bath on a time grid."""
    model = build_model(cfg)
    k = 0 if bath is None else model.bath_index(bath)
    b = model.baths[k]
    dec = b.decomposition()
    t = validation_grid(b.gamma) if grid is None else np.asarray(grid)
    exact = correlation_quadrature(b.spectral_density, b.beta, t, tol=tol)
    fit = dec.correlation(t)
    rows = [{"t": ti, "re_exact": e.real, "im_exact": e.imag,
             "re_fit": f.real, "im_fit": f.imag, "abs_err": abs(e - f)}
            for ti, e, f in zip(t, exact, fit)]
    return rows, ["t", "re_exact", "im_exact", "re_fit", "im_fit", "abs_err"]


def _initial_rho(model, kind):
    H = model.hamiltonian_at(0.0)
    if kind == "ground":
        return gibbs_state(H, 1e3 / max(np.ptp(np.linalg.eigvalsh(H)), 1e-12))
    if kind == "mixed":
        return np.eye(model.dim, dtype=complex) / model.dim
    if kind == "gibbs":
        return gibbs_state(H, float(np.mean(model.betas)))
    raise ConfigError(f"unknown initial state {kind!r}; use ground, mixed or "
                      "gibbs")


def evolve_table(cfg):
    """Trajectory from a factorized initial state on the propagation grid."""
    model = build_model(cfg)
    prop = dict(PROPAGATION_DEFAULTS)
    prop.update(cfg.propagation)
    opts = solver_options(cfg)
    space = build_space(model.decompositions(), opts.depth,
                        max_ados=opts.max_ados)
    rho0 = _initial_rho(model, prop.get("initial", "ground"))
    times = np.linspace(0.0, float(prop["t_end"]), int(prop["n_out"]))
    traj = propagate(model, AdoState.factorized(space, rho0, opts.scaled),
                     times, dt=prop["dt"] or None,
                     adaptive=bool(prop["adaptive"]), atol=prop["atol"])
    d = model.dim
    names = model.bath_names
    pops = [f"p_{i}" for i in range(d)]
    cohs = [f"{part}_rho_{i}{j}" for i in range(d) for j in range(i + 1, d)
            for part in ("re", "im")]
    columns = (["t"] + pops + cohs + [f"hc_{n}" for n in names]
               + [f"sec_{n}" for n in names] + ["power", "first_law_residual"])
    rows = []
    for t, st in zip(traj.times, traj.states):
        row = {"t": t}
        rho = st.rho
        for i in range(d):
            row[f"p_{i}"] = rho[i, i].real
            for j in range(i + 1, d):
                row[f"re_rho_{i}{j}"] = rho[i, j].real
                row[f"im_rho_{i}{j}"] = rho[i, j].imag
        if opts.depth >= 1:
            r = currents_report(model, st, t, stationary=False)
            row.update(r.row())
        rows.append(row)
    return rows, columns


def _parser():
    p = argparse.ArgumentParser(
        prog="heomheat",
        description="Heat currents of open quantum systems from the "
                    "hierarchical equations of motion.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", default=None, help="CSV output path")
        sp.add_argument("--tol", type=float, default=None,
                        help="steady-state residual tolerance")
        return sp

    sp = common(sub.add_parser("bcf", help="bath correlation function"))
    sp.add_argument("--bath", default=None)
    sp.add_argument("--grid", default=None, help="time grid")

    for name in ("steady", "sweep"):
        sp = common(sub.add_parser(name, help=f"{name} state currents"))
        sp.add_argument("--method", choices=METHODS, default="heom")
        sp.add_argument("--auto-depth", type=float, default=None,
                        metavar="RTOL",
                        help="raise depth until currents change < RTOL")
        if name == "sweep":
            sp.add_argument("--axis", required=True)
            sp.add_argument("--grid", required=True,
                            help="start:stop:count:lin|log")
            sp.add_argument("--jobs", type=int, default=1)

    common(sub.add_parser("evolve", help="time propagation"))

    sp = common(sub.add_parser("converge", help="convergence in N and L"))
    sp.add_argument("--depths", default="0,2,4,6,8")
    sp.add_argument("--terms", default="1,2")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "bcf":
            grid = parse_grid(args.grid) if args.grid else None
            rows, cols = bcf_table(cfg, args.bath, grid)
        elif args.command == "steady":
            try:
                row = run_point(cfg, args.method, args.tol, args.auto_depth)
            except Exception as exc:  # noqa: BLE001
                row = {"status": "error", "method": args.method,
                       "message": f"{type(exc).__name__}: {exc}"}
            rows, cols = [row], _columns(cfg, args.method)
        elif args.command == "sweep":
            rows, cols = run_sweep(cfg, args.axis, parse_grid(args.grid),
                                   args.method, args.jobs, args.tol,
                                   args.auto_depth)
        elif args.command == "evolve":
            rows, cols = evolve_table(cfg)
        else:
            rows, cols = convergence_report(cfg, _int_list(args.depths),
                                            _int_list(args.terms), args.tol)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"heomheat: error: {exc}", file=sys.stderr)
        return 2
    write_csv(rows, cols, args.out)
    failed = [r for r in rows if r.get("status") == "error"]
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
