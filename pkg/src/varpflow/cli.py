"""Batch driver: ``varpflow <mode> --config <path> [--out <dir>] [--plots]``.

Exit codes: 0 success, 1 usage or configuration error, 2 solver
non-convergence, 3 audit or verification failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

from . import diagnostics as diag
from .config import MODES, ConfigError, load_config
from .constitutive import audit_assumptions
from .holefill import HoleFillCase, case_from_section, check_conclusion, check_hypothesis, replay
from .manufactured import make_sources, mms_error, standard_case
from .solver import ProblemData, TruncationFailure, solve_coupled, truncation_loop
from .spectral import get_grid, read_field, write_field

log = logging.getLogger("varpflow")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_FAILED = 0, 1, 2, 3


def _fmt(x):
    return diag._fmt(x)


def _write_rows(path, rows):
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])


def _err(msg):
    print(f"varpflow: {msg}", file=sys.stderr)


def _problem(cfg):
    if cfg.data_source == "zero":
        return ProblemData.zero(cfg.solver.grid, cfg.model, cfg.r)
    if cfg.data_source == "file":
        return ProblemData(read_field(cfg.f_path), read_field(cfg.g_path), cfg.model, cfg.r)
    case = standard_case(cfg.model)
    f, g = make_sources(case)
    return ProblemData(f, g, cfg.model, cfg.r)


def _solve(data, cfg):
    """Solve per config; returns ``(state, exit_code)``."""
    try:
        st = truncation_loop(data, cfg.solver) if cfg.truncation else solve_coupled(data, cfg.solver)
    except TruncationFailure as exc:
        _err(str(exc))
        return exc.state, EXIT_NONCONVERGED
    if not st.converged:
        hist = st.residual_history
        _err(f"{st.message}; last residuals {', '.join(f'{r:.3e}' for r in hist[-3:])}")
        return st, EXIT_NONCONVERGED
    return st, EXIT_OK


def _history_rows(st):
    return [{"iteration": i, "relative_residual": r} for i, r in enumerate(st.residual_history)]


def run_solve(cfg, out, plots):
    data = _problem(cfg)
    st, code = _solve(data, cfg)
    write_field(os.path.join(out, "velocity.txt"), st.velocity)
    write_field(os.path.join(out, "concentration.txt"), st.c)
    _write_rows(os.path.join(out, "residual_history.csv"), _history_rows(st))
    _write_rows(os.path.join(out, "truncation.csv"),
                [{"A": a, "max_shear": s, "converged": c} for a, s, c in st.shear_history])
    if code == EXIT_OK:
        rep = diag.energy_report(st, data)
        rep.to_csv(os.path.join(out, "energy.csv"))
        rep.summary_csv(os.path.join(out, "energy_summary.csv"))
    if plots:
        _try_plot(diag.plot_residuals, st.residual_history, os.path.join(out, "residuals.png"))
    print(f"solve: {st.message}")
    return code


def run_mms(cfg, out, plots):
    case = standard_case(cfg.model)
    f, g = make_sources(case)
    data = ProblemData(f, g, cfg.model, cfg.r)
    rows = []
    code = EXIT_OK
    for n in cfg.mms_levels:
        sub = replace(cfg, solver=replace(cfg.solver, n_modes=n, mean_c=case.mean_c))
        st, c = _solve(data, sub)
        err = mms_error(st, case)
        err.update(A=st.A, iterations=st.iterations, converged=st.converged)
        rows.append(err)
        code = max(code, c)
    _write_rows(os.path.join(out, "mms.csv"), rows)
    for key in ("velocity_l2", "velocity_h1", "concentration_l2"):
        vals = [r[key] for r in rows]
        bad = [i for i in range(1, len(vals)) if vals[i] > vals[i - 1]]
        if bad and code == EXIT_OK:
            i = bad[0]
            _err(f"mms: {key} increased from n={rows[i - 1]['n_modes']} ({vals[i - 1]:.3e}) "
                 f"to n={rows[i]['n_modes']} ({vals[i]:.3e})")
            code = EXIT_FAILED
    print("mms: " + "; ".join(f"n={r['n_modes']} v_L2={r['velocity_l2']:.3e} c_L2={r['concentration_l2']:.3e}"
                              for r in rows))
    return code


def run_audit(cfg, out, plots):
    audit = audit_assumptions(cfg.model, cfg.audit_A, cfg.audit_samples)
    _write_rows(os.path.join(out, "audit.csv"), list(audit.rows()))
    for r in audit.rows():
        if not r["passed"]:
            _err(f"audit: {r['check']} failed; witness {r['witness']}")
    print(f"audit: {'pass' if audit.ok else 'FAIL'}")
    return EXIT_OK if audit.ok else EXIT_FAILED


def run_holefill(cfg, out, plots):
    case: HoleFillCase = case_from_section(cfg.holefill)
    hyp = check_hypothesis(case)
    rows = []
    for r in hyp.rows():
        rows.append({"check": "hypothesis", **r})
    code = EXIT_OK
    if not hyp.passed:
        bad = next(r for r in hyp.rows() if not r["passed"])
        _err(f"holefill: hypothesis fails at R={bad['radius']!r}: {bad['lhs']!r} > {bad['rhs']!r}")
        code = EXIT_FAILED
    else:
        concl = check_conclusion(case, hyp)
        for r in concl.rows():
            rows.append({"check": "conclusion", **r})
        rep = replay(case)
        rows.append({"check": "replay", "factor": rep.factor, "iter6_bound": rep.iter6_bound,
                     "eta_top": rep.eta_top, "passed": rep.passed})
        if not (concl.passed and rep.passed):
            _err("holefill: conclusion or proof replay failed")
            code = EXIT_FAILED
    _write_rows(os.path.join(out, "holefill.csv"), rows)
    print(f"holefill: mu={case.mu!r} beta_min={hyp.beta_min!r} {'pass' if code == 0 else 'FAIL'}")
    return code


def run_probe(cfg, out, plots):
    data = _problem(cfg)
    st, code = _solve(data, cfg)
    if code != EXIT_OK:
        return code
    reports = [
        diag.energy_report(st, data),
        diag.weighted_h2_report(st, data),
        diag.caccioppoli_report(st, data, cfg.probes, cfg.delta),
        diag.hole_start_report(st, data, cfg.probes, cfg.nu, cfg.delta),
        diag.key_estimate_report(st, data, cfg.probes, cfg.mu_grid, cfg.nu, cfg.delta,
                                 mu_floor=cfg.mu_floor),
    ]
    for rep in reports:
        rep.to_csv(os.path.join(out, f"{rep.name}.csv"))
        rep.summary_csv(os.path.join(out, f"{rep.name}_summary.csv"))
        if not rep.passed:
            where = f" worst probe {rep.worst}" if rep.worst else ""
            _err(f"probe: {rep.name} failed (constant {rep.constant!r}){where}")
            code = EXIT_FAILED
    if plots:
        _try_plot(diag.plot_decay, reports[-1], os.path.join(out, "key_decay.png"))
    print("probe: " + ", ".join(f"{r.name}={'pass' if r.passed else 'FAIL'}" for r in reports))
    return code


def _try_plot(func, obj, path):
    try:
        func(obj, path)
    except Exception as exc:  # plots never change the exit status
        log.warning("plot %s skipped: %s", path, exc)


RUNNERS = {"solve": run_solve, "mms": run_mms, "audit": run_audit, "holefill": run_holefill,
           "probe": run_probe}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varpflow", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output directory (overrides [run] out)")
    p.add_argument("--plots", action="store_true", help="also write PNG plots")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.mode)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    out = args.out or cfg.out
    os.makedirs(out, exist_ok=True)
    get_grid(cfg.solver.n_modes)
    try:
        return RUNNERS[cfg.mode](cfg, out, args.plots)
    except (ValueError, FileNotFoundError) as exc:
        _err(f"{cfg.mode}: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
