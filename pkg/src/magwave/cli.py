"""Command-line front end.

``magwave <command> [--config FILE] [--out DIR] [--seed N] [--threads N]
[--format csv,json,gp]``. Exit status is 0 on success, 2 when a checked
property fails (``summary.json`` is still written) and 1 on input errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import COMMANDS

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2

USAGE_EPILOG = "commands: " + ", ".join(COMMANDS)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n{USAGE_EPILOG}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="magwave", description="Magnetic waveguide spectra and Hardy constants.",
                epilog=USAGE_EPILOG)
    p.add_argument("command", choices=COMMANDS, metavar="command")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    p.add_argument("--threads", type=int, help="BLAS/OpenMP thread count")
    p.add_argument("--format", help="comma separated subset of csv,json,gp")
    return p


# ---------------------------------------------------------------------------
# builders from configuration

def _field(cfg):
    """Bounded field from ``[field]``, centered at ``(0, y0)``; None for AB."""
    from .gauge import MagneticField
    f = cfg.section("field")
    kind = "constant_patch" if f["kind"] == "reference" else f["kind"]
    if kind == "aharonov_bohm":
        return None
    if kind == "zero":
        return MagneticField("zero", y0=f["y0"])
    R_in = f["R_in"] if kind == "constant_patch" else 0.0
    return MagneticField(kind, B0=f["B0"], R_B=f["R_B"], R_in=R_in, center=(0.0, f["y0"]),
                         y0=f["y0"], alpha=f["alpha"])


def _potential(cfg):
    from .gauge import ab_potential, transversal_potential
    f = cfg.section("field")
    if f["kind"] == "aharonov_bohm":
        return ab_potential(f["Phi"], (0.0, f["y0"]))
    B = _field(cfg)
    return None if B.is_zero else transversal_potential(B)


def _profile(cfg, kind: str):
    from .geometry import bump_profile, bump_with_integral, table_profile
    g = cfg.section("geometry")
    if g["profile"] == "table":
        return table_profile(kind, g["table_x"], g["table_values"])
    if kind == "curvature":
        return bump_profile(kind, g["curvature_height"], g["curvature_width"], g["center"])
    if g["height"] > 0:
        return bump_profile(kind, g["height"], g["width"], g["center"])
    return bump_with_integral(kind, g["area"], g["width"], g["center"])


def _grid(cfg, ab_point=None, h=None, L=None, graded=None):
    from .assembly import StripGrid
    d = cfg.section("discretization")
    h = h or d["h"]
    if graded or (graded is None and d["mesh"] == "graded"):
        return StripGrid.graded_grid(d["core"], h, d["L_far"], d["n_y"], d["ratio"], ab_point)
    L = L or d["L"]
    n_x = d["n_x"] or int(round(2 * L / h)) + 1
    n_y = d["n_y"]
    if ab_point is not None:
        n_x += n_x % 2
        n_y += n_y % 2
    return StripGrid.uniform(L, n_x, n_y, ab_point)


def _ab_point(A):
    return None if A is None or A.kind != "aharonov_bohm" else A.p


# ---------------------------------------------------------------------------
# commands; each returns (stem, rows, record, checks)

def cmd_spectrum(cfg, seed):
    from .assembly import assemble_curved, assemble_deformed, assemble_straight
    from .eigensolve import discrete_spectrum_below_threshold
    g, d = cfg.section("geometry"), cfg.section("discretization")
    A = _potential(cfg)
    grid = _grid(cfg, _ab_point(A))
    if g["mode"] == "deformed":
        system = assemble_deformed(_profile(cfg, "deformation"), g["lambda"], A, grid)
    elif g["mode"] == "curved":
        system = assemble_curved(_profile(cfg, "curvature"), g["beta"], A, grid)
    else:
        system = assemble_straight(A, grid)
    threshold = grid.transverse_threshold() if grid.graded else 1.0
    margin = 0.0 if grid.graded else d["margin"]
    res = discrete_spectrum_below_threshold(system, threshold, margin, tol=d["tol"], seed=seed)
    record = res.to_dict()
    record["grid"] = {k: v for k, v in grid.to_dict().items() if k != "xs"}
    return "eigen", res.csv_rows(), record, {"certified": res.certificate["certified"]}


def cmd_hardy_constant(cfg, seed):
    from .experiments import numeric_hardy_constant
    from .gauge import transversal_potential
    from .hardy import hardy_certificate
    from .errors import ConfigError
    B = _field(cfg)
    if B is None or B.is_zero:
        raise ConfigError("hardy-constant needs a non-zero bounded field", "field.kind")
    cert = hardy_certificate(B, None, cfg["field.R"])
    A = transversal_potential(B)
    nums = [numeric_hardy_constant(A, _grid(cfg, h=h), seed=seed) for h in cfg["discretization.resolutions"]]
    rows = [(k, getattr(cert, k)) for k in ("mu0", "r0", "nu0", "c0", "c1", "c2", "c3", "c4", "c5",
                                            "c6", "c_H")]
    rows += [(f"c_num[h={h}]", n.c_num) for h, n in zip(cfg["discretization.resolutions"], nums)]
    record = {"certificate": cert.to_dict(), "numeric": [n.to_dict() for n in nums]}
    return "hardy", rows, record, {"c_num_dominates_c_H": all(n.c_num >= cert.c_H for n in nums),
                                   "chi_r0_is_one": abs(cert.chi_r0 - 1) <= 1e-8}


def cmd_ab_hardy(cfg, seed):
    from .experiments import numeric_hardy_constant
    from .gauge import ab_potential
    from .hardy import ab_certificate
    f = cfg.section("field")
    cert = ab_certificate(f["Phi"], f["y0"], f["R"])
    A = ab_potential(f["Phi"], (0.0, f["y0"]))
    nums = [numeric_hardy_constant(A, _grid(cfg, A.p, h=h), seed=seed)
            for h in cfg["discretization.resolutions"]]
    rows = [(k, getattr(cert, k)) for k in ("Psi", "c13", "c14", "c15", "c16", "c_AB", "inv_c16")]
    rows += [(f"c_num[h={h}]", n.c_num) for h, n in zip(cfg["discretization.resolutions"], nums)]
    record = {"certificate": cert.to_dict(), "numeric": [n.to_dict() for n in nums]}
    return "hardy", rows, record, {"c_num_dominates_c_AB": all(n.c_num >= cert.c_AB for n in nums),
                                   "c_AB_below_inv_c16": cert.c_AB <= cert.inv_c16}


def cmd_certify(cfg, seed):
    from .experiments import curved_threshold, deformed_threshold
    from .hardy import ab_certificate, threshold_certificate, weak_field_asymptotics
    f = cfg.section("field")
    fprof, gprof = _profile(cfg, "deformation"), _profile(cfg, "curvature")
    if f["kind"] == "aharonov_bohm":
        cert = ab_certificate(f["Phi"], f["y0"], f["R"])
        lam = threshold_certificate("deformed_ab", {"f": fprof.sup_norm, "fp": fprof.deriv_sup_norm,
                                                    "d": fprof.d}, cert)
        bet = threshold_certificate("curved_ab", {"gamma": gprof.sup_norm, "gammap": gprof.deriv_sup_norm,
                                                  "d": gprof.d}, cert)
        rows = [(k, getattr(cert, k)) for k in ("Psi", "c13", "c14", "c15", "c16", "c_AB")]
        record = {"ab_certificate": cert.to_dict()}
        consts = [cert.c_AB]
    else:
        B = _field(cfg)
        lam = deformed_threshold(B, fprof, f["R"])
        bet = curved_threshold(B, gprof, f["R"])
        from .hardy import hardy_certificate
        cert = hardy_certificate(B, None, f["R"])
        weak_f = weak_field_asymptotics(B, None, f["R"], {"f": fprof.sup_norm, "fp": fprof.deriv_sup_norm,
                                                          "d": fprof.d})
        weak_g = weak_field_asymptotics(B, None, f["R"], {"gamma": gprof.sup_norm,
                                                          "gammap": gprof.deriv_sup_norm, "d": gprof.d})
        weak = replace(weak_f, k12=weak_g.k12, beta_coeff=weak_g.beta_coeff)
        rows = [(k, getattr(cert, k)) for k in ("mu0", "r0", "nu0", "c0", "c1", "c2", "c3", "c4", "c5",
                                                "c6", "c_H")]
        rows += [(k, getattr(weak, k)) for k in ("k1", "k2", "k4", "k9", "k9_printed", "k12",
                                                 "hardy_coeff", "lambda_coeff", "lambda_coeff_printed",
                                                 "beta_coeff")]
        record = {"hardy_certificate": cert.to_dict(), "weak_field": weak.to_dict()}
        consts = [getattr(cert, f"c{i}") for i in range(7)] + [cert.c_H]
    rows += sorted(lam.constants.items()) + sorted(bet.constants.items())
    rows += [("lambda0", lam.threshold), ("beta0", bet.threshold)]
    record.update({"lambda0": lam.to_dict(), "beta0": bet.to_dict()})
    return "certificate", rows, record, {"all_positive": all(c > 0 for c in consts)
                                         and lam.threshold > 0 and bet.threshold > 0}


def cmd_threshold_scan(cfg, seed):
    from .experiments import threshold_scan
    B = _field(cfg)
    from .errors import ConfigError
    if B is None or B.is_zero:
        raise ConfigError("threshold-scan needs a non-zero bounded field", "field.kind")
    res = threshold_scan(B, _profile(cfg, "deformation"), cfg["geometry.alphas"],
                         tol=cfg["discretization.bisection_tol"], grid=_grid(cfg, graded=True),
                         progress=lambda p: logging.info("alpha=%g lambda*=%g", p.alpha, p.lam_star))
    rows = [(p.alpha, p.lam_star, p.lam0, 0.0) for p in res.points]
    checks = {"bracket_respected": not res.failures}
    if res.slope is not None:
        checks["slope_within_2_pm_0.3"] = abs(res.slope - 2) <= 0.3
    return "scan", rows, res.to_dict(), checks


def cmd_trial_function(cfg, seed):
    import numpy as np

    from .experiments import TrialFunctionSpec, loglog_slope, trial_norm_formula, trial_quotient
    g = cfg.section("geometry")
    A = _potential(cfg)
    s, b = g["trial_s"], g["trial_beta"]
    rows, recs = [], []
    for lam in g["lambdas"]:
        spec = TrialFunctionSpec(s, b, lam)
        q = trial_quotient(spec, A, 1.0)
        half = 1 - lam**2 * s**2 * b**2 / 2
        full = 1 - lam**2 * s**2 * b**2
        rows.append((lam, q.norm_sq, trial_norm_formula(spec), q.grad_quotient, half, full,
                     q.magnetic_quotient))
        recs.append(q.to_dict())
    lams = np.array([r[0] for r in rows])
    norm_err = max(abs(r[1] / r[2] - 1) for r in rows)
    res_half = [abs(r[3] - r[4]) for r in rows]
    res_full = [abs(r[3] - r[5]) for r in rows]
    record = {"s": s, "beta": b, "quotients": recs, "norm_rel_error": norm_err,
              "residual_half": res_half, "residual_full": res_full}
    checks = {"norm_formula_0.1pct": norm_err <= 1e-3}
    if len(lams) >= 2:
        record["slope_half"] = loglog_slope(lams, res_half)[0]
        record["slope_full"] = loglog_slope(lams, res_full)[0]
        checks["expansion_full_cubic"] = record["slope_full"] >= 2.5
    return "trial", rows, record, checks


def cmd_bgrs(cfg, seed):
    from .experiments import bgrs_asymptotic
    f = _profile(cfg, "deformation")
    res = bgrs_asymptotic(f, cfg["geometry.lambdas"], _grid(cfg, graded=True), seed=seed)
    rows = [(lam, t, k, e, c) for lam, t, k, e, c in
            zip(res.lams, res.thetas, res.thresholds, res.binding, res.coefficients)]
    target = res.target
    return "bgrs", rows, res.to_dict(), {"coefficient_within_25pct":
                                         0.75 * target <= res.coefficient <= 1.25 * target}


def cmd_curve(cfg, seed):
    import numpy as np

    from .geometry import check_self_intersection, reconstruct_curve
    gamma = _profile(cfg, "curvature")
    beta = cfg["geometry.beta"]
    kg = gamma.scaled(beta)
    xs = np.linspace(kg.x_lo - 5.0, kg.x_hi + 5.0, 401)
    curve = reconstruct_curve(kg, xs)
    a, b, *_ = curve.frame(xs)
    theta = curve.angle(xs)
    rows = list(zip(xs, a, b, theta))
    crossing = check_self_intersection(curve)
    record = {"beta": beta, "profile": gamma.to_dict(), "theta_total": curve.theta_tot,
              "self_intersecting": crossing}
    return "curve", rows, record, {"no_self_intersection": not crossing}


def cmd_ess_probe(cfg, seed):
    import numpy as np

    from .experiments import essential_spectrum_probe
    A = _potential(cfg)
    d = cfg.section("discretization")
    res = essential_spectrum_probe(A, d["lengths"], d["h"], d["n_y"], seed=seed)
    rows = list(zip(res.lengths, res.theta_min, res.deficit))
    checks = {"deficit_monotone": res.monotone}
    if A is None:
        exact = [1 + (np.pi / (2 * L)) ** 2 for L in res.lengths]
        checks["matches_separation_of_variables_1pct"] = all(
            abs(t - e) <= 0.01 * e for t, e in zip(res.theta_min, exact))
    else:
        tol = 5e-3 if A.kind == "aharonov_bohm" else 1e-3
        checks["deficit_below_tolerance"] = res.deficit[-1] <= tol
    return "ess", rows, res.to_dict(), checks


def cmd_diamagnetic(cfg, seed):
    from .experiments import diamagnetic_check
    A = _potential(cfg)
    d = cfg.section("discretization")
    grid = _grid(cfg, _ab_point(A), h=min(d["h"], 0.05), L=d["box"], graded=False)
    res = diamagnetic_check(A, grid, d["n_random"], seed=seed)
    rows = list(enumerate(res.values))
    return "diamagnetic", rows, res.to_dict(), {"no_violation": res.violations == 0}


COMMAND_TABLE = {
    "spectrum": cmd_spectrum, "hardy-constant": cmd_hardy_constant, "ab-hardy": cmd_ab_hardy,
    "certify": cmd_certify, "threshold-scan": cmd_threshold_scan,
    "trial-function": cmd_trial_function, "bgrs": cmd_bgrs, "curve": cmd_curve,
    "ess-probe": cmd_ess_probe, "diamagnetic": cmd_diamagnetic,
}


# ---------------------------------------------------------------------------

def run(command: str, config_path=None, out=None, seed=None, formats=None) -> int:
    """Run one command; returns the exit status."""
    from .config import load_config
    from .emit import emit, write_json
    from .errors import BracketFailure, MagwaveError, NoConvergence

    overrides = {}
    if seed is not None:
        overrides["run.seed"] = seed
    if formats is not None:
        overrides["output.formats"] = tuple(s.strip() for s in formats.split(",") if s.strip())
    try:
        cfg = load_config(command, config_path, overrides)
    except (MagwaveError, OSError) as exc:
        sys.stderr.write(f"magwave: {exc}\n")
        return EXIT_INPUT
    outdir = Path(out or os.environ.get("MAGWAVE_OUT") or cfg["output.directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    log = logging.getLogger()
    handler = logging.FileHandler(outdir / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    t0 = time.time()
    logging.info("command %s config %s", command, config_path)
    summary = {"command": command, "config": cfg.values, "seed": cfg["run.seed"]}
    try:
        try:
            stem, rows, record, checks = COMMAND_TABLE[command](cfg, cfg["run.seed"])
        except (NoConvergence, BracketFailure) as exc:
            summary.update(status="fail", exit_code=EXIT_PROPERTY, error=str(exc), checks={})
            write_json(outdir, "summary", summary)
            sys.stderr.write(f"magwave: {exc}\n")
            return EXIT_PROPERTY
        except (MagwaveError, ValueError, KeyError, OSError) as exc:
            sys.stderr.write(f"magwave: {exc}\n")
            logging.error("input error: %s", exc)
            return EXIT_INPUT
        files = emit(outdir, stem, rows, record, cfg["output.formats"])
        ok = all(bool(v) for v in checks.values())
        code = EXIT_OK if ok else EXIT_PROPERTY
        summary.update(status="pass" if ok else "fail", exit_code=code,
                       checks={k: bool(v) for k, v in checks.items()},
                       files=sorted(p.name for p in files), results=record)
        write_json(outdir, "summary", summary)
        logging.info("finished in %.2f s with status %d", time.time() - t0, code)
        return code
    finally:
        log.removeHandler(handler)
        handler.close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    return run(args.command, args.config, args.out, args.seed, args.format)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
