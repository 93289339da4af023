"""Scenario orchestration: config in, diagnostics report out."""

from __future__ import annotations

import numpy as np

from .checks import run_all_checks
from .config import RunConfig
from .geometry import ModelParams
from .reports import DiagnosticsReport
from .scenarios import (FPFProblem, NonUniqueProblem, boundary_forcing,
                        check_positivity, f0_bump, f0_equilibrium,
                        f0_perturbed_equilibrium, positivity_certificate,
                        solve_fpf, solve_nonunique, interior_separation,
                        threshold_sweep, weak_residual, SOLVER_TOL)

FPF_SCENARIOS = ("equilibrium", "relax", "shear", "corotational")


def _initial_density(cfg: RunConfig, p: ModelParams):
    if cfg.f0 == "equilibrium":
        return f0_equilibrium(p)
    if cfg.f0 == "perturbed":
        return f0_perturbed_equilibrium(p, cfg.f0_eps)
    return f0_bump(p)


def run_fpf_scenario(cfg: RunConfig) -> tuple[DiagnosticsReport, list[str]]:
    p = cfg.model_params()
    prob = FPFProblem(params=p, f0=_initial_density(cfg, p),
                      resolution=cfg.effective_resolution())
    traj, rep = solve_fpf(prob)
    residual = weak_residual(traj)
    pos = check_positivity(traj)

    report = DiagnosticsReport(scenario=cfg.scenario, config=cfg.to_dict())
    report.series = {
        "t": rep.times,
        "mass": rep.mass,
        "min_f": rep.min_f,
        "norm_f_L2_weighted": rep.norm_f,
        "norm_w_L2_beta": rep.norm_w_l2,
        "norm_w_H1_beta": rep.norm_w_h1,
    }
    report.trace_profile = {
        "r": rep.trace_radii,
        "d": p.radius - rep.trace_radii,
        "trace_f_over_d": rep.trace_values,
    }
    report.scalars = {
        "mass_drift": rep.mass_drift,
        "garding_C1": rep.garding[0],
        "garding_C2": rep.garding[1],
        "weak_residual": residual,
        "min_f": pos["min_f"],
        "energy_ratio": float(np.max(rep.norm_f) / rep.norm_f[0])
        if rep.norm_f[0] > 0 else float("nan"),
    }
    try:
        cert = positivity_certificate(p)
        report.scalars["certificate_alpha"] = cert.alpha
        report.scalars["certificate_K"] = cert.K
        report.scalars["certificate_max_c"] = cert.max_c
    except RuntimeError as exc:
        report.scalars["certificate_note"] = str(exc)

    failures = []
    if rep.mass_drift >= 1e-8:
        failures.append(f"mass conservation: relative drift {rep.mass_drift:.3e} >= 1e-8")
    if cfg.f0 in ("equilibrium", "bump") and not pos["passed"]:
        failures.append(f"positivity: min f = {pos['min_f']:.3e} < -{pos['tol']:g}")
    if residual >= 1e-6:
        failures.append(f"weak residual {residual:.3e} >= 1e-6")
    if cfg.scenario == "equilibrium":
        drift = float(np.max(np.abs(rep.norm_f - rep.norm_f[0])) / rep.norm_f[0])
        report.scalars["equilibrium_drift"] = drift
        if drift >= 1e-8:
            failures.append(f"equilibrium steadiness: drift {drift:.3e} >= 1e-8")
    if cfg.scenario == "relax":
        diffs = np.diff(rep.norm_w_l2)
        report.scalars["max_norm_increase"] = float(diffs.max())
        if np.any(diffs > 1e-12):
            failures.append("relaxation: ||w||_{L^2_beta} not monotone decreasing")
    return report, failures


def run_nonunique_scenario(cfg: RunConfig) -> tuple[DiagnosticsReport, list[str]]:
    p = cfg.model_params()
    gamma = cfg.effective_gamma()
    res = cfg.effective_resolution()
    runs = []
    for spec in (cfg.g1, cfg.g2):
        prob = NonUniqueProblem(params=p, g=boundary_forcing(spec),
                                gamma=gamma, resolution=res)
        traj, rep = solve_nonunique(prob)
        runs.append((spec, prob, traj, rep))

    (s1, p1, t1, r1), (s2, p2, t2, r2) = runs
    sep = interior_separation(t1, t2)
    res1 = weak_residual(t1, g=p1.g)
    res2 = weak_residual(t2, g=p2.g)

    report = DiagnosticsReport(scenario="nonunique", config=cfg.to_dict())
    report.series = {
        "t": r1.times,
        "norm_f_interior_g1": r1.norm_f_interior,
        "norm_f_interior_g2": r2.norm_f_interior,
    }
    report.trace_profile = {
        "r": r1.trace_radii,
        "d": p.radius - r1.trace_radii,
        "trace_f_over_d_g1": r1.trace_values,
        "trace_f_over_d_g2": r2.trace_values,
    }
    report.scalars = {
        "gamma": gamma,
        "separation_interior": sep,
        "weak_residual_g1": res1,
        "weak_residual_g2": res2,
        "trace_limit_g1": r1.trace_limit,
        "trace_limit_g2": r2.trace_limit,
        "trace_converged_g1": bool(r1.trace_converged),
        "trace_converged_g2": bool(r2.trace_converged),
        "interior_scale_g1": float(r1.norm_f_interior[-1]),
        "interior_scale_g2": float(r2.norm_f_interior[-1]),
    }

    failures = []
    if sep <= 1e3 * SOLVER_TOL:
        failures.append(
            f"non-uniqueness separation {sep:.3e} <= {1e3 * SOLVER_TOL:g}")
    for label, res_val in (("g1", res1), ("g2", res2)):
        if res_val >= 1e-6:
            failures.append(f"weak residual ({label}) {res_val:.3e} >= 1e-6")
    for label, rep_ in (("g1", r1), ("g2", r2)):
        if rep_.trace_limit <= 0.1 * float(rep_.norm_f_interior[-1]):
            failures.append(
                f"boundary trace ({label}) {rep_.trace_limit:.3e} not bounded "
                "away from zero")
    return report, failures


def run_sweep_scenario(cfg: RunConfig) -> tuple[DiagnosticsReport, list[str]]:
    rows = threshold_sweep([float(b) for b in cfg.b_list], n=cfg.n)
    report = DiagnosticsReport(scenario="sweep", config=cfg.to_dict())
    report.tables = {"sweep": rows}
    failures = []
    for row in rows:
        if row["status"] != "ok":
            continue
        if abs(row["exponent_fit"] - row["exponent_expected"]) > 0.05:
            failures.append(
                f"sweep b={row['b']:g}: fitted exponent {row['exponent_fit']:.4f} "
                f"departs from {row['exponent_expected']:.4f}")
    return report, failures


def run_check_scenario(cfg: RunConfig) -> tuple[DiagnosticsReport, list[str]]:
    results = run_all_checks()
    report = DiagnosticsReport(scenario="check", config=cfg.to_dict())
    report.tables = {"checks": [
        {"name": r.name, "passed": str(bool(r.passed)).lower(),
         **{k: v for k, v in r.measured.items()}}
        for r in results]}
    report.scalars = {"n_checks": len(results),
                      "n_failed": sum(not r.passed for r in results)}
    failures = [r.name for r in results if not r.passed]
    report.extras = results  # for console printing
    return report, failures


def run_scenario(cfg: RunConfig) -> tuple[DiagnosticsReport, list[str]]:
    if cfg.scenario in FPF_SCENARIOS:
        return run_fpf_scenario(cfg)
    if cfg.scenario == "nonunique":
        return run_nonunique_scenario(cfg)
    if cfg.scenario == "sweep":
        return run_sweep_scenario(cfg)
    if cfg.scenario == "check":
        return run_check_scenario(cfg)
    raise ValueError(f"unhandled scenario {cfg.scenario!r}")
