"""Batch command-line front end.

One command per process: read a single JSON config, compute, write output
files atomically into --output, exit 0 on success, 2 on validation failure,
3 on non-convergence or a runtime solve failure.  Identical configs produce
byte-identical numeric outputs; meta.json echoes the fully resolved config
(defaults included) plus version and wall-clock timings.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    BlowUpBounded,
    HighEnergyGridPolicy,
    KdvGridPolicy,
    decay_report,
    high_energy_experiment,
    kdv_experiment,
)
from .errors import (
    DomainBreachError,
    EmptyResultError,
    KernelAssumptionError,
    MonotonicityViolationError,
    NleigError,
    NonPositiveTailError,
    OddPointCountError,
    SymbolPoleError,
    UnderResolvedError,
    ZeroGradientError,
)
from .grid import make_grid, write_profile_csv
from .kernels import kernel_spec_from_config, validate_kernel
from .nonlinearity import nonlinearity_from_config, nonlinearity_to_config
from .solver import (
    SolverConfig,
    save_solution,
    solution_to_dict,
    solve,
    sweep_K,
    uniqueness_probe,
)

_VALIDATION_ERRORS = (
    ValueError,
    KeyError,
    OddPointCountError,
    UnderResolvedError,
    KernelAssumptionError,
    EmptyResultError,
)
_RUNTIME_ERRORS = (
    MonotonicityViolationError,
    DomainBreachError,
    ZeroGradientError,
    SymbolPoleError,
    NonPositiveTailError,
)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _write_json(path: Path, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def emit_plot_data(rows, predictors: dict, out_dir, csv_name: str,
                   predictors_name: str = "predictors.json") -> None:
    """Write experiment rows as a CSV (column order = dataclass field order)
    plus a JSON sidecar with the predictor constants.  Reruns on identical
    rows are byte-identical; empty row lists are an error."""
    if not rows:
        raise EmptyResultError("no rows to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fields = [f.name for f in dataclasses.fields(rows[0])]
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_format_cell(getattr(row, name)) for name in fields))
    _atomic_write_text(out / csv_name, "\n".join(lines) + "\n")
    _write_json(out / predictors_name, predictors)


def _section(config: dict, key: str, required: bool = True) -> dict:
    if key not in config:
        if required:
            raise ValueError(f"config is missing the required {key!r} section")
        return {}
    value = config[key]
    if not isinstance(value, dict):
        raise ValueError(f"config section {key!r} must be an object")
    return value


def _check_keys(section: dict, allowed: set, where: str) -> None:
    extra = set(section) - allowed
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)} in {where}")


def _grid_from_config(config: dict):
    section = _section(config, "grid")
    _check_keys(section, {"half_period", "point_count"}, "grid section")
    if "half_period" not in section or "point_count" not in section:
        raise ValueError("grid section requires half_period and point_count")
    return make_grid(float(section["half_period"]), int(section["point_count"]))


_SOLVER_KEYS = {
    "K",
    "tol_residual",
    "max_iter",
    "init_width",
    "enforce_symmetry",
    "monotonicity_slack",
}


def _solver_config(config: dict, allow_nonstandard: bool,
                   require_k: bool = True) -> SolverConfig:
    section = _section(config, "solver", required=require_k)
    _check_keys(section, _SOLVER_KEYS, "solver section")
    if require_k and "K" not in section:
        raise ValueError("solver section requires K")
    slack = section.get("monotonicity_slack")
    if slack is None:
        # exploratory mode demotes the monotonicity abort to a warning
        slack = float("inf") if allow_nonstandard else 1e-12
    return SolverConfig(
        K=float(section.get("K", 1.0)),
        tol_residual=float(section.get("tol_residual", 1e-10)),
        max_iter=int(section.get("max_iter", 100_000)),
        init_width=(
            None if section.get("init_width") is None else float(section["init_width"])
        ),
        enforce_symmetry=bool(section.get("enforce_symmetry", True)),
        monotonicity_slack=float(slack),
    )


def _solver_echo(cfg: SolverConfig) -> dict:
    echo = cfg.to_config()
    echo["monotonicity_slack"] = (
        "inf" if cfg.monotonicity_slack == float("inf") else cfg.monotonicity_slack
    )
    return echo


def _gate_kernel(kernel, allow_nonstandard: bool):
    """Standing-assumption gate: reject kernels failing validation unless
    exploratory mode is on.  Returns warnings for the meta record."""
    report = validate_kernel(kernel)
    if report.passed:
        return []
    if not allow_nonstandard:
        detail = "; ".join(report.failures)
        raise KernelAssumptionError(
            f"kernel {kernel.label} fails validation: {detail} "
            "(pass --allow-nonstandard to run anyway)"
        )
    return [f"kernel validation skipped: {failure}" for failure in report.failures]


def _monotonicity_warnings(solution) -> list:
    if solution.trace is None or len(solution.trace.p_values) < 2:
        return []
    p = solution.trace.p_values
    drops = np.diff(p) / np.maximum(np.abs(p[:-1]), 1e-300)
    worst = float(np.min(drops, initial=0.0))
    if worst < -1e-12:
        return [f"energy decreased by relative {abs(worst):.3g} during the run"]
    return []


def _grid_echo(grid) -> dict:
    return {"half_period": grid.half_period, "point_count": grid.point_count}


def _run_solve(config, out, args):
    _check_keys(config, {"command", "grid", "kernel", "nonlinearity", "solver"},
                "config")
    grid = _grid_from_config(config)
    spec = kernel_spec_from_config(_section(config, "kernel"))
    kernel = spec.build(grid)
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    warnings = _gate_kernel(kernel, args.allow_nonstandard)
    cfg = _solver_config(config, args.allow_nonstandard)

    solution = solve(cfg, kernel, nl)
    warnings += _monotonicity_warnings(solution)
    save_solution(solution, out)
    resolved = {
        "command": "solve",
        "grid": _grid_echo(grid),
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "solver": _solver_echo(cfg),
    }
    _finish_meta(out, args, resolved, warnings)
    if not solution.converged:
        print(
            f"solve did not converge in {cfg.max_iter} iterations "
            f"(residual {solution.residual:.3g})",
            file=sys.stderr,
        )
        return 3
    print(f"sigma = {solution.sigma:.12g} after {solution.iterations} iterations")
    return 0


def _run_sweep(config, out, args):
    _check_keys(
        config,
        {"command", "grid", "kernel", "nonlinearity", "solver", "k_list", "warm_start"},
        "config",
    )
    if "k_list" not in config:
        raise ValueError("sweep-k requires a k_list")
    ks = [float(k) for k in config["k_list"]]
    warm_start = bool(config.get("warm_start", False))
    grid = _grid_from_config(config)
    spec = kernel_spec_from_config(_section(config, "kernel"))
    kernel = spec.build(grid)
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    warnings = _gate_kernel(kernel, args.allow_nonstandard)
    cfg = _solver_config(config, args.allow_nonstandard, require_k=False)
    cfg = replace(cfg, record_trace=False)

    entries = sweep_K(ks, cfg, kernel, nl, warm_start=warm_start,
                      max_workers=args.threads)
    lines = ["K,sigma,P,Q,residual,el_residual,iterations,converged,error"]
    for i, entry in enumerate(entries):
        if entry.solution is None:
            lines.append(
                ",".join(
                    [_format_cell(entry.K)] + ["nan"] * 5 + ["0", "false",
                     entry.error.replace(",", ";")]
                )
            )
            continue
        sol = entry.solution
        lines.append(
            ",".join(
                [
                    _format_cell(entry.K),
                    _format_cell(sol.sigma),
                    _format_cell(sol.energies.P),
                    _format_cell(sol.energies.Q),
                    _format_cell(sol.residual),
                    _format_cell(sol.el_residual),
                    str(sol.iterations),
                    "true" if sol.converged else "false",
                    "",
                ]
            )
        )
        save_solution(sol, out, stem=f"k_{i:03d}")
    _atomic_write_text(out / "sweep.csv", "\n".join(lines) + "\n")
    resolved = {
        "command": "sweep-k",
        "grid": _grid_echo(grid),
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "solver": _solver_echo(cfg),
        "k_list": ks,
        "warm_start": warm_start,
    }
    failures = [e.error for e in entries if e.error is not None]
    _finish_meta(out, args, resolved, warnings + failures)
    print(f"sweep finished: {len(ks) - len(failures)}/{len(ks)} entries converged")
    return 0


_KDV_POLICY_KEYS = {
    "l_floor", "l_over_eps", "kernel_fraction", "feature_fraction", "max_points",
}


def _run_kdv(config, out, args):
    _check_keys(
        config,
        {"command", "kernel", "nonlinearity", "eps_list", "grid_policy", "solver"},
        "config",
    )
    if "eps_list" not in config:
        raise ValueError("kdv requires an eps_list")
    eps_list = [float(e) for e in config["eps_list"]]
    spec = kernel_spec_from_config(_section(config, "kernel"))
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    policy_cfg = _section(config, "grid_policy", required=False)
    _check_keys(policy_cfg, _KDV_POLICY_KEYS, "grid_policy section")
    policy = KdvGridPolicy(**{k: v for k, v in policy_cfg.items()})
    solver_cfg = _section(config, "solver", required=False)
    _check_keys(solver_cfg, {"tol_residual", "max_iter"}, "solver section")
    tol = float(solver_cfg.get("tol_residual", 1e-10))
    max_iter = int(solver_cfg.get("max_iter", 300_000))

    probe_kernel = spec.build(policy.grid_for(eps_list[0], spec.length_scale))
    warnings = _gate_kernel(probe_kernel, args.allow_nonstandard)

    result = kdv_experiment(spec, nl, eps_list, policy=policy,
                            tol_residual=tol, max_iter=max_iter)
    emit_plot_data(result.rows, result.predictors, out, "kdv.csv")
    resolved = {
        "command": "kdv",
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "eps_list": eps_list,
        "grid_policy": dataclasses.asdict(policy),
        "solver": {"tol_residual": tol, "max_iter": max_iter},
    }
    failures = [f for f in result.failures if f is not None]
    _finish_meta(out, args, resolved, warnings + failures)
    print(f"kdv sweep finished: {len(eps_list) - len(failures)}/{len(eps_list)} "
          "entries converged")
    return 0


_HE_POLICY_KEYS = {
    "half_period", "kernel_fraction", "peak_fraction", "eps_proxy", "max_points",
}


def _run_high_energy(config, out, args):
    _check_keys(
        config,
        {"command", "kernel", "nonlinearity", "delta_list", "grid_policy", "solver"},
        "config",
    )
    if "delta_list" not in config:
        raise ValueError("high-energy requires a delta_list")
    deltas = [float(d) for d in config["delta_list"]]
    spec = kernel_spec_from_config(_section(config, "kernel"))
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    if nl.kind != "singular":
        raise ValueError(
            "high-energy requires the singular nonlinearity (kind 'singular')"
        )
    policy_cfg = _section(config, "grid_policy", required=False)
    _check_keys(policy_cfg, _HE_POLICY_KEYS, "grid_policy section")
    policy = HighEnergyGridPolicy(**{k: v for k, v in policy_cfg.items()})
    solver_cfg = _section(config, "solver", required=False)
    _check_keys(solver_cfg, {"tol_residual", "max_iter"}, "solver section")
    tol = float(solver_cfg.get("tol_residual", 1e-10))
    max_iter = int(solver_cfg.get("max_iter", 300_000))

    probe_kernel = spec.build(policy.grid_for(deltas[0], spec.length_scale))
    warnings = _gate_kernel(probe_kernel, args.allow_nonstandard)

    result = high_energy_experiment(spec, nl.m, deltas, policy=policy,
                                    tol_residual=tol, max_iter=max_iter)
    emit_plot_data(result.rows, result.predictors, out, "high_energy.csv")
    resolved = {
        "command": "high-energy",
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "delta_list": deltas,
        "grid_policy": dataclasses.asdict(policy),
        "solver": {"tol_residual": tol, "max_iter": max_iter},
    }
    failures = [f for f in result.failures if f is not None]
    _finish_meta(out, args, resolved, warnings + failures)
    print(f"high-energy sweep finished: {len(deltas) - len(failures)}/{len(deltas)} "
          "entries converged")
    return 0


def _run_decay(config, out, args):
    _check_keys(
        config,
        {"command", "grid", "kernel", "nonlinearity", "solver", "c", "window"},
        "config",
    )
    grid = _grid_from_config(config)
    spec = kernel_spec_from_config(_section(config, "kernel"))
    kernel = spec.build(grid)
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    warnings = _gate_kernel(kernel, args.allow_nonstandard)
    cfg = _solver_config(config, args.allow_nonstandard)
    c = None if config.get("c") is None else float(config["c"])
    window = tuple(config.get("window", (0.5, 0.8)))

    solution = solve(cfg, kernel, nl)
    warnings += _monotonicity_warnings(solution)
    save_solution(solution, out)
    code = 0
    if not solution.converged:
        print(
            f"solve did not converge in {cfg.max_iter} iterations "
            f"(residual {solution.residual:.3g})",
            file=sys.stderr,
        )
        code = 3
    report = decay_report(kernel, nl, solution, c=c, window=window)
    if isinstance(report.lambda_theory, BlowUpBounded):
        theory = {"kind": "blow_up_bounded",
                  "lambda_max": report.lambda_theory.lambda_max}
    else:
        theory = {"kind": "root", "value": report.lambda_theory}
    _write_json(
        out / "decay.json",
        {
            "c": report.c,
            "lambda_theory": theory,
            "lambda_fit": report.lambda_fit,
            "fit_r2": report.fit_r2,
            "fit_window": list(report.fit_window),
            "sigma": solution.sigma,
        },
    )
    write_profile_csv(report.a_c, out / "a_c.csv")
    resolved = {
        "command": "decay",
        "grid": _grid_echo(grid),
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "solver": _solver_echo(cfg),
        "c": report.c,
        "window": list(window),
    }
    _finish_meta(out, args, resolved, warnings)
    if code == 0:
        print(
            f"sigma = {solution.sigma:.12g}, fitted tail rate "
            f"{report.lambda_fit:.6g} (r^2 = {report.fit_r2:.6f})"
        )
    return code


def _run_validate(config, out, args):
    _check_keys(config, {"command", "grid", "kernel"}, "config")
    grid = _grid_from_config(config)
    spec = kernel_spec_from_config(_section(config, "kernel"))
    kernel = spec.build(grid)
    report = validate_kernel(kernel)
    payload = {
        "label": kernel.label,
        "passed": report.passed,
        "mass_error": report.mass_error,
        "cone_checked": report.cone_checked,
        "failures": list(report.failures),
        "metadata": {
            "mass": kernel.mass,
            "second_moment": kernel.second_moment,
            "bhat_pp0": kernel.bhat_pp0,
            "a0": kernel.a0,
            "a_pp0": None if not np.isfinite(kernel.a_pp0) else kernel.a_pp0,
            "k_max_norm": kernel.k_max_norm,
        },
    }
    if report.cone is not None:
        payload["cone"] = {
            "even_deviation": report.cone.even_deviation,
            "min_value": report.cone.min_value,
            "unimodality_deviation": report.cone.unimodality_deviation,
        }
    _write_json(out / "validation.json", payload)
    resolved = {
        "command": "validate-kernel",
        "grid": _grid_echo(grid),
        "kernel": spec.to_config(),
    }
    _finish_meta(out, args, resolved, [])
    if not report.passed:
        detail = "; ".join(report.failures)
        print(f"kernel {kernel.label} fails validation: {detail}", file=sys.stderr)
        return 0 if args.allow_nonstandard else 2
    print(f"kernel {kernel.label} passes validation")
    return 0


def _run_probe(config, out, args):
    _check_keys(
        config,
        {"command", "grid", "kernel", "nonlinearity", "solver", "n_starts", "seed",
         "distance_tol"},
        "config",
    )
    grid = _grid_from_config(config)
    spec = kernel_spec_from_config(_section(config, "kernel"))
    kernel = spec.build(grid)
    nl = nonlinearity_from_config(_section(config, "nonlinearity"))
    warnings = _gate_kernel(kernel, args.allow_nonstandard)
    cfg = _solver_config(config, args.allow_nonstandard)
    cfg = replace(cfg, record_trace=False)
    n_starts = int(config.get("n_starts", 5))
    seed = int(config.get("seed", 0))
    distance_tol = float(config.get("distance_tol", 1e-6))

    report = uniqueness_probe(cfg, kernel, nl, n_starts=n_starts, seed=seed,
                              distance_tol=distance_tol, max_workers=args.threads)
    _write_json(
        out / "probe.json",
        {
            "n_starts": report.n_starts,
            "widths": list(report.widths),
            "sigmas": list(report.sigmas),
            "n_converged": report.n_converged,
            "max_l2_distance": report.max_l2_distance,
            "max_sigma_gap": report.max_sigma_gap,
            "distance_tol": report.distance_tol,
            "conjecture_support": "yes" if report.supports_conjecture else "no",
            "failures": list(report.failures),
        },
    )
    resolved = {
        "command": "uniqueness-probe",
        "grid": _grid_echo(grid),
        "kernel": spec.to_config(),
        "nonlinearity": nonlinearity_to_config(nl),
        "solver": _solver_echo(cfg),
        "n_starts": n_starts,
        "seed": seed,
        "distance_tol": distance_tol,
    }
    _finish_meta(out, args, resolved, warnings + list(report.failures))
    print(
        f"uniqueness probe: {report.n_converged}/{report.n_starts} converged, "
        f"max distance {report.max_l2_distance:.3g}, conjecture support: "
        + ("yes" if report.supports_conjecture else "no")
    )
    return 0


_COMMANDS = {
    "solve": _run_solve,
    "sweep-k": _run_sweep,
    "kdv": _run_kdv,
    "high-energy": _run_high_energy,
    "decay": _run_decay,
    "validate-kernel": _run_validate,
    "uniqueness-probe": _run_probe,
}

_START_TIME = None


def _finish_meta(out: Path, args, resolved: dict, warnings: list) -> None:
    resolved["output_dir"] = str(out)
    resolved["allow_nonstandard"] = bool(args.allow_nonstandard)
    resolved["threads"] = int(args.threads)
    meta = {
        "config": resolved,
        "version": __version__,
        "timings": {"total_seconds": round(time.perf_counter() - _START_TIME, 6)},
        "warnings": list(warnings),
    }
    if args.allow_nonstandard:
        meta["unvalidated"] = True
    _write_json(out / "meta.json", meta)


def main(argv=None) -> int:
    global _START_TIME
    parser = argparse.ArgumentParser(
        prog="nleig",
        description="Solution families of the nonlocal eigenvalue problem "
        "sigma V = b * f(b * V) by energy-monotone fixed-point iteration.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--output", required=True, help="output directory")
    parser.add_argument(
        "--allow-nonstandard",
        action="store_true",
        help="run kernels failing validation; relaxes solver aborts to warnings "
        "and stamps outputs unvalidated",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep entries")
    args = parser.parse_args(argv)
    _START_TIME = time.perf_counter()

    try:
        config = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        print(f"error: config file {args.config} not found", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return 2
    declared = config.get("command")
    if declared is not None and declared != args.command:
        print(
            f"error: config declares command {declared!r} but {args.command!r} "
            "was requested",
            file=sys.stderr,
        )
        return 2
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[args.command](config, out, args)
    except _RUNTIME_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except _VALIDATION_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NleigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
