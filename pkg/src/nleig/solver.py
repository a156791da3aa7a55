"""Energy-monotone fixed-point iteration for the eigenvalue problem
sigma V = b * f(b * V).

The improvement map T(V) = mu(V) grad P(V) with mu(V) = ||V|| / ||grad P(V)||
never decreases P while preserving the norm, so iterating it inside the
constraint sphere K(V) = K climbs the energy landscape toward a constrained
maximizer, which solves the eigenvalue equation with sigma = 1/mu.  Each
accepted iterate is symmetrized (evenness pins the peak at x = 0) and
renormalized to the exact constraint; cone deviations are measured, never
projected away.  An energy decrease beyond slack signals discretization
failure and aborts the run.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import MonotonicityViolationError, ZeroGradientError
from .functionals import EnergyRecord, eval_K
from .grid import (
    ConeReport,
    Profile,
    cone_check,
    l2_norm,
    symmetrize,
    write_profile_csv,
)
from .kernels import Kernel
from .nonlinearity import Nonlinearity


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one constrained solve.

    init_profile, when given, seeds the iteration (rescaled to the target K);
    otherwise a centered Gaussian bump of init_width is used, defaulting to
    twice the kernel's root second moment.
    """

    K: float
    tol_residual: float = 1e-10
    max_iter: int = 100_000
    init_profile: Profile | None = None
    init_width: float | None = None
    enforce_symmetry: bool = True
    monotonicity_slack: float = 1e-12
    record_trace: bool = True

    def to_config(self) -> dict:
        return {
            "K": self.K,
            "tol_residual": self.tol_residual,
            "max_iter": self.max_iter,
            "init_width": self.init_width,
            "enforce_symmetry": self.enforce_symmetry,
            "monotonicity_slack": self.monotonicity_slack,
            "record_trace": self.record_trace,
        }


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration diagnostics of the accepted iterates."""

    p_values: np.ndarray
    residuals: np.ndarray
    constraint_errors: np.ndarray  # |K(V_j)/K - 1|
    cone_deviations: np.ndarray  # worst cone deviation relative to max V


@dataclass(frozen=True)
class Solution:
    """Converged (or exhausted) state of one solve."""

    V: Profile
    U: Profile
    sigma: float
    K: float
    energies: EnergyRecord
    residual: float
    el_residual: float
    iterations: int
    converged: bool
    cone: ConeReport
    trace: IterationTrace | None = None


def improvement_step(v: Profile, kernel: Kernel, nl: Nonlinearity):
    """One application of T: returns (T(V), mu).  T preserves the L2 norm
    and never decreases P; raises ZeroGradientError when grad P vanishes."""
    u = kernel.convolve(v)
    g = kernel.convolve(Profile(v.grid, nl.f(u.samples)))
    norm_g = l2_norm(g)
    if norm_g == 0.0:
        raise ZeroGradientError("grad P vanished; improvement step undefined")
    mu = l2_norm(v) / norm_g
    return g.scaled(mu), mu


def _default_initial(cfg: SolverConfig, kernel: Kernel) -> Profile:
    grid = kernel.grid
    width = cfg.init_width
    if width is None:
        width = 2.0 * float(np.sqrt(kernel.second_moment))
    x = grid.nodes
    return Profile(grid, np.exp(-(x**2) / (2.0 * width**2)))


def _rescaled_to_k(v: Profile, K: float) -> Profile:
    norm = l2_norm(v)
    if norm == 0.0:
        raise ValueError("cannot rescale the zero profile to a positive K")
    return v.scaled(np.sqrt(2.0 * K) / norm)


def _worst_cone_deviation(report: ConeReport, scale: float) -> float:
    worst = max(
        report.even_deviation,
        max(0.0, -report.min_value),
        report.unimodality_deviation,
    )
    return worst / max(scale, 1e-300)


def solve(cfg: SolverConfig, kernel: Kernel, nl: Nonlinearity) -> Solution:
    """Iterate the improvement map at fixed K until the relative fixed-point
    residual ||T(V) - V|| / ||V|| drops below tol_residual.

    Returns a Solution with converged=False when max_iter is exhausted; the
    caller decides whether that is fatal.  Raises MonotonicityViolationError
    when P decreases by more than the relative slack and DomainBreachError
    when an iterate pushes b*V outside the nonlinearity's domain.
    """
    if not cfg.K > 0:
        raise ValueError(f"K must be positive, got {cfg.K}")
    if nl.sup_domain != np.inf and cfg.K >= kernel.k_max_norm:
        raise ValueError(
            f"K = {cfg.K:.6g} must stay below K_max = {kernel.k_max_norm:.6g} "
            "for a singular nonlinearity"
        )
    grid = kernel.grid
    h = grid.spacing

    v0 = cfg.init_profile if cfg.init_profile is not None else _default_initial(cfg, kernel)
    if v0.grid != grid:
        raise ValueError("initial profile lives on a different grid than the kernel")
    v = _rescaled_to_k(v0, cfg.K)
    target_norm = float(np.sqrt(2.0 * cfg.K))

    u = kernel.convolve(v)
    p_prev = float(h * np.sum(nl.F(u.samples)))

    trace_p, trace_res, trace_kerr, trace_cone = [], [], [], []
    converged = False
    residual = np.inf
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        g = kernel.convolve(Profile(grid, nl.f(u.samples)))
        norm_g = l2_norm(g)
        if norm_g == 0.0:
            raise ZeroGradientError("grad P vanished; improvement step undefined")
        mu = target_norm / norm_g
        t_samples = mu * g.samples

        diff = t_samples - v.samples
        residual = float(np.sqrt(h * np.dot(diff, diff)) / target_norm)

        if cfg.enforce_symmetry:
            half = t_samples[1:][::-1]
            t_samples = 0.5 * (t_samples + np.concatenate((t_samples[:1], half)))
        v_next = _rescaled_to_k(Profile(grid, t_samples), cfg.K)

        u = kernel.convolve(v_next)
        p_next = float(h * np.sum(nl.F(u.samples)))
        if p_next < p_prev - cfg.monotonicity_slack * abs(p_prev):
            raise MonotonicityViolationError(
                f"P decreased from {p_prev:.17g} to {p_next:.17g} at iteration "
                f"{iterations}; slack {cfg.monotonicity_slack:g} exceeded"
            )

        if cfg.record_trace:
            trace_p.append(p_next)
            trace_res.append(residual)
            trace_kerr.append(abs(eval_K(v_next) / cfg.K - 1.0))
            trace_cone.append(
                _worst_cone_deviation(cone_check(v_next), v_next.max)
            )

        v, p_prev = v_next, p_next
        if residual <= cfg.tol_residual:
            converged = True
            break

    # final Rayleigh-type quotient and Euler-Lagrange residual at the last iterate
    g = kernel.convolve(Profile(grid, nl.f(u.samples)))
    norm_v = l2_norm(v)
    sigma = l2_norm(g) / norm_v
    el_diff = sigma * v.samples - g.samples
    el_residual = float(np.sqrt(h * np.dot(el_diff, el_diff)) / (sigma * norm_v))

    energies = EnergyRecord(
        P=p_prev,
        K=eval_K(v),
        Q=float(0.5 * nl.alpha * h * np.sum(u.samples**2)),
        sup_U=u.max,
    )
    trace = None
    if cfg.record_trace:
        trace = IterationTrace(
            p_values=np.asarray(trace_p),
            residuals=np.asarray(trace_res),
            constraint_errors=np.asarray(trace_kerr),
            cone_deviations=np.asarray(trace_cone),
        )
    return Solution(
        V=v,
        U=u,
        sigma=float(sigma),
        K=cfg.K,
        energies=energies,
        residual=residual,
        el_residual=el_residual,
        iterations=iterations,
        converged=converged,
        cone=cone_check(v),
        trace=trace,
    )


@dataclass(frozen=True)
class SweepEntry:
    """One K of a sweep: either a solution or a recorded failure."""

    K: float
    solution: Solution | None
    error: str | None = None


def _entry_for(K: float, cfg: SolverConfig, kernel: Kernel, nl: Nonlinearity,
               init_profile: Profile | None) -> SweepEntry:
    run_cfg = replace(cfg, K=K, init_profile=init_profile)
    try:
        return SweepEntry(K=K, solution=solve(run_cfg, kernel, nl))
    except Exception as exc:  # per-entry isolation: the sweep continues
        return SweepEntry(K=K, solution=None, error=f"{type(exc).__name__}: {exc}")


def sweep_K(
    k_values,
    cfg: SolverConfig,
    kernel: Kernel,
    nl: Nonlinearity,
    warm_start: bool = False,
    max_workers: int = 1,
) -> list[SweepEntry]:
    """Solve for each K in ascending order; failures are recorded per entry
    and the sweep continues.  warm_start seeds each solve with the previous
    converged profile (forces sequential execution)."""
    ks = [float(k) for k in k_values]
    if not ks:
        raise ValueError("K list is empty")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("K values must be strictly ascending")
    if warm_start or max_workers <= 1:
        entries = []
        previous = cfg.init_profile
        for k in ks:
            entry = _entry_for(k, cfg, kernel, nl, previous)
            entries.append(entry)
            if warm_start and entry.solution is not None and entry.solution.converged:
                previous = entry.solution.V
        return entries
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(_entry_for, k, cfg, kernel, nl, cfg.init_profile) for k in ks
        ]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of repeated solves from varied initializations."""

    n_starts: int
    widths: tuple[float, ...]
    sigmas: tuple[float, ...]
    n_converged: int
    max_l2_distance: float
    max_sigma_gap: float
    distance_tol: float
    supports_conjecture: bool
    failures: tuple[str, ...]


def uniqueness_probe(
    cfg: SolverConfig,
    kernel: Kernel,
    nl: Nonlinearity,
    n_starts: int = 5,
    seed: int = 0,
    distance_tol: float = 1e-6,
    max_workers: int = 1,
) -> UniquenessReport:
    """Solve from n_starts cone initializations with seeded bump widths and
    compare the limits pairwise.  A failed start is recorded, not fatal;
    the conjecture is supported only when every start converged to the same
    profile within distance_tol."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    base_width = cfg.init_width
    if base_width is None:
        base_width = 2.0 * float(np.sqrt(kernel.second_moment))
    rng = np.random.default_rng(seed)
    factors = np.exp(rng.uniform(np.log(1.0 / 3.0), np.log(3.0), size=n_starts))
    factors[0] = 1.0
    widths = tuple(float(base_width * f) for f in factors)

    def run_one(width: float):
        run_cfg = replace(cfg, init_profile=None, init_width=width)
        try:
            return solve(run_cfg, kernel, nl), None
        except Exception as exc:
            return None, f"width {width:.4g}: {type(exc).__name__}: {exc}"

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(run_one, widths))
    else:
        outcomes = [run_one(w) for w in widths]

    solutions, failures = [], []
    for sol, err in outcomes:
        if err is not None:
            failures.append(err)
            solutions.append(None)
        elif not sol.converged:
            failures.append(
                f"did not converge within {cfg.max_iter} iterations "
                f"(residual {sol.residual:.3g})"
            )
            solutions.append(None)
            continue
        solutions.append(sol)
    converged = [s for s in solutions if s is not None]

    max_distance = 0.0
    max_sigma_gap = 0.0
    for i in range(len(converged)):
        for j in range(i + 1, len(converged)):
            diff = converged[i].V.samples - converged[j].V.samples
            h = kernel.grid.spacing
            max_distance = max(max_distance, float(np.sqrt(h * np.dot(diff, diff))))
            max_sigma_gap = max(
                max_sigma_gap, abs(converged[i].sigma - converged[j].sigma)
            )
    supports = (
        len(converged) == n_starts
        and n_starts >= 1
        and max_distance <= distance_tol
    )
    return UniquenessReport(
        n_starts=n_starts,
        widths=widths,
        sigmas=tuple(float(s.sigma) for s in converged),
        n_converged=len(converged),
        max_l2_distance=max_distance,
        max_sigma_gap=max_sigma_gap,
        distance_tol=distance_tol,
        supports_conjecture=supports,
        failures=tuple(failures),
    )


def solution_to_dict(sol: Solution) -> dict:
    return {
        "sigma": sol.sigma,
        "K": sol.K,
        "P": sol.energies.P,
        "Q": sol.energies.Q,
        "sup_U": sol.energies.sup_U,
        "residual": sol.residual,
        "el_residual": sol.el_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "cone": {
            "even_deviation": sol.cone.even_deviation,
            "min_value": sol.cone.min_value,
            "unimodality_deviation": sol.cone.unimodality_deviation,
        },
        "grid": {
            "half_period": sol.V.grid.half_period,
            "point_count": sol.V.grid.point_count,
        },
    }


def save_solution(sol: Solution, out_dir, stem: str = "") -> None:
    """Write solution.json plus V.csv and U.csv (optionally stem-prefixed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"{stem}_" if stem else ""
    _atomic_write_text(
        out / f"{prefix}solution.json",
        json.dumps(solution_to_dict(sol), indent=2, sort_keys=True) + "\n",
    )
    write_profile_csv(sol.V, out / f"{prefix}V.csv")
    write_profile_csv(sol.U, out / f"{prefix}U.csv")


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
