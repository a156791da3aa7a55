"""Asymptotic predictions and the experiments verifying them.

Three regimes are covered:
  * exponential tail decay, through the modified kernel a_c with symbol
    bhat^2 / (1 - c bhat^2) and the rate equation M(lambda) = sigma/f'(0),
    where M is the squared exponential moment of the kernel;
  * the shallow-water (small K) limit, where sigma - alpha ~ d0 eps^2 with
    K = eps^3 and the rescaled profile approaches a sech^2 wave;
  * the high-energy limit K -> K_max for singular nonlinearities, where U
    approaches a/a(0) and sigma eps^(m+1/2) approaches a Gamma-function
    constant eta0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyResultError,
    KernelAssumptionError,
    NonPositiveTailError,
    SymbolPoleError,
)
from .grid import Grid, Profile, make_grid
from .kernels import Kernel, KernelSpec
from .nonlinearity import Nonlinearity, singular_nonlinearity
from .solver import Solution, SolverConfig, solve

_MOMENT_CAP = 1e12  # grid-truncated moments beyond this count as blown up


def modified_kernel_ac(kernel: Kernel, c: float) -> Profile:
    """Profile of a_c with symbol bhat^2 / (1 - c bhat^2).

    Defined for c below 1/max(bhat^2); at c -> 0 it reduces to b*b, and its
    Neumann series sums the iterated self-convolutions of b*b.
    """
    bb = kernel.symbol**2
    denom = 1.0 - c * bb
    if np.min(denom) <= 0.0:
        raise SymbolPoleError(
            f"1 - c*bhat^2 reaches {np.min(denom):.3g} <= 0 for c = {c:.6g}"
        )
    grid = kernel.grid
    samples = np.fft.fftshift(np.fft.irfft(bb / denom, grid.point_count)) / grid.spacing
    return Profile(grid, samples)


@dataclass(frozen=True)
class BlowUpBounded:
    """Tail decay limited by the kernel's own tail: the moment equation has
    no root below lambda_max."""

    lambda_max: float


def _grid_exp_moment(kernel: Kernel):
    samples = kernel.profile.samples
    x = kernel.grid.nodes
    h = kernel.grid.spacing

    def moment(lam: float) -> float:
        with np.errstate(over="ignore"):
            return float(h * np.sum(samples * np.exp(lam * x)))

    return moment


def decay_rate_theory(kernel: Kernel, sigma: float, alpha: float):
    """Solve M(lambda) = sigma/alpha for the predicted tail rate of U, where
    M(lambda) is the squared exponential moment of b.

    Returns the root as a float, or BlowUpBounded(lambda_max) when M stays
    below the target up to the moment's abscissa of convergence (detected
    numerically, for sampled kernels, as the moment passing 1e12).
    """
    target = sigma / alpha
    if not target > 1.0:
        raise ValueError(f"sigma/alpha must exceed 1, got {target:.6g}")
    moment = kernel.exp_moment if kernel.exp_moment is not None else _grid_exp_moment(kernel)

    def big_m(lam: float) -> float:
        v = moment(lam)
        return v * v

    if np.isfinite(kernel.moment_abscissa):
        hi = kernel.moment_abscissa * (1.0 - 1e-13)
        if big_m(hi) < target:
            return BlowUpBounded(float(kernel.moment_abscissa))
        lo = 0.0
    else:
        lo, hi = 0.0, 1.0
        while big_m(hi) < target:
            if big_m(hi) > _MOMENT_CAP:
                return BlowUpBounded(hi)
            lo, hi = hi, 2.0 * hi
            if hi > 1e9:
                return BlowUpBounded(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if big_m(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return float(0.5 * (lo + hi))


def fit_tail_rate(u: Profile, window: tuple[float, float] = (0.5, 0.8)):
    """Least-squares slope of log U on x in [w0*L, w1*L].

    Returns (rate, r_squared, (x_lo, x_hi)); raises NonPositiveTailError when
    the window contains non-positive samples.
    """
    w0, w1 = window
    if not 0.0 < w0 < w1 <= 1.0:
        raise ValueError(f"window fractions must satisfy 0 < w0 < w1 <= 1, got {window}")
    grid = u.grid
    x_lo, x_hi = w0 * grid.half_period, w1 * grid.half_period
    mask = (grid.nodes >= x_lo) & (grid.nodes <= x_hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError("tail window contains fewer than 3 grid points")
    vals = u.samples[mask]
    if np.min(vals) <= 0.0:
        raise NonPositiveTailError(
            f"tail window [{x_lo:.4g}, {x_hi:.4g}] contains non-positive samples"
        )
    x = grid.nodes[mask]
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(-slope), float(r2), (float(x_lo), float(x_hi))


@dataclass(frozen=True)
class DecayReport:
    """Theoretical versus fitted tail rates for one solution."""

    c: float
    a_c: Profile
    lambda_theory: float | BlowUpBounded
    lambda_fit: float
    fit_r2: float
    fit_window: tuple[float, float]


def decay_report(
    kernel: Kernel,
    nl: Nonlinearity,
    sol: Solution,
    c: float | None = None,
    window: tuple[float, float] = (0.5, 0.8),
) -> DecayReport:
    """Assemble the decay diagnostics; c defaults to the midpoint of the
    admissible interval (alpha/sigma, 1)."""
    if c is None:
        c = 0.5 * (nl.alpha / sol.sigma + 1.0)
    a_c = modified_kernel_ac(kernel, c)
    lam_theory = decay_rate_theory(kernel, sol.sigma, nl.alpha)
    lam_fit, r2, win = fit_tail_rate(sol.U, window)
    return DecayReport(
        c=float(c),
        a_c=a_c,
        lambda_theory=lam_theory,
        lambda_fit=lam_fit,
        fit_r2=r2,
        fit_window=win,
    )


# ---------------------------------------------------------------------------
# shallow-water (small K) limit


def kdv_predicted_d0(alpha: float, beta: float, bhat_pp0: float) -> float:
    """Leading coefficient of sigma - alpha ~ d0 eps^2 at K = eps^3."""
    if not alpha > 0 or not beta > 0:
        raise ValueError("alpha and beta must be positive")
    if not bhat_pp0 < 0:
        raise ValueError("bhat''(0) must be negative")
    return float(
        beta ** (4.0 / 3.0)
        / (3.0 ** (2.0 / 3.0) * alpha ** (1.0 / 3.0) * abs(bhat_pp0) ** (1.0 / 3.0))
    )


def kdv_profile(kappa1: float, kappa2: float, xbar: np.ndarray) -> np.ndarray:
    """Limit wave (3 kappa1 / 2 kappa2) sech^2(sqrt(kappa1) xbar / 2), the
    localized solution of U'' - kappa1 U + kappa2 U^2 = 0."""
    z = 0.5 * np.sqrt(kappa1) * np.asarray(xbar, dtype=np.float64)
    with np.errstate(over="ignore"):
        sech2 = 1.0 / np.cosh(z) ** 2
    return (1.5 * kappa1 / kappa2) * sech2


def check_kdv_assumption(kernel: Kernel, slack: float = 1e-9):
    """Verify the symbol bounds bhat^2 >= 1 - C k^2 and
    bhat^2 <= 1/(1 + C k^2) on the grid for a single constant C.

    Returns (ok, C, message); the tight C from the lower bound is tested
    against the upper bound.
    """
    k = kernel.grid.rfft_frequencies[1:]
    b2 = kernel.symbol[1:] ** 2
    c_low = float(np.max((1.0 - b2) / (k * k)))
    if not np.isfinite(c_low) or c_low <= 0:
        return False, c_low, "no positive curvature constant near k = 0"
    bound = 1.0 / (1.0 + c_low * k * k)
    worst = float(np.max(b2 - bound))
    if worst > slack:
        return (
            False,
            c_low,
            f"bhat^2 exceeds 1/(1 + C k^2) by {worst:.3g} for C = {c_low:.4g}",
        )
    return True, c_low, ""


@dataclass(frozen=True)
class KdvGridPolicy:
    """Grid sizing for the small-K sweep: the half period grows like 1/eps so
    the rescaled domain eps*L stays fixed, and the spacing resolves both the
    kernel and the eps-scaled wave.

    Periodic wrap-around biases sigma by roughly exp(-sqrt(kappa1) eps L),
    which must stay below the intrinsic O(eps^2) convergence error for the
    ratio (sigma - alpha)/eps^2 to approach its limit monotonically; eps*L
    of 30 keeps that bias near 1e-6 while the point count stays in budget."""

    l_floor: float = 25.0
    l_over_eps: float = 30.0
    kernel_fraction: float = 1.0 / 8.0
    feature_fraction: float = 1.0 / 16.0
    max_points: int = 2**15

    def grid_for(self, eps: float, kernel_scale: float) -> Grid:
        half_period = max(self.l_floor, self.l_over_eps / eps)
        h_max = min(
            kernel_scale * self.kernel_fraction,
            self.feature_fraction / eps,
        )
        n = 2 ** math.ceil(math.log2(2.0 * half_period / h_max))
        if n > self.max_points:
            raise ValueError(
                f"eps = {eps:g} needs {n} points, above the cap {self.max_points}"
            )
        return make_grid(half_period, n)


@dataclass(frozen=True)
class KdvRow:
    """One eps of the small-K sweep; field order is the CSV column order."""

    eps: float
    sigma: float
    d_ratio: float  # (sigma - alpha) / eps^2
    profile_err: float  # L2 distance of the rescaled U to the limit wave


@dataclass(frozen=True)
class KdvResult:
    rows: list[KdvRow]
    predictors: dict
    solutions: list[Solution | None]
    failures: list[str | None]


def kdv_experiment(
    spec: KernelSpec,
    nl: Nonlinearity,
    eps_list,
    policy: KdvGridPolicy | None = None,
    tol_residual: float = 1e-10,
    max_iter: int = 300_000,
) -> KdvResult:
    """Sweep K = eps^3 downward and compare against the shallow-water
    predictions; each eps gets its own grid from the policy and an initial
    profile seeded with the predicted limit wave."""
    eps_values = [float(e) for e in eps_list]
    if not eps_values:
        raise EmptyResultError("eps list is empty")
    if any(not 0 < e for e in eps_values):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps values must be strictly descending")
    policy = policy or KdvGridPolicy()

    probe_grid = policy.grid_for(eps_values[0], spec.length_scale)
    probe_kernel = spec.build(probe_grid)
    ok, c_const, message = check_kdv_assumption(probe_kernel)
    if not ok:
        raise KernelAssumptionError(
            f"kernel fails the small-K symbol bounds: {message}"
        )
    bpp = probe_kernel.bhat_pp0
    # The limit wave solves Ubar'' - kappa1 Ubar + kappa2 Ubar^2 = 0, whose
    # quadratic term comes from the r^2 Taylor coefficient of f, i.e. beta/2.
    beta_quad = 0.5 * nl.beta
    d0 = kdv_predicted_d0(nl.alpha, beta_quad, bpp)
    kappa1 = d0 / (nl.alpha * abs(bpp))
    kappa2 = beta_quad / (nl.alpha * abs(bpp))
    predictors = {
        "d0": d0,
        "kappa1": kappa1,
        "kappa2": kappa2,
        "bhat_pp0": bpp,
        "alpha": nl.alpha,
        "beta_quad": beta_quad,
        "limit_amplitude": 1.5 * kappa1 / kappa2,
        "symbol_bound_constant": c_const,
    }

    rows, solutions, failures = [], [], []
    for eps in eps_values:
        grid = policy.grid_for(eps, spec.length_scale)
        kernel = spec.build(grid)
        init = Profile(grid, eps**2 * kdv_profile(kappa1, kappa2, eps * grid.nodes))
        cfg = SolverConfig(
            K=eps**3,
            tol_residual=tol_residual,
            max_iter=max_iter,
            init_profile=init,
            record_trace=False,
        )
        try:
            sol = solve(cfg, kernel, nl)
        except Exception as exc:
            rows.append(KdvRow(eps, float("nan"), float("nan"), float("nan")))
            solutions.append(None)
            failures.append(f"{type(exc).__name__}: {exc}")
            continue
        if not sol.converged:
            rows.append(KdvRow(eps, sol.sigma, float("nan"), float("nan")))
            solutions.append(sol)
            failures.append(
                f"no convergence in {max_iter} iterations (residual {sol.residual:.3g})"
            )
            continue
        d_ratio = (sol.sigma - nl.alpha) / eps**2
        limit = kdv_profile(kappa1, kappa2, eps * grid.nodes)
        diff = sol.U.samples / eps**2 - limit
        profile_err = float(np.sqrt(eps * grid.spacing * np.dot(diff, diff)))
        rows.append(KdvRow(eps, sol.sigma, d_ratio, profile_err))
        solutions.append(sol)
        failures.append(None)
    return KdvResult(rows=rows, predictors=predictors, solutions=solutions,
                     failures=failures)


# ---------------------------------------------------------------------------
# high-energy limit (singular nonlinearity, K -> K_max)


def eta0_predicted(a0: float, a_pp0: float, m: float) -> float:
    """Limit of sigma eps^(m+1/2):
    sqrt(2 pi) sqrt(a(0)^3 / |a''(0)|) Gamma(m + 1/2) / Gamma(m + 1)."""
    if not a0 > 0:
        raise ValueError("a(0) must be positive")
    if not np.isfinite(a_pp0) or a_pp0 == 0:
        raise ValueError("a''(0) must be finite and nonzero")
    if not m > 0:
        raise ValueError("m must be positive")
    gamma_ratio = math.exp(math.lgamma(m + 0.5) - math.lgamma(m + 1.0))
    return float(math.sqrt(2.0 * math.pi) * math.sqrt(a0**3 / abs(a_pp0)) * gamma_ratio)


@dataclass(frozen=True)
class HighEnergyGridPolicy:
    """Grid sizing for the near-ceiling sweep: the spacing resolves both the
    kernel and the sqrt(eps)-wide saturation zone of the profile peak."""

    half_period: float = 25.0
    kernel_fraction: float = 1.0 / 8.0
    peak_fraction: float = 1.0 / 16.0
    eps_proxy: float = 0.5  # eps_delta is of order delta * eps_proxy
    max_points: int = 2**15

    def grid_for(self, delta: float, kernel_scale: float) -> Grid:
        h_max = min(
            kernel_scale * self.kernel_fraction,
            self.peak_fraction * math.sqrt(delta * self.eps_proxy),
        )
        n = 2 ** math.ceil(math.log2(2.0 * self.half_period / h_max))
        if n > self.max_points:
            raise ValueError(
                f"delta = {delta:g} needs {n} points, above the cap {self.max_points}"
            )
        return make_grid(self.half_period, n)


@dataclass(frozen=True)
class HighEnergyRow:
    """One delta of the near-ceiling sweep; field order is the CSV order."""

    delta: float
    K: float
    sigma: float
    eps_delta: float  # 1 - U(0)
    eta: float  # sigma * eps_delta^(m + 1/2)
    sup_err: float  # sup |U - a/a(0)|


@dataclass(frozen=True)
class HighEnergyResult:
    rows: list[HighEnergyRow]
    predictors: dict
    solutions: list[Solution | None]
    failures: list[str | None]


def high_energy_experiment(
    spec: KernelSpec,
    m: float,
    delta_list,
    policy: HighEnergyGridPolicy | None = None,
    tol_residual: float = 1e-10,
    max_iter: int = 300_000,
) -> HighEnergyResult:
    """Sweep K = (1 - delta) K_max downward in delta for the singular
    nonlinearity of exponent m; requires a kernel whose autocorrelation
    a = b*b is twice differentiable with a, a'' bounded and integrable."""
    deltas = [float(d) for d in delta_list]
    if not deltas:
        raise EmptyResultError("delta list is empty")
    if any(not 0.0 < d < 1.0 for d in deltas):
        raise ValueError("delta values must lie in (0, 1)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta values must be strictly descending")
    policy = policy or HighEnergyGridPolicy()
    nl = singular_nonlinearity(m)

    probe_kernel = spec.build(policy.grid_for(deltas[0], spec.length_scale))
    if not probe_kernel.a_smooth:
        raise KernelAssumptionError(
            f"kernel {probe_kernel.label}: autocorrelation a = b*b lacks a bounded, "
            "integrable second derivative; the high-energy limit requires it"
        )

    rows, solutions, failures = [], [], []
    eta0 = None
    predictors: dict = {"m": m}
    for delta in deltas:
        grid = policy.grid_for(delta, spec.length_scale)
        kernel = spec.build(grid)
        if eta0 is None:
            eta0 = eta0_predicted(kernel.a0, kernel.a_pp0, m)
            predictors.update(
                eta0=eta0,
                a0=kernel.a0,
                a_pp0=kernel.a_pp0,
                k_max=kernel.k_max_norm,
            )
        K = (1.0 - delta) * kernel.k_max_norm
        init = kernel.profile.scaled(1.0 / kernel.a0)
        cfg = SolverConfig(
            K=K,
            tol_residual=tol_residual,
            max_iter=max_iter,
            init_profile=init,
            record_trace=False,
        )
        try:
            sol = solve(cfg, kernel, nl)
        except Exception as exc:
            rows.append(
                HighEnergyRow(delta, K, float("nan"), float("nan"), float("nan"),
                              float("nan"))
            )
            solutions.append(None)
            failures.append(f"{type(exc).__name__}: {exc}")
            continue
        if not sol.converged:
            rows.append(
                HighEnergyRow(delta, K, sol.sigma, float("nan"), float("nan"),
                              float("nan"))
            )
            solutions.append(sol)
            failures.append(
                f"no convergence in {max_iter} iterations (residual {sol.residual:.3g})"
            )
            continue
        eps_delta = 1.0 - sol.U.value_at_zero()
        eta = sol.sigma * eps_delta ** (m + 0.5)
        a_profile = kernel.convolve(kernel.profile)
        sup_err = float(np.max(np.abs(sol.U.samples - a_profile.samples / kernel.a0)))
        rows.append(HighEnergyRow(delta, K, sol.sigma, eps_delta, eta, sup_err))
        solutions.append(sol)
        failures.append(None)
    return HighEnergyResult(rows=rows, predictors=predictors, solutions=solutions,
                            failures=failures)
