"""Convolution kernels and their analytic metadata.

Each kernel couples a sampled profile with the DFT symbol used for fast
convolution and with the scalar quantities the asymptotic predictions need:
mass, second moment, bhat''(0), a(0) = integral of b^2, a''(0), and the
energy ceiling K_max = 1/(2 a(0)) relevant to singular nonlinearities.

Sampled kernels (gaussian, indicator, two-bump) derive the symbol from their
samples, so symbol-based convolution coincides with the direct circular sum.
The spectral ODE kernel is defined by its symbol (1 + k^2)^(-1/2); its
profile samples carry a logarithmic singularity at x = 0 smoothed at grid
scale, and cone/boundedness validation is skipped for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import UnderResolvedError
from .grid import ConeReport, Grid, Profile, cone_check, require_same_grid


@dataclass(frozen=True, eq=False)
class Kernel:
    """A convolution kernel b with profile, DFT symbol and metadata."""

    profile: Profile
    symbol: np.ndarray  # bhat at grid.rfft_frequencies
    mass: float
    second_moment: float
    bhat_pp0: float
    a0: float
    a_pp0: float  # nan when a = b*b is not twice differentiable
    k_max_norm: float
    spectral: bool
    a_smooth: bool  # a and a'' bounded and integrable
    label: str
    exp_moment: Callable[[float], float] | None = None  # integral b(y) e^(lam y) dy
    moment_abscissa: float = np.inf

    def __post_init__(self):
        sym = np.asarray(self.symbol, dtype=np.float64).copy()
        sym.flags.writeable = False
        object.__setattr__(self, "symbol", sym)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    def convolve(self, w: Profile) -> Profile:
        """Circular convolution b * w through the stored symbol."""
        require_same_grid(self.profile, w)
        n = self.grid.point_count
        out = np.fft.fftshift(
            np.fft.irfft(self.symbol * np.fft.rfft(np.fft.ifftshift(w.samples)), n)
        )
        if not np.all(np.isfinite(out)):
            raise ValueError("convolution produced non-finite values (overflow)")
        return Profile(w.grid, out)


def _symbol_from_samples(grid: Grid, samples: np.ndarray) -> np.ndarray:
    # real part only: the kernel is even, so its symbol is real
    return grid.spacing * np.fft.rfft(np.fft.ifftshift(samples)).real


def _samples_from_symbol(grid: Grid, symbol: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.irfft(symbol, grid.point_count)) / grid.spacing


def bhat_pp0_from_symbol(grid: Grid, symbol: np.ndarray) -> float:
    """Second derivative of the symbol at k = 0, fourth-order stencil.

    Uses the evenness of the symbol: values at -k equal values at +k.
    """
    dk = grid.rfft_frequencies[1]
    f0, f1, f2 = symbol[0], symbol[1], symbol[2]
    return float((-2.0 * f2 + 32.0 * f1 - 30.0 * f0) / (12.0 * dk * dk))


def _a_pp0_from_symbol(grid: Grid, symbol: np.ndarray) -> float:
    # a''(0) = -(1/2L) * sum over all modes of k^2 bhat(k)^2
    k = grid.rfft_frequencies
    weights = np.full(k.shape, 2.0)
    weights[0] = 1.0
    if grid.point_count % 2 == 0:
        weights[-1] = 1.0  # Nyquist mode appears once
    total = np.sum(weights * (k * symbol) ** 2)
    return float(-total / (2.0 * grid.half_period))


def _metadata(grid: Grid, samples: np.ndarray):
    h = grid.spacing
    mass = float(h * np.sum(samples))
    second_moment = float(h * np.sum(grid.nodes**2 * samples))
    a0 = float(h * np.sum(samples**2))
    return mass, second_moment, a0


def _build(
    grid: Grid,
    samples: np.ndarray,
    *,
    label: str,
    normalize: bool = True,
    spectral: bool = False,
    a_smooth: bool = False,
    a_pp0: float | None = None,
    exp_moment=None,
    moment_abscissa: float = np.inf,
    bhat_pp0: float | None = None,
) -> Kernel:
    if normalize:
        raw_mass = grid.spacing * np.sum(samples)
        if not raw_mass > 0:
            raise ValueError("kernel mass must be positive to normalize")
        samples = samples / raw_mass
    symbol = _symbol_from_samples(grid, samples)
    mass, second_moment, a0 = _metadata(grid, samples)
    if a_pp0 is None:
        a_pp0 = _a_pp0_from_symbol(grid, symbol) if a_smooth else float("nan")
    return Kernel(
        profile=Profile(grid, samples),
        symbol=symbol,
        mass=mass,
        second_moment=second_moment,
        bhat_pp0=-second_moment if bhat_pp0 is None else bhat_pp0,
        a0=a0,
        a_pp0=a_pp0,
        k_max_norm=1.0 / (2.0 * a0),
        spectral=spectral,
        a_smooth=a_smooth,
        label=label,
        exp_moment=exp_moment,
        moment_abscissa=moment_abscissa,
    )


def gaussian_kernel(grid: Grid, width: float = 1.0, normalize: bool = True) -> Kernel:
    """Unit-mass Gaussian of the given width (standard deviation)."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    if grid.spacing > width / 4.0:
        raise UnderResolvedError(
            f"grid spacing {grid.spacing:.4g} exceeds width/4 = {width / 4.0:.4g}"
        )
    if grid.half_period < 8.0 * width:
        raise UnderResolvedError(
            f"half period {grid.half_period:.4g} below 8*width = {8.0 * width:.4g}"
        )
    x = grid.nodes
    samples = np.exp(-(x**2) / (2.0 * width**2))
    if not normalize:
        samples = samples / (width * np.sqrt(2.0 * np.pi))
    w2 = width * width
    return _build(
        grid,
        samples,
        label=f"gaussian(width={width:g})",
        normalize=normalize,
        a_smooth=True,
        exp_moment=lambda lam: float(np.exp(0.5 * w2 * lam * lam)),
        moment_abscissa=np.inf,
    )


def indicator_kernel(grid: Grid, normalize: bool = True) -> Kernel:
    """Indicator of [-1/2, 1/2]; boundary nodes carry the half value so the
    discrete mass and symbol stay second-order accurate."""
    if grid.spacing > 1.0 / 8.0:
        raise UnderResolvedError(
            f"grid spacing {grid.spacing:.4g} exceeds 1/8 for the indicator kernel"
        )
    if grid.half_period < 2.0:
        raise UnderResolvedError("half period below 2; b*b would wrap around")
    x = grid.nodes
    samples = np.where(np.abs(x) < 0.5, 1.0, 0.0)
    boundary = np.abs(np.abs(x) - 0.5) < grid.spacing / 4.0
    samples[boundary] = 0.5

    def exp_moment(lam: float) -> float:
        if lam == 0.0:
            return 1.0
        return float(2.0 * np.sinh(0.5 * lam) / lam)

    return _build(
        grid,
        samples,
        label="indicator",
        normalize=normalize,
        a_smooth=False,
        exp_moment=exp_moment,
        moment_abscissa=np.inf,
    )


def spectral_ode_kernel(grid: Grid) -> Kernel:
    """Kernel defined by the symbol (1 + k^2)^(-1/2), so that a = b*b has
    symbol (1 + k^2)^(-1) and the eigenvalue equation reduces to the ODE
    sigma (U - U'') = f(U)."""
    if grid.nyquist < 20.0:
        raise UnderResolvedError(
            f"Nyquist frequency {grid.nyquist:.4g} below 20 for the spectral kernel"
        )
    k = grid.rfft_frequencies
    symbol = 1.0 / np.sqrt(1.0 + k * k)
    samples = _samples_from_symbol(grid, symbol)
    mass, _, a0 = _metadata(grid, samples)
    second_moment = -bhat_pp0_from_symbol(grid, symbol)

    def exp_moment(lam: float) -> float:
        if abs(lam) >= 1.0:
            return float("inf")
        return float(1.0 / np.sqrt(1.0 - lam * lam))

    return Kernel(
        profile=Profile(grid, samples),
        symbol=symbol,
        mass=mass,
        second_moment=second_moment,
        bhat_pp0=-second_moment,
        a0=a0,
        a_pp0=float("nan"),  # a = exp(-|x|)/2 is not C^2 at 0
        k_max_norm=1.0 / (2.0 * a0),
        spectral=True,
        a_smooth=False,
        label="ode",
        exp_moment=exp_moment,
        moment_abscissa=1.0,
    )


def two_bump_kernel(
    grid: Grid, width: float = 0.6, separation: float = 6.0, normalize: bool = True
) -> Kernel:
    """Sum of two separated Gaussians; even and positive but not unimodal.

    Violates the unimodality part of the kernel assumptions on purpose; used
    for exploratory runs probing uniqueness failure.
    """
    if not width > 0 or not separation > 0:
        raise ValueError("width and separation must be positive")
    if grid.spacing > width / 4.0:
        raise UnderResolvedError(
            f"grid spacing {grid.spacing:.4g} exceeds width/4 = {width / 4.0:.4g}"
        )
    if grid.half_period < separation + 8.0 * width:
        raise UnderResolvedError("half period too small for the requested bumps")
    x = grid.nodes
    samples = np.exp(-((x - separation) ** 2) / (2.0 * width**2)) + np.exp(
        -((x + separation) ** 2) / (2.0 * width**2)
    )
    return _build(
        grid,
        samples,
        label=f"two_bump(width={width:g},separation={separation:g})",
        normalize=normalize,
        a_smooth=True,
    )


def kernel_from_samples(
    grid: Grid,
    samples: np.ndarray,
    *,
    label: str = "custom",
    normalize: bool = True,
    exp_moment=None,
    moment_abscissa: float = math.inf,
) -> Kernel:
    """Wrap arbitrary samples as a kernel (metadata computed, no validation).

    exp_moment, when given, is the closed-form two-sided exponential moment
    used by tail analysis; moment_abscissa bounds where it stays finite."""
    kernel = _build(
        grid, np.asarray(samples, dtype=np.float64), label=label, normalize=normalize
    )
    if exp_moment is not None or math.isfinite(moment_abscissa):
        kernel = replace(
            kernel, exp_moment=exp_moment, moment_abscissa=moment_abscissa
        )
    return kernel


@dataclass(frozen=True)
class KernelValidationReport:
    """Outcome of the standing-assumption checks for a kernel."""

    mass_error: float
    cone: ConeReport | None  # None when cone checks are skipped (spectral)
    cone_checked: bool
    passed: bool
    failures: tuple[str, ...]


def validate_kernel(kernel: Kernel, tol: float = 1e-6) -> KernelValidationReport:
    """Check unit mass, finite positive moments, and cone membership of the
    profile (evenness, nonnegativity, unimodality).  Cone checks are skipped
    for spectral kernels whose samples carry a smoothed singularity."""
    failures = []
    mass_error = abs(kernel.mass - 1.0)
    if mass_error > tol:
        failures.append(f"mass deviates from 1 by {mass_error:.3g}")
    if not np.isfinite(kernel.second_moment) or kernel.second_moment <= 0:
        failures.append("second moment not finite and positive")
    if not np.isfinite(kernel.a0) or kernel.a0 <= 0:
        failures.append("integral of b^2 not finite and positive")
    cone = None
    cone_checked = not kernel.spectral
    if cone_checked:
        cone = cone_check(kernel.profile)
        scale = max(abs(kernel.profile.max), 1e-300)
        if cone.even_deviation > tol * scale:
            failures.append(f"evenness violated by {cone.even_deviation:.3g}")
        if cone.min_value < -tol * scale:
            failures.append(f"nonnegativity violated: min = {cone.min_value:.3g}")
        if cone.unimodality_deviation > tol * scale:
            failures.append(
                f"unimodality violated by {cone.unimodality_deviation:.3g}"
            )
    return KernelValidationReport(
        mass_error=mass_error,
        cone=cone,
        cone_checked=cone_checked,
        passed=not failures,
        failures=tuple(failures),
    )


@dataclass(frozen=True)
class KernelSpec:
    """Grid-independent kernel description, buildable on any adequate grid."""

    kind: str  # gaussian | indicator | ode | two_bump
    width: float | None = None
    separation: float | None = None

    def build(self, grid: Grid) -> Kernel:
        if self.kind == "gaussian":
            return gaussian_kernel(grid, self.width if self.width is not None else 1.0)
        if self.kind == "indicator":
            return indicator_kernel(grid)
        if self.kind == "ode":
            return spectral_ode_kernel(grid)
        if self.kind == "two_bump":
            return two_bump_kernel(
                grid,
                self.width if self.width is not None else 0.6,
                self.separation if self.separation is not None else 6.0,
            )
        raise ValueError(f"unknown kernel kind {self.kind!r}")

    @property
    def length_scale(self) -> float:
        """Resolution scale used by grid policies."""
        if self.kind == "gaussian":
            return self.width if self.width is not None else 1.0
        if self.kind == "indicator":
            return 0.5
        if self.kind == "ode":
            return 1.0
        if self.kind == "two_bump":
            return self.width if self.width is not None else 0.6
        raise ValueError(f"unknown kernel kind {self.kind!r}")

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.width is not None:
            cfg["width"] = self.width
        if self.separation is not None:
            cfg["separation"] = self.separation
        return cfg


def kernel_spec_from_config(cfg: dict) -> KernelSpec:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("kernel config must be an object with a 'kind' entry")
    kind = cfg["kind"]
    known = {"gaussian", "indicator", "ode", "two_bump"}
    if kind not in known:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {sorted(known)}")
    extra = set(cfg) - {"kind", "width", "separation"}
    if extra:
        raise ValueError(f"unknown kernel config keys {sorted(extra)}")
    width = cfg.get("width")
    separation = cfg.get("separation")
    return KernelSpec(
        kind=kind,
        width=None if width is None else float(width),
        separation=None if separation is None else float(separation),
    )
