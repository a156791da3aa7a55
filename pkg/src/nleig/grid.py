"""Periodic grid primitives.

Uniform lattice on one periodicity cell (-L, L], sampled real profiles,
rectangle-rule inner products, FFT-based circular convolution, and the
shape diagnostics (evenness, nonnegativity, unimodality) that define the
solution cone.  The node x = 0 is always present so even profiles are
sampled symmetrically; x = -L is its own mirror image under periodicity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GridMismatchError, OddPointCountError

_MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice x_j = j*h, j = -n/2 .. n/2 - 1, h = 2L/n."""

    half_period: float
    point_count: int

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.point_count

    @cached_property
    def nodes(self) -> np.ndarray:
        n = self.point_count
        x = (np.arange(n) - n // 2) * self.spacing
        x.flags.writeable = False
        return x

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies pi*m/L in the same (natural) order as nodes."""
        n = self.point_count
        k = (np.arange(n) - n // 2) * (np.pi / self.half_period)
        k.flags.writeable = False
        return k

    @cached_property
    def rfft_frequencies(self) -> np.ndarray:
        """Nonnegative angular frequencies matching numpy.fft.rfft output."""
        k = 2.0 * np.pi * np.fft.rfftfreq(self.point_count, d=self.spacing)
        k.flags.writeable = False
        return k

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing


def make_grid(half_period: float, point_count: int) -> Grid:
    """Validated Grid constructor; rejects odd n, tiny n, non-positive L."""
    if not half_period > 0:
        raise ValueError(f"half_period must be positive, got {half_period}")
    if point_count % 2 != 0:
        raise OddPointCountError(
            f"point_count must be even so the node x = 0 exists, got {point_count}"
        )
    if point_count < _MIN_POINTS:
        raise ValueError(f"point_count must be at least {_MIN_POINTS}, got {point_count}")
    return Grid(float(half_period), int(point_count))


@dataclass(frozen=True, eq=False)
class Profile:
    """Real samples of one periodicity cell, in node order.

    Samples are stored as an immutable float64 array; non-finite values are
    rejected at construction time.
    """

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64).copy()
        if arr.shape != (self.grid.point_count,):
            raise ValueError(
                f"samples shape {arr.shape} does not match grid with "
                f"{self.grid.point_count} points"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("profile samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def scaled(self, factor: float) -> "Profile":
        return Profile(self.grid, self.samples * float(factor))

    @property
    def max(self) -> float:
        return float(np.max(self.samples))

    def value_at_zero(self) -> float:
        return float(self.samples[self.grid.point_count // 2])


def profile_from_function(grid: Grid, fn) -> Profile:
    return Profile(grid, fn(grid.nodes))


def zeros(grid: Grid) -> Profile:
    return Profile(grid, np.zeros(grid.point_count))


def require_same_grid(*profiles: Profile) -> Grid:
    grid = profiles[0].grid
    for p in profiles[1:]:
        if p.grid != grid:
            raise GridMismatchError(
                f"profiles live on different grids: {grid} vs {p.grid}"
            )
    return grid


def inner_product(w1: Profile, w2: Profile) -> float:
    """Rectangle-rule L2 pairing h * sum(W1 * W2); spectrally accurate on
    the periodic cell."""
    grid = require_same_grid(w1, w2)
    return float(grid.spacing * np.dot(w1.samples, w2.samples))


def l2_norm(w: Profile) -> float:
    return float(np.sqrt(inner_product(w, w)))


def _mirror(samples: np.ndarray) -> np.ndarray:
    # node j maps to -j; x = -L is fixed under the periodic reflection
    return np.concatenate((samples[:1], samples[1:][::-1]))


def symmetrize(w: Profile) -> Profile:
    """Even part of the profile under the periodic reflection x -> -x."""
    return Profile(w.grid, 0.5 * (w.samples + _mirror(w.samples)))


@dataclass(frozen=True)
class ConeReport:
    """Deviation of a profile from the even/nonnegative/unimodal cone.

    even_deviation and unimodality_deviation are nonnegative by construction;
    min_value is the raw sample minimum (negative when nonnegativity fails).
    """

    even_deviation: float
    min_value: float
    unimodality_deviation: float

    def in_cone(self, tol: float) -> bool:
        return (
            self.even_deviation <= tol
            and self.min_value >= -tol
            and self.unimodality_deviation <= tol
        )


def cone_check(w: Profile) -> ConeReport:
    """Measure cone deviations; nothing is projected or clipped."""
    s = w.samples
    n = w.grid.point_count
    even_dev = float(np.max(np.abs(s - _mirror(s))))
    min_value = float(np.min(s))
    # monotonicity is judged on the symmetrized right half x >= 0
    right = 0.5 * (s + _mirror(s))[n // 2 :]
    increases = np.diff(right)
    unimodal_dev = float(max(0.0, np.max(increases, initial=0.0)))
    return ConeReport(even_dev, min_value, unimodal_dev)


def convolve(kernel: Profile, w: Profile) -> Profile:
    """Periodic convolution h * sum_i kernel(x_j - x_i) W(x_i) via the DFT.

    Equals the direct circular sum to rounding; cost O(n log n).
    """
    grid = require_same_grid(kernel, w)
    n = grid.point_count
    spec = np.fft.rfft(np.fft.ifftshift(kernel.samples)) * np.fft.rfft(
        np.fft.ifftshift(w.samples)
    )
    out = np.fft.fftshift(np.fft.irfft(spec, n)) * grid.spacing
    if not np.all(np.isfinite(out)):
        raise ValueError("convolution produced non-finite values (overflow)")
    return Profile(grid, out)


_CSV_HEADER = ("x", "value")


def write_profile_csv(w: Profile, path) -> None:
    """Two-column CSV (x, value) at 17 significant digits, LF line endings.

    Written atomically: a temp file in the same directory is renamed over
    the target.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for x, v in zip(w.grid.nodes, w.samples):
            writer.writerow([f"{x:.17g}", f"{v:.17g}"])
    tmp.replace(path)


def read_profile_csv(path, grid: Grid | None = None) -> Profile:
    """Read a profile CSV; reconstructs the grid from the x column unless one
    is supplied, in which case the nodes must match."""
    path = Path(path)
    with path.open("r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != _CSV_HEADER:
            raise ValueError(f"unexpected profile CSV header {header!r}")
        xs, vs = [], []
        for row in reader:
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    x = np.asarray(xs)
    n = len(x)
    if grid is None:
        if n < 2:
            raise ValueError("profile CSV too short to infer a grid")
        grid = make_grid(-x[0], n)
    if n != grid.point_count:
        raise GridMismatchError(
            f"profile CSV has {n} rows, expected {grid.point_count}"
        )
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-12 * max(1.0, grid.half_period)):
        raise GridMismatchError("profile CSV nodes do not match the expected grid")
    return Profile(grid, np.asarray(vs))
