"""Energy functionals of the constrained maximization problem.

P(V) = integral F(b*V) is maximized on the sphere K(V) = (1/2)||V||^2 = K;
Q(V) = (f'(0)/2) integral (b*V)^2 is the quadratic part of P, so P > Q on
nonzero cone profiles quantifies the superlinear energy gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Profile, inner_product
from .kernels import Kernel
from .nonlinearity import Nonlinearity


@dataclass(frozen=True)
class EnergyRecord:
    """Snapshot of the energies of one profile."""

    P: float
    K: float
    Q: float
    sup_U: float


def eval_K(v: Profile) -> float:
    """Constraint functional K(V) = (1/2) ||V||_2^2."""
    return 0.5 * inner_product(v, v)


def eval_P(v: Profile, kernel: Kernel, nl: Nonlinearity) -> float:
    """Energy P(V) = integral F(b*V); raises DomainBreachError when b*V
    reaches the nonlinearity's domain boundary."""
    u = kernel.convolve(v)
    return float(v.grid.spacing * np.sum(nl.F(u.samples)))


def eval_Q(v: Profile, kernel: Kernel, alpha: float) -> float:
    """Quadratic energy Q(V) = (alpha/2) integral (b*V)^2."""
    u = kernel.convolve(v)
    return float(0.5 * alpha * v.grid.spacing * np.sum(u.samples**2))


def grad_P(v: Profile, kernel: Kernel, nl: Nonlinearity) -> Profile:
    """L2 gradient of P: b * f(b*V), using the kernel's evenness."""
    u = kernel.convolve(v)
    return kernel.convolve(Profile(v.grid, nl.f(u.samples)))


def energy_record(v: Profile, kernel: Kernel, nl: Nonlinearity) -> EnergyRecord:
    u = kernel.convolve(v)
    h = v.grid.spacing
    return EnergyRecord(
        P=float(h * np.sum(nl.F(u.samples))),
        K=eval_K(v),
        Q=float(0.5 * nl.alpha * h * np.sum(u.samples**2)),
        sup_U=u.max,
    )
