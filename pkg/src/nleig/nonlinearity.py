"""Superlinear nonlinearities f with antiderivative F.

All families satisfy f(0) = 0, f'(0) = alpha > 0, f''(0) = beta > 0, and the
superlinearity conditions f(lam r) >= lam f(r) for lam >= 1 and
f'(r) r >= 2 F(r) on their domain [0, sup_domain).  The singular family
f(s) = (1-s)^(-(m+1)) - 1 lives on [0, 1) and raises DomainBreachError when
evaluated at or beyond s = 1; nothing is clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainBreachError


class Nonlinearity:
    """Vectorized evaluators for f, f', and F with a domain guard."""

    def __init__(self, kind, alpha, beta, f, f_prime, antiderivative,
                 sup_domain=np.inf, m=None):
        self.kind = kind
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.sup_domain = float(sup_domain)
        self.m = m
        self._f = f
        self._f_prime = f_prime
        self._F = antiderivative

    def _guard(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.sup_domain != np.inf:
            sup = float(np.max(r)) if r.size else 0.0
            if sup >= self.sup_domain:
                raise DomainBreachError(sup, self.sup_domain)
        return r

    def f(self, r):
        return self._f(self._guard(r))

    def f_prime(self, r):
        return self._f_prime(self._guard(r))

    def F(self, r):
        return self._F(self._guard(r))

    def __repr__(self):
        return (f"Nonlinearity(kind={self.kind!r}, alpha={self.alpha:g}, "
                f"beta={self.beta:g})")


def exp_nonlinearity() -> Nonlinearity:
    """f(r) = e^r - 1, F(r) = e^r - r - 1; alpha = beta = 1."""
    return Nonlinearity(
        kind="exp",
        alpha=1.0,
        beta=1.0,
        f=np.expm1,
        f_prime=np.exp,
        antiderivative=lambda r: np.expm1(r) - r,
    )


def quadratic_nonlinearity(alpha: float, beta: float) -> Nonlinearity:
    """f(r) = alpha r + (beta/2) r^2, the minimal superlinear polynomial."""
    if not alpha > 0 or not beta > 0:
        raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
    a, b = float(alpha), float(beta)
    return Nonlinearity(
        kind="quadratic",
        alpha=a,
        beta=b,
        f=lambda r: a * r + 0.5 * b * r * r,
        f_prime=lambda r: a + b * r,
        antiderivative=lambda r: 0.5 * a * r * r + (b / 6.0) * r**3,
    )


def singular_nonlinearity(m: float) -> Nonlinearity:
    """f(s) = (1-s)^(-(m+1)) - 1 on [0, 1); alpha = m+1, beta = (m+1)(m+2)."""
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    m = float(m)

    def f(s):
        return (1.0 - s) ** (-(m + 1.0)) - 1.0

    def f_prime(s):
        return (m + 1.0) * (1.0 - s) ** (-(m + 2.0))

    def antiderivative(s):
        return ((1.0 - s) ** (-m) - 1.0) / m - s

    return Nonlinearity(
        kind="singular",
        alpha=m + 1.0,
        beta=(m + 1.0) * (m + 2.0),
        f=f,
        f_prime=f_prime,
        antiderivative=antiderivative,
        sup_domain=1.0,
        m=m,
    )


@dataclass(frozen=True)
class SuperlinearityReport:
    """Worst margins of the two superlinearity inequalities over a sample set.

    scaling_margin: min of f(lam r) - lam f(r) over sampled lam >= 1, r.
    moment_margin:  min of f'(r) r - 2 F(r) over sampled r.
    Both are >= -tol for admissible nonlinearities.
    """

    scaling_margin: float
    moment_margin: float
    passed: bool


def check_superlinearity(
    nl: Nonlinearity,
    lambdas=None,
    rs=None,
    tol: float = 1e-12,
) -> SuperlinearityReport:
    """Probe f(lam r) >= lam f(r) and f'(r) r >= 2 F(r) at sample points.

    Sample points landing outside the domain are excluded (the caller sees
    only in-domain behavior); margins are absolute.
    """
    if lambdas is None:
        lambdas = np.array([1.0, 1.5, 2.0, 4.0, 8.0])
    else:
        lambdas = np.asarray(lambdas, dtype=np.float64)
    if np.any(lambdas < 1.0):
        raise ValueError("scaling factors must be >= 1")
    if rs is None:
        upper = 1.0 if nl.sup_domain == np.inf else 0.9 * nl.sup_domain
        rs = np.geomspace(1e-3, upper, 40)
    else:
        rs = np.asarray(rs, dtype=np.float64)
    if np.any(rs < 0) or np.any(rs >= nl.sup_domain):
        raise ValueError("sample points must lie inside the domain")

    scaling_margin = np.inf
    for lam in lambdas:
        inside = lam * rs < nl.sup_domain
        if not np.any(inside):
            continue
        r = rs[inside]
        margin = np.min(nl.f(lam * r) - lam * nl.f(r))
        scaling_margin = min(scaling_margin, float(margin))
    moment_margin = float(np.min(nl.f_prime(rs) * rs - 2.0 * nl.F(rs)))
    passed = scaling_margin >= -tol and moment_margin >= -tol
    return SuperlinearityReport(scaling_margin, moment_margin, passed)


def nonlinearity_from_config(cfg: dict) -> Nonlinearity:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("nonlinearity config must be an object with a 'kind' entry")
    kind = cfg["kind"]
    if kind == "exp":
        extra = set(cfg) - {"kind"}
        if extra:
            raise ValueError(f"unknown nonlinearity config keys {sorted(extra)}")
        return exp_nonlinearity()
    if kind == "quadratic":
        extra = set(cfg) - {"kind", "alpha", "beta"}
        if extra:
            raise ValueError(f"unknown nonlinearity config keys {sorted(extra)}")
        if "alpha" not in cfg or "beta" not in cfg:
            raise ValueError("quadratic nonlinearity requires alpha and beta")
        return quadratic_nonlinearity(float(cfg["alpha"]), float(cfg["beta"]))
    if kind == "singular":
        extra = set(cfg) - {"kind", "m"}
        if extra:
            raise ValueError(f"unknown nonlinearity config keys {sorted(extra)}")
        if "m" not in cfg:
            raise ValueError("singular nonlinearity requires m")
        return singular_nonlinearity(float(cfg["m"]))
    raise ValueError(
        f"unknown nonlinearity kind {kind!r}; expected exp, quadratic, or singular"
    )


def nonlinearity_to_config(nl: Nonlinearity) -> dict:
    if nl.kind == "exp":
        return {"kind": "exp"}
    if nl.kind == "quadratic":
        return {"kind": "quadratic", "alpha": nl.alpha, "beta": nl.beta}
    if nl.kind == "singular":
        return {"kind": "singular", "m": nl.m}
    return {"kind": nl.kind, "alpha": nl.alpha, "beta": nl.beta}
