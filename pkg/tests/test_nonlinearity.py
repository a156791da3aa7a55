"""Nonlinearity families: values, derivatives, domain guards, convexity."""

import numpy as np
import pytest

from nleig import (
    DomainBreachError,
    Nonlinearity,
    check_superlinearity,
    exp_nonlinearity,
    nonlinearity_from_config,
    nonlinearity_to_config,
    quadratic_nonlinearity,
    singular_nonlinearity,
)


def fd(fn, r, t=1e-7):
    return (fn(r + t) - fn(r - t)) / (2.0 * t)


def test_exp_values_and_derivatives():
    nl = exp_nonlinearity()
    assert nl.kind == "exp"
    assert nl.alpha == 1.0 and nl.beta == 1.0
    assert nl.f(1.0) == pytest.approx(np.e - 1.0, rel=1e-15)
    assert nl.f(0.0) == 0.0
    # tiny arguments keep full precision through expm1
    assert nl.f(1e-12) == pytest.approx(1e-12, rel=1e-10)
    for r in (0.1, 1.0, 3.0):
        assert nl.f_prime(r) == pytest.approx(fd(nl.f, r), rel=1e-7)
        assert nl.f(r) == pytest.approx(fd(nl.F, r), rel=1e-7)


def test_quadratic_values():
    nl = quadratic_nonlinearity(1.0, 2.0)
    # f(r) = alpha r + (beta/2) r^2 so that f''(0) = beta
    assert nl.f(2.0) == pytest.approx(1.0 * 2.0 + 1.0 * 4.0)
    assert nl.f_prime(0.0) == pytest.approx(1.0)
    assert fd(nl.f_prime, 0.0) == pytest.approx(2.0, rel=1e-6)
    assert nl.F(2.0) == pytest.approx(0.5 * 4.0 + (2.0 / 6.0) * 8.0)
    with pytest.raises(ValueError):
        quadratic_nonlinearity(0.0, 1.0)
    with pytest.raises(ValueError):
        quadratic_nonlinearity(1.0, -1.0)


def test_singular_values_and_domain_guard():
    nl = singular_nonlinearity(4.0)
    assert nl.m == 4.0
    assert nl.sup_domain == 1.0
    assert nl.alpha == 5.0  # m + 1
    assert nl.beta == 30.0  # (m+1)(m+2) = f''(0)
    assert fd(nl.f, 0.0) == pytest.approx(5.0, rel=1e-6)
    assert fd(nl.f_prime, 0.0) == pytest.approx(30.0, rel=1e-5)
    assert nl.f(0.5) == pytest.approx(0.5**-5 - 1.0)
    for fn in (nl.f, nl.f_prime, nl.F):
        with pytest.raises(DomainBreachError):
            fn(1.0)
        with pytest.raises(DomainBreachError) as err:
            fn(np.array([0.2, 1.5]))
        assert err.value.sup_value == pytest.approx(1.5)
    with pytest.raises(ValueError):
        singular_nonlinearity(0.0)


def test_superlinearity_of_the_standard_families():
    for nl in (exp_nonlinearity(), quadratic_nonlinearity(1.0, 2.0),
               singular_nonlinearity(4.0)):
        report = check_superlinearity(nl)
        assert report.passed, (nl.kind, report)
        assert report.scaling_margin >= -1e-12
        assert report.moment_margin >= -1e-12


def test_superlinearity_rejects_concave_probe():
    concave = Nonlinearity(
        kind="probe", alpha=1.0, beta=-1.0,
        f=np.log1p, f_prime=lambda r: 1.0 / (1.0 + r),
        antiderivative=lambda r: (1.0 + r) * np.log1p(r) - r,
    )
    assert not check_superlinearity(concave).passed


def test_config_round_trip_and_errors():
    for nl in (exp_nonlinearity(), quadratic_nonlinearity(2.0, 3.0),
               singular_nonlinearity(4.0)):
        again = nonlinearity_from_config(nonlinearity_to_config(nl))
        assert again.kind == nl.kind
        assert again.alpha == nl.alpha
        assert again.beta == nl.beta
        assert again.f(0.4) == nl.f(0.4)
    with pytest.raises(ValueError):
        nonlinearity_from_config({"kind": "cubic"})
    with pytest.raises(ValueError):
        nonlinearity_from_config({"kind": "exp", "alpha": 2.0})
    with pytest.raises(ValueError):
        nonlinearity_from_config({"kind": "singular"})
    with pytest.raises(ValueError):
        nonlinearity_from_config({"kind": "quadratic", "alpha": 1.0})
