import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, special

from doi_el.equilibria import (ModelParams, a_coeffs, critical_point, equilibrium_point,
                               eta_of_rho, fourth_moment_tensors, lambda_of_eta, rho_of_eta,
                               s2, s2_prime, s4, sym_product, uniaxial_A4, P4, canonical_sign)
from doi_el.errors import InvalidParameterError, NoNematicBranchError, NumericDomainError


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        ModelParams(n=1)
    with pytest.raises(InvalidParameterError):
        ModelParams(alpha=0.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(Lambda=1.5)
    with pytest.raises(InvalidParameterError):
        ModelParams(zeta=-0.1)
    with pytest.raises(InvalidParameterError):
        ModelParams(beta=-1.0)


@pytest.mark.parametrize("n", range(2, 7))
def test_s2_s4_limits(n):
    assert s2(0.0, n) == pytest.approx(0.0, abs=1e-15)
    assert s4(0.0, n) == pytest.approx(0.0, abs=1e-15)
    assert 0.99 < s2(500.0, n) < 1.0
    assert 0.95 < s4(500.0, n) < 1.0
    with pytest.raises(InvalidParameterError):
        s2(-1.0, n)


def test_s2_bessel_n2():
    for eta in (0.01, 0.5, 3.0, 20.0, 80.0):
        ref = special.ive(1, eta / 2) / special.ive(0, eta / 2)
        assert s2(eta, 2) == pytest.approx(ref, abs=1e-10)


def test_s4_adaptive_oracle():
    eta, n = 10.0, 3
    w = lambda t: np.exp(eta * (np.cos(t) ** 2 - 1)) * np.sin(t)
    num = integrate.quad(lambda t: P4(np.cos(t), n) * w(t), 0, np.pi, epsabs=1e-13, epsrel=1e-12)[0]
    den = integrate.quad(w, 0, np.pi, epsabs=1e-13, epsrel=1e-12)[0]
    assert s4(eta, n) == pytest.approx(num / den, abs=1e-10)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_monotone_and_derivative(n):
    etas = np.linspace(0, 50, 400)
    vals = np.array([s2(e, n) for e in etas])
    assert np.all(np.diff(vals) >= -1e-12)
    for e in (0.3, 2.0, 9.0, 30.0):
        h = 1e-5
        fd = (s2(e + h, n) - s2(e - h, n)) / (2 * h)
        assert s2_prime(e, n) == pytest.approx(fd, abs=1e-7)
    assert all(s2_prime(e, n) >= 0 for e in etas)


def test_s2_prime_at_zero_n2():
    assert s2_prime(0.0, 2) == pytest.approx(0.25, abs=1e-12)


def test_rho_of_eta():
    p = ModelParams(n=2, alpha=4.0)
    assert rho_of_eta(1e-6, p) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(NumericDomainError):
        rho_of_eta(0.0, p)


def test_n3_remark_identity():
    p = ModelParams(n=3, alpha=7.0)
    for eta in np.linspace(0.1, 30, 40):
        integral = integrate.quad(lambda z: np.exp(eta * (z * z - 1)), 0, 1, epsabs=1e-15, epsrel=1e-13)[0]
        lhs = 3.0 / integral
        rhs = 3 + 2 * eta + 4 * eta**2 / (p.alpha * rho_of_eta(eta, p))
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_critical_points():
    cp = critical_point(ModelParams(n=2, alpha=4.0))
    assert cp.rho_star == pytest.approx(1.0, abs=1e-10) and cp.eta_star == 0.0
    for a in (2.0, 8.0):
        assert critical_point(ModelParams(n=2, alpha=a)).rho_star == pytest.approx(4.0 / a, rel=1e-9)
    p3 = ModelParams(n=3, alpha=5.0)
    cp3 = critical_point(p3)
    assert cp3.eta_star > 0
    grid = np.geomspace(1e-3, 100, 2000)
    rhos = np.array([rho_of_eta(e, p3) for e in grid])
    assert rhos.min() >= cp3.rho_star - 1e-12
    assert cp3.rho_star < rho_of_eta(1e-4, p3)
    # n=2: strictly increasing branch
    r2 = np.array([rho_of_eta(e, ModelParams(n=2, alpha=4.0)) for e in grid])
    assert np.all(np.diff(r2) > 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_eta_of_rho_inversion(n):
    p = ModelParams(n=n, alpha=6.0)
    cp = critical_point(p)
    for eta0 in cp.eta_star + np.array([0.3, 1.0, 5.0, 20.0]):
        assert eta_of_rho(rho_of_eta(eta0, p), p) == pytest.approx(eta0, abs=1e-9)
    with pytest.raises(NoNematicBranchError) as exc:
        eta_of_rho(0.9 * cp.rho_star, p)
    assert exc.value.rho_star == pytest.approx(cp.rho_star)


def test_n3_two_roots_largest_returned():
    p = ModelParams(n=3, alpha=5.0)
    cp = critical_point(p)
    rho = 0.5 * (cp.rho_star + rho_of_eta(1e-6, p))
    F = lambda e: e - p.alpha * rho * s2(e, 3)
    # independent bisection oracle on both brackets
    small = optimize.bisect(F, 1e-3, cp.eta_star, xtol=1e-14)
    large = optimize.bisect(F, cp.eta_star, 50.0, xtol=1e-14)
    assert small < large
    assert eta_of_rho(rho, p) == pytest.approx(large, abs=1e-9)


def test_equilibrium_point_invariants():
    for n in (2, 3, 5):
        p = ModelParams(n=n, alpha=9.0)
        for rho in critical_point(p).rho_star * np.array([1.05, 2.0, 4.0]):
            ep = equilibrium_point(rho, p)
            assert abs(ep.eta - p.alpha * rho * s2(ep.eta, n)) / ep.eta < 1e-10
            assert ep.lam == pytest.approx((n - 1) * ep.eta / (n * p.alpha * rho), rel=1e-12)
            assert 0 < ep.lam < 1 - 1 / n
            assert ep.lam == pytest.approx(lambda_of_eta(ep.eta, n), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), eta=st.floats(0.1, 50))
def test_a_coefficient_identities(n, eta):
    a = a_coeffs(eta, n)
    S2 = s2(eta, n)
    assert abs(a.a2 + a.a3 - S2 / (2 * eta)) < 1e-10
    assert abs(a.a1 + (n + 4) * a.a2 - S2) < 1e-10
    x2 = ((n - 1) * S2 + 1) / n
    assert abs(a.a2 - (1 - x2) * s2(eta, n + 2) / (n - 1)) < 1e-10
    assert 0 < a.a2 < 1 / (n - 1)


@pytest.mark.xfail(strict=True, reason="a2 = S2^(n+2)/(n-1) as printed omits the factor <1 - X^2>")
def test_a2_identity_as_printed():
    for n in (2, 3, 4):
        for eta in (0.5, 5.0, 20.0):
            assert abs(a_coeffs(eta, n).a2 - s2(eta, n + 2) / (n - 1)) < 1e-10


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def test_fourth_moment_isotropic():
    for n in (2, 3, 4):
        I = np.eye(n)
        T, Qt = fourth_moment_tensors(0.0, n, _unit(np.random.default_rng(n), n))
        assert np.abs(T - 3 * sym_product(I, I) / (n * (n + 2))).max() < 1e-14
        assert np.abs(Qt).max() < 1e-14


def test_fourth_moment_uniaxial():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        for eta in (1.0, 5.0, 20.0):
            O = _unit(rng, n)
            T, Qt = fourth_moment_tensors(eta, n, O)
            for perm in [(1, 0, 2, 3), (2, 1, 0, 3), (3, 2, 1, 0)]:
                assert np.abs(T - T.transpose(perm)).max() < 1e-14
            assert np.abs(np.einsum("iikl->kl", Qt)).max() < 1e-12
            assert np.abs(np.einsum("ikil->kl", Qt)).max() < 1e-12
            assert np.abs(Qt - s4(eta, n) * uniaxial_A4(O)).max() < 1e-10


def test_fourth_moment_requires_unit():
    with pytest.raises(InvalidParameterError):
        fourth_moment_tensors(1.0, 3, [1.0, 1.0, 0.0])


def test_canonical_sign():
    assert np.array_equal(canonical_sign(np.array([0.0, -1.0])), np.array([0.0, 1.0]))
    assert np.array_equal(canonical_sign(np.array([-0.6, 0.8])), np.array([0.6, -0.8]))
