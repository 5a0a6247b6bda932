"""Gibbs equilibria: order parameters, the nematic branch and 4-tensor moments.

The Gibbs state ``G = exp(eta (omega . Omega)^2) / Z`` is uniaxial about
``Omega``; with ``X = omega . Omega`` every quantity below is a Gibbs average
of a polynomial in ``X`` and is evaluated with the Gauss-Jacobi rules of
:mod:`doi_el.quadrature`.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy import optimize

from .errors import (InvalidParameterError, IterationLimitError,
                     NoNematicBranchError, NumericDomainError)
from .quadrature import rule_for_eta


@dataclass(frozen=True)
class ModelParams:
    """Dimension and material constants of the scaled Doi model."""

    n: int = 2
    alpha: float = 5.0
    Lambda: float = 1.0
    zeta: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be > 0, got {self.alpha!r}")
        if not -1.0 <= self.Lambda <= 1.0:
            raise InvalidParameterError(f"Lambda must lie in [-1, 1], got {self.Lambda!r}")
        if not self.zeta >= 0:
            raise InvalidParameterError(f"zeta must be >= 0, got {self.zeta!r}")
        if not self.beta >= 0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta!r}")


@dataclass(frozen=True)
class EquilibriumPoint:
    rho: float
    eta: float
    S2: float
    S4: float
    lam: float

    @property
    def order_parameter(self) -> float:
        return self.S2


@dataclass(frozen=True)
class CriticalPoint:
    rho_star: float
    eta_star: float
    lam_star: float


@dataclass(frozen=True)
class ACoeffs:
    a1: float
    a2: float
    a3: float


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(~np.isfinite(eta)) or np.any(eta < 0):
        raise InvalidParameterError(f"eta must be finite and >= 0, got {eta!r}")
    return eta


def P2(x, n):
    """Second Legendre-type polynomial on S^{n-1}, (n x^2 - 1)/(n - 1)."""
    return (n * x * x - 1.0) / (n - 1.0)


def P4(x, n):
    """Fourth-order analogue, vanishing on uniform moments and equal to 1 at x = 1."""
    x2 = x * x
    return (3.0 - 6.0 * (n + 2) * x2 + (n + 2) * (n + 4) * x2 * x2) / ((n - 1.0) * (n + 1.0))


def gibbs_average(func, eta, n, centered=False):
    """Gibbs average of ``func(X)`` for scalar or array ``eta``.

    With ``centered=True`` the caller asserts that ``func`` has zero uniform
    mean; the numerator is then formed with ``expm1`` so that small-eta values
    keep full relative accuracy instead of cancelling.
    """
    eta = _check_eta(eta)
    scalar = eta.ndim == 0
    eta = np.atleast_1d(eta)
    rule = rule_for_eta(n, float(eta.max()))
    x, w = rule.nodes, rule.weights
    vals = func(x)
    out = np.empty(eta.shape)
    x2 = x * x
    small = eta < 1.0
    if np.any(small):
        e = eta[small, None]
        num = (np.expm1(e * x2) * w) @ vals if centered else (np.exp(e * x2) * w) @ vals
        out[small] = num / (np.exp(e * x2) @ w)
    if np.any(~small):
        g = np.exp(eta[~small, None] * (x2 - 1.0)) * w
        out[~small] = (g @ vals) / g.sum(axis=1)
    return float(out[0]) if scalar else out


def s2(eta, n):
    """Order parameter S2(eta) = <P2(X)>."""
    return gibbs_average(lambda x: P2(x, n), eta, n, centered=True)


def s4(eta, n):
    """Fourth-order parameter S4(eta) = <P4(X)>."""
    return gibbs_average(lambda x: P4(x, n), eta, n, centered=True)


def s2_prime(eta, n):
    """dS2/deta from the covariance identity <P2 X^2> - <P2><X^2>."""
    eta = _check_eta(eta)
    return (gibbs_average(lambda x: P2(x, n) * x * x, eta, n)
            - gibbs_average(lambda x: P2(x, n), eta, n, centered=True)
            * gibbs_average(lambda x: x * x, eta, n))


def rho_of_eta(eta, params: ModelParams):
    """Density on the equilibrium curve, rho = eta / (alpha S2(eta))."""
    eta = _check_eta(eta)
    if np.any(eta == 0):
        raise NumericDomainError("rho(eta) is singular at eta = 0 (S2(0) = 0)")
    return eta / (params.alpha * s2(eta, params.n))


def lambda_of_eta(eta, n):
    """Leading Q-tensor eigenvalue at equilibrium, (n-1) S2 / n."""
    return (n - 1) * s2(eta, n) / n


@lru_cache(maxsize=32)
def _critical_unit(n: int):
    """(eta*, alpha rho*) for the given dimension; alpha only scales rho."""
    if n == 2:
        # rho is increasing on (0, inf): Richardson-extrapolate the limit at 0
        h = 1e-3
        r = [eta / s2(eta, 2) for eta in (h, h / 2, h / 4)]
        return 0.0, (r[0] - 6.0 * r[1] + 8.0 * r[2]) / 3.0

    def arho(e):
        return e / s2(e, n)

    grid = np.geomspace(1e-3, 200.0, 400)
    vals = grid / s2(grid, n)
    i = int(np.argmin(vals))
    if i == 0 or i == grid.size - 1:
        raise IterationLimitError("no interior minimum of rho(eta) on the scan grid",
                                  bracket=(grid[0], grid[-1]))
    lo, hi = grid[i - 1], grid[i + 1]
    # the minimizer solves S2 = eta S2'; a root is located far more sharply
    # than the flat minimum itself
    try:
        eta_star = optimize.brentq(lambda e: s2(e, n) - e * s2_prime(e, n), lo, hi,
                                   xtol=1e-14, rtol=1e-15, maxiter=200)
    except (ValueError, RuntimeError) as exc:
        raise IterationLimitError(f"critical point refinement failed: {exc}",
                                  bracket=(lo, hi)) from exc
    return float(eta_star), float(arho(eta_star))


def critical_point(params: ModelParams) -> CriticalPoint:
    """Critical density rho* below which no nematic equilibrium exists."""
    n = params.n
    eta_star, arho = _critical_unit(n)
    lam_star = 0.0 if eta_star == 0 else float(lambda_of_eta(eta_star, n))
    return CriticalPoint(rho_star=arho / params.alpha, eta_star=eta_star, lam_star=lam_star)


def eta_of_rho(rho: float, params: ModelParams) -> float:
    """Largest root of eta = alpha rho S2(eta) (the stable nematic branch)."""
    n, alpha = params.n, params.alpha
    crit = critical_point(params)
    if not rho > crit.rho_star:
        raise NoNematicBranchError(rho, crit.rho_star)
    # rho(eta) - rho changes sign exactly where eta solves the fixed point;
    # F = eta - alpha rho S2 > 0 for eta >= alpha rho since S2 < 1
    hi = 1.01 * alpha * rho + 1.0
    lo = crit.eta_star if crit.eta_star > 0 else 1e-6

    def G(e):
        return e / (alpha * s2(e, n)) - rho

    while G(lo) >= 0:
        if crit.eta_star > 0 or lo < 1e-200:
            raise IterationLimitError("could not bracket the nematic root", bracket=(lo, hi))
        lo *= 1e-4
    grid = np.geomspace(lo, hi, 64)
    vals = grid / (alpha * s2(grid, n)) - rho
    idx = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if idx.size == 0:
        raise IterationLimitError("no sign change of rho(eta) - rho on the scan grid",
                                  bracket=(lo, hi))
    a, b = grid[idx[-1]], grid[idx[-1] + 1]
    eta = optimize.brentq(G, a, b, xtol=1e-15, rtol=1e-15, maxiter=300)
    # one Newton polish on F(eta) = eta - alpha rho S2(eta)
    F = eta - alpha * rho * s2(eta, n)
    dF = 1.0 - alpha * rho * s2_prime(eta, n)
    if dF != 0:
        cand = eta - F / dF
        if abs(cand - alpha * rho * s2(cand, n)) < abs(F):
            eta = cand
    return float(eta)


def equilibrium_point(rho: float, params: ModelParams) -> EquilibriumPoint:
    eta = eta_of_rho(rho, params)
    n = params.n
    S2 = s2(eta, n)
    return EquilibriumPoint(rho=float(rho), eta=eta, S2=S2, S4=s4(eta, n),
                            lam=(n - 1) * eta / (n * params.alpha * rho))


def _moments_246(eta, n):
    m2 = gibbs_average(lambda x: x**2, eta, n)
    m4 = gibbs_average(lambda x: x**4, eta, n)
    return m2, m4


def a_coeffs(eta: float, n: int) -> ACoeffs:
    """Coefficients of the axisymmetric 4-tensor moment decomposition."""
    if not eta > 0:
        raise InvalidParameterError(f"eta must be > 0, got {eta!r}")
    m2, m4 = _moments_246(eta, n)
    mix = m2 - m4                    # <X^2 (1 - X^2)>
    perp = 1.0 - 2.0 * m2 + m4       # <(1 - X^2)^2>
    a3 = perp / ((n - 1) * (n + 1))
    a2 = mix / (n - 1) - a3
    a1 = m4 - 6.0 * mix / (n - 1) + 3.0 * a3
    return ACoeffs(float(a1), float(a2), float(a3))


def symmetrize4(T):
    """Average a 4-tensor over all 24 index permutations."""
    return sum(np.transpose(T, p) for p in permutations(range(4))) / 24.0


def sym_product(A, B):
    """Fully symmetrized outer product (A (x) B)_s of two matrices."""
    return symmetrize4(np.einsum("ij,kl->ijkl", A, B))


def _unit(Omega, n):
    Omega = np.asarray(Omega, dtype=float)
    if Omega.shape != (n,) or abs(np.linalg.norm(Omega) - 1.0) > 1e-12:
        raise InvalidParameterError("Omega must be a unit vector of length n")
    return Omega


def uniaxial_A4(Omega):
    """Trace-free uniaxial 4-tensor with axis Omega."""
    Omega = np.asarray(Omega, dtype=float)
    n = Omega.size
    I = np.eye(n)
    OO = np.outer(Omega, Omega)
    O4 = np.einsum("i,j,k,l->ijkl", Omega, Omega, Omega, Omega)
    return (O4 - 6.0 / (n + 4) * sym_product(OO, I)
            + 3.0 / ((n + 2) * (n + 4)) * sym_product(I, I))


def fourth_moment_tensors(eta: float, n: int, Omega):
    """Fourth moment T of the Gibbs state and its trace-free part.

    Returns ``(T, Qt)`` where ``T = <omega^{(x)4}>`` and
    ``Qt = T - 6/(n+4) (Q (x) Id)_s - 3/(n(n+2)) (Id (x) Id)_s``.
    """
    Omega = _unit(Omega, n)
    _check_eta(eta)
    I = np.eye(n)
    OO = np.outer(Omega, Omega)
    P = I - OO
    m2, m4 = _moments_246(eta, n)
    O4 = np.einsum("i,j,k,l->ijkl", Omega, Omega, Omega, Omega)
    # omega = X Omega + omega_perp, with isotropic moments of omega_perp in P
    T = (m4 * O4 + 6.0 * (m2 - m4) / (n - 1) * sym_product(OO, P)
         + 3.0 * (1.0 - 2.0 * m2 + m4) / ((n - 1) * (n + 1)) * sym_product(P, P))
    Q = (n * m2 - 1.0) / (n - 1) * (OO - I / n)
    Qt = T - 6.0 / (n + 4) * sym_product(Q, I) - 3.0 / (n * (n + 2)) * sym_product(I, I)
    return T, Qt


def canonical_sign(v):
    """Representative of {v, -v} whose first nonzero coordinate is positive."""
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(np.abs(v) > 1e-14 * max(1.0, np.abs(v).max()))
    if nz.size and v[nz[0]] < 0:
        return -v
    return v
