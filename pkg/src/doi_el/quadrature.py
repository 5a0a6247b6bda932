"""Weighted quadrature for axisymmetric averages on the unit sphere.

For a function of the polar coordinate ``r = omega . Omega`` the normalized
surface measure of S^{n-1} reduces to ``(1 - r^2)^((n-3)/2) dr`` on (-1, 1).
All sphere averages used by the package are therefore one-dimensional
Gauss-Jacobi sums with equal exponents ``(n-3)/2``.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameterError, NumericDomainError

DEFAULT_NODES = 128


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Jacobi rule for the weight ``(1 - r^2)^((n-3)/2)`` on (-1, 1)."""

    n: int
    m: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def exponent(self) -> float:
        return 0.5 * (self.n - 3)

    def integrate(self, values) -> float:
        """Weighted sum of ``values`` sampled at the nodes."""
        return float(np.dot(self.weights, values))


def weight_total(n: int) -> float:
    """Exact value of the weight integral, sqrt(pi) Gamma((n-1)/2) / Gamma(n/2)."""
    return float(np.exp(0.5 * np.log(np.pi) + special.gammaln(0.5 * (n - 1))
                        - special.gammaln(0.5 * n)))


def _recurrence(n: int, m: int, dtype):
    """Off-diagonal coefficients of the orthonormal Jacobi((n-3)/2) recurrence."""
    a = 0.5 * (n - 3)
    k = np.arange(1, m + 1, dtype=dtype)
    b2 = np.empty(m, dtype=dtype)
    b2[0] = 1.0 / (2 * a + 3)  # closed form avoids 0/0 at n = 2
    kk = k[1:]
    b2[1:] = kk * (kk + 2 * a) / ((2 * kk + 2 * a + 1) * (2 * kk + 2 * a - 1))
    return np.sqrt(b2)


def _newton_polish(x, n, m, dtype, sweeps=3):
    """Newton iteration on p_m(x) = 0 using the three-term recurrence.

    Returns the polished nodes and the Christoffel numbers
    ``1 / sum_{k<m} p_k(x)^2`` which are the Gauss weights.
    """
    b = _recurrence(n, m, dtype)
    p_first = 1.0 / np.sqrt(dtype(weight_total(n)))
    for _ in range(sweeps):
        p_prev = np.zeros_like(x)
        d_prev = np.zeros_like(x)
        p = np.full_like(x, p_first)
        d = np.zeros_like(x)
        christoffel = p * p
        for j in range(m):
            bj = b[j - 1] if j > 0 else 0.0
            p_next = (x * p - bj * p_prev) / b[j]
            d_next = (p + x * d - bj * d_prev) / b[j]
            p_prev, p, d_prev, d = p, p_next, d, d_next
            if j < m - 1:
                christoffel += p * p
        x = x - p / d
    return x, 1.0 / christoffel


@lru_cache(maxsize=64)
def _cached_rule(n: int, m: int) -> QuadratureRule:
    a = 0.5 * (n - 3)
    # eigenvalue starting guesses, then Newton on the recurrence in extended
    # precision; scipy's own weights lose ~1e-14 for large m
    x0, _ = special.roots_jacobi(m, a, a)
    xl, wl = _newton_polish(x0.astype(np.longdouble), n, m, np.longdouble)
    # enforce exact mirror symmetry so odd integrands vanish to round-off
    x = (0.5 * (xl - xl[::-1])).astype(float)
    w = (0.5 * (wl + wl[::-1])).astype(float)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(n=n, m=m, nodes=x, weights=w)


def build_rule(n: int, m: int = DEFAULT_NODES) -> QuadratureRule:
    """Gauss-Jacobi rule with ``m`` nodes for the sphere S^{n-1}.

    Parameters
    ----------
    n : int
        Space dimension, ``n >= 2``.
    m : int
        Number of nodes; the rule is exact for polynomials of degree ``2m-1``.
    """
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"dimension n must be an integer >= 2, got {n!r}")
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"node count m must be an integer >= 1, got {m!r}")
    return _cached_rule(int(n), int(m))


def rule_for_eta(n: int, eta: float) -> QuadratureRule:
    """Default rule resolving the Gibbs factor ``exp(eta r^2)``.

    The factor has an endpoint layer of width ~1/eta while Gauss nodes
    cluster like 1/m^2 there, so m grows like sqrt(eta) beyond eta = 100.
    """
    m = DEFAULT_NODES
    if eta > 100.0:
        m = int(np.ceil(DEFAULT_NODES * np.sqrt(eta / 100.0) / 8.0) * 8)
    return build_rule(n, m)


def gibbs_factor(x, eta):
    """``exp(eta (x^2 - 1))``: the Gibbs weight scaled to be at most one."""
    return np.exp(eta * (np.asarray(x) ** 2 - 1.0))


def average_values(values, eta: float, rule: QuadratureRule) -> float:
    """Gibbs average of samples ``values`` taken at ``rule.nodes``."""
    g = rule.weights * gibbs_factor(rule.nodes, eta)
    return float(np.dot(g, values) / g.sum())


def axisymmetric_average(k: Callable, eta: float, rule: QuadratureRule) -> float:
    """Average of ``k(omega . Omega)`` under the Gibbs weight ``exp(eta r^2)``.

    Returns ``int k e^{eta r^2} w dr / int e^{eta r^2} w dr`` with
    ``w = (1 - r^2)^((n-3)/2)``.
    """
    if eta < 0 or not np.isfinite(eta):
        raise InvalidParameterError(f"eta must be finite and >= 0, got {eta!r}")
    vals = np.asarray(k(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericDomainError("integrand is not finite at the quadrature nodes")
    return average_values(vals, eta, rule)


def sphere_area(n: int) -> float:
    """Unnormalized area |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    return float(2.0 * np.exp(0.5 * n * np.log(np.pi) - special.gammaln(0.5 * n)))


@dataclass(frozen=True)
class RadialKernel:
    """Isotropic interaction kernel ``x -> K(|x|)`` on R^n."""

    function: Callable[[float], float]
    support: float
    n: int

    @classmethod
    def gaussian(cls, n: int, sigma: float = 1.0) -> "RadialKernel":
        """Unit-mass Gaussian with covariance ``sigma^2 Id``."""
        norm = (2.0 * np.pi * sigma**2) ** (-0.5 * n)
        return cls(lambda xi: norm * np.exp(-0.5 * (xi / sigma) ** 2), np.inf, n)

    @classmethod
    def uniform_ball(cls, n: int, radius: float = 1.0) -> "RadialKernel":
        """Indicator of the ball of given radius, normalized to unit mass."""
        vol = sphere_area(n) * radius**n / n
        return cls(lambda xi: np.where(xi <= radius, 1.0 / vol, 0.0), float(radius), n)

    def rescaled(self, s: float) -> "RadialKernel":
        """Mass-preserving dilation ``K_s(xi) = s^{-n} K(xi/s)``."""
        f, n = self.function, self.n
        return RadialKernel(lambda xi: s ** (-n) * f(xi / s), self.support * s, n)


def _radial_integral(fun, support, atol):
    if np.isfinite(support):
        return integrate.quad(fun, 0.0, support, epsabs=atol, epsrel=1e-12, limit=400)[0]
    # truncate where the integrand has fallen below 1e-16 and stays there
    R = 1.0
    while not (abs(fun(R)) < 1e-16 and abs(fun(2 * R)) < 1e-16):
        R *= 2.0
        if R > 1e8:
            raise NumericDomainError("radial moment does not decay: divergent second moment")
    pts = np.linspace(0.0, R, 9)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += integrate.quad(fun, lo, hi, epsabs=atol / 8, epsrel=1e-12, limit=400)[0]
    return total


def kernel_beta(kernel: RadialKernel) -> float:
    """Nonlocality moment ``beta = (1/2n) int K(|x|) |x|^2 dx``."""
    n = kernel.n
    area = sphere_area(n)
    mass = area * _radial_integral(lambda xi: kernel.function(xi) * xi ** (n - 1),
                                   kernel.support, 1e-12)
    if not abs(mass - 1.0) < 1e-8:
        raise InvalidParameterError(f"kernel is not normalized: total mass {mass!r}")
    second = area * _radial_integral(lambda xi: kernel.function(xi) * xi ** (n + 1),
                                     kernel.support, 1e-10)
    if not np.isfinite(second):
        raise NumericDomainError("kernel second moment is not finite")
    return float(second / (2 * n))


def orthonormal_jacobi(x, n: int, kmax: int):
    """Values and first two derivatives of the orthonormal polynomials.

    Orthonormality is with respect to ``(1 - r^2)^((n-3)/2)`` on (-1, 1), the
    weight of :func:`build_rule` for the same ``n``.  Returns three arrays of
    shape ``(kmax + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    b = _recurrence(n, kmax + 1, float)
    P = np.zeros((kmax + 1,) + x.shape)
    D = np.zeros_like(P)
    D2 = np.zeros_like(P)
    P[0] = 1.0 / np.sqrt(weight_total(n))
    for j in range(kmax):
        bj = b[j - 1] if j > 0 else 0.0
        prev = j - 1 if j > 0 else 0
        scale = 1.0 if j > 0 else 0.0
        P[j + 1] = (x * P[j] - scale * bj * P[prev]) / b[j]
        D[j + 1] = (P[j] + x * D[j] - scale * bj * D[prev]) / b[j]
        D2[j + 1] = (2.0 * D[j] + x * D2[j] - scale * bj * D2[prev]) / b[j]
    return P, D, D2
