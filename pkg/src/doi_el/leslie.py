"""Ericksen-Leslie side: viscosities, stresses, molecular field and energies.

Velocity gradients follow the convention ``(grad u)_ij = d_i u_j`` with
``E = (grad u + grad u^T)/2`` and ``W = (grad u - grad u^T)/2``; gradients of
vector fields are stored the same way, ``(grad Omega)_ij = d_i Omega_j``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .equilibria import ModelParams, eta_of_rho, s2, s2_prime, s4
from .errors import (InvalidParameterError, SingularCoefficientError,
                     ZeroShapeParameterError)
from .gci import DEFAULT_K, constant_c_lambda0, solve_h

TOL = 1e-12


@dataclass(frozen=True)
class LeslieCoefficients:
    c: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    gamma1: float
    gamma2: float
    params: ModelParams = field(repr=False)
    rho: float = np.nan
    eta: float = np.nan
    S2: float = np.nan
    S4: float = np.nan

    @property
    def alphas(self):
        return np.array([self.a1, self.a2, self.a3, self.a4, self.a5, self.a6])


def leslie_from_order(params: ModelParams, S2: float, S4: float, c: float, **context):
    """Assemble the Leslie viscosities from (S2, S4, c); no equilibrium solve."""
    n, L, z = params.n, params.Lambda, params.zeta
    if c == 0:
        raise SingularCoefficientError("c = 0: gamma1 = Lambda S2 / c is undefined")
    d = z - L * L
    a1 = d * S4
    a2 = -0.5 * L * S2 * (1.0 / c + 1.0)
    a3 = 0.5 * L * S2 * (1.0 / c - 1.0)
    a4 = (2.0 * d * S4 / ((n + 2) * (n + 4))
          - (2.0 / n) * (0.5 * L * L + 2.0 * d / (n + 4)) * S2
          + (1.0 / n) * (L * L + 2.0 * d / (n + 2)))
    a5 = -2.0 * d * S4 / (n + 4) + (0.5 * L + 0.5 * L * L + 2.0 * d / (n + 4)) * S2
    a6 = -2.0 * d * S4 / (n + 4) + (-0.5 * L + 0.5 * L * L + 2.0 * d / (n + 4)) * S2
    return LeslieCoefficients(c=float(c), a1=a1, a2=a2, a3=a3, a4=a4, a5=a5, a6=a6,
                              gamma1=L * S2 / c, gamma2=-L * S2, params=params,
                              S2=float(S2), S4=float(S4), **context)


def leslie_coefficients_at_eta(params: ModelParams, eta: float, rho: Optional[float] = None,
                               resolution: int = DEFAULT_K) -> LeslieCoefficients:
    """Leslie coefficients of the Gibbs state with concentration ``eta``.

    The viscosities depend on the density only through ``eta``; ``rho`` is
    carried as context and defaults to the equilibrium density.
    """
    if params.Lambda == 0:
        raise ZeroShapeParameterError(
            "Lambda = 0 makes c vanish; use gci.constant_c_lambda0 for c/Lambda")
    n = params.n
    c = params.Lambda * constant_c_lambda0(eta, n, solve_h(eta, n, resolution))
    if rho is None:
        rho = eta / (params.alpha * s2(eta, n))
    return leslie_from_order(params, s2(eta, n), s4(eta, n), c, rho=float(rho), eta=float(eta))


def leslie_coefficients(params: ModelParams, rho: float,
                        resolution: int = DEFAULT_K) -> LeslieCoefficients:
    """Leslie coefficients on the stable nematic branch at density ``rho``."""
    if params.Lambda == 0:
        raise ZeroShapeParameterError(
            "Lambda = 0 makes c vanish; use gci.constant_c_lambda0 for c/Lambda")
    return leslie_coefficients_at_eta(params, eta_of_rho(rho, params), rho, resolution)


def parodi_defect(co: LeslieCoefficients) -> dict:
    """Absolute defects of Parodi's relation and the two gamma identities."""
    L, S2 = co.params.Lambda, co.S2
    return {
        "parodi": abs((co.a6 - co.a5) - (co.a2 + co.a3)),
        "gamma1": max(abs(co.gamma1 - (co.a3 - co.a2)), abs(co.gamma1 - L * S2 / co.c)),
        "gamma2": max(abs(co.gamma2 - (co.a2 + co.a3)), abs(co.gamma2 + L * S2),
                      abs(co.gamma2 - (co.a6 - co.a5))),
    }


def projector(Omega):
    Omega = np.asarray(Omega, dtype=float)
    return np.eye(Omega.size) - np.outer(Omega, Omega)


@dataclass(frozen=True)
class FlowPoint:
    """Local kinematic state: strain E, vorticity W, director, N and H."""

    E: np.ndarray
    W: np.ndarray
    Omega: np.ndarray
    N: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None

    def __post_init__(self):
        E, W, O = (np.asarray(a, dtype=float) for a in (self.E, self.W, self.Omega))
        n = O.size
        if E.shape != (n, n) or W.shape != (n, n):
            raise InvalidParameterError("E and W must be n x n matrices")
        if abs(np.trace(E)) > TOL or np.abs(E - E.T).max() > TOL:
            raise InvalidParameterError("E must be symmetric and trace-free")
        if np.abs(W + W.T).max() > TOL:
            raise InvalidParameterError("W must be antisymmetric")
        if abs(np.linalg.norm(O) - 1.0) > TOL:
            raise InvalidParameterError("Omega must be a unit vector")
        if self.N is not None and abs(np.dot(self.N, O)) > TOL * max(1.0, np.linalg.norm(self.N)):
            raise InvalidParameterError("N must be orthogonal to Omega")
        if self.N is None and self.H is None:
            raise InvalidParameterError("FlowPoint needs N or H")

    @classmethod
    def from_velocity_gradient(cls, grad_u, Omega, N=None, H=None):
        G = np.asarray(grad_u, dtype=float)
        return cls(0.5 * (G + G.T), 0.5 * (G - G.T), Omega, N, H)


def resolve_N(co: LeslieCoefficients, fp: FlowPoint):
    """N from the director balance P(H - gamma1 N - gamma2 E Omega) = 0."""
    if fp.N is not None:
        return np.asarray(fp.N, dtype=float)
    if co.gamma1 == 0:
        raise SingularCoefficientError("gamma1 = 0: N cannot be recovered from H")
    P = projector(fp.Omega)
    return P @ (np.asarray(fp.H) - co.gamma2 * fp.E @ fp.Omega) / co.gamma1


def leslie_stress(co: LeslieCoefficients, rho: float, fp: FlowPoint):
    """Viscous Leslie stress rho {a1 (E:OO) OO + a2 O N + a3 N O + a4 E + a5 OO E + a6 E OO}."""
    O = np.asarray(fp.Omega, dtype=float)
    E = np.asarray(fp.E, dtype=float)
    N = resolve_N(co, fp)
    OO = np.outer(O, O)
    EOO = np.einsum("ij,ij", E, OO)
    return rho * (co.a1 * EOO * OO + co.a2 * np.outer(O, N) + co.a3 * np.outer(N, O)
                  + co.a4 * E + co.a5 * OO @ E + co.a6 * E @ OO)


def dissipation_density(co: LeslieCoefficients, rho: float, fp: FlowPoint):
    """Viscous dissipation integrand and a positivity verdict for its quadratic form.

    Returns ``(value, positive)`` where ``positive`` is True when the form in
    (E, P H) is positive semi-definite for this coefficient set.
    """
    if co.gamma1 == 0:
        raise SingularCoefficientError("gamma1 = 0 in the dissipation density")
    O = np.asarray(fp.Omega, dtype=float)
    E = np.asarray(fp.E, dtype=float)
    H = np.zeros_like(O) if fp.H is None else np.asarray(fp.H, dtype=float)
    k = co.gamma2**2 / co.gamma1
    EO = E @ O
    PH = projector(O) @ H
    val = rho * ((co.a1 + k) * (O @ EO) ** 2 + co.a4 * np.sum(E * E)
                 + (co.a5 + co.a6 - k) * EO @ EO + PH @ PH / co.gamma1)
    return float(val), dissipation_form_positive(co, O.size)


def dissipation_form_positive(co: LeslieCoefficients, n: int, tol: float = 1e-12) -> bool:
    """Semi-definiteness of the strain part on trace-free symmetric matrices, and gamma1 > 0."""
    O = np.zeros(n)
    O[0] = 1.0
    basis = []
    for i in range(n):
        for j in range(i, n):
            B = np.zeros((n, n))
            B[i, j] = B[j, i] = 1.0
            basis.append(B)
    # restrict to the trace-free subspace
    M = np.array([B.ravel() for B in basis]).T
    tr = np.array([np.trace(B) for B in basis])
    _, _, vt = np.linalg.svd(tr[None, :])
    Z = M @ vt[1:].T  # columns: trace-free symmetric matrices (flattened)
    k = co.gamma2**2 / co.gamma1

    def form(e):
        E = e.reshape(n, n)
        EO = E @ O
        return ((co.a1 + k) * (O @ EO) ** 2 + co.a4 * np.sum(E * E) + (co.a5 + co.a6 - k) * EO @ EO)

    d = Z.shape[1]
    G = np.empty((d, d))
    for a in range(d):
        for b in range(d):
            G[a, b] = 0.25 * (form(Z[:, a] + Z[:, b]) - form(Z[:, a] - Z[:, b]))
    scale = max(1.0, np.abs(G).max())
    return bool(np.linalg.eigvalsh(G).min() >= -tol * scale and co.gamma1 > 0)


@dataclass(frozen=True)
class FieldJet:
    """Pointwise values and derivatives of (rho, eta, Omega)."""

    rho: float
    eta: float
    grad_rho: np.ndarray
    grad_eta: np.ndarray
    Omega: np.ndarray
    grad_Omega: np.ndarray
    lap_eta_Omega: Optional[np.ndarray] = None
    lap_rho: float = 0.0
    lap_eta: float = 0.0
    on_branch: bool = True

    def __post_init__(self):
        O = np.asarray(self.Omega, dtype=float)
        if abs(np.linalg.norm(O) - 1.0) > TOL:
            raise InvalidParameterError("Omega must be a unit vector")
        gO = np.asarray(self.grad_Omega, dtype=float)
        if gO.shape != (O.size, O.size):
            raise InvalidParameterError("grad_Omega must be n x n")
        if np.abs(gO @ O).max() > TOL * max(1.0, np.abs(gO).max()):
            raise InvalidParameterError("grad_Omega rows must be orthogonal to Omega")

    def grad_eta_Omega(self):
        """(d_i (eta Omega_j))."""
        return np.outer(self.grad_eta, self.Omega) + self.eta * np.asarray(self.grad_Omega)


def ericksen_stress(params: ModelParams, jet: FieldJet):
    """Elastic stress from director, concentration and density gradients."""
    a, b, n = params.alpha, params.beta, params.n
    G = jet.grad_eta_Omega()
    ge, gr = np.asarray(jet.grad_eta), np.asarray(jet.grad_rho)
    return (-(2.0 * b / a) * G @ G.T + (n + 1) * b / (n * a) * np.outer(ge, ge)
            + (n - 1) * a * b / n * np.outer(gr, gr))


def ericksen_stress_alternate(params: ModelParams, jet: FieldJet):
    """Same stress with the density gradient eliminated along the branch.

    Uses ``grad rho = (1 - eta S2'/S2) grad eta / (alpha S2)``; valid only for
    on-branch jets.
    """
    a, b, n, eta = params.alpha, params.beta, params.n, jet.eta
    S2, dS2 = s2(eta, n), s2_prime(eta, n)
    gO = np.asarray(jet.grad_Omega)
    ge = np.asarray(jet.grad_eta)
    chi = 1.0 - (1.0 - eta * dS2 / S2) ** 2 / S2**2
    return -(2.0 * b / a) * eta**2 * gO @ gO.T - (n - 1) * b / (n * a) * chi * np.outer(ge, ge)


def molecular_field(params: ModelParams, jet: FieldJet):
    """H = 2 beta S2(eta) Laplacian(eta Omega)."""
    if jet.lap_eta_Omega is None:
        raise InvalidParameterError("molecular_field needs the Laplacian of eta Omega")
    return 2.0 * params.beta * s2(jet.eta, params.n) * np.asarray(jet.lap_eta_Omega, dtype=float)


def _spectral_derivative(N, L):
    """Skew-symmetric Fourier differentiation on a periodic grid (Nyquist mode dropped)."""
    k = np.fft.fftfreq(N, d=L / N) * 2.0 * np.pi
    if N % 2 == 0:
        k[N // 2] = 0.0

    def D(f):
        f = np.asarray(f, dtype=float)
        kk = k.reshape((N,) + (1,) * (f.ndim - 1))
        return np.real(np.fft.ifft(1j * kk * np.fft.fft(f, axis=0), axis=0))

    return D


@dataclass(frozen=True)
class FranckEnergy:
    total: float
    omega: float
    rho: float
    eta: float
    positive: bool


def branch_eta_field(rho, params: ModelParams):
    return np.array([eta_of_rho(r, params) for r in np.asarray(rho, dtype=float)])


def franck_energy(params: ModelParams, rho, Omega, length: float = 1.0, eta=None) -> FranckEnergy:
    """Oseen-Franck energy of periodic 1-D fields ``rho(x)``, ``Omega(x)``.

    ``rho`` has shape (N,), ``Omega`` shape (N, n); ``eta`` defaults to the
    branch value ``eta(rho(x))`` (off-branch densities raise).
    """
    rho = np.asarray(rho, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    N = rho.size
    if eta is None:
        eta = branch_eta_field(rho, params)
    eta = np.asarray(eta, dtype=float)
    a, b, n = params.alpha, params.beta, params.n
    D = _spectral_derivative(N, length)
    dx = length / N
    v = D(eta[:, None] * Omega)
    e_om = (2.0 * b / a) * dx * np.sum(v * v) / 2.0
    e_rho = -a * b * (n - 1) / n * dx * np.sum(D(rho) ** 2) / 2.0
    e_eta = -b * (n + 1) / (n * a) * dx * np.sum(D(eta) ** 2) / 2.0
    S2, dS2 = s2(eta, n), s2_prime(eta, n)
    chi = 1.0 - (1.0 - eta * dS2 / S2) ** 2 / S2**2
    return FranckEnergy(total=float(e_om + e_rho + e_eta), omega=float(e_om),
                        rho=float(e_rho), eta=float(e_eta), positive=bool(np.all(chi >= 0)))


def franck_energy_alternate(params: ModelParams, rho, Omega, length: float = 1.0, eta=None):
    """Equivalent form (2b/a) int eta^2 |grad Omega|^2/2 + (n-1)b/(na) int chi |grad eta|^2/2."""
    rho = np.asarray(rho, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    if eta is None:
        eta = branch_eta_field(rho, params)
    eta = np.asarray(eta, dtype=float)
    a, b, n = params.alpha, params.beta, params.n
    D = _spectral_derivative(rho.size, length)
    dx = length / rho.size
    gO = D(Omega)
    ge = D(eta)
    S2, dS2 = s2(eta, n), s2_prime(eta, n)
    chi = 1.0 - (1.0 - eta * dS2 / S2) ** 2 / S2**2
    return float((2.0 * b / a) * dx * np.sum(eta**2 * np.sum(gO * gO, axis=1)) / 2.0
                 + (n - 1) * b / (n * a) * dx * np.sum(chi * ge * ge) / 2.0)


def rho_molecular_field_1d(params: ModelParams, rho, Omega, length: float = 1.0, eta=None):
    """rho H = (2 beta / alpha) eta Laplacian(eta Omega) on a periodic 1-D grid."""
    rho = np.asarray(rho, dtype=float)
    if eta is None:
        eta = branch_eta_field(rho, params)
    eta = np.asarray(eta, dtype=float)
    D = _spectral_derivative(rho.size, length)
    lap = D(D(eta[:, None] * np.asarray(Omega, dtype=float)))
    return (2.0 * params.beta / params.alpha) * eta[:, None] * lap


def director_rhs(co: LeslieCoefficients, params: ModelParams, Omega, E, W, lap_eta_Omega=None):
    """dOmega/dt = -W Omega + c P(E Omega + (2 beta / Lambda) Laplacian(eta Omega))."""
    Omega = np.asarray(Omega, dtype=float)
    if abs(np.linalg.norm(Omega) - 1.0) > TOL:
        raise InvalidParameterError("Omega must be a unit vector")
    drive = np.asarray(E, dtype=float) @ Omega
    if lap_eta_Omega is not None:
        drive = drive + (2.0 * params.beta / params.Lambda) * np.asarray(lap_eta_Omega)
    P = projector(Omega)
    out = -np.asarray(W, dtype=float) @ Omega + co.c * P @ drive
    return P @ out


def shear_alignment_angle(c: float) -> float:
    """Steady director angle in simple shear u = (shear_rate y, 0), for c > 1."""
    if not c > 1:
        raise InvalidParameterError(f"flow alignment requires c > 1, got {c!r}")
    return 0.5 * float(np.arccos(1.0 / c))


def tumbling_period(c: float, shear_rate: float = 1.0) -> float:
    """Director tumbling period in simple shear, for |c| < 1."""
    if not abs(c) < 1:
        raise InvalidParameterError(f"tumbling requires |c| < 1, got {c!r}")
    return 2.0 * np.pi / (abs(shear_rate) * np.sqrt(1.0 - c * c))
