"""Spatially homogeneous Doi kinetics on the circle (n = 2).

The orientation density is stored by its even Fourier harmonics,
``f(phi) = f_0 + 2 Re sum_{m=1}^K f_m e^{2im phi}``, so head-tail symmetry is
built in.  Averages use the normalized measure ``dphi / 2pi``.  In these
variables

    rho = f_0,      rho Q = (1/2) [[Re f_1, -Im f_1], [-Im f_1, -Re f_1]],

and the Maier-Saupe potential is ``U0 = -(alpha/2) Re(f_1 e^{2i phi}) + alpha rho / 2``.
Collision and the homogeneous Jeffery transport both reduce to a diagonal part
plus a two-neighbour stencil (see :mod:`._kernels`), so rates are exact in
coefficient space with one extra harmonic ``K+1``.

Velocity-gradient convention: ``(grad_u)_ij = d_i u_j``, ``E`` and ``W`` its
symmetric and antisymmetric parts; simple shear ``u = (g y, 0)`` is
``grad_u = [[0, 0], [g, 0]]``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, special

from . import _kernels
from .equilibria import ModelParams
from .errors import (AmbiguousKernelError, DegenerateMomentError, IntegratorError,
                     InvalidParameterError, PositivityError)
from .gci import solve_h

KERNEL_RTOL = 1e-8
KERNEL_GAP = 1e3


# ---------------------------------------------------------------- state ----

@dataclass
class OrientationState:
    """Even-harmonic Fourier coefficients ``coeffs[m]``, m = 0..K, at time ``t``."""

    coeffs: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size < 2:
            raise InvalidParameterError("coefficient array must be 1-D with K >= 1")
        if not np.all(np.isfinite(c)):
            raise InvalidParameterError("coefficients must be finite")
        if abs(c[0].imag) > 1e-14 * max(1.0, abs(c[0].real)):
            raise InvalidParameterError("the mean coefficient must be real")
        c[0] = c[0].real
        if not c[0].real > 0:
            raise InvalidParameterError(f"mass must be positive, got {c[0].real!r}")
        self.coeffs = c

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    @property
    def mass(self) -> float:
        return float(self.coeffs[0].real)

    def values(self, npts=None):
        """Grid angles on [0, pi) and the reconstructed density there."""
        return _grid_values(self.coeffs, npts or 4 * self.K)

    def min_value(self, npts=None) -> float:
        return float(self.values(npts)[1].min())

    def positivity_ok(self) -> bool:
        """Monitor: min over a 4K-point grid is >= -1e-8 f_0."""
        return self.min_value() >= -1e-8 * self.mass

    def resized(self, K: int) -> "OrientationState":
        c = np.zeros(K + 1, dtype=complex)
        k = min(K, self.K)
        c[:k + 1] = self.coeffs[:k + 1]
        return OrientationState(c, self.t)

    @classmethod
    def gibbs(cls, rho: float, eta: float, angle: float = 0.0, K: int = 32):
        """Projection of ``rho G_{eta A_Omega}`` with ``Omega = (cos angle, sin angle)``.

        ``exp(eta cos^2(phi - angle))`` has harmonics ``I_m(eta/2) / I_0(eta/2)``.
        """
        if not rho > 0 or not eta >= 0:
            raise InvalidParameterError("need rho > 0 and eta >= 0")
        m = np.arange(K + 1)
        ratio = special.ive(m, 0.5 * eta) / special.ive(0, 0.5 * eta)
        return cls(rho * ratio * np.exp(-2j * m * angle))

    @classmethod
    def uniform(cls, rho: float, K: int = 32):
        c = np.zeros(K + 1, dtype=complex)
        c[0] = rho
        return cls(c)

    @classmethod
    def random(cls, rng, K: int = 32, rho: float = 1.0, amplitude: float = 1.0, modes: int = 4):
        """Smooth positive density ``rho e^s / <e^s>`` with a random trigonometric ``s``."""
        s = np.zeros(K + 1, dtype=complex)
        m = np.arange(1, modes + 1)
        s[1:modes + 1] = amplitude * (rng.standard_normal(modes)
                                      + 1j * rng.standard_normal(modes)) / m**2
        npts = max(16 * K, 256)
        _, sv = _grid_values(s, npts)
        c = np.fft.rfft(np.exp(sv - sv.max())) / npts
        c = c[:K + 1] * (rho / c[0].real)
        return cls(c)


def _grid_values(coeffs, npts):
    phi = np.pi * np.arange(npts) / npts
    c = np.zeros(npts // 2 + 1, dtype=complex)
    k = min(coeffs.size, c.size)
    c[:k] = coeffs[:k]
    return phi, np.fft.irfft(c * npts, npts)


def _coeffs_of(values):
    npts = values.size
    return np.fft.rfft(values) / npts


def _inner(a, b) -> float:
    """``<a b>`` for real functions given by coefficient arrays (Parseval)."""
    k = min(a.size, b.size)
    return float((a[0] * np.conj(b[0])).real + 2 * (a[1:k] * np.conj(b[1:k])).real.sum())


def coeff_norm(a) -> float:
    return float(np.sqrt(max(_inner(a, a), 0.0)))


# ------------------------------------------------------- flow kinematics ----

def split_gradient(grad_u):
    """Trace-free check, then ``(E, W)``."""
    G = np.asarray(grad_u, dtype=float)
    if G.shape != (2, 2):
        raise InvalidParameterError("velocity gradient must be 2x2")
    if abs(np.trace(G)) > 1e-12 * max(1.0, np.abs(G).max()):
        raise InvalidParameterError("velocity gradient must be trace-free")
    return 0.5 * (G + G.T), 0.5 * (G - G.T)


def _flow_numbers(grad_u):
    """``ehat = E11 - i E12`` and ``w = W21`` of a trace-free gradient."""
    E, W = split_gradient(grad_u)
    return complex(E[0, 0], -E[0, 1]), float(W[1, 0])


def shear_gradient(rate: float):
    """Simple shear ``u = (rate y, 0)``."""
    return np.array([[0.0, 0.0], [rate, 0.0]])


def _extended_rate(coeffs, z, diag):
    """Full stencil rate on modes 0..K+1 (the top mode is produced by f_K)."""
    K = coeffs.size - 1
    f = np.concatenate([coeffs, [0.0]])
    out = diag * f
    m = np.arange(1, K + 2)
    out[1:] += m * z * f[:-1]
    out[1:K + 1] -= m[:-1] * np.conj(z) * f[2:]
    return out


def collision(state: OrientationState, alpha: float, extended: bool = False):
    """Rate coefficients of ``C(f) = Lap f - 2 alpha rho div(f P Q omega)``.

    ``extended=True`` keeps harmonic K+1, making the result exact for the
    represented density.
    """
    K = state.K
    m = np.arange(K + 2)
    out = _extended_rate(state.coeffs, alpha * state.coeffs[1], -4.0 * m**2)
    out[0] = 0.0
    return out if extended else out[:K + 1]


def transport(state: OrientationState, grad_u, Lambda: float, extended: bool = False):
    """Rate coefficients of ``-div_omega(f (Lambda P E - W) omega)``."""
    ehat, w = _flow_numbers(grad_u)
    K = state.K
    m = np.arange(K + 2)
    out = _extended_rate(state.coeffs, Lambda * ehat, 2j * w * m)
    out[0] = 0.0
    return out if extended else out[:K + 1]


def total_rate(state, alpha, eps, grad_u, Lambda, extended=False):
    """``df/dt = C(f)/eps + transport`` in coefficient space."""
    return collision(state, alpha, extended) / eps + transport(state, grad_u, Lambda, extended)


# --------------------------------------------------------------- moments ----

@dataclass(frozen=True)
class Moments:
    rho: float
    Q: np.ndarray
    lam: float
    theta: float
    eta: float

    @property
    def degenerate(self) -> bool:
        return not self.lam > 1e-14

    @property
    def S2(self) -> float:
        """Scalar order ``2 lam``; equals S2(eta) for a Gibbs state."""
        return 2.0 * self.lam

    @property
    def Omega(self) -> np.ndarray:
        if self.degenerate:
            raise DegenerateMomentError("Q_f = 0: the director is undefined")
        return np.array([np.cos(self.theta), np.sin(self.theta)])

    @property
    def Sigma(self) -> np.ndarray:
        """``(n-1)/n Q / lam``, leading eigenvalue 1/2."""
        if self.degenerate:
            raise DegenerateMomentError("Q_f = 0: Sigma_f is undefined")
        return 0.5 * self.Q / self.lam


def _rhoQ(f1):
    return 0.5 * np.array([[f1.real, -f1.imag], [-f1.imag, -f1.real]])


def director_angle(f1) -> float:
    """Canonical director angle in (-pi/2, pi/2] read from ``f_1 = |f_1| e^{-2i theta}``."""
    th = -0.5 * np.angle(f1)
    if th <= -0.5 * np.pi:
        th += np.pi
    return float(th)


def moments(state: OrientationState, alpha: float) -> Moments:
    """Density, Q-tensor, leading eigenvalue, director angle and ``eta_f``."""
    rho = state.mass
    f1 = state.coeffs[1]
    lam = abs(f1) / (2.0 * rho)
    theta = director_angle(f1) if lam > 1e-14 else float("nan")
    # eta_f = alpha rho n/(n-1) lam = alpha |f_1|
    return Moments(rho, _rhoQ(f1) / rho, float(lam), theta, float(alpha * abs(f1)))


def dQ_dt(state, alpha, eps, grad_u, Lambda):
    """Exact time derivative of Q_f from the instantaneous rate."""
    r1 = total_rate(state, alpha, eps, grad_u, Lambda)[1]
    return _rhoQ(r1) / state.mass


# ---------------------------------------------------------- free energy ----

def _fine(state):
    return max(8 * state.K, 256)


def _potential_derivative(phi, f1, alpha):
    """``dU0/dphi = alpha Im(f_1 e^{2i phi})``."""
    return alpha * np.imag(f1 * np.exp(2j * phi))


def free_energy(state: OrientationState, alpha: float):
    """``A0 = <f log f - f + U0 f / 2>`` and the dissipation ``<f |d_phi mu0|^2>``."""
    npts = _fine(state)
    phi, f = state.values(npts)
    if f.min() <= 0:
        raise PositivityError(f"reconstructed density reaches {f.min():.3e}")
    rho, f1 = state.mass, state.coeffs[1]
    U = -0.5 * alpha * np.real(f1 * np.exp(2j * phi)) + 0.5 * alpha * rho
    A = np.mean(f * np.log(f) - f + 0.5 * U * f)
    # f' through the spectral derivative, then (f' + f U')^2 / f
    m = np.arange(state.K + 1)
    _, df = _grid_values(2j * m * state.coeffs, npts)
    flux = df + f * _potential_derivative(phi, f1, alpha)
    return float(A), float(np.mean(flux**2 / f))


# ------------------------------------------------------------------ GCI ----

def gci_function(eta: float, theta: float, npts: int, resolution: int = 48):
    """Coefficients of ``psi(phi) = h_eta(cos(phi - theta)) sin(phi - theta)``."""
    sol = solve_h(float(eta), 2, resolution)
    phi = np.pi * np.arange(npts) / npts
    x = phi - theta
    return _coeffs_of(sol(np.cos(x)) * np.sin(x))


def gci_residual(state: OrientationState, alpha: float, eta=None, resolution: int = 48,
                 normalization: str = "collision") -> float:
    """Relative residual of ``<C(f) psi>`` with the GCI ``psi`` built at ``eta_f``.

    ``normalization="collision"`` divides by ``|C(f)| |psi|``.  Near an
    equilibrium ``C(f)`` is itself at round-off level and that ratio is noise,
    so ``"diffusion"`` divides by ``|Laplacian f| |psi|`` instead, the size of
    the terms that cancel in ``C(f)``.  ``eta`` overrides the GCI parameter
    (used for contrast runs).
    """
    mo = moments(state, alpha)
    if mo.degenerate:
        raise DegenerateMomentError("Q_f = 0: the GCI of f is undefined")
    C = collision(state, alpha, extended=True)
    npts = max(16 * state.K, 1024)
    psi = gci_function(mo.eta if eta is None else eta, mo.theta, npts, resolution)
    if normalization == "collision":
        scale = coeff_norm(C)
    elif normalization == "diffusion":
        scale = coeff_norm(4.0 * np.arange(state.K + 1) ** 2 * state.coeffs)
    else:
        raise InvalidParameterError(f"unknown normalization {normalization!r}")
    denom = scale * coeff_norm(psi)
    if denom == 0:
        return 0.0
    return abs(_inner(C, psi)) / denom


# ------------------------------------------------------- linearization ----

def _real_basis_scale(K):
    return np.concatenate([[1.0], np.full(2 * K, np.sqrt(2.0))])


def _to_real(c):
    """Orthonormal real coordinates ``[x_0, sqrt2 Re c_m, sqrt2 Im c_m]``."""
    K = c.size - 1
    return _real_basis_scale(K) * np.concatenate([[c[0].real], c[1:].real, c[1:].imag])


def linearized_collision_matrix(state: OrientationState, alpha: float):
    """Real matrix of ``D_f C`` on the truncated basis, orthonormal in L^2(dphi/2pi).

    Coordinates are ``(1, sqrt2 cos 2m phi, -sqrt2 sin 2m phi)`` coefficients
    so the L^2 adjoint is the transpose.
    """
    f = state.coeffs
    K = state.K
    A = np.zeros((K + 1, K + 1), dtype=complex)
    B = np.zeros((K + 1, K + 1), dtype=complex)
    fe = np.concatenate([f, [0.0]])
    for m in range(1, K + 1):
        A[m, m] = -4.0 * m * m
        A[m, m - 1] += alpha * m * f[1]
        if m < K:
            A[m, m + 1] -= alpha * m * np.conj(f[1])
        A[m, 1] += alpha * m * f[m - 1]
        B[m, 1] -= alpha * m * fe[m + 1]
    P, M = A + B, A - B
    J = np.zeros((2 * K + 1, 2 * K + 1))
    # rows: Re R_0..R_K, Im R_1..R_K; columns: x_0..x_K, y_1..y_K
    J[:K + 1, :K + 1] = P.real
    J[:K + 1, K + 1:] = -M.imag[:, 1:]
    J[K + 1:, :K + 1] = P.imag[1:]
    J[K + 1:, K + 1:] = M.real[1:, 1:]
    S = _real_basis_scale(K)
    return S[:, None] * J / S[None, :]


def adjoint_linearized_matrix(state: OrientationState, alpha: float):
    """Matrix of the L^2 adjoint ``(D_f C)^*`` in the orthonormal real basis."""
    return linearized_collision_matrix(state, alpha).T


@dataclass(frozen=True)
class KernelReport:
    dimension: int
    basis: np.ndarray
    singular_values: np.ndarray
    gap: float
    angle: float = float("nan")


def numerical_kernel(matrix, rtol: float = KERNEL_RTOL, min_gap: float = KERNEL_GAP):
    """Kernel by singular-value thresholding with a gap check."""
    _, s, vh = linalg.svd(matrix)
    cut = rtol * s[0]
    dim = int(np.sum(s < cut))
    if dim == 0 or dim == s.size:
        raise AmbiguousKernelError("no clean kernel threshold", s)
    gap = s[-dim - 1] / max(s[-dim], np.finfo(float).tiny)
    if gap < min_gap:
        raise AmbiguousKernelError(f"singular-value gap {gap:.3g} below {min_gap:g}", s)
    return dim, vh[-dim:].T, s, float(gap)


def gci_subspace(state: OrientationState, alpha: float, eta=None, resolution: int = 48):
    """Orthonormal real coordinates of ``span{1, psi}`` for the GCI at ``eta``."""
    mo = moments(state, alpha)
    eta = mo.eta if eta is None else eta
    psi = gci_function(eta, mo.theta, max(16 * state.K, 1024), resolution)[:state.K + 1]
    one = np.zeros(state.K + 1, dtype=complex)
    one[0] = 1.0
    return np.column_stack([_to_real(one), _to_real(psi)])


def kernel_analysis(state: OrientationState, alpha: float, resolution: int = 48) -> KernelReport:
    """Kernel of the adjoint linearization and its largest principal angle to span{1, GCI}."""
    dim, basis, s, gap = numerical_kernel(adjoint_linearized_matrix(state, alpha))
    ref = gci_subspace(state, alpha, resolution=resolution)
    angle = float(np.max(linalg.subspace_angles(basis, ref))) if dim == 2 else float("nan")
    return KernelReport(dim, basis, s, gap, angle)


def off_equilibrium_probe(rho: float, eta: float, alpha: float, K: int = 64,
                          resolution: int = 48) -> dict:
    """Exploratory: angles between the GCI and the smallest singular directions.

    The Gibbs state ``rho G_{eta A}`` is generally not an equilibrium, so no
    clean kernel is expected; the two right-singular vectors with the smallest
    singular values are compared to ``span{1, psi_eta}``.
    """
    st = OrientationState.gibbs(rho, eta, 0.0, K)
    _, s, vh = linalg.svd(adjoint_linearized_matrix(st, alpha))
    low = vh[-2:].T
    ref = gci_subspace(st, alpha, eta=eta, resolution=resolution)
    psi = ref[:, 1] / np.linalg.norm(ref[:, 1])
    adj = adjoint_linearized_matrix(st, alpha)
    return {
        "rho": rho, "eta": eta, "alpha": alpha,
        "eta_f": moments(st, alpha).eta,
        "subspace_angle": float(np.max(linalg.subspace_angles(low, ref))),
        "adjoint_on_gci": float(np.linalg.norm(adj @ psi)),
        "smallest_singular_values": s[-3:].tolist(),
    }


# --------------------------------------------------------------- stress ----

def _omega_moments(state, alpha, npts):
    phi, f = state.values(npts)
    om = np.stack([np.cos(phi), np.sin(phi)])
    perp = np.stack([-np.sin(phi), np.cos(phi)])
    dU = _potential_derivative(phi, state.coeffs[1], alpha)
    M = np.einsum("ip,jp,p->ij", om, perp, dU * f) / npts
    return phi, f, om, M


def potential_moment(state: OrientationState, alpha: float):
    """``<omega (x) grad_omega U0 f>``; symmetric for every f."""
    return _omega_moments(state, alpha, 4 * state.K + 8)[3]


def kinetic_stress(state: OrientationState, grad_u, Lambda: float, alpha: float,
                   eps: float, dQdt):
    """The two scaled stress expressions (local potential U0).

    First: ``n Lambda rho Q + <((Lambda+1)/2) omega (x) grad U0 + ((Lambda-1)/2) grad U0 (x) omega>``.
    Second: ``eps (Lambda/2) rho [Lambda(EQ+QE) + QW - WQ + (2 Lambda/n) E - 2 Lambda T:E - DtQ]``
    plus the antisymmetric potential part.  They agree when f solves the
    kinetic equation and ``dQdt`` is its Q-tensor derivative.
    """
    E, W = split_gradient(grad_u)
    npts = 4 * state.K + 8
    phi, f, om, M = _omega_moments(state, alpha, npts)
    rho = state.mass
    Q = _rhoQ(state.coeffs[1]) / rho
    n = 2
    s1 = n * Lambda * rho * Q + 0.5 * (Lambda + 1) * M + 0.5 * (Lambda - 1) * M.T
    proj = np.einsum("ip,ij,jp->p", om, E, om)
    TE = np.einsum("ip,jp,p->ij", om, om, proj * f) / npts / rho
    bracket = (Lambda * (E @ Q + Q @ E) + Q @ W - W @ Q + (2 * Lambda / n) * E
               - 2 * Lambda * TE - np.asarray(dQdt, dtype=float))
    s2 = eps * 0.5 * Lambda * rho * bracket + 0.5 * (M - M.T)
    return s1, s2


# ----------------------------------------------------------- simulation ----

@dataclass
class SimConfig:
    params: ModelParams = field(default_factory=ModelParams)
    eps: float = 1.0
    grad_u: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    dt: float | None = None
    tmax: float = 1.0
    integrator: str = "etd4"

    def __post_init__(self):
        if self.params.n != 2:
            raise InvalidParameterError("the kinetic simulator is two-dimensional (n = 2)")
        if not self.eps > 0:
            raise InvalidParameterError(f"eps must be positive, got {self.eps!r}")
        self.grad_u = np.asarray(self.grad_u, dtype=float)
        split_gradient(self.grad_u)
        if self.dt is None:
            # the alignment coupling alpha f_1 / eps is explicit, so accuracy of
            # the slow director drift needs dt well below eps
            self.dt = min(self.eps / 16.0, 1e-3)
        if not self.dt > 0 or not self.tmax >= 0:
            raise InvalidParameterError("need dt > 0 and tmax >= 0")
        if self.integrator not in ("etd4", "etd2", "bdf"):
            raise InvalidParameterError(f"unknown integrator {self.integrator!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray
    config: SimConfig
    positivity: np.ndarray

    def state(self, i) -> OrientationState:
        return OrientationState(self.coeffs[i], float(self.times[i]))

    def __len__(self):
        return self.times.size

    def moments(self, i) -> Moments:
        return moments(self.state(i), self.config.params.alpha)

    def director_angles(self) -> np.ndarray:
        """Continuous (unwrapped) director angle along the run."""
        return -0.5 * np.unwrap(np.angle(self.coeffs[:, 1]))

    def Q_series(self) -> np.ndarray:
        """Q_f at every output time, shape (nt, 2, 2)."""
        f1 = self.coeffs[:, 1]
        rho = self.coeffs[:, 0].real
        Q = 0.5 * np.stack([np.stack([f1.real, -f1.imag], -1),
                            np.stack([-f1.imag, -f1.real], -1)], -2)
        return Q / rho[:, None, None]

    def dQ_fd(self, i) -> np.ndarray:
        """Second-order difference of Q_f (centered inside, one-sided at the ends)."""
        Q = self.Q_series()
        t = self.times
        if 0 < i < t.size - 1:
            h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
            return (h1**2 * Q[i + 1] - h2**2 * Q[i - 1] + (h2**2 - h1**2) * Q[i]) / (h1 * h2 * (h1 + h2))
        if t.size < 3:
            raise InvalidParameterError("need three samples for a difference quotient")
        j = [0, 1, 2] if i == 0 else [i, i - 1, i - 2]
        h = t[j[1]] - t[j[0]]
        return (-3 * Q[j[0]] + 4 * Q[j[1]] - Q[j[2]]) / (2 * h)


def _etd_setup(K, eps, dt, w, order):
    m = np.arange(K + 1)
    L = -4.0 * m**2 / eps + 2j * w * m
    if order == 4:
        return _kernels.etd4_coefficients(L, dt)
    return _kernels.etd_coefficients(L, dt)


def simulate(initial: OrientationState, config: SimConfig, output_times=None) -> Trajectory:
    """Integrate ``df/dt = C(f)/eps + transport`` and record coefficients.

    ``output_times`` defaults to ``tmax`` split into 100 intervals.  The ETD
    paths (fourth-order Cox-Matthews by default, second order on request)
    integrate the diffusion and rotation exactly per mode and shrink the step
    so each output interval holds a whole number of steps.  Fixed points of
    the ETD schemes are exact equilibria of the semi-discrete equation.
    """
    p = config.params
    if output_times is None:
        output_times = np.linspace(initial.t, initial.t + config.tmax, 101)
    ts = np.asarray(output_times, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0) or ts[0] < initial.t:
        raise InvalidParameterError("output times must be increasing and start at or after t0")
    ehat, w = _flow_numbers(config.grad_u)
    K = initial.K
    out = np.empty((ts.size, K + 1), dtype=complex)
    pos = np.empty(ts.size, dtype=bool)
    a_eps = p.alpha / config.eps
    shift = p.Lambda * ehat

    if config.integrator == "bdf":
        def rhs(_, y):
            c = y[:K + 1] + 1j * y[K + 1:]
            r = _extended_rate(c, a_eps * c[1] + shift,
                               -4.0 * np.arange(K + 2) ** 2 / config.eps + 2j * w * np.arange(K + 2))[:K + 1]
            r[0] = 0.0
            return np.concatenate([r.real, r.imag])

        y0 = np.concatenate([initial.coeffs.real, initial.coeffs.imag])
        sol = integrate.solve_ivp(rhs, (initial.t, ts[-1]), y0, method="BDF", t_eval=ts,
                                  rtol=1e-10, atol=1e-13 * initial.mass)
        if not sol.success:
            raise IntegratorError(f"BDF failed: {sol.message}",
                                  float(sol.t[-1]) if sol.t.size else initial.t)
        out[:] = (sol.y[:K + 1] + 1j * sol.y[K + 1:]).T
        out[:, 0] = initial.mass
    else:
        f = initial.coeffs.copy()
        t = initial.t
        cache = {}
        order = 4 if config.integrator == "etd4" else 2
        for j, target in enumerate(ts):
            span = target - t
            if span > 0:
                nsteps = max(1, int(np.ceil(span / config.dt - 1e-9)))
                h = span / nsteps
                key = round(h, 15)
                if key not in cache:
                    cache[key] = _etd_setup(K, config.eps, h, w, order)
                if order == 4:
                    f, ok = _kernels.etd4(f, nsteps, cache[key], a_eps, shift)
                else:
                    f, ok = _kernels.etd2(f, nsteps, *cache[key], a_eps, shift)
                if not ok:
                    raise IntegratorError(
                        f"norm blow-up before t = {target:g}; reduce dt below {h:.3g}", t)
            t = target
            out[j] = f
    for j in range(ts.size):
        pos[j] = OrientationState(out[j]).positivity_ok()
    return Trajectory(ts, out, config, pos)


def equilibrium_state(rho: float, alpha: float, angle: float = 0.0, K: int = 32) -> OrientationState:
    """On-branch Gibbs state for density ``rho``."""
    from .equilibria import eta_of_rho
    eta = eta_of_rho(rho, ModelParams(n=2, alpha=alpha))
    return OrientationState.gibbs(rho, eta, angle, K)
