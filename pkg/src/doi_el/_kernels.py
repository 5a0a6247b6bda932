"""Hot loops of the circle simulator, in numba and pure-numpy variants.

State: complex coefficients ``f[m]``, m = 0..K, of ``f(phi) = sum f_m e^{2im phi}``
(negative modes by conjugation).  The evolution in coefficient space is

    df_m/dt = L_m f_m + m (z f_{m-1} - conj(z) f_{m+1}),
    z = (alpha/eps) f_1 + Lambda * ehat,

with the diagonal part ``L_m = -4 m^2 / eps + 2 i m w`` (diffusion and
rigid rotation) and a two-neighbour stencil for alignment plus strain.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


def stencil_numpy(f, z):
    """m (z f_{m-1} - conj(z) f_{m+1}) for m = 0..K, with f_{K+1} = 0."""
    K = f.size - 1
    out = np.zeros_like(f)
    m = np.arange(1, K + 1)
    out[1:] = m * z * f[:-1]
    out[1:K] -= m[:-1] * np.conj(z) * f[2:]
    return out


@njit
def stencil_numba(f, z):
    K = f.size - 1
    out = np.zeros_like(f)
    zc = np.conj(z)
    for m in range(1, K + 1):
        acc = z * f[m - 1]
        if m < K:
            acc -= zc * f[m + 1]
        out[m] = m * acc
    return out


def etd2_numpy(f, nsteps, E, phi1, phi2, a_eps, shift):
    """``nsteps`` of second-order exponential time differencing (Cox-Matthews).

    ``a_eps = alpha/eps``; ``shift = Lambda * ehat``.  Returns the new state
    and a flag that is False if the norm blew up.
    """
    f = f.copy()
    n0 = np.abs(f).max()
    # overflow is reported through the returned flag, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(nsteps):
            Nu = stencil_numpy(f, a_eps * f[1] + shift)
            a = E * f + phi1 * Nu
            Na = stencil_numpy(a, a_eps * a[1] + shift)
            f = a + phi2 * (Na - Nu)
            f[0] = f[0].real
    ok = bool(np.isfinite(f).all() and np.abs(f).max() < 1e3 * n0)
    return f, ok


@njit
def etd2_numba(f, nsteps, E, phi1, phi2, a_eps, shift):
    f = f.copy()
    K = f.size - 1
    n0 = np.abs(f).max()
    a = np.empty_like(f)
    for _ in range(nsteps):
        z = a_eps * f[1] + shift
        zc = np.conj(z)
        # stage 1: a = E f + phi1 N(f); keep N(f) in place of f for stage 2
        Nu = np.empty_like(f)
        for m in range(K + 1):
            acc = 0j
            if m > 0:
                acc = z * f[m - 1]
                if m < K:
                    acc -= zc * f[m + 1]
            Nu[m] = m * acc
            a[m] = E[m] * f[m] + phi1[m] * Nu[m]
        z = a_eps * a[1] + shift
        zc = np.conj(z)
        for m in range(K + 1):
            acc = 0j
            if m > 0:
                acc = z * a[m - 1]
                if m < K:
                    acc -= zc * a[m + 1]
            f[m] = a[m] + phi2[m] * (m * acc - Nu[m])
        f[0] = f[0].real + 0j
    ok = True
    for m in range(K + 1):
        v = f[m]
        if not (np.isfinite(v.real) and np.isfinite(v.imag)) or abs(v) > 1e3 * n0:
            ok = False
    return f, ok


if USE_NUMBA:
    stencil = stencil_numba
    etd2 = etd2_numba
else:
    stencil = stencil_numpy
    etd2 = etd2_numpy


def etd_coefficients(L, dt):
    """``exp(L dt)``, ``(e^{L dt}-1)/L`` and ``(e^{L dt}-1-L dt)/(L^2 dt)`` per mode.

    Small ``|L dt|`` uses Taylor series to avoid cancellation.
    """
    L = np.asarray(L, dtype=complex)
    x = L * dt
    E = np.exp(x)
    small = np.abs(x) < 1e-2
    phi1 = np.empty_like(x)
    phi2 = np.empty_like(x)
    xs = x[small]
    phi1[small] = dt * (1 + xs / 2 + xs**2 / 6 + xs**3 / 24 + xs**4 / 120 + xs**5 / 720)
    phi2[small] = dt * (0.5 + xs / 6 + xs**2 / 24 + xs**3 / 120 + xs**4 / 720 + xs**5 / 5040)
    xb = x[~small]
    phi1[~small] = dt * np.expm1(xb) / xb
    phi2[~small] = dt * (np.expm1(xb) - xb) / (xb * xb)
    return E, phi1, phi2


def etd4_coefficients(L, dt, npoles=64):
    """Cox-Matthews ETDRK4 coefficients, by contour averages (Kassam-Trefethen).

    Returns ``E, E2, Qh, f1, f2, f3`` per mode.
    """
    L = np.asarray(L, dtype=complex)
    x = L * dt
    # full circle: L is complex (rotation), so no half-contour real-part shortcut
    r = np.exp(2j * np.pi * (np.arange(1, npoles + 1) - 0.5) / npoles)
    z = x[:, None] + r[None, :]
    E = np.exp(x)
    E2 = np.exp(0.5 * x)
    Qh = dt * np.mean((np.exp(0.5 * z) - 1) / z, axis=1)
    ez = np.exp(z)
    z3 = z**3
    f1 = dt * np.mean((-4 - z + ez * (4 - 3 * z + z * z)) / z3, axis=1)
    f2 = dt * np.mean((2 + z + ez * (z - 2)) / z3, axis=1)
    f3 = dt * np.mean((-4 - 3 * z - z * z + ez * (4 - z)) / z3, axis=1)
    # the contour averages are exact for real x; keep them exactly real then
    real = np.abs(x.imag) == 0
    for arr in (Qh, f1, f2, f3):
        arr[real] = arr[real].real
    return E, E2, Qh, f1, f2, f3


def etd4_numpy(f, nsteps, coefs, a_eps, shift):
    E, E2, Qh, f1, f2, f3 = coefs
    f = f.copy()
    n0 = np.abs(f).max()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(nsteps):
            Nu = stencil_numpy(f, a_eps * f[1] + shift)
            a = E2 * f + Qh * Nu
            Na = stencil_numpy(a, a_eps * a[1] + shift)
            b = E2 * f + Qh * Na
            Nb = stencil_numpy(b, a_eps * b[1] + shift)
            c = E2 * a + Qh * (2 * Nb - Nu)
            Nc = stencil_numpy(c, a_eps * c[1] + shift)
            f = E * f + f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc
            f[0] = f[0].real
    ok = bool(np.isfinite(f).all() and np.abs(f).max() < 1e3 * n0)
    return f, ok


@njit
def etd4_numba(f, nsteps, coefs, a_eps, shift):
    E, E2, Qh, f1, f2, f3 = coefs
    f = f.copy()
    n0 = np.abs(f).max()
    for _ in range(nsteps):
        Nu = stencil_numba(f, a_eps * f[1] + shift)
        a = E2 * f + Qh * Nu
        Na = stencil_numba(a, a_eps * a[1] + shift)
        b = E2 * f + Qh * Na
        Nb = stencil_numba(b, a_eps * b[1] + shift)
        c = E2 * a + Qh * (2 * Nb - Nu)
        Nc = stencil_numba(c, a_eps * c[1] + shift)
        f = E * f + f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc
        f[0] = f[0].real + 0j
    ok = True
    for m in range(f.size):
        v = f[m]
        if not (np.isfinite(v.real) and np.isfinite(v.imag)) or abs(v) > 1e3 * n0:
            ok = False
    return f, ok


etd4 = etd4_numba if USE_NUMBA else etd4_numpy
