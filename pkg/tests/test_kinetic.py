import numpy as np
import pytest

from doi_el.equilibria import ModelParams, eta_of_rho, s2
from doi_el.errors import (AmbiguousKernelError, DegenerateMomentError, IntegratorError,
                           InvalidParameterError, PositivityError)
from doi_el.kinetic import (OrientationState, SimConfig, adjoint_linearized_matrix, coeff_norm,
                            collision, dQ_dt, equilibrium_state, free_energy, gci_residual,
                            kernel_analysis, kinetic_stress, moments, numerical_kernel,
                            off_equilibrium_probe, potential_moment, shear_gradient, simulate,
                            transport)

ALPHA = 8.0


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_state_invariants():
    with pytest.raises(InvalidParameterError):
        OrientationState(np.array([-1.0 + 0j, 0.1]))
    with pytest.raises(InvalidParameterError):
        OrientationState(np.array([1.0 + 0.5j, 0.1]))
    with pytest.raises(InvalidParameterError):
        OrientationState(np.array([1.0 + 0j, np.nan]))
    st = OrientationState.gibbs(1.3, 4.0, 0.3, 32)
    phi, f = st.values(256)
    # head-tail symmetry is structural: f(phi + pi) = f(phi) with a pi-periodic grid
    assert st.mass == pytest.approx(1.3) and st.positivity_ok()
    assert np.mean(f) == pytest.approx(1.3, rel=1e-14)


def test_collision_alpha_zero_is_laplacian():
    st = OrientationState.random(_rng(), 16)
    r = collision(st, 0.0)
    m = np.arange(17)
    assert np.abs(r - (-4.0 * m**2) * st.coeffs).max() < 1e-13


def test_collision_mass_and_equilibrium():
    rng = _rng(1)
    for _ in range(100):
        st = OrientationState.random(rng, 16, rho=rng.uniform(0.5, 2.0))
        assert collision(st, ALPHA)[0] == 0.0
        assert transport(st, shear_gradient(1.3), 0.8)[0] == 0.0
    eq = equilibrium_state(1.0, ALPHA, 0.4, K=64)
    assert coeff_norm(collision(eq, ALPHA, extended=True)) < 1e-10 * coeff_norm(eq.coeffs)


def test_transport_uniform_shear():
    st = OrientationState.uniform(1.7, 8)
    r = transport(st, shear_gradient(2.0), 0.6)
    # first even harmonic grows at Lambda * shear_rate / 2 per unit mass
    assert abs(r[1]) == pytest.approx(0.6 * 2.0 / 2 * 1.7, rel=1e-14)
    assert np.abs(r[2:]).max() == 0.0


def test_transport_lambda_zero_pure_strain():
    st = OrientationState.random(_rng(2), 8)
    assert np.abs(transport(st, np.diag([1.0, -1.0]), 0.0)).max() == 0.0


def test_transport_requires_trace_free():
    with pytest.raises(InvalidParameterError):
        transport(OrientationState.uniform(1.0, 4), np.eye(2), 1.0)


def test_pure_rotation_is_rigid():
    w = 0.7
    st = OrientationState.random(_rng(3), 12, amplitude=0.5)
    cfg = SimConfig(ModelParams(n=2, alpha=ALPHA), eps=1e14, grad_u=[[0, -w], [w, 0]], dt=1e-2)
    tr = simulate(st, cfg, [0.5])
    m = np.arange(13)
    assert np.abs(tr.coeffs[0] - st.coeffs * np.exp(2j * m * w * 0.5)).max() < 1e-10


def test_moments():
    with pytest.raises(DegenerateMomentError):
        moments(OrientationState.uniform(1.0, 8), ALPHA).Sigma
    p = ModelParams(n=2, alpha=ALPHA)
    rho = 1.2
    eta = eta_of_rho(rho, p)
    mo = moments(OrientationState.gibbs(rho, eta, 0.35, 64), ALPHA)
    assert mo.eta == pytest.approx(eta, rel=1e-10)
    assert abs(mo.Omega @ np.array([np.cos(0.35), np.sin(0.35)])) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(mo.Sigma).max() == pytest.approx(0.5, rel=1e-12)
    off = moments(OrientationState.gibbs(rho, 2.0, 0.0, 64), ALPHA)
    assert off.eta == pytest.approx(ALPHA * rho * s2(2.0, 2), rel=1e-10)
    assert abs(off.eta - 2.0) > 1e-3


def test_free_energy():
    rho = 1.4
    A, D = free_energy(OrientationState.uniform(rho, 8), ALPHA)
    assert A == pytest.approx(rho * np.log(rho) - rho + ALPHA * rho**2 / 4, rel=1e-14)
    assert D < 1e-24
    assert free_energy(equilibrium_state(1.0, ALPHA, K=64), ALPHA)[1] < 1e-12
    bad = OrientationState(np.array([1.0, 0.9, 0.0]))
    with pytest.raises(PositivityError):
        free_energy(bad, ALPHA)


def test_relaxation_decreases_free_energy():
    st = OrientationState.random(_rng(4), 32, amplitude=0.6)
    cfg = SimConfig(ModelParams(n=2, alpha=ALPHA), eps=1.0, tmax=2.0)
    ts = np.linspace(0, 2, 801)
    tr = simulate(st, cfg, ts)
    A, D = np.array([free_energy(tr.state(i), ALPHA) for i in range(len(tr))]).T
    assert np.all(np.diff(A) <= 1e-10)
    # A(t+2h) - A(t) = -int D (eps = 1), Simpson on each pair of intervals
    h = ts[1] - ts[0]
    simpson = h / 3 * (D[:-2:2] + 4 * D[1:-1:2] + D[2::2])
    assert np.abs(A[2::2] - A[:-2:2] + simpson).max() < 1e-4 * simpson.max()
    assert np.abs(tr.coeffs[:, 0].real - st.mass).max() < 1e-12 * st.mass


def test_relaxation_reaches_branch():
    rho = 1.0
    st = OrientationState.random(_rng(5), 32, rho=rho, amplitude=0.5)
    tr = simulate(st, SimConfig(ModelParams(n=2, alpha=ALPHA), eps=1.0, tmax=30.0), [30.0])
    end = tr.state(0)
    assert coeff_norm(collision(end, ALPHA, extended=True)) < 1e-8
    assert moments(end, ALPHA).eta == pytest.approx(eta_of_rho(rho, ModelParams(n=2, alpha=ALPHA)), abs=1e-6)


def test_resolution_doubling_terminal_moments():
    st = OrientationState.random(_rng(6), 24, amplitude=0.5)
    cfg = SimConfig(ModelParams(n=2, alpha=ALPHA), eps=1.0, grad_u=shear_gradient(0.5), tmax=1.0)
    a = simulate(st, cfg, [1.0]).coeffs[0]
    b = simulate(st.resized(48), cfg, [1.0]).coeffs[0]
    assert np.abs(a[:2] - b[:2]).max() < 1e-9


@pytest.mark.parametrize("integrator", ["etd2", "bdf"])
def test_integrators_agree(integrator):
    st = OrientationState.random(_rng(7), 16, amplitude=0.4)
    base = dict(params=ModelParams(n=2, alpha=ALPHA), eps=0.1, grad_u=shear_gradient(1.0), tmax=0.5)
    ref = simulate(st, SimConfig(**base, dt=1e-4), [0.5]).coeffs[0]
    other = simulate(st, SimConfig(**base, dt=1e-4, integrator=integrator), [0.5]).coeffs[0]
    # etd2 is second order in dt/eps, so its tolerance is looser
    assert np.abs(ref - other).max() < (1e-5 if integrator == "etd2" else 1e-6)


def test_simconfig_validation():
    with pytest.raises(InvalidParameterError):
        SimConfig(ModelParams(n=3))
    with pytest.raises(InvalidParameterError):
        SimConfig(eps=0.0)
    with pytest.raises(InvalidParameterError):
        SimConfig(grad_u=np.eye(2))
    with pytest.raises(InvalidParameterError):
        SimConfig(integrator="euler")
    with pytest.raises(InvalidParameterError):
        simulate(OrientationState.uniform(1.0, 4), SimConfig(), [0.5, 0.2])


def test_blow_up_reported():
    st = OrientationState.random(_rng(8), 16, amplitude=0.5)
    cfg = SimConfig(ModelParams(n=2, alpha=200.0), eps=1e-3, dt=1.0, tmax=5.0)
    with pytest.raises(IntegratorError):
        simulate(st, cfg, [5.0])


def test_gci_residual_random_states():
    rng = _rng(9)
    for _ in range(20):
        st = OrientationState.random(rng, 16, amplitude=0.8)
        r = gci_residual(st, ALPHA)
        assert r < 1e-8
        wrong = gci_residual(st, ALPHA, eta=moments(st, ALPHA).eta * 1.5 + 1.0)
        assert wrong > 1e3 * max(r, 1e-16)
    eq = equilibrium_state(1.0, ALPHA, K=64)
    assert gci_residual(eq, ALPHA, normalization="diffusion") < 1e-12
    with pytest.raises(DegenerateMomentError):
        gci_residual(OrientationState.uniform(1.0, 8), ALPHA)


def test_adjoint_kernel():
    eq = equilibrium_state(1.0, ALPHA, 0.2, K=64)
    adj = adjoint_linearized_matrix(eq, ALPHA)
    one = np.zeros(adj.shape[0])
    one[0] = 1.0
    assert np.linalg.norm(adj @ one) < 1e-10
    rep = kernel_analysis(eq, ALPHA)
    assert rep.dimension == 2 and rep.angle < 1e-6 and rep.gap > 1e3
    probe = off_equilibrium_probe(1.0, 3.0, ALPHA, K=32)
    assert np.isfinite(probe["subspace_angle"])


def test_ambiguous_kernel():
    with pytest.raises(AmbiguousKernelError) as exc:
        numerical_kernel(np.diag(np.logspace(0, -12, 25)))
    assert exc.value.singular_values.size == 25


def test_stress():
    rng = _rng(10)
    for _ in range(10):
        M = potential_moment(OrientationState.random(rng, 16), ALPHA)
        assert abs(M[0, 1] - M[1, 0]) < 1e-12
    eq = equilibrium_state(1.2, ALPHA, 0.3, K=48)
    zero = np.zeros((2, 2))
    s1, s2_ = kinetic_stress(eq, zero, 0.8, ALPHA, 1e-3, dQ_dt(eq, ALPHA, 1e-3, zero, 0.8))
    assert np.abs(s1 - s2_).max() < 1e-10
    assert np.abs(s2_ - s2_.T).max() < 1e-12


def test_stress_formulas_agree_with_exact_rate():
    st = OrientationState.random(_rng(11), 32, amplitude=0.3)
    eps, L = 1e-2, 0.7
    G = shear_gradient(1.0)
    s1, s2_ = kinetic_stress(st, G, L, ALPHA, eps, dQ_dt(st, ALPHA, eps, G, L))
    assert np.abs(s1 - s2_).max() < 1e-10 * max(1.0, np.abs(s1).max())
