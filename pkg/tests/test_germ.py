import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tcdirac.classical import PhasePoint, integrate_trajectory, variational_matrices
from tcdirac.constants import Constants, HamiltonianSpec
from tcdirac.emfield import make_field
from tcdirac.errors import InvalidGermError
from tcdirac.germ import (GermInit, GermState, dnu_inverse, germ_invariants, integrate_germ, q_matrix,
                          riccati_residual, validate_germ_init)
from tcdirac.verify import REFERENCE_FIELDS, REFERENCE_Z0, reference_spec

I3 = np.eye(3)


def test_validate_examples():
    v = validate_germ_init(GermInit(1j * I3, I3))
    assert v.ok
    np.testing.assert_allclose(v.im_b, [1, 1, 1])
    v = validate_germ_init(GermInit(2j * I3, I3))
    assert v.ok
    np.testing.assert_allclose(v.im_b, [2, 2, 2])
    v = validate_germ_init(GermInit(I3, I3))
    assert not v.ok
    with pytest.raises(InvalidGermError):
        validate_germ_init(GermInit(I3, I3), strict=True)


def test_validate_rejects_non_lagrangian():
    B = 1j * I3 + np.array([[0, 0.3, 0], [0, 0, 0], [0, 0, 0]])
    assert not validate_germ_init(GermInit(B, I3)).ok


def test_free_particle_closed_form():
    p0 = np.array([0.4, 0.1, -0.2])
    traj = integrate_trajectory(reference_spec("zero"), PhasePoint(p0, [0, 0, 0]), (0.0, 3.0), n_samples=31)
    germ = integrate_germ(traj)
    lpp = variational_matrices(traj.spec, traj.z_at(0.0)).pp
    B0, C0 = 1j * I3, I3
    for i, t in enumerate(germ.t):
        np.testing.assert_allclose(germ.B[i], B0, atol=1e-10)
        np.testing.assert_allclose(germ.C[i], C0 + t * lpp @ B0, atol=1e-10)
        np.testing.assert_allclose(germ.state(i).Q, 1j * np.linalg.inv(I3 + 1j * t * lpp), atol=1e-10)


def test_harmonic_oscillator_germ():
    # e k = 1 makes the potential confining for the default negative charge
    spec = HamiltonianSpec(make_field("harmonic_scalar", (-1.0,)), Constants(), "nonrelativistic")
    traj = integrate_trajectory(spec, PhasePoint([0, 0, 0], [0, 0, 0]), (0.0, 2 * math.pi), n_samples=65)
    germ = integrate_germ(traj)
    for i, t in enumerate(germ.t):
        np.testing.assert_allclose(germ.B[i], 1j * cmath.exp(1j * t) * I3, atol=1e-10)
        np.testing.assert_allclose(germ.C[i], cmath.exp(1j * t) * I3, atol=1e-10)
    # det C = e^{3it}; the tracked root follows e^{3it/2} past the branch cut
    st_pi = germ.at(math.pi)
    assert st_pi.sqrt_detC == pytest.approx(cmath.exp(1.5j * math.pi), abs=1e-8)
    assert germ.at(2 * math.pi).sqrt_detC == pytest.approx(cmath.exp(3j * math.pi), abs=1e-8)


def test_q_examples():
    st0 = GermState(0.0, 1j * I3, I3, 1.0, np.ones(3))
    np.testing.assert_allclose(q_matrix(st0), 1j * I3)


def test_invariants_at_start():
    st0 = GermState(0.0, 2j * I3, I3, 1.0, 2 * np.ones(3))
    lag, N = germ_invariants(st0)
    assert lag == 0.0
    np.testing.assert_allclose(N, np.diag([2, 2, 2]))


def test_invariants_conserved_uniform_magnetic():
    traj = integrate_trajectory(reference_spec("uniform_magnetic"), REFERENCE_Z0, (0.0, 10.0), n_samples=501)
    germ = integrate_germ(traj)
    lag, N = germ_invariants(germ.state(len(germ) - 1))
    assert lag <= 1e-9
    np.testing.assert_allclose(N, I3, atol=1e-9)


def test_perturbed_b_reports_residual():
    B = 1j * I3
    B[0, 1] = 0.2
    lag, N = germ_invariants(GermState(0.0, B, I3, 1.0, np.ones(3)))
    assert lag > 0.1
    assert np.abs(N - I3).max() > 0.05


def test_dnu_inverse_examples():
    np.testing.assert_allclose(dnu_inverse((0, 0, 0), np.ones(3)), I3)
    np.testing.assert_allclose(dnu_inverse((1, 0, 2), np.ones(3)), np.diag([3, 1, 5]))
    np.testing.assert_allclose(dnu_inverse((0, 0, 0), 2 * np.ones(3)), 0.5 * I3)


@pytest.fixture(scope="module", params=list(REFERENCE_FIELDS))
def germ_run(request):
    traj = integrate_trajectory(reference_spec(request.param), REFERENCE_Z0, (0.0, 10.0), n_samples=1001)
    return integrate_germ(traj)


def test_conservation_every_field(germ_run):
    lag, drift = germ_run.invariant_drift()
    assert lag <= 1e-9
    assert drift <= 1e-9
    assert np.min(np.abs(germ_run.detC)) > 1e-8 * abs(germ_run.detC[0])


def test_q_symmetric_positive(germ_run):
    for i in range(0, len(germ_run), 50):
        q_matrix(germ_run.state(i))


def test_riccati(germ_run):
    assert riccati_residual(germ_run) <= 1e-6


def test_branch_is_continuous(germ_run):
    roots = np.array([germ_run.state(i).sqrt_detC for i in range(len(germ_run))])
    np.testing.assert_allclose(roots ** 2, germ_run.detC, rtol=1e-10)
    assert np.abs(np.diff(roots)).max() < 0.1 * np.abs(roots).min()


def _random_germ(a, s):
    """Valid germ B = (S + i I) C from a real symmetric S and invertible real C."""
    C = a + 3 * I3
    S = s + s.T
    return GermInit((S + 1j * I3) @ C, C)


@given(a=arrays(np.float64, (3, 3), elements=st.floats(-1, 1)), s=arrays(np.float64, (3, 3), elements=st.floats(-1, 1)))
def test_random_valid_germ_has_symmetric_q(a, s):
    init = _random_germ(a, s)
    C = init.C0
    assert validate_germ_init(init, tol=1e-10).lagrangian_residual <= 1e-10 * max(1, np.linalg.norm(init.B0) *
                                                                                   np.linalg.norm(C))
    st0 = GermState(0.0, init.B0, C, 1.0, np.ones(3))
    Q = q_matrix(st0)
    np.testing.assert_allclose(Q, Q.T, atol=1e-10)
    assert np.linalg.eigvalsh(Q.imag).min() > 0
