import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tcdirac.classical import (PhasePoint, hamilton_rhs, integrate_trajectory, kinetics, lambda_value,
                               symplectic_unit, variational_matrices)
from tcdirac.constants import Constants, HamiltonianSpec
from tcdirac.emfield import make_field
from tcdirac.errors import ConfigurationError, DomainError
from tcdirac.verify import REFERENCE_FIELDS

KINDS = list(REFERENCE_FIELDS)


def spec_for(kind, mode="relativistic_plus", params=None, **const):
    return HamiltonianSpec(make_field(kind, REFERENCE_FIELDS[kind] if params is None else params),
                           Constants(**const), mode)


def test_lambda_examples():
    origin = PhasePoint([0, 0, 0], [0, 0, 0])
    assert lambda_value(spec_for("zero"), origin) == pytest.approx(1.0)
    assert lambda_value(spec_for("zero", "relativistic_minus"), origin) == pytest.approx(-1.0)
    assert lambda_value(spec_for("zero"), PhasePoint([3, 0, 0], [0, 0, 0])) == pytest.approx(math.sqrt(10))


def test_nonrelativistic_lambda():
    s = spec_for("harmonic_scalar", "nonrelativistic", params=(2.0,))
    # P^2/2 + e Phi with e = -1, Phi = |x|^2
    assert lambda_value(s, PhasePoint([1, 1, 0], [1, 0, 0])) == pytest.approx(1.0 - 1.0)


def test_rhs_examples():
    pdot, xdot = hamilton_rhs(spec_for("zero"), PhasePoint([1, 0, 0], [0, 0, 0]))
    np.testing.assert_allclose(pdot, 0)
    np.testing.assert_allclose(xdot, [1 / math.sqrt(2), 0, 0])
    k = 0.7
    x = np.array([0.3, -0.2, 0.5])
    s = spec_for("harmonic_scalar", params=(k,))
    pdot, xdot = hamilton_rhs(s, PhasePoint([0, 0, 0], x))
    np.testing.assert_allclose(xdot, 0, atol=1e-15)
    np.testing.assert_allclose(pdot, -s.constants.e * k * x)


def _fd_grad(spec, z, t, h=1e-6):
    g = np.zeros(6)
    for i in range(6):
        dz = np.zeros(6)
        dz[i] = h
        g[i] = (lambda_value(spec, z + dz, t) - lambda_value(spec, z - dz, t)) / (2 * h)
    return g


@pytest.mark.parametrize("kind", KINDS)
def test_rhs_matches_lambda_differences(kind):
    s = spec_for(kind)
    rng = np.random.default_rng(11)
    for _ in range(10):
        z, t = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-1, 1, 3)]), rng.uniform(0, 2)
        pdot, xdot = hamilton_rhs(s, z, t)
        rhs = np.concatenate([pdot, xdot])
        np.testing.assert_allclose(rhs, symplectic_unit() @ _fd_grad(s, z, t), rtol=1e-8, atol=1e-8)


def test_rest_frame_blocks():
    vm = variational_matrices(spec_for("zero"), PhasePoint([0, 0, 0], [0, 0, 0]))
    np.testing.assert_allclose(vm.pp, np.eye(3))
    np.testing.assert_allclose(vm.xx, 0)
    np.testing.assert_allclose(vm.px, 0)


def test_harmonic_xx_block():
    k = 1.7
    s = spec_for("harmonic_scalar", params=(k,))
    vm = variational_matrices(s, PhasePoint([0.2, 0.1, 0], [0.3, 0, 0.4]))
    np.testing.assert_allclose(vm.xx, s.constants.e * k * np.eye(3), atol=1e-14)


def _fd_hessian(spec, z, t, h=1e-4):
    lam = lambda zz: lambda_value(spec, zz, t)  # noqa: E731
    E = np.eye(6) * h
    out = np.zeros((6, 6))
    for i in range(6):
        out[i, i] = (lam(z + E[i]) - 2 * lam(z) + lam(z - E[i])) / h ** 2
        for j in range(i):
            out[i, j] = out[j, i] = (lam(z + E[i] + E[j]) - lam(z + E[i] - E[j])
                                     - lam(z - E[i] + E[j]) + lam(z - E[i] - E[j])) / (4 * h ** 2)
    return out


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("mode", ["relativistic_plus", "relativistic_minus", "nonrelativistic"])
def test_hessian_matches_second_differences(kind, mode):
    s = spec_for(kind, mode)
    rng = np.random.default_rng(5)
    for _ in range(4):
        z, t = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-1, 1, 3)]), rng.uniform(0, 2)
        H = variational_matrices(s, z, t).hessian()
        scale = max(1.0, np.abs(H).max())
        assert np.abs(H - _fd_hessian(s, z, t)).max() <= 1e-6 * scale


@given(p=arrays(np.float64, 3, elements=st.floats(-2, 2)), x=arrays(np.float64, 3, elements=st.floats(-2, 2)),
       kind=st.sampled_from(KINDS), t=st.floats(0, 3))
def test_variational_symmetry(p, x, kind, t):
    vm = variational_matrices(spec_for(kind), PhasePoint(p, x), t)
    np.testing.assert_allclose(vm.xx, vm.xx.T, atol=1e-12)
    np.testing.assert_allclose(vm.pp, vm.pp.T, atol=1e-12)
    np.testing.assert_allclose(vm.xp, vm.px.T, atol=1e-12)
    kin = kinetics(spec_for(kind), PhasePoint(p, x), t)
    np.testing.assert_allclose(vm.pp, (1 / kin.eps) * (np.eye(3) - np.outer(kin.beta, kin.beta)), atol=1e-12)


def test_free_line():
    p0 = np.array([0.6, -0.2, 0.3])
    traj = integrate_trajectory(spec_for("zero"), PhasePoint(p0, [0, 0, 0]), (0.0, 2.0), n_samples=21)
    eps = math.sqrt(p0 @ p0 + 1)
    np.testing.assert_allclose(traj.x[-1], 2 * p0 / eps, rtol=1e-9, atol=1e-12)
    assert traj.S0[0] == 0.0
    assert np.all(np.diff(traj.t) > 0)


def test_helix_frequency():
    H0 = 0.8
    s = spec_for("uniform_magnetic", params=(0, 0, H0))
    traj = integrate_trajectory(s, PhasePoint([0.5, 0, 0], [0, 0, 0]), (0.0, 20.0), n_samples=801)
    kin = [kinetics(s, np.concatenate([p, x]), t) for t, p, x in zip(traj.t, traj.p, traj.x)]
    P = np.array([k.P for k in kin])
    eps = np.array([k.eps for k in kin])
    assert np.ptp(np.linalg.norm(P, axis=1)) <= 1e-9
    assert np.ptp(eps) <= 1e-9
    ang = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
    omega = abs(np.polyfit(traj.t, ang, 1)[0])
    assert omega == pytest.approx(abs(s.constants.e) * H0 / eps[0], rel=1e-8)


def test_nonrelativistic_energy_conserved():
    s = spec_for("harmonic_scalar", "nonrelativistic", params=(-1.0,))
    traj = integrate_trajectory(s, PhasePoint([0.3, 0.1, 0], [0.5, 0, -0.2]), (0.0, 20 * math.pi), n_samples=1001)
    energy = [lambda_value(s, np.concatenate([p, x]), t) for t, p, x in zip(traj.t, traj.p, traj.x)]
    assert np.ptp(energy) <= 1e-9


@pytest.mark.parametrize("kind", ["crossed", "plane_wave", "custom_polynomial"])
def test_time_reversal(kind):
    s = spec_for(kind)
    z0 = np.array([0.2, 0.1, -0.1, 0.1, 0.0, 0.2])
    fwd = integrate_trajectory(s, z0, (0.0, 4.0))
    back = integrate_trajectory(s, fwd.z_at(4.0), (4.0, 0.0))
    assert np.abs(back.z_at(0.0) - z0).max() <= 100 * 1e-10


def test_domain_errors():
    with pytest.raises(DomainError):
        PhasePoint([np.nan, 0, 0], [0, 0, 0])
    with pytest.raises(DomainError):
        integrate_trajectory(spec_for("zero"), PhasePoint([0, 0, 0], [0, 0, 0]), (1.0, 1.0))
    with pytest.raises(ConfigurationError):
        HamiltonianSpec(make_field("zero"), Constants(), "tachyonic")
    with pytest.raises(ConfigurationError):
        Constants(hbar=0.0)


def test_negative_sheet_mirrors_positive():
    zp = PhasePoint([0.3, 0.0, 0.0], [0, 0, 0])
    plus = integrate_trajectory(spec_for("zero"), zp, (0.0, 1.0), n_samples=3)
    minus = integrate_trajectory(spec_for("zero", "relativistic_minus"), zp, (0.0, 1.0), n_samples=3)
    np.testing.assert_allclose(minus.x, -plus.x, atol=1e-12)
