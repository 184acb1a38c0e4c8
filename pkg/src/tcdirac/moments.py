"""Second moments, spin back-reaction and the closed system for averages.

The packed real state used by the integrator is

    y = (p[3], x[3], upper triangle of Delta2 [21], Re eta[3], Im eta[3]),

33 numbers in total.  ``Delta2`` is the 6x6 matrix of centred second
moments in (p, x) ordering, [[s_pp, s_px], [s_xp, s_xx]].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import PhaseTrajectory, kinetics, lambda_gradient, symplectic_unit, variational_matrices
from .constants import Constants, HamiltonianSpec
from .emfield import FieldDerivatives, eval_derivatives
from .errors import DomainError, NumericalError
from .germ import GERM_TOL, GermState, GermTrajectory, _fd_derivative
from .odeint import solve
from .spin import KinematicPoint, d0_vector

J6 = symplectic_unit()
_IU = np.triu_indices(6)
K_AXIS = np.array([0.0, 0.0, 1.0])


# ---------------------------------------------------------------- D_x, D_p

@dataclass(frozen=True)
class SpinCouplingMatrices:
    """Spin-orbit coupling data; <sigma, D0 + Dx dx + Dp dp> is the spin term."""

    D0: np.ndarray
    Dx: np.ndarray
    Dp: np.ndarray
    prefactor: bool = True


def _dp_apply(k: KinematicPoint, gt: float, c: float, w):
    """D_p w without the overall prefactor."""
    b, g = k.beta, 1 / k.gamma
    d = 1 + g
    gam = k.gamma
    v = b * (b @ w) / d - w
    eb = b * (b @ k.E) / d - k.E
    hb = b * (b @ k.H) / d + g * k.H
    ebg = b * (b @ k.E) / d + g * k.E
    ce = c / k.eps
    return (-ce * np.cross(eb, v)
            - ce * hb * (b @ w)
            - ce * gt * gam * (b @ k.H) * v
            - gt * gam * ce * np.cross(ebg, v))


def dxp_matrices(k: KinematicPoint, fd: FieldDerivatives, constants: Constants,
                 g: float | None = None, prefactor: bool = True) -> SpinCouplingMatrices:
    """Coefficient matrices of dp and dx in the linear spin term.

    ``fd`` must carry first derivatives of A, E and H at x(t).  With
    ``prefactor`` the blocks are multiplied by mu0/gamma, the same factor
    that multiplies D0, so all three terms have the dimension of energy.
    """
    if fd.order < 1 or len(fd.e) < 2 or len(fd.h) < 2:
        raise DomainError("dxp_matrices needs first derivatives of the fields")
    gt = constants.g_tilde if g is None else 0.5 * (g - 2.0)
    c, e = constants.c, constants.e
    b, gi = k.beta, 1 / k.gamma
    d = 1 + gi
    eye = np.eye(3)
    Dp = np.column_stack([_dp_apply(k, gt, c, eye[j]) for j in range(3)])
    jac_a, jac_e, jac_h = fd.a[1], fd.e[1], fd.h[1]
    Dx = Dp @ (-(e / c) * jac_a)
    for j in range(3):
        dH, dE = jac_h[:, j], jac_e[:, j]
        Dx[:, j] += -(b * (b @ dH) / d + gi * dH) + gt * k.gamma * (np.cross(b, dE) - dH + b * (b @ dH) / d)
    D0 = d0_vector(k, constants, g)
    if prefactor:
        f = constants.mu0 / k.gamma
        Dp, Dx = f * Dp, f * Dx
    return SpinCouplingMatrices(D0, Dx, Dp, prefactor)


# ---------------------------------------------------------------- initial data

def init_eta(zeta: int, zeta_p: int, ell) -> np.ndarray:
    """Initial polarization for the (zeta, zeta') pair of spin states."""
    if zeta not in (1, -1) or zeta_p not in (1, -1):
        raise DomainError("zeta and zeta' must be +1 or -1")
    ell = np.asarray(ell, dtype=float)
    n = np.linalg.norm(ell)
    if not np.isfinite(n) or abs(n - 1) > 1e-12:
        raise DomainError("spin axis must be a unit vector")
    same = (1 + zeta * zeta_p) / 2
    flip = (1 - zeta * zeta_p) / 2
    out = same * zeta * ell.astype(complex)
    if flip:
        s = 1 - float(ell @ K_AXIS) ** 2
        if s <= 1e-14:
            raise DomainError("zeta != zeta' needs a spin axis not parallel to (0, 0, 1)")
        out = out + flip * (np.cross(ell, np.cross(K_AXIS, ell)) + 1j * zeta * np.cross(ell, K_AXIS)) / np.sqrt(s)
    return out


def _dinv(nu, im_b):
    return (2 * np.asarray(nu, dtype=float) + 1) / np.asarray(im_b, dtype=float)


def sigma_from_germ(germ: GermState, nu=(0, 0, 0), hbar: float = 0.01):
    """(s_xx, s_pp, s_px) from the germ columns; all real 3x3."""
    D = np.diag(_dinv(nu, germ.im_b))
    B, C = germ.B, germ.C

    def blk(X, Y):
        m = (hbar / 4) * (X @ D @ Y.conj().T + X.conj() @ D @ Y.T)
        if np.abs(m.imag).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise NumericalError("correlation block has an imaginary part")
        return m.real

    return blk(C, C), blk(B, B), blk(B, C)


def delta2_from_germ(germ: GermState, nu=(0, 0, 0), hbar: float = 0.01) -> np.ndarray:
    sxx, spp, spx = sigma_from_germ(germ, nu, hbar)
    return np.block([[spp, spx], [spx.T, sxx]])


def default_delta2(hbar: float) -> np.ndarray:
    """Moments of the default isotropic packet: (hbar/2) I."""
    return 0.5 * hbar * np.eye(6)


# ---------------------------------------------------------------- right-hand side

@dataclass
class MomentState:
    z: np.ndarray
    delta2: np.ndarray
    eta: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([self.z, self.delta2[_IU], self.eta.real, self.eta.imag])

    @classmethod
    def unpack(cls, y) -> "MomentState":
        y = np.asarray(y)
        d = np.zeros((6, 6))
        d[_IU] = y[6:27]
        d = d + np.triu(d, 1).T
        return cls(y[:6].copy(), d, y[27:30] + 1j * y[30:33])


def _kinematic_point(spec: HamiltonianSpec, z, t, fd: FieldDerivatives) -> KinematicPoint:
    kin = kinetics(spec, z, t, fd.phi[0], fd.a[0])
    if spec.relativistic and not np.isfinite(kin.gamma):
        raise DomainError(f"|beta| >= 1 reached at t={t:.6g}")
    return KinematicPoint(kin.beta, kin.gamma, kin.eps, kin.P, fd.e[0], fd.h[0], float(fd.phi[0]))


def quantum_force(spec: HamiltonianSpec, z, t, delta2, h: float = 1e-4) -> np.ndarray:
    """Gradient of f(z) = tr(Delta2 lambda''(z)) / 2 by central differences
    of the analytic Hessian."""
    z = np.asarray(z, dtype=float)
    out = np.zeros(6)
    for i in range(6):
        hi = h * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += hi
        zm[i] -= hi
        Hp = variational_matrices(spec, zp, t).hessian()
        Hm = variational_matrices(spec, zm, t).hessian()
        out[i] = 0.5 * np.sum(delta2 * (Hp - Hm)) / (2 * hi)
    return out


def moments_rhs(state: MomentState, t: float, spec: HamiltonianSpec, g: float | None = None,
                coupling: bool = True, prefactor: bool = True) -> MomentState:
    """Time derivatives of (z, Delta2, eta).

    z' = J dlambda + J grad(tr(Delta2 lambda'')/2) + J (Dp^T Re eta, Dx^T Re eta)
    Delta2' = J lambda'' Delta2 - Delta2 lambda'' J
    eta' = (2/hbar) D0 x eta
    """
    const = spec.constants
    z = state.z
    fd = eval_derivatives(spec.field, z[3:], t, order=2)
    lam_p, lam_x = lambda_gradient(spec, z, t, fd)
    grad = np.concatenate([lam_p, lam_x])
    hess = variational_matrices(spec, z, t, fd).hessian()
    if np.any(state.delta2):
        grad = grad + quantum_force(spec, z, t, state.delta2)
    k = _kinematic_point(spec, z, t, fd)
    cm = dxp_matrices(k, fd, const, g, prefactor)
    if coupling:
        er = state.eta.real
        grad = grad + np.concatenate([cm.Dp.T @ er, cm.Dx.T @ er])
    zdot = J6 @ grad
    M = J6 @ hess
    d2 = M @ state.delta2
    d2 = d2 + d2.T  # Delta2 lambda'' J = -(J lambda'' Delta2)^T
    etadot = (2 / const.hbar) * np.cross(cm.D0, state.eta)
    return MomentState(zdot, d2, etadot)


class MomentTrajectory:
    """Sampled solution of the moment system.

    Attributes: t (n,), z (n, 6), delta2 (n, 6, 6), eta (n, 3) complex.
    """

    def __init__(self, spec, t, y, sol):
        self.spec = spec
        self.t = np.asarray(t)
        states = [MomentState.unpack(col) for col in y.T]
        self.z = np.array([s.z for s in states])
        self.delta2 = np.array([s.delta2 for s in states])
        self.eta = np.array([s.eta for s in states])
        self._sol = sol

    def at(self, t) -> MomentState:
        return MomentState.unpack(self._sol(t))

    def symmetry_defect(self) -> float:
        return float(np.abs(self.delta2 - np.transpose(self.delta2, (0, 2, 1))).max())

    TABLE_HEADER = (("t", "p1", "p2", "p3", "x1", "x2", "x3")
                    + tuple(f"d2_{i + 1}{j + 1}" for i, j in zip(*_IU))
                    + ("eta1_re", "eta2_re", "eta3_re", "eta1_im", "eta2_im", "eta3_im"))

    def table(self) -> np.ndarray:
        return np.column_stack([self.t, self.z, self.delta2[:, _IU[0], _IU[1]],
                                self.eta.real, self.eta.imag])


def integrate_moments(spec: HamiltonianSpec, z0, delta2_0=None, spin=(1, 1, (0, 0, 1)), t_span=(0.0, 1.0),
                      tol=None, t_eval=None, g: float | None = None, coupling: bool = True,
                      prefactor: bool = True) -> MomentTrajectory:
    """Integrate the closed system for averages, moments and polarization.

    ``spin`` is either (zeta, zeta', ell) or an explicit complex 3-vector eta0.
    ``delta2_0`` defaults to the isotropic packet (hbar/2) I.
    """
    z0 = np.asarray(z0, dtype=float).reshape(6)
    if delta2_0 is None:
        delta2_0 = default_delta2(spec.constants.hbar)
    delta2_0 = np.asarray(delta2_0, dtype=float)
    if delta2_0.shape != (6, 6) or np.abs(delta2_0 - delta2_0.T).max() > 1e-12:
        raise DomainError("Delta2 must be a symmetric 6x6 matrix")
    if isinstance(spin, tuple) and len(spin) == 3 and np.ndim(spin[0]) == 0 and spin[0] in (1, -1) \
            and np.ndim(spin[2]) == 1:
        eta0 = init_eta(int(spin[0]), int(spin[1]), spin[2])
    else:
        eta0 = np.asarray(spin, dtype=complex).reshape(3)
    if isinstance(t_span, (int, float)):
        t_span = (0.0, float(t_span))
    y0 = MomentState(z0, delta2_0, eta0).pack()

    def rhs(t, y):
        return moments_rhs(MomentState.unpack(y), t, spec, g, coupling, prefactor).pack()

    res = solve(rhs, t_span, y0, tol if tol is not None else GERM_TOL, t_eval=t_eval, what="moments")
    return MomentTrajectory(spec, res.t, res.y, res.sol)


# ---------------------------------------------------------------- transport forms

def _hess_along(traj: PhaseTrajectory, t):
    return variational_matrices(traj.spec, traj.z_at(t), t).hessian()


def integrate_delta2(traj: PhaseTrajectory, delta2_0, tol=None, t_eval=None):
    """Direct integration of Delta2' = J l'' Delta2 - Delta2 l'' J along ``traj``.

    Returns (t, Delta2 samples of shape (n, 6, 6)).
    """
    delta2_0 = np.asarray(delta2_0, dtype=float)

    def rhs(t, y):
        d = np.zeros((6, 6))
        d[_IU] = y
        d = d + np.triu(d, 1).T
        m = J6 @ _hess_along(traj, t) @ d
        return (m + m.T)[_IU]

    t_eval = traj.t if t_eval is None else t_eval
    res = solve(rhs, traj.t_span, delta2_0[_IU], tol if tol is not None else GERM_TOL, t_eval=t_eval, what="Delta2")
    out = np.zeros((len(res.t), 6, 6))
    out[:, _IU[0], _IU[1]] = res.y.T
    out = out + np.transpose(np.triu(np.ones((6, 6)), 1)[None] * out, (0, 2, 1))
    return res.t, out


def amatrix_from_germ(B0, C0) -> np.ndarray:
    B0, C0 = np.asarray(B0, dtype=complex), np.asarray(C0, dtype=complex)
    return np.block([[B0, B0.conj()], [C0, C0.conj()]])


def amatrix_form(traj: PhaseTrajectory, A0, delta2_0, tol=None, t_eval=None):
    """Transport A' = J l'' A and return (t, A Delta2_0 A^H).

    With A0 = [[B0, B0*], [C0, C0*]] and Delta2_0 = (hbar/4) diag(D^-1, D^-1)
    this reproduces the germ correlation matrices.
    """
    A0 = np.asarray(A0, dtype=complex)
    d0 = np.asarray(delta2_0, dtype=complex)

    def rhs(t, y):
        A = (y[:36] + 1j * y[36:]).reshape(6, 6)
        dA = J6 @ _hess_along(traj, t) @ A
        return np.concatenate([dA.real.ravel(), dA.imag.ravel()])

    t_eval = traj.t if t_eval is None else t_eval
    y0 = np.concatenate([A0.real.ravel(), A0.imag.ravel()])
    res = solve(rhs, traj.t_span, y0, tol if tol is not None else GERM_TOL, t_eval=t_eval, what="A matrix")
    A = (res.y[:36] + 1j * res.y[36:]).T.reshape(-1, 6, 6)
    d2 = A @ d0 @ np.conj(np.transpose(A, (0, 2, 1)))
    if np.abs(d2.imag).max() > 1e-10 * max(1.0, np.abs(d2).max()):
        raise NumericalError("transported Delta2 acquired an imaginary part")
    return res.t, d2.real


def amatrix_delta2_0(germ_state: GermState, nu=(0, 0, 0), hbar: float = 0.01) -> np.ndarray:
    """(hbar/4) diag(D^-1, D^-1), the reference moments for the A-matrix form."""
    dv = _dinv(nu, germ_state.im_b)
    return (hbar / 4) * np.diag(np.concatenate([dv, dv]))


def delta2_ode_residual(germ: GermTrajectory, nu=(0, 0, 0), hbar: float = 0.01) -> float:
    """Max residual of the Delta2 equation for Delta2(t) assembled from the germ.

    The time derivative is a finite difference over the germ samples; the
    residual is relative to max |Delta2|.
    """
    traj = germ.traj
    d2 = np.array([delta2_from_germ(germ.state(i), nu, hbar) for i in range(len(germ))])
    idx, dd = _fd_derivative(d2, germ.t)
    worst = 0.0
    for i, d in zip(idx, dd):
        t = germ.t[i]
        m = J6 @ _hess_along(traj, t) @ d2[i]
        worst = max(worst, float(np.abs(d - (m + m.T)).max()))
    return worst / float(np.abs(d2).max())
