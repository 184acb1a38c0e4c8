"""Classical Hamilton flow on one energy sheet and its linearization.

Phase points are ordered z = (p, x).  The symplectic unit is
``J = [[0, -I], [I, 0]]`` so that Hamilton's equations read z' = J dlambda/dz.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HamiltonianSpec
from .emfield import eval_derivatives, eval_potentials
from .errors import DomainError
from .odeint import Tolerances, solve


def symplectic_unit() -> np.ndarray:
    J = np.zeros((6, 6))
    J[:3, 3:] = -np.eye(3)
    J[3:, :3] = np.eye(3)
    return J


@dataclass(frozen=True)
class PhasePoint:
    p: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(3)
        x = np.asarray(self.x, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(x))):
            raise DomainError("phase point has non-finite components")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x", x)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.p, self.x])

    @classmethod
    def from_z(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        return cls(z[:3], z[3:6])


def _as_point(z) -> PhasePoint:
    return z if isinstance(z, PhasePoint) else PhasePoint.from_z(z)


@dataclass(frozen=True)
class Kinetics:
    """Kinetic momentum P = p - (e/c)A and the derived velocity data."""

    P: np.ndarray
    eps: float
    beta: np.ndarray
    gamma: float
    lam: float


def kinetics(spec: HamiltonianSpec, z, t: float, phi=None, a=None) -> Kinetics:
    """Kinetic quantities at a phase point.

    In the nonrelativistic mode ``eps`` is the rest energy plus P^2/2m and
    ``beta = P/(m c)``; ``gamma`` is then only meaningful for |beta| < 1.
    """
    z = _as_point(z)
    k = spec.constants
    if phi is None:
        phi, a = eval_potentials(spec.field, z.x, t)
    P = z.p - (k.e / k.c) * np.asarray(a)
    P2 = float(P @ P)
    if spec.relativistic:
        eps = float(np.sqrt(k.c ** 2 * P2 + k.m0 ** 2 * k.c ** 4))
        s = spec.sign
        beta = s * k.c * P / eps
        lam = k.e * float(phi) + s * eps
    else:
        eps = k.m0 * k.c ** 2 + 0.5 * P2 / k.m0
        beta = P / (k.m0 * k.c)
        lam = k.e * float(phi) + 0.5 * P2 / k.m0
    b2 = float(beta @ beta)
    gamma = 1.0 / np.sqrt(1.0 - b2) if b2 < 1.0 else np.inf
    return Kinetics(P, eps, beta, gamma, lam)


def lambda_value(spec: HamiltonianSpec, z, t: float = 0.0) -> float:
    """lambda = e Phi +/- sqrt(c^2 P^2 + m^2 c^4), or P^2/2m + e Phi."""
    return kinetics(spec, z, t).lam


def _lambda_pp(spec, kin):
    k = spec.constants
    if spec.relativistic:
        return spec.sign * (k.c ** 2 / kin.eps) * (np.eye(3) - np.outer(kin.beta, kin.beta))
    return np.eye(3) / k.m0


def lambda_gradient(spec: HamiltonianSpec, z, t: float = 0.0, fd=None):
    """(dlambda/dp, dlambda/dx), from analytic differentiation of lambda."""
    z = _as_point(z)
    k = spec.constants
    if fd is None:
        fd = eval_derivatives(spec.field, z.x, t, order=1)
    kin = kinetics(spec, z, t, fd.phi[0], fd.a[0])
    v = k.c * kin.beta  # dlambda/dp in every mode
    # d/dx_j of P_i is -(e/c) dA_i/dx_j
    lam_x = k.e * fd.phi[1] - (k.e / k.c) * (fd.a[1].T @ v)
    return v, lam_x


def hamilton_rhs(spec: HamiltonianSpec, z, t: float = 0.0, fd=None):
    """Returns (p', x') = (-dlambda/dx, dlambda/dp)."""
    lam_p, lam_x = lambda_gradient(spec, z, t, fd)
    return -lam_x, lam_p


@dataclass(frozen=True)
class VariationalMatrices:
    """Second-derivative blocks of lambda; ``xp[i, j] = d2 lambda/dx_i dp_j``."""

    xx: np.ndarray
    xp: np.ndarray
    px: np.ndarray
    pp: np.ndarray

    def hessian(self) -> np.ndarray:
        """6x6 Hessian in (p, x) ordering."""
        return np.block([[self.pp, self.px], [self.xp, self.xx]])


def variational_matrices(spec: HamiltonianSpec, z, t: float = 0.0, fd=None) -> VariationalMatrices:
    z = _as_point(z)
    k = spec.constants
    if fd is None:
        fd = eval_derivatives(spec.field, z.x, t, order=2)
    kin = kinetics(spec, z, t, fd.phi[0], fd.a[0])
    lpp = _lambda_pp(spec, kin)
    jac = fd.a[1]  # jac[i, j] = dA_i/dx_j
    v = k.c * kin.beta
    lpx = -(k.e / k.c) * lpp @ jac
    lxx = (k.e * fd.phi[2]
           - (k.e / k.c) * np.einsum("i,ijl->jl", v, fd.a[2])
           + (k.e / k.c) ** 2 * jac.T @ lpp @ jac)
    lxx = 0.5 * (lxx + lxx.T)
    return VariationalMatrices(xx=lxx, xp=lpx.T.copy(), px=lpx, pp=lpp)


def lambda_hessian(spec: HamiltonianSpec, z, t: float = 0.0, fd=None) -> np.ndarray:
    return variational_matrices(spec, z, t, fd).hessian()


class PhaseTrajectory:
    """Sampled classical solution with dense interpolation.

    Attributes
    ----------
    t : (n,) sample times
    p, x : (n, 3)
    S0 : (n,) accumulated action, S0[0] = 0
    eps, gamma : (n,)
    beta : (n, 3)
    """

    def __init__(self, spec, t, y, sol):
        self.spec = spec
        self.t = np.asarray(t)
        self.p = y[:3].T.copy()
        self.x = y[3:6].T.copy()
        self.S0 = y[6].copy()
        self._sol = sol
        kins = [kinetics(spec, np.concatenate([pp, xx]), tt) for tt, pp, xx in zip(self.t, self.p, self.x)]
        self.eps = np.array([q.eps for q in kins])
        self.beta = np.array([q.beta for q in kins]).reshape(-1, 3)
        self.gamma = np.array([q.gamma for q in kins])

    @property
    def t_span(self):
        return float(self.t[0]), float(self.t[-1])

    def __len__(self):
        return len(self.t)

    def z_at(self, t) -> np.ndarray:
        """(p, x) at time t from the dense output."""
        return self._sol(t)[:6]

    def s0_at(self, t) -> float:
        return float(self._sol(t)[6])

    def point(self, t) -> PhasePoint:
        return PhasePoint.from_z(self.z_at(t))

    def kinetics_at(self, t) -> Kinetics:
        return kinetics(self.spec, self.z_at(t), t)

    def table(self) -> np.ndarray:
        """Columns t, p1..3, x1..3, S0, epsilon, beta1..3, gamma."""
        return np.column_stack([self.t, self.p, self.x, self.S0, self.eps, self.beta, self.gamma])

    TABLE_HEADER = ("t", "p1", "p2", "p3", "x1", "x2", "x3", "S0", "epsilon",
                    "beta1", "beta2", "beta3", "gamma")


def integrate_trajectory(spec: HamiltonianSpec, z0, t_span, tol=None, t_eval=None,
                         n_samples: int | None = None) -> PhaseTrajectory:
    """Integrate Hamilton's equations together with the action.

    The augmented state is (p, x, S0) with S0' = <p, x'> - lambda.

    Parameters
    ----------
    t_eval : array, optional
        Sample times; default is ``n_samples`` uniform points, or the
        solver's own steps when both are None.
    """
    z0 = _as_point(z0)
    if isinstance(t_span, (int, float)):
        t_span = (0.0, float(t_span))
    t0, t1 = map(float, t_span)
    if t1 == t0:
        raise DomainError("empty time span")
    if spec.relativistic:
        kin0 = kinetics(spec, z0, t0)
        if not np.isfinite(kin0.gamma):
            raise DomainError("|beta| >= 1 at the initial point")
    if t_eval is None and n_samples is not None:
        t_eval = np.linspace(t0, t1, int(n_samples))

    def rhs(t, y):
        fd = eval_derivatives(spec.field, y[3:6], t, order=1)
        lam_p, lam_x = lambda_gradient(spec, y[:6], t, fd)
        kin = kinetics(spec, y[:6], t, fd.phi[0], fd.a[0])
        if spec.relativistic and not np.isfinite(kin.gamma):
            raise DomainError(f"|beta| >= 1 reached at t={t:.6g}")
        return np.concatenate([-lam_x, lam_p, [y[:3] @ lam_p - kin.lam]])

    y0 = np.concatenate([z0.p, z0.x, [0.0]])
    res = solve(rhs, (t0, t1), y0, tol, t_eval=t_eval, what="trajectory")
    traj = PhaseTrajectory(spec, res.t, res.y, res.sol)
    if spec.relativistic and not np.all(np.isfinite(traj.gamma)):
        bad = traj.t[~np.isfinite(traj.gamma)][0]
        raise DomainError(f"|beta| >= 1 reached at t={bad:.6g}")
    return traj
