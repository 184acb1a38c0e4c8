"""Dirac matrices, energy-sheet projectors and spin transport.

Conventions: the 4x4 matrices act on bispinors (upper; lower), with
``rho_i = tau_i (x) I2``, ``Sigma = I2 (x) sigma`` and ``alpha = rho1 Sigma``.
The 4x2 matrices ``Pi_+/-`` collect the eigenvectors of the principal symbol
for the upper and lower energy sheets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import PhaseTrajectory, kinetics
from .constants import Constants
from .emfield import eval_fields, eval_potentials
from .errors import DomainError
from .odeint import solve

I2 = np.eye(2, dtype=complex)
SIGMA = np.array([[[0, 1], [1, 0]],
                  [[0, -1j], [1j, 0]],
                  [[1, 0], [0, -1]]], dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
RHO1 = np.block([[_Z2, I2], [I2, _Z2]])
RHO2 = np.block([[_Z2, -1j * I2], [1j * I2, _Z2]])
RHO3 = np.block([[I2, _Z2], [_Z2, -I2]])
BIG_SIGMA = np.array([np.block([[s, _Z2], [_Z2, s]]) for s in SIGMA])
ALPHA = np.array([RHO1 @ s for s in BIG_SIGMA])
for _m in (SIGMA, RHO1, RHO2, RHO3, BIG_SIGMA, ALPHA):
    _m.setflags(write=False)


def sigma_dot(v) -> np.ndarray:
    """<sigma, v> for a (possibly complex) 3-vector."""
    return np.einsum("i,ijk->jk", np.asarray(v), SIGMA)


def big_sigma_dot(v) -> np.ndarray:
    return np.einsum("i,ijk->jk", np.asarray(v), BIG_SIGMA)


def polarization(u) -> np.ndarray:
    """eta = u^H sigma u (real for a single spinor)."""
    u = np.asarray(u)
    return np.einsum("...j,ijk,...k->...i", u.conj(), SIGMA, u).real


@dataclass(frozen=True)
class KinematicPoint:
    """Velocity and field data at one trajectory point (upper sheet)."""

    beta: np.ndarray
    gamma: float
    eps: float
    P: np.ndarray
    E: np.ndarray
    H: np.ndarray
    phi: float = 0.0

    @classmethod
    def from_beta(cls, beta, constants: Constants, E=(0, 0, 0), H=(0, 0, 0), phi=0.0) -> "KinematicPoint":
        """Build from the velocity alone: P = eps beta / c with eps = gamma m c^2."""
        beta = np.asarray(beta, dtype=float)
        b2 = float(beta @ beta)
        if b2 >= 1:
            raise DomainError("|beta| must be below 1")
        gamma = 1.0 / np.sqrt(1.0 - b2)
        eps = gamma * constants.m0 * constants.c ** 2
        return cls(beta, gamma, eps, eps * beta / constants.c,
                   np.asarray(E, dtype=float), np.asarray(H, dtype=float), float(phi))

    @classmethod
    def on_trajectory(cls, traj: PhaseTrajectory, t: float) -> "KinematicPoint":
        spec = traj.spec
        z = traj.z_at(t)
        phi, a = eval_potentials(spec.field, z[3:], t)
        kin = kinetics(spec, z, t, phi, a)
        E, H = eval_fields(spec.field, z[3:], t)
        return cls(kin.beta, kin.gamma, kin.eps, kin.P, E, H, float(phi))


def projectors_pi(k: KinematicPoint, constants: Constants):
    """(Pi_+, Pi_-) built from eps, m c^2 and <sigma, P>."""
    mc2 = constants.m0 * constants.c ** 2
    norm = 1.0 / np.sqrt(2 * k.eps * (k.eps + mc2))
    sp = constants.c * sigma_dot(k.P)
    plus = norm * np.vstack([(k.eps + mc2) * I2, sp])
    minus = norm * np.vstack([sp, -(mc2 + k.eps) * I2])
    return plus, minus


def projectors_from_beta(beta):
    """Same projectors written through beta only (identical to the above on shell)."""
    beta = np.asarray(beta, dtype=float)
    g = np.sqrt(1.0 - beta @ beta)
    n = 1.0 / np.sqrt(2 * (1 + g))
    sb = sigma_dot(beta)
    return n * np.vstack([(1 + g) * I2, sb]), n * np.vstack([sb, -(1 + g) * I2])


def projector_rates(beta, beta_dot):
    """d/dt of (Pi_+, Pi_-) by the chain rule through beta(t)."""
    beta = np.asarray(beta, dtype=float)
    bd = np.asarray(beta_dot, dtype=float)
    g = np.sqrt(1.0 - beta @ beta)
    gd = -(beta @ bd) / g
    n = 1.0 / np.sqrt(2 * (1 + g))
    nd = -0.5 * n * gd / (1 + g)
    sb, sbd = sigma_dot(beta), sigma_dot(bd)
    plus = nd * np.vstack([(1 + g) * I2, sb]) + n * np.vstack([gd * I2, sbd])
    minus = nd * np.vstack([sb, -(1 + g) * I2]) + n * np.vstack([sbd, -gd * I2])
    return plus, minus


def dirac_symbol(k: KinematicPoint, constants: Constants) -> np.ndarray:
    """Principal symbol c<alpha, P> + rho3 m c^2 + e Phi."""
    c = constants.c
    return (c * np.einsum("i,ijk->jk", k.P, ALPHA) + RHO3 * constants.m0 * c ** 2
            + constants.e * k.phi * np.eye(4))


def lambda_pp_sqrt(k: KinematicPoint, constants: Constants):
    """Closed forms of lambda_pp^{1/2}, ^{-1/2}, ^{-1} on the negative-root branch."""
    b, c, eps, gam = k.beta, constants.c, k.eps, k.gamma
    d = 1 + 1 / gam
    bb = np.outer(b, b)
    sq = (c / np.sqrt(eps)) * (bb / d - np.eye(3))
    isq = -(np.sqrt(eps) / c) * (np.eye(3) + gam * bb / d)
    inv = (eps / c ** 2) * (np.eye(3) + gam ** 2 * bb)
    return sq, isq, inv


def _eig_fun(M, f):
    w, V = np.linalg.eigh(M)
    return (V * f(w)) @ V.T


def pi_identity_residuals(k: KinematicPoint, beta_dot, S, constants: Constants, include_printed=False):
    """Max elementwise residual of every projector identity.

    Keys ``A1`` .. ``A14``; signed identities are checked for both sheets
    and both written forms.  ``A6`` compares the chain-rule derivative of
    the projectors with the closed expression.

    With ``include_printed`` a second dict is returned holding residuals
    of two alternate forms (Pi_pm in place of Pi_mp for the rate identity,
    and the inverse root in the H identity) which do not hold.
    """
    b = np.asarray(k.beta, dtype=float)
    bd = np.asarray(beta_dot, dtype=float)
    S = np.asarray(S, dtype=float)
    E, H = np.asarray(k.E, dtype=float), np.asarray(k.H, dtype=float)
    c, eps = constants.c, k.eps
    g = 1.0 / k.gamma
    d = 1 + g
    sb = sigma_dot(b)
    lpp = (c ** 2 / eps) * (np.eye(3) - np.outer(b, b))
    sq, isq, inv = lambda_pp_sqrt(k, constants)
    # oracle: the eigendecomposition with the negative root selected
    sq_ref = _eig_fun(lpp, lambda w: -np.sqrt(w))
    isq_ref = _eig_fun(lpp, lambda w: -1 / np.sqrt(w))
    res = {
        "A1": max(np.abs(sq @ sq - lpp).max(), np.abs(sq - sq_ref).max()),
        "A2": max(np.abs(sq @ isq - np.eye(3)).max(), np.abs(isq - isq_ref).max()),
        "A3": max(np.abs(lpp @ inv - np.eye(3)).max(), np.abs(inv - np.linalg.inv(lpp)).max()),
    }
    Pp, Pm = projectors_pi(k, constants)
    Pp_dot, Pm_dot = projector_rates(b, bd)
    H0 = dirac_symbol(k, constants)
    lam = constants.e * k.phi
    printed = {}
    P = k.P
    r = {key: 0.0 for key in ("A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11", "A12", "A13")}

    def upd(key, val):
        r[key] = max(r[key], float(np.abs(val).max()))

    for s, Pi, Pj, Pdot in ((1, Pp, Pm, Pp_dot), (-1, Pm, Pp, Pm_dot)):
        upd("A4", H0 @ Pi - (lam + s * eps) * Pi)
        lhs = np.einsum("i,ijk->jk", P, ALPHA) @ Pi
        upd("A5", lhs - (s * (b @ P) * Pi + Pj @ (sb * (b @ P) / d - sigma_dot(P))))
        upd("A5", lhs - (s * (b @ P) * Pi + (np.sqrt(eps) / c) * Pj @ sigma_dot(sq @ P)))
        rot = 0.5j * sigma_dot(np.cross(b, bd)) / d
        upd("A6", Pdot - (Pi @ rot - 0.5 * s * Pj @ (sb * k.gamma * (b @ bd) / d + sigma_dot(bd))))
        # second form with the sheet index corrected
        upd("A6", Pdot - (Pi @ rot + s * c / (2 * np.sqrt(eps)) * Pj @ sigma_dot(isq @ bd)))
        lhs = RHO3 @ big_sigma_dot(H) @ Pi
        upd("A7", lhs - (-s * Pi @ (sb * (b @ H) / d - sigma_dot(H)) + Pj * (b @ H)))
        # second form with the square root (not its inverse)
        upd("A7", lhs - (-s * (np.sqrt(eps) / c) * Pi @ sigma_dot(sq @ H) + Pj * (b @ H)))
        lhs = RHO2 @ big_sigma_dot(E) @ Pi
        upd("A8", lhs - (-Pi @ sigma_dot(np.cross(b, E)) - s * 1j * Pj @ (sb * (b @ E) / d + g * sigma_dot(E))))
        upd("A8", lhs - (-Pi @ sigma_dot(np.cross(b, E)) + s * 1j * g * c / np.sqrt(eps) * Pj @ sigma_dot(isq @ E)))
        lhs = big_sigma_dot(S) @ Pi
        upd("A9", lhs - (Pi @ (g * sigma_dot(S) + (b @ S) / d * sb) + s * Pj @ (1j * sigma_dot(np.cross(b, S)))))
        upd("A9", lhs - (-(c * g / np.sqrt(eps)) * Pi @ sigma_dot(isq @ S) + s * 1j * Pj @ sigma_dot(np.cross(b, S))))
        upd("A10", RHO3 @ Pi - (s * g * Pi + Pj @ sb))
        upd("A11", RHO2 @ Pi - (-s * 1j * Pj))
        upd("A12", RHO1 @ Pi - (s * Pi @ sb - g * Pj))
        upd("A13", Pi.conj().T @ Pi - I2)
        upd("A13", Pi.conj().T @ Pj)
        if include_printed:
            printed["A6_as_printed"] = max(printed.get("A6_as_printed", 0.0), float(np.abs(
                Pdot - (Pi @ rot + s * c / (2 * np.sqrt(eps)) * Pi @ sigma_dot(isq @ bd))).max()))
            printed["A7_as_printed"] = max(printed.get("A7_as_printed", 0.0), float(np.abs(
                RHO3 @ big_sigma_dot(H) @ Pi
                - (-s * (np.sqrt(eps) / c) * Pi @ sigma_dot(isq @ H) + Pj * (b @ H))).max()))
    res.update(r)
    res["A14"] = float(np.abs(Pp @ Pp.conj().T + Pm @ Pm.conj().T - np.eye(4)).max())
    res = {key: float(v) for key, v in res.items()}
    return (res, printed) if include_printed else res


def beta_rate(k: KinematicPoint, constants: Constants) -> np.ndarray:
    """d beta/dt on the upper sheet: (e c/eps)(E + beta x H - beta <beta, E>)."""
    b = k.beta
    return (constants.e * constants.c / k.eps) * (k.E + np.cross(b, k.H) - b * (b @ k.E))


def d0_vector(k: KinematicPoint, constants: Constants, g: float | None = None) -> np.ndarray:
    """Precession vector D0; the spinor obeys i hbar u' = <sigma, D0> u."""
    gt = constants.g_tilde if g is None else 0.5 * (g - 2.0)
    gam, b = k.gamma, k.beta
    d = 1 + 1 / gam
    return (constants.mu0 / gam) * ((1 + gt * gam) * k.H
                                    - (1 / d + gt * gam) * np.cross(b, k.E)
                                    - (gt * gam / d) * b * (b @ k.H))


def spinor_equation_matrix(k: KinematicPoint, constants: Constants, g: float | None = None) -> np.ndarray:
    """Matrix K with i u' = K u, assembled term by term from the two-spinor equation."""
    gt = constants.g_tilde if g is None else 0.5 * (g - 2.0)
    gam, b = k.gamma, k.beta
    d = 1 + 1 / gam
    bracket = ((1 + gt * gam) * sigma_dot(k.H)
               - (1 / d + gt * gam) * sigma_dot(np.cross(b, k.E))
               - (gt * gam * (b @ k.H) / d) * sigma_dot(b))
    return -(constants.e * constants.c / (2 * k.eps)) * bracket


def initial_spinor(ell, zeta: int) -> np.ndarray:
    """Eigenvector of <sigma, ell> with eigenvalue zeta; first nonzero entry real positive."""
    ell = np.asarray(ell, dtype=float)
    n = np.linalg.norm(ell)
    if n == 0 or not np.isfinite(n):
        raise DomainError("spin axis must be a nonzero finite vector")
    if zeta not in (1, -1):
        raise DomainError(f"zeta must be +1 or -1, got {zeta}")
    w, V = np.linalg.eigh(sigma_dot(ell / n))
    u = V[:, int(np.argmin(np.abs(w - zeta)))]
    lead = u[np.argmax(np.abs(u) > 1e-12)]
    return u * (abs(lead) / lead)


class SpinTrajectory:
    """Spinor transported along a trajectory.

    Attributes
    ----------
    t : (n,)
    u : (n, 2) complex
    eta : (n, 3) polarization u^H sigma u
    a0, a : boosted polarization, (n,) and (n, 3)
    """

    def __init__(self, traj, constants, ell, zeta, t, u, sol):
        self.traj = traj
        self.constants = constants
        self.ell = np.asarray(ell, dtype=float)
        self.zeta = zeta
        self.t = np.asarray(t)
        self.u = u
        self._sol = sol
        self.eta = polarization(u)
        pol = [boost_zeta_to_a(e, traj.kinetics_at(tt).beta) for e, tt in zip(self.eta, self.t)]
        self.a = np.array([p.a for p in pol]).reshape(-1, 3)
        self.a0 = np.array([p.a0 for p in pol])

    def u_at(self, t) -> np.ndarray:
        y = self._sol(t)
        return y[:2] + 1j * y[2:]

    def eta_at(self, t) -> np.ndarray:
        return polarization(self.u_at(t))

    def norm_drift(self) -> float:
        return float(np.abs(np.linalg.norm(self.u, axis=1) - 1.0).max())


def integrate_spinor(traj: PhaseTrajectory, constants: Constants | None = None, ell=(0, 0, 1), zeta: int = 1,
                     tol=None, t_eval=None, u0=None) -> SpinTrajectory:
    """Integrate i hbar u' = <sigma, D0(t)> u along ``traj``.

    ``u0`` overrides the eigenvector initial condition built from (ell, zeta).
    The state is split into real and imaginary parts for the integrator.
    """
    constants = constants or traj.spec.constants
    if u0 is None:
        u0 = initial_spinor(ell, zeta)
    u0 = np.asarray(u0, dtype=complex)
    hb = constants.hbar

    def rhs(t, y):
        k = KinematicPoint.on_trajectory(traj, t)
        u = y[:2] + 1j * y[2:]
        du = (-1j / hb) * sigma_dot(d0_vector(k, constants)) @ u
        return np.concatenate([du.real, du.imag])

    if t_eval is None:
        t_eval = traj.t
    if tol is None:
        tol = (1e-12, 1e-14)
    res = solve(rhs, traj.t_span, np.concatenate([u0.real, u0.imag]), tol, t_eval=t_eval, what="spinor")
    u = (res.y[:2] + 1j * res.y[2:]).T
    return SpinTrajectory(traj, constants, ell, zeta, res.t, u, res.sol)


@dataclass(frozen=True)
class Polarization:
    eta: np.ndarray
    a: np.ndarray
    a0: float


def boost_zeta_to_a(zeta_vec, beta, gamma=None) -> Polarization:
    """Rest-frame polarization to the boosted pseudovector (a0, a)."""
    z = np.asarray(zeta_vec)
    b = np.asarray(beta, dtype=float)
    if gamma is None:
        b2 = float(b @ b)
        if b2 >= 1:
            raise DomainError("|beta| must be below 1")
        gamma = 1.0 / np.sqrt(1.0 - b2)
    zb = z @ b
    a = z + gamma * b * zb / (1 + 1 / gamma)
    a0 = gamma * zb
    if abs(a0 - b @ a) > 1e-12 * max(1.0, abs(a0)):
        raise DomainError("boost closure a0 = <beta, a> failed")
    return Polarization(z, a, a0)


BMT_CONVENTIONS = ("eq_2_30", "eq_B_14")


def bmt_rhs(a, k: KinematicPoint, constants: Constants, convention: str = "eq_2_30", g: float | None = None):
    """Lab-time rate of the boosted polarization in either written convention.

    ``eq_2_30``: (g e/2mc gamma)(E<beta,a> + a x H)
        + ((g-2) e gamma/2mc) beta (<beta, a x H> + <a,beta><beta,E> - <a,E>)
    ``eq_B_14``: (g e/2mc gamma)(<a,beta>E + H x a)
        + (e (g-2) gamma/2mc) beta (<a,E> + <a,beta><beta,E> + <beta, a x H>)
    """
    g = constants.g if g is None else g
    a = np.asarray(a, dtype=float)
    b, E, H, gam = k.beta, k.E, k.H, k.gamma
    e, m, c = constants.e, constants.m0, constants.c
    k1 = g * e / (2 * m * c * gam)
    k2 = (g - 2) * e * gam / (2 * m * c)
    if convention == "eq_2_30":
        return k1 * (E * (b @ a) + np.cross(a, H)) + k2 * b * (b @ np.cross(a, H) + (a @ b) * (b @ E) - a @ E)
    if convention == "eq_B_14":
        return k1 * ((a @ b) * E + np.cross(H, a)) + k2 * b * (a @ E + (a @ b) * (b @ E) + b @ np.cross(a, H))
    raise ValueError(f"unknown convention {convention!r}")


def bmt_residuals(spin: SpinTrajectory, times, convention: str = "eq_2_30", h: float = 1e-3) -> np.ndarray:
    """|a'(t) - rhs(a(t))| at each time, with a'(t) from a five-point
    centered difference of the dense output."""
    traj = spin.traj
    const = spin.constants

    def a_of(t):
        return boost_zeta_to_a(spin.eta_at(t), traj.kinetics_at(t).beta).a

    out = []
    for t in times:
        da = (-a_of(t + 2 * h) + 8 * a_of(t + h) - 8 * a_of(t - h) + a_of(t - 2 * h)) / (12 * h)
        k = KinematicPoint.on_trajectory(traj, t)
        out.append(float(np.linalg.norm(da - bmt_rhs(a_of(t), k, const, convention))))
    return np.array(out)


def bmt_consistency(spin: SpinTrajectory, times=None, h: float = 1e-3):
    """RMS residual of each convention for a(t) built from the transported spinor."""
    if times is None:
        t0, t1 = spin.traj.t_span
        times = np.linspace(t0 + 0.05 * (t1 - t0), t1 - 0.05 * (t1 - t0), 60)
    return {c: float(np.sqrt(np.mean(bmt_residuals(spin, times, c, h) ** 2))) for c in BMT_CONVENTIONS}
