"""Gaussian trajectory-coherent states, quadrature and the truncated kernel.

Every state handled here has the form

    Psi(x) = G(x) * sum_k v_k R_k(xi),    xi = (x - x(t)) / sqrt(hbar),

where G is the Gaussian carrier N (det C)^{-1/2} exp(i S(x,t)/hbar), v_k are
constant component vectors and R_k polynomials in xi.  Momentum shifts act
analytically on that form:

    dp_j (G R) = G sqrt(hbar) [(Q xi)_j R - i dR/dxi_j],

so expectations of momentum-dependent observables need no numerical
differentiation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite as _herm
from numpy.polynomial import polynomial as _npoly

from .classical import PhaseTrajectory, hamilton_rhs, kinetics, variational_matrices
from .emfield import eval_derivatives, eval_potentials
from .errors import CausticError, DomainError, UnderResolvedGridError
from .germ import GermTrajectory, germ_rhs_matrices, q_of
from .spin import BIG_SIGMA, RHO1, RHO3, SIGMA, KinematicPoint, projectors_pi, sigma_dot

NU_MAX_DEFAULT = 6
MIN_GH_NODES = 20


class XiPolynomial:
    """Complex polynomial in three variables, ``c[a, b, d]`` multiplies xi1^a xi2^b xi3^d."""

    def __init__(self, coeffs):
        c = np.atleast_3d(np.asarray(coeffs, dtype=complex))
        self.c = c

    @classmethod
    def one(cls) -> "XiPolynomial":
        return cls(np.ones((1, 1, 1)))

    @property
    def degree(self) -> int:
        nz = np.argwhere(np.abs(self.c) > 0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    def _padded(self, shape):
        out = np.zeros(shape, dtype=complex)
        out[tuple(slice(0, s) for s in self.c.shape)] = self.c
        return out

    def __add__(self, other: "XiPolynomial") -> "XiPolynomial":
        shape = tuple(max(a, b) for a, b in zip(self.c.shape, other.c.shape))
        return XiPolynomial(self._padded(shape) + other._padded(shape))

    def __mul__(self, s) -> "XiPolynomial":
        return XiPolynomial(self.c * s)

    __rmul__ = __mul__

    def times_xi(self, j: int) -> "XiPolynomial":
        pad = [(0, 0)] * 3
        pad[j] = (1, 0)
        return XiPolynomial(np.pad(self.c, pad))

    def linear_times(self, vec) -> "XiPolynomial":
        """(vec . xi) * self."""
        out = XiPolynomial(np.zeros((1, 1, 1)))
        for j in range(3):
            if vec[j] != 0:
                out = out + self.times_xi(j) * vec[j]
        return out

    def deriv(self, j: int) -> "XiPolynomial":
        if self.c.shape[j] == 1:
            return XiPolynomial(np.zeros((1, 1, 1)))
        return XiPolynomial(_npoly.polyder(self.c, axis=j))

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi)
        return _npoly.polyval3d(xi[..., 0], xi[..., 1], xi[..., 2], self.c)

    def trimmed(self, tol=0.0) -> "XiPolynomial":
        c = self.c
        keep = np.argwhere(np.abs(c) > tol)
        if not len(keep):
            return XiPolynomial(np.zeros((1, 1, 1)))
        hi = keep.max(axis=0) + 1
        return XiPolynomial(c[: hi[0], : hi[1], : hi[2]])


def creation(poly: XiPolynomial, W, Z, Q, im_b) -> XiPolynomial:
    """Raising operator along one germ column acting on the polynomial factor.

    In xi variables it is independent of hbar:
    (2 Im b)^{-1/2} [ -<W* - Q Z*, xi> P - i <Z*, grad_xi P> ].
    """
    Wc, Zc = np.conj(W), np.conj(Z)
    lin = -(Wc - Q @ Zc)
    out = poly.linear_times(lin)
    for j in range(3):
        if Zc[j] != 0:
            out = out + poly.deriv(j) * (-1j * Zc[j])
    return (out * (1.0 / math.sqrt(2 * im_b))).trimmed(1e-300)


def multi_indices(nu_max: int):
    """All nu with |nu| <= nu_max, in graded lexicographic order."""
    out = []
    for n in range(nu_max + 1):
        for a in range(n, -1, -1):
            for b in range(n - a, -1, -1):
                out.append((a, b, n - a - b))
    return out


def ladder_polynomials(B, C, im_b, nu_max: int) -> dict:
    """P_nu for every |nu| <= nu_max by repeated raising from P_0 = 1."""
    Q = q_of(B, C)
    polys = {(0, 0, 0): XiPolynomial.one()}
    for nu in multi_indices(nu_max)[1:]:
        j = next(k for k in range(3) if nu[k] > 0)
        prev = list(nu)
        prev[j] -= 1
        polys[nu] = creation(polys[tuple(prev)], B[:, j], C[:, j], Q, im_b[j]) * (1.0 / math.sqrt(nu[j]))
    return polys


@dataclass(frozen=True)
class Carrier:
    """Gaussian carrier of a packet at one time."""

    t: float
    x: np.ndarray
    p: np.ndarray
    S0: float
    Q: np.ndarray
    B: np.ndarray
    C: np.ndarray
    sqrt_detC: complex
    im_b: np.ndarray
    norm_const: float
    hbar: float

    def xi(self, x) -> np.ndarray:
        return (np.asarray(x) - self.x) / math.sqrt(self.hbar)

    def action(self, x) -> np.ndarray:
        dx = np.asarray(x) - self.x
        return self.S0 + dx @ self.p + 0.5 * np.einsum("...i,ij,...j->...", dx, self.Q, dx)

    def __call__(self, x) -> np.ndarray:
        return self.norm_const / self.sqrt_detC * np.exp(1j * self.action(x) / self.hbar)


def normalization_constant(germ: GermTrajectory, hbar: float) -> float:
    """(pi hbar)^{-3/4} |det C0|^{1/2} det(Im Q0)^{1/4}."""
    s0 = germ.state(0)
    im_q = s0.Q.imag
    return float((math.pi * hbar) ** -0.75 * abs(s0.detC) ** 0.5 * np.linalg.det(0.5 * (im_q + im_q.T)) ** 0.25)


def build_carrier(traj: PhaseTrajectory, germ: GermTrajectory, t: float, hbar: float | None = None) -> Carrier:
    hbar = traj.spec.constants.hbar if hbar is None else hbar
    gs = germ.at(t)
    if abs(gs.detC) == 0:
        raise CausticError("singular C", t=t)
    z = traj.z_at(t)
    return Carrier(float(t), z[3:].copy(), z[:3].copy(), traj.s0_at(t), gs.Q, gs.B, gs.C,
                   gs.sqrt_detC, gs.im_b, normalization_constant(germ, hbar), hbar)


class PacketState:
    """G(x) * sum_k v_k R_k(xi) with ``ncomp`` components."""

    def __init__(self, carrier: Carrier, terms, spec=None, meta=None):
        self.carrier = carrier
        self.terms = [(np.atleast_1d(np.asarray(v, dtype=complex)), r) for v, r in terms]
        self.spec = spec
        self.meta = dict(meta or {})

    @property
    def ncomp(self) -> int:
        return len(self.terms[0][0])

    def envelope(self, xi) -> np.ndarray:
        """sum_k v_k R_k(xi), shape (..., ncomp)."""
        out = 0
        for v, r in self.terms:
            out = out + r(xi)[..., None] * v
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.carrier(x)[..., None] * self.envelope(self.carrier.xi(x))

    def map_terms(self, fv=None, fr=None) -> "PacketState":
        terms = [(fv(v) if fv else v, fr(r) if fr else r) for v, r in self.terms]
        return PacketState(self.carrier, terms, self.spec, self.meta)

    def dp(self, j: int) -> "PacketState":
        """Delta p_j = p_j - p(t)_j applied analytically."""
        sq = math.sqrt(self.carrier.hbar)
        Qrow = self.carrier.Q[j]
        return self.map_terms(fr=lambda r: (r.linear_times(Qrow) + r.deriv(j) * (-1j)) * sq)

    def dx(self, j: int) -> "PacketState":
        sq = math.sqrt(self.carrier.hbar)
        return self.map_terms(fr=lambda r: r.times_xi(j) * sq)

    def __add__(self, other: "PacketState") -> "PacketState":
        return PacketState(self.carrier, self.terms + other.terms, self.spec, self.meta)


# ---------------------------------------------------------------- constructors

def scalar_tcs(traj, germ, nu, t, hbar=None, polys=None) -> PacketState:
    """|nu, t> as a one-component packet."""
    nu = tuple(int(v) for v in nu)
    if any(v < 0 for v in nu):
        raise DomainError(f"nu must be nonnegative, got {nu}")
    car = build_carrier(traj, germ, t, hbar)
    if polys is None:
        polys = ladder_polynomials(car.B, car.C, car.im_b, sum(nu))
    return PacketState(car, [(np.ones(1), polys[nu])], traj.spec, {"nu": nu})


def scalar_tcs_eval(nu, x, t, traj, germ, hbar=None, nu_max: int = NU_MAX_DEFAULT):
    """Value of |nu, t> at ``x`` (shape (..., 3))."""
    if sum(nu) > nu_max:
        raise DomainError(f"|nu| = {sum(nu)} exceeds nu_max = {nu_max}")
    return scalar_tcs(traj, germ, nu, t, hbar)(x)[..., 0]


def action_S(x, t, traj, germ, hbar=None):
    return build_carrier(traj, germ, t, hbar).action(x)


def measure_density(x, t, traj, germ, hbar=None):
    """rho = N^2 |det C|^{-1} exp(-2 Im S / hbar), normalized to one."""
    car = build_carrier(traj, germ, t, hbar)
    S = car.action(x)
    return car.norm_const ** 2 / abs(car.sqrt_detC) ** 2 * np.exp(-2 * S.imag / car.hbar)


def correction_matrices(k: KinematicPoint, constants):
    """2x2 blocks M_m with sqrt(hbar) Q1 = sum_m M_m (P1)_m."""
    d = 1 + 1 / k.gamma
    sb = sigma_dot(k.beta)
    return np.array([constants.c * (sb * k.beta[m] / d - SIGMA[m]) for m in range(3)])


def dirac_tcs(traj, germ, spin, nu, t, order: int = 0, hbar=None, polys=None) -> PacketState:
    """Four-component state built on |nu, t> and the transported spinor.

    order 0: Pi_+ u |nu,t>.
    order 1: adds (1/2 eps) Pi_- sqrt(hbar) Q1 (u |nu,t>), where
    P1 = dp - (e/c) (dA/dx) dx acts on the polynomial factor.
    """
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order}")
    const = traj.spec.constants
    scal = scalar_tcs(traj, germ, nu, t, hbar, polys)
    k = KinematicPoint.on_trajectory(traj, t)
    Pp, Pm = projectors_pi(k, const)
    u = spin.u_at(t)
    r0 = scal.terms[0][1]
    terms = [(Pp @ u, r0)]
    if order == 1:
        jac = eval_derivatives(traj.spec.field, traj.z_at(t)[3:], t, order=1).a[1]
        M = correction_matrices(k, const)
        for m in range(3):
            # (P1)_m = dp_m - (e/c) sum_l jac[m, l] dx_l
            r = scal.dp(m).terms[0][1]
            lin = -(const.e / const.c) * math.sqrt(scal.carrier.hbar) * jac[m]
            r = r + r0.linear_times(lin)
            terms.append(((Pm @ (M[m] @ u)) / (2 * k.eps), r))
    return PacketState(scal.carrier, terms, traj.spec,
                       {"nu": tuple(nu), "zeta": spin.zeta, "order": order})


def dirac_tcs_eval(nu, zeta_spin, x, t, order, traj, germ, hbar=None):
    """Value of the Dirac state at ``x``; ``zeta_spin`` is a transported spinor."""
    return dirac_tcs(traj, germ, zeta_spin, nu, t, order, hbar)(x)


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes ``x`` and weights ``w`` with sum w f(x) ~ integral of f."""

    scheme: str
    nodes: int
    x: np.ndarray
    w: np.ndarray
    xi: np.ndarray

    def integrate(self, values) -> np.ndarray:
        return np.tensordot(self.w, values, axes=(0, 0))


def build_grid(carrier: Carrier, nodes: int = 24, scheme: str = "gauss_hermite", half_width: float = 6.0):
    """Tensor grid in the eigenframe of Im Q centred on x(t).

    ``gauss_hermite``: x = x(t) + sqrt(hbar) M eta with M = V diag(w^{-1/2}),
    so exp(-xi^T Im Q xi) becomes exp(-|eta|^2); the weights carry the
    compensating exp(|eta|^2).
    ``uniform_box``: midpoint rule on [-half_width, half_width]^3 in eta.
    """
    im_q = 0.5 * (carrier.Q.imag + carrier.Q.imag.T)
    lam, V = np.linalg.eigh(im_q)
    if lam.min() <= 0:
        raise CausticError("Im Q is not positive definite", t=carrier.t)
    M = V / np.sqrt(lam)
    if scheme == "gauss_hermite":
        e1, w1 = _herm.hermgauss(nodes)
        w1 = w1 * np.exp(e1 ** 2)
    elif scheme == "uniform_box":
        h = 2 * half_width / nodes
        e1 = -half_width + h * (np.arange(nodes) + 0.5)
        w1 = np.full(nodes, h)
    else:
        raise DomainError(f"unknown quadrature scheme {scheme!r}")
    eta = np.array(list(itertools.product(e1, e1, e1)))
    w = np.prod(np.array(list(itertools.product(w1, w1, w1))), axis=1)
    xi = eta @ M.T
    sq = math.sqrt(carrier.hbar)
    w = w * carrier.hbar ** 1.5 * abs(np.linalg.det(M))
    return QuadratureGrid(scheme, nodes, carrier.x + sq * xi, w, xi)


def _values(state: PacketState, grid: QuadratureGrid):
    return state.carrier(grid.x)[:, None] * state.envelope(grid.xi)


def braket(a: PacketState, b: PacketState, grid: QuadratureGrid) -> complex:
    va = a(grid.x) if a.carrier is not b.carrier else _values(a, grid)
    vb = _values(b, grid) if a.carrier is b.carrier else b(grid.x)
    return complex(grid.integrate(np.sum(va.conj() * vb, axis=-1)))


def gram_matrix(states, grid: QuadratureGrid) -> np.ndarray:
    vals = [s(grid.x) for s in states]
    n = len(states)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            G[i, j] = grid.integrate(np.sum(vals[i].conj() * vals[j], axis=-1))
            G[j, i] = np.conj(G[i, j])
    return G


OBSERVABLES = ("norm", "position", "momentum", "pauli_spin", "bargmann_S0", "bargmann_Svec")


def expectation(observable: str, state: PacketState, grid: QuadratureGrid):
    """<Psi| O |Psi> by quadrature (not divided by the norm).

    Returns a complex scalar for ``norm`` and ``bargmann_S0``, a complex
    3-vector otherwise.
    """
    if observable not in OBSERVABLES:
        raise DomainError(f"unknown observable {observable!r}")
    if grid.scheme == "gauss_hermite" and grid.nodes < MIN_GH_NODES:
        raise UnderResolvedGridError(f"need at least {MIN_GH_NODES} Gauss-Hermite nodes per axis, got {grid.nodes}")
    psi = state(grid.x)
    conj = psi.conj()

    def ip(vals):
        return complex(grid.integrate(np.sum(conj * vals, axis=-1)))

    if observable == "norm":
        return ip(psi)
    if observable == "position":
        return np.array([ip(grid.x[:, j, None] * psi) for j in range(3)])
    mom = [state.carrier.p[j] * psi + state.dp(j)(grid.x) for j in range(3)]
    if observable == "momentum":
        return np.array([ip(m) for m in mom])
    n = state.ncomp
    if n not in (2, 4):
        raise DomainError(f"{observable} needs a spinor state, got {n} components")
    spin_mats = SIGMA if n == 2 else BIG_SIGMA
    if observable == "pauli_spin":
        return np.array([ip(psi @ spin_mats[j].T) for j in range(3)])
    if n != 4:
        raise DomainError(f"{observable} needs a four-component state")
    const = state.spec.constants
    _, A = eval_potentials(state.spec.field, grid.x, state.carrier.t)
    kin = [mom[j] - (const.e / const.c) * A[:, j, None] * psi for j in range(3)]
    mc = const.m0 * const.c
    if observable == "bargmann_S0":
        return ip(sum(kin[j] @ BIG_SIGMA[j].T for j in range(3))) / mc
    return np.array([ip(psi @ (RHO3 @ BIG_SIGMA[j]).T + (kin[j] @ RHO1.T) / mc) for j in range(3)])


# ---------------------------------------------------------------- equation residual

def scalar_equation_residual(traj: PhaseTrajectory, germ: GermTrajectory, nu, t: float,
                             hbar: float | None = None, nodes: int = 24, dt: float = 1e-4) -> float:
    """L2 norm of (-i hbar d/dt + H) |nu, t> for the Schrodinger operator

        H = (p - (e/c) A)^2 / 2m + e Phi.

    Only the nonrelativistic mode is supported.  The time derivative is
    analytic for the carrier; the polynomial factor (only present for
    nu != 0) is differenced in time with step ``dt``.
    """
    spec = traj.spec
    if spec.relativistic:
        raise DomainError("equation residual is implemented for the nonrelativistic mode")
    field = spec.field
    if not getattr(field, "analytic", False):
        raise DomainError("equation residual needs an analytic field model")
    const = spec.constants
    state = scalar_tcs(traj, germ, nu, t, hbar)
    car = state.carrier
    hb = car.hbar
    sq = math.sqrt(hb)
    grid = build_grid(car, nodes)
    xi, x = grid.xi, grid.x
    dx = x - car.x
    P = state.terms[0][1]
    K = car(x)

    # time derivative of the carrier at fixed x
    vm = variational_matrices(spec, traj.z_at(t), t)
    dB, dC = germ_rhs_matrices(vm, car.B, car.C)
    Cinv = np.linalg.inv(car.C)
    dQ = (dB - car.Q @ dC) @ Cinv
    pdot, xdot = hamilton_rhs(spec, traj.z_at(t), t)
    lam = kinetics(spec, traj.z_at(t), t).lam
    dS = (-lam + dx @ pdot + 0.5 * np.einsum("ni,ij,nj->n", dx, dQ, dx) - dx @ (car.Q @ xdot))
    dlogK = -0.5 * np.trace(Cinv @ dC) + 1j * dS / hb
    gradP = np.stack([P.deriv(j)(xi) for j in range(3)], axis=-1)
    Pv = P(xi)
    dP = -(gradP @ xdot) / sq
    if sum(nu):
        gp = germ.at(t + dt)
        gm = germ.at(t - dt)
        Pp = ladder_polynomials(gp.B, gp.C, gp.im_b, sum(nu))[tuple(nu)]
        Pm = ladder_polynomials(gm.B, gm.C, gm.im_b, sum(nu))[tuple(nu)]
        dP = dP + (Pp(xi) - Pm(xi)) / (2 * dt)
    dpsi = K * (dlogK * Pv + dP)

    # Hamiltonian applied analytically
    v = (1j / hb) * (car.p + dx @ car.Q.T)
    gx = gradP / sq
    lap_P = sum(P.deriv(j).deriv(j)(xi) for j in range(3)) / hb
    grad_psi = K[:, None] * (v * Pv[:, None] + gx)
    lap_psi = K * (np.sum(v * v, axis=1) * Pv + 2 * np.sum(v * gx, axis=1)
                   + (1j / hb) * np.trace(car.Q) * Pv + lap_P)
    psi = K * Pv
    phi, A = eval_potentials(field, x, t)
    divA = sum(field.component(j + 1, x, t, tuple(np.eye(3, dtype=int)[j])) for j in range(3))
    ec = const.e / const.c
    kin2 = (-hb ** 2 * lap_psi + 2j * hb * ec * np.sum(A * grad_psi, axis=1)
            + 1j * hb * ec * divA * psi + ec ** 2 * np.sum(A * A, axis=1) * psi)
    Hpsi = kin2 / (2 * const.m0) + const.e * phi * psi
    R = -1j * hb * dpsi + Hpsi
    return float(np.sqrt(grid.integrate(np.abs(R) ** 2).real))


# ---------------------------------------------------------------- kernel

class GreenKernel:
    """Truncated spectral sum of the order-0 kernel between times s and t.

    G_N(x, y) = sum_{|nu| <= N} sum_zeta phi_nu^t(x) conj(phi_nu^s(y))
                Pi_+(t) u(t,zeta) u(s,zeta)^H Pi_+(s)^H

    ``spins`` maps zeta -> transported spinor (see
    :func:`tcdirac.spin.integrate_spinor`); the two spinors stay orthonormal.
    """

    def __init__(self, traj, germ, spins: dict, t: float, s: float, nu_max: int, hbar=None):
        if nu_max < 0:
            raise DomainError("nu_max must be nonnegative")
        if s > t:
            raise DomainError("kernel needs s <= t")
        self.nu_max = nu_max
        self.t, self.s = t, s
        self.car_t = build_carrier(traj, germ, t, hbar)
        self.car_s = build_carrier(traj, germ, s, hbar)
        self.nus = multi_indices(nu_max)
        self.order = np.array([sum(n) for n in self.nus])
        self.poly_t = ladder_polynomials(self.car_t.B, self.car_t.C, self.car_t.im_b, nu_max)
        self.poly_s = ladder_polynomials(self.car_s.B, self.car_s.C, self.car_s.im_b, nu_max)
        const = traj.spec.constants
        Pt = projectors_pi(KinematicPoint.on_trajectory(traj, t), const)[0]
        Ps = projectors_pi(KinematicPoint.on_trajectory(traj, s), const)[0]
        self.zetas = sorted(spins)
        self.spin_t = np.array([Pt @ spins[z].u_at(t) for z in self.zetas])
        self.spin_s = np.array([Ps @ spins[z].u_at(s) for z in self.zetas])

    def _scalar_basis(self, car, polys, x):
        g = car(x)
        xi = car.xi(x)
        return np.array([g * polys[nu](xi) for nu in self.nus])

    def matrix(self, x, y) -> np.ndarray:
        """Partial sums, shape (nu_max+1, ..., 4, 4); x and y broadcast against each other."""
        ft = self._scalar_basis(self.car_t, self.poly_t, np.asarray(x, dtype=float))
        fs = self._scalar_basis(self.car_s, self.poly_s, np.asarray(y, dtype=float))
        spin = np.einsum("zi,zj->ij", self.spin_t, self.spin_s.conj())
        # basis index last so leading point axes broadcast
        terms = np.moveaxis(ft, 0, -1) * np.moveaxis(fs, 0, -1).conj()
        sums = np.array([terms[..., self.order <= n].sum(axis=-1) for n in range(self.nu_max + 1)])
        return sums[..., None, None] * spin

    def coefficients(self, values_s, grid_s: QuadratureGrid) -> np.ndarray:
        """c[nu, zeta] = <nu, zeta, s | Psi> by quadrature on ``grid_s``."""
        fs = self._scalar_basis(self.car_s, self.poly_s, grid_s.x)
        proj = values_s @ self.spin_s.conj().T  # (npts, nzeta)
        return np.einsum("w,nw,wz->nz", grid_s.w, fs.conj(), proj)

    def apply(self, values_s, grid_s: QuadratureGrid, x) -> np.ndarray:
        """Partial sums of the propagated state at ``x``: (nu_max+1, npts, 4)."""
        c = self.coefficients(values_s, grid_s)
        ft = self._scalar_basis(self.car_t, self.poly_t, np.asarray(x, dtype=float))
        out = []
        for n in range(self.nu_max + 1):
            m = self.order <= n
            out.append(np.einsum("nz,nw,zi->wi", c[m], ft[m], self.spin_t))
        return np.array(out)

    def truncation_residuals(self, values_s, grid_s: QuadratureGrid) -> np.ndarray:
        """Norm of the part of Psi(s) not captured at each truncation level.

        Since the basis at t is orthonormal this equals both the projection
        residual at s and the norm deficit of the propagated state.
        """
        c = self.coefficients(values_s, grid_s)
        total = float(grid_s.integrate(np.sum(np.abs(values_s) ** 2, axis=-1)).real)
        kept = np.array([np.sum(np.abs(c[self.order <= n]) ** 2) for n in range(self.nu_max + 1)])
        return np.sqrt(np.clip(total - kept, 0.0, None))


def green_kernel(x, y, t, s, nu_max, traj, germ, spins, hbar=None) -> np.ndarray:
    """4x4 partial sums of the truncated order-0 kernel at (x, y)."""
    if s >= t:
        raise DomainError("green_kernel needs s < t")
    return GreenKernel(traj, germ, spins, t, s, nu_max, hbar).matrix(x, y)
