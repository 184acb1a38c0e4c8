"""Complex germ: complex solutions of the linearized flow along a trajectory.

The columns of B (momentum parts W_j) and C (position parts Z_j) solve

    B' = -lambda_xp B - lambda_xx C,    C' = lambda_pp B + lambda_px C,

and Q = B C^{-1} is the complex quadratic phase of the Gaussian packet.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import PhaseTrajectory, variational_matrices
from .emfield import eval_derivatives
from .errors import CausticError, InvalidGermError, NumericalError
from .odeint import solve

# |det C| below this fraction of its initial value counts as a caustic
CAUSTIC_THRESHOLD = 1e-8
# the conserved structure degrades with |B||C|, so integrate tighter than the orbit
GERM_TOL = (1e-12, 1e-14)


@dataclass(frozen=True)
class GermInit:
    B0: np.ndarray
    C0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "B0", np.asarray(self.B0, dtype=complex).reshape(3, 3))
        object.__setattr__(self, "C0", np.asarray(self.C0, dtype=complex).reshape(3, 3))

    @classmethod
    def default(cls) -> "GermInit":
        return cls(1j * np.eye(3), np.eye(3))


@dataclass
class GermValidation:
    ok: bool
    im_b: np.ndarray
    lagrangian_residual: float
    offdiag_residual: float
    det_ratio: float
    messages: list


def normalization_matrix(B, C) -> np.ndarray:
    """(1/2i)(C^H B - B^H C); Hermitian, constant in time."""
    return (C.conj().T @ B - B.conj().T @ C) / 2j


def lagrangian_matrix(B, C) -> np.ndarray:
    return C.T @ B - B.T @ C


def validate_germ_init(init: GermInit, strict: bool = False, tol: float = 1e-12) -> GermValidation:
    """Check rank, Lagrangian and positive-normalization conditions.

    Returns a :class:`GermValidation`; with ``strict`` a failed check raises
    :class:`InvalidGermError` instead.
    """
    B, C = init.B0, init.C0
    msgs = []
    scale = max(1.0, np.linalg.norm(B) * np.linalg.norm(C))
    nC = np.linalg.norm(C, 2)
    det_ratio = abs(np.linalg.det(C)) / max(nC ** 3, 1e-300)
    if det_ratio <= 1e-12:
        msgs.append("C0 is singular")
    lag = float(np.abs(lagrangian_matrix(B, C)).max())
    if lag > tol * scale:
        msgs.append(f"Lagrangian condition violated (residual {lag:.3e})")
    N = normalization_matrix(B, C)
    diag = np.diag(N)
    off = float(np.abs(N - np.diag(diag)).max())
    if off > tol * scale:
        msgs.append(f"normalization matrix is not diagonal (off-diagonal {off:.3e})")
    if np.abs(diag.imag).max() > tol * scale:
        msgs.append("normalization diagonal is not real")
    im_b = diag.real.copy()
    if np.any(im_b <= 0):
        msgs.append(f"Im b must be positive, got {im_b}")
    res = GermValidation(not msgs, im_b, lag, off, det_ratio, msgs)
    if strict and msgs:
        raise InvalidGermError("; ".join(msgs))
    return res


def q_of(B, C) -> np.ndarray:
    """B C^{-1} without forming the inverse."""
    return np.linalg.solve(C.T, B.T).T


@dataclass(frozen=True)
class GermState:
    t: float
    B: np.ndarray
    C: np.ndarray
    sqrt_detC: complex
    im_b: np.ndarray

    @property
    def Q(self) -> np.ndarray:
        return q_of(self.B, self.C)

    @property
    def detC(self) -> complex:
        return complex(np.linalg.det(self.C))


def q_matrix(state: GermState, check: bool = True, tol: float = 1e-10) -> np.ndarray:
    """Q = B C^{-1}; asserts symmetry and a positive-definite imaginary part."""
    if abs(np.linalg.det(state.C)) == 0.0:
        raise CausticError("singular C", t=state.t)
    Q = q_of(state.B, state.C)
    if check:
        nq = np.linalg.norm(Q)
        if np.linalg.norm(Q - Q.T) > tol * max(nq, 1.0):
            raise NumericalError(f"Q not symmetric at t={state.t}", t=state.t)
        if np.linalg.eigvalsh(0.5 * (Q.imag + Q.imag.T)).min() <= 0:
            raise NumericalError(f"Im Q not positive definite at t={state.t}", t=state.t)
    return Q


def germ_invariants(state: GermState):
    """(||C^T B - B^T C||, (1/2i)(C^H B - B^H C))."""
    return (float(np.linalg.norm(lagrangian_matrix(state.B, state.C))),
            normalization_matrix(state.B, state.C))


def dnu_inverse(nu, state_or_im_b) -> np.ndarray:
    """diag((2 nu_k + 1) / Im b_k)."""
    im_b = getattr(state_or_im_b, "im_b", state_or_im_b)
    nu = np.asarray(nu, dtype=float)
    return np.diag((2 * nu + 1) / np.asarray(im_b, dtype=float))


def germ_rhs_matrices(vm, B, C):
    dB = -vm.xp @ B - vm.xx @ C
    dC = vm.pp @ B + vm.px @ C
    return dB, dC


class GermTrajectory:
    """Germ sampled on the trajectory grid, plus dense output in between.

    ``sqrt_detC`` follows det C continuously: its argument is accumulated
    from small increments, with the interval subdivided whenever an
    increment is not clearly below pi/2.
    """

    def __init__(self, traj: PhaseTrajectory, init: GermInit, im_b, t, y, sol):
        self.traj = traj
        self.init = init
        self.im_b = np.asarray(im_b)
        self.t = np.asarray(t)
        self.B = y[:9].T.reshape(-1, 3, 3)
        self.C = y[9:].T.reshape(-1, 3, 3)
        self._sol = sol
        self.detC = np.linalg.det(self.C)
        self.sqrt_detC = self._track_branch()

    def _bc(self, t):
        y = self._sol(t)
        return y[:9].reshape(3, 3), y[9:].reshape(3, 3)

    def _det_at(self, t):
        return complex(np.linalg.det(self._bc(t)[1]))

    def _arg_increment(self, t0, t1, d0, d1, depth=0):
        inc = float(np.angle(d1 / d0))
        if abs(inc) < 0.5 * np.pi or depth > 30:
            return inc
        tm = 0.5 * (t0 + t1)
        dm = self._det_at(tm)
        return (self._arg_increment(t0, tm, d0, dm, depth + 1)
                + self._arg_increment(tm, t1, dm, d1, depth + 1))

    def _track_branch(self):
        d = self.detC
        phase = np.empty(len(d))
        phase[0] = np.angle(d[0])
        for i in range(1, len(d)):
            phase[i] = phase[i - 1] + self._arg_increment(self.t[i - 1], self.t[i], d[i - 1], d[i])
        self._phase = phase
        return np.sqrt(np.abs(d)) * np.exp(0.5j * phase)

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> GermState:
        return GermState(float(self.t[i]), self.B[i], self.C[i], complex(self.sqrt_detC[i]), self.im_b)

    def at(self, t: float) -> GermState:
        """Germ at an arbitrary time, continuing the branch from the nearest sample."""
        i = int(np.clip(np.searchsorted(self.t, t), 0, len(self.t) - 1))
        if i > 0 and abs(self.t[i - 1] - t) < abs(self.t[i] - t):
            i -= 1
        B, C = self._bc(t)
        d = complex(np.linalg.det(C))
        ph = self._phase[i] + self._arg_increment(self.t[i], t, self.detC[i], d)
        return GermState(float(t), B, C, np.sqrt(abs(d)) * np.exp(0.5j * ph), self.im_b)

    def derivative_at(self, t: float):
        """(B', C') from the variational system at time t."""
        B, C = self._bc(t)
        vm = variational_matrices(self.traj.spec, self.traj.z_at(t), t)
        return germ_rhs_matrices(vm, B, C)

    def Q(self) -> np.ndarray:
        return np.array([q_of(b, c) for b, c in zip(self.B, self.C)])

    def invariant_drift(self):
        """Max Lagrangian residual and max drift of the normalization matrix."""
        N0 = normalization_matrix(self.B[0], self.C[0])
        lag = max(np.linalg.norm(lagrangian_matrix(b, c)) for b, c in zip(self.B, self.C))
        drift = max(np.abs(normalization_matrix(b, c) - N0).max() for b, c in zip(self.B, self.C))
        return float(lag), float(drift)

    def table(self) -> np.ndarray:
        """Columns t, Re/Im of B (row-major), Re/Im of C, Re/Im det C, invariant residuals."""
        N0 = normalization_matrix(self.B[0], self.C[0])
        rows = []
        for i in range(len(self.t)):
            B, C = self.B[i], self.C[i]
            lag = np.linalg.norm(lagrangian_matrix(B, C))
            drift = np.abs(normalization_matrix(B, C) - N0).max()
            rows.append(np.concatenate([[self.t[i]],
                                        np.column_stack([B.real.ravel(), B.imag.ravel()]).ravel(),
                                        np.column_stack([C.real.ravel(), C.imag.ravel()]).ravel(),
                                        [self.detC[i].real, self.detC[i].imag, lag, drift]]))
        return np.array(rows)

    @staticmethod
    def table_header():
        cols = ["t"]
        for name in ("B", "C"):
            for i in range(1, 4):
                for j in range(1, 4):
                    cols += [f"re_{name}{i}{j}", f"im_{name}{i}{j}"]
        return tuple(cols + ["re_detC", "im_detC", "lagrangian_residual", "normalization_drift"])


def integrate_germ(traj: PhaseTrajectory, init: GermInit | None = None, tol=None,
                   t_eval=None) -> GermTrajectory:
    """Solve the variational system along ``traj``.

    Samples default to the trajectory grid.

    Raises
    ------
    InvalidGermError
        Initial data fail :func:`validate_germ_init`.
    CausticError
        |det C| fell below ``CAUSTIC_THRESHOLD`` times its initial value.
    """
    init = init or GermInit.default()
    val = validate_germ_init(init, strict=True)
    spec = traj.spec

    def rhs(t, y):
        B = y[:9].reshape(3, 3)
        C = y[9:].reshape(3, 3)
        fd = eval_derivatives(spec.field, traj.z_at(t)[3:], t, order=2)
        vm = variational_matrices(spec, traj.z_at(t), t, fd)
        dB, dC = germ_rhs_matrices(vm, B, C)
        return np.concatenate([dB.ravel(), dC.ravel()])

    if t_eval is None:
        t_eval = traj.t
    if tol is None:
        tol = GERM_TOL
    y0 = np.concatenate([init.B0.ravel(), init.C0.ravel()])
    res = solve(rhs, traj.t_span, y0, tol, t_eval=t_eval, what="germ")
    germ = GermTrajectory(traj, init, val.im_b, res.t, res.y, res.sol)
    ratio = np.abs(germ.detC) / abs(germ.detC[0])
    if ratio.min() < CAUSTIC_THRESHOLD:
        i = int(np.argmax(ratio < CAUSTIC_THRESHOLD))
        raise CausticError(f"det C collapsed at t={germ.t[i]:.6g}", t=float(germ.t[i]))
    return germ


def _fd_derivative(values, t):
    """d/dt of samples: five-point stencil on uniform grids, second order otherwise.

    Returns (indices, derivatives) for the interior points where the
    stencil fits.
    """
    h = np.diff(t)
    if len(t) >= 5 and np.allclose(h, h[0], rtol=1e-9, atol=0):
        idx = np.arange(2, len(t) - 2)
        d = (values[idx - 2] - 8 * values[idx - 1] + 8 * values[idx + 1] - values[idx + 2]) / (12 * h[0])
        return idx, d
    idx = np.arange(1, len(t) - 1)
    h0 = (t[idx] - t[idx - 1])[:, None, None]
    h1 = (t[idx + 1] - t[idx])[:, None, None]
    d = (-h1 / (h0 * (h0 + h1)) * values[idx - 1] + (h1 - h0) / (h0 * h1) * values[idx]
         + h0 / (h1 * (h0 + h1)) * values[idx + 1])
    return idx, d


def riccati_residual(germ: GermTrajectory) -> float:
    """Max residual of Q' + l_xx + l_xp Q + Q l_px + Q l_pp Q on the sample grid.

    Q' comes from finite differences of the samples, so this checks the
    germ integration independently of the variational right-hand side.
    """
    Qs = germ.Q()
    idx, dQ = _fd_derivative(Qs, germ.t)
    out = 0.0
    for i, dq in zip(idx, dQ):
        t = germ.t[i]
        vm = variational_matrices(germ.traj.spec, germ.traj.z_at(t), t)
        Q = Qs[i]
        r = dq + vm.xx + vm.xp @ Q + Q @ vm.px + Q @ vm.pp @ Q
        out = max(out, float(np.abs(r).max()))
    return out
