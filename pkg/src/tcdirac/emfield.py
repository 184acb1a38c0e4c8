"""External electromagnetic field models.

Every model is stored as four scalar components ``(Phi, A1, A2, A3)``; each
component knows how to evaluate any mixed space/time derivative of itself,
so potentials, fields and derivative tensors all come from one code path.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, UnsupportedOrderError

MAX_ORDER = 3
MAX_POLY_DEGREE = 4

# Levi-Civita symbol, used for curl and its derivatives
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in itertools.permutations(range(3)):
    LEVI_CIVITA[_i, _j, _k] = np.linalg.det(np.eye(3)[[_i, _j, _k]])


def _falling(n: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(n, dtype=float)
    for q in range(k):
        out = out * (n - q)
    return out


class _PolyComponent:
    """sum_n c_n(t) x^a y^b z^c, with c_n cubic in t."""

    def __init__(self, powers, coeffs):
        self.powers = np.asarray(powers, dtype=int).reshape(-1, 3)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1, 4)
        self._cache: dict = {}

    def _derived(self, m, dt):
        key = (tuple(m), dt)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        fac = np.ones(len(self.powers))
        for ax in range(3):
            fac *= _falling(self.powers[:, ax], m[ax])
        pw = self.powers - np.asarray(m)
        keep = (fac != 0) & np.all(pw >= 0, axis=1)
        n = np.arange(4)
        tfac = _falling(n + dt, dt)
        cf = np.zeros((len(self.powers), 4))
        if dt < 4:
            cf[:, : 4 - dt] = self.coeffs[:, dt:] * tfac[: 4 - dt]
        cf = cf * fac[:, None]
        hit = (pw[keep], cf[keep])
        self._cache[key] = hit
        return hit

    def __call__(self, x, t, m=(0, 0, 0), dt=0):
        pw, cf = self._derived(m, dt)
        x = np.asarray(x, dtype=float)
        if len(pw) == 0:
            return np.zeros(x.shape[:-1])
        ct = cf @ (t ** np.arange(4.0))
        mono = np.prod(x[..., None, :] ** pw, axis=-1)
        return mono @ ct


class _CosComponent:
    """amp * cos(k.x - omega*t)."""

    def __init__(self, amp, kvec, omega):
        self.amp = float(amp)
        self.kvec = np.asarray(kvec, dtype=float)
        self.omega = float(omega)

    def __call__(self, x, t, m=(0, 0, 0), dt=0):
        x = np.asarray(x, dtype=float)
        theta = x @ self.kvec - self.omega * t
        n = sum(m) + dt
        scale = self.amp * np.prod(self.kvec ** np.asarray(m)) * (-self.omega) ** dt
        return scale * np.cos(theta + 0.5 * math.pi * n)


def _poly(terms):
    """terms: iterable of ((a, b, c), (c0, c1, c2, c3))."""
    terms = list(terms)
    if not terms:
        return _PolyComponent(np.zeros((0, 3)), np.zeros((0, 4)))
    pw, cf = zip(*terms)
    return _PolyComponent(pw, cf)


def _const(v):
    return (v, 0.0, 0.0, 0.0)


def _linear_potential(coef):
    """sum_i coef[i] x_i."""
    return _poly(((tuple(np.eye(3, dtype=int)[i]), _const(coef[i])) for i in range(3) if coef[i] != 0))


def _magnetic_vector_potential(H, gauge):
    Hx, Hy, Hz = H
    X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    if gauge == "symmetric":
        # A = H x r / 2
        comps = [
            [(Z, _const(0.5 * Hy)), (Y, _const(-0.5 * Hz))],
            [(X, _const(0.5 * Hz)), (Z, _const(-0.5 * Hx))],
            [(Y, _const(0.5 * Hx)), (X, _const(-0.5 * Hy))],
        ]
    elif gauge == "landau":
        comps = [
            [(Z, _const(Hy)), (Y, _const(-Hz))],
            [(Z, _const(-Hx))],
            [],
        ]
    else:
        raise ConfigurationError(f"unknown gauge {gauge!r}")
    return [_poly(t for t in c if t[1][0] != 0) for c in comps]


def _build_zero(params, gauge, c):
    return [_poly([]) for _ in range(4)]


def _build_uniform_magnetic(params, gauge, c):
    return [_poly([])] + _magnetic_vector_potential(params, gauge)


def _build_uniform_electric(params, gauge, c):
    return [_linear_potential(-np.asarray(params))] + [_poly([]) for _ in range(3)]


def _build_crossed(params, gauge, c):
    return [_linear_potential(-np.asarray(params[:3]))] + _magnetic_vector_potential(params[3:], gauge)


def _build_harmonic(params, gauge, c):
    k = params[0]
    phi = _poly(((tuple(2 * np.eye(3, dtype=int)[i]), _const(0.5 * k)) for i in range(3)))
    return [phi] + [_poly([]) for _ in range(3)]


def _build_plane_wave(params, gauge, c):
    a0, k = params
    return [_poly([]), _CosComponent(a0, (0.0, 0.0, k), c * k), _poly([]), _poly([])]


def _build_custom(params, gauge, c):
    if len(params) % 8:
        raise ConfigurationError("custom_polynomial params come in groups of 8: "
                                 "(component, a, b, c, c0, c1, c2, c3)")
    terms = [[] for _ in range(4)]
    for grp in np.asarray(params, dtype=float).reshape(-1, 8):
        comp = grp[0]
        pw = grp[1:4]
        if comp not in (0, 1, 2, 3):
            raise ConfigurationError(f"custom_polynomial component must be 0..3, got {comp}")
        if np.any(pw < 0) or np.any(pw != np.round(pw)):
            raise ConfigurationError(f"custom_polynomial powers must be nonnegative integers, got {pw}")
        if pw.sum() > MAX_POLY_DEGREE:
            raise ConfigurationError(f"custom_polynomial total degree must be <= {MAX_POLY_DEGREE}")
        terms[int(comp)].append((tuple(int(v) for v in pw), tuple(grp[4:])))
    return [_poly(t) for t in terms]


@dataclass(frozen=True)
class CatalogEntry:
    kind: str
    params: tuple
    description: str
    builder: Callable = dc_field(repr=False, compare=False)
    variadic: bool = False


_CATALOG = (
    CatalogEntry("zero", (), "no field", _build_zero),
    CatalogEntry("uniform_magnetic", ("Hx", "Hy", "Hz"),
                 "constant H; symmetric (A = H x r/2) or landau gauge", _build_uniform_magnetic),
    CatalogEntry("uniform_electric", ("Ex", "Ey", "Ez"),
                 "constant E from Phi = -E.r", _build_uniform_electric),
    CatalogEntry("crossed", ("Ex", "Ey", "Ez", "Hx", "Hy", "Hz"),
                 "constant E and H superposed", _build_crossed),
    CatalogEntry("harmonic_scalar", ("k",), "Phi = k|r|^2/2", _build_harmonic),
    CatalogEntry("plane_wave", ("a0", "k"),
                 "A_x = a0 cos(k z - c k t), linear polarization along x", _build_plane_wave),
    CatalogEntry("custom_polynomial", ("component", "a", "b", "c", "c0", "c1", "c2", "c3"),
                 "sum of c(t) x^a y^b z^c terms (degree <= 4), c(t) = c0 + c1 t + c2 t^2 + c3 t^3; "
                 "component 0 is Phi, 1..3 are A; params repeat in groups of 8",
                 _build_custom, variadic=True),
)
_BY_KIND = {e.kind: e for e in _CATALOG}


def builtin_catalog():
    """List of (kind, parameter names, description)."""
    return [(e.kind, e.params, e.description) for e in _CATALOG]


@dataclass(frozen=True)
class FieldModel:
    """Immutable analytic field model.

    Parameters
    ----------
    kind : str
        Catalog key, see :func:`builtin_catalog`.
    params : sequence of float
        Model parameters in Gaussian units.
    gauge : {"symmetric", "landau"}
        Only used by models with a uniform magnetic part.
    c : float
        Speed of light (enters plane-wave dispersion and E = -dA/dt/c).
    """

    kind: str
    params: tuple = ()
    gauge: str = "symmetric"
    c: float = 1.0
    analytic = True

    def __post_init__(self):
        entry = _BY_KIND.get(self.kind)
        if entry is None:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")
        params = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", params)
        if not entry.variadic and len(params) != len(entry.params):
            raise ConfigurationError(
                f"field {self.kind!r} expects {len(entry.params)} params {entry.params}, got {len(params)}")
        if not all(math.isfinite(v) for v in params):
            raise ConfigurationError("field params must be finite")
        if self.gauge not in ("symmetric", "landau"):
            raise ConfigurationError(f"unknown gauge {self.gauge!r}")
        object.__setattr__(self, "_components", entry.builder(params, self.gauge, self.c))

    def component(self, idx: int, x, t, m=(0, 0, 0), dt=0):
        """Mixed derivative d^m/dx^m d^dt/dt^dt of component idx (0 = Phi)."""
        return self._components[idx](x, t, m, dt)


class CallableField:
    """Field defined by an arbitrary potentials callable.

    Derivatives are obtained by nested central differences, so this is also
    the reference path used to cross-check the analytic catalog.
    """

    analytic = False
    kind = "callable"

    def __init__(self, potentials: Callable, c: float = 1.0):
        self._potentials = potentials
        self.c = c

    def potentials(self, x, t):
        phi, a = self._potentials(np.asarray(x, dtype=float), t)
        return float(phi), np.asarray(a, dtype=float)


@dataclass
class FieldDerivatives:
    """Derivative tensors at one point.

    ``phi[k]`` has shape ``(3,)*k``; ``a[k]`` has shape ``(3,)+(3,)*k`` with the
    component first, so ``a[1][i, j] = dA_i/dx_j``.  ``e[1][i, j] = dE_i/dx_j``
    and likewise for ``h``.  ``phi_t``/``a_t`` are first time derivatives.
    """

    order: int
    phi: list
    a: list
    e: list
    h: list
    phi_t: float = 0.0
    a_t: np.ndarray = dc_field(default_factory=lambda: np.zeros(3))


def _multi_index(idx):
    m = [0, 0, 0]
    for i in idx:
        m[i] += 1
    return tuple(m)


def _tensor(field, comp, x, t, k, dt=0):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape[:-1] + (3,) * k)
    done = {}
    for idx in itertools.product(range(3), repeat=k):
        m = _multi_index(idx)
        if m not in done:
            done[m] = field.component(comp, x, t, m, dt)
        out[(...,) + idx] = done[m]
    return out


def _check(field):
    if not getattr(field, "analytic", False) and not isinstance(field, CallableField):
        raise ConfigurationError(f"not a field model: {field!r}")


def eval_potentials(field, x, t=0.0):
    """Scalar and vector potential at ``x`` (shape ``(..., 3)``).

    Returns
    -------
    phi : ndarray, shape (...)
    A : ndarray, shape (..., 3)
    """
    _check(field)
    if isinstance(field, CallableField):
        return field.potentials(x, t)
    x = np.asarray(x, dtype=float)
    phi = field.component(0, x, t)
    a = np.stack([field.component(i, x, t) for i in (1, 2, 3)], axis=-1)
    return phi, a


def eval_fields(field, x, t=0.0):
    """E = -grad Phi - (1/c) dA/dt and H = curl A at ``x``."""
    _check(field)
    if isinstance(field, CallableField):
        d = fd_derivatives(field, x, t, 1)
        return d.e[0], d.h[0]
    x = np.asarray(x, dtype=float)
    grad_phi = _tensor(field, 0, x, t, 1)
    a_t = np.stack([field.component(i, x, t, dt=1) for i in (1, 2, 3)], axis=-1)
    jac = np.stack([_tensor(field, i, x, t, 1) for i in (1, 2, 3)], axis=-2)  # [..., i, j] = d_j A_i
    e = -grad_phi - a_t / field.c
    h = np.einsum("ijk,...kj->...i", LEVI_CIVITA, jac)
    return e, h


def eval_derivatives(field, x, t=0.0, order: int = 2, method: str = "auto") -> FieldDerivatives:
    """Spatial derivative tensors of Phi and A up to ``order``.

    E and H with their first spatial derivatives are always included.
    ``method`` is "analytic", "fd" or "auto" (analytic when the model
    supports it).
    """
    _check(field)
    if not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
    if method == "auto":
        method = "analytic" if field.analytic else "fd"
    if method == "fd":
        return fd_derivatives(field, x, t, order)
    if not field.analytic:
        raise ConfigurationError("analytic derivatives unavailable for this field")
    x = np.asarray(x, dtype=float)
    kmax = max(order, 2)
    phi = [_tensor(field, 0, x, t, k) for k in range(kmax + 1)]
    a = [np.stack([_tensor(field, i, x, t, k) for i in (1, 2, 3)]) for k in range(kmax + 1)]
    a_t = np.array([field.component(i, x, t, dt=1) for i in (1, 2, 3)])
    a_tx = np.stack([_tensor(field, i, x, t, 1, dt=1) for i in (1, 2, 3)])
    return _assemble(order, phi, a, float(field.component(0, x, t, dt=1)), a_t, a_tx, field.c)


def _assemble(order, phi, a, phi_t, a_t, a_tx, c):
    e0 = -phi[1] - a_t / c
    e1 = -phi[2] - a_tx / c
    h0 = np.einsum("ijk,kj->i", LEVI_CIVITA, a[1])
    h1 = np.einsum("ijk,kjl->il", LEVI_CIVITA, a[2])
    return FieldDerivatives(order=order, phi=list(phi[: order + 1]), a=list(a[: order + 1]),
                            e=[e0, e1], h=[h0, h1], phi_t=phi_t, a_t=a_t)


def _nested_fd(f, x, k, h):
    """k-th derivative tensor of f (returning an array) by nested central differences."""
    if k == 0:
        return np.asarray(f(x), dtype=float)
    out = []
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = h
        out.append((_nested_fd(f, x + dx, k - 1, h) - _nested_fd(f, x - dx, k - 1, h)) / (2 * h))
    # derivative index goes last
    return np.moveaxis(np.array(out), 0, -1)


def fd_derivatives(field, x, t=0.0, order: int = 2, h: float | None = None) -> FieldDerivatives:
    """Finite-difference counterpart of :func:`eval_derivatives`.

    Step ``h = 1e-4 max(1, |x|)`` per nesting level.  Accuracy degrades
    with order: roughly 1e-8 relative for first, 1e-6 for second and 1e-3
    for third derivatives of O(1) smooth fields.
    """
    if not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-4 * max(1.0, float(np.linalg.norm(x)))

    def pot(y, tt=t):
        phi, a = eval_potentials(field, y, tt)
        return np.concatenate([[phi], a])

    kmax = max(order, 2)
    tens = [_nested_fd(pot, x, k, h) for k in range(kmax + 1)]
    phi = [tn[0] for tn in tens]
    a = [tn[1:] for tn in tens]
    dt_pot = (pot(x, t + h) - pot(x, t - h)) / (2 * h)
    dt_jac = (_nested_fd(lambda y: pot(y, t + h), x, 1, h) - _nested_fd(lambda y: pot(y, t - h), x, 1, h)) / (2 * h)
    return _assemble(order, phi, a, float(dt_pot[0]), dt_pot[1:], dt_jac[1:], field.c)


def make_field(kind: str, params: Sequence[float] = (), gauge: str = "symmetric", c: float = 1.0) -> FieldModel:
    return FieldModel(kind, tuple(params), gauge, c)
