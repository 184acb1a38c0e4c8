"""Thin wrapper around scipy's embedded Runge-Kutta solvers.

All stages integrate with the same 8(5,3) Dormand-Prince pair and keep the
dense output, so later stages can evaluate earlier ones at arbitrary times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StiffnessError

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    # fixed step size; None means adaptive
    fixed_step: float | None = None

    @classmethod
    def coerce(cls, tol) -> "Tolerances":
        if tol is None:
            return cls()
        if isinstance(tol, cls):
            return tol
        rtol, atol = tol
        return cls(float(rtol), float(atol))


def solve(rhs, t_span, y0, tol=None, t_eval=None, what="system"):
    """Integrate ``y' = rhs(t, y)``.

    With ``tol.fixed_step`` set, the error control is switched off by very
    loose tolerances and the step is pinned through ``first_step`` and
    ``max_step``, giving a reproducible fixed-step DOP853 run.

    Raises
    ------
    StiffnessError
        When the step size underflows; carries the failing time.
    """
    tol = Tolerances.coerce(tol)
    t0, t1 = float(t_span[0]), float(t_span[1])
    kw = dict(method="DOP853", dense_output=True, t_eval=t_eval)
    if tol.fixed_step is not None:
        h = float(tol.fixed_step)
        kw.update(rtol=1e3, atol=1e30, first_step=h, max_step=h)
    else:
        kw.update(rtol=tol.rtol, atol=tol.atol)
    y0 = np.asarray(y0)
    res = solve_ivp(rhs, (t0, t1), y0, **kw)
    if res.status != 0:
        t_fail = float(res.t[-1]) if len(res.t) else t0
        raise StiffnessError(f"{what} integration failed at t={t_fail:.6g}: {res.message}", t=t_fail)
    return res
