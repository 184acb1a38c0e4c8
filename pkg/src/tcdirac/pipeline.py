"""Stage orchestration for ``tcdirac run``.

Stages run in dependency order; each records its checks.  A failed check
raises, which aborts the run before anything is moved out of staging.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .classical import integrate_trajectory
from .config import Scenario
from .errors import NumericalError, TcdiracError
from .germ import integrate_germ
from .io import StagingDir, write_csv, write_json
from .moments import delta2_from_germ, integrate_moments, MomentTrajectory
from .spin import bmt_residuals, integrate_spinor
from .wavepacket import OBSERVABLES, GreenKernel, build_grid, dirac_tcs, expectation

GERM_INVARIANT_TOL = 1e-9
SPINOR_NORM_TOL = 1e-8
SYMMETRY_TOL = 1e-10


@dataclass
class StageRecord:
    name: str
    status: str = "ok"
    wall_time_s: float | None = None
    checks: dict = dc_field(default_factory=dict)


@dataclass
class RunReport:
    name: str
    config: dict
    stages: list = dc_field(default_factory=list)
    outputs: list = dc_field(default_factory=list)
    status: str = "ok"
    exit_code: int = 0
    message: str = ""

    def as_dict(self, reproducible=False):
        return {
            "name": self.name,
            "status": self.status,
            "exit_code": self.exit_code,
            "message": self.message,
            "version": __version__,
            "stages": [{"name": s.name, "status": s.status,
                        "wall_time_s": None if reproducible else s.wall_time_s,
                        "checks": s.checks} for s in self.stages],
            "outputs": list(self.outputs),
            "config": self.config,
        }


def _needs(outputs):
    out = set(outputs)
    wave = bool(out & {"expectations", "wavefunction", "green"})
    return {
        "germ": wave or bool(out & {"germ", "moments"}),
        "spin": wave or bool(out & {"spin", "eta"}),
        "moments": "moments" in out,
        "wave": wave,
    }


class _Stage:
    def __init__(self, report: RunReport, name: str):
        self.rec = StageRecord(name)
        report.stages.append(self.rec)

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self.rec

    def __exit__(self, exc_type, exc, tb):
        self.rec.wall_time_s = time.perf_counter() - self._t0
        if exc_type is not None:
            self.rec.status = "failed"
        return False


def _check_le(rec, key, value, tol, t=None):
    rec.checks[key] = {"value": float(value), "tol": tol, "passed": bool(value <= tol)}
    if not value <= tol:
        raise NumericalError(f"{rec.name}: {key} = {value:.3e} exceeds {tol:.1e}", t=t)


def run_scenario(sc: Scenario, out_dir, reproducible: bool = False) -> RunReport:
    """Execute the requested stages and write outputs atomically.

    Raises the underlying :class:`TcdiracError` on failure (after filling in
    the report, which the caller may print); no files are written then.
    """
    report = RunReport(sc["name"], sc.raw)
    try:
        with StagingDir(out_dir) as stage:
            _run(sc, report, stage, reproducible)
            report.outputs = sorted(stage.files + ["report.json"])
            write_json(stage.file("report.json"), report.as_dict(reproducible))
    except TcdiracError as err:
        report.status = "failed"
        report.exit_code = err.exit_code
        report.message = str(err)
        raise
    return report


def _run(sc: Scenario, report: RunReport, stage: StagingDir, reproducible: bool):
    spec = sc.spec
    const = spec.constants
    outputs = sc.outputs
    need = _needs(outputs)
    n = int(sc["samples"])
    t0, t1 = sc.t_span
    figs = "figures" in outputs
    sp_cfg = sc["spin"]
    ell = np.asarray(sp_cfg["ell"])
    nu = tuple(sc["nu"])

    with _Stage(report, "trajectory") as rec:
        traj = integrate_trajectory(spec, sc.z0, sc.t_span, sc.tolerances, n_samples=n)
        rec.checks["samples"] = len(traj)
    if "trajectory" in outputs:
        write_csv(stage.file("trajectory.csv"), traj.TABLE_HEADER, traj.table())
    if figs:
        from .plotting import plot_trajectory
        plot_trajectory(traj, stage.file("trajectory.png"))

    germ = None
    if need["germ"]:
        with _Stage(report, "germ") as rec:
            germ = integrate_germ(traj, sc.germ_init)
            lag, drift = germ.invariant_drift()
            scale = max(1.0, float(np.max(np.abs(germ.B)) * np.max(np.abs(germ.C))))
            _check_le(rec, "lagrangian", lag / scale, GERM_INVARIANT_TOL)
            _check_le(rec, "normalization_drift", drift / scale, GERM_INVARIANT_TOL)
            rec.checks["min_detC_ratio"] = float(np.min(np.abs(germ.detC)) / abs(germ.detC[0]))
        if "germ" in outputs:
            write_csv(stage.file("germ.csv"), germ.table_header(), germ.table())
        if figs:
            from .plotting import plot_germ
            plot_germ(germ, stage.file("germ.png"))

    spins = {}
    if need["spin"]:
        with _Stage(report, "spin") as rec:
            zetas = {sp_cfg["zeta"], sp_cfg["zeta_prime"]}
            if "green" in outputs:
                zetas |= {1, -1}
            for z in sorted(zetas, reverse=True):
                spins[z] = integrate_spinor(traj, const, ell=ell, zeta=z, tol=sc.tolerances
                                            if sc.tolerances.fixed_step else None)
                _check_le(rec, f"norm_drift_zeta{z:+d}", spins[z].norm_drift(), SPINOR_NORM_TOL)
        main = spins[sp_cfg["zeta"]]
        if "spin" in outputs:
            header = ("t", "re_u1", "im_u1", "re_u2", "im_u2", "eta1", "eta2", "eta3", "a0", "a1", "a2", "a3",
                      "bmt_residual")
            # the difference stencil needs room on both sides of each sample
            h = min(1e-3, 0.25 * (t1 - t0) / max(n, 2))
            inner = (main.t >= t0 + 2 * h) & (main.t <= t1 - 2 * h)
            res = np.full(len(main.t), np.nan)
            res[inner] = bmt_residuals(main, main.t[inner], "eq_2_30", h)
            rows = np.column_stack([main.t, main.u[:, 0].real, main.u[:, 0].imag, main.u[:, 1].real,
                                    main.u[:, 1].imag, main.eta, main.a0, main.a, res])
            write_csv(stage.file("spin.csv"), header, rows)
        if "eta" in outputs:
            write_csv(stage.file("eta.csv"), ("t", "eta1", "eta2", "eta3"), np.column_stack([main.t, main.eta]))
        if figs:
            from .plotting import plot_eta
            plot_eta(main.t, main.eta, stage.file("eta.png"))

    if need["moments"]:
        with _Stage(report, "moments") as rec:
            d20 = delta2_from_germ(germ.state(0), nu, const.hbar)
            mc = sc["moments"]
            mt = integrate_moments(spec, sc.z0, d20, (sp_cfg["zeta"], sp_cfg["zeta_prime"], ell), sc.t_span,
                                   tol=sc.tolerances if sc.tolerances.fixed_step else None, t_eval=traj.t,
                                   coupling=mc["coupling"], prefactor=mc["prefactor"])
            _check_le(rec, "delta2_symmetry", mt.symmetry_defect(), SYMMETRY_TOL)
        write_csv(stage.file("moments.csv"), MomentTrajectory.TABLE_HEADER, mt.table())
        if figs:
            from .plotting import plot_moments
            plot_moments(mt, stage.file("moments.png"))

    if need["wave"]:
        _wave_stages(sc, report, stage, traj, germ, spins, figs)


def _wave_stages(sc, report, stage, traj, germ, spins, figs):
    const = sc.spec.constants
    t0, t1 = sc.t_span
    nu = tuple(sc["nu"])
    zeta = sc["spin"]["zeta"]
    order = int(sc["order"])
    gcfg = sc["grid"]
    outputs = sc.outputs
    if "expectations" in outputs:
        with _Stage(report, "expectations") as rec:
            records = []
            for t in (t0, t1):
                st = dirac_tcs(traj, germ, spins[zeta], nu, t, order)
                grid = build_grid(st.carrier, gcfg["nodes"], gcfg["scheme"], gcfg["half_width"])
                for obs in OBSERVABLES:
                    v = expectation(obs, st, grid)
                    records.append({"observable": obs, "t": t, "value_re": np.real(v), "value_im": np.imag(v),
                                    "grid": {"scheme": grid.scheme, "nodes": grid.nodes}, "nu": list(nu),
                                    "zeta": zeta, "order": order, "hbar": const.hbar})
                norm = next(r["value_re"] for r in records if r["observable"] == "norm" and r["t"] == t)
                if order == 0:
                    _check_le(rec, f"norm_defect_t{t:g}", abs(norm - 1.0), 1e-6, t=t)
        write_json(stage.file("expectations.json"), records)

    if "wavefunction" in outputs:
        with _Stage(report, "wavefunction") as rec:
            sl = sc["slice"]
            ax = int(sl["axis"])
            st = dirac_tcs(traj, germ, spins[zeta], nu, t1, order)
            width = sl["half_width"] * math.sqrt(const.hbar)
            s = np.linspace(-width, width, int(sl["points"]))
            x = np.tile(st.carrier.x, (len(s), 1))
            x[:, ax] += s
            psi = st(x)
            rec.checks["points"] = len(s)
        header = ["x1", "x2", "x3"]
        for i in range(1, 5):
            header += [f"re_psi{i}", f"im_psi{i}"]
        cols = [x]
        for i in range(4):
            cols += [psi[:, i].real[:, None], psi[:, i].imag[:, None]]
        write_csv(stage.file("wavefunction.csv"), header, np.hstack(cols))
        if figs:
            from .plotting import plot_wavefunction
            plot_wavefunction(x[:, ax], psi, stage.file("wavefunction.png"), ax)

    if "green" in outputs:
        with _Stage(report, "green") as rec:
            gc = sc["green"]
            s = gc["s"] if gc["s"] is not None else t0 + 0.25 * (t1 - t0)
            nu_max = int(sc["nu_max"])
            ground_s = dirac_tcs(traj, germ, spins[zeta], (0, 0, 0), s)
            ground_t = dirac_tcs(traj, germ, spins[zeta], (0, 0, 0), t1)
            grid_s = build_grid(ground_s.carrier, gcfg["nodes"])
            grid_t = build_grid(ground_t.carrier, gcfg["nodes"])
            kern = GreenKernel(traj, germ, {1: spins[1], -1: spins[-1]}, t1, s, nu_max)
            prop = kern.apply(ground_s(grid_s.x), grid_s, grid_t.x)[0]
            diff = prop - ground_t(grid_t.x)
            l2 = float(np.sqrt(grid_t.integrate(np.sum(np.abs(diff) ** 2, axis=1)).real))
            _check_le(rec, "propagation_l2", l2, 1e-6)
            shift = np.zeros(3)
            shift[0] = gc["displacement"] * math.sqrt(const.hbar)
            res = kern.truncation_residuals(ground_s(grid_s.x - shift), grid_s)
            rec.checks["monotone_truncation"] = bool(np.all(np.diff(res) <= 0))
        write_json(stage.file("green.json"), {"t": t1, "s": s, "nu_max": nu_max, "propagation_l2": l2,
                                              "displacement": shift[0], "truncation_residuals": res})
        if figs:
            from .plotting import plot_green
            plot_green(res, stage.file("green.png"))
