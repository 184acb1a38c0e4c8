"""Acceptance criteria, one test each.

Each test appends a PASS/FAIL line that is echoed in the terminal summary
(and printed directly when the module is run as a script).
"""
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from tcdirac.classical import integrate_trajectory  # noqa: E402
from tcdirac.constants import Constants  # noqa: E402
from tcdirac.germ import integrate_germ, riccati_residual  # noqa: E402
from tcdirac.moments import (amatrix_delta2_0, amatrix_form, amatrix_from_germ, delta2_from_germ,  # noqa: E402
                             delta2_ode_residual, integrate_delta2, sigma_from_germ)
from tcdirac.spin import bmt_consistency, integrate_spinor, pi_identity_residuals  # noqa: E402
from tcdirac.verify import (CROSSED_Z0, REFERENCE_FIELDS, REFERENCE_Z0, coherence_scaling, green_checks,  # noqa: E402
                            make_rng, orthonormality_errors, random_kinematic_point, reference_spec,
                            residual_slopes, spin_transport_checks)


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def identity_draws():
    const = Constants(g=2.6)
    rng = make_rng(0)
    t0 = time.perf_counter()
    worst = {}
    for _ in range(200):
        k = random_kinematic_point(rng, const, beta_max=0.95)
        res = pi_identity_residuals(k, rng.normal(size=3), rng.normal(size=3), const)
        for key, v in res.items():
            worst[key] = max(worst.get(key, 0.0), v)
    return worst, time.perf_counter() - t0


def test_criterion_01_projector_identities(identity_draws):
    worst, elapsed = identity_draws
    assert len(worst) == 14
    top = max(worst.values())
    ok = top <= 1e-10 and elapsed < 5.0
    report(1, ok, f"max identity residual {top:.2e} over 200 draws in {elapsed:.2f}s (<= 1e-10, < 5 s)")
    assert top <= 1e-10
    assert elapsed < 5.0


def test_criterion_02_eigenrelation(identity_draws):
    worst, _ = identity_draws
    ok = worst["A4"] <= 1e-10
    report(2, ok, f"eigenrelation residual {worst['A4']:.2e} (<= 1e-10)")
    assert ok


@pytest.fixture(scope="module")
def germ_runs():
    out = {}
    for kind in REFERENCE_FIELDS:
        t0 = time.perf_counter()
        traj = integrate_trajectory(reference_spec(kind), REFERENCE_Z0, (0.0, 10.0), n_samples=2001)
        germ = integrate_germ(traj)
        lag, drift = germ.invariant_drift()
        ratio = float(np.min(np.abs(germ.detC)) / abs(germ.detC[0]))
        out[kind] = dict(germ=germ, lag=lag, drift=drift, ratio=ratio, elapsed=time.perf_counter() - t0)
    return out


def test_criterion_03_germ_conservation(germ_runs):
    lag = max(r["lag"] for r in germ_runs.values())
    drift = max(r["drift"] for r in germ_runs.values())
    ratio = min(r["ratio"] for r in germ_runs.values())
    slowest = max(r["elapsed"] for r in germ_runs.values())
    ok = lag <= 1e-9 and drift <= 1e-9 and ratio >= 1e-8 and slowest < 10.0
    report(3, ok, f"{len(germ_runs)} fields: lagrangian {lag:.2e}, normalization drift {drift:.2e}, "
                  f"min |det C| ratio {ratio:.2e}, slowest {slowest:.2f}s")
    assert ok


def test_criterion_04_riccati(germ_runs):
    worst = max(riccati_residual(r["germ"]) for r in germ_runs.values())
    ok = worst <= 1e-6
    report(4, ok, f"max Riccati residual {worst:.2e} across {len(germ_runs)} fields (<= 1e-6)")
    assert ok


def test_criterion_05_spin_transport():
    rows = {r.id: r for r in spin_transport_checks(Constants(g=2.6), T=20.0)}
    drift = rows["spinor_norm_drift"].value
    eta = rows["eta_moments_vs_spinor"].value
    freq = rows["precession_frequency_rel"].value
    ok = drift <= 1e-10 and eta <= 1e-8 and freq <= 1e-6
    report(5, ok, f"norm drift {drift:.2e}, eta moments vs spinor {eta:.2e}, precession rel error {freq:.2e}")
    assert drift <= 1e-10
    assert eta <= 1e-8
    assert freq <= 1e-6


def test_criterion_06_bmt_exactly_one():
    const = Constants(g=2.6)
    traj = integrate_trajectory(reference_spec("crossed", const), CROSSED_Z0, (0.0, 10.0), n_samples=401)
    rms = bmt_consistency(integrate_spinor(traj, const, ell=(1.0, 0.0, 0.0), zeta=1))
    passing = [c for c, v in rms.items() if v <= 1e-6]
    ok = len(passing) == 1
    report(6, ok, ", ".join(f"{c} RMS {v:.2e}" for c, v in rms.items())
           + f"; consistent: {passing[0] if ok else 'none or both'}")
    assert ok


def test_criterion_07_orthonormality():
    t0 = time.perf_counter()
    errs = orthonormality_errors(T=10.0)
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst <= 1e-6 and elapsed < 60.0
    report(7, ok, f"max Gram defect {worst:.2e} over {len(errs)} fields x 3 times in {elapsed:.1f}s")
    assert worst <= 1e-6
    assert elapsed < 60.0


def test_criterion_08_coherence_scaling():
    h = 0.01
    cs = coherence_scaling(hbar=h)
    pos_ratio = cs[(1, h)][0] / cs[(1, h / 2)][0]
    norm_ratio = cs[(1, h)][1] / cs[(1, h / 2)][1]
    order0 = max(cs[(0, h)][0], cs[(0, h / 2)][0])
    ok = 1.5 <= pos_ratio <= 2.5 and 1.5 <= norm_ratio <= 2.5 and order0 <= 1e-8
    report(8, ok, f"order-1 ratios position {pos_ratio:.3f}, norm {norm_ratio:.3f}; order-0 position {order0:.2e}")
    assert 1.5 <= pos_ratio <= 2.5
    assert 1.5 <= norm_ratio <= 2.5
    assert order0 <= 1e-8


def test_criterion_09_residual_scaling():
    slopes = residual_slopes(hbars=(1e-2, 5e-3, 2.5e-3))
    all_s = np.concatenate([s for _, s in slopes.values()])
    ok = bool(np.all(np.abs(all_s - 1.5) <= 0.2))
    report(9, ok, "residual exponents " + ", ".join(f"{s:.3f}" for s in all_s) + " (1.5 +- 0.2)")
    assert ok


def test_criterion_10_moments_equivalences():
    const = Constants()
    worst_a = worst_b = worst_c = 0.0
    for kind in ("uniform_magnetic", "crossed", "plane_wave"):
        traj = integrate_trajectory(reference_spec(kind, const), REFERENCE_Z0, (0.0, 5.0), n_samples=501)
        germ = integrate_germ(traj)
        worst_a = max(worst_a, delta2_ode_residual(germ, (0, 0, 0), const.hbar))
        g0 = germ.state(0)
        _, direct = integrate_delta2(traj, delta2_from_germ(g0, (0, 0, 0), const.hbar))
        _, via = amatrix_form(traj, amatrix_from_germ(germ.B[0], germ.C[0]),
                              amatrix_delta2_0(g0, (0, 0, 0), const.hbar))
        worst_b = max(worst_b, float(np.abs(direct - via).max()))
        st = germ.state(len(germ) // 2)
        s1 = np.array(sigma_from_germ(st, (1, 0, 0), const.hbar))
        s2 = np.array(sigma_from_germ(st, (1, 0, 0), 2 * const.hbar))
        worst_c = max(worst_c, float(np.abs(s2 - 2 * s1).max()))
    ok = worst_a <= 1e-6 and worst_b <= 1e-8 and worst_c == 0.0
    report(10, ok, f"(a) {worst_a:.2e}, (b) {worst_b:.2e}, (c) doubling defect {worst_c:.1e}")
    assert worst_a <= 1e-6
    assert worst_b <= 1e-8
    assert worst_c == 0.0


def test_criterion_11_green_kernel():
    l2, res = green_checks(nu_max=6)
    mono = bool(np.all(np.diff(res) < 0))
    ok = l2 <= 1e-6 and mono and len(res) == 7
    report(11, ok, f"propagation L2 {l2:.2e}; truncation " + ", ".join(f"{v:.1e}" for v in res))
    assert l2 <= 1e-6
    assert mono


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
