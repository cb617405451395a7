"""Acceptance criteria 1-10, each run at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary) and
then asserts the same condition.
"""

import time

import numpy as np
import pytest

from cosserat_fv import mfem, tpsa, verify
from cosserat_fv.harness import RunConfig, dof_report, run_convergence
from cosserat_fv.material import MaterialField
from cosserat_fv.mesh import compute_geometry, generate_structured
from cosserat_fv.mms import case_cosserat, case_smooth

LAMBDAS = (10.0, 1e2, 1e4, 1e8)
KAPPAS = (1e4, 1e-4)


def record(log, number, passed, detail):
    log[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(log[number])
    return passed


def final_rows(rows):
    """Finest-level row per (method, parameter)."""
    out = {}
    for r in rows:
        out[(r.method, r.param_value)] = r
    return out


def series(rows, method, param):
    return [r for r in rows if r.method == method and r.param_value == param]


@pytest.fixture(scope="module")
def smooth_run():
    t0 = time.perf_counter()
    rows = run_convergence(RunConfig("smooth", base_n=8, levels=4, params=LAMBDAS, family="uniform"))
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def heterogeneous_run():
    return run_convergence(RunConfig("heterogeneous", base_n=8, levels=4, params=KAPPAS, family="interface_half"))


@pytest.fixture(scope="module")
def cosserat_run():
    return run_convergence(RunConfig("cosserat", base_n=9, levels=4, family="interface_thirds"))


@pytest.mark.slow
def test_criterion_01_smooth_rates(smooth_run, acceptance_log):
    rows, elapsed = smooth_run
    fails = []
    for (method, lam), r in final_rows(rows).items():
        if not (r.rate_u >= 1.8 and r.rate_sigma >= 0.9):
            fails.append(f"{method} lambda={lam:g}: rate_u={r.rate_u:.2f} rate_sigma={r.rate_sigma:.2f}")
    ok = not fails and elapsed <= 300.0
    detail = f"runtime {elapsed:.0f} s; " + ("all final rates met" if not fails else "; ".join(fails))
    record(acceptance_log, 1, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_02_incompressible_robustness(smooth_run, acceptance_log):
    rows, _ = smooth_run
    ratios = {}
    for method in ("tpsa", "mfem"):
        at32 = {r.param_value: r.e_u for r in rows if r.method == method and r.n_cells == 2 * 32 * 32}
        ratios[method] = at32[1e8] / at32[10.0]
    ok = all(v <= 1.5 for v in ratios.values())
    detail = ", ".join(f"{m} e_u(1e8)/e_u(10)={v:.3f}" for m, v in ratios.items())
    record(acceptance_log, 2, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_03_heterogeneous(heterogeneous_run, acceptance_log):
    fails, parts = [], []
    for (method, kappa), r in final_rows(heterogeneous_run).items():
        need_u = 1.8 if method == "mfem" else 1.5
        parts.append(f"{method} kappa={kappa:g}: {r.rate_u:.2f}/{r.rate_sigma:.2f}")
        if not (r.rate_u >= need_u and r.rate_sigma >= 0.9):
            fails.append(parts[-1])
    ok = not fails
    detail = "rate_u/rate_sigma " + "; ".join(parts)
    record(acceptance_log, 3, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_04_cosserat(cosserat_run, acceptance_log):
    m = final_rows(cosserat_run)[("mfem", 1.0)]
    t = series(cosserat_run, "tpsa", 1.0)
    e_t = [r.e_u for r in t]
    mfem_ok = m.rate_u >= 1.8 and m.rate_sigma >= 0.9
    tpsa_ok = all(a > b for a, b in zip(e_t, e_t[1:])) and t[-1].rate_u >= 0.5
    detail = (f"mfem rate_u={m.rate_u:.2f} rate_sigma={m.rate_sigma:.2f}; "
              f"tpsa e_u={', '.join(f'{e:.3e}' for e in e_t)} final rate_u={t[-1].rate_u:.2f}")
    record(acceptance_log, 4, mfem_ok and tpsa_ok, detail)
    assert mfem_ok and tpsa_ok, detail


def test_criterion_05_operator_identities(acceptance_log):
    worst = {}
    for d in (2, 3):
        worst[f"adjoint d={d}"] = (verify.adjointness_error(d), 1e-12)
        worst[f"SS* d={d}"] = (verify.double_asym_error(d), 0.0)
        worst[f"S(grad u) d={d}"] = (verify.rotation_identity_error(d), 1e-10)
        for lam in (0.0, 1.0, 1e2, 1e4, 1e6, 1e8):
            worst[f"A round trip d={d} lam={lam:g}"] = (verify.compliance_roundtrip_error(lam, d), 1e-12)
    fails = [f"{k}: {v:.2e}" for k, (v, tol) in worst.items() if not v <= tol]
    ok = not fails
    detail = "all identities within tolerance" if ok else "exceeded: " + "; ".join(fails)
    record(acceptance_log, 5, ok, detail)
    assert ok, detail


def test_criterion_06_two_triangle_oracle(acceptance_log):
    err = verify.two_triangle_error()
    ok = err <= 1e-14
    record(acceptance_log, 6, ok, f"max entry difference {err:.2e} (tol 1e-14)")
    assert ok


def test_criterion_07_patch_test(acceptance_log):
    errs = {fam: verify.patch_test_error(6, fam) for fam in ("uniform", "crisscross", "interface_thirds", "acute")}
    ok = max(errs.values()) <= 1e-10
    record(acceptance_log, 7, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (tol 1e-10)")
    assert ok


def test_criterion_08_mfem_structure(acceptance_log):
    mesh = generate_structured(9, "interface_thirds")
    pts, wq = mfem.quadrature_points(mesh)
    nt, nq, _ = pts.shape
    flat = pts.reshape(-1, 2)

    # symmetry with a varying length scale and nearly incompressible material
    case = case_cosserat()
    src = case.sources(flat)
    ell = case.ell_jet(flat)
    mat = MaterialField.homogeneous(nt, 1.0, 1e8, 0.0)
    sys_c = mfem.assemble_mfem(mesh, mat, src.f.reshape(nt, nq, 2), src.g.reshape(nt, nq),
                               ell.val.reshape(nt, nq), ell.grad.reshape(nt, nq, 2))
    sym = abs(sys_c.matrix - sys_c.matrix.T).max()
    st_c, _ = mfem.solve_mfem(sys_c)

    # ell = 0 in the four-field system: couple stress vanishes
    smooth = case_smooth(10.0)
    src_s = smooth.sources(flat)
    sys_s = mfem.assemble_mfem(mesh, MaterialField.homogeneous(nt, 1.0, 10.0, 0.0),
                               src_s.f.reshape(nt, nq, 2), src_s.g.reshape(nt, nq))
    st_s, _ = mfem.solve_mfem(sys_s)
    omega = mfem.postprocess(sys_s, st_s).omega_max

    cons = 0.0
    for system, state, f in ((sys_c, st_c, src.f), (sys_s, st_s, src_s.f)):
        f_avg = np.einsum("tq,tqd->td", wq, f.reshape(nt, nq, 2)) / wq.sum(axis=1)[:, None]
        cons = max(cons, float(np.abs(mfem.postprocess(system, state).neg_div_sigma - f_avg).max()))
    ok = sym <= 1e-12 and omega <= 1e-9 and cons <= 1e-8
    record(acceptance_log, 8, ok, f"symmetry {sym:.1e}, max|omega| {omega:.1e}, conservation {cons:.1e}")
    assert ok


def test_criterion_09_dof_accounting(acceptance_log, two_triangles):
    tp = dof_report("tpsa", two_triangles)
    mf = dof_report("mfem", two_triangles)
    big = generate_structured(64, "uniform")
    per_cell = dof_report("mfem", big)["per_cell"]
    layout = mfem.FemSpaceLayout.for_mesh(big)
    ok = (tp["per_cell"] == 4 and tp["total"] == 8 and mf["total"] == 31
          and layout.per_edge() == 5 and (layout.n_u + layout.n_r) == 3 * big.n_cells
          and abs(per_cell / 10.5 - 1) <= 0.02)
    record(acceptance_log, 9, ok, f"tpsa 4/cell, mfem 2-triangle {mf['total']}, 64x64 mfem {per_cell:.3f}/cell")
    assert ok


def test_criterion_10_smooth_rotation_sources(acceptance_log):
    pts = np.random.default_rng(10).uniform(0, 1, (100, 2))
    worst = 0.0
    for lam in LAMBDAS:
        src = case_smooth(lam).sources(pts)
        worst = max(worst, float(np.abs(src.g_r).max()), float(np.abs(src.g).max()))
    ok = worst <= 1e-12
    record(acceptance_log, 10, ok, f"max |g_r|, |g| = {worst:.1e} (tol 1e-12)")
    assert ok
