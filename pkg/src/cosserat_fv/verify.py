"""Fast self-checks of the operator identities and both discretizations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet, mfem, tpsa
from .material import MaterialField
from .mesh import Mesh, compute_geometry, generate_structured
from .tensor_ops import asym, asym_adjoint, asym_adjoint_vector, compliance, frobenius, rot_dim, stiffness

EPS = np.finfo(float).eps

# Two triangles (0,0),(1,0),(1,1) and (0,0),(1,1),(0,1); mu = lam = 1, ell = 0.
# Unknowns ordered (u_x, u_y, r, p) per cell; entries derived by hand from the
# face stencil with ghost cells at boundary face midpoints.
TWO_TRIANGLE_VERTICES = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
TWO_TRIANGLE_CELLS = np.array([[0, 2, 3], [0, 3, 1]])
TWO_TRIANGLE_MATRIX = np.array([
    [-18, 0, .5, .5, 6, 0, -.5, -.5],
    [0, -18, .5, -.5, 0, 6, -.5, .5],
    [.5, .5, -.5, 0, .5, .5, 0, 0],
    [-.5, .5, 0, -7 / 12, -.5, .5, 0, 1 / 12],
    [6, 0, .5, .5, -18, 0, -.5, -.5],
    [0, 6, .5, -.5, 0, -18, -.5, .5],
    [-.5, -.5, 0, 0, -.5, -.5, -.5, 0],
    [.5, -.5, 0, 1 / 12, .5, -.5, 0, -7 / 12],
])


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def _check(name, value, tol) -> Check:
    value = float(value)
    return Check(name, bool(np.isfinite(value) and value <= tol), value, tol)


def two_triangle_mesh() -> Mesh:
    return Mesh.from_cells(TWO_TRIANGLE_VERTICES, TWO_TRIANGLE_CELLS)


def adjointness_error(d: int, samples: int = 10_000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((samples, rot_dim(d)))
    s = rng.standard_normal((samples, d, d))
    lhs = frobenius(asym_adjoint(r, d), s)
    rhs = np.einsum("nk,nk->n", r, asym(s))
    return float(np.abs(lhs - rhs).max())


def double_asym_error(d: int) -> float:
    basis = np.eye(rot_dim(d))
    return float(np.abs(asym(asym_adjoint(basis, d)) - 2.0 * basis).max())


def compliance_roundtrip_error(lam: float, d: int, samples: int = 10_000, seed: int = 0) -> float:
    """``max |A(2 mu tau + lam tr(tau) I) - tau|`` over random ``tau`` and ``mu``."""
    rng = np.random.default_rng(seed)
    tau = rng.standard_normal((samples, d, d))
    mu = rng.uniform(0.5, 2.0, samples)
    lam = np.full(samples, float(lam))
    return float(np.abs(compliance(stiffness(tau, mu, lam), mu, lam) - tau).max())


def rotation_identity_error(d: int, samples: int = 200, seed: int = 0) -> float:
    """``S(grad u) + div(S* u)`` for random quadratic ``u`` via exact differentiation."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, (samples, d))
    xs = jet.variables(pts)
    comps = []
    for _ in range(d):
        c = rng.standard_normal(1 + d + d * d)
        f = c[0] + sum(c[1 + i] * xs[i] for i in range(d))
        f = f + sum(c[1 + d + i * d + j] * xs[i] * xs[j] for i in range(d) for j in range(d))
        comps.append(f)
    grad_u = np.stack([c.grad for c in comps], axis=1)                 # (N, d, d)
    lhs = asym(grad_u)
    # div(S* u)_k = sum_b d/dx_b (S* u)_{kb}; S* u is linear in u
    div = np.zeros_like(lhs)
    for b in range(d):
        div += asym_adjoint_vector(grad_u[:, :, b])[:, :, b]
    return float(np.abs(lhs + div).max())


def two_triangle_error() -> float:
    mesh = two_triangle_mesh()
    geom = compute_geometry(mesh)
    system = tpsa.assemble(mesh, geom, MaterialField.homogeneous(2, 1.0, 1.0, 0.0))
    return float(np.abs(system.matrix.toarray() - TWO_TRIANGLE_MATRIX).max())


def patch_test_error(n: int = 4, family: str = "crisscross", u0=(0.3, -0.7)) -> float:
    mesh = generate_structured(n, family)
    geom = compute_geometry(mesh)
    mat = MaterialField.homogeneous(mesh.n_cells, 1.0, 10.0, 0.5)
    system = tpsa.assemble(mesh, geom, mat, bc=tpsa.TpsaBC.constant(mesh, u0, 0.0))
    state, _ = tpsa.solve(system)
    flux = tpsa.reconstruct_fluxes(system, state)
    return float(max(np.abs(state.u - np.asarray(u0)).max(), np.abs(state.r).max(),
                     np.abs(state.p).max(), np.abs(flux.sigma).max()))


def closure_error(n: int = 5) -> float:
    worst = 0.0
    for family in ("uniform", "crisscross", "acute"):
        mesh = generate_structured(n, family)
        worst = max(worst, float(np.abs(compute_geometry(mesh).closure_residual(mesh)).max()))
    return worst


def mfem_symmetry_error(n: int = 3) -> float:
    mesh = generate_structured(n, "crisscross")
    mat = MaterialField.homogeneous(mesh.n_cells, 1.0, 1e8, 0.3)
    nt, nq = mesh.n_cells, len(mfem.quadrature_points(mesh)[1][0])
    system = mfem.assemble_mfem(mesh, mat, np.ones((nt, nq, 2)), np.ones((nt, nq)))
    m = system.matrix
    return float(abs(m - m.T).max())


def verify_suite() -> list[Check]:
    checks = []
    for d in (2, 3):
        checks.append(_check(f"adjointness <S*r, s> = <r, S s> (d={d})", adjointness_error(d), 1e-12))
        checks.append(_check(f"S S* = 2 I (d={d})", double_asym_error(d), 0.0))
        checks.append(_check(f"S(grad u) = -div(S* u) (d={d})", rotation_identity_error(d), 1e-10))
        for lam in (0.0, 1.0, 1e4, 1e8):
            # the stiffness output carries entries of size lam |tau|, so the
            # recoverable accuracy is relative to that scale
            tol = 64 * EPS * (1.0 + 2.0 * lam)
            checks.append(_check(f"A round trip, lam={lam:g} (d={d})", compliance_roundtrip_error(lam, d), tol))
    checks.append(_check("divergence theorem: sum of |zeta| n over each cell", closure_error(), 1e-13))
    checks.append(_check("TPSA two-triangle matrix vs hand computation", two_triangle_error(), 1e-14))
    checks.append(_check("TPSA patch test (constant displacement)", patch_test_error(), 1e-10))
    checks.append(_check("MFEM matrix symmetry after row negation", mfem_symmetry_error(), 1e-12))
    return checks
