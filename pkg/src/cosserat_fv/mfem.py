"""Lowest-order mixed finite element method for 2D Cosserat elasticity.

Unknowns are the stress ``sigma`` (one BDM1 field per row), the scaled couple
stress ``omega_ell`` (RT0), the displacement ``u`` (P0 per component) and the
rotation ``r_s`` (P0). The discrete problem reads

    (A sigma, s~) + (u, div s~) - (r_s, S s~)         = 0
    ((2 mu)^-1 omega_ell, w~) + (r_s, div(ell w~))     = 0
    (-div sigma, u~)                                   = (f, u~)
    -(div(ell omega_ell), r~) + (S sigma, r~)          = (g, r~)

and the last two rows are negated so that the matrix is symmetric.

Global numbering: stress DOF ``(edge * 2 + row) * 2 + moment``, then one
couple-stress DOF per edge, then ``u`` as ``2 * cell + component``, then one
rotation per cell. Edge normals point from the lower to the higher vertex
index rotated clockwise, ``n = (t_y, -t_x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sps

from .material import MaterialField
from .mesh import Mesh, MeshGeometry
from .quadrature import gauss_segment, triangle_rule
from .solver_core import SolveReport, TripletMatrix, compress, solve as linear_solve
from .tensor_ops import compliance_factor

REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# local edge e joins local vertices LOCAL_EDGES[e] and is opposite vertex e
LOCAL_EDGES = ((1, 2), (0, 2), (0, 1))
QUAD_DEGREE = 4


# -- reference elements ----------------------------------------------------------


def _rot(t):
    return np.array([t[1], -t[0]])


def _monomials(kind, x):
    """Monomial vector fields at points ``x`` (N, 2); shape (n_mono, N, 2)."""
    one, zero = np.ones(len(x)), np.zeros(len(x))
    if kind == "BDM1":
        s = [(one, zero), (x[:, 0], zero), (x[:, 1], zero),
             (zero, one), (zero, x[:, 0]), (zero, x[:, 1])]
    elif kind == "RT0":
        s = [(one, zero), (zero, one), (x[:, 0], x[:, 1])]
    else:
        raise ValueError(f"no vector monomials for {kind!r}")
    return np.array([np.stack(c, axis=1) for c in s])


_MONO_DIV = {"BDM1": np.array([0.0, 1.0, 0.0, 0.0, 0.0, 1.0]), "RT0": np.array([0.0, 0.0, 2.0])}


def _moments(kind):
    return (0, 1) if kind == "BDM1" else (0,)


def dof_functionals(kind: str, fields) -> np.ndarray:
    """Apply the edge-moment functionals to vector fields.

    ``fields`` maps points (N, 2) to an array (n_fields, N, 2). Functional
    ``(e, m)`` is the integral over local edge ``e`` of ``v . n_e`` times the
    Legendre polynomial of degree ``m`` in the edge parameter, with ``n_e`` the
    clockwise-rotated tangent scaled by the edge length.
    """
    s, w = gauss_segment(3)
    rows = []
    for a, b in LOCAL_EDGES:
        t = REF_VERTS[b] - REF_VERTS[a]
        pts = REF_VERTS[a] + s[:, None] * t
        vn = fields(pts) @ _rot(t)
        for m in _moments(kind):
            leg = np.ones_like(s) if m == 0 else 2.0 * s - 1.0
            rows.append(vn @ (w * leg))
    return np.array(rows)


@lru_cache(maxsize=None)
def _coefficients(kind: str) -> np.ndarray:
    dmat = dof_functionals(kind, lambda p: _monomials(kind, p))
    return np.linalg.inv(dmat)


def reference_basis(kind: str, points) -> tuple[np.ndarray, np.ndarray]:
    """Basis values ``(n_basis, N, 2)`` (or ``(1, N)`` for P0) and divergences.

    BDM1 has 6 functions ordered ``e * 2 + m``; RT0 has 3 ordered by edge.
    Divergences are constant per function.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if kind == "P0":
        return np.ones((1, len(points))), np.zeros(1)
    coef = _coefficients(kind)
    mono = _monomials(kind, points)
    return np.einsum("pi,pnd->ind", coef, mono), coef.T @ _MONO_DIV[kind]


# -- layout --------------------------------------------------------------------


@dataclass(frozen=True)
class FemSpaceLayout:
    n_edges: int
    n_cells: int
    three_field: bool = False

    @property
    def n_sigma(self) -> int:
        return 4 * self.n_edges

    @property
    def n_omega(self) -> int:
        return 0 if self.three_field else self.n_edges

    @property
    def n_u(self) -> int:
        return 2 * self.n_cells

    @property
    def n_r(self) -> int:
        return self.n_cells

    @property
    def offsets(self) -> tuple[int, int, int, int]:
        return (0, self.n_sigma, self.n_sigma + self.n_omega, self.n_sigma + self.n_omega + self.n_u)

    @property
    def total(self) -> int:
        return self.n_sigma + self.n_omega + self.n_u + self.n_r

    def per_edge(self) -> int:
        return 4 + (0 if self.three_field else 1)

    @classmethod
    def for_mesh(cls, mesh: Mesh, three_field: bool = False) -> "FemSpaceLayout":
        return cls(mesh.n_faces, mesh.n_cells, three_field)


def dof_count(mesh: Mesh, three_field: bool = False) -> int:
    return FemSpaceLayout.for_mesh(mesh, three_field).total


# -- element geometry --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElementMaps:
    """Affine maps ``x = x0 + J xhat`` of every cell and edge orientation signs."""

    x0: np.ndarray       # (T, 2)
    jac: np.ndarray      # (T, 2, 2)
    det: np.ndarray      # (T,)
    edge_sign: np.ndarray  # (T, 3): +1 if local edge runs low -> high global vertex

    @classmethod
    def build(cls, mesh: Mesh) -> "ElementMaps":
        v = mesh.vertices[mesh.cells]
        jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = np.linalg.det(jac)
        sign = np.empty((mesh.n_cells, 3))
        for e, (a, b) in enumerate(LOCAL_EDGES):
            sign[:, e] = np.where(mesh.cells[:, a] < mesh.cells[:, b], 1.0, -1.0)
        return cls(v[:, 0], jac, det, sign)

    def to_physical(self, ref_points) -> np.ndarray:
        """Map reference points (N, 2) into every cell: (T, N, 2)."""
        return self.x0[:, None, :] + np.einsum("tij,nj->tni", self.jac, ref_points)

    def piola(self, values) -> np.ndarray:
        """Contravariant Piola map of reference values (B, N, 2) -> (T, B, N, 2)."""
        return np.einsum("tij,bnj->tbni", self.jac, values) / self.det[:, None, None, None]

    def bdm_signs(self) -> np.ndarray:
        # moment 0 follows the edge normal; the degree-1 moment is invariant
        # because reversing the edge flips both the normal and the Legendre weight
        s = np.ones((len(self.det), 6))
        s[:, 0::2] = self.edge_sign
        return s


def quadrature_points(mesh: Mesh, degree: int = QUAD_DEGREE) -> tuple[np.ndarray, np.ndarray]:
    """Physical quadrature points (T, nq, 2) and weights (T, nq) including |K|."""
    qp, qw = triangle_rule(degree)
    maps = ElementMaps.build(mesh)
    return maps.to_physical(qp), 0.5 * maps.det[:, None] * qw[None, :]


# -- assembly --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MfemSystem:
    matrix: sps.csr_matrix
    rhs: np.ndarray
    layout: FemSpaceLayout
    mesh: Mesh
    maps: ElementMaps
    materials: MaterialField


@dataclass(frozen=True, eq=False)
class MfemState:
    """Coefficient vector split as (sigma | omega_ell | u | r_s)."""

    vector: np.ndarray
    layout: FemSpaceLayout

    def __post_init__(self):
        if len(self.vector) != self.layout.total:
            raise ValueError(f"state length {len(self.vector)} does not match layout {self.layout.total}")

    def _block(self, k):
        o = self.layout.offsets + (self.layout.total,)
        return self.vector[o[k]:o[k + 1]]

    @property
    def sigma(self) -> np.ndarray:
        """Edge coefficients, shape (E, 2 rows, 2 moments)."""
        return self._block(0).reshape(-1, 2, 2)

    @property
    def omega(self) -> np.ndarray:
        return self._block(1)

    @property
    def u(self) -> np.ndarray:
        return self._block(2).reshape(-1, 2)

    @property
    def rot(self) -> np.ndarray:
        return self._block(3)


def _local_sigma_dofs(mesh: Mesh) -> np.ndarray:
    """Global stress DOF of local index ``a * 6 + e * 2 + m`` for every cell: (T, 12)."""
    f = mesh.cell_faces
    out = np.empty((mesh.n_cells, 2, 3, 2), dtype=np.int64)
    for a in range(2):
        for m in range(2):
            out[:, a, :, m] = (f * 2 + a) * 2 + m
    return out.reshape(mesh.n_cells, 12)


def _local_bases(mesh: Mesh, maps: ElementMaps, degree: int):
    qp, qw = triangle_rule(degree)
    bdm, bdm_div = reference_basis("BDM1", qp)
    rt, rt_div = reference_basis("RT0", qp)
    sb = maps.bdm_signs()
    phi = maps.piola(bdm) * sb[:, :, None, None]              # (T, 6, nq, 2)
    div_phi = bdm_div[None, :] / maps.det[:, None] * sb      # (T, 6)
    psi = maps.piola(rt) * maps.edge_sign[:, :, None, None]   # (T, 3, nq, 2)
    div_psi = rt_div[None, :] / maps.det[:, None] * maps.edge_sign
    wq = 0.5 * maps.det[:, None] * qw[None, :]                # (T, nq)
    return phi, div_phi, psi, div_psi, wq


def assemble_mfem(mesh: Mesh, materials: MaterialField, f_q=None, g_q=None,
                  ell_q=None, grad_ell_q=None, three_field: bool = False,
                  degree: int = QUAD_DEGREE) -> MfemSystem:
    """Assemble the symmetric saddle-point system.

    ``f_q`` (T, nq, 2), ``g_q`` (T, nq), ``ell_q`` (T, nq) and ``grad_ell_q``
    (T, nq, 2) are values at the points returned by :func:`quadrature_points`
    with the same ``degree``. Omitted ``ell`` data falls back to the cell
    constants in ``materials`` with zero gradient. ``three_field`` drops the
    couple stress and requires ``ell = 0``.
    """
    if mesh.dim != 2:
        raise ValueError("only 2D meshes are supported")
    if degree < 4:
        raise ValueError(f"quadrature degree {degree} is too low for the P1 x P1 mass terms with varying ell; use 4")
    maps = ElementMaps.build(mesh)
    layout = FemSpaceLayout.for_mesh(mesh, three_field)
    phi, div_phi, psi, div_psi, wq = _local_bases(mesh, maps, degree)
    nt, nq = wq.shape
    mu = materials.mu
    c = compliance_factor(mu, materials.lam_inv, 2)

    if ell_q is None:
        ell_q = np.repeat(materials.ell[:, None], nq, axis=1)
        grad_ell_q = np.zeros((nt, nq, 2))
    elif grad_ell_q is None:
        raise ValueError("grad_ell_q is required together with ell_q")
    if three_field and np.any(ell_q != 0):
        raise ValueError("the three-field formulation requires ell = 0")

    # sigma-sigma: (1/2mu) [delta_ab phi_i.phi_j - c phi_i[a] phi_j[b]]
    mass = np.einsum("tq,tiqd,tjqd->tij", wq, phi, phi)
    trace = np.einsum("tq,tiqa,tjqb->taibj", wq, phi, phi)
    a_ss = -c[:, None, None, None, None] * trace
    for a in range(2):
        a_ss[:, a, :, a, :] += mass
    a_ss = (a_ss / (2.0 * mu)[:, None, None, None, None]).reshape(nt, 12, 12)

    # u-sigma: u_b int div phi_(b, i)
    area = 0.5 * maps.det
    b_u = np.zeros((nt, 2, 2, 6))
    for a in range(2):
        b_u[:, a, a, :] = area[:, None] * div_phi
    b_u = b_u.reshape(nt, 2, 12)

    # r-sigma: -(r_s, S Phi), S(e_0 x phi) = -phi[1], S(e_1 x phi) = phi[0]
    int_phi = np.einsum("tq,tiqd->tid", wq, phi)
    b_r = np.concatenate([int_phi[:, :, 1], -int_phi[:, :, 0]], axis=1)

    sig = _local_sigma_dofs(mesh)
    off = layout.offsets
    udofs = off[2] + 2 * np.arange(nt)[:, None] + np.arange(2)[None, :]
    rdofs = off[3] + np.arange(nt)[:, None]

    t = TripletMatrix((layout.total, layout.total))
    t.add_block(sig, sig, a_ss)
    t.add_block(udofs, sig, b_u)
    t.add_block(sig, udofs, b_u.transpose(0, 2, 1))
    t.add_block(rdofs, sig, b_r[:, None, :])
    t.add_block(sig, rdofs, b_r[:, :, None])
    if not three_field:
        wdofs = off[1] + mesh.cell_faces
        a_ww = np.einsum("tq,tiqd,tjqd->tij", wq, psi, psi) / (2.0 * mu)[:, None, None]
        c_rw = (np.einsum("tq,tqd,tiqd->ti", wq, grad_ell_q, psi)
                + np.einsum("tq,tq->t", wq, ell_q)[:, None] * div_psi)
        t.add_block(wdofs, wdofs, a_ww)
        t.add_block(rdofs, wdofs, c_rw[:, None, :])
        t.add_block(wdofs, rdofs, c_rw[:, :, None])
    matrix = compress(t)

    rhs = np.zeros(layout.total)
    if f_q is not None:
        rhs[udofs.ravel()] = -np.einsum("tq,tqd->td", wq, np.asarray(f_q, dtype=float)).ravel()
    if g_q is not None:
        rhs[rdofs.ravel()] = -np.einsum("tq,tq->t", wq, np.asarray(g_q, dtype=float))
    return MfemSystem(matrix, rhs, layout, mesh, maps, materials)


def solve_mfem(system: MfemSystem, method: str = "direct") -> tuple[MfemState, SolveReport]:
    x, report = linear_solve(system.matrix, system.rhs, method)
    return MfemState(x, system.layout), report


# -- evaluation and diagnostics -----------------------------------------------------


def _cell_sigma_coefficients(system: MfemSystem, state: MfemState) -> np.ndarray:
    """Signed local stress coefficients (T, 2 rows, 6 basis functions)."""
    local = state.vector[_local_sigma_dofs(system.mesh)].reshape(-1, 2, 6)
    return local * system.maps.bdm_signs()[:, None, :]


def evaluate_stress(system: MfemSystem, state: MfemState, ref_points, cells=None) -> np.ndarray:
    """``sigma_h`` at reference points (N, 2) of the given cells: (T', N, 2, 2)."""
    cells = np.arange(system.mesh.n_cells) if cells is None else np.asarray(cells)
    bdm, _ = reference_basis("BDM1", ref_points)
    maps = system.maps
    phys = np.einsum("tij,bnj->tbni", maps.jac[cells], bdm) / maps.det[cells, None, None, None]
    coef = _cell_sigma_coefficients(system, state)[cells]
    return np.einsum("tab,tbnd->tnad", coef, phys)


def evaluate_couple_stress(system: MfemSystem, state: MfemState, ref_points, cells=None) -> np.ndarray:
    """``omega_ell,h`` at reference points (N, 2) of the given cells: (T', N, 2)."""
    cells = np.arange(system.mesh.n_cells) if cells is None else np.asarray(cells)
    if system.layout.three_field:
        return np.zeros((len(cells), len(np.atleast_2d(ref_points)), 2))
    rt, _ = reference_basis("RT0", ref_points)
    maps = system.maps
    phys = np.einsum("tij,bnj->tbni", maps.jac[cells], rt) / maps.det[cells, None, None, None]
    coef = state.omega[system.mesh.cell_faces[cells]] * maps.edge_sign[cells]
    return np.einsum("tb,tbnd->tnd", coef, phys)


@dataclass(frozen=True, eq=False)
class MfemDiagnostics:
    neg_div_sigma: np.ndarray   # (T, 2) cellwise constant -div sigma_h
    asym_moment: np.ndarray     # (T,)  integral of S sigma_h over each cell
    omega_max: float            # max |omega_ell,h| over quadrature points


def postprocess(system: MfemSystem, state: MfemState) -> MfemDiagnostics:
    maps = system.maps
    _, div_ref = reference_basis("BDM1", np.zeros((1, 2)))
    coef = _cell_sigma_coefficients(system, state)
    div = np.einsum("tab,b->ta", coef, div_ref) / maps.det[:, None]
    qp, qw = triangle_rule(QUAD_DEGREE)
    sig = evaluate_stress(system, state, qp)
    area = 0.5 * maps.det
    asym_m = np.einsum("q,tq->t", qw, sig[:, :, 1, 0] - sig[:, :, 0, 1]) * area
    om = evaluate_couple_stress(system, state, qp)
    omax = float(np.abs(om).max()) if om.size else 0.0
    return MfemDiagnostics(-div, asym_m, omax)


def stress_error(system: MfemSystem, state: MfemState, exact_sigma, degree: int = QUAD_DEGREE) -> float:
    """``||sigma_h - sigma||_L2`` with ``exact_sigma(points (T, nq, 2)) -> (T, nq, 2, 2)``."""
    qp, qw = triangle_rule(degree)
    pts = system.maps.to_physical(qp)
    diff = evaluate_stress(system, state, qp) - exact_sigma(pts)
    wq = 0.5 * system.maps.det[:, None] * qw[None, :]
    return float(np.sqrt(np.einsum("tq,tqab->", wq, diff ** 2)))
