"""Two-point stress approximation (TPSA) finite volume method.

Cell unknowns are the displacement ``u`` (d), the rotation stress
``r = 2 mu r_s`` (rdim) and the solid pressure ``p = lam div u`` (1), stored
cell by cell. Each face carries the integrated normal stress ``sigma_k``, total
rotation flux ``tau_k`` and displacement flux ``v_k``, all computed from the
two adjacent cells only.

Boundary faces use Dirichlet data ``(u_b, r_b)`` at the face centroid and are
treated as an interior face whose second cell has collapsed onto that
centroid (``delta_j -> 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .mesh import GeometryError, Mesh, MeshGeometry
from .material import MaterialField
from .solver_core import SolveReport, TripletMatrix, compress, solve as linear_solve
from .tensor_ops import displacement_rotation_coupling, rot_dim, rotation_flux_coupling


def block_size(d: int) -> int:
    return d + rot_dim(d) + 1


@dataclass(frozen=True, eq=False)
class FaceTransmissibility:
    """Per-face two-point coefficients; side ``j`` of a boundary face is the ghost."""

    delta_i: np.ndarray
    delta_j: np.ndarray      # 0 on boundary faces
    delta: np.ndarray
    xi_i: np.ndarray
    xi_j: np.ndarray
    mu_bar: np.ndarray
    ell2_bar: np.ndarray
    delta_mu: np.ndarray
    boundary: np.ndarray


def _harmonic(a, b, delta):
    """``delta * a b / (a + b)`` with the 0/0 case set to 0."""
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = delta * a * b / s
    return np.where(s > 0, out, 0.0)


def projected_distances(mesh: Mesh, geom: MeshGeometry):
    fc = mesh.face_cells
    n = geom.face_normal
    di = np.einsum("kd,kd->k", geom.face_centroid - geom.cell_centroid[fc[:, 0]], n)
    dj = np.zeros(mesh.n_faces)
    inner = fc[:, 1] >= 0
    dj[inner] = -np.einsum("kd,kd->k", geom.face_centroid[inner] - geom.cell_centroid[fc[inner, 1]], n[inner])
    bad = np.flatnonzero((di <= 0) | (inner & (dj <= 0)))
    if bad.size:
        raise GeometryError(f"face {int(bad[0])} has a non-positive cell-to-face distance")
    return di, dj


def build_transmissibilities(mesh: Mesh, geom: MeshGeometry, mat: MaterialField) -> FaceTransmissibility:
    di, dj = projected_distances(mesh, geom)
    fc = mesh.face_cells
    bnd = fc[:, 1] < 0
    ci = fc[:, 0]
    cj = np.where(bnd, ci, fc[:, 1])

    a = mat.mu[ci] / di
    delta = di + dj
    xi_i = np.zeros(mesh.n_faces)
    xi_j = np.ones(mesh.n_faces)
    mu_bar = mat.mu[ci].copy()
    ell2_bar = mat.ell[ci] ** 2
    delta_mu = np.zeros(mesh.n_faces)

    inner = ~bnd
    b = mat.mu[cj[inner]] / dj[inner]
    ai = a[inner]
    xi_i[inner] = ai / (ai + b)
    xi_j[inner] = b / (ai + b)
    mu_bar[inner] = _harmonic(ai, b, delta[inner])
    delta_mu[inner] = 0.5 / (ai + b)
    l2 = mat.ell ** 2
    ell2_bar[inner] = _harmonic(l2[ci[inner]] / di[inner], l2[cj[inner]] / dj[inner], delta[inner])
    return FaceTransmissibility(di, dj, delta, xi_i, xi_j, mu_bar, ell2_bar, delta_mu, bnd)


def stencil_blocks(geom: MeshGeometry, trans: FaceTransmissibility):
    """Face flux coefficient blocks for side ``i`` and side ``j`` (or ghost).

    Returns arrays of shape ``(F, nb, nb)`` mapping ``(u, r, p)`` of that side
    to ``(sigma_k, tau_k, v_k)``, including the face measure.
    """
    n = geom.face_normal
    nf, d = n.shape
    rd = rot_dim(d)
    nb = d + rd + 1
    iu, ir, ip = slice(0, d), slice(d, d + rd), d + rd
    c_sr = rotation_flux_coupling(n)            # (F, d, rd): (S* r) n
    c_tu = displacement_rotation_coupling(n)    # (F, rd, d): (S* u) n
    area = geom.face_measure

    out = []
    for sign, xi in ((1.0, trans.xi_i), (-1.0, trans.xi_j)):
        xt = 1.0 - xi
        blk = np.zeros((nf, nb, nb))
        blk[:, iu, iu] = (-2.0 * trans.mu_bar * sign / trans.delta)[:, None, None] * np.eye(d)
        blk[:, iu, ir] = c_sr * xt[:, None, None]
        blk[:, iu, ip] = n * xt[:, None]
        blk[:, ir, iu] = c_tu * xi[:, None, None]
        blk[:, ir, ir] = (-trans.ell2_bar * sign / trans.delta)[:, None, None] * np.eye(rd)
        blk[:, ip, iu] = n * xi[:, None]
        blk[:, ip, ip] = -trans.delta_mu * sign
        out.append(blk * area[:, None, None])
    return out[0], out[1]


def face_stencil(k: int, mesh: Mesh, geom: MeshGeometry, trans: FaceTransmissibility) -> dict:
    """Coefficient blocks of face ``k`` keyed by cell index (``'boundary'`` for the ghost)."""
    bi, bj = stencil_blocks(geom, trans)
    i, j = mesh.face_cells[k]
    return {int(i): bi[k], (int(j) if j >= 0 else "boundary"): bj[k]}


@dataclass(frozen=True, eq=False)
class TpsaBC:
    """Dirichlet values at boundary face centroids, shape (F, d) and (F, rdim)."""

    u: np.ndarray
    r: np.ndarray

    @classmethod
    def homogeneous(cls, mesh: Mesh) -> "TpsaBC":
        d = mesh.dim
        return cls(np.zeros((mesh.n_faces, d)), np.zeros((mesh.n_faces, rot_dim(d))))

    @classmethod
    def constant(cls, mesh: Mesh, u, r=0.0) -> "TpsaBC":
        d = mesh.dim
        return cls(np.tile(np.asarray(u, dtype=float), (mesh.n_faces, 1)),
                   np.full((mesh.n_faces, rot_dim(d)), float(r)))

    def ghost_state(self, mesh: Mesh) -> np.ndarray:
        d = mesh.dim
        g = np.zeros((mesh.n_faces, block_size(d)))
        g[:, :d] = self.u
        g[:, d:d + rot_dim(d)] = self.r
        g[mesh.face_cells[:, 1] >= 0] = 0.0
        return g


@dataclass(frozen=True, eq=False)
class TpsaSystem:
    matrix: sps.csr_matrix
    rhs: np.ndarray
    mesh: Mesh
    geometry: MeshGeometry
    transmissibility: FaceTransmissibility
    bc: TpsaBC


@dataclass(frozen=True, eq=False)
class TpsaState:
    u: np.ndarray   # (T, d)
    r: np.ndarray   # (T, rdim)
    p: np.ndarray   # (T,)

    @classmethod
    def from_vector(cls, x: np.ndarray, d: int = 2) -> "TpsaState":
        x = x.reshape(-1, block_size(d))
        rd = rot_dim(d)
        return cls(x[:, :d].copy(), x[:, d:d + rd].copy(), x[:, d + rd].copy())

    def to_vector(self) -> np.ndarray:
        return np.hstack([self.u, self.r, self.p[:, None]]).ravel()


@dataclass(frozen=True, eq=False)
class FaceFlux:
    sigma: np.ndarray   # (F, d)
    tau: np.ndarray     # (F, rdim)
    v: np.ndarray       # (F,)


def _cell_values(values, n, width):
    if values is None:
        return np.zeros((n, width))
    return np.asarray(values, dtype=float).reshape(n, width)


def assemble(mesh: Mesh, geom: MeshGeometry, mat: MaterialField, f=None, g_r=None, g_p=None,
             bc: TpsaBC | None = None) -> TpsaSystem:
    """Balance rows ``sum_k D_ik (sigma, tau, v)_k - |K|(0, r/mu, p/lam) = |K|(-f, -g_r, -g_p)``.

    Sources are cell (centroid) values.
    """
    d = mesh.dim
    rd = rot_dim(d)
    nb = block_size(d)
    nt = mesh.n_cells
    bc = TpsaBC.homogeneous(mesh) if bc is None else bc
    trans = build_transmissibilities(mesh, geom, mat)
    bi, bj = stencil_blocks(geom, trans)

    fc = mesh.face_cells
    inner = np.flatnonzero(fc[:, 1] >= 0)
    idx = np.arange(nt * nb).reshape(nt, nb)

    t = TripletMatrix((nt * nb, nt * nb))
    # side i rows (incidence +1)
    t.add_block(idx[fc[:, 0]], idx[fc[:, 0]], bi)
    t.add_block(idx[fc[inner, 0]], idx[fc[inner, 1]], bj[inner])
    # side j rows (incidence -1)
    t.add_block(idx[fc[inner, 1]], idx[fc[inner, 0]], -bi[inner])
    t.add_block(idx[fc[inner, 1]], idx[fc[inner, 1]], -bj[inner])
    vol = geom.cell_volume
    diag = np.zeros((nt, nb))
    diag[:, d:d + rd] = -(vol / mat.mu)[:, None]
    diag[:, d + rd] = -vol * mat.lam_inv
    t.add(idx.ravel(), idx.ravel(), diag.ravel())
    a = compress(t)

    rhs = np.zeros((nt, nb))
    rhs[:, :d] = -vol[:, None] * _cell_values(f, nt, d)
    rhs[:, d:d + rd] = -vol[:, None] * _cell_values(g_r, nt, rd)
    rhs[:, d + rd] = -vol * _cell_values(g_p, nt, 1)[:, 0]
    ghost = bc.ghost_state(mesh)
    bnd = mesh.boundary_faces
    flux_b = np.einsum("kab,kb->ka", bj[bnd], ghost[bnd])
    np.add.at(rhs, fc[bnd, 0], -flux_b)
    return TpsaSystem(a, rhs.ravel(), mesh, geom, trans, bc)


def solve(system: TpsaSystem, method: str = "direct") -> tuple[TpsaState, SolveReport]:
    if method != "direct":
        raise ValueError("TPSA systems are not symmetric; only the direct solver applies")
    x, report = linear_solve(system.matrix, system.rhs, "direct")
    return TpsaState.from_vector(x, system.mesh.dim), report


def reconstruct_fluxes(system: TpsaSystem, state: TpsaState) -> FaceFlux:
    mesh = system.mesh
    d = mesh.dim
    rd = rot_dim(d)
    bi, bj = stencil_blocks(system.geometry, system.transmissibility)
    x = state.to_vector().reshape(mesh.n_cells, -1)
    fc = mesh.face_cells
    other = np.where(fc[:, 1] >= 0, fc[:, 1], 0)
    xj = np.where((fc[:, 1] >= 0)[:, None], x[other], system.bc.ghost_state(mesh))
    flux = np.einsum("kab,kb->ka", bi, x[fc[:, 0]]) + np.einsum("kab,kb->ka", bj, xj)
    return FaceFlux(flux[:, :d], flux[:, d:d + rd], flux[:, d + rd])


def cell_balance(mesh: Mesh, geom: MeshGeometry, flux: FaceFlux) -> np.ndarray:
    """``sum_k D_ik sigma_k`` per cell, shape (T, d)."""
    s = flux.sigma[mesh.cell_faces] * geom.incidence[..., None]
    return s.sum(axis=1)


def dof_count(mesh: Mesh) -> int:
    return mesh.n_cells * block_size(mesh.dim)
