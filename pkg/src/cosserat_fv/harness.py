"""Convergence studies: meshes, solves, error norms, observed orders and CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, mfem, tpsa
from .material import sample_at_centroids
from .mesh import Mesh, compute_geometry, generate_structured
from .mms import CASES, ManufacturedCase, make_case
from .quadrature import triangle_rule

METHODS = ("tpsa", "mfem")
COLUMNS = ("example", "method", "param_name", "param_value", "level", "n_cells", "h_max",
           "dofs", "e_u", "e_sigma", "rate_u", "rate_sigma")

DEFAULT_FAMILY = {"smooth": "uniform", "heterogeneous": "interface_half", "cosserat": "interface_thirds"}
DEFAULT_BASE_N = {"smooth": 8, "heterogeneous": 8, "cosserat": 9}
DEFAULT_PARAMS = {"smooth": (10.0, 1e2, 1e4, 1e8), "heterogeneous": (1e4, 1e-4), "cosserat": (1.0,)}
# families whose edges resolve each example's material or length-scale kinks
COMPATIBLE = {
    "smooth": ("uniform", "crisscross", "interface_half", "interface_thirds", "acute"),
    "heterogeneous": ("uniform", "crisscross", "interface_half", "acute"),
    "cosserat": ("interface_thirds",),
}

SIGMA_NORMS = {
    "tpsa": "face-dual weighted: sum_k |zeta_k| delta_k / d * |sigma_k/|zeta_k| - sigma(x_k) n_k|^2",
    "mfem": "L2 over cells, degree-4 quadrature",
}


class HarnessError(RuntimeError):
    """A run failed; the message carries (example, method, level) context."""


@dataclass
class RunConfig:
    example: str
    methods: tuple[str, ...] = METHODS
    base_n: int | None = None
    levels: int = 4
    params: tuple[float, ...] | None = None
    family: str | None = None
    out: str | None = None
    solver: str = "direct"
    rotation_is_stress: bool = False

    def __post_init__(self):
        if self.example not in CASES:
            raise ValueError(f"unknown example {self.example!r}; choose from {CASES}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        self.methods = tuple(self.methods)
        self.base_n = DEFAULT_BASE_N[self.example] if self.base_n is None else int(self.base_n)
        self.params = DEFAULT_PARAMS[self.example] if self.params is None else tuple(float(p) for p in self.params)
        self.family = DEFAULT_FAMILY[self.example] if self.family is None else self.family
        if self.family not in COMPATIBLE[self.example]:
            raise ValueError(f"mesh family {self.family!r} does not resolve the {self.example!r} "
                             f"example; use one of {COMPATIBLE[self.example]}")
        if self.levels < 1 or self.base_n < 1:
            raise ValueError("levels and base_n must be positive")
        divisor = {"interface_half": 2, "interface_thirds": 3}.get(self.family, 1)
        if self.base_n % divisor:
            raise ValueError(f"mesh family {self.family!r} needs base_n divisible by {divisor}")
        if self.solver not in ("direct", "iterative"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.example == "cosserat" and self.params != (1.0,):
            raise ValueError("the cosserat example has fixed parameters (lambda = mu = 1)")

    @property
    def sizes(self) -> list[int]:
        return [self.base_n * 2 ** k for k in range(self.levels)]


@dataclass
class ConvergenceRow:
    example: str
    method: str
    param_name: str
    param_value: float
    level: int
    n_cells: int
    h_max: float
    dofs: int
    e_u: float
    e_sigma: float
    rate_u: float | None = None
    rate_sigma: float | None = None
    extra: dict = field(default_factory=dict, repr=False)


def observed_rate(e_coarse, e_fine, h_coarse, h_fine) -> float:
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


# -- error norms ---------------------------------------------------------------------


def cell_averages(mesh: Mesh, case: ManufacturedCase, degree: int = 4) -> np.ndarray:
    """Cell averages of the exact displacement by a degree-``degree`` rule."""
    qp, qw = triangle_rule(degree)
    v = mesh.vertices[mesh.cells]
    pts = v[:, None, 0] + qp[None, :, 0, None] * (v[:, None, 1] - v[:, None, 0]) \
        + qp[None, :, 1, None] * (v[:, None, 2] - v[:, None, 0])
    region = np.repeat(mesh.region_tag, len(qw))
    u = case.solution(pts.reshape(-1, 2), region).u.reshape(mesh.n_cells, len(qw), 2)
    return np.einsum("q,tqd->td", qw, u)


def error_u(u_h, mesh: Mesh, case: ManufacturedCase, volume=None) -> float:
    """``sqrt(sum |K| |u_h - average of u over K|^2)``."""
    vol = compute_geometry(mesh).cell_volume if volume is None else volume
    diff = np.asarray(u_h) - cell_averages(mesh, case)
    return float(np.sqrt(np.einsum("t,td->", vol, diff ** 2)))


def error_sigma_tpsa(sigma_faces, mesh: Mesh, geom, case: ManufacturedCase) -> float:
    """Face-dual weighted norm of the normal stress error."""
    di, dj = tpsa.projected_distances(mesh, geom)
    weight = geom.face_measure * (di + dj) / mesh.dim
    region = mesh.region_tag[mesh.face_cells[:, 0]]
    exact = case.solution(geom.face_centroid, region).sigma
    exact_n = np.einsum("kab,kb->ka", exact, geom.face_normal)
    diff = np.asarray(sigma_faces) / geom.face_measure[:, None] - exact_n
    return float(np.sqrt(np.einsum("k,ka->", weight, diff ** 2)))


# -- single solves -----------------------------------------------------------------


def _tagged(mesh: Mesh, case: ManufacturedCase) -> Mesh:
    c = mesh.vertices[mesh.cells].mean(axis=1)
    tags = np.asarray(case.region_at(c[:, 0], c[:, 1]), dtype=np.int64)
    if np.array_equal(tags, mesh.region_tag):
        return mesh
    return replace(mesh, region_tag=tags)


def run_tpsa(mesh: Mesh, case: ManufacturedCase) -> dict:
    geom = compute_geometry(mesh)
    mat = sample_at_centroids(case.mu, case.lam, case.ell_values, mesh, geom)
    src = case.sources(geom.cell_centroid, mesh.region_tag)
    bnd = mesh.boundary_faces
    exact_b = case.solution(geom.face_centroid[bnd], mesh.region_tag[mesh.face_cells[bnd, 0]])
    bc = tpsa.TpsaBC.homogeneous(mesh)
    bc.u[bnd] = exact_b.u
    bc.r[bnd, 0] = exact_b.r
    system = tpsa.assemble(mesh, geom, mat, src.f, src.g_r, bc=bc)
    state, report = tpsa.solve(system)
    flux = tpsa.reconstruct_fluxes(system, state)
    return {
        "e_u": error_u(state.u, mesh, case, geom.cell_volume),
        "e_sigma": error_sigma_tpsa(flux.sigma, mesh, geom, case),
        "dofs": tpsa.dof_count(mesh),
        "report": report,
    }


def run_mfem(mesh: Mesh, case: ManufacturedCase, solver: str = "direct") -> dict:
    geom = compute_geometry(mesh)
    mat = sample_at_centroids(case.mu, case.lam, case.ell_values, mesh, geom)
    pts, _ = mfem.quadrature_points(mesh)
    nt, nq, _ = pts.shape
    flat = pts.reshape(-1, 2)
    region = np.repeat(mesh.region_tag, nq)
    src = case.sources(flat, region)
    ell = case.ell_jet(flat)
    three = ell is None
    system = mfem.assemble_mfem(
        mesh, mat, src.f.reshape(nt, nq, 2), src.g.reshape(nt, nq),
        None if three else ell.val.reshape(nt, nq), None if three else ell.grad.reshape(nt, nq, 2),
        three_field=three)
    state, report = mfem.solve_mfem(system, solver)

    def exact_sigma(p):
        return case.solution(p.reshape(-1, 2), region).sigma.reshape(nt, nq, 2, 2)

    return {
        "e_u": error_u(state.u, mesh, case, geom.cell_volume),
        "e_sigma": mfem.stress_error(system, state, exact_sigma),
        "dofs": system.layout.total,
        "report": report,
    }


def dof_report(method: str, mesh: Mesh, three_field: bool = False) -> dict:
    if method == "tpsa":
        total = tpsa.dof_count(mesh)
    elif method == "mfem":
        total = mfem.dof_count(mesh, three_field)
    else:
        raise ValueError(f"unknown method {method!r}")
    return {"method": method, "total": total, "n_cells": mesh.n_cells, "n_faces": mesh.n_faces,
            "per_cell": total / mesh.n_cells}


# -- convergence runs --------------------------------------------------------------


def run_convergence(config: RunConfig, progress=None) -> list[ConvergenceRow]:
    rows: list[ConvergenceRow] = []
    meshes = [generate_structured(n, config.family) for n in config.sizes]
    for method in config.methods:
        for param in config.params:
            case = make_case(config.example, param, config.rotation_is_stress)
            prev = None
            for level, base in enumerate(meshes):
                mesh = _tagged(base, case)
                try:
                    res = run_tpsa(mesh, case) if method == "tpsa" else run_mfem(mesh, case, config.solver)
                except Exception as exc:
                    raise HarnessError(f"{config.example}/{method}/{case.param_name}={param:g}/level {level} "
                                       f"(n={config.sizes[level]}): {exc}") from exc
                row = ConvergenceRow(config.example, method, case.param_name, case.param_value, level,
                                     mesh.n_cells, mesh.h_max(), res["dofs"], res["e_u"], res["e_sigma"],
                                     extra={"report": res["report"]})
                if prev is not None:
                    row.rate_u = observed_rate(prev.e_u, row.e_u, prev.h_max, row.h_max)
                    row.rate_sigma = observed_rate(prev.e_sigma, row.e_sigma, prev.h_max, row.h_max)
                rows.append(row)
                prev = row
                if progress is not None:
                    progress(row)
    return rows


def _num(x) -> str:
    return "" if x is None else f"{x:.10e}"


def to_csv(rows: list[ConvergenceRow], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# cosserat-fv {__version__}\n")
    buf.write(f"# example={config.example} family={config.family} sizes={','.join(map(str, config.sizes))} "
              f"solver={config.solver} rotation_is_stress={config.rotation_is_stress}\n")
    for m in config.methods:
        buf.write(f"# e_sigma[{m}]: {SIGMA_NORMS[m]}\n")
    buf.write("# e_u: sqrt(sum |K| |u_h - cell average of u|^2), degree-4 averages\n")
    if "tpsa" in config.methods:
        buf.write("# tpsa: direct solver regardless of --solver (system is not symmetric)\n")
    if "mfem" in config.methods:
        if config.example == "cosserat":
            buf.write("# mfem: four-field; ell and grad ell evaluated pointwise at degree-4 quadrature points\n")
        else:
            buf.write("# mfem: three-field (ell = 0, couple stress dropped)\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([r.example, r.method, r.param_name, f"{r.param_value:g}", r.level, r.n_cells,
                         _num(r.h_max), r.dofs, _num(r.e_u), _num(r.e_sigma),
                         _num(r.rate_u), _num(r.rate_sigma)])
    return buf.getvalue()


def write_csv(rows: list[ConvergenceRow], config: RunConfig, path=None) -> str:
    text = to_csv(rows, config)
    path = config.out if path is None else path
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
