"""Triangulations of the unit square, their geometry, and a plain-text format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("uniform", "crisscross", "interface_half", "interface_thirds", "acute")

# Acute 24-triangle tile of the unit square, symmetric under the square's
# symmetry group; its boundary vertices are the corners and side midpoints,
# so tiles glue conformingly. Angles lie in [29.07, 76.23] degrees.
_TILE_VERTS = np.array([
    [0.0, 0.0], [0.0, 0.5], [0.0, 1.0], [0.25, 0.425], [0.25, 0.575], [0.425, 0.25],
    [0.425, 0.75], [0.5, 0.0], [0.5, 0.5], [0.5, 1.0], [0.575, 0.25], [0.575, 0.75],
    [0.75, 0.425], [0.75, 0.575], [1.0, 0.0], [1.0, 0.5], [1.0, 1.0]])
_TILE_CELLS = np.array([
    [3, 1, 0], [15, 12, 14], [10, 12, 8], [10, 7, 14], [12, 10, 14], [7, 5, 0],
    [5, 3, 0], [10, 5, 7], [3, 5, 8], [5, 10, 8], [6, 9, 2], [1, 4, 2],
    [4, 6, 2], [3, 4, 1], [4, 3, 8], [6, 4, 8], [9, 11, 16], [6, 11, 9],
    [11, 6, 8], [13, 15, 16], [11, 13, 16], [13, 12, 15], [12, 13, 8], [13, 11, 8]])


class MeshError(ValueError):
    """Invalid mesh configuration or malformed mesh data."""


class GeometryError(MeshError):
    """Degenerate cell or face geometry."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh with explicit face (edge) connectivity.

    ``faces[k]`` holds the sorted vertex pair of edge ``k``; ``face_cells[k]``
    holds ``(i, j)`` with ``i < j``, or ``(i, -1)`` on the boundary.
    ``cell_faces[c, a]`` is the edge opposite local vertex ``a`` of cell ``c``.
    """

    vertices: np.ndarray
    cells: np.ndarray
    faces: np.ndarray
    face_cells: np.ndarray
    cell_faces: np.ndarray
    region_tag: np.ndarray
    dim: int = 2

    @classmethod
    def from_cells(cls, vertices, cells, region_tag=None) -> "Mesh":
        """Build connectivity; clockwise cells are reoriented counterclockwise."""
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (N, 2)")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            bad = int(np.flatnonzero((cells < 0) | (cells >= len(vertices)))[0] // 3)
            raise MeshError(f"cell {bad} references a vertex index out of range")
        area2 = _signed_area2(vertices, cells)
        flip = area2 < 0
        cells[flip] = cells[flip][:, [0, 2, 1]]
        degenerate = np.flatnonzero(np.abs(area2) <= 1e-14 * max(1.0, np.abs(area2).max(initial=0)))
        if degenerate.size:
            raise GeometryError(f"cell {int(degenerate[0])} has zero area")
        if region_tag is None:
            region_tag = np.zeros(len(cells), dtype=np.int64)
        region_tag = np.asarray(region_tag, dtype=np.int64)
        if region_tag.shape != (len(cells),):
            raise MeshError("region_tag needs one entry per cell")

        # edge opposite local vertex a joins local vertices a+1, a+2
        local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        faces, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        cell_faces = inverse.reshape(-1, 3)

        owner = np.repeat(np.arange(len(cells)), 3)
        counts = np.bincount(inverse, minlength=len(faces))
        if np.any(counts > 2):
            raise MeshError(f"face {int(np.flatnonzero(counts > 2)[0])} is shared by more than 2 cells")
        order = np.lexsort((owner, inverse))
        face_cells = -np.ones((len(faces), 2), dtype=np.int64)
        sorted_faces = inverse[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_faces[1:] != sorted_faces[:-1]
        face_cells[sorted_faces[first], 0] = owner[order][first]
        face_cells[sorted_faces[~first], 1] = owner[order][~first]

        for arr in (vertices, cells, faces, face_cells, cell_faces, region_tag):
            arr.setflags(write=False)
        return cls(vertices, cells, faces, face_cells, cell_faces, region_tag)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] < 0)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] >= 0)

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(v[self.faces[:, 1]] - v[self.faces[:, 0]], axis=1)

    def h_max(self) -> float:
        return float(self.edge_lengths().max())


def _signed_area2(v, cells):
    a, b, c = v[cells[:, 0]], v[cells[:, 1]], v[cells[:, 2]]
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


@dataclass(frozen=True, eq=False)
class MeshGeometry:
    cell_centroid: np.ndarray
    cell_volume: np.ndarray
    face_centroid: np.ndarray
    face_measure: np.ndarray
    face_normal: np.ndarray
    # sign of face cell_faces[c, a] seen from cell c
    incidence: np.ndarray

    def closure_residual(self, mesh: Mesh) -> np.ndarray:
        """Per-cell ``sum_k sign |face| n`` (zero for closed cells)."""
        f = mesh.cell_faces
        w = (self.incidence * self.face_measure[f])[..., None] * self.face_normal[f]
        return w.sum(axis=1)


def compute_geometry(mesh: Mesh) -> MeshGeometry:
    v = mesh.vertices
    cells = mesh.cells
    area = 0.5 * _signed_area2(v, cells)
    bad = np.flatnonzero(area <= 0)
    if bad.size:
        raise GeometryError(f"cell {int(bad[0])} has non-positive area {area[bad[0]]:g}")
    xc = v[cells].mean(axis=1)
    a, b = v[mesh.faces[:, 0]], v[mesh.faces[:, 1]]
    xf = 0.5 * (a + b)
    t = b - a
    length = np.linalg.norm(t, axis=1)
    n = np.stack([t[:, 1], -t[:, 0]], axis=1) / length[:, None]
    owner = mesh.face_cells[:, 0]
    # orient n away from the lower-index cell
    flip = np.einsum("kd,kd->k", xf - xc[owner], n) < 0
    n[flip] *= -1.0
    incidence = np.where(mesh.face_cells[mesh.cell_faces, 0] == np.arange(mesh.n_cells)[:, None], 1.0, -1.0)
    return MeshGeometry(xc, area, xf, length, n, incidence)


def generate_structured(n: int, family: str = "uniform") -> Mesh:
    """Structured triangulation of the unit square with ``n`` squares per side.

    ``uniform``: each square cut along its ``/`` diagonal.
    ``crisscross``: each square cut into 4 triangles about its centre.
    ``interface_half``: ``uniform`` with edges on x = 1/2 and y = 1/2; tag 1
    where ``min(x, y) > 1/2``.
    ``interface_thirds``: edges on x, y in {1/3, 2/3} and on the diagonal,
    diagonals alternating like a union jack, and the 4-valent vertices
    shifted by ``h/4`` so the family contains obtuse triangles.
    ``acute``: each square filled with a fixed 24-triangle tile whose angles
    are all below 77 degrees; edges lie on every grid line.
    """
    if family not in FAMILIES:
        raise MeshError(f"unknown mesh family {family!r}; choose from {FAMILIES}")
    if n < 1:
        raise MeshError("n must be at least 1")
    if family == "interface_half" and n % 2:
        raise MeshError("interface_half requires an even n")
    if family == "interface_thirds" and n % 3:
        raise MeshError("interface_thirds requires n divisible by 3")

    h = 1.0 / n
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    vid = lambda a, b: a * (n + 1) + b  # noqa: E731
    xy = np.stack([i * h, j * h], axis=1)
    si, sj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    si, sj = si.ravel(), sj.ravel()
    v00, v10, v11, v01 = vid(si, sj), vid(si + 1, sj), vid(si + 1, sj + 1), vid(si, sj + 1)

    if family == "acute":
        # tile coordinates are multiples of 1/40; dedupe on that integer lattice
        pts = (np.stack([si, sj], 1)[:, None, :] + _TILE_VERTS[None]) * 40
        keys = np.rint(pts.reshape(-1, 2)).astype(np.int64)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        xy = uniq / (40.0 * n)
        local = inv.reshape(n * n, -1)
        cells = np.concatenate([local[:, t] for t in _TILE_CELLS.T], axis=0).reshape(3, -1).T
    elif family == "crisscross":
        centre = len(xy) + np.arange(n * n)
        xy = np.vstack([xy, np.stack([(si + 0.5) * h, (sj + 0.5) * h], axis=1)])
        cells = np.concatenate([
            np.stack([v00, v10, centre], 1), np.stack([v10, v11, centre], 1),
            np.stack([v11, v01, centre], 1), np.stack([v01, v00, centre], 1),
        ])
    elif family == "interface_thirds":
        even = (si + sj) % 2 == 0
        slash = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
        back = np.concatenate([np.stack([v00, v10, v01], 1), np.stack([v10, v11, v01], 1)])
        cells = np.where(np.concatenate([even, even])[:, None], slash, back)
        m = n // 3
        odd = (i + j) % 2 == 1
        xy = xy.copy()
        xy[:, 0] += np.where(odd & (i % m != 0), 0.25 * h * np.where(j % 2 == 0, 1.0, -1.0), 0.0)
        xy[:, 1] += np.where(odd & (j % m != 0), 0.25 * h * np.where(i % 2 == 0, 1.0, -1.0), 0.0)
    else:
        cells = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])

    cells = _sort_cells(xy, cells)
    tags = None
    if family == "interface_half":
        c = xy[cells].mean(axis=1)
        tags = (np.minimum(c[:, 0], c[:, 1]) > 0.5).astype(np.int64)
    return Mesh.from_cells(xy, cells, tags)


def _sort_cells(xy, cells):
    # deterministic cell order: by centroid row then column
    c = xy[cells].mean(axis=1)
    order = np.lexsort((np.round(c[:, 0], 12), np.round(c[:, 1], 12)))
    return cells[order]


def angle_report(mesh: Mesh, tol: float = 1e-9) -> tuple[float, float, int]:
    """Return (min angle, max angle) in degrees and the number of obtuse cells."""
    p = mesh.vertices[mesh.cells]
    angles = np.empty((mesh.n_cells, 3))
    for a in range(3):
        e1 = p[:, (a + 1) % 3] - p[:, a]
        e2 = p[:, (a + 2) % 3] - p[:, a]
        cosang = np.einsum("cd,cd->c", e1, e2) / (np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))
        angles[:, a] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    obtuse = int(np.count_nonzero(angles.max(axis=1) > 90.0 + tol))
    return float(angles.min()), float(angles.max()), obtuse


# -- plain-text format -----------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def mesh_io_write(mesh: Mesh) -> str:
    lines = [f"dim {mesh.dim}", f"vertices {len(mesh.vertices)}"]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in mesh.vertices]
    lines.append(f"cells {mesh.n_cells}")
    lines += [" ".join(str(int(k)) for k in c) for c in mesh.cells]
    if np.any(mesh.region_tag != 0):
        lines.append(f"tags {mesh.n_cells}")
        lines += [str(int(t)) for t in mesh.region_tag]
    return "\n".join(lines) + "\n"


def mesh_io_read(text: str) -> Mesh:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    it = iter(rows)

    def header(name):
        try:
            lineno, tok = next(it)
        except StopIteration:
            raise MeshError(f"missing '{name}' section") from None
        if len(tok) != 2 or tok[0] != name:
            raise MeshError(f"line {lineno}: expected '{name} <count>', got {' '.join(tok)!r}")
        try:
            return int(tok[1])
        except ValueError:
            raise MeshError(f"line {lineno}: bad count {tok[1]!r}") from None

    def block(count, width, conv):
        out = []
        for _ in range(count):
            try:
                lineno, tok = next(it)
            except StopIteration:
                raise MeshError("unexpected end of file") from None
            if len(tok) != width:
                raise MeshError(f"line {lineno}: expected {width} values")
            try:
                out.append([conv(t) for t in tok])
            except ValueError:
                raise MeshError(f"line {lineno}: cannot parse {' '.join(tok)!r}") from None
        return out

    if header("dim") != 2:
        raise MeshError("only dim 2 is supported")
    nv = header("vertices")
    verts = np.array(block(nv, 2, float), dtype=float).reshape(-1, 2)
    nc = header("cells")
    cells = np.array(block(nc, 3, int), dtype=np.int64).reshape(-1, 3)
    tags = None
    rest = list(it)
    if rest:
        it = iter(rest)
        if header("tags") != nc:
            raise MeshError("tags section must have one entry per cell")
        tags = np.array(block(nc, 1, int), dtype=np.int64).ravel()
        extra = list(it)
        if extra:
            raise MeshError(f"line {extra[0][0]}: unexpected trailing content")
    return Mesh.from_cells(verts, cells, tags)
