"""Piecewise-constant material parameters per cell."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class MaterialField:
    """Per-cell shear modulus ``mu``, Lame ``lam`` (may be inf) and length ``ell``."""

    mu: np.ndarray
    lam: np.ndarray
    ell: np.ndarray

    def __post_init__(self):
        mu, lam, ell = (np.asarray(a, dtype=float) for a in (self.mu, self.lam, self.ell))
        if np.any(~(mu > 0)) or np.any(~np.isfinite(mu)):
            raise ValueError(f"mu must be positive and finite (cell {int(np.flatnonzero(~(mu > 0) | ~np.isfinite(mu))[0])})")
        if np.any(lam < 0) or np.any(np.isnan(lam)):
            raise ValueError("lam must be non-negative")
        if np.any(ell < 0) or np.any(~np.isfinite(ell)):
            raise ValueError("ell must be finite and non-negative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "ell", ell)

    @property
    def lam_inv(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(self.lam), 0.0, 1.0 / self.lam)

    @classmethod
    def homogeneous(cls, n_cells: int, mu=1.0, lam=1.0, ell=0.0) -> "MaterialField":
        return cls(np.full(n_cells, mu), np.full(n_cells, lam), np.full(n_cells, ell))


def sample_at_centroids(mu, lam, ell, mesh, geometry=None) -> MaterialField:
    """Evaluate ``mu(x, y, region)`` etc. at cell centroids.

    Each argument is either a number or a callable of ``(x, y, region)``
    returning an array. ``region`` is the cell tag array.
    """
    if geometry is None:
        c = mesh.vertices[mesh.cells].mean(axis=1)
    else:
        c = geometry.cell_centroid
    x, y, tag = c[:, 0], c[:, 1], mesh.region_tag

    def ev(f):
        if callable(f):
            return np.broadcast_to(np.asarray(f(x, y, tag), dtype=float), x.shape).copy()
        return np.full(x.shape, float(f))

    return MaterialField(ev(mu), ev(lam), ev(ell))
