"""Manufactured solutions and their source terms.

Every case prescribes a displacement ``u`` and a micropolar rotation ``r_s``
(or lets ``r_s = -S(grad u)/2``, the rotation induced in the elastic limit).
Derived fields and sources are obtained by exact second-order differentiation
(:mod:`cosserat_fv.jet`):

* ``sigma = 2 mu grad u + S* r + p I`` with ``r = 2 mu r_s``, ``p = lam div u``
* ``f = -div sigma``
* ``tau = S* u + ell^2 grad r`` (finite volume constitutive row)
* ``g_r = r / mu - div tau`` so that the rotation row reads ``div tau - r/mu = -g_r``
* ``omega_ell = 2 mu ell grad r_s`` and ``g = -div(ell omega_ell) + S sigma``
  (mixed finite element rotation row)

Material parameters ``mu`` and ``lam`` are taken constant inside each region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jet
from .jet import Jet
from .tensor_ops import asym, asym_adjoint, asym_adjoint_vector

CASES = ("smooth", "heterogeneous", "cosserat")

PI = np.pi


@dataclass
class Solution:
    """Exact primary fields and stresses at a batch of points."""

    u: np.ndarray          # (N, 2)
    grad_u: np.ndarray     # (N, 2, 2)
    rot: np.ndarray        # r_s, (N,)
    grad_rot: np.ndarray   # (N, 2)
    mu: np.ndarray
    lam: np.ndarray
    p: np.ndarray
    sigma: np.ndarray      # (N, 2, 2)

    @property
    def r(self) -> np.ndarray:
        return 2.0 * self.mu * self.rot


@dataclass
class Sources:
    f: np.ndarray          # (N, 2)
    g_r: np.ndarray        # (N,)  finite volume rotation row
    g: np.ndarray          # (N,)  mixed finite element rotation row
    tau: np.ndarray        # (N, 2)
    omega_ell: np.ndarray  # (N, 2)
    ell: np.ndarray


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    param_name: str
    param_value: float
    displacement: Callable[[Jet, Jet, np.ndarray], tuple[Jet, Jet]]
    mu: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lam: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    rotation: Callable[[Jet, Jet, np.ndarray], Jet] | None = None
    length_scale: Callable[[Jet, Jet], Jet] | None = None
    divergence_free: bool = False
    region_at: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(
        default=lambda x, y: np.zeros(np.shape(x), dtype=np.int64))
    metadata: dict = field(default_factory=dict)

    # -- evaluation ---------------------------------------------------------

    def _region(self, points, region):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if region is None:
            region = self.region_at(points[:, 0], points[:, 1])
        return points, np.broadcast_to(np.asarray(region, dtype=np.int64), (len(points),))

    def _jets(self, points, region):
        x, y = jet.variables(points)
        ux, uy = self.displacement(x, y, region)
        rs = None if self.rotation is None else self.rotation(x, y, region)
        return x, y, ux, uy, rs

    def solution(self, points, region=None) -> Solution:
        points, region = self._region(points, region)
        x, y, ux, uy, rs = self._jets(points, region)
        return self._solution(points, region, ux, uy, rs)

    def _solution(self, points, region, ux, uy, rs):
        mu = np.broadcast_to(self.mu(points[:, 0], points[:, 1], region), len(points)).astype(float)
        lam = np.broadcast_to(self.lam(points[:, 0], points[:, 1], region), len(points)).astype(float)
        u = np.stack([ux.val, uy.val], axis=1)
        grad_u = np.stack([ux.grad, uy.grad], axis=1)
        if rs is None:
            rot = -0.5 * (grad_u[:, 1, 0] - grad_u[:, 0, 1])
            grad_rot = -0.5 * (uy.hess[:, 0, :] - ux.hess[:, 1, :])
        else:
            rot, grad_rot = rs.val, rs.grad
        if self.divergence_free:
            p = np.zeros(len(points))
        else:
            p = lam * np.trace(grad_u, axis1=1, axis2=2)
        r = 2.0 * mu * rot
        sigma = 2.0 * mu[:, None, None] * grad_u + asym_adjoint(r[:, None], 2) + p[:, None, None] * np.eye(2)
        return Solution(u, grad_u, rot, grad_rot, mu, lam, p, sigma)

    def sources(self, points, region=None) -> Sources:
        points, region = self._region(points, region)
        x, y, ux, uy, rs = self._jets(points, region)
        sol = self._solution(points, region, ux, uy, rs)
        mu, lam = sol.mu, sol.lam
        hess_u = np.stack([ux.hess, uy.hess], axis=1)  # (N, a, b, c)

        grad_r = 2.0 * mu[:, None] * sol.grad_rot
        div_sigma = 2.0 * mu[:, None] * np.einsum("nabb->na", hess_u)
        for b in range(2):
            div_sigma += asym_adjoint(grad_r[:, b:b + 1], 2)[:, :, b]
        if not self.divergence_free:
            grad_div = np.einsum("naac->nc", hess_u)
            div_sigma += lam[:, None] * grad_div
        f = -div_sigma

        div_skew_u = sum(asym_adjoint_vector(sol.grad_u[:, :, b])[:, 0, b] for b in range(2))
        tau = asym_adjoint_vector(sol.u)[:, 0, :]
        n = len(points)
        ell = np.zeros(n)
        div_ell_terms_r = np.zeros(n)
        div_ell_omega = np.zeros(n)
        omega = np.zeros((n, 2))
        if self.length_scale is not None:
            if rs is None:
                raise ValueError(f"case {self.name!r}: a length scale requires an explicit rotation field")
            lj = self.length_scale(x, y)
            l2 = lj * lj
            ell = lj.val
            lap_rs = np.trace(rs.hess, axis1=1, axis2=2)
            lap_term = l2.val * lap_rs + np.einsum("nc,nc->n", l2.grad, rs.grad)
            tau = tau + l2.val[:, None] * grad_r
            div_ell_terms_r = 2.0 * mu * lap_term
            omega = 2.0 * (mu * ell)[:, None] * rs.grad
            div_ell_omega = 2.0 * mu * lap_term
        g_r = sol.r / mu - (div_skew_u + div_ell_terms_r)
        g = -div_ell_omega + asym(sol.sigma)[:, 0]
        return Sources(f, g_r, g, tau, omega, ell)

    def ell_jet(self, points) -> Jet | None:
        if self.length_scale is None:
            return None
        x, y = jet.variables(points)
        lj = self.length_scale(x, y)
        if not isinstance(lj, Jet):
            lj = jet.constant(lj, x)
        return lj

    # -- material closures for sample_at_centroids ----------------------------

    def ell_values(self, x, y, region=None):
        if self.length_scale is None:
            return np.zeros(np.shape(x))
        # plain values are well defined on the kink lines, unlike derivatives
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.length_scale(x, y), dtype=float), x.shape).copy()


# -- the three cases ------------------------------------------------------------


def _const(value):
    return lambda x, y, region: np.full(np.shape(x), float(value))


def case_smooth(lam: float = 10.0) -> ManufacturedCase:
    """Divergence-free ``u = (d psi/dy, -d psi/dx)``, ``psi = sin^2(2 pi x) sin^2(2 pi y)``."""

    def displacement(x, y, region):
        sx2 = jet.sin(2 * PI * x) ** 2
        sy2 = jet.sin(2 * PI * y) ** 2
        ux = 2 * PI * sx2 * jet.sin(4 * PI * y)
        uy = -2 * PI * jet.sin(4 * PI * x) * sy2
        return ux, uy

    return ManufacturedCase(
        name="smooth", param_name="lambda", param_value=float(lam),
        displacement=displacement, mu=_const(1.0), lam=_const(lam),
        divergence_free=True,
    )


def case_heterogeneous(kappa: float = 1e4) -> ManufacturedCase:
    """Upper-right quadrant with ``mu = lam = kappa``; region tag 1 there."""
    kappa = float(kappa)

    def modulus(x, y, region):
        return np.where(np.asarray(region) == 1, kappa, 1.0)

    def displacement(x, y, region):
        scale = 1.0 / modulus(None, None, region)
        ux = jet.sin(2 * PI * x) * y * (1 - y) * (0.5 - y)
        uy = jet.sin(2 * PI * y) * x * (1 - x) * (0.5 - x)
        return ux * scale, uy * scale

    def region_at(x, y):
        return (np.minimum(x, y) > 0.5).astype(np.int64)

    return ManufacturedCase(
        name="heterogeneous", param_name="kappa", param_value=kappa,
        displacement=displacement, mu=modulus, lam=modulus, region_at=region_at,
    )


def cosserat_length_scale(x, y):
    """``ell = min(1, max(0, max(3x - 1, 3y - 1)))``."""
    return jet.minimum(1.0, jet.maximum(0.0, jet.maximum(3 * x - 1, 3 * y - 1)))


def case_cosserat(rotation_is_stress: bool = False) -> ManufacturedCase:
    """Composite elastic/Cosserat medium with ``mu = lam = 1``.

    The polynomial ``xy(1-x)(1-y)`` is taken as ``r_s``; with
    ``rotation_is_stress`` it is taken as ``r = 2 mu r_s`` instead.
    """
    scale = 0.5 if rotation_is_stress else 1.0

    def displacement(x, y, region):
        return jet.sin(2 * PI * x) * y * (1 - y), jet.sin(2 * PI * y) * x * (1 - x)

    def rotation(x, y, region):
        return scale * (x * y * (1 - x) * (1 - y))

    return ManufacturedCase(
        name="cosserat", param_name="lambda", param_value=1.0,
        displacement=displacement, mu=_const(1.0), lam=_const(1.0),
        rotation=rotation, length_scale=cosserat_length_scale,
        metadata={"rotation_is_stress": rotation_is_stress},
    )


def make_case(name: str, param: float | None = None, rotation_is_stress: bool = False) -> ManufacturedCase:
    if name == "smooth":
        return case_smooth(10.0 if param is None else param)
    if name == "heterogeneous":
        return case_heterogeneous(1e4 if param is None else param)
    if name == "cosserat":
        return case_cosserat(rotation_is_stress)
    raise ValueError(f"unknown case {name!r}; choose from {CASES}")
