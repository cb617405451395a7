"""Small-tensor algebra for the Cosserat equations.

Conventions used throughout the package:

* ``(grad u)[a, b] = d u_a / d x_b`` (row = component, column = direction)
* ``(div sigma)[a] = sum_b d sigma[a, b] / d x_b``
* normal flux ``(sigma n)[a] = sum_b sigma[a, b] n[b]``

Rotations live in a space of dimension ``rdim = 1`` (d=2) or ``3`` (d=3).
All functions accept leading batch dimensions.
"""

from __future__ import annotations

import numpy as np


def rot_dim(d: int) -> int:
    if d == 2:
        return 1
    if d == 3:
        return 3
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def asym(sigma: np.ndarray) -> np.ndarray:
    """Asymmetry ``S(sigma)``, shape ``(..., d, d) -> (..., rdim)``.

    d=3: ``S(sigma)_i = sigma[i-1, i+1] - sigma[i+1, i-1]`` (indices mod 3).
    d=2: ``S(sigma) = sigma[1, 0] - sigma[0, 1]``.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[-1]
    if d == 2:
        return (sigma[..., 1, 0] - sigma[..., 0, 1])[..., None]
    rot_dim(d)
    i = np.arange(3)
    return sigma[..., (i - 1) % 3, (i + 1) % 3] - sigma[..., (i + 1) % 3, (i - 1) % 3]


def asym_adjoint(r: np.ndarray, d: int) -> np.ndarray:
    """Adjoint ``S* r``, shape ``(..., rdim) -> (..., d, d)`` (skew-symmetric)."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != rot_dim(d):
        raise ValueError(f"rotation vector must have length {rot_dim(d)}")
    out = np.zeros(r.shape[:-1] + (d, d))
    if d == 2:
        out[..., 0, 1] = -r[..., 0]
        out[..., 1, 0] = r[..., 0]
        return out
    r1, r2, r3 = r[..., 0], r[..., 1], r[..., 2]
    out[..., 0, 1], out[..., 0, 2] = -r3, r2
    out[..., 1, 0], out[..., 1, 2] = r3, -r1
    out[..., 2, 0], out[..., 2, 1] = -r2, r1
    return out


def asym_adjoint_vector(u: np.ndarray) -> np.ndarray:
    """``S* u`` for a displacement-like vector, ``(..., d) -> (..., rdim, d)``.

    This is the operator in the total rotation ``tau = omega/2 + S* u`` and is
    fixed by ``S(grad u) = -div(S* u)`` (row-wise divergence). In 3D it is the
    ordinary skew matrix of ``u``. In 2D it is the single row ``(-u_2, u_1)``;
    note that this is *not* ``asym_adjoint`` with the scalar/vector roles
    swapped, the sign follows from the identity.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    if d == 2:
        return np.stack([-u[..., 1], u[..., 0]], axis=-1)[..., None, :]
    return asym_adjoint(u, 3)


def rotation_flux_coupling(n: np.ndarray) -> np.ndarray:
    """Matrix ``C`` with ``C r = (S* r) n``, shape ``(..., d) -> (..., d, rdim)``."""
    n = np.asarray(n, dtype=float)
    d = n.shape[-1]
    eye = np.eye(rot_dim(d))
    cols = [asym_adjoint(eye[c], d) @ n[..., :, None] for c in range(rot_dim(d))]
    return np.concatenate(cols, axis=-1)


def displacement_rotation_coupling(n: np.ndarray) -> np.ndarray:
    """Matrix ``C`` with ``C u = (S* u) n``, shape ``(..., d) -> (..., rdim, d)``."""
    n = np.asarray(n, dtype=float)
    d = n.shape[-1]
    eye = np.eye(d)
    cols = [asym_adjoint_vector(eye[b]) @ n[..., :, None] for b in range(d)]
    return np.concatenate(cols, axis=-1)


def compliance_factor(mu, lam_inv, d: int):
    """``lam / (d lam + 2 mu)`` written in terms of ``1/lam`` (finite at lam = inf)."""
    return 1.0 / (d + 2.0 * np.asarray(mu) * np.asarray(lam_inv))


def compliance(sigma: np.ndarray, mu, lam, d: int | None = None) -> np.ndarray:
    """Apply ``A sigma = (sigma - lam/(d lam + 2 mu) tr(sigma) I) / (2 mu)``.

    ``lam`` may be ``np.inf``. ``A`` inverts ``tau -> 2 mu tau + lam tr(tau) I``.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[-1] if d is None else d
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        lam_inv = np.where(np.isinf(lam), 0.0, 1.0 / lam)
    c = compliance_factor(mu, lam_inv, d)
    tr = np.trace(sigma, axis1=-2, axis2=-1)
    out = sigma - (c * tr)[..., None, None] * np.eye(d)
    return out / (2.0 * mu)[..., None, None]


def stiffness(tau: np.ndarray, mu, lam) -> np.ndarray:
    """``2 mu tau + lam tr(tau) I`` (finite ``lam`` only)."""
    tau = np.asarray(tau, dtype=float)
    d = tau.shape[-1]
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    tr = np.trace(tau, axis1=-2, axis2=-1)
    return 2.0 * mu[..., None, None] * tau + (lam * tr)[..., None, None] * np.eye(d)


def frobenius(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", a, b)
