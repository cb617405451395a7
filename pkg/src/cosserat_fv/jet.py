"""Second-order forward-mode differentiation on batches of points.

A :class:`Jet` carries the value, gradient and Hessian of a scalar field at
``N`` points. Arithmetic propagates all three exactly (truncated Taylor
arithmetic, equivalent to nested hyper-dual numbers), so manufactured source
terms built from second derivatives carry no truncation error.

Example::

    >>> import numpy as np
    >>> pts = np.array([[0.25, 0.5]])
    >>> j = jet_eval(lambda x, y: x * x * y, pts)
    >>> j.grad
    array([[0.25  , 0.0625]])
"""

from __future__ import annotations

import numpy as np


class KinkError(ValueError):
    """Raised when min/max is evaluated exactly on its non-differentiable set."""


class Jet:
    """Value, gradient ``(N, d)`` and Hessian ``(N, d, d)`` at ``N`` points."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100

    def __init__(self, val, grad, hess):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        c = np.broadcast_to(np.asarray(other, dtype=float), self.val.shape)
        return Jet(c, np.zeros_like(self.grad), np.zeros_like(self.hess))

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.val * c, self.grad * c[..., None],
                       self.hess * c[..., None, None])
        outer = np.einsum("ni,nj->nij", self.grad, other.grad)
        return Jet(
            self.val * other.val,
            self.grad * other.val[:, None] + other.grad * self.val[:, None],
            self.hess * other.val[:, None, None]
            + other.hess * self.val[:, None, None]
            + outer + outer.transpose(0, 2, 1),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            raise TypeError("only constant exponents are supported")
        p = float(p)
        if p == 0.0:
            return self._lift(1.0)
        if p == 1.0:
            return self
        if p == 2.0:
            return self * self
        v = self.val
        return self._chain(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def reciprocal(self) -> "Jet":
        v = self.val
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def _chain(self, f0, f1, f2) -> "Jet":
        """Compose with a scalar function given its value and two derivatives."""
        outer = np.einsum("ni,nj->nij", self.grad, self.grad)
        return Jet(
            f0,
            self.grad * f1[:, None],
            self.hess * f1[:, None, None] + outer * f2[:, None, None],
        )

    def __repr__(self):
        return f"Jet(val={self.val!r}, grad={self.grad!r})"


def variables(points) -> list[Jet]:
    """Seed one jet per coordinate of ``points`` with shape ``(N, d)``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    out = []
    for a in range(d):
        g = np.zeros((n, d))
        g[:, a] = 1.0
        out.append(Jet(points[:, a], g, np.zeros((n, d, d))))
    return out


def jet_eval(field, points) -> Jet:
    """Evaluate ``field(*coords)`` on jets seeded at ``points``."""
    return field(*variables(points))


def constant(value, like: Jet) -> Jet:
    return like._lift(value)


def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    s, c = np.sin(a.val), np.cos(a.val)
    return a._chain(s, c, -s)


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    s, c = np.sin(a.val), np.cos(a.val)
    return a._chain(c, -s, -c)


def sqrt(a):
    if not isinstance(a, Jet):
        return np.sqrt(a)
    r = np.sqrt(a.val)
    return a._chain(r, 0.5 / r, -0.25 / (r * a.val))


def _select(a, b, take_a):
    ja, jb = (a if isinstance(a, Jet) else None), (b if isinstance(b, Jet) else None)
    like = ja if ja is not None else jb
    ja = like._lift(a)
    jb = like._lift(b)
    if np.any(ja.val == jb.val):
        idx = int(np.flatnonzero(ja.val == jb.val)[0])
        raise KinkError(f"min/max evaluated on its kink set (point index {idx})")
    return Jet(
        np.where(take_a, ja.val, jb.val),
        np.where(take_a[:, None], ja.grad, jb.grad),
        np.where(take_a[:, None, None], ja.hess, jb.hess),
    )


def maximum(a, b) -> Jet:
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.maximum(a, b)
    va = a.val if isinstance(a, Jet) else np.asarray(a, dtype=float)
    vb = b.val if isinstance(b, Jet) else np.asarray(b, dtype=float)
    return _select(a, b, np.broadcast_to(va > vb, np.broadcast(va, vb).shape))


def minimum(a, b) -> Jet:
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.minimum(a, b)
    va = a.val if isinstance(a, Jet) else np.asarray(a, dtype=float)
    vb = b.val if isinstance(b, Jet) else np.asarray(b, dtype=float)
    return _select(a, b, np.broadcast_to(va < vb, np.broadcast(va, vb).shape))
