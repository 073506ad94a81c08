"""Second-order forward-mode jets in several variables.

A :class:`Jet` carries the value, gradient and Hessian of a scalar
function of ``n`` chart coordinates, for a whole batch of base points at
once.  Arithmetic propagates all three exactly (truncated Taylor
arithmetic), which is what curvature computations need: a metric's
Christoffel symbols and Riemann tensor are polynomial in its 2-jet.

Shapes: ``val`` is ``B``, ``d`` is ``B + (n,)`` and ``dd`` is
``B + (n, n)`` where ``B`` is an arbitrary batch shape.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "d", "dd")

    def __init__(self, val, d, dd):
        self.val = np.asarray(val, dtype=float)
        self.d = np.asarray(d, dtype=float)
        self.dd = np.asarray(dd, dtype=float)

    @property
    def nvars(self) -> int:
        return self.d.shape[-1]

    @classmethod
    def variables(cls, x) -> list["Jet"]:
        """Coordinate jets for points ``x`` of shape ``B + (n,)``."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        eye = np.eye(n)
        zero = np.zeros(x.shape[:-1] + (n, n))
        return [cls(x[..., i], np.broadcast_to(eye[i], x.shape).copy(), zero.copy())
                for i in range(n)]

    @classmethod
    def constant(cls, c, like: "Jet") -> "Jet":
        val = np.broadcast_to(np.asarray(c, dtype=float), like.val.shape).copy()
        return cls(val, np.zeros_like(like.d), np.zeros_like(like.dd))

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self)

    def chain(self, f0, f1, f2) -> "Jet":
        """Compose with a scalar function whose value and first two
        derivatives at ``self.val`` are ``f0, f1, f2``."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        d = f1[..., None] * self.d
        dd = (f1[..., None, None] * self.dd
              + f2[..., None, None] * self.d[..., :, None] * self.d[..., None, :])
        return Jet(f0, d, dd)

    def __neg__(self):
        return Jet(-self.val, -self.d, -self.dd)

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val + other, self.d, self.dd)
        return Jet(self.val + other.val, self.d + other.d, self.dd + other.dd)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.val * c, self.d * c[..., None], self.dd * c[..., None, None])
        a, b = self, other
        val = a.val * b.val
        d = a.d * b.val[..., None] + a.val[..., None] * b.d
        cross = a.d[..., :, None] * b.d[..., None, :]
        dd = (a.dd * b.val[..., None, None] + a.val[..., None, None] * b.dd
              + cross + np.swapaxes(cross, -1, -2))
        return Jet(val, d, dd)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.val
        return self.chain(inv, -inv * inv, 2.0 * inv ** 3)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self)
            for _ in range(int(p)):
                out = out * self
            return out
        v = self.val
        return self.chain(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __repr__(self):
        return f"Jet(val={self.val!r}, d={self.d!r}, dd={self.dd!r})"


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return x.chain(s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return x.chain(c, -s, -c)
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.val)
        return x.chain(e, e, e)
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        return x.chain(np.log(x.val), 1.0 / x.val, -1.0 / x.val ** 2)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.val)
        return x.chain(r, 0.5 / r, -0.25 / (r * x.val))
    return np.sqrt(x)


def cosh(x):
    if isinstance(x, Jet):
        c, s = np.cosh(x.val), np.sinh(x.val)
        return x.chain(c, s, c)
    return np.cosh(x)


def sinh(x):
    if isinstance(x, Jet):
        c, s = np.cosh(x.val), np.sinh(x.val)
        return x.chain(s, c, s)
    return np.sinh(x)


def tanh(x):
    if isinstance(x, Jet):
        th = np.tanh(x.val)
        sech2 = 1.0 - th * th
        return x.chain(th, sech2, -2.0 * th * sech2)
    return np.tanh(x)


def stack_matrix(entries: list[list[Jet]]):
    """Stack an n x n nested list of jets into arrays.

    Returns ``(G, dG, ddG)`` with ``G[..., i, j]``,
    ``dG[..., i, j, k] = d_k G_ij`` and
    ``ddG[..., i, j, k, l] = d_k d_l G_ij``.
    """
    G = np.stack([np.stack([e.val for e in row], axis=-1) for row in entries], axis=-2)
    dG = np.stack([np.stack([e.d for e in row], axis=-2) for row in entries], axis=-3)
    ddG = np.stack([np.stack([e.dd for e in row], axis=-3) for row in entries], axis=-4)
    return G, dG, ddG
