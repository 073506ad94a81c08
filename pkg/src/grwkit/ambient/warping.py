"""Warping functions f > 0 of a GRW spacetime, with closed-form jets.

Every built-in kind supplies f, f', f'' in closed form together with a
primitive of f.  The log-derivatives are also closed form where that
matters for cancellation: for ``cosh`` the quantity ``f f'' - f'^2`` is
evaluated as ``f^2 (log f)''`` which stays at 1 to rounding for all t,
whereas ``cosh^2 - sinh^2`` loses digits quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from ..errors import ContractError, UnsupportedError
from ..jets import Jet

KINDS = ("cosh", "exp", "const", "polynomial", "sine", "tanh")
PARAMS = {
    "cosh": ("a",),
    "exp": ("c", "lam"),
    "const": ("c",),
    "polynomial": ("coeffs",),
    "sine": ("eps", "omega"),
    "tanh": ("eps",),
}


@dataclass(frozen=True)
class WarpingFunction:
    """A warping function on an open interval ``(lo, hi)``.

    ``None`` ends are unbounded.  The primitive ``g`` satisfies
    ``g' = f`` and ``g(t_ref) = 0``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    interval: tuple = (None, None)
    t_ref: float = 0.0

    def __post_init__(self):
        if self.kind == "tabulated":
            raise UnsupportedError(
                "tabulated warpings are not accepted: curvature terms need exact second derivatives")
        if self.kind not in KINDS:
            raise UnsupportedError(f"unknown warping kind {self.kind!r}; expected one of {KINDS}")
        p = self.params
        unknown = set(p) - set(PARAMS[self.kind])
        if unknown:
            raise ContractError(f"unknown {self.kind} parameters {sorted(unknown)}; "
                                f"expected {PARAMS[self.kind]}")
        if self.kind == "cosh" and p.get("a", 1.0) <= 0:
            raise ContractError("cosh warping needs a > 0")
        if self.kind == "exp" and p.get("c", 1.0) <= 0:
            raise ContractError("exp warping needs c > 0")
        if self.kind == "const" and p.get("c", 1.0) <= 0:
            raise ContractError("const warping needs c > 0")
        if self.kind in ("sine", "tanh") and not abs(p.get("eps", 0.1)) < 1:
            raise ContractError(f"{self.kind} warping needs |eps| < 1 to stay positive")
        if self.kind == "polynomial":
            if not p.get("coeffs"):
                raise ContractError("polynomial warping needs non-empty coeffs")
            lo, hi = self.interval
            if lo is None or hi is None:
                raise ContractError("polynomial warping needs a bounded interval")
            ts = np.linspace(lo, hi, 2049)[1:-1]
            if np.any(self.f(ts) <= 0):
                raise ContractError("polynomial warping is not positive on its interval")

    # -- raw derivatives -------------------------------------------------
    def derivatives(self, t):
        """(f, f', f'') at t."""
        t = np.asarray(t, dtype=float)
        p = self.params
        k = self.kind
        if k == "cosh":
            a = p.get("a", 1.0)
            s = t / a
            return a * np.cosh(s), np.sinh(s), np.cosh(s) / a
        if k == "exp":
            c, lam = p.get("c", 1.0), p.get("lam", 1.0)
            e = c * np.exp(lam * t)
            return e, lam * e, lam * lam * e
        if k == "const":
            c = p.get("c", 1.0)
            return np.full_like(t, c), np.zeros_like(t), np.zeros_like(t)
        if k == "polynomial":
            co = np.asarray(p["coeffs"], dtype=float)
            d1 = npoly.polyder(co)
            d2 = npoly.polyder(co, 2)
            return npoly.polyval(t, co), npoly.polyval(t, d1), npoly.polyval(t, d2)
        if k == "sine":
            eps, om = p.get("eps", 0.1), p.get("omega", 1.0)
            return (1.0 + eps * np.sin(om * t), eps * om * np.cos(om * t),
                    -eps * om * om * np.sin(om * t))
        if k == "tanh":
            eps = p.get("eps", 0.1)
            th = np.tanh(t)
            sech2 = 1.0 - th * th
            return 1.0 + eps * th, eps * sech2, -2.0 * eps * sech2 * th
        raise UnsupportedError(k)

    def f(self, t):
        return self.derivatives(t)[0]

    def df(self, t):
        return self.derivatives(t)[1]

    def ddf(self, t):
        return self.derivatives(t)[2]

    def log_d1(self, t):
        """(log f)'."""
        t = np.asarray(t, dtype=float)
        if self.kind == "cosh":
            a = self.params.get("a", 1.0)
            return np.tanh(t / a) / a
        if self.kind == "exp":
            return np.full_like(t, self.params.get("lam", 1.0))
        if self.kind == "const":
            return np.zeros_like(t)
        f, d1, _ = self.derivatives(t)
        return d1 / f

    def log_d2(self, t):
        """(log f)'' = (f f'' - f'^2) / f^2."""
        t = np.asarray(t, dtype=float)
        if self.kind == "cosh":
            a = self.params.get("a", 1.0)
            return 1.0 / (a * np.cosh(t / a)) ** 2
        if self.kind in ("exp", "const"):
            return np.zeros_like(t)
        f, d1, d2 = self.derivatives(t)
        return d2 / f - (d1 / f) ** 2

    def null_expansion(self, t):
        """f f'' - f'^2, evaluated as f^2 (log f)''."""
        return self.f(t) ** 2 * self.log_d2(t)

    def _antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        k = self.kind
        if k == "cosh":
            a = p.get("a", 1.0)
            return a * a * np.sinh(t / a)
        if k == "exp":
            c, lam = p.get("c", 1.0), p.get("lam", 1.0)
            if lam == 0:
                return c * t
            return c * np.exp(lam * t) / lam
        if k == "const":
            return p.get("c", 1.0) * t
        if k == "polynomial":
            return npoly.polyval(t, npoly.polyint(np.asarray(p["coeffs"], dtype=float)))
        if k == "sine":
            eps, om = p.get("eps", 0.1), p.get("omega", 1.0)
            return t - eps / om * np.cos(om * t)
        if k == "tanh":
            eps = p.get("eps", 0.1)
            # log cosh t written to avoid overflow
            return t + eps * (np.abs(t) + np.log1p(np.exp(-2.0 * np.abs(t))) - math.log(2.0))
        raise UnsupportedError(k)

    def primitive(self, t):
        """g(t) with g' = f and g(t_ref) = 0."""
        return self._antiderivative(t) - self._antiderivative(self.t_ref)

    # -- jets ------------------------------------------------------------
    def jet(self, u: Jet) -> Jet:
        """f composed with a scalar jet."""
        f, d1, d2 = self.derivatives(u.val)
        return u.chain(f, d1, d2)

    def primitive_jet(self, u: Jet) -> Jet:
        f, d1, _ = self.derivatives(u.val)
        return u.chain(self.primitive(u.val), f, d1)

    def contains(self, t) -> bool:
        lo, hi = self.interval
        t = np.asarray(t)
        ok = np.ones(t.shape, dtype=bool)
        if lo is not None:
            ok &= t > lo
        if hi is not None:
            ok &= t < hi
        return bool(np.all(ok))

    def with_reference(self, t_ref: float) -> "WarpingFunction":
        return WarpingFunction(self.kind, dict(self.params), self.interval, float(t_ref))


def make_warping(kind: str, params: dict | None = None, interval=None,
                 t_ref: float = 0.0) -> WarpingFunction:
    params = dict(params or {})
    if interval is None:
        interval = tuple(params.pop("interval", (None, None)))
    return WarpingFunction(kind, params, tuple(interval), float(t_ref))
