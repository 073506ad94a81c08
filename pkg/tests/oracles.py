"""Independent reference computations used by the tests.

Nothing here calls into the jet or tensor code of grwkit: symmetric
functions are enumerated subset by subset, ambient curvature comes from
sympy, and second fundamental forms from finite differences of the
surface height and of the full spacetime metric.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import sympy as sp


def esym(values, k):
    """sigma_k by explicit subset enumeration."""
    if k == 0:
        return 1.0
    return math.fsum(math.prod(c) for c in itertools.combinations(values, k))


def newton_mu(kappa, k):
    """Eigenvalues of P_k: mu_i = (-1)^k sigma_k(kappa without kappa_i)."""
    out = []
    for i in range(len(kappa)):
        rest = [kappa[j] for j in range(len(kappa)) if j != i]
        out.append((-1) ** k * esym(rest, k))
    return np.array(out)


def mean_curvature(kappa, k):
    """H_k for the future normal: sigma_k(-kappa) / binom(n, k)."""
    n = len(kappa)
    return esym([-v for v in kappa], k) / math.comb(n, k)


# -- symbolic curvature ---------------------------------------------------------

class SymbolicMetric:
    """Riemann tensor of a metric written in sympy, evaluated numerically.

    ``riemann(p)[a, b, c, d]`` is R^a_{bcd} with
    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    acting as X^c Y^d Z^b.
    """

    def __init__(self, coords, metric):
        self.coords = coords
        self.g = sp.Matrix(metric)
        dim = len(coords)
        ginv = self.g.inv()
        gam = [[[sp.simplify(sum(ginv[a, e] * (sp.diff(self.g[e, b], coords[c])
                                               + sp.diff(self.g[e, c], coords[b])
                                               - sp.diff(self.g[b, c], coords[e]))
                                 for e in range(dim)) / 2)
                 for c in range(dim)] for b in range(dim)] for a in range(dim)]
        riem = sp.MutableDenseNDimArray.zeros(dim, dim, dim, dim)
        for a, b, c, d in itertools.product(range(dim), repeat=4):
            expr = sp.diff(gam[a][d][b], coords[c]) - sp.diff(gam[a][c][b], coords[d])
            expr += sum(gam[a][c][e] * gam[e][d][b] - gam[a][d][e] * gam[e][c][b]
                        for e in range(dim))
            riem[a, b, c, d] = expr
        self._g = sp.lambdify(coords, self.g, "numpy")
        self._riem = sp.lambdify(coords, riem.tolist(), "numpy")

    def metric(self, p):
        return np.array(self._g(*p), dtype=float)

    def riemann(self, p):
        return np.array(self._riem(*p), dtype=float)

    def apply(self, p, X, Y, Z):
        """R(X, Y)Z at p."""
        return np.einsum("abcd,c,d,b->a", self.riemann(p), X, Y, Z)

    def sectional(self, p, X, Y):
        g = self.metric(p)
        num = np.einsum("a,ab,b->", self.apply(p, X, Y, Y), g, X)
        den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        return num / den


def de_sitter_polar():
    """-dt^2 + cosh(t)^2 (d theta^2 + sin(theta)^2 d phi^2)."""
    t, th, ph = sp.symbols("t theta phi")
    f = sp.cosh(t)
    return SymbolicMetric((t, th, ph), sp.diag(-1, f ** 2, f ** 2 * sp.sin(th) ** 2))


def warped_flat(f_expr_of_t, dim=2):
    """-dt^2 + f(t)^2 |dx|^2 with f given as a function of a sympy symbol."""
    t = sp.Symbol("t")
    xs = sp.symbols(f"x1:{dim + 1}")
    f = f_expr_of_t(t)
    return SymbolicMetric((t,) + tuple(xs), sp.diag(-1, *([f ** 2] * dim)))


# -- finite-difference second fundamental form ----------------------------------

def _ambient_metric(surface, t, x, chart):
    f = float(surface.spacetime.warping.f(np.array(t)))
    G = surface.fiber.metric_jet(np.asarray(x, float)[None], chart)[0][0]
    n = len(x)
    out = np.zeros((n + 1, n + 1))
    out[0, 0] = -1.0
    out[1:, 1:] = f * f * G
    return out


def fd_shape_operator(surface, x, chart, orientation="future", step=1e-4):
    """Principal curvatures at chart point ``x`` from finite differences.

    Uses only height values and metric values: derivatives of u by central
    differences, ambient Christoffel symbols by central differences of the
    metric, and II(X, Y) = <N, nabla_X Y>.
    """
    x = np.asarray(x, float)
    n = len(x)

    def u(y):
        return float(surface.height(np.asarray(y)[None], chart)[0][0])

    du = np.zeros(n)
    ddu = np.zeros((n, n))
    e = np.eye(n) * step
    for i in range(n):
        du[i] = (u(x + e[i]) - u(x - e[i])) / (2 * step)
        for j in range(n):
            ddu[i, j] = (u(x + e[i] + e[j]) - u(x + e[i] - e[j])
                         - u(x - e[i] + e[j]) + u(x - e[i] - e[j])) / (4 * step * step)
    p = np.concatenate([[u(x)], x])
    m = n + 1
    hs = 1e-5
    dG = np.zeros((m, m, m))
    for c in range(m):
        dp = np.zeros(m)
        dp[c] = hs
        gp = _ambient_metric(surface, p[0] + dp[0], p[1:] + dp[1:], chart)
        gm = _ambient_metric(surface, p[0] - dp[0], p[1:] - dp[1:], chart)
        dG[:, :, c] = (gp - gm) / (2 * hs)
    G = _ambient_metric(surface, p[0], p[1:], chart)
    Ginv = np.linalg.inv(G)
    gam = 0.5 * np.einsum("ae,ebc->abc", Ginv,
                          dG + np.swapaxes(dG, 1, 2) - np.einsum("bce->ebc", dG))
    T = np.zeros((n, m))  # tangent vectors d_i psi
    T[:, 0] = du
    T[:, 1:] = np.eye(n)
    # normal: G N orthogonal to T, timelike unit
    null = np.linalg.svd(T @ G)[2][-1]
    N = null / math.sqrt(-(null @ G @ null))
    if (N[0] > 0) != (orientation == "future"):
        N = -N
    g = T @ G @ T.T
    II = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = np.zeros(m)
            acc[0] = ddu[i, j]
            acc += np.einsum("abc,b,c->a", gam, T[i], T[j])
            II[i, j] = N @ G @ acc
    A = np.linalg.solve(g, II)
    return np.sort(np.linalg.eigvals(A).real), g
