"""Pointwise algebra of a self-adjoint shape operator.

Everything here acts on symmetric matrices written in an orthonormal
frame, so plain matrix symmetry is the right notion of self-adjointness.
All functions accept arbitrary leading batch dimensions: a stack of
operators of shape ``B + (n, n)`` or of principal curvatures ``B + (n,)``.

Sign convention: the k-th mean curvature is
``binom(n, k) * H_k = sigma_k(-kappa_1, ..., -kappa_n)``, so that the
mean curvature vector is ``H_1 N``.  Reversing the unit normal maps
``kappa -> -kappa``, ``H_k -> (-1)^k H_k`` and ``P_k -> (-1)^k P_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import IndexRangeError, NumericError


def elementary_symmetric(values) -> np.ndarray:
    """All elementary symmetric functions ``sigma_0 .. sigma_n``.

    Uses the coefficient recurrence of ``prod_i (1 + x_i z)``, which is
    O(n^2) and avoids the cancellation of power-sum (Newton-Girard)
    formulas when the entries have mixed signs.
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    e = np.zeros(x.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        # descending j so e[j - 1] is still the previous stage
        for j in range(i + 1, 0, -1):
            e[..., j] = e[..., j] + x[..., i] * e[..., j - 1]
    return e


def sigma_k(values, k: int):
    """k-th elementary symmetric function of ``values`` (sigma_0 = 1)."""
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    if not 0 <= k <= n:
        raise IndexRangeError(f"sigma_k needs 0 <= k <= {n}, got k={k}")
    out = elementary_symmetric(x)[..., k]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CurvatureVector:
    """``S_0..S_n`` and ``H_0..H_n`` for one or many points.

    ``S`` and ``H`` have shape ``B + (n + 1,)``.  ``future`` records the
    Gauss map orientation that produced the principal curvatures.
    """

    n: int
    S: np.ndarray
    H: np.ndarray
    future: bool = True

    def Hk(self, k: int):
        """H_k with the convention H_k = 0 for k > n."""
        if k < 0:
            raise IndexRangeError(f"H_k needs k >= 0, got {k}")
        if k > self.n:
            return np.zeros(self.H.shape[:-1]) if self.H.ndim > 1 else 0.0
        out = self.H[..., k]
        return float(out) if np.ndim(out) == 0 else out

    def flipped(self) -> "CurvatureVector":
        """The same data for the opposite Gauss map."""
        sign = (-1.0) ** np.arange(self.n + 1)
        return CurvatureVector(self.n, self.S * sign, self.H * sign, not self.future)


def mean_curvatures(principal, future: bool = True) -> CurvatureVector:
    """Higher order mean curvatures from principal curvatures."""
    kappa = np.asarray(principal, dtype=float)
    n = kappa.shape[-1]
    if n < 1:
        raise IndexRangeError("need at least one principal curvature")
    S = elementary_symmetric(kappa)
    binoms = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    signs = (-1.0) ** np.arange(n + 1)
    H = signs * S / binoms
    return CurvatureVector(n, S, H, future)


def newton_coefficient(n: int, k: int) -> int:
    """c_k = (n - k) binom(n, k) = (k + 1) binom(n, k + 1)."""
    return (n - k) * comb(n, k)


@dataclass(frozen=True)
class NewtonFamily:
    """Newton transformations P_0..P_n of a (batch of) shape operator(s)."""

    n: int
    P: np.ndarray  # B + (n + 1, n, n)
    H: CurvatureVector
    c: np.ndarray  # c_0..c_n
    eigenvalues: np.ndarray  # principal curvatures, ascending, B + (n,)
    eigenvectors: np.ndarray  # B + (n, n), columns

    def Pk(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.n:
            raise IndexRangeError(f"P_k needs 0 <= k <= {self.n}, got k={k}")
        return self.P[..., k, :, :]


def _eigh(A):
    try:
        return np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(A) if np.all(np.isfinite(A)) else float("nan")
        raise NumericError(f"symmetric eigensolve failed (condition {cond!r}): {exc}") from exc


def newton_family(A, future: bool = True) -> NewtonFamily:
    """P_0 = I, P_k = binom(n, k) H_k I + A P_{k-1}, k = 1..n."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    kappa, vecs = _eigh(A)
    H = mean_curvatures(kappa, future)
    eye = np.broadcast_to(np.eye(n), A.shape)
    P = np.empty(A.shape[:-2] + (n + 1, n, n))
    P[..., 0, :, :] = eye
    for k in range(1, n + 1):
        coef = comb(n, k) * H.H[..., k]
        P[..., k, :, :] = coef[..., None, None] * eye + A @ P[..., k - 1, :, :]
    c = np.array([newton_coefficient(n, k) for k in range(n + 1)], dtype=float)
    return NewtonFamily(n, P, H, c, kappa, vecs)


def newton_eigenvalues(principal, k: int) -> np.ndarray:
    """mu_{i,k} = (-1)^k sum over k-subsets avoiding i of products of kappa."""
    kappa = np.asarray(principal, dtype=float)
    n = kappa.shape[-1]
    if not 0 <= k <= n - 1:
        raise IndexRangeError(f"newton_eigenvalues needs 0 <= k <= {n - 1}, got k={k}")
    out = np.empty(kappa.shape)
    for i in range(n):
        others = np.delete(kappa, i, axis=-1)
        out[..., i] = elementary_symmetric(others)[..., k]
    return (-1.0) ** k * out


def _spectral_norm(A):
    return np.max(np.abs(np.linalg.eigvalsh(A)), axis=-1)


@dataclass(frozen=True)
class TraceResiduals:
    trace_P: float
    trace_AP: float
    trace_A2P: float

    @property
    def worst(self) -> float:
        return max(self.trace_P, self.trace_AP, self.trace_A2P)


def trace_identity_suite(A) -> TraceResiduals:
    """Max over k of the three normalised trace-identity residuals.

    Checks tr P_k = c_k H_k, tr(A P_k) = -c_k H_{k+1} and
    tr(A^2 P_k) = binom(n, k+1) (n H_1 H_{k+1} - (n-k-1) H_{k+2}),
    each divided by ``1 + ||A||^(k+2)``.  Batches reduce to the max.
    """
    A = np.asarray(A, dtype=float)
    fam = newton_family(A)
    n = fam.n
    norm = _spectral_norm(A)
    A2 = A @ A
    H = fam.H
    r = np.zeros(3)
    for k in range(n + 1):
        Pk = fam.P[..., k, :, :]
        scale = 1.0 + norm ** (k + 2)
        t0 = np.trace(Pk, axis1=-2, axis2=-1) - fam.c[k] * H.Hk(k)
        t1 = np.trace(A @ Pk, axis1=-2, axis2=-1) + fam.c[k] * H.Hk(k + 1)
        rhs2 = comb(n, k + 1) * (n * H.Hk(1) * H.Hk(k + 1) - (n - k - 1) * H.Hk(k + 2))
        t2 = np.trace(A2 @ Pk, axis1=-2, axis2=-1) - rhs2
        for slot, t in enumerate((t0, t1, t2)):
            r[slot] = max(r[slot], float(np.max(np.abs(t) / scale)))
    return TraceResiduals(*r)


def cayley_hamilton_residual(A) -> float:
    """||P_n|| / max(1, ||A||^n); vanishes by Cayley-Hamilton."""
    A = np.asarray(A, dtype=float)
    fam = newton_family(A)
    n = fam.n
    Pn = np.linalg.norm(fam.P[..., n, :, :], axis=(-2, -1))
    return float(np.max(Pn / np.maximum(1.0, _spectral_norm(A) ** n)))


def newton_sum_identity(A, k: int) -> float:
    """Residual of sum_{j<k} (tr(P_j) A^{k-1-j} - P_j A^{k-1-j}) = (n-k) P_{k-1}.

    Frobenius norm of the difference divided by ``1 + ||A||^(k-1)``;
    batches reduce to the max.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if not 2 <= k <= n:
        raise IndexRangeError(f"newton_sum_identity needs 2 <= k <= {n}, got k={k}")
    fam = newton_family(A)
    powers = [np.broadcast_to(np.eye(n), A.shape)]
    for _ in range(k - 1):
        powers.append(powers[-1] @ A)
    lhs = np.zeros(A.shape)
    for j in range(k):
        Pj = fam.P[..., j, :, :]
        Apow = powers[k - 1 - j]
        tr = np.trace(Pj, axis1=-2, axis2=-1)
        lhs = lhs + tr[..., None, None] * Apow - Pj @ Apow
    diff = lhs - (n - k) * fam.P[..., k - 1, :, :]
    scale = 1.0 + _spectral_norm(A) ** (k - 1)
    return float(np.max(np.linalg.norm(diff, axis=(-2, -1)) / scale))


@dataclass(frozen=True)
class ChainReport:
    """Outcome of a Garding-type chain evaluation."""

    applicable: bool
    roots: tuple = ()
    slacks: tuple = ()
    violated: bool = False
    reason: str = ""

    @property
    def min_slack(self) -> float:
        return min(self.slacks) if self.slacks else float("inf")


def garding_chain(H: CurvatureVector, k: int, tol: float = 1e-12) -> ChainReport:
    """Evaluate H_1 >= H_2^(1/2) >= ... >= H_k^(1/k) > 0 at one point."""
    if not 1 <= k <= H.n:
        raise IndexRangeError(f"garding_chain needs 1 <= k <= {H.n}, got k={k}")
    vals = [float(H.Hk(j)) for j in range(1, k + 1)]
    if any(v <= 0.0 for v in vals):
        return ChainReport(False, reason="some H_j <= 0: chain not applicable")
    roots = tuple(v ** (1.0 / j) for j, v in enumerate(vals, start=1))
    slacks = tuple(roots[j] - roots[j + 1] for j in range(k - 1))
    violated = any(s < -tol for s in slacks)
    return ChainReport(True, roots, slacks, violated)


def cauchy_schwarz_chain(H: CurvatureVector) -> np.ndarray:
    """Slacks H_j^2 - H_{j-1} H_{j+1} for j = 1..n-1 (non-negative)."""
    n = H.n
    return np.stack([H.H[..., j] ** 2 - H.H[..., j - 1] * H.H[..., j + 1]
                     for j in range(1, n)], axis=-1)


@dataclass(frozen=True)
class DefinitenessReport:
    classification: str
    min_eigenvalue: float
    max_eigenvalue: float
    margin: float
    degenerate: bool = False
    eigenvalues: tuple = field(default=(), repr=False)

    @property
    def positive_definite(self) -> bool:
        return self.classification == "positive-definite"

    @property
    def definite(self) -> bool:
        return self.classification in ("positive-definite", "negative-definite")

    @property
    def semidefinite(self) -> bool:
        return self.classification != "indefinite"


def _classify(eigs, tol):
    lo, hi = eigs[0], eigs[-1]
    if lo > tol:
        return "positive-definite"
    if hi < -tol:
        return "negative-definite"
    if lo >= -tol:
        return "positive-semi"
    if hi <= tol:
        return "negative-semi"
    return "indefinite"


def classify_definiteness(P, rel_tol: float = 1e-10) -> DefinitenessReport:
    """Classify a single symmetric operator by its spectrum.

    The semidefinite band is ``rel_tol * ||P||`` (spectral norm).  The
    zero operator is reported as positive-semi with a degeneracy flag.
    """
    P = np.asarray(P, dtype=float)
    eigs, _ = _eigh(0.5 * (P + P.T))
    norm = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    tol = rel_tol * norm
    cls = _classify(eigs, tol)
    margin = float(np.min(np.abs(eigs)))
    degenerate = norm == 0.0 or margin <= tol
    return DefinitenessReport(cls, float(eigs[0]), float(eigs[-1]), margin,
                              degenerate, tuple(float(e) for e in eigs))


def classify_batch(P, rel_tol: float = 1e-10) -> np.ndarray:
    """Vectorised classification of a stack of operators (labels array)."""
    P = np.asarray(P, dtype=float)
    eigs = np.linalg.eigvalsh(0.5 * (P + np.swapaxes(P, -1, -2)))
    norm = np.max(np.abs(eigs), axis=-1)
    tol = rel_tol * norm
    lo, hi = eigs[..., 0], eigs[..., -1]
    out = np.full(lo.shape, "indefinite", dtype=object)
    out[(hi <= tol)] = "negative-semi"
    out[(lo >= -tol)] = "positive-semi"
    out[hi < -tol] = "negative-definite"
    out[lo > tol] = "positive-definite"
    return out


def overall_definiteness(P, rel_tol: float = 1e-10) -> str:
    """Common class of a whole stack of operators, e.g. over a grid.

    Returns the strongest label shared by every operator, or
    ``"indefinite"`` when signs disagree.
    """
    labels = set(classify_batch(P, rel_tol).ravel().tolist())
    if len(labels) == 1 and labels <= {"positive-definite", "negative-definite"}:
        return labels.pop()
    if labels <= {"positive-definite", "positive-semi"}:
        return "positive-semi"
    if labels <= {"negative-definite", "negative-semi"}:
        return "negative-semi"
    return "indefinite"


@dataclass(frozen=True)
class LemmaTally:
    """Draws that met a lemma's premise, and how many broke its conclusion."""

    tested: int
    violations: int
    worst_margin: float


def positive_h2_tally(principal, tol: float = 0.0) -> LemmaTally:
    """H_2 > 0 implies P_1 positive definite once the normal makes H_1 > 0."""
    kappa = np.asarray(principal, dtype=float)
    H = mean_curvatures(kappa)
    keep = H.H[..., 2] > tol
    kappa = kappa[keep]
    if kappa.size == 0:
        return LemmaTally(0, 0, float("inf"))
    flip = mean_curvatures(kappa).H[..., 1] < 0
    kappa = np.where(flip[..., None], -kappa, kappa)
    mu = newton_eigenvalues(kappa, 1)
    scale = 1.0 + np.max(np.abs(kappa), axis=-1)
    margin = np.min(mu, axis=-1) / scale
    return LemmaTally(int(kappa.shape[0]), int(np.sum(margin <= 0)), float(np.min(margin)))


def elliptic_cone_tally(principal, k: int, tol: float = 0.0) -> LemmaTally:
    """Draws in the positive cone of the elliptic branch (H_1..H_{k+1} > 0)
    must have P_1..P_k positive definite."""
    kappa = np.asarray(principal, dtype=float)
    n = kappa.shape[-1]
    if not 1 <= k <= n - 1:
        raise IndexRangeError(f"elliptic_cone_tally needs 1 <= k <= {n - 1}, got k={k}")
    H = mean_curvatures(kappa).H
    keep = np.all(H[..., 1:k + 2] > tol, axis=-1)
    kappa = kappa[keep]
    if kappa.size == 0:
        return LemmaTally(0, 0, float("inf"))
    scale = 1.0 + np.max(np.abs(kappa), axis=-1)
    worst = np.full(kappa.shape[0], np.inf)
    for j in range(1, k + 1):
        mu = newton_eigenvalues(kappa, j)
        worst = np.minimum(worst, np.min(mu, axis=-1) / scale ** j)
    return LemmaTally(int(kappa.shape[0]), int(np.sum(worst <= 0)), float(np.min(worst)))
