"""Hypothesis and conclusion ledgers for the rigidity results.

Every check evaluates the hypotheses of a result on a quadrature grid,
records a signed margin for each, and only then looks at the
conclusions.  A result whose hypotheses do not all hold imposes nothing,
so its report is ``not-checkable`` with verdict ``consistent``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from .. import curvalg
from .. import operators as ops
from ..ambient.fiber import QuadratureGrid
from ..errors import ContractError, UnsupportedError
from ..hypersurface import GraphHypersurface, PointGeometry, pointwise_geometry, refine_extremum

SATISFIED = "satisfied"
VIOLATED = "violated"
NOT_CHECKABLE = "not-checkable"

CONSISTENT = "consistent"
POSSIBLE_EXCEPTION = "possible-exception"
INCONSISTENT = "inconsistent-with-paper"

DEFAULT_TOLERANCES = {
    "constant_H": 1e-8,
    "umbilic": 1e-9,
    "slice": 1e-9,
    "ncc": 1e-12,
    "sign": 1e-9,
    "quotient": 1e-9,
    "definiteness": 1e-10,
    "nonvanishing": 1e-12,
    "constant_curvature": 1e-10,
    "laplacian": 1e-8,
    "elliptic": 5e-2,
    "trace": 1e-10,
    "cayley_hamilton": 1e-8,
    "newton_sum": 1e-9,
    "operators": 1e-6,
    "pairing": 1e-8,
    "integrand": 1e-10,
    "codazzi": 1e-6,
    "mf12": 1e-5,
    "mfk": 1e-4,
    "order": 2.0,
}

THEOREMS = (
    "quotient-slice",
    "quotient-slice-semidefinite",
    "h2-umbilic-rw",
    "hk-umbilic-rw-slab",
    "hk-umbilic-rw-elliptic",
    "cmc-slice-grw",
    "hk-umbilic-grw-strong",
)
ALIASES = {
    "5.1": "quotient-slice",
    "5.2": "quotient-slice-semidefinite",
    "7.2": "h2-umbilic-rw",
    "7.3": "hk-umbilic-rw-slab",
    "7.4": "hk-umbilic-rw-elliptic",
    "9.1": "cmc-slice-grw",
    "9.2": "hk-umbilic-grw-strong",
}


def resolve_theorem(theorem) -> str:
    key = str(theorem)
    key = ALIASES.get(key, key)
    if key not in THEOREMS:
        raise ContractError(f"unknown theorem {theorem!r}; expected one of {THEOREMS} "
                            f"or {tuple(ALIASES)}")
    return key


def k_range(theorem: str, n: int) -> tuple[int, int]:
    """Admissible (lo, hi) for k, inclusive."""
    theorem = resolve_theorem(theorem)
    return {
        "quotient-slice": (0, n - 1),
        "quotient-slice-semidefinite": (0, n - 1),
        "h2-umbilic-rw": (2, 2),
        "hk-umbilic-rw-slab": (3, n),
        "hk-umbilic-rw-elliptic": (3, n - 1),
        "cmc-slice-grw": (1, 1),
        "hk-umbilic-grw-strong": (2, n),
    }[theorem]


def tolerances(overrides=None, scale: float = 1.0) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (overrides or {}).items():
        if key in tol:
            tol[key] = float(val)
    # the convergence order is a rate, not a band, so it is not scaled
    return {k: v if k == "order" else v * scale for k, v in tol.items()}


# -- ledger records ----------------------------------------------------------

@dataclass(frozen=True)
class LedgerEntry:
    """One hypothesis: ``margin >= 0`` means it holds with that much room."""

    name: str
    status: str
    margin: float
    value: float = float("nan")
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Conclusion:
    """One claimed property; ``exceptional`` marks claims the exceptional
    branch (umbilical non-slice in a constant-curvature ambient) may break."""

    name: str
    value: float
    tol: float
    holds: bool
    exceptional: bool = False
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def derive_status(hypotheses) -> str:
    return "hypotheses-hold" if all(h.status == SATISFIED for h in hypotheses) else NOT_CHECKABLE


def derive_verdict(hypotheses, conclusions, proof=(), exception_possible=False) -> str:
    if derive_status(hypotheses) != "hypotheses-hold":
        return CONSISTENT
    failing = [c for c in list(conclusions) + list(proof) if not c.holds]
    if not failing:
        return CONSISTENT
    if exception_possible and all(c.exceptional for c in failing):
        return POSSIBLE_EXCEPTION
    return INCONSISTENT


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    k: int
    orientation: str
    hypotheses: tuple
    conclusions: tuple
    proof: tuple = ()
    exception_possible: bool = False
    notes: tuple = ()

    @property
    def status(self) -> str:
        return derive_status(self.hypotheses)

    @property
    def verdict(self) -> str:
        return derive_verdict(self.hypotheses, self.conclusions, self.proof,
                              self.exception_possible)

    def hypothesis(self, name: str) -> LedgerEntry:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def conclusion(self, name: str) -> Conclusion:
        for c in tuple(self.conclusions) + tuple(self.proof):
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "k": self.k,
            "orientation": self.orientation,
            "status": self.status,
            "verdict": self.verdict,
            "exception_possible": self.exception_possible,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "conclusions": [c.to_dict() for c in self.conclusions],
            "proof": [c.to_dict() for c in self.proof],
            "notes": list(self.notes),
        }


# -- shared helpers ----------------------------------------------------------

def _entry(name, margin, value=float("nan"), detail="", strict=False):
    ok = margin > 0 if strict else margin >= 0
    return LedgerEntry(name, SATISFIED if ok else VIOLATED, float(margin), float(value), detail)


def _spread_entry(name, values, eps):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        return LedgerEntry(name, NOT_CHECKABLE, float("nan"), float("nan"),
                           "non-finite values on the grid")
    mean = float(np.mean(values))
    spread = float(np.ptp(values))
    band = eps * (1 + abs(mean))
    return _entry(name, band - spread, spread,
                  f"spread {spread!r} against band {band!r} (mean {mean!r})")


def _closed_entry(surface):
    compact = bool(surface.fiber.compact)
    return LedgerEntry("spatially-closed", SATISFIED if compact else VIOLATED,
                       1.0 if compact else -1.0, detail=f"fiber {surface.fiber.kind}")


def _dimension_entry(n, need):
    return _entry(f"dimension n>={need}", n - need, n)


def _rw_entry(surface):
    kappa = surface.fiber.kappa
    if kappa is None:
        return LedgerEntry("fiber-constant-curvature", VIOLATED, -1.0,
                           detail="fiber has no constant sectional curvature")
    return LedgerEntry("fiber-constant-curvature", SATISFIED, 0.0, float(kappa))


def _ncc_entry(st, kind, tol):
    try:
        m = st.ncc_margin(kind)
    except (UnsupportedError, ContractError) as exc:
        return LedgerEntry(kind, NOT_CHECKABLE, float("nan"), detail=str(exc)), None
    detail = f"fiber term {m.fiber_term!r}, sup(ff''-f'^2) {m.sup_expansion!r}, strict={m.strict}"
    if m.low_confidence:
        detail += "; " + m.notes
    entry = LedgerEntry(kind, SATISFIED if m.margin >= -tol else VIOLATED,
                        m.margin, m.margin, detail)
    return entry, m


def _log_concave_entry(st, tol, strict):
    """-log f convex on the spacetime window: sup (ff''-f'^2) <= 0."""
    sup, t_star, window, unbounded = st.sup_null_expansion()
    margin = -sup
    detail = f"sup(ff''-f'^2) = {sup!r} at t = {t_star!r} on {window}"
    if unbounded:
        detail += " (unbounded interval sampled on a finite window)"
    name = "ff''-f'^2<=0 (isolated equality)" if strict else "ff''-f'^2<=0"
    if not strict:
        return LedgerEntry(name, SATISFIED if margin >= -tol else VIOLATED, margin, sup, detail)
    if margin > tol:
        return LedgerEntry(name, SATISFIED, margin, sup, detail)
    if margin >= -tol:
        return LedgerEntry(name, NOT_CHECKABLE, margin, sup,
                           detail + "; equality at isolated points cannot be certified by sampling")
    return LedgerEntry(name, VIOLATED, margin, sup, detail)


def _definiteness(P, rel_tol):
    eig = np.linalg.eigvalsh(0.5 * (P + np.swapaxes(P, -1, -2)))
    label = curvalg.overall_definiteness(P, rel_tol)
    scale = max(float(np.max(np.abs(eig))), 1e-300)
    lo, hi = float(np.min(eig)), float(np.max(eig))
    if label.startswith("positive"):
        margin = lo / scale
    elif label.startswith("negative"):
        margin = -hi / scale
    else:
        margin = -min(-lo, hi) / scale
    return label, margin


def _definite_entry(geo, k, rel_tol, semidefinite):
    label, margin = _definiteness(geo.Pk(k), rel_tol)
    if semidefinite:
        ok = label != "indefinite"
        name = f"P_{k} semidefinite"
    else:
        ok = label in ("positive-definite", "negative-definite")
        name = f"P_{k} definite"
    return LedgerEntry(name, SATISFIED if ok else VIOLATED, margin, margin, label), label


def _nonvanishing_entry(values, name, tol):
    values = np.asarray(values, dtype=float)
    same_sign = bool(np.all(values > 0) or np.all(values < 0))
    margin = float(np.min(np.abs(values)))
    if not same_sign:
        margin = -margin
    ok = same_sign and margin > tol
    return LedgerEntry(name, SATISFIED if ok else VIOLATED, margin, margin)


def height_extremes(surface: GraphHypersurface, grid: QuadratureGrid, h=None):
    """(h_min, x_min, chart_min, h_max, x_max, chart_max) with Newton refinement.

    Grid extrema are polished to critical points of the height when the
    refinement converges; otherwise the grid nodes are kept.
    """
    if h is None:
        h = surface.height(grid.nodes, grid.chart)[0]
    out = []
    for maximize in (False, True):
        i = int(np.argmax(h) if maximize else np.argmin(h))
        x, chart, val = grid.nodes[i], grid.chart, float(h[i])
        if not surface.is_slice:
            xr, chart2 = refine_extremum(surface, grid.nodes[i], grid.chart, maximize)
            if xr is not None:
                vr = float(surface.height(xr[None], chart2)[0][0])
                if (vr >= val) if maximize else (vr <= val):
                    x, chart, val = xr, chart2, vr
        out.append((val, np.asarray(x, float), chart))
    (lo, xlo, clo), (hi, xhi, chi) = out
    return lo, xlo, clo, hi, xhi, chi


def _slab_entry(surface, lo, hi, tol):
    """f' keeps a strict sign on [h_min, h_max] (the tightest slab)."""
    w = surface.spacetime.warping
    ts = np.linspace(lo, hi, 513)
    dfs = w.df(ts)
    sign = 1 if np.mean(dfs) >= 0 else -1
    margin = float(np.min(sign * dfs))
    scale = 1.0 + float(np.max(np.abs(w.f(ts))))
    detail = f"min sign(f') f' on [{lo!r}, {hi!r}] = {margin!r}"
    slab = surface.spacetime.slab
    if slab is not None:
        inside = slab[0] < lo and hi < slab[1]
        detail += f"; declared slab {tuple(slab)} contains the surface: {inside}"
    ok = margin > tol * scale
    return LedgerEntry("slab with f' != 0", SATISFIED if ok else VIOLATED, margin, margin,
                       detail), sign


def _orientation_from_sign(sign):
    return "future" if sign >= 0 else "past"


def _exception_flag(st, ncc, tol):
    """Ambient flagged constant-curvature with NCC margin 0."""
    if ncc is None or st.fiber.kappa is None:
        return False
    try:
        cc = st.constant_curvature_check()
    except UnsupportedError:
        return False
    return bool(cc.residual <= tol["constant_curvature"] and abs(ncc.margin) <= tol["ncc"])


def _conclusions(geo: PointGeometry, k: int, tol: dict, need_df: bool):
    """Umbilicity, slice deficit and H_k(slice) residual."""
    out = []
    dev = geo.umbilicity()
    kap_scale = 1 + float(np.max(np.abs(geo.kappa)))
    out.append(Conclusion("totally-umbilical", float(np.max(dev)), tol["umbilic"] * kap_scale,
                          bool(np.max(dev) <= tol["umbilic"] * kap_scale)))
    hbar = float(np.mean(geo.h))
    slice_dev = float(np.max(np.abs(geo.h - hbar)))
    h_scale = 1 + abs(hbar)
    out.append(Conclusion("slice", slice_dev, tol["slice"] * h_scale,
                          bool(slice_dev <= tol["slice"] * h_scale), exceptional=True,
                          detail="sup|h - mean h|"))
    s = 1.0 if geo.orientation == "future" else -1.0
    expected = (s * geo.L1) ** k
    res = float(np.max(np.abs(geo.Hk(k) - expected)))
    sc = 1 + float(np.max(np.abs(expected)))
    out.append(Conclusion(f"H_{k} = (f'/f)^{k}", res, tol["umbilic"] * sc,
                          bool(res <= tol["umbilic"] * sc), exceptional=True,
                          detail="sup|H_k - (f'(h)/f(h))^k| in the chosen orientation"))
    if need_df:
        dfbar = float(np.abs(geo.surface.spacetime.warping.df(hbar)))
        out.append(Conclusion("f'(t0) != 0", dfbar, tol["sign"], bool(dfbar > tol["sign"]),
                              exceptional=True, detail="at the mean height"))
    return out


# -- Lemma: bounds on H_{k+1}/H_k ---------------------------------------------

@dataclass(frozen=True)
class QuotientReport:
    k: int
    status: str  # "checked" | "not-checkable"
    reason: str = ""
    definiteness: str = ""
    h_min: float = float("nan")
    h_max: float = float("nan")
    min_quotient: float = float("nan")
    max_quotient: float = float("nan")
    bound_at_hmax: float = float("nan")
    bound_at_hmin: float = float("nan")
    margin_upper: float = float("nan")
    margin_lower: float = float("nan")
    pointwise_margin_max: float = float("nan")
    pointwise_margin_min: float = float("nan")
    holds: bool = True
    chain_applicable: bool = False
    chain_margin: float = float("nan")
    chain_holds: bool = True
    tol: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def quotient_bound_check(surface: GraphHypersurface, grid: QuadratureGrid, k: int,
                         tol: dict | None = None, orientation: str = "future") -> QuotientReport:
    """min H_{k+1}/H_k <= (log f)'(h_max) and max H_{k+1}/H_k >= (log f)'(h_min).

    Gated on P_k semidefinite and H_k nonvanishing over the grid.  The grid
    is augmented with the refined extremum points of the height, where the
    inequalities hold pointwise; margins there are reported separately.
    When (log f)'' <= 0 on the spacetime window the chained form is also
    checked.
    """
    tol = tol or tolerances()
    n = surface.n
    if not 0 <= k <= n - 1:
        raise ContractError(f"quotient bound needs 0 <= k <= {n - 1}, got {k}")
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    label, _ = _definiteness(geo.Pk(k), tol["definiteness"])
    Hk = geo.Hk(k)
    if label == "indefinite":
        return QuotientReport(k, NOT_CHECKABLE, f"P_{k} is indefinite on the grid", label)
    if not (np.all(Hk > tol["nonvanishing"]) or np.all(Hk < -tol["nonvanishing"])):
        return QuotientReport(k, NOT_CHECKABLE, f"H_{k} vanishes or changes sign on the grid",
                              label)
    w = surface.spacetime.warping
    lo, xlo, clo, hi, xhi, chi = height_extremes(surface, grid, geo.h)
    q = geo.Hk(k + 1) / Hk
    pts = []
    for x, ch in ((xlo, clo), (xhi, chi)):
        g1 = pointwise_geometry(surface, x[None], ch, orientation)
        pts.append((float(g1.h[0]), float(g1.Hk(k + 1)[0] / g1.Hk(k)[0])))
    (h_lo, q_lo), (h_hi, q_hi) = pts
    qmin = min(float(np.min(q)), q_lo, q_hi)
    qmax = max(float(np.max(q)), q_lo, q_hi)
    b_hi, b_lo = float(w.log_d1(hi)), float(w.log_d1(lo))
    scale = 1 + max(abs(qmin), abs(qmax), abs(b_hi), abs(b_lo))
    t = tol["quotient"] * scale
    m_up = b_hi - qmin
    m_low = qmax - b_lo
    pm_max = float(w.log_d1(h_hi)) - q_hi
    pm_min = q_lo - float(w.log_d1(h_lo))
    holds = m_up >= -t and m_low >= -t and pm_max >= -t and pm_min >= -t
    sup = surface.spacetime.sup_null_expansion()[0]
    chain = sup <= tol["ncc"]
    chain_margin = b_lo - b_hi
    chain_holds = (not chain) or (chain_margin >= -t and holds)
    return QuotientReport(k, "checked", "", label, lo, hi, qmin, qmax, b_hi, b_lo,
                          float(m_up), float(m_low), float(pm_max), float(pm_min),
                          bool(holds), bool(chain), float(chain_margin), bool(chain_holds), t)


# -- constant mean curvature: superharmonic test function --------------------

@dataclass(frozen=True)
class CmcReport:
    status: str  # "checked" | "not-checkable"
    reason: str = ""
    H: float = float("nan")
    H_spread: float = float("nan")
    ncc_margin: float = float("nan")
    phi_min: float = float("nan")
    phi_max: float = float("nan")
    laplacian_max: float = float("nan")
    laplacian_min: float = float("nan")
    tol: float = 0.0
    superharmonic: bool = True
    vanishes: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def phi_laplacian(geo: PointGeometry) -> np.ndarray:
    """<N,K>(|A|^2 - n H^2 + Ric_M(N*,N*) - (n-1)(log f)''|grad h|^2)."""
    n = geo.n
    A2 = np.sum(geo.A ** 2, axis=(-2, -1))
    return geo.N_K * (A2 - n * geo.H[..., 1] ** 2 + ops.ricci_term(geo))


def cmc_superharmonic_check(surface: GraphHypersurface, grid: QuadratureGrid,
                            tol: dict | None = None, orientation: str = "future") -> CmcReport:
    """phi = H g(h) + <N,K> is superharmonic when H is constant and NCC holds."""
    tol = tol or tolerances()
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    H1 = geo.Hk(1)
    spread = _spread_entry("H_1 constant", H1, tol["constant_H"])
    H = float(np.mean(H1))
    if spread.status != SATISFIED:
        return CmcReport(NOT_CHECKABLE, "H_1 is not constant on the grid: " + spread.detail,
                         H, spread.value)
    ncc, m = _ncc_entry(surface.spacetime, "NCC-Ricci", tol["ncc"])
    phi = H * surface.spacetime.warping.primitive(geo.h) + geo.N_K
    lap = phi_laplacian(geo)
    scale = 1 + float(np.max(np.abs(geo.N_K)))
    t = tol["laplacian"] * scale
    superharmonic = bool(np.max(lap) <= t) if ncc.status == SATISFIED else True
    return CmcReport("checked", "" if ncc.status == SATISFIED else "NCC fails: sign not implied",
                     H, spread.value, ncc.margin, float(np.min(phi)), float(np.max(phi)),
                     float(np.max(lap)), float(np.min(lap)), t, superharmonic,
                     bool(np.max(np.abs(lap)) <= t))


# -- theorem harness ----------------------------------------------------------

def _elliptic_entry(geo_future):
    kap = geo_future.kappa
    fut = -np.max(kap, axis=-1)  # > 0 where all kappa < 0 for the future normal
    past = np.min(kap, axis=-1)  # > 0 where all kappa > 0, i.e. elliptic for the past normal
    mf, mp = float(np.max(fut)), float(np.max(past))
    if mf > 0 or mp > 0:
        orient = "future" if mf >= mp else "past"
        count = int(np.sum(fut > 0) if orient == "future" else np.sum(past > 0))
        return LedgerEntry("elliptic point", SATISFIED, max(mf, mp), count,
                           f"{count} grid nodes with all principal curvatures negative "
                           f"({orient} normal)"), orient
    return LedgerEntry("elliptic point", NOT_CHECKABLE, max(mf, mp), 0,
                       "no grid node is elliptic in either orientation"), None


def _grw_strong_proof(geo, k, alpha, tol):
    """Sign conditions behind the constant-H_k argument in a GRW ambient."""
    n = geo.n
    Hk = geo.Hk(k)
    if not np.all(Hk > 0):
        return [Conclusion("H_k > 0", float(np.min(Hk)), 0.0, False,
                           detail="proof needs H_k > 0 in the chosen orientation")]
    root = Hk ** (1.0 / k)
    out = []
    scale = 1 + float(np.max(np.abs(geo.H)))
    t = tol["sign"] * scale ** (k + 1)
    in1 = Hk - root * geo.Hk(k - 1)
    out.append(Conclusion("H_k - H_k^(1/k) H_(k-1) <= 0", float(np.max(in1)), t,
                          bool(np.max(in1) <= t)))
    in2 = n * geo.Hk(1) * Hk - (n - k) * geo.Hk(k + 1) - k * Hk ** ((k + 1) / k)
    out.append(Conclusion("n H_1 H_k - (n-k) H_(k+1) - k H_k^((k+1)/k) >= 0",
                          float(np.min(in2)), t, bool(np.min(in2) >= -t)))
    theta = ops.theta_term(geo, k - 1)
    mixed = (geo.newton.c[k - 1] * geo.Hk(k - 1) * geo.grad_h_norm2
             - np.einsum("...i,...ij,...j->...", geo.grad_h, geo.Pk(k - 1), geo.grad_h))
    bound = (alpha / geo.f ** 2 - geo.L2) * mixed
    ts = t * (1 + float(np.max(np.abs(theta))))
    out.append(Conclusion("Theta - lower bound >= 0", float(np.min(theta - bound)), ts,
                          bool(np.min(theta - bound) >= -ts)))
    out.append(Conclusion("lower bound of Theta >= 0", float(np.min(bound)), ts,
                          bool(np.min(bound) >= -ts)))
    c = comb(n, k)
    L = k * c * in1 * geo.df + c * geo.N_K * in2 + geo.N_K * theta
    sign = 1.0 if geo.orientation == "future" else -1.0
    # the argument is run with f' > 0 and the future normal; mirror otherwise
    Ls = L if sign > 0 else -L
    tL = ts * (1 + float(np.max(np.abs(geo.N_K))) * (1 + float(np.max(np.abs(geo.df)))))
    out.append(Conclusion("L_(k-1) phi <= 0", float(np.max(Ls)), tL, bool(np.max(Ls) <= tL),
                          detail="phi = H_k^(1/k) g(h) + <N,K>"))
    return out


def hk_theorem_check(surface: GraphHypersurface, grid: QuadratureGrid, k: int | None,
                     theorem, tol: dict | None = None,
                     orientation: str | None = None) -> TheoremReport:
    """Fill hypothesis and conclusion ledgers for one rigidity result."""
    tol = tol or tolerances()
    theorem = resolve_theorem(theorem)
    n = surface.n
    lo_k, hi_k = k_range(theorem, n)
    if k is None:
        k = lo_k
    if not lo_k <= k <= hi_k:
        raise ContractError(f"{theorem} needs {lo_k} <= k <= {hi_k} (n={n}), got k={k}")
    st = surface.spacetime
    hyps = [_closed_entry(surface)]
    notes = []
    proof = []
    exception = False
    ncc = None

    if theorem.startswith("quotient-slice"):
        semi = theorem.endswith("semidefinite")
        orient = orientation or "future"
        geo = pointwise_geometry(surface, grid.nodes, grid.chart, orient)
        hyps.append(_log_concave_entry(st, tol["ncc"], strict=semi))
        entry, _ = _definite_entry(geo, k, tol["definiteness"], semidefinite=semi)
        hyps.append(entry)
        Hk = geo.Hk(k)
        nz = _nonvanishing_entry(Hk, f"H_{k} nonvanishing", tol["nonvanishing"])
        if semi:
            hyps.append(nz)
        if nz.status == SATISFIED:
            hyps.append(_spread_entry(f"H_{k + 1}/H_{k} constant", geo.Hk(k + 1) / Hk,
                                      tol["constant_H"]))
        else:
            hyps.append(LedgerEntry(f"H_{k + 1}/H_{k} constant", NOT_CHECKABLE, float("nan"),
                                    detail=f"H_{k} vanishes on the grid"))
        concl = _conclusions(geo, k + 1, tol, need_df=k >= 1)
        concl = [c for c in concl if c.name != "totally-umbilical"]
        concl = [Conclusion(c.name, c.value, c.tol, c.holds, False, c.detail) for c in concl]
        return TheoremReport(theorem, k, orient, tuple(hyps), tuple(concl), (), False,
                             tuple(notes))

    if theorem == "cmc-slice-grw":
        orient = orientation or "future"
        geo = pointwise_geometry(surface, grid.nodes, grid.chart, orient)
        entry, ncc = _ncc_entry(st, "NCC-Ricci", tol["ncc"])
        hyps.append(entry)
        hyps.append(_spread_entry("H_1 constant", geo.Hk(1), tol["constant_H"]))
        exception = _exception_flag(st, ncc, tol)
        concl = _conclusions(geo, 1, tol, need_df=False)
        cmc = cmc_superharmonic_check(surface, grid, tol, orient)
        if cmc.status == "checked":
            proof.append(Conclusion("Delta phi <= 0", cmc.laplacian_max, cmc.tol,
                                    cmc.superharmonic, detail="phi = H g(h) + <N,K>"))
            proof.append(Conclusion("Delta phi = 0", max(abs(cmc.laplacian_max),
                                                         abs(cmc.laplacian_min)),
                                    cmc.tol, cmc.vanishes, exceptional=False))
        return TheoremReport(theorem, k, orient, tuple(hyps), tuple(concl), tuple(proof),
                             exception, tuple(notes))

    # constant H_k results: dimension, convergence condition, then geometry
    need_n = {"h2-umbilic-rw": 3, "hk-umbilic-rw-slab": 3, "hk-umbilic-rw-elliptic": 4,
              "hk-umbilic-grw-strong": 3}[theorem]
    hyps.append(_dimension_entry(n, need_n))
    if theorem == "hk-umbilic-grw-strong":
        entry, ncc = _ncc_entry(st, "strong-NCC", tol["ncc"])
        hyps.append(entry)
    else:
        rw = _rw_entry(surface)
        hyps.append(rw)
        if rw.status == SATISFIED:
            entry, ncc = _ncc_entry(st, "NCC-RW", tol["ncc"])
        else:
            entry = LedgerEntry("NCC-RW", NOT_CHECKABLE, float("nan"),
                                detail="needs a fiber of constant curvature")
        hyps.append(entry)
    exception = _exception_flag(st, ncc, tol)

    h_all = surface.height(grid.nodes, grid.chart)[0]
    hlo, _, _, hhi, _, _ = height_extremes(surface, grid, h_all)
    orient = orientation
    if theorem in ("hk-umbilic-rw-slab", "hk-umbilic-grw-strong"):
        slab, sign = _slab_entry(surface, hlo, hhi, tol["sign"])
        hyps.append(slab)
        orient = orient or _orientation_from_sign(sign)
    if theorem == "hk-umbilic-rw-elliptic":
        geo_f = pointwise_geometry(surface, grid.nodes, grid.chart, "future")
        ell, ell_orient = _elliptic_entry(geo_f)
        hyps.append(ell)
        notes.append(f"elliptic point certified at grid nodes (grid tolerance "
                     f"{tol['elliptic']!r} applies to extremum-based bounds)")
        orient = orient or ell_orient or "future"
    orient = orient or "future"
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orient)
    hyps.append(_spread_entry(f"H_{k} constant", geo.Hk(k), tol["constant_H"]))
    if theorem == "h2-umbilic-rw":
        H2 = geo.Hk(2)
        hyps.append(_entry("H_2 > 0", float(np.min(H2)), float(np.mean(H2)),
                           strict=True))
    concl = _conclusions(geo, k, tol, need_df=True)
    if theorem == "hk-umbilic-grw-strong" and hyps[-1].status == SATISFIED:
        alpha = st.sup_null_expansion()[0]
        proof = _grw_strong_proof(geo, k, alpha, tol)
    if exception:
        notes.append("ambient has constant sectional curvature with NCC margin 0: "
                     "an umbilical non-slice is possible")
    return TheoremReport(theorem, k, orient, tuple(hyps), tuple(concl), tuple(proof),
                         exception, tuple(notes))


__all__ = [
    "ALIASES", "CONSISTENT", "CmcReport", "Conclusion", "DEFAULT_TOLERANCES", "INCONSISTENT",
    "LedgerEntry", "NOT_CHECKABLE", "POSSIBLE_EXCEPTION", "QuotientReport", "SATISFIED",
    "THEOREMS", "TheoremReport", "VIOLATED", "cmc_superharmonic_check", "derive_status",
    "derive_verdict", "height_extremes", "hk_theorem_check", "k_range", "phi_laplacian",
    "quotient_bound_check", "resolve_theorem", "tolerances",
]
