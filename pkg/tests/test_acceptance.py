"""The eight acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line; the lines are
also collected and repeated in the pytest terminal summary.  Run directly
with ``python tests/test_acceptance.py`` for the lines alone.
"""

import math
import time

import numpy as np

from grwkit import curvalg
from grwkit import hypersurface as hs
from grwkit import minkowski as mk
from grwkit import operators as ops
from grwkit.ambient import make_fiber, make_spacetime, make_warping
from grwkit.veritool import checks as ck

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []


def verdict(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def spacetime(warp, wparams, fiber, dim, fparams=None, slab=None, interval=None):
    w = make_warping(warp, wparams, interval)
    return make_spacetime(w, make_fiber(fiber, dim, fparams), slab)


def grid_of(st, level):
    return st.fiber.quadrature(level)


# -- 1 ------------------------------------------------------------------------

def test_identity_suite():
    start = time.perf_counter()
    worst = {"trace": 0.0, "cayley_hamilton": 0.0, "newton_sum": 0.0}
    for n in (2, 3, 4, 5):
        rng = np.random.default_rng([2024, n])
        M = rng.uniform(-2, 2, size=(1000, n, n))
        A = 0.5 * (M + np.swapaxes(M, -1, -2))
        worst["trace"] = max(worst["trace"], curvalg.trace_identity_suite(A).worst)
        worst["cayley_hamilton"] = max(worst["cayley_hamilton"],
                                       curvalg.cayley_hamilton_residual(A))
        for k in range(2, n + 1):
            worst["newton_sum"] = max(worst["newton_sum"], curvalg.newton_sum_identity(A, k))
    elapsed = time.perf_counter() - start
    ok = (worst["trace"] <= 1e-10 and worst["cayley_hamilton"] <= 1e-8
          and worst["newton_sum"] <= 1e-9 and elapsed <= 10.0)
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    verdict(1, "algebraic identities", ok, f"{detail}, {elapsed:.2f} s")


# -- 2 ------------------------------------------------------------------------

def test_ellipticity_lemmas():
    draws = 100_000
    tested = violations = 0
    for n in (2, 3, 4, 5):
        rng = np.random.default_rng([7, n])
        kappa = rng.normal(size=(draws, n))
        t = curvalg.positive_h2_tally(kappa)
        tested += t.tested
        violations += t.violations
        # all kappa_i < 0: H_{k+1} > 0 must give P_1..P_k positive definite
        neg = -np.abs(kappa)
        H = curvalg.mean_curvatures(neg).H
        for k in range(1, n):
            keep = H[:, k + 1] > 0
            for j in range(1, k + 1):
                mu = curvalg.newton_eigenvalues(neg[keep], j)
                violations += int(np.sum(np.min(mu, axis=-1) <= 0))
                tested += int(np.sum(keep))
            cone = curvalg.elliptic_cone_tally(kappa, k)
            tested += cone.tested
            violations += cone.violations
    verdict(2, "ellipticity lemmas", violations == 0,
            f"{violations} counterexamples over {tested} premise-satisfying checks, "
            f"{draws} draws per n")


# -- 3 ------------------------------------------------------------------------

def _rel(a, b):
    return float(np.max(np.abs(a - b) / (1 + np.abs(b))))


def test_closed_form_operators():
    start = time.perf_counter()
    ds3 = spacetime("cosh", {}, "sphere", 3)
    static = spacetime("const", {"c": 1.0}, "sphere", 3)
    ds2 = spacetime("cosh", {}, "sphere", 2)
    exp_t2 = spacetime("exp", {"c": 1.0, "lam": 0.5}, "torus", 2)
    pert = spacetime("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1})
    surfaces = [hs.slice_surface(ds3, 1.0), hs.slice_surface(static, 0.0),
                hs.random_graph(ds2, 1.0, 0.05, 2, 3),
                hs.random_graph(exp_t2, 0.0, 0.1, 2, 7),
                hs.random_graph(pert, 0.5, 0.05, 2, 3)]
    worst = 0.0
    for s in surfaces:
        g = grid_of(s.spacetime, 3)
        geo = hs.pointwise_geometry(s, g.nodes, g.chart)
        for k in range(s.n):
            worst = max(worst,
                        _rel(ops.Lk_direct(geo, "height", k).value,
                             ops.Lk_height_formula(geo, k).value),
                        _rel(ops.Lk_direct(geo, "g-of-height", k).value,
                             ops.Lk_g_formula(geo, k).value))
    elapsed = time.perf_counter() - start
    verdict(3, "closed-form vs direct L_k", worst <= 1e-6 and elapsed <= 60,
            f"max relative difference {worst:.2e} on 5 surfaces, {elapsed:.1f} s")


# -- 4 ------------------------------------------------------------------------

def test_minkowski_formulae():
    ds2 = spacetime("cosh", {}, "sphere", 2)
    exp_t2 = spacetime("exp", {"c": 1.0, "lam": 0.5}, "torus", 2)
    pert = spacetime("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1})
    t3 = spacetime("tanh", {"eps": 0.1}, "torus", 3)
    s3 = spacetime("cosh", {}, "sphere", 3)
    failures = []
    worst12 = worstk = worst_gen = 0.0
    min_order = math.inf
    for st, t0, seed in ((ds2, 1.0, 3), (exp_t2, 0.0, 7), (pert, 0.5, 3)):
        s = hs.random_graph(st, t0, 0.05, 2, seed)
        for formula in ("mf1", "mf2"):
            final, order = mk.refinement(s, formula, None, levels=(2, 3, 4))
            worst12 = max(worst12, abs(final.residual))
            min_order = min(min_order, order)
    for st, t0, seed, degree in ((t3, 0.0, 11, 1), (s3, 0.5, 5, 2)):
        s = hs.random_graph(st, t0, 0.05, degree, seed)
        final, order = mk.refinement(s, "mfk", 2, levels=(2, 3, 4))
        worstk = max(worstk, abs(final.residual))
        min_order = min(min_order, order)
    # de Sitter makes both sides vanish, so compare where they do not
    static = spacetime("const", {"c": 1.0}, "sphere", 3)
    largest_rhs = 0.0
    for st, t0, seed, degree in ((t3, 0.0, 11, 1), (static, 0.0, 2, 2)):
        s = hs.random_graph(st, t0, 0.05, degree, seed)
        g = mk.surface_grid(s, 3)
        gen = mk.mf_general_residual(s, g, 2)
        dec = mk.mfk_residual(s, g, 2)
        worst_gen = max(worst_gen, abs(gen.rhs / (s.n - 2) - dec.rhs))
        largest_rhs = max(largest_rhs, abs(dec.rhs))
    if worst12 > 1e-5:
        failures.append("mf1/mf2")
    if worstk > 1e-4:
        failures.append("mfk")
    if min_order < 2.0:
        failures.append("order")
    if worst_gen > 1e-4 or largest_rhs <= 1e-8:
        failures.append("mf_general vs mfk")
    verdict(4, "Minkowski formulae", not failures,
            f"mf1/mf2 {worst12:.2e}, mfk {worstk:.2e}, min order {min_order:.2f}, "
            f"general vs decomposition {worst_gen:.2e} at |rhs| up to {largest_rhs:.1e}"
            + (f"; failing: {', '.join(failures)}" if failures else ""))


# -- 5 ------------------------------------------------------------------------

def test_constant_curvature_degeneracies():
    details = {}
    ok = True
    for dim in (2, 3):
        st = spacetime("cosh", {}, "sphere", dim, slab=(-2.0, 2.0))
        ts = np.linspace(-4, 4, 4001)
        details[f"factor n={dim}"] = float(np.max(np.abs(st.curvature_factor(ts))))
        details[f"cc residual n={dim}"] = st.constant_curvature_check(slab=(-4, 4)).residual
        details[f"ncc n={dim}"] = max(abs(st.ncc_margin(kind).margin)
                                      for kind in ("NCC-RW", "NCC-Ricci", "strong-NCC"))
        pair = 0.0
        for seed in (1, 2):
            s = hs.random_graph(st, 0.8, 0.1, 2, seed)
            g = grid_of(st, 2)
            geo = hs.pointwise_geometry(s, g.nodes, g.chart)
            for k in range(dim):
                pair = max(pair, float(np.max(np.abs(ops.divPk_pairing_general(geo, k)))))
                if k:
                    pair = max(pair, float(np.max(np.abs(ops.divPk_pairing_rw(geo, k)))))
        details[f"divPk n={dim}"] = pair
        ok = ok and (details[f"factor n={dim}"] <= 1e-12
                     and details[f"cc residual n={dim}"] <= 1e-12
                     and details[f"ncc n={dim}"] <= 1e-12 and pair <= 1e-8)
    verdict(5, "constant-curvature degeneracies", ok,
            ", ".join(f"{k} {v:.1e}" for k, v in details.items()))


# -- 6 ------------------------------------------------------------------------

BUILT_IN = [
    ("cosh", {}, "sphere", 2, None, None),
    ("cosh", {"a": 2.0}, "sphere", 3, None, None),
    ("exp", {"c": 1.0, "lam": 0.5}, "torus", 2, None, None),
    ("exp", {"c": 2.0, "lam": -0.3}, "sphere", 2, None, None),
    ("const", {"c": 1.0}, "sphere", 3, None, None),
    ("const", {"c": 1.5}, "torus", 3, None, None),
    ("tanh", {"eps": 0.5}, "torus", 3, None, None),
    ("sine", {"eps": 0.3, "omega": 2.0}, "torus", 2, None, None),
    ("polynomial", {"coeffs": [2.0, 0.5, 0.25]}, "torus", 2, None, (-1.0, 1.0)),
    ("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1}, None),
]


def _slice_theorems(n):
    out = []
    for theorem in ck.THEOREMS:
        lo, hi = ck.k_range(theorem, n)
        out += [(theorem, k) for k in range(lo, hi + 1)]
    return out


def test_slice_regression():
    tol = ck.tolerances()
    worst = {"A": 0.0, "H": 0.0, "integrand": 0.0, "laplacian": 0.0}
    bad_verdicts = []
    reports = 0
    for warp, wp, fiber, dim, fp, interval in BUILT_IN:
        st = spacetime(warp, wp, fiber, dim, fp, interval=interval)
        g = grid_of(st, 2)
        for t0 in (-0.6, 0.0, 0.7):
            s = hs.slice_surface(st, t0)
            geo = hs.pointwise_geometry(s, g.nodes, g.chart)
            lam = geo.L1
            n = geo.n
            worst["A"] = max(worst["A"], float(np.max(np.abs(
                geo.A + lam[:, None, None] * np.eye(n)))))
            worst["H"] = max(worst["H"], max(float(np.max(np.abs(geo.Hk(k) - lam ** k)))
                                             for k in range(n + 1)))
            forms = [("mf1", 0), ("mf2", 1)] + [("mf_general", k) for k in range(n)]
            if st.fiber.kappa is not None:
                forms += [("mfk", k) for k in range(2, n)]
            for name, k in forms:
                for side in mk.integrands(geo, name, k):
                    worst["integrand"] = max(worst["integrand"], float(np.max(np.abs(side))))
            worst["laplacian"] = max(worst["laplacian"],
                                     float(np.max(np.abs(ck.phi_laplacian(geo)))))
            for theorem, k in _slice_theorems(n):
                rep = ck.hk_theorem_check(s, g, k, theorem, tol)
                reports += 1
                if rep.verdict != ck.CONSISTENT:
                    bad_verdicts.append(f"{warp}/{fiber}{dim} t0={t0} {theorem} k={k}")
    ok = (worst["A"] <= 1e-9 and worst["H"] <= 1e-9 and worst["integrand"] <= 1e-10
          and worst["laplacian"] <= 1e-8 and not bad_verdicts)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(6, "slice regression", ok,
            f"{detail}; {reports} theorem reports, {len(bad_verdicts)} not consistent"
            + (f": {bad_verdicts[:3]}" if bad_verdicts else ""))


# -- 7 ------------------------------------------------------------------------

def test_elliptic_point_lemma():
    cases = [
        (spacetime("cosh", {}, "sphere", 2), 1.0),
        (spacetime("exp", {"c": 1.0, "lam": 0.5}, "torus", 2), 0.0),
        (spacetime("cosh", {}, "sphere", 3), 0.8),
        (spacetime("tanh", {"eps": 0.5}, "torus", 3), 0.0),
    ]
    mirrored = [
        (spacetime("cosh", {}, "sphere", 2), -1.0),
        (spacetime("exp", {"c": 1.0, "lam": -0.5}, "torus", 2), 0.0),
        (spacetime("cosh", {}, "sphere", 3), -0.8),
        (spacetime("tanh", {"eps": -0.5}, "torus", 3), 0.0),
    ]
    violations = []
    worst = math.inf
    counts = {}
    for label, group, orientation, sign in (("f'>0", cases, "future", 1),
                                            ("f'<0", mirrored, "past", -1)):
        counts[label] = 0
        for i in range(50):
            st, t0 = group[i % len(group)]
            rng = np.random.default_rng([i, sign + 2])
            s = hs.random_graph(st, t0, float(rng.uniform(0.01, 0.05)), 2, 1000 + i)
            scan = hs.elliptic_point_scan(s, grid_of(st, 3), orientation)
            counts[label] += 1
            worst = min(worst, scan.margin)
            if scan.status != "ok" or scan.sign != sign or scan.margin < -5e-2:
                violations.append(f"{label} #{i}")
    verdict(7, "elliptic-point lemma", not violations,
            f"{counts} graphs, worst margin {worst:.2e} against -5e-2, "
            f"{len(violations)} violations")


# -- 8 ------------------------------------------------------------------------

def test_falsification_consistency():
    start = time.perf_counter()
    strict = [
        spacetime("const", {"c": 1.0}, "sphere", 2),
        spacetime("const", {"c": 1.0}, "sphere", 3),
        spacetime("cosh", {}, "sphere", 2, {"radius": 0.8}),
        spacetime("cosh", {}, "sphere", 3, {"radius": 0.8}),
        spacetime("exp", {"c": 1.0, "lam": 0.5}, "sphere", 2),
    ]
    for st in strict:
        assert st.ncc_margin("NCC-RW", slab=(-1.5, 1.5)).strict
    tol = ck.tolerances()
    min_spread = math.inf
    inconsistent = []
    reports = 0
    for i in range(100):
        st = strict[i % len(strict)]
        rng = np.random.default_rng([i, 88])
        t0 = float(rng.uniform(-1.0, 1.0))
        s = hs.random_graph(st, t0, float(rng.uniform(0.02, 0.08)), 2, 5000 + i)
        g = grid_of(st, 2)
        geo = hs.pointwise_geometry(s, g.nodes, g.chart)
        min_spread = min(min_spread, float(np.ptp(geo.Hk(2))))
        for theorem, k in _slice_theorems(st.n):
            rep = ck.hk_theorem_check(s, g, k, theorem, tol)
            reports += 1
            if rep.verdict == ck.INCONSISTENT:
                inconsistent.append(f"#{i} {theorem} k={k}")
    elapsed = time.perf_counter() - start
    ok = min_spread > 1e-4 and not inconsistent and elapsed <= 300
    verdict(8, "falsification consistency", ok,
            f"min H_2 spread {min_spread:.2e} over 100 graphs, {reports} theorem reports, "
            f"{len(inconsistent)} inconsistent, {elapsed:.1f} s")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
