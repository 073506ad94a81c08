"""Execute a scenario and write ``report.json`` plus residual tables.

Checks run in scenario order and each yields a plain dict with a
``status`` of ``pass``, ``fail``, ``not-checkable``, ``info`` or
``error``.  The exit code is 0 exactly when nothing failed or errored;
a theorem report with verdict ``inconsistent-with-paper`` is a failure.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import curvalg
from .. import minkowski as mk
from .. import operators as ops
from ..errors import GeometryError, UnsupportedError
from ..hypersurface import elliptic_point_scan, evaluations, pointwise_geometry, umbilicity_deficit
from ..ambient.spacetime import NCC_KINDS
from . import checks as ck
from .scenario import (CHECK_PARAMS, FAMILIES, Scenario, build_spacetime, build_surface,
                       load_scenario, with_overrides)

RESIDUAL_HEADER = ("k", "level", "lhs", "rhs", "residual", "scale")
PASS, FAIL, INFO, ERROR = "pass", "fail", "info", "error"


@dataclass
class RunResult:
    report: dict
    residuals: list = field(default_factory=list)
    residuals_general: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return int(self.report["summary"]["exit_code"])


class _Context:
    """Lazily built spacetime, surface and grid shared by the checks."""

    def __init__(self, scn: Scenario, tol: dict):
        self.scn = scn
        self.tol = tol
        self._st = self._surface = self._grid = None

    @property
    def spacetime(self):
        if self._st is None:
            self._st = build_spacetime(self.scn.spacetime)
        return self._st

    @property
    def surface(self):
        if self._surface is None:
            self._surface = build_surface(self.spacetime, self.scn.surface)
        return self._surface

    @property
    def grid(self):
        if self._grid is None:
            self._grid = mk.surface_grid(self.surface, self.scn.level)
        return self._grid

    @property
    def orientation(self):
        return self.scn.orientation or "future"


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# -- individual checks -------------------------------------------------------

def check_identities(ctx, params):
    tol = ctx.tol
    out = {"dims": {}}
    ok = True
    for n in params["dims"]:
        n = int(n)
        rng = np.random.default_rng([int(params["seed"]), n])
        B = rng.normal(size=(int(params["draws"]), n, n))
        A = 0.5 * (B + np.swapaxes(B, -1, -2))
        tr = curvalg.trace_identity_suite(A)
        ch = curvalg.cayley_hamilton_residual(A)
        sums = {k: curvalg.newton_sum_identity(A, k) for k in range(2, n + 1)}
        kappa = np.linalg.eigvalsh(A)
        h2 = curvalg.positive_h2_tally(kappa)
        cones = {k: curvalg.elliptic_cone_tally(kappa, k) for k in range(1, n)}
        row = {
            "trace_P": tr.trace_P, "trace_AP": tr.trace_AP, "trace_A2P": tr.trace_A2P,
            "cayley_hamilton": ch, "newton_sum": {str(k): v for k, v in sums.items()},
            "positive_h2": {"tested": h2.tested, "violations": h2.violations},
            "elliptic_cone": {str(k): {"tested": t.tested, "violations": t.violations}
                              for k, t in cones.items()},
        }
        row_ok = (tr.worst <= tol["trace"] and ch <= tol["cayley_hamilton"]
                  and all(v <= tol["newton_sum"] for v in sums.values())
                  and h2.violations == 0 and all(t.violations == 0 for t in cones.values()))
        row["status"] = _status(row_ok)
        ok = ok and row_ok
        out["dims"][str(n)] = row
    out["status"] = _status(ok)
    return out


def check_ncc(ctx, params):
    st = ctx.spacetime
    kinds = params["kinds"] or [k for k in NCC_KINDS
                                if k != "NCC-RW" or st.fiber.kappa is not None]
    out = {"status": INFO, "margins": {}}
    for kind in kinds:
        m = st.ncc_margin(kind)
        out["margins"][kind] = {
            "margin": m.margin, "strict": m.strict, "fiber_term": m.fiber_term,
            "sup_expansion": m.sup_expansion, "argmax_t": m.argmax_t,
            "low_confidence": m.low_confidence, "window": list(m.window), "notes": m.notes,
        }
    return out


def check_constant_curvature(ctx, params):
    st = ctx.spacetime
    cc = st.constant_curvature_check()
    flag = cc.residual <= ctx.tol["constant_curvature"]
    return {"status": INFO, "residual": cc.residual, "kbar": cc.kbar,
            "kbar_spread": cc.kbar_spread, "argmax_t": cc.argmax_t,
            "constant_curvature": bool(flag)}


def _slice_regression(geo, tol):
    n = geo.n
    s = 1.0 if geo.orientation == "future" else -1.0
    lam = s * geo.L1
    A_res = float(np.max(np.abs(geo.A + lam[..., None, None] * np.eye(n))))
    H_res = max(float(np.max(np.abs(geo.Hk(k) - lam ** k))) for k in range(n + 1))
    integrands = {}
    forms = [("mf1", 0), ("mf2", 1)] + [("mf_general", k) for k in range(n)]
    if geo.surface.fiber.kappa is not None:
        forms += [("mfk", k) for k in range(2, n)]
    for name, k in forms:
        left, right = mk.integrands(geo, name, k)
        integrands[f"{name}:{k}"] = float(np.max(np.abs(left - right)))
    worst = max(integrands.values())
    ok = (A_res <= tol["umbilic"] * (1 + float(np.max(np.abs(lam))))
          and H_res <= tol["umbilic"] * (1 + float(np.max(np.abs(lam)))) ** n
          and worst <= tol["integrand"])
    return ok, {"shape_operator_residual": A_res, "Hk_residual": H_res,
                "integrand_residuals": integrands}


def check_geometry(ctx, params):
    surface, grid, tol = ctx.surface, ctx.grid, ctx.tol
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, ctx.orientation)
    sgn = 1.0 if ctx.orientation == "future" else -1.0
    out = {
        "nodes": int(grid.size),
        "spacelike_margin_min": float(np.min(geo.spacelike_margin)),
        "area": mk.integrate(surface, grid, 1.0, ctx.orientation),
        "H": [float(np.min(geo.H[..., 1])), float(np.max(geo.H[..., 1]))],
        # <N,K> <= -f for the future normal
        "support_bound": float(np.max(sgn * geo.N_K + geo.f)),
    }
    ok = out["support_bound"] <= tol["sign"] * (1 + float(np.max(geo.f)))
    if surface.is_slice:
        sok, detail = _slice_regression(geo, tol)
        out["slice"] = detail
        ok = ok and sok
    else:
        idx = np.linspace(0, grid.size - 1, min(8, grid.size)).astype(int)
        cod = ops.codazzi_residual(surface, grid.nodes[idx], grid.chart, ctx.orientation)
        out["codazzi_residual"] = float(np.max(cod))
        ok = ok and out["codazzi_residual"] <= tol["codazzi"]
    out["status"] = _status(ok)
    return out


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / (1 + np.abs(b))))


def check_operators(ctx, params):
    surface, grid, tol = ctx.surface, ctx.grid, ctx.tol
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, ctx.orientation)
    n = geo.n
    ks = params["ks"] if params["ks"] is not None else list(range(n))
    out = {"k": {}}
    ok = True
    kappa = surface.fiber.kappa
    for k in ks:
        k = int(k)
        row = {
            "Lk_height": _rel(ops.Lk_direct(geo, "height", k).value,
                              ops.Lk_height_formula(geo, k).value),
            "Lk_g": _rel(ops.Lk_direct(geo, "g-of-height", k).value,
                         ops.Lk_g_formula(geo, k).value),
        }
        row_ok = row["Lk_height"] <= tol["operators"] and row["Lk_g"] <= tol["operators"]
        gen = ops.divPk_pairing_general(geo, k)
        row["divPk_general_max"] = float(np.max(np.abs(gen)))
        if k >= 1:
            row["div1_plus_ricci"] = (float(np.max(np.abs(gen + ops.ricci_normal_gradient(geo))))
                                      if k == 1 else None)
            if kappa is not None:
                rw = ops.divPk_pairing_rw(geo, k)
                row["divPk_general_vs_rw"] = float(np.max(np.abs(gen - rw)))
                row_ok = row_ok and row["divPk_general_vs_rw"] <= tol["pairing"]
            if k == 1:
                row_ok = row_ok and row["div1_plus_ricci"] <= tol["pairing"]
        grad_H = ops.grad_Hk_fd(surface, geo.x, geo.chart, k + 1, ctx.orientation)
        general = ops.Lk_support_formula(geo, k, "general-RN", grad_H=grad_H)
        sect = ops.Lk_support_formula(geo, k, "sectional-sum", grad_H=grad_H)
        good = ~np.asarray(sect.low_confidence)
        row["support_sectional_vs_general"] = (
            _rel(sect.value[good], general.value[good]) if np.any(good) else None)
        row["support_low_confidence_nodes"] = int(np.sum(~good))
        if np.any(good):
            row_ok = row_ok and row["support_sectional_vs_general"] <= tol["operators"]
        if kappa is not None or n == 2:
            sf = ops.Lk_support_formula(geo, k, "space-form-fiber", grad_H=grad_H)
            row["support_spaceform_vs_general"] = _rel(sf.value, general.value)
            row_ok = row_ok and row["support_spaceform_vs_general"] <= tol["operators"]
        row["status"] = _status(row_ok)
        ok = ok and row_ok
        out["k"][str(k)] = row
    out["status"] = _status(ok)
    return out


def _default_formulas(surface):
    n = surface.n
    forms = [("mf1", 0), ("mf2", 1)]
    if surface.fiber.kappa is not None and n >= 3:
        forms += [("mfk", k) for k in range(2, n)]
    return forms


def check_minkowski(ctx, params, rows, general_rows):
    surface, tol = ctx.surface, ctx.tol
    n = surface.n
    levels = tuple(int(v) for v in params["levels"])
    if params["formulas"] is None:
        jobs = _default_formulas(surface)
    else:
        jobs = []
        for f in params["formulas"]:
            if f == "mf1":
                jobs.append(("mf1", 0))
            elif f == "mf2":
                jobs.append(("mf2", 1))
            elif f == "mfk":
                ks = params["ks"] or list(range(2, n))
                jobs += [("mfk", int(k)) for k in ks]
            else:
                ks = params["ks"] or list(range(n))
                jobs += [("mf_general", int(k)) for k in ks]
    out = {"formulas": [], "levels": list(levels)}
    ok = True
    finals = {}
    for name, k in jobs:
        final, order = mk.refinement(surface, name, k, levels)
        band = tol["mf12"] if name in ("mf1", "mf2") else tol["mfk"]
        converged = final.normalized <= 1e-10
        item_ok = final.normalized <= band and (order >= tol["order"] or converged)
        out["formulas"].append({
            "formula": name, "k": k, "level": final.level, "normalized": final.normalized,
            "residual": final.residual, "order": order, "band": band,
            "trace": [r.normalized for r in final.trace], "status": _status(item_ok),
        })
        ok = ok and item_ok
        finals[(name, k)] = final
        target = general_rows if name == "mf_general" else rows
        target.extend(r.row() for r in final.trace)
    # mf_general at k carries c_k = (n - k) binom(n, k) where mfk carries binom(n, k)
    agree = {}
    for (name, k), fin in finals.items():
        if name == "mfk" and ("mf_general", k) in finals:
            g = finals[("mf_general", k)]
            diff = abs(g.rhs / (n - k) - fin.rhs) / max(fin.scale, 1e-300)
            agree[str(k)] = diff
            ok = ok and diff <= tol["mfk"]
    if agree:
        out["general_vs_mfk"] = agree
    out["status"] = _status(ok)
    return out


def check_elliptic(ctx, params):
    scan = elliptic_point_scan(ctx.surface, ctx.grid, ctx.scn.orientation,
                               float(params["grid_tol"]))
    out = {k: getattr(scan, k) for k in scan.__dataclass_fields__}
    if scan.status != "ok":
        out["status"] = ck.NOT_CHECKABLE
        return out
    ok = scan.holds
    if not math.isnan(scan.refined_margin):
        ok = ok and scan.refined_margin >= -ctx.tol["sign"]
    out["scan_status"] = scan.status
    out["status"] = _status(ok)
    return out


def check_umbilicity(ctx, params):
    u = umbilicity_deficit(ctx.surface, ctx.grid, ctx.orientation)
    return {"status": INFO, "deficit": u.deficit, "location": u.location, "chart": u.chart}


def check_quotient(ctx, params):
    rep = ck.quotient_bound_check(ctx.surface, ctx.grid, int(params["k"]), ctx.tol,
                                  ctx.orientation)
    out = rep.to_dict()
    if rep.status != "checked":
        out["status"] = ck.NOT_CHECKABLE
        out["verdict"] = ck.CONSISTENT
        return out
    ok = rep.holds and rep.chain_holds
    out["verdict"] = ck.CONSISTENT if ok else ck.INCONSISTENT
    out["status"] = _status(ok)
    return out


def check_cmc(ctx, params):
    rep = ck.cmc_superharmonic_check(ctx.surface, ctx.grid, ctx.tol, ctx.orientation)
    out = rep.to_dict()
    if rep.status != "checked":
        out["status"] = ck.NOT_CHECKABLE
        return out
    ok = rep.superharmonic and (rep.vanishes or not ctx.surface.is_slice)
    out["status"] = _status(ok)
    return out


def check_theorem(ctx, params):
    rep = ck.hk_theorem_check(ctx.surface, ctx.grid, params["k"], params["id"], ctx.tol,
                              ctx.scn.orientation)
    out = rep.to_dict()
    if rep.verdict == ck.INCONSISTENT:
        out["status"] = FAIL
    elif rep.status == ck.NOT_CHECKABLE:
        out["status"] = ck.NOT_CHECKABLE
    else:
        out["status"] = PASS
    return out


RUNNERS = {
    "identities": check_identities,
    "ncc": check_ncc,
    "constant-curvature": check_constant_curvature,
    "geometry": check_geometry,
    "operators": check_operators,
    "elliptic": check_elliptic,
    "umbilicity": check_umbilicity,
    "quotient": check_quotient,
    "cmc": check_cmc,
    "theorem": check_theorem,
}


# -- assembly ----------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, nan to null, inf to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def select_checks(scn: Scenario, family: str | None) -> list:
    if family is None or family == "run":
        return list(scn.checks)
    names = FAMILIES[family]
    chosen = [c for c in scn.checks if c["check"] in names]
    if chosen:
        return chosen
    name = names[0]
    if name == "theorem":
        raise GeometryError("the scenario lists no theorem checks; add one with an 'id'")
    return [dict({"check": name}, **CHECK_PARAMS[name])]


def execute(scn: Scenario, family: str | None = None, tol_scale: float = 1.0) -> RunResult:
    """Run the scenario's checks (optionally one family) and assemble the report."""
    tol = ck.tolerances(scn.tolerances, tol_scale)
    ctx = _Context(scn, tol)
    evaluations.reset()
    results, rows, general_rows = [], [], []
    for item in select_checks(scn, family):
        params = {k: v for k, v in item.items() if k != "check"}
        name = item["check"]
        try:
            if name == "minkowski":
                res = check_minkowski(ctx, params, rows, general_rows)
            else:
                res = RUNNERS[name](ctx, params)
        except UnsupportedError as exc:
            res = {"status": ERROR, "error": "unsupported", "message": str(exc)}
        except GeometryError as exc:
            res = {"status": ERROR, "error": type(exc).__name__, "message": str(exc)}
        res = dict(res, check=name, params=params)
        results.append(res)
    failures = [i for i, r in enumerate(results) if r["status"] in (FAIL, ERROR)]
    inconsistent = [i for i, r in enumerate(results)
                    if r.get("verdict") == ck.INCONSISTENT]
    summary = {
        "checks": len(results),
        "failed": [results[i]["check"] for i in failures],
        "inconsistent_with_paper": len(inconsistent),
        "geometry_evaluations": evaluations.points,
        "exit_code": 0 if not failures else 1,
    }
    report = {
        "scenario": scn.canonical(),
        "family": family or "run",
        "tolerances": tol,
        "results": results,
        "summary": summary,
    }
    return RunResult(_clean(report), rows, general_rows)


def _write_rows(path: Path, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESIDUAL_HEADER)
        for r in rows:
            w.writerow([repr(r[key]) if isinstance(r[key], float) else r[key]
                        for key in RESIDUAL_HEADER])


def write_outputs(result: RunResult, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "residuals": out / "residuals.csv",
             "residuals_general": out / "residuals_general.csv"}
    text = json.dumps(result.report, sort_keys=True, indent=2, allow_nan=False)
    paths["report"].write_text(text + "\n")
    _write_rows(paths["residuals"], result.residuals)
    _write_rows(paths["residuals_general"], result.residuals_general)
    return paths


def run_scenario(path, out_dir, family: str | None = None, level=None, seed=None,
                 orientation=None, tol_scale: float = 1.0) -> RunResult:
    """Load, run and write; parse errors propagate as ScenarioError."""
    scn = with_overrides(load_scenario(path), level, seed, orientation)
    result = execute(scn, family, tol_scale)
    write_outputs(result, out_dir)
    return result


__all__ = ["RESIDUAL_HEADER", "RUNNERS", "RunResult", "execute", "run_scenario",
           "select_checks", "write_outputs"]
