"""Scenario files: JSON descriptions of a spacetime, a surface and checks.

A scenario is validated strictly (unknown keys are errors, reported with
the line and column where the key appears) and normalised to a canonical
form with every default filled in, so ``parse(dumps(s)) == s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..ambient import make_fiber, make_spacetime, make_warping
from ..ambient.spacetime import GRWSpacetime
from ..ambient.warping import KINDS as WARPING_KINDS
from ..errors import GeometryError, ScenarioError
from ..hypersurface import GraphHypersurface, graph_surface, random_graph, slice_surface
from .checks import DEFAULT_TOLERANCES, resolve_theorem

TOP_KEYS = ("name", "spacetime", "surface", "checks", "grid", "tolerances", "orientation")
FIBER_KINDS = ("torus", "sphere", "perturbed-sphere")
SURFACE_KINDS = ("slice", "graph", "random")
MINKOWSKI_FORMULAS = ("mf1", "mf2", "mfk", "mf_general")

# allowed parameters and their defaults, per check
CHECK_PARAMS = {
    "identities": {"draws": 1000, "dims": [2, 3, 4, 5], "seed": 0},
    "ncc": {"kinds": None},
    "constant-curvature": {},
    "geometry": {},
    "operators": {"ks": None},
    "minkowski": {"formulas": None, "ks": None, "levels": [2, 3, 4]},
    "elliptic": {"grid_tol": 5e-2},
    "umbilicity": {},
    "quotient": {"k": 0},
    "cmc": {},
    "theorem": {"id": None, "k": None},
}
FAMILIES = {
    "identities": ("identities",),
    "ncc": ("ncc", "constant-curvature"),
    "geometry": ("geometry", "operators", "elliptic", "umbilicity"),
    "minkowski": ("minkowski",),
    "theorem": ("theorem", "quotient", "cmc"),
}
GEOMETRY_FREE = ("identities",)
DEFAULT_LEVEL = 3


@dataclass(frozen=True)
class Scenario:
    name: str
    spacetime: dict | None
    surface: dict | None
    checks: tuple
    level: int = DEFAULT_LEVEL
    tolerances: dict = field(default_factory=dict)
    orientation: str | None = None

    def canonical(self) -> dict:
        return {
            "name": self.name,
            "spacetime": self.spacetime,
            "surface": self.surface,
            "checks": [dict(c) for c in self.checks],
            "grid": {"level": self.level},
            "tolerances": dict(self.tolerances),
            "orientation": self.orientation,
        }

    def dumps(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, indent=2) + "\n"

    def needs_geometry(self) -> bool:
        return any(c["check"] not in GEOMETRY_FREE for c in self.checks)


# -- parsing -----------------------------------------------------------------

def _locate(text: str | None, key: str):
    """Line and column of the first ``"key"`` in the source, if any."""
    if not text:
        return None, None
    idx = text.find(f'"{key}"')
    if idx < 0:
        return None, None
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


class _Ctx:
    def __init__(self, text):
        self.text = text

    def fail(self, message, key=None):
        line, col = _locate(self.text, key) if key else (None, None)
        raise ScenarioError(message, line, col)

    def keys(self, obj, allowed, where, required=()):
        if not isinstance(obj, dict):
            self.fail(f"{where} must be an object, got {type(obj).__name__}")
        for key in obj:
            if key not in allowed:
                self.fail(f"unknown key {key!r} in {where}; allowed: {sorted(allowed)}", key)
        for key in required:
            if key not in obj:
                self.fail(f"{where} is missing required key {key!r}")

    def number(self, value, where, key=None):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{where} must be a number, got {value!r}", key)
        return float(value)

    def integer(self, value, where, key=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(f"{where} must be an integer, got {value!r}", key)
        return int(value)


def _json_value(obj):
    """Plain JSON types with floats normalised (ints stay ints)."""
    if isinstance(obj, dict):
        return {str(k): _json_value(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_value(v) for v in obj]
    return obj


def _spacetime(ctx, obj):
    ctx.keys(obj, ("warping", "fiber", "slab"), "spacetime", required=("warping", "fiber"))
    w = obj["warping"]
    ctx.keys(w, ("kind", "params"), "spacetime.warping", required=("kind",))
    if w["kind"] not in WARPING_KINDS:
        ctx.fail(f"unsupported warping kind {w['kind']!r}; expected one of {WARPING_KINDS}",
                 "kind")
    fb = obj["fiber"]
    ctx.keys(fb, ("kind", "dim", "params"), "spacetime.fiber", required=("kind", "dim"))
    if fb["kind"] not in FIBER_KINDS:
        ctx.fail(f"unsupported fiber kind {fb['kind']!r}; expected one of {FIBER_KINDS}", "kind")
    slab = obj.get("slab")
    if slab is not None:
        if not isinstance(slab, list) or len(slab) != 2:
            ctx.fail("spacetime.slab must be [t1, t2]", "slab")
        slab = [ctx.number(v, "slab end", "slab") for v in slab]
    out = {
        "warping": {"kind": w["kind"], "params": _json_value(w.get("params") or {})},
        "fiber": {"kind": fb["kind"], "dim": ctx.integer(fb["dim"], "fiber.dim", "dim"),
                  "params": _json_value(fb.get("params") or {})},
        "slab": slab,
    }
    try:
        build_spacetime(out)
    except GeometryError as exc:
        ctx.fail(f"invalid spacetime: {exc}")
    return out


def _surface(ctx, obj):
    ctx.keys(obj, ("kind", "t0", "coeffs", "amplitude", "degree", "seed"), "surface",
             required=("kind",))
    kind = obj["kind"]
    if kind not in SURFACE_KINDS:
        ctx.fail(f"unsupported surface kind {kind!r}; expected one of {SURFACE_KINDS}", "kind")
    allowed = {"slice": ("kind", "t0"), "graph": ("kind", "t0", "coeffs"),
               "random": ("kind", "t0", "amplitude", "degree", "seed")}[kind]
    ctx.keys(obj, allowed, f"surface ({kind})", required=("kind", "t0"))
    out = {"kind": kind, "t0": ctx.number(obj["t0"], "surface.t0", "t0")}
    if kind == "graph":
        coeffs = obj.get("coeffs", [])
        if not isinstance(coeffs, list):
            ctx.fail("surface.coeffs must be a list of {term, c} objects", "coeffs")
        items = []
        for item in coeffs:
            ctx.keys(item, ("term", "c"), "surface.coeffs entry", required=("term", "c"))
            items.append({"term": _json_value(item["term"]),
                          "c": ctx.number(item["c"], "coefficient", "c")})
        out["coeffs"] = items
    elif kind == "random":
        out["amplitude"] = ctx.number(obj.get("amplitude", 0.05), "amplitude", "amplitude")
        out["degree"] = ctx.integer(obj.get("degree", 2), "degree", "degree")
        out["seed"] = ctx.integer(obj.get("seed", 0), "seed", "seed")
    return out


def _check(ctx, item):
    if isinstance(item, str):
        item = {"check": item}
    if not isinstance(item, dict) or "check" not in item:
        ctx.fail(f"check must be a name or an object with key 'check', got {item!r}")
    name = item["check"]
    if name not in CHECK_PARAMS:
        ctx.fail(f"unknown check {name!r}; expected one of {sorted(CHECK_PARAMS)}", name)
    defaults = CHECK_PARAMS[name]
    ctx.keys(item, ("check",) + tuple(defaults), f"check {name!r}")
    out = {"check": name}
    for key, default in defaults.items():
        out[key] = _json_value(item.get(key, default))
    if name == "theorem":
        if out["id"] is None:
            ctx.fail("theorem check needs an 'id'", "theorem")
        try:
            out["id"] = resolve_theorem(out["id"])
        except GeometryError as exc:
            ctx.fail(str(exc), "id")
    if name == "minkowski" and out["formulas"] is not None:
        for f in out["formulas"]:
            if f not in MINKOWSKI_FORMULAS:
                ctx.fail(f"unknown Minkowski formula {f!r}; expected {MINKOWSKI_FORMULAS}",
                         "formulas")
    return out


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario JSON; errors carry line and column."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return scenario_from_dict(raw, text)


def scenario_from_dict(raw: dict, text: str | None = None) -> Scenario:
    ctx = _Ctx(text)
    ctx.keys(raw, TOP_KEYS, "scenario", required=("checks",))
    checks = raw["checks"]
    if not isinstance(checks, list) or not checks:
        ctx.fail("checks must be a non-empty list", "checks")
    checks = tuple(_check(ctx, c) for c in checks)
    spacetime = raw.get("spacetime")
    surface = raw.get("surface")
    needs_geometry = any(c["check"] not in GEOMETRY_FREE for c in checks)
    if spacetime is not None:
        spacetime = _spacetime(ctx, spacetime)
    elif needs_geometry:
        ctx.fail("geometric checks need a 'spacetime'", "checks")
    if surface is not None:
        if spacetime is None:
            ctx.fail("a surface needs a spacetime", "surface")
        surface = _surface(ctx, surface)
    elif any(c["check"] not in GEOMETRY_FREE + ("ncc", "constant-curvature") for c in checks):
        ctx.fail("surface checks need a 'surface'", "checks")
    grid = raw.get("grid", {})
    ctx.keys(grid, ("level",), "grid")
    level = ctx.integer(grid.get("level", DEFAULT_LEVEL), "grid.level", "level")
    if not 1 <= level <= 7:
        ctx.fail(f"grid.level must lie in 1..7, got {level}", "level")
    tol = raw.get("tolerances", {})
    ctx.keys(tol, tuple(DEFAULT_TOLERANCES), "tolerances")
    tol = {k: ctx.number(v, f"tolerance {k}", k) for k, v in tol.items()}
    orientation = raw.get("orientation")
    if orientation not in (None, "future", "past"):
        ctx.fail(f"orientation must be 'future' or 'past', got {orientation!r}", "orientation")
    name = raw.get("name", "scenario")
    if not isinstance(name, str):
        ctx.fail("name must be a string", "name")
    scn = Scenario(name, spacetime, surface, checks, level, tol, orientation)
    if surface is not None:
        try:
            build_surface(build_spacetime(spacetime), surface)
        except GeometryError as exc:
            ctx.fail(f"invalid surface: {exc}")
    return scn


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {str(path)!r}: {exc.strerror}") from None
    return parse_scenario(text)


# -- builders ----------------------------------------------------------------

def build_spacetime(cfg: dict) -> GRWSpacetime:
    w, fb = cfg["warping"], cfg["fiber"]
    warping = make_warping(w["kind"], dict(w.get("params") or {}))
    fiber = make_fiber(fb["kind"], int(fb["dim"]), dict(fb.get("params") or {}))
    return make_spacetime(warping, fiber, cfg.get("slab"))


def build_surface(spacetime: GRWSpacetime, cfg: dict) -> GraphHypersurface:
    kind = cfg["kind"]
    if kind == "slice":
        return slice_surface(spacetime, cfg["t0"])
    if kind == "random":
        return random_graph(spacetime, cfg["t0"], cfg["amplitude"], cfg["degree"],
                            cfg["seed"])
    terms = []
    for item in cfg["coeffs"]:
        term = item["term"]
        if spacetime.fiber.basis == "fourier":
            terms.append((term[0], tuple(term[1])))
        else:
            terms.append(tuple(term))
    return graph_surface(spacetime, cfg["t0"], terms, [it["c"] for it in cfg["coeffs"]])


def with_overrides(scn: Scenario, level=None, seed=None, orientation=None) -> Scenario:
    """Apply command-line overrides; the seed reaches random surfaces and identity draws."""
    surface = scn.surface
    checks = scn.checks
    if seed is not None:
        if surface is not None and surface["kind"] == "random":
            surface = dict(surface, seed=int(seed))
        checks = tuple(dict(c, seed=int(seed)) if c["check"] == "identities" else c
                       for c in checks)
    return Scenario(scn.name, scn.spacetime, surface, checks,
                    scn.level if level is None else int(level), scn.tolerances,
                    scn.orientation if orientation is None else orientation)


__all__ = [
    "CHECK_PARAMS", "FAMILIES", "Scenario", "build_spacetime", "build_surface",
    "load_scenario", "parse_scenario", "scenario_from_dict", "with_overrides",
]
