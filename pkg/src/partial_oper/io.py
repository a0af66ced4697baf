"""JSON input and output; every number is an exact rational string."""
from __future__ import annotations

import json
from typing import Any

from .bundle import BundleError, Flag, ParabolicData, SplitBundle
from .connection import FuchsianSystem, SystemError_, validate_system
from .exactalg import PolyMatrix, format_rat, rat
from .hodge import HodgeLevel, HodgeSystem


class InputError(ValueError):
    pass


def _rat(x):
    try:
        return rat(x)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {x!r}") from exc


def _flag(dim: int, steps) -> Flag:
    try:
        return Flag.from_steps(dim, [(_rat(s["weight"]), [[_rat(c) for c in v] for v in s["vectors"]])
                                     for s in steps])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed flag steps: {exc}") from exc


def _parabolic(points: tuple, dim: int, data) -> ParabolicData:
    by_point = {}
    for entry in data or []:
        by_point[_rat(entry["point"])] = _flag(dim, entry["steps"])
    unknown = set(by_point) - set(points)
    if unknown:
        raise InputError(f"flags given at unmarked points: {sorted(map(format_rat, unknown))}")
    return ParabolicData(points, tuple(by_point.get(x) or Flag.trivial(dim) for x in points))


def system_from_json(data: dict[str, Any], validate: bool = True) -> FuchsianSystem:
    try:
        r = int(data["rank"])
        points = tuple(_rat(x) for x in data["points"])
        residues = tuple(tuple(tuple(_rat(c) for c in row) for row in a) for a in data["residues"])
        par = _parabolic(points, r, data.get("parabolic"))
        s = FuchsianSystem(r, points, residues, par)
        if validate:
            validate_system(s)
        return s
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed system: {exc}") from exc
    except (SystemError_, BundleError) as exc:
        raise InputError(str(exc)) from exc


def system_to_json(s: FuchsianSystem) -> dict:
    return {"rank": s.rank, "points": [format_rat(x) for x in s.points],
            "residues": [[[format_rat(c) for c in row] for row in a] for a in s.residues],
            "parabolic": [{"point": format_rat(x), "steps": f.to_json()} for x, f in zip(s.points, s.par.flags)]}


def hodge_from_json(data: dict[str, Any]) -> HodgeSystem:
    try:
        points = tuple(_rat(x) for x in data["points"])
        levels = {}
        for lv in data["levels"]:
            degs = tuple(int(d) for d in lv["degrees"])
            levels[int(lv["p"])] = HodgeLevel(SplitBundle(degs), _parabolic(points, len(degs), lv.get("parabolic")))
        theta = {}
        for th in data.get("theta", []):
            p = int(th["p"])
            theta[p] = PolyMatrix.from_json(th["matrix"], levels[p - 1].rank, levels[p].rank)
        return HodgeSystem(points, levels, theta)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed Hodge system: {exc}") from exc


def hodge_to_json(e: HodgeSystem) -> dict:
    return {"points": [format_rat(x) for x in e.points],
            "levels": [{"p": p, "degrees": list(l.bundle.degrees), "pardeg": format_rat(l.pardeg),
                        "parabolic": [{"point": format_rat(x), "steps": f.to_json()}
                                      for x, f in zip(e.points, l.par.flags)]}
                       for p, l in sorted(e.levels.items())],
            "theta": [{"p": p, "matrix": m.to_json()} for p, m in sorted(e.theta.items())]}


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
