"""Reading system description files and writing JSON reports.

A system description is one JSON object::

    {
      "measure_space": {
        "levels": [{"points": ["a", "b"], "sigma": [["a"], ["b"]]}, ...],
        "weights": {"a": "1", "b": "1/2"}          # optional, counting by default
      },
      "fibers": {"a": [1, 2], "b": [0, 1]},        # dims per level
      "operators": {
        "T": {"kind": "levels", "coords": "chain", "blocks": [M1, M2]},
        "S": {"kind": "levels", "coords": "fiber", "top": M},
        "F": {"kind": "fiberwise", "family": {"a": [M1, M2]}},
        "D": {"kind": "diagonal", "f": {"a": 1, "b": [0, 1]}}
      },
      "hilbert_chains": {"K": [1, 2]},
      "presentations": {"A": {"chain": "K", "generators": [[M1, M2], {"top": M}]}},
      "tolerances": {"label": 1e-7}
    }

A complex number is either a JSON number or ``[re, im]``. A matrix is a
row-major list of rows. Operators refer to the direct integral made from
``measure_space`` and ``fibers``. Presentations act on a named Hilbert chain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .direct_integral import DirectIntegralSpace, FiberFamily, build_direct_integral
from .measure_limits import FiniteMeasurableSpace, MeasurableChain, MeasureChain
from .loc_hilbert import HilbertChain
from .tolerances import Tolerances


class ParseError(ValueError):
    """The input is not a well-formed system description."""


class UnknownName(KeyError):
    """A command referred to a name the file does not define."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown name"


def parse_complex(x: Any, where: str = "value") -> complex:
    if isinstance(x, bool):
        raise ParseError(f"{where}: booleans are not numbers")
    if isinstance(x, (int, float)):
        z = complex(x)
    elif (isinstance(x, list) and len(x) == 2
          and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x)):
        z = complex(x[0], x[1])
    else:
        raise ParseError(f"{where}: expected a number or [re, im], got {json.dumps(x)}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParseError(f"{where}: non-finite number")
    return z


def parse_matrix(x: Any, where: str = "matrix") -> np.ndarray:
    if not isinstance(x, list):
        raise ParseError(f"{where}: expected a list of rows")
    if not x:
        return np.zeros((0, 0), dtype=complex)
    if not all(isinstance(r, list) for r in x):
        raise ParseError(f"{where}: every row must be a list")
    width = len(x[0])
    if any(len(r) != width for r in x):
        raise ParseError(f"{where}: rows have different lengths")
    return np.array([[parse_complex(c, f"{where}[{i}][{j}]") for j, c in enumerate(r)]
                     for i, r in enumerate(x)], dtype=complex).reshape(len(x), width)


def _require(obj: Mapping, key: str, kind: type, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing {key!r}")
    if not isinstance(obj[key], kind):
        raise ParseError(f"{where}.{key}: expected {kind.__name__}")
    return obj[key]


@dataclass(frozen=True)
class SystemDescription:
    raw: Mapping[str, Any]
    tolerances: Tolerances
    measurable_chain: MeasurableChain | None = None
    measure_chain: MeasureChain | None = None
    fibers: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    hilbert_chains: Mapping[str, HilbertChain] = field(default_factory=dict)
    operators: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    presentations: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def require_measure(self) -> MeasureChain:
        if self.measure_chain is None:
            raise ParseError("the file has no measure_space section")
        return self.measure_chain

    def operator(self, name: str) -> Mapping[str, Any]:
        if name not in self.operators:
            raise UnknownName(f"no operator named {name!r}")
        return self.operators[name]

    def presentation(self, name: str) -> Mapping[str, Any]:
        if name not in self.presentations:
            raise UnknownName(f"no presentation named {name!r}")
        return self.presentations[name]

    def chain(self, name: str) -> HilbertChain:
        if name not in self.hilbert_chains:
            raise UnknownName(f"no Hilbert chain named {name!r}")
        return self.hilbert_chains[name]


def _parse_measure(ms: Any) -> tuple[MeasurableChain, MeasureChain]:
    if not isinstance(ms, dict):
        raise ParseError("measure_space: expected an object")
    levels_raw = _require(ms, "levels", list, "measure_space")
    levels = []
    for n, lv in enumerate(levels_raw, start=1):
        where = f"measure_space.levels[{n - 1}]"
        if not isinstance(lv, dict):
            raise ParseError(f"{where}: expected an object")
        pts = _require(lv, "points", list, where)
        if not all(isinstance(p, str) for p in pts):
            raise ParseError(f"{where}.points: point names must be strings")
        sigma = lv.get("sigma")
        try:
            if sigma is None:
                levels.append(FiniteMeasurableSpace.discrete(pts))
            else:
                if not isinstance(sigma, list) or not all(
                        isinstance(b, list) and all(isinstance(p, str) for p in b) for b in sigma):
                    raise ParseError(f"{where}.sigma: expected a list of blocks of point names")
                levels.append(FiniteMeasurableSpace(pts, sigma))
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"{where}: {exc}") from exc
    if not levels:
        raise ParseError("measure_space.levels: need at least one level")
    chain = MeasurableChain(levels)
    weights = ms.get("weights")
    if weights is None:
        return chain, MeasureChain.counting(chain)
    if not isinstance(weights, dict):
        raise ParseError("measure_space.weights: expected an object")
    for p, w in weights.items():
        if isinstance(w, bool) or not isinstance(w, (str, int)):
            raise ParseError(f"measure_space.weights.{p}: use an integer or a 'p/q' string")
    try:
        return chain, MeasureChain(chain, weights)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"measure_space.weights: {exc}") from exc


def _parse_blocks(entry: Any, where: str) -> dict[str, Any]:
    """Either ``[M1, ..., ML]`` or ``{"top": M}``."""
    if isinstance(entry, list):
        return {"blocks": [parse_matrix(M, f"{where}[{k}]") for k, M in enumerate(entry)]}
    if isinstance(entry, dict) and "top" in entry:
        return {"top": parse_matrix(entry["top"], f"{where}.top")}
    raise ParseError(f"{where}: expected a list of level matrices or {{\"top\": matrix}}")


def _parse_operator(op: Any, where: str) -> dict[str, Any]:
    if not isinstance(op, dict):
        raise ParseError(f"{where}: expected an object")
    kind = op.get("kind")
    if kind == "levels":
        coords = op.get("coords", "chain")
        if coords not in ("chain", "fiber"):
            raise ParseError(f"{where}.coords: expected 'chain' or 'fiber'")
        src = op["blocks"] if "blocks" in op else {"top": op.get("top")} if "top" in op else None
        if src is None:
            raise ParseError(f"{where}: give 'blocks' or 'top'")
        return {"kind": kind, "coords": coords, **_parse_blocks(src, where)}
    if kind == "fiberwise":
        fam = _require(op, "family", dict, where)
        return {"kind": kind,
                "family": {p: _parse_blocks(v, f"{where}.family.{p}") for p, v in fam.items()}}
    if kind == "diagonal":
        f = _require(op, "f", dict, where)
        return {"kind": kind, "f": {p: parse_complex(v, f"{where}.f.{p}") for p, v in f.items()}}
    raise ParseError(f"{where}.kind: expected 'levels', 'fiberwise' or 'diagonal'")


def _parse_tolerances(obj: Any, base: Tolerances, where: str) -> Tolerances:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ParseError(f"{where}.{k}: tolerances must be positive numbers")
    try:
        return base.override({k: float(v) for k, v in obj.items()})
    except KeyError as exc:
        raise ParseError(f"{where}: {exc.args[0]}") from exc


def load_json(text: str, where: str = "input") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def parse_system(text: str, tol_override: str | None = None) -> SystemDescription:
    """Parse a system description (and an optional tolerance file's text)."""
    raw = load_json(text)
    if not isinstance(raw, dict):
        raise ParseError("top level: expected an object")
    known = {"measure_space", "fibers", "operators", "hilbert_chains", "presentations",
             "tolerances", "description"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ParseError(f"top level: unknown sections {extra}")

    tol = Tolerances()
    if "tolerances" in raw:
        tol = _parse_tolerances(raw["tolerances"], tol, "tolerances")
    if tol_override is not None:
        tol = _parse_tolerances(load_json(tol_override, "tolerance file"), tol, "tolerance file")

    mchain = measures = None
    if "measure_space" in raw:
        mchain, measures = _parse_measure(raw["measure_space"])

    fibers: dict[str, tuple[int, ...]] = {}
    if "fibers" in raw:
        if measures is None:
            raise ParseError("fibers: needs a measure_space section")
        if not isinstance(raw["fibers"], dict):
            raise ParseError("fibers: expected an object")
        for p, dims in raw["fibers"].items():
            if not isinstance(dims, list) or not all(
                    isinstance(k, int) and not isinstance(k, bool) for k in dims):
                raise ParseError(f"fibers.{p}: expected a list of integers")
            fibers[p] = tuple(dims)

    chains: dict[str, HilbertChain] = {}
    for name, dims in (raw.get("hilbert_chains") or {}).items():
        if not isinstance(dims, list) or not all(
                isinstance(k, int) and not isinstance(k, bool) for k in dims):
            raise ParseError(f"hilbert_chains.{name}: expected a list of integers")
        try:
            chains[name] = HilbertChain(dims)
        except ValueError as exc:
            raise ParseError(f"hilbert_chains.{name}: {exc}") from exc

    ops = {name: _parse_operator(op, f"operators.{name}")
           for name, op in (raw.get("operators") or {}).items()}
    if ops and measures is None:
        raise ParseError("operators: need a measure_space section")

    pres: dict[str, dict[str, Any]] = {}
    for name, pr in (raw.get("presentations") or {}).items():
        where = f"presentations.{name}"
        if not isinstance(pr, dict):
            raise ParseError(f"{where}: expected an object")
        cname = _require(pr, "chain", str, where)
        if cname not in chains:
            raise ParseError(f"{where}.chain: unknown Hilbert chain {cname!r}")
        gens = _require(pr, "generators", list, where)
        pres[name] = {"chain": cname,
                      "generators": [_parse_blocks(g, f"{where}.generators[{k}]")
                                     for k, g in enumerate(gens)]}
    return SystemDescription(raw, tol, mchain, measures, fibers, chains, ops, pres)


def build_space(sd: SystemDescription) -> DirectIntegralSpace:
    """The direct integral described by ``measure_space`` and ``fibers``."""
    from .measure_limits import locally_standard_space

    return build_direct_integral(FiberFamily(locally_standard_space(sd.require_measure()),
                                             sd.fibers))


# --------------------------------------------------------------------------
# output


def jsonable(x: Any, digits: int = 12) -> Any:
    """Convert results to plain JSON values; complex numbers become ``[re, im]``."""
    if isinstance(x, np.ndarray):
        return [jsonable(v, digits) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        return [_num(z.real, digits), _num(z.imag, digits)]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _num(float(x), digits)
    if isinstance(x, dict):
        return {str(k): jsonable(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v, digits) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(jsonable(v, digits) for v in x)
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _num(v: float, digits: int) -> float | str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    r = round(v, digits)
    return 0.0 if r == 0 else r


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False)
