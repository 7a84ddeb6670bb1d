"""Command-line entry point: ``lochilbert <command> <file> ...``.

Every command prints one JSON report on standard output. Exit status is 0
when all checks pass, 1 when a check fails, and 2 when the input is unusable.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .checks import Check, Report
from .dec_diag import (
    DecomposableOnly,
    Diagonalizable,
    check_dec_equals_diag_commutant,
    classify,
    decomposable,
    diag_commutant,
    diagonalizable,
    expected_commutant_dim,
    from_fiber_view,
    level_atoms,
    separates_fibers,
)
from .direct_integral import DirectIntegralSpace
from .disintegration import disintegrate, make_presentation, verify_conjugation
from .errors import LocHilbertError
from .fileformat import ParseError, SystemDescription, UnknownName, build_space, dumps, parse_system
from .linalg_core import max_abs, orthonormalize
from .loc_hilbert import LocalOperator, from_top, make_local_operator
from .measure_limits import limit_sigma_algebra, validate_chain
from .tolerances import Tolerances

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _residual(x: float | None) -> float | None:
    return None if x is None else float(f"{float(x):.6g}")


def _check_record(c: Check) -> dict[str, Any]:
    return {"name": c.name, "status": c.status, "residual": _residual(c.residual),
            "witness": c.witness}


def _error_check(name: str, exc: LocHilbertError) -> Check:
    return Check(name, False, {"error": type(exc).__name__, "message": str(exc),
                               "witness": exc.witness})


# --------------------------------------------------------------------------
# building objects from a description


def _level_blocks(entry: dict, dims: Sequence[int]) -> list[np.ndarray]:
    if "blocks" in entry:
        return entry["blocks"]
    top = entry["top"]
    return [top[:d, :d] for d in dims]


def build_operator(sd: SystemDescription, space: DirectIntegralSpace, name: str,
                   tol: Tolerances) -> LocalOperator:
    op = sd.operator(name)
    kind = op["kind"]
    if kind == "levels":
        if op["coords"] == "chain":
            return make_local_operator(space.chain, _level_blocks(op, space.chain.dims), tol)
        if "blocks" in op:
            blocks = [from_fiber_view(space, B, n) if B.size else B
                      for n, B in enumerate(op["blocks"], start=1)]
            return make_local_operator(space.chain, blocks, tol)
        return from_top(space.chain, from_fiber_view(space, op["top"], space.depth), tol)
    if kind == "fiberwise":
        unknown = sorted(set(op["family"]) - set(space.fibers.dims))
        if unknown:
            raise ParseError(f"operators.{name}: unknown points {unknown}")
        fam = {p: _level_blocks(v, space.fibers.dims[p]) for p, v in op["family"].items()}
        return decomposable(space, fam, tol).to_local_operator()
    return diagonalizable(space, op["f"], tol).to_local_operator()


def build_presentation(sd: SystemDescription, name: str, tol: Tolerances):
    pr = sd.presentation(name)
    chain = sd.chain(pr["chain"])
    gens = [_level_blocks(g, chain.dims) for g in pr["generators"]]
    return make_presentation(chain, gens, tol)


# --------------------------------------------------------------------------
# commands


def cmd_validate(sd: SystemDescription, args) -> tuple[list[Check], dict]:
    tol = sd.tolerances
    checks: list[Check] = []
    result: dict[str, Any] = {}
    if sd.measurable_chain is not None:
        rep = validate_chain(sd.measurable_chain)
        checks += [Check(f"measure.{c.name}", c.ok, c.witness, c.residual) for c in rep.checks]
        if rep.ok:
            sigma = limit_sigma_algebra(sd.measurable_chain)
            result["points"] = list(sigma.points)
            result["atoms"] = [sorted(a) for a in sigma.atoms]
            bad = sd.measure_chain.block_compatibility()
            checks.append(Check("measure.block_additivity", not bad,
                                None if not bad else {"m": bad[0][0], "n": bad[0][1],
                                                      "block": sorted(bad[0][2])}))
            try:
                space = build_space(sd)
            except LocHilbertError as exc:
                checks.append(_error_check("fibers", exc))
            else:
                checks.append(Check("fibers", True))
                result["dims"] = list(space.chain.dims)
                worst = max(max_abs(space.V(n) @ space.V(n).T - np.eye(space.dim(n)))
                            for n in range(1, space.depth + 1))
                checks.append(Check("direct_integral.V_unitary", worst <= 1e-12, None, worst))
                for name in sd.operators:
                    try:
                        build_operator(sd, space, name, tol)
                        checks.append(Check(f"operator.{name}", True))
                    except LocHilbertError as exc:
                        checks.append(_error_check(f"operator.{name}", exc))
    for name, chain in sd.hilbert_chains.items():
        checks.append(Check(f"hilbert_chain.{name}", True, {"dims": list(chain.dims)}))
    for name, pr in sd.presentations.items():
        chain = sd.chain(pr["chain"])
        try:
            for g in pr["generators"]:
                make_local_operator(chain, _level_blocks(g, chain.dims), tol)
            checks.append(Check(f"presentation.{name}", True))
        except (LocHilbertError, ValueError) as exc:
            if isinstance(exc, LocHilbertError):
                checks.append(_error_check(f"presentation.{name}", exc))
            else:
                raise ParseError(f"presentations.{name}: {exc}") from exc
    return checks, result


def _summary(space: DirectIntegralSpace, cls) -> str:
    if isinstance(cls, Diagonalizable):
        L = space.depth
        # values at points with a zero fiber are arbitrary, so they are ignored here
        vals = {complex(cls.f[p]) for p in space.active_points(L) if space.fibers.dim(L, p) > 0}
        if len(vals) == 1:
            v = vals.pop()
            txt = f"{v.real:g}" if v.imag == 0 else f"{v.real:g}{v.imag:+g}i"
            return f"diagonalizable, f ≡ {txt}"
        return "diagonalizable"
    if isinstance(cls, DecomposableOnly):
        return "decomposable, not diagonalizable"
    return "locally bounded only"


def cmd_classify(sd: SystemDescription, args) -> tuple[list[Check], dict]:
    tol = sd.tolerances
    sd.operator(args.op)
    space = build_space(sd)
    try:
        T = build_operator(sd, space, args.op, tol)
    except LocHilbertError as exc:
        return [_error_check(f"operator.{args.op}", exc)], {}
    cls = classify(space, T, tol)
    result: dict[str, Any] = {"operator": args.op, "class": cls.tag, "summary": _summary(space, cls)}
    if isinstance(cls, Diagonalizable):
        result["f"] = dict(cls.f)
    else:
        result["witness"] = cls.witness
    if isinstance(cls, DecomposableOnly):
        result["family"] = {p: op.top for p, op in cls.family.items()}
    return [Check(f"operator.{args.op}", True), Check("classified", True, {"class": cls.tag})], result


def _level_arg(space: DirectIntegralSpace, n: int) -> int:
    if not 1 <= n <= space.depth:
        raise UnknownName(f"level {n} outside 1..{space.depth}")
    return n


def cmd_commutant(sd: SystemDescription, args) -> tuple[list[Check], dict]:
    tol = sd.tolerances
    space = build_space(sd)
    n = _level_arg(space, args.level)
    basis = diag_commutant(space, n, tol)
    rep = check_dec_equals_diag_commutant(space, tol)
    checks = [c for c in rep.checks if c.name.startswith(f"level{n}.")]
    result = {"level": n, "dim": basis.dim, "expected_dim": expected_commutant_dim(space, n),
              "separating": separates_fibers(space, n), "atoms": level_atoms(space, n),
              "basis": list(basis.basis)}
    return checks, result


def cmd_dec_commutant(sd: SystemDescription, args) -> tuple[list[Check], dict]:
    tol = sd.tolerances
    space = build_space(sd)
    rep = check_dec_equals_diag_commutant(space, tol)
    levels = []
    for n in range(1, space.depth + 1):
        dim_chk = rep.get(f"level{n}.commutant_dim")
        levels.append({"level": n, "expected_dim": expected_commutant_dim(space, n),
                       "separating": separates_fibers(space, n), "witness": dim_chk.witness})
    return list(rep.checks), {"levels": levels, "holds": rep.ok}


def cmd_disintegrate(sd: SystemDescription, args) -> tuple[list[Check], dict]:
    tol = sd.tolerances
    sd.presentation(args.algebra)
    try:
        pres = build_presentation(sd, args.algebra, tol)
        res = disintegrate(pres, tol)
    except LocHilbertError as exc:
        return [_error_check("disintegration", exc)], {"algebra": args.algebra}
    spectrum = res.spectrum
    checks = [Check("disintegration", True)]
    checks += list(verify_conjugation(res, pres, tol).checks)
    ranks = {p: [orthonormalize(spectrum.level(n).bases[p] if p in spectrum.level(n).bases
                                else np.zeros((spectrum.chain.dim(n), 0)), tol.orthonormal).dim
                 for n in range(1, spectrum.depth + 1)] for p in spectrum.points}
    dims = {p: list(res.fibers.dims[p]) for p in spectrum.points}
    checks.append(Check("fiber_dims_equal_projection_ranks", ranks == dims,
                        None if ranks == dims else {"fibers": dims, "ranks": ranks}))
    result = {
        "algebra": args.algebra,
        "spectrum": {"points": list(spectrum.points),
                     "labels": {p: list(spectrum.labels[p]) for p in spectrum.points},
                     "levels": [list(lv.points) for lv in spectrum.levels]},
        "fiber_dims": dims,
        "projection_ranks": ranks,
        "W": [W for W in res.W],
        "residuals": {k: _residual(v) for k, v in res.residuals.items()},
    }
    if args.out:
        Path(args.out).write_text(dumps(result) + "\n", encoding="utf-8")
    return checks, result


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "commutant": cmd_commutant,
    "dec-commutant": cmd_dec_commutant,
    "theorem33": cmd_dec_commutant,
    "disintegrate": cmd_disintegrate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lochilbert",
                                 description="Finite-level checks for locally Hilbert spaces.")
    ap.add_argument("--tol-file", help="JSON object of tolerance overrides")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check every object in a system file")
    p.add_argument("file")
    p = sub.add_parser("classify", help="classify an operator")
    p.add_argument("file")
    p.add_argument("--op", required=True)
    p = sub.add_parser("commutant", help="commutant of the diagonal algebra at one level")
    p.add_argument("file")
    p.add_argument("--level", type=int, required=True)
    p = sub.add_parser("dec-commutant", aliases=["theorem33"],
                       help="decomposable operators versus the diagonal commutant")
    p.add_argument("file")
    p = sub.add_parser("disintegrate", help="disintegrate an abelian presentation")
    p.add_argument("file")
    p.add_argument("--algebra", required=True)
    p.add_argument("--out")
    return ap


def run(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    """Run a command; returns ``(exit code, report)``."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS, {}
    start = time.perf_counter()
    report: dict[str, Any] = {"command": args.command}
    try:
        data = Path(args.file).read_bytes()
        tol_bytes = Path(args.tol_file).read_bytes() if args.tol_file else None
        digest = hashlib.sha256(data + b"\0" + (tol_bytes or b"")).hexdigest()
        report["input_digest"] = digest
        sd = parse_system(data.decode("utf-8"),
                          tol_bytes.decode("utf-8") if tol_bytes is not None else None)
        checks, result = COMMANDS[args.command](sd, args)
    except LocHilbertError as exc:
        checks, result = [_error_check(args.command, exc)], {}
    except (ParseError, UnknownName, ValueError, OSError, UnicodeDecodeError) as exc:
        report.update({"status": "error", "error": f"{type(exc).__name__}: {exc}",
                       "wall_time_s": round(time.perf_counter() - start, 6)})
        return EXIT_INPUT, report
    ok = Report(checks).ok
    report.update({"checks": [_check_record(c) for c in checks], "result": result,
                   "status": "pass" if ok else "fail",
                   "wall_time_s": round(time.perf_counter() - start, 6)})
    return (EXIT_PASS if ok else EXIT_FAIL), report


def main(argv: Sequence[str] | None = None) -> int:
    code, report = run(argv)
    if report:
        sys.stdout.write(dumps(report) + "\n")
    if code == EXIT_INPUT and "error" in report:
        sys.stderr.write(report["error"] + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
