"""Finite inductive systems of measurable spaces and their limits.

A σ-algebra on a finite set is stored as the partition into its atoms; a set
is measurable exactly when it is a union of blocks. Measures are given by
exact rational point masses, so every identity here holds with ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .checks import Check, Report
from .errors import IncompatibleFamily, InvalidChain, MalformedPartition, NotMeasurable


@dataclass(frozen=True)
class FiniteMeasurableSpace:
    """A finite point set with a σ-algebra given by its partition into atoms."""

    points: tuple[str, ...]
    blocks: tuple[frozenset[str], ...]

    def __init__(self, points: Iterable[str], blocks: Iterable[Iterable[str]]):
        pts = tuple(points)
        blks = tuple(frozenset(b) for b in blocks)
        if len(set(pts)) != len(pts):
            raise MalformedPartition("duplicate point identifiers", witness=pts)
        seen: set[str] = set()
        for b in blks:
            if not b:
                raise MalformedPartition("empty block in partition")
            stray = b - set(pts)
            if stray:
                raise MalformedPartition("block contains unknown points", witness=sorted(stray))
            if seen & b:
                raise MalformedPartition("blocks overlap", witness=sorted(seen & b))
            seen |= b
        if seen != set(pts):
            raise MalformedPartition("blocks do not cover the points",
                                     witness=sorted(set(pts) - seen))
        order = {p: i for i, p in enumerate(pts)}
        blks = tuple(sorted(blks, key=lambda b: min(order[p] for p in b)))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "blocks", blks)

    @classmethod
    def discrete(cls, points: Iterable[str]) -> "FiniteMeasurableSpace":
        pts = tuple(points)
        return cls(pts, [[p] for p in pts])

    def is_measurable(self, subset: Iterable[str]) -> bool:
        E = frozenset(subset)
        if not E <= set(self.points):
            return False
        return all(b <= E or not (b & E) for b in self.blocks)

    def block_of(self, point: str) -> frozenset[str]:
        for b in self.blocks:
            if point in b:
                return b
        raise KeyError(point)


@dataclass(frozen=True)
class MeasurableChain:
    """Levels ``1..L`` of a finite strictly inductive system of measurable spaces."""

    levels: tuple[FiniteMeasurableSpace, ...]

    def __init__(self, levels: Iterable[FiniteMeasurableSpace]):
        lv = tuple(levels)
        if not lv:
            raise InvalidChain("a chain needs at least one level")
        object.__setattr__(self, "levels", lv)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> FiniteMeasurableSpace:
        """Level ``n`` (1-based)."""
        if not 1 <= n <= len(self.levels):
            raise IndexError(f"level {n} outside 1..{len(self.levels)}")
        return self.levels[n - 1]

    @property
    def points(self) -> tuple[str, ...]:
        """``X = ⋃ X_n`` in order of first appearance."""
        out: list[str] = []
        seen: set[str] = set()
        for lv in self.levels:
            for p in lv.points:
                if p not in seen:
                    seen.add(p)
                    out.append(p)
        return tuple(out)

    def first_level(self, point: str) -> int:
        for n, lv in enumerate(self.levels, start=1):
            if point in lv.points:
                return n
        raise KeyError(point)


def validate_chain(chain: MeasurableChain) -> Report:
    """Run the structural checks on a measurable chain.

    * nesting: ``X_m ⊆ X_n`` for ``m ≤ n``;
    * trace: the level-``n`` partition restricted to ``X_m`` is the level-``m`` partition;
    * inclusion: ``X_m`` is level-``n`` measurable, which together with the
      trace condition gives ``Σ_m ⊆ Σ_n``.

    Each failing check carries the first violating ``(m, n, ...)`` witness.
    """
    nesting = trace = inclusion = None
    L = chain.depth
    for m in range(1, L + 1):
        Xm = chain.level(m)
        for n in range(m + 1, L + 1):
            Xn = chain.level(n)
            missing = [p for p in Xm.points if p not in set(Xn.points)]
            if missing and nesting is None:
                nesting = {"m": m, "n": n, "point": missing[0]}
                continue
            if missing:
                continue
            xm = set(Xm.points)
            restricted = {b & xm for b in Xn.blocks} - {frozenset()}
            if trace is None and restricted != set(Xm.blocks):
                bad = next((b for b in Xm.blocks if b not in restricted), None)
                if bad is None:
                    bad = next(b for b in restricted if b not in set(Xm.blocks))
                order = {p: i for i, p in enumerate(Xm.points)}
                trace = {"m": m, "n": n, "block": sorted(bad, key=order.get)}
            if inclusion is None and not Xn.is_measurable(xm):
                cut = next(b for b in Xn.blocks if b & xm and not b <= xm)
                order = {p: i for i, p in enumerate(Xn.points)}
                inclusion = {"m": m, "n": n, "block": sorted(cut, key=order.get)}
    return Report((
        Check("nesting", nesting is None, nesting),
        Check("trace", trace is None, trace),
        Check("inclusion", inclusion is None, inclusion),
    ))


def _require_valid(chain: MeasurableChain) -> None:
    report = validate_chain(chain)
    bad = report.first_failure()
    if bad is not None:
        raise InvalidChain(f"chain fails the {bad.name} condition", witness=bad.witness)


@dataclass(frozen=True)
class LimitSigmaAlgebra:
    """The σ-algebra ``{E ⊆ X : E ∩ X_n ∈ Σ_n for every n}`` as a partition of ``X``."""

    points: tuple[str, ...]
    atoms: tuple[frozenset[str], ...]

    def is_member(self, subset: Iterable[str]) -> bool:
        E = frozenset(subset)
        if not E <= set(self.points):
            return False
        return all(a <= E or not (a & E) for a in self.atoms)

    def atom_of(self, point: str) -> frozenset[str]:
        for a in self.atoms:
            if point in a:
                return a
        raise KeyError(point)


def limit_sigma_algebra(chain: MeasurableChain) -> LimitSigmaAlgebra:
    """Atoms of the limit σ-algebra.

    ``E`` is a member iff no level block straddles ``E`` and its complement,
    so the atoms are the classes of the equivalence relation generated by
    "lie in a common block at some level" (computed with union-find).
    """
    _require_valid(chain)
    X = chain.points
    parent = {p: p for p in X}

    def find(p: str) -> str:
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for lv in chain.levels:
        for b in lv.blocks:
            it = iter(b)
            root = find(next(it))
            for q in it:
                r = find(q)
                if r != root:
                    parent[r] = root
    classes: dict[str, list[str]] = {}
    for p in X:
        classes.setdefault(find(p), []).append(p)
    return LimitSigmaAlgebra(X, tuple(frozenset(c) for c in classes.values()))


def glue_measurable_maps(chain: MeasurableChain, target: FiniteMeasurableSpace,
                         maps: Sequence[Mapping[str, str]]) -> dict[str, str]:
    """Glue compatible level maps ``f_n : X_n → Y`` into ``Φ : X → Y``.

    Requires ``f_n|X_m = f_m`` for ``m ≤ n``; the result is checked to be
    measurable for the limit σ-algebra.
    """
    if len(maps) != chain.depth:
        raise IncompatibleFamily(f"expected {chain.depth} level maps, got {len(maps)}")
    for n, f in enumerate(maps, start=1):
        pts = chain.level(n).points
        missing = [p for p in pts if p not in f]
        if missing:
            raise IncompatibleFamily(f"map at level {n} is undefined on {missing[0]!r}",
                                     witness={"n": n, "point": missing[0]})
        outside = [p for p in pts if f[p] not in set(target.points)]
        if outside:
            raise IncompatibleFamily(f"map at level {n} leaves the target at {outside[0]!r}",
                                     witness={"n": n, "point": outside[0]})
        for m in range(1, n):
            for p in chain.level(m).points:
                if maps[m - 1][p] != f[p]:
                    raise IncompatibleFamily(
                        f"levels {m} and {n} disagree at {p!r}",
                        witness={"m": m, "n": n, "point": p})
    phi: dict[str, str] = {}
    for n, f in enumerate(maps, start=1):
        for p in chain.level(n).points:
            phi.setdefault(p, f[p])
    sigma = limit_sigma_algebra(chain)
    for b in target.blocks:
        pre = {p for p, y in phi.items() if y in b}
        if not sigma.is_member(pre):
            raise NotMeasurable("glued map is not measurable",
                                witness={"target_block": sorted(b), "preimage": sorted(pre)})
    return phi


class Infinite:
    """The value ``+∞`` of a limit measure; unreachable for finite chains."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = Infinite()
MeasureValue = Fraction | Infinite


def _as_fraction(w) -> Fraction:
    f = Fraction(w) if not isinstance(w, str) else Fraction(w.strip())
    if f < 0:
        raise ValueError(f"negative weight {w!r}")
    return f


@dataclass(frozen=True)
class MeasureChain:
    """A measurable chain with nonnegative rational point masses.

    ``μ_n(E) = Σ_{p ∈ E} w_p`` for ``E ∈ Σ_n``. Because masses are attached to
    points, ``μ_m(E) = μ_n(E)`` for ``E ∈ Σ_m`` holds by construction.
    """

    chain: MeasurableChain
    weights: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        X = set(self.chain.points)
        w = {p: _as_fraction(v) for p, v in self.weights.items()}
        unknown = sorted(set(w) - X)
        if unknown:
            raise ValueError(f"weights given for unknown points: {unknown}")
        missing = sorted(X - set(w))
        if missing:
            raise ValueError(f"no weight for points: {missing}")
        object.__setattr__(self, "weights", dict((p, w[p]) for p in self.chain.points))

    @classmethod
    def counting(cls, chain: MeasurableChain) -> "MeasureChain":
        return cls(chain, {p: Fraction(1) for p in chain.points})

    def level_measure(self, n: int, subset: Iterable[str]) -> Fraction:
        """``μ_n(E)`` for ``E ∈ Σ_n``."""
        E = frozenset(subset)
        if not self.chain.level(n).is_measurable(E):
            raise NotMeasurable(f"set is not measurable at level {n}", witness=sorted(E))
        return sum((self.weights[p] for p in E), Fraction(0))

    def block_compatibility(self) -> list[tuple[int, int, frozenset[str], Fraction, Fraction]]:
        """Blocks where ``μ_m(B) ≠ Σ μ_n(level-n blocks inside B)``; empty when compatible."""
        bad = []
        for m in range(1, self.chain.depth + 1):
            for n in range(m + 1, self.chain.depth + 1):
                for B in self.chain.level(m).blocks:
                    inside = [C for C in self.chain.level(n).blocks if C <= B]
                    lhs = self.level_measure(m, B)
                    rhs = sum((self.level_measure(n, C) for C in inside), Fraction(0))
                    if lhs != rhs:
                        bad.append((m, n, B, lhs, rhs))
        return bad


@dataclass(frozen=True)
class LocallyStandardMeasureSpace:
    """``(X, Σ, μ)`` assembled from a measure chain."""

    measures: MeasureChain
    sigma: LimitSigmaAlgebra

    @property
    def chain(self) -> MeasurableChain:
        return self.measures.chain

    @property
    def points(self) -> tuple[str, ...]:
        return self.sigma.points

    def weight(self, point: str) -> Fraction:
        return self.measures.weights[point]

    def measure(self, subset: Iterable[str]) -> MeasureValue:
        return limit_measure(self.measures, subset, self.sigma)


def locally_standard_space(measures: MeasureChain) -> LocallyStandardMeasureSpace:
    return LocallyStandardMeasureSpace(measures, limit_sigma_algebra(measures.chain))


def limit_measure(space: MeasureChain, subset: Iterable[str],
                  sigma: LimitSigmaAlgebra | None = None) -> MeasureValue:
    """``μ(E) = lim_n μ_n(E ∩ X_n)`` along the chain.

    The sequence is nondecreasing; on a finite chain the limit is its last
    term, so the :data:`INFINITE` variant never occurs here.
    """
    sigma = limit_sigma_algebra(space.chain) if sigma is None else sigma
    E = frozenset(subset)
    if not sigma.is_member(E):
        raise NotMeasurable("set is not in the limit σ-algebra", witness=sorted(E))
    values = [space.level_measure(n, E & set(lv.points))
              for n, lv in enumerate(space.chain.levels, start=1)]
    return values[-1]
