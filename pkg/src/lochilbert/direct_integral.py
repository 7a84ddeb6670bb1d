"""Direct integrals of locally Hilbert spaces over finite measure spaces.

Two coordinate systems are used for a level space ``H_n``:

* **fiber coordinates** concatenate the fibers ``H_{n,p}`` in point order,
  each fiber in its own canonical coordinates (the first ``dim_{n,p}`` of
  ``D_p``);
* **chain coordinates** list the same basis vectors ``(p, k)`` ordered by the
  level at which they first appear, then point order, then ``k``. In this
  ordering ``H_m`` is spanned by the first ``dim H_m`` coordinates, so the
  level spaces form a :class:`~lochilbert.loc_hilbert.HilbertChain`.

Both systems are orthonormal for the weighted inner product
``⟨u, v⟩ = Σ_p μ({p}) ⟨u(p), v(p)⟩``: a section value ``u(p)`` enters with a
factor ``sqrt(μ({p}))``. ``V_n`` is the permutation taking chain coordinates
to fiber coordinates. Points of weight zero carry no data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidFibers, NotInFiber, SpaceMismatch, UnsupportedFamily
from .linalg_core import exact_vdot, frozen
from .loc_hilbert import HilbertChain
from .measure_limits import LocallyStandardMeasureSpace


@dataclass(frozen=True)
class FiberFamily:
    """Fiber dimension profiles ``dim_{n,p}`` over a locally standard measure space.

    Points missing from ``dims`` get zero-dimensional fibers.
    """

    space: LocallyStandardMeasureSpace
    dims: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        L = self.space.chain.depth
        X = self.space.points
        unknown = sorted(set(self.dims) - set(X))
        if unknown:
            raise InvalidFibers(f"fibers given for unknown points {unknown}", witness=unknown)
        table: dict[str, tuple[int, ...]] = {}
        for p in X:
            prof = tuple(int(k) for k in self.dims.get(p, (0,) * L))
            if len(prof) != L:
                raise InvalidFibers(f"fiber {p!r} needs {L} level dims, got {len(prof)}",
                                    witness={"point": p})
            if any(k < 0 for k in prof) or any(b < a for a, b in zip(prof, prof[1:])):
                raise InvalidFibers(f"fiber {p!r} dims must be nonnegative and nondecreasing",
                                    witness={"point": p, "dims": list(prof)})
            for n in range(1, L + 1):
                if prof[n - 1] and p not in self.space.chain.level(n).points:
                    raise InvalidFibers(f"fiber {p!r} is nonzero at level {n} but the point "
                                        f"is not in X_{n}", witness={"point": p, "level": n})
            table[p] = prof
        object.__setattr__(self, "dims", table)

    def dim(self, n: int, p: str) -> int:
        return self.dims[p][n - 1]

    def chain_of(self, p: str) -> HilbertChain:
        """The fiber ``D_p`` as a Hilbert chain."""
        return HilbertChain(self.dims[p])


@dataclass(frozen=True)
class Section:
    """``u = ∫ u(p) dμ(p)`` supported in ``X_level`` with ``u(p) ∈ H_{level,p}``."""

    level: int
    values: Mapping[str, np.ndarray]


@dataclass(frozen=True)
class DirectIntegralSpace:
    fibers: FiberFamily
    # per level: the (point, k) labels of the basis, in chain order and in fiber order
    chain_basis: tuple[tuple[tuple[str, int], ...], ...]
    fiber_basis: tuple[tuple[tuple[str, int], ...], ...]
    # per level: chain index -> fiber index permutation
    perms: tuple[np.ndarray, ...]

    @property
    def space(self) -> LocallyStandardMeasureSpace:
        return self.fibers.space

    @property
    def depth(self) -> int:
        return len(self.chain_basis)

    @property
    def chain(self) -> HilbertChain:
        return HilbertChain([len(b) for b in self.chain_basis])

    def dim(self, n: int) -> int:
        return len(self.chain_basis[n - 1])

    def weight(self, p: str) -> float:
        return float(self.space.weight(p))

    def active_points(self, n: int) -> tuple[str, ...]:
        """Points of ``X_n`` with positive weight, in point order."""
        Xn = set(self.space.chain.level(n).points)
        return tuple(p for p in self.space.points if p in Xn and self.space.weight(p) > 0)

    def fiber_slices(self, n: int) -> dict[str, slice]:
        """Location of each active fiber ``H_{n,p}`` inside level-``n`` fiber coordinates."""
        out, start = {}, 0
        for p in self.active_points(n):
            k = self.fibers.dim(n, p)
            out[p] = slice(start, start + k)
            start += k
        return out

    def V(self, n: int) -> np.ndarray:
        """``V_n`` as a permutation matrix from chain to fiber coordinates."""
        d = self.dim(n)
        M = np.zeros((d, d))
        M[self.perms[n - 1], np.arange(d)] = 1.0
        return M

    def chain_inclusion(self, n: int, m: int) -> np.ndarray:
        """``J_{n,m}`` in chain coordinates (a coordinate injection)."""
        return np.eye(self.dim(n), self.dim(m))

    def fiber_inclusion(self, n: int, m: int) -> np.ndarray:
        """``V_n J_{n,m} V_mᴴ``: the embedding ``H_m ⊆ H_n`` in fiber coordinates."""
        return self.V(n) @ self.chain_inclusion(n, m) @ self.V(m).T

    def to_fiber_coords(self, u: Section, n: int | None = None) -> np.ndarray:
        n = u.level if n is None else n
        check_section(self, u)
        if n < u.level:
            raise SpaceMismatch(f"section of level {u.level} does not lie in H_{n}")
        out = np.zeros(self.dim(n), dtype=complex)
        for p, sl in self.fiber_slices(n).items():
            if p in u.values:
                v = u.values[p]
                out[sl.start: sl.start + len(v)] = math.sqrt(self.weight(p)) * v
        return out

    def to_chain_coords(self, u: Section, n: int | None = None) -> np.ndarray:
        n = u.level if n is None else n
        return self.V(n).T @ self.to_fiber_coords(u, n)

    def section_from_chain(self, coords, n: int) -> Section:
        """Inverse of :meth:`to_chain_coords` at level ``n``."""
        c = np.asarray(coords, dtype=complex)
        f = self.V(n) @ c
        vals = {p: frozen(f[sl] / math.sqrt(self.weight(p)))
                for p, sl in self.fiber_slices(n).items()}
        return Section(n, vals)


def build_direct_integral(fibers: FiberFamily) -> DirectIntegralSpace:
    """Assemble the level spaces ``H_n`` and the reindexings ``V_n``."""
    sp = fibers.space
    L = sp.chain.depth
    X = sp.points
    positive = [p for p in X if sp.weight(p) > 0]
    chain_basis, fiber_basis, perms = [], [], []
    order: list[tuple[str, int]] = []
    for n in range(1, L + 1):
        Xn = set(sp.chain.level(n).points)
        for p in positive:
            if p in Xn:
                lo = fibers.dim(n - 1, p) if n > 1 else 0
                order.extend((p, k) for k in range(lo, fibers.dim(n, p)))
        fib = [(p, k) for p in positive if p in Xn for k in range(fibers.dim(n, p))]
        pos = {lab: i for i, lab in enumerate(fib)}
        chain_basis.append(tuple(order))
        fiber_basis.append(tuple(fib))
        perms.append(frozen(np.array([pos[lab] for lab in order], dtype=int)))
    return DirectIntegralSpace(fibers, tuple(chain_basis), tuple(fiber_basis), tuple(perms))


# --------------------------------------------------------------------------
# sections


def check_section(space: DirectIntegralSpace, u: Section) -> None:
    if not 1 <= u.level <= space.depth:
        raise SpaceMismatch(f"section level {u.level} outside 1..{space.depth}")
    active = set(space.active_points(u.level))
    for p, v in u.values.items():
        if p not in space.space.points:
            raise SpaceMismatch(f"unknown point {p!r}", witness={"point": p})
        if p not in active:
            if space.space.weight(p) == 0 and p in space.space.chain.level(u.level).points:
                continue
            raise SpaceMismatch(f"point {p!r} is outside X_{u.level}", witness={"point": p})
        if len(v) != space.fibers.dim(u.level, p):
            raise SpaceMismatch(
                f"u({p}) has length {len(v)}, fiber H_{{{u.level},{p}}} has dim "
                f"{space.fibers.dim(u.level, p)}", witness={"point": p})


def make_section(space: DirectIntegralSpace, level: int, values: Mapping[str, Sequence]) -> Section:
    """Build and validate a section; zero-weight points are dropped."""
    vals = {p: frozen(np.array(v, dtype=complex).ravel()) for p, v in values.items()}
    u = Section(level, vals)
    check_section(space, u)
    return Section(level, {p: v for p, v in vals.items() if space.space.weight(p) > 0})


def _padded(space: DirectIntegralSpace, u: Section, p: str, n: int) -> np.ndarray:
    out = np.zeros(space.fibers.dim(n, p), dtype=complex)
    v = u.values.get(p)
    if v is not None:
        out[: len(v)] = v
    return out


def density_function(space: DirectIntegralSpace, u: Section, v: Section) -> dict[str, complex]:
    """``ζ_{u,v}(p) = ⟨u(p), v(p)⟩`` on the positive-weight points of ``X``."""
    check_section(space, u)
    check_section(space, v)
    n = max(u.level, v.level)
    return {p: exact_vdot(_padded(space, u, p, n), _padded(space, v, p, n))
            for p in space.active_points(n)}


def section_inner(u: Section, v: Section, space: DirectIntegralSpace) -> complex:
    """``⟨u, v⟩ = Σ_p μ({p}) ⟨u(p), v(p)⟩`` at the common level ``max(α_u, α_v)``."""
    zeta = density_function(space, u, v)
    terms = [space.weight(p) * z for p, z in zeta.items()]
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def _family_level(space: DirectIntegralSpace, family: Mapping[str, Sequence], err) -> int:
    """Smallest level whose fibers contain every nonzero vector of the family."""
    level = 1
    for q, vec in family.items():
        v = np.asarray(vec, dtype=complex).ravel()
        nz = np.flatnonzero(v)
        if nz.size == 0:
            continue
        if q not in space.space.points:
            raise err(f"family has a vector at unknown point {q!r}", witness={"point": q})
        if space.space.weight(q) == 0:
            continue
        need = int(nz[-1]) + 1
        for n in range(1, space.depth + 1):
            if space.fibers.dim(n, q) >= need:
                level = max(level, n)
                break
        else:
            raise err(f"vector at {q!r} lies in no fiber level",
                      witness={"point": q, "length": int(v.size)})
    return level


def pairing_function(space: DirectIntegralSpace, u: Section, family: Mapping[str, Sequence]
                     ) -> dict[str, complex]:
    """``η(p) = ⟨u(p), v_p⟩`` for a pointwise family ``{v_q}`` supported in some ``X_n``."""
    check_section(space, u)
    n = max(u.level, _family_level(space, family, UnsupportedFamily))
    out = {}
    for p in space.active_points(n):
        w = np.zeros(space.fibers.dim(n, p), dtype=complex)
        if p in family:
            v = np.asarray(family[p], dtype=complex).ravel()
            k = min(len(v), len(w))
            w[:k] = v[:k]
        out[p] = exact_vdot(_padded(space, u, p, n), w)
    return out


def assemble_section(space: DirectIntegralSpace, family: Mapping[str, Sequence],
                     level: int | None = None) -> Section:
    """The section agreeing with ``family`` on every positive-weight point.

    With ``level=None`` the minimal level containing all values is used; an
    explicit ``level`` below that minimum raises :class:`NotInFiber`. Values are
    clamped (zero tail dropped) to the fiber dimension at the chosen level.
    """
    need = _family_level(space, family, NotInFiber)
    if level is None:
        level = need
    elif level < need:
        raise NotInFiber(f"family needs level {need}, requested {level}",
                         witness={"minimal_level": need})
    vals = {}
    for p in space.active_points(level):
        k = space.fibers.dim(level, p)
        w = np.zeros(k, dtype=complex)
        if p in family:
            v = np.asarray(family[p], dtype=complex).ravel()
            m = min(len(v), k)
            w[:m] = v[:m]
        vals[p] = frozen(w)
    return Section(level, vals)


def relevel(space: DirectIntegralSpace, u: Section, n: int) -> Section:
    """View ``u ∈ H_{α_u}`` as an element of ``H_n`` for ``n ≥ α_u``."""
    if n < u.level:
        raise SpaceMismatch(f"cannot lower section level {u.level} to {n}")
    return Section(n, {p: frozen(_padded(space, u, p, n)) for p in space.active_points(n)})
