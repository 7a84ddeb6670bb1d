"""Decomposable and diagonalizable operators on a direct integral.

Operators on a :class:`~lochilbert.direct_integral.DirectIntegralSpace` are
:class:`~lochilbert.loc_hilbert.LocalOperator` values on its level chain, so
level matrices are in chain coordinates. Fiber structure is read off after
conjugating with ``V_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .checks import Check, Report
from .direct_integral import DirectIntegralSpace
from .errors import ChainMismatch, IncompatibleFamily, NotMeasurable
from .linalg_core import commutant_solve, frozen, max_abs, op_norm, span_containment, span_dim
from .loc_hilbert import LocalOperator, make_local_operator
from .tolerances import Tolerances, resolve


def fiber_view(space: DirectIntegralSpace, T: LocalOperator, n: int) -> np.ndarray:
    """``V_n T_n V_nᴴ``: the level-``n`` block in fiber coordinates."""
    V = space.V(n)
    return V @ T.level(n) @ V.T


def from_fiber_view(space: DirectIntegralSpace, B: np.ndarray, n: int) -> np.ndarray:
    V = space.V(n)
    return V.T @ B @ V


def _determined_points(space: DirectIntegralSpace) -> list[str]:
    """Positive-weight points whose fiber is nonzero at the top level."""
    L = space.depth
    return [p for p in space.active_points(L) if space.fibers.dim(L, p) > 0]


# --------------------------------------------------------------------------
# operator classes


@dataclass(frozen=True)
class DecomposableOperator:
    """``∫ T_p dμ(p)`` given by a local operator ``T_p`` on each nonzero fiber."""

    space: DirectIntegralSpace
    family: Mapping[str, LocalOperator]

    def to_local_operator(self) -> LocalOperator:
        blocks = []
        for n in range(1, self.space.depth + 1):
            B = np.zeros((self.space.dim(n), self.space.dim(n)), dtype=complex)
            for p, sl in self.space.fiber_slices(n).items():
                if sl.stop > sl.start:
                    B[sl, sl] = self.family[p].level(n)
            blocks.append(frozen(from_fiber_view(self.space, B, n)))
        return LocalOperator(self.space.chain, tuple(blocks))


def decomposable(space: DirectIntegralSpace, family: Mapping[str, object],
                 tol: Tolerances | None = None) -> DecomposableOperator:
    """Validate a fiber family; values may be LocalOperators or lists of level blocks."""
    fam: dict[str, LocalOperator] = {}
    for p in _determined_points(space):
        if p not in family:
            raise IncompatibleFamily(f"no fiber operator for point {p!r}", witness={"point": p})
        chain = space.fibers.chain_of(p)
        v = family[p]
        if isinstance(v, LocalOperator):
            if v.chain != chain:
                raise ChainMismatch(f"fiber operator at {p!r} has chain {v.chain.dims}, "
                                    f"fiber has {chain.dims}")
            fam[p] = v
        else:
            fam[p] = make_local_operator(chain, list(v), tol)
    return DecomposableOperator(space, fam)


@dataclass(frozen=True)
class DiagonalizableOperator:
    """``T_f``: multiplication by a Σ-measurable function ``f``."""

    space: DirectIntegralSpace
    f: Mapping[str, complex]

    def as_decomposable(self) -> DecomposableOperator:
        fam = {}
        for p in _determined_points(self.space):
            ch = self.space.fibers.chain_of(p)
            fam[p] = LocalOperator(ch, tuple(frozen(self.f[p] * np.eye(d, dtype=complex))
                                             for d in ch.dims))
        return DecomposableOperator(self.space, fam)

    def to_local_operator(self) -> LocalOperator:
        blocks = []
        for n in range(1, self.space.depth + 1):
            diag = np.zeros(self.space.dim(n), dtype=complex)
            for p, sl in self.space.fiber_slices(n).items():
                diag[sl] = self.f.get(p, 0.0)
            blocks.append(frozen(from_fiber_view(self.space, np.diag(diag), n)))
        return LocalOperator(self.space.chain, tuple(blocks))


def _close(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def diagonalizable(space: DirectIntegralSpace, f: Mapping[str, complex],
                   tol: Tolerances | None = None) -> DiagonalizableOperator:
    """Validate that ``f`` is defined on positive-weight points and constant on limit atoms."""
    t = resolve(tol)
    pos = [p for p in space.space.points if space.space.weight(p) > 0]
    missing = [p for p in pos if p not in f]
    if missing:
        raise IncompatibleFamily(f"f is undefined at {missing[0]!r}", witness={"point": missing[0]})
    for atom in space.space.sigma.atoms:
        pts = [p for p in space.space.points if p in atom and p in pos]
        for q in pts[1:]:
            if not _close(complex(f[pts[0]]), complex(f[q]), t.scalar):
                raise NotMeasurable("f is not constant on a limit σ-atom",
                                    witness={"points": [pts[0], q],
                                             "values": [complex(f[pts[0]]), complex(f[q])]})
    return DiagonalizableOperator(space, {p: complex(v) for p, v in f.items()})


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Diagonalizable:
    f: Mapping[str, complex]
    tag: str = "diagonalizable"


@dataclass(frozen=True)
class DecomposableOnly:
    family: Mapping[str, LocalOperator]
    witness: Mapping[str, object]
    tag: str = "decomposable_only"


@dataclass(frozen=True)
class LocallyBoundedOnly:
    witness: Mapping[str, object]
    tag: str = "locally_bounded_only"


Classification = Diagonalizable | DecomposableOnly | LocallyBoundedOnly


def _off_block_witness(space: DirectIntegralSpace, T: LocalOperator, t: Tolerances):
    for n in range(1, space.depth + 1):
        B = fiber_view(space, T, n)
        thresh = t.off_block * (1.0 + max_abs(B))
        sl = space.fiber_slices(n)
        for p, sp in sl.items():
            for q, sq in sl.items():
                if p == q:
                    continue
                blk = B[sp, sq]
                if blk.size and max_abs(blk) > thresh:
                    i, j = np.unravel_index(np.argmax(np.abs(blk)), blk.shape)
                    return {"kind": "fiber_mixing", "level": n, "row_point": p, "col_point": q,
                            "entry": [int(i), int(j)], "value": complex(blk[i, j])}
    return None


def _scalar_witness(p: str, T: LocalOperator, t: Tolerances):
    """First level at which the fiber operator ``T_p`` stops being a scalar."""
    for n in range(1, T.chain.depth + 1):
        B = T.level(n)
        d = B.shape[0]
        if d == 0:
            continue
        c = complex(np.trace(B) / d)
        if max_abs(B - c * np.eye(d)) <= t.scalar * (1.0 + abs(c)):
            continue
        diag = np.diag(B)
        if max_abs(diag - diag[0]) > t.scalar * (1.0 + abs(c)):
            j = int(np.argmax(np.abs(diag - diag[0])))
            return {"kind": "non_scalar_fiber", "point": p, "level": n,
                    "directions": [0, j], "forced_values": [complex(diag[0]), complex(diag[j])]}
        off = B - np.diag(diag)
        i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        return {"kind": "non_scalar_fiber", "point": p, "level": n,
                "directions": [int(j), int(i)], "leak": complex(B[i, j])}
    return None


def classify(space: DirectIntegralSpace, T: LocalOperator, tol: Tolerances | None = None
             ) -> Classification:
    """Place ``T`` in the narrowest operator class that contains it.

    * :class:`LocallyBoundedOnly` carries the first fiber-mixing entry found;
    * :class:`DecomposableOnly` carries the fiber family and a witness that no
      measurable scalar function works: a fiber on which two directions force
      different values of ``f(p)``, or two points of one limit σ-atom with
      different scalars;
    * :class:`Diagonalizable` carries ``f`` on every point of ``X``. Points
      without fiber data get the value of their atom (or 0).
    """
    t = resolve(tol)
    if T.chain.dims != space.chain.dims:
        raise ChainMismatch(f"operator chain {T.chain.dims} is not the direct-integral chain "
                            f"{space.chain.dims}")
    w = _off_block_witness(space, T, t)
    if w is not None:
        return LocallyBoundedOnly(w)

    family: dict[str, LocalOperator] = {}
    for p in _determined_points(space):
        blocks = []
        for n in range(1, space.depth + 1):
            sl = space.fiber_slices(n).get(p)
            B = fiber_view(space, T, n)
            blocks.append(B[sl, sl] if sl is not None else np.zeros((0, 0), dtype=complex))
        family[p] = make_local_operator(space.fibers.chain_of(p), blocks,
                                        t.override({"compatibility": max(t.compatibility, t.off_block)}))

    for p, Tp in family.items():
        w = _scalar_witness(p, Tp, t)
        if w is not None:
            return DecomposableOnly(family, w)

    scalars = {p: complex(np.trace(Tp.top) / Tp.top.shape[0]) for p, Tp in family.items()}
    f: dict[str, complex] = {}
    for atom in space.space.sigma.atoms:
        pts = [p for p in space.space.points if p in atom]
        known = [p for p in pts if p in scalars]
        for q in known[1:]:
            if not _close(scalars[known[0]], scalars[q], t.scalar):
                return DecomposableOnly(family, {
                    "kind": "non_measurable", "atom": pts, "points": [known[0], q],
                    "forced_values": [scalars[known[0]], scalars[q]]})
        base = scalars[known[0]] if known else 0j
        for p in pts:
            f[p] = scalars.get(p, base)
    return Diagonalizable({p: f[p] for p in space.space.points})


# --------------------------------------------------------------------------
# compressions and level algebras


def is_fiber_block_diagonal(space: DirectIntegralSpace, B: np.ndarray, n: int,
                            tol: float = 1e-10) -> bool:
    """True when the level-``n`` chain-coordinate matrix ``B`` does not mix fibers."""
    F = space.V(n) @ B @ space.V(n).T
    sl = space.fiber_slices(n)
    return all(max_abs(F[sp, sq]) <= tol * (1.0 + max_abs(F))
               for p, sp in sl.items() for q, sq in sl.items() if p != q)


def compress(space: DirectIntegralSpace, B: np.ndarray, n: int, m: int) -> np.ndarray:
    """Compress a fiber-block-diagonal level-``n`` matrix to level ``m ≤ n``.

    Each fiber block ``T_{n,p}`` is replaced by its compression to
    ``H_{m,p}`` (its top-left ``dim_{m,p}`` corner); points outside ``X_m``
    drop out. Input and output are in chain coordinates.
    """
    if m > n:
        raise ValueError("compression needs m ≤ n")
    B = np.asarray(B, dtype=complex)
    if B.shape != (space.dim(n), space.dim(n)):
        raise ValueError(f"level-{n} matrices are {space.dim(n)}x{space.dim(n)}")
    if not is_fiber_block_diagonal(space, B, n):
        raise ValueError("compression is defined on fiber-block-diagonal operators only")
    F = space.V(n) @ B @ space.V(n).T
    src = space.fiber_slices(n)
    out = np.zeros((space.dim(m), space.dim(m)), dtype=complex)
    for p, sl in space.fiber_slices(m).items():
        k = sl.stop - sl.start
        s0 = src[p].start
        out[sl, sl] = F[s0: s0 + k, s0: s0 + k]
    return from_fiber_view(space, out, m)


@dataclass(frozen=True)
class LevelAlgebra:
    level: int
    basis: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def closure_defect(self) -> float:
        """How far the span is from being closed under adjoints and products."""
        if not self.basis:
            return 0.0
        worst = span_containment([b.conj().T for b in self.basis], list(self.basis))
        prods = [a @ b for a in self.basis for b in self.basis]
        return max(worst, span_containment(prods, list(self.basis)))


def m_dec_level(space: DirectIntegralSpace, n: int) -> LevelAlgebra:
    """Level-``n`` algebra ``⊕_p B(H_{n,p})`` of M_DEC, spanned by fiber matrix units."""
    basis = []
    for p, sl in space.fiber_slices(n).items():
        for i in range(sl.start, sl.stop):
            for j in range(sl.start, sl.stop):
                E = np.zeros((space.dim(n), space.dim(n)), dtype=complex)
                E[i, j] = 1.0
                basis.append(frozen(from_fiber_view(space, E, n)))
    return LevelAlgebra(n, tuple(basis))


def level_atoms(space: DirectIntegralSpace, n: int) -> list[list[str]]:
    """Limit σ-atoms intersected with the active points of ``X_n`` (nonempty fibers only)."""
    sl = space.fiber_slices(n)
    out = []
    for atom in space.space.sigma.atoms:
        pts = [p for p in sl if p in atom and sl[p].stop > sl[p].start]
        if pts:
            out.append(pts)
    return out


def m_diag_level(space: DirectIntegralSpace, n: int) -> LevelAlgebra:
    """Level-``n`` image of M_DIAG, spanned by the indicators of limit σ-atoms."""
    sl = space.fiber_slices(n)
    basis = []
    for pts in level_atoms(space, n):
        diag = np.zeros(space.dim(n), dtype=complex)
        for p in pts:
            diag[sl[p]] = 1.0
        basis.append(frozen(from_fiber_view(space, np.diag(diag), n)))
    return LevelAlgebra(n, tuple(basis))


def expected_commutant_dim(space: DirectIntegralSpace, n: int) -> int:
    return sum(sum(space.fibers.dim(n, p) for p in pts) ** 2 for pts in level_atoms(space, n))


def separates_fibers(space: DirectIntegralSpace, n: int) -> bool:
    """True when no limit σ-atom holds two nonzero fibers at level ``n``."""
    return all(len(pts) == 1 for pts in level_atoms(space, n))


def diag_commutant(space: DirectIntegralSpace, n: int, tol: Tolerances | None = None
                   ) -> LevelAlgebra:
    """``(M_DIAG)′`` at level ``n``, solved inside ``B(H_n)``."""
    gens = m_diag_level(space, n).basis
    return LevelAlgebra(n, tuple(commutant_solve(gens, tol, dim=space.dim(n))))


def check_dec_equals_diag_commutant(space: DirectIntegralSpace, tol: Tolerances | None = None
                                   ) -> Report:
    """Per-level comparison of M_DIAG, M_DEC and (M_DIAG)′.

    Checks ``M_DIAG ⊆ M_DEC ⊆ (M_DIAG)′`` and the reverse containment
    ``(M_DIAG)′ ⊆ M_DEC``; the last one holds exactly when the limit σ-algebra
    separates the nonzero fibers (each witness records whether it does).
    """
    t = resolve(tol)
    checks = []
    for n in range(1, space.depth + 1):
        diag = m_diag_level(space, n)
        dec = m_dec_level(space, n)
        comm = diag_commutant(space, n, t)
        info = {"level": n, "dim_diag": diag.dim, "dim_dec": dec.dim, "dim_commutant": comm.dim,
                "expected_commutant_dim": expected_commutant_dim(space, n),
                "separating": separates_fibers(space, n)}
        r1 = span_containment(list(diag.basis), list(dec.basis))
        r2 = span_containment(list(dec.basis), list(comm.basis))
        r3 = span_containment(list(comm.basis), list(dec.basis))
        checks += [
            Check(f"level{n}.diag_in_dec", r1 <= t.span, info, r1),
            Check(f"level{n}.dec_in_commutant", r2 <= t.span, info, r2),
            Check(f"level{n}.commutant_in_dec", r3 <= t.span, info, r3),
            Check(f"level{n}.commutant_dim", comm.dim == info["expected_commutant_dim"], info,
                  float(abs(comm.dim - info["expected_commutant_dim"]))),
        ]
    return Report(checks)


@dataclass(frozen=True)
class DilationResult:
    residual: float
    normalized_residual: float
    isometry_residual: float
    per_power: tuple[float, ...]

    def ok(self, tol: Tolerances | None = None) -> bool:
        t = resolve(tol)
        return self.normalized_residual <= t.dilation and self.isometry_residual <= t.dilation


def check_dilation_identity(space: DirectIntegralSpace, T: LocalOperator, m: int, n: int,
                            k: int = 3) -> DilationResult:
    """Compare ``V_m T^j V_mᴴ`` with ``Cᴴ (V_n T^j V_nᴴ) C`` for ``j = 0..k``.

    ``C = V_n J_{n,m} V_mᴴ`` embeds ``H_m`` into ``H_n`` in fiber coordinates.
    Residuals are Frobenius norms; the normalized residual divides the
    power-``j`` residual by ``1 + ‖T_n‖^j``.
    """
    if not 1 <= m <= n <= space.depth:
        raise ValueError("need 1 ≤ m ≤ n ≤ L")
    if T.chain.dims != space.chain.dims:
        raise ChainMismatch("operator does not act on the direct-integral chain")
    C = space.fiber_inclusion(n, m)
    iso = float(np.linalg.norm(C.T @ C - np.eye(space.dim(m))))
    Vm, Vn = space.V(m), space.V(n)
    Tm, Tn = T.level(m), T.level(n)
    norm_n = op_norm(Tn) if Tn.size else 0.0
    raw, normed = [], []
    Pm = np.eye(space.dim(m), dtype=complex)
    Pn = np.eye(space.dim(n), dtype=complex)
    for j in range(k + 1):
        lhs = Vm @ Pm @ Vm.T
        rhs = C.conj().T @ (Vn @ Pn @ Vn.T) @ C
        r = float(np.linalg.norm(lhs - rhs))
        raw.append(r)
        normed.append(r / (1.0 + norm_n ** j))
        Pm, Pn = Pm @ Tm, Pn @ Tn
    return DilationResult(max(raw), max(normed), iso, tuple(raw))


def glue_diag_functions(space: DirectIntegralSpace, fs: Sequence[Mapping[str, complex]],
                        tol: Tolerances | None = None) -> DiagonalizableOperator:
    """Glue level functions ``f_n`` on ``X_n`` that agree on positive-weight overlaps."""
    t = resolve(tol)
    if len(fs) != space.depth:
        raise IncompatibleFamily(f"expected {space.depth} level functions, got {len(fs)}")
    glued: dict[str, complex] = {}
    source: dict[str, int] = {}
    for n, fn in enumerate(fs, start=1):
        for p in space.active_points(n):
            if p not in fn:
                raise IncompatibleFamily(f"f_{n} is undefined at {p!r}", witness={"n": n, "point": p})
        for p, v in fn.items():
            v = complex(v)
            if p in glued and space.space.weight(p) > 0 and not _close(glued[p], v, t.scalar):
                raise IncompatibleFamily(
                    f"f_{source[p]} and f_{n} disagree at {p!r}",
                    witness={"m": source[p], "n": n, "point": p, "values": [glued[p], v]})
            if p not in glued:
                glued[p], source[p] = v, n
    return diagonalizable(space, glued, t)


def commutator_residual(A: LocalOperator, B: LocalOperator) -> float:
    """``max_n ‖[A_n, B_n]‖_F``."""
    return max((float(np.linalg.norm(a @ b - b @ a)) for a, b in zip(A.blocks, B.blocks)),
               default=0.0)


def double_commutant_dims(mats: Sequence[np.ndarray], dim: int,
                          tol: Tolerances | None = None) -> tuple[int, int, int]:
    """``(dim span M, dim M′, dim M″)`` for a list of matrices ``M``."""
    c1 = commutant_solve(mats, tol, dim=dim)
    c2 = commutant_solve(c1, tol, dim=dim)
    return span_dim(list(mats)), len(c1), len(c2)

