"""Finite-dimensional locally Hilbert spaces and locally bounded operators.

A :class:`HilbertChain` with dims ``d_1 ≤ … ≤ d_L`` lives inside ``C^{d_L}``;
level ``n`` is the span of the first ``d_n`` standard basis vectors. A
:class:`LocalOperator` stores one matrix per level. Levels are 1-based
throughout the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChainMismatch, NotLocallyBounded
from .linalg_core import as_cmatrix, exact_vdot, frozen, hermitian_eig
from .tolerances import Tolerances, resolve


@dataclass(frozen=True)
class HilbertChain:
    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        ds = tuple(int(d) for d in dims)
        if not ds:
            raise ValueError("a chain needs at least one level")
        if any(d < 0 for d in ds):
            raise ValueError(f"negative dimension in {ds}")
        if any(b < a for a, b in zip(ds, ds[1:])):
            raise ValueError(f"dimensions must be nondecreasing, got {ds}")
        object.__setattr__(self, "dims", ds)

    @property
    def depth(self) -> int:
        return len(self.dims)

    @property
    def ambient_dim(self) -> int:
        return self.dims[-1]

    def dim(self, n: int) -> int:
        if not 1 <= n <= self.depth:
            raise IndexError(f"level {n} outside 1..{self.depth}")
        return self.dims[n - 1]

    def projection(self, n: int) -> np.ndarray:
        """``P_n`` as a ``d_L × d_L`` matrix."""
        P = np.zeros((self.ambient_dim, self.ambient_dim), dtype=complex)
        k = self.dim(n)
        P[:k, :k] = np.eye(k)
        return P

    def inclusion(self, n: int, m: int) -> np.ndarray:
        """``J_{n,m}``: the ``d_n × d_m`` coordinate injection of level ``m`` into level ``n``."""
        if m > n:
            raise ValueError("inclusion needs m ≤ n")
        return np.eye(self.dim(n), self.dim(m), dtype=complex)


@dataclass(frozen=True)
class LocalVector:
    level: int
    coords: np.ndarray

    def embed(self, chain: HilbertChain, n: int) -> np.ndarray:
        """Coordinates at level ``n ≥ self.level`` (zero padding)."""
        if n < self.level:
            raise ValueError(f"cannot embed a level-{self.level} vector into level {n}")
        out = np.zeros(chain.dim(n), dtype=complex)
        out[: len(self.coords)] = self.coords
        return out


def local_vector(chain: HilbertChain, level: int, coords) -> LocalVector:
    c = np.array(coords, dtype=complex).ravel()
    if c.shape[0] != chain.dim(level):
        raise ValueError(f"level {level} vectors have length {chain.dim(level)}, got {c.shape[0]}")
    return LocalVector(level, frozen(c))


def inner(chain: HilbertChain, u: LocalVector, v: LocalVector) -> complex:
    """``⟨u, v⟩`` (conjugate-linear in ``u``), evaluated at the higher of the two levels.

    The sum is correctly rounded (``math.fsum``), so zero padding from a
    re-embedding cannot change the result even in the last bit.
    """
    n = max(u.level, v.level)
    return exact_vdot(u.embed(chain, n), v.embed(chain, n))


@dataclass(frozen=True)
class LocalOperator:
    """A projective family ``T_n ∈ B(K_n)``.

    Construct through :func:`make_local_operator` to have the compatibility
    contract verified; the algebraic helpers below preserve it.
    """

    chain: HilbertChain
    blocks: tuple[np.ndarray, ...]

    def level(self, n: int) -> np.ndarray:
        self.chain.dim(n)
        return self.blocks[n - 1]

    @property
    def top(self) -> np.ndarray:
        return self.blocks[-1]

    def apply(self, u: LocalVector) -> LocalVector:
        return LocalVector(u.level, frozen(self.level(u.level) @ u.coords))

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        return compose(self, other)

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        return add(self, other)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        return add(self, scale(other, -1))

    def __rmul__(self, c: complex) -> "LocalOperator":
        return scale(self, c)

    @property
    def H(self) -> "LocalOperator":
        return adjoint(self)


def compatibility_defect(chain: HilbertChain, blocks: Sequence[np.ndarray]):
    """Largest violation of the local-boundedness contract with its location.

    Returns ``(defect, witness)``; ``witness`` is ``None`` when ``defect`` is 0.
    For each ``m < n`` the level-``n`` block must restrict to the level-``m``
    block on the first ``d_m`` coordinates and vanish on the two off-diagonal
    blocks of the splitting ``d_m + (d_n − d_m)``.
    """
    worst, witness = 0.0, None
    for n in range(2, chain.depth + 1):
        Tn = blocks[n - 1]
        for m in range(1, n):
            dm = chain.dim(m)
            parts = (
                ("restriction", Tn[:dm, :dm] - blocks[m - 1], 0, 0),
                ("upper", Tn[:dm, dm:], 0, dm),
                ("lower", Tn[dm:, :dm], dm, 0),
            )
            for kind, D, r0, c0 in parts:
                if D.size == 0:
                    continue
                k = int(np.argmax(np.abs(D)))
                i, j = divmod(k, D.shape[1])
                val = float(abs(D[i, j]))
                if val > worst:
                    worst = val
                    witness = {"m": m, "n": n, "kind": kind,
                               "entry": [r0 + i, c0 + j], "value": val}
    return worst, witness


def make_local_operator(chain: HilbertChain, blocks: Sequence, tol: Tolerances | None = None
                        ) -> LocalOperator:
    """Validate a projective family and wrap it as a :class:`LocalOperator`."""
    t = resolve(tol)
    if len(blocks) != chain.depth:
        raise ValueError(f"expected {chain.depth} blocks, got {len(blocks)}")
    mats = []
    for n, B in enumerate(blocks, start=1):
        M = as_cmatrix(B, name=f"block {n}") if np.size(B) else np.zeros((0, 0), dtype=complex)
        d = chain.dim(n)
        if M.shape != (d, d):
            raise ValueError(f"block {n} must be {d}x{d}, got {M.shape}")
        mats.append(M)
    defect, witness = compatibility_defect(chain, mats)
    if defect > t.compatibility:
        raise NotLocallyBounded(
            f"levels {witness['m']} and {witness['n']} are incompatible ({witness['kind']} block)",
            witness=witness)
    # also verify adjoint compatibility, as the contract promises
    adj = [M.conj().T for M in mats]
    defect, witness = compatibility_defect(chain, adj)
    if defect > t.compatibility:
        raise NotLocallyBounded("adjoint family is incompatible", witness=witness)
    return LocalOperator(chain, tuple(frozen(M) for M in mats))


def from_top(chain: HilbertChain, top, tol: Tolerances | None = None) -> LocalOperator:
    """Build the family from its top level by truncation, then validate it."""
    T = as_cmatrix(top, square=True)
    return make_local_operator(chain, [T[:d, :d] for d in chain.dims], tol)


def identity(chain: HilbertChain) -> LocalOperator:
    return LocalOperator(chain, tuple(frozen(np.eye(d, dtype=complex)) for d in chain.dims))


def _same_chain(S: LocalOperator, T: LocalOperator) -> None:
    if S.chain != T.chain:
        raise ChainMismatch(f"chains differ: {S.chain.dims} vs {T.chain.dims}")


def compose(S: LocalOperator, T: LocalOperator) -> LocalOperator:
    _same_chain(S, T)
    return LocalOperator(S.chain, tuple(frozen(a @ b) for a, b in zip(S.blocks, T.blocks)))


def add(S: LocalOperator, T: LocalOperator) -> LocalOperator:
    _same_chain(S, T)
    return LocalOperator(S.chain, tuple(frozen(a + b) for a, b in zip(S.blocks, T.blocks)))


def scale(T: LocalOperator, c: complex) -> LocalOperator:
    return LocalOperator(T.chain, tuple(frozen(c * a) for a in T.blocks))


def adjoint(T: LocalOperator) -> LocalOperator:
    return LocalOperator(T.chain, tuple(frozen(a.conj().T.copy()) for a in T.blocks))


def seminorm(T: LocalOperator, n: int) -> float:
    """``p_n(T) = ‖T_n‖``, the largest singular value, via eigenvalues of ``T_nᴴT_n``."""
    Tn = T.level(n)
    if Tn.size == 0:
        return 0.0
    G = Tn.conj().T @ Tn
    w, _ = hermitian_eig((G + G.conj().T) / 2)
    return float(np.sqrt(max(w[-1], 0.0)))


def sot_seminorm(T: LocalOperator, u: LocalVector) -> float:
    """``q_u(T) = ‖Tu‖`` evaluated at the level of ``u``."""
    return float(np.linalg.norm(T.level(u.level) @ u.coords))


def wot_seminorm(T: LocalOperator, u: LocalVector, v: LocalVector) -> float:
    """``q_{u,v}(T) = |⟨u, Tv⟩|`` evaluated at the higher of the two levels."""
    n = max(u.level, v.level)
    return float(abs(np.vdot(u.embed(T.chain, n), T.level(n) @ v.embed(T.chain, n))))


def is_locally_bounded(chain: HilbertChain, blocks: Sequence[np.ndarray],
                       tol: Tolerances | None = None) -> bool:
    return compatibility_defect(chain, blocks)[0] <= resolve(tol).compatibility
