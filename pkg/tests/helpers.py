"""Seeded random generators shared by the property and acceptance tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from lochilbert.direct_integral import FiberFamily, build_direct_integral
from lochilbert.disintegration import make_presentation
from lochilbert.loc_hilbert import HilbertChain, LocalOperator
from lochilbert.measure_limits import (
    FiniteMeasurableSpace,
    MeasurableChain,
    MeasureChain,
    locally_standard_space,
)


def random_partition(rng: np.random.Generator, pts: list[str]) -> list[list[str]]:
    labels = rng.integers(0, max(1, len(pts)), size=len(pts))
    blocks: dict[int, list[str]] = {}
    for p, k in zip(pts, labels):
        blocks.setdefault(int(k), []).append(p)
    return list(blocks.values())


def random_measurable_chain(rng: np.random.Generator, max_points: int = 10,
                            max_levels: int = 4) -> MeasurableChain:
    """A valid chain: each point enters at some level, blocks never straddle levels."""
    L = int(rng.integers(1, max_levels + 1))
    npts = int(rng.integers(1, max_points + 1))
    pts = [f"x{i}" for i in range(npts)]
    first = sorted(int(v) for v in rng.integers(1, L + 1, size=npts))
    first[0] = 1
    groups = [[p for p, f in zip(pts, first) if f == n] for n in range(1, L + 1)]
    parts = [random_partition(rng, g) if g else [] for g in groups]
    levels = []
    for n in range(1, L + 1):
        points = [p for g in groups[:n] for p in g]
        blocks = [b for part in parts[:n] for b in part]
        levels.append(FiniteMeasurableSpace(points, blocks))
    return MeasurableChain(levels)


def random_weights(rng: np.random.Generator, chain: MeasurableChain,
                   allow_zero: bool = False) -> dict[str, Fraction]:
    lo = 0 if allow_zero else 1
    return {p: Fraction(int(rng.integers(lo, 7)), int(rng.integers(1, 5))) for p in chain.points}


def random_fibers(rng: np.random.Generator, max_atoms: int = 4, max_dim: int = 3,
                  max_levels: int = 3, discrete: bool = True,
                  counting: bool = True) -> FiberFamily:
    L = int(rng.integers(1, max_levels + 1))
    npts = int(rng.integers(1, max_atoms + 1))
    pts = [f"p{i}" for i in range(npts)]
    first = sorted(int(v) for v in rng.integers(1, L + 1, size=npts))
    first[0] = 1
    levels = []
    for n in range(1, L + 1):
        points = [p for p, f in zip(pts, first) if f <= n]
        if discrete:
            levels.append(FiniteMeasurableSpace.discrete(points))
        else:
            # coarse σ-algebra: the points entering at one level form one block
            groups = [[p for p, f in zip(pts, first) if f == k] for k in range(1, n + 1)]
            levels.append(FiniteMeasurableSpace(points, [g for g in groups if g]))
    chain = MeasurableChain(levels)
    measures = (MeasureChain.counting(chain) if counting
                else MeasureChain(chain, random_weights(rng, chain)))
    dims = {}
    for p, f in zip(pts, first):
        prof, cur = [], 0
        for n in range(1, L + 1):
            if n >= f:
                cur = min(max_dim, cur + int(rng.integers(0, 3)))
            prof.append(cur if n >= f else 0)
        dims[p] = tuple(prof)
    return FiberFamily(locally_standard_space(measures), dims)


def random_space(rng: np.random.Generator, **kw):
    return build_direct_integral(random_fibers(rng, **kw))


def random_chain_dims(rng: np.random.Generator, max_dim: int, max_levels: int) -> list[int]:
    L = int(rng.integers(1, max_levels + 1))
    dims = sorted(int(v) for v in rng.integers(1, max_dim + 1, size=L))
    return dims


def random_local_blocks(rng: np.random.Generator, dims: list[int],
                        hermitian: bool = False) -> list[np.ndarray]:
    """A random projective family: block diagonal along the level increments."""
    d = dims[-1]
    top = np.zeros((d, d), dtype=complex)
    lo = 0
    for hi in dims:
        k = hi - lo
        if k:
            B = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            top[lo:hi, lo:hi] = (B + B.conj().T) / 2 if hermitian else B
        lo = hi
    return [top[:n, :n].copy() for n in dims]


def random_local_operator(rng: np.random.Generator, chain: HilbertChain) -> LocalOperator:
    return LocalOperator(chain, tuple(random_local_blocks(rng, list(chain.dims))))


def random_presentation(rng: np.random.Generator, max_dim: int = 16, max_levels: int = 3,
                        max_gens: int = 3):
    """Up to three polynomials of a Hermitian that respects the chain.

    The Hermitian has small integer eigenvalues with repeats on each level
    increment, so spectral subspaces of existing points keep growing.
    """
    dims = random_chain_dims(rng, max_dim, max_levels)
    chain = HilbertChain(dims)
    d = dims[-1]
    H = np.zeros((d, d), dtype=complex)
    lo = 0
    for hi in dims:
        k = hi - lo
        if k:
            A = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            Q, _ = np.linalg.qr(A)
            eig = rng.integers(-2, 3, size=k).astype(float)
            H[lo:hi, lo:hi] = Q @ np.diag(eig) @ Q.conj().T
        lo = hi
    H = (H + H.conj().T) / 2
    gens = []
    for _ in range(int(rng.integers(1, max_gens + 1))):
        coeffs = rng.integers(-2, 3, size=3) + 1j * rng.integers(-1, 2, size=3)
        P = coeffs[0] * np.eye(d) + coeffs[1] * H + coeffs[2] * (H @ H)
        gens.append([P[:n, :n].copy() for n in dims])
    return make_presentation(chain, gens), H


# bit-mask enumeration of subsets, for exhaustive σ-algebra checks


def masks_of(chain):
    """Bit masks for the points of the chain and for every block of every level."""
    bit = {p: 1 << i for i, p in enumerate(chain.points)}
    blocks = [[sum(bit[p] for p in b) for b in lv.blocks] for lv in chain.levels]
    return bit, blocks


def brute_force_members(chain):
    """All E ⊆ X with E ∩ X_n ∈ Σ_n for every n, by enumerating 2^|X| masks."""
    _, blocks = masks_of(chain)
    E = np.arange(1 << len(chain.points), dtype=np.int64)
    ok = np.ones(E.shape, dtype=bool)
    for level_blocks in blocks:
        for B in level_blocks:
            hit = E & B
            ok &= (hit == 0) | (hit == B)
    return E[ok]


def unions_of(atom_masks):
    out = {0}
    for a in atom_masks:
        out |= {m | a for m in out}
    return out


def points_of(chain, mask):
    return [p for i, p in enumerate(chain.points) if mask >> i & 1]
