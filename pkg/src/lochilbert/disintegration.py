"""From an abelian algebra on a locally Hilbert space to a direct integral.

Pipeline: :func:`build_spectrum` (joint spectrum per level, counting
measure) → :func:`build_fibers` (quotients of the sesquilinear forms
``φ_p``) → :func:`build_isometry` (the unitaries ``W_n``) →
:func:`verify_conjugation`.

Fiber construction. For a spectrum point ``p`` first appearing at level
``m_p``, ``φ_p(ξ, η) = ⟨P_L ξ, E_{L,p} P_L η⟩ / μ_L({p})`` is taken at the top
level ``L``. ``D_p`` is the quotient of ``K_L`` by the null space of ``φ_p``,
and ``H_{n,p}`` is the image of ``K_n``. Then

    W_n(h)(p) = (P_n h − P_{m_p − 1} h) + N_p .

Since ``E_{L,p}`` vanishes on ``K_{m_p−1}``, the subtracted term is null.
When no spectral subspace grows after its first level, this is the familiar
"first level" construction. The top-level form is still correct when an
existing point's eigenspace does grow later: ``W_n`` stays isometric and the
growth lands in the existing fiber.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .checks import Check, Report
from .dec_diag import (
    Diagonalizable,
    check_dec_equals_diag_commutant,
    classify,
    diagonalizable,
    fiber_view,
    from_fiber_view,
    m_diag_level,
)
from .direct_integral import DirectIntegralSpace, FiberFamily, build_direct_integral
from .errors import (
    IsometryDefect,
    NotAbelian,
    NotCommuting,
    NotNormal,
    SpectrumMismatch,
    SurjectivityDefect,
    ZeroWeightPoint,
)
from .linalg_core import (
    as_cmatrix,
    frozen,
    hermitian_eig,
    joint_eigenspaces,
    max_abs,
    orthonormalize,
    span_containment,
)
from .loc_hilbert import HilbertChain, LocalOperator, make_local_operator
from .measure_limits import (
    FiniteMeasurableSpace,
    LocallyStandardMeasureSpace,
    MeasurableChain,
    MeasureChain,
    locally_standard_space,
)
from .tolerances import Tolerances, resolve


# --------------------------------------------------------------------------
# presentations


@dataclass(frozen=True)
class AbelianPresentation:
    """Commuting normal local operators generating an abelian algebra."""

    chain: HilbertChain
    generators: tuple[LocalOperator, ...]

    def level_generators(self, n: int) -> list[np.ndarray]:
        return [G.level(n) for G in self.generators]


def make_presentation(chain: HilbertChain, generators: Sequence, tol: Tolerances | None = None
                      ) -> AbelianPresentation:
    """Validate generators (local operators or lists of level blocks)."""
    t = resolve(tol)
    if not generators:
        raise ValueError("a presentation needs at least one generator")
    gens = []
    for G in generators:
        if isinstance(G, LocalOperator):
            if G.chain != chain:
                raise ValueError("generator chain differs from the presentation chain")
            gens.append(G)
        else:
            gens.append(make_local_operator(chain, list(G), t))
    pres = AbelianPresentation(chain, tuple(gens))
    _check_abelian(pres, t)
    return pres


def _check_abelian(pres: AbelianPresentation, t: Tolerances) -> None:
    G = pres.level_generators(pres.chain.depth)
    for i, A in enumerate(G):
        defect = max_abs(A @ A.conj().T - A.conj().T @ A)
        if defect > t.normal * (1.0 + max_abs(A) ** 2):
            raise NotAbelian(f"generator {i} is not normal", witness={"generator": i, "defect": defect})
    for i in range(len(G)):
        for j in range(i + 1, len(G)):
            defect = max_abs(G[i] @ G[j] - G[j] @ G[i])
            if defect > t.commuting * (1.0 + max_abs(G[i]) * max_abs(G[j])):
                raise NotAbelian(f"generators {i} and {j} do not commute",
                                 witness={"pair": [i, j], "defect": defect})


# --------------------------------------------------------------------------
# spectrum


def _fmt(x: float) -> str:
    s = f"{round(x, 7) + 0.0:.7f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def point_name(label: Sequence[complex]) -> str:
    """Canonical name of a joint-eigenvalue label, e.g. ``"1"`` or ``"2,0.5-1i"``."""
    parts = []
    for z in label:
        im = round(z.imag, 7) + 0.0
        if im == 0:
            parts.append(_fmt(z.real))
        else:
            parts.append(f"{_fmt(z.real)}{'+' if im > 0 else '-'}{_fmt(abs(im))}i")
    return ",".join(parts)


@dataclass(frozen=True)
class LevelSpectrum:
    level: int
    dim: int
    points: tuple[str, ...]
    bases: Mapping[str, np.ndarray]

    def projection(self, p: str) -> np.ndarray:
        Q = self.bases.get(p)
        if Q is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return Q @ Q.conj().T


@dataclass(frozen=True)
class SpectrumModel:
    chain: HilbertChain
    levels: tuple[LevelSpectrum, ...]
    points: tuple[str, ...]
    labels: Mapping[str, tuple[complex, ...]]
    restriction_residual: float

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> LevelSpectrum:
        return self.levels[n - 1]

    def first_level(self, p: str) -> int:
        return next(lv.level for lv in self.levels if p in lv.bases)

    def projection(self, n: int, p: str) -> np.ndarray:
        return self.level(n).projection(p)

    def weight(self, n: int, p: str) -> Fraction:
        """Counting measure on ``X_n``."""
        return Fraction(1) if p in self.level(n).bases else Fraction(0)

    def gamma_hat(self, n: int, f: Mapping[str, complex]) -> np.ndarray:
        """``Γ̂_n(f) = Σ_{p ∈ X_n} f(p) E_{n,p}``."""
        lv = self.level(n)
        out = np.zeros((lv.dim, lv.dim), dtype=complex)
        for p in lv.points:
            out += complex(f[p]) * lv.projection(p)
        return out

    def measure_space(self) -> LocallyStandardMeasureSpace:
        levels = [FiniteMeasurableSpace.discrete([p for p in self.points if p in lv.bases])
                  for lv in self.levels]
        return locally_standard_space(MeasureChain.counting(MeasurableChain(levels)))


def build_spectrum(pres: AbelianPresentation, tol: Tolerances | None = None) -> SpectrumModel:
    """Joint spectra ``X_n`` and spectral projections ``E_{n,p}`` for every level.

    Points are matched across levels by label (within ``tol.label``). Fails
    with :class:`SpectrumMismatch` when a level-``m`` point has no level-``n``
    counterpart, or when ``E_{n,p}`` does not restrict to ``E_{m,p}`` on ``K_m``.
    """
    t = resolve(tol)
    chain = pres.chain
    points: list[str] = []
    labels: dict[str, tuple[complex, ...]] = {}
    levels: list[LevelSpectrum] = []
    for n in range(1, chain.depth + 1):
        d = chain.dim(n)
        try:
            spaces = joint_eigenspaces(pres.level_generators(n), t) if d else []
        except (NotCommuting, NotNormal) as exc:
            raise NotAbelian(f"level {n}: {exc}", witness=exc.witness) from exc
        bases: dict[str, np.ndarray] = {}
        for Q, lab in spaces:
            name = next((p for p in points
                         if all(abs(a - b) <= t.label * max(1.0, abs(a))
                                for a, b in zip(labels[p], lab))), None)
            if name is None:
                name = point_name(lab)
                if name in labels:
                    raise SpectrumMismatch(f"labels collide at {name!r}", witness={"level": n})
                points.append(name)
                labels[name] = lab
            bases[name] = frozen(Q)
        if levels:
            lost = [p for p in levels[-1].points if p not in bases]
            if lost:
                raise SpectrumMismatch(f"point {lost[0]!r} of level {n - 1} is missing at level {n}",
                                       witness={"m": n - 1, "n": n, "point": lost[0]})
        ordered = tuple(p for p in points if p in bases)
        levels.append(LevelSpectrum(n, d, ordered, bases))

    # restriction compatibility of the spectral projections
    worst, where = 0.0, None
    for n in range(2, chain.depth + 1):
        for m in range(1, n):
            dm = chain.dim(m)
            for p in levels[n - 1].points:
                E = levels[n - 1].projection(p)
                r = max(max_abs(E[:dm, :dm] - levels[m - 1].projection(p)),
                        max_abs(E[:dm, dm:]))
                if r > worst:
                    worst, where = r, {"m": m, "n": n, "point": p}
    if worst > t.restriction:
        raise SpectrumMismatch("spectral projections do not restrict across levels",
                               witness={**where, "residual": worst})
    return SpectrumModel(chain, tuple(levels), tuple(points), labels, worst)


def _level_vectors(spectrum: SpectrumModel, m: int, *vs) -> list[np.ndarray]:
    d = spectrum.chain.dim(m)
    out = []
    for v in vs:
        v = np.asarray(v, dtype=complex)
        if v.shape[0] < d:
            raise ValueError(f"vector of length {v.shape[0]} is shorter than d_{m} = {d}")
        out.append(v[:d])
    return out


def rn_density(spectrum: SpectrumModel, m: int, xi, eta, p: str) -> complex:
    """``⟨P_m ξ, E_{m,p} P_m η⟩ / μ_m({p})``: density of ``μ_m^{ξ,η}`` against ``μ_m``."""
    w = spectrum.weight(m, p)
    if w == 0:
        raise ZeroWeightPoint(f"point {p!r} has no mass at level {m}", witness={"m": m, "point": p})
    x, y = _level_vectors(spectrum, m, xi, eta)
    return complex(np.vdot(x, spectrum.projection(m, p) @ y) / float(w))


def phi_gram(spectrum: SpectrumModel, p: str, Z: np.ndarray) -> np.ndarray:
    """Gram matrix ``[φ_p(z_j, z_k)]`` over the columns of ``Z`` (top-level form)."""
    L = spectrum.depth
    w = spectrum.weight(L, p)
    if w == 0:
        raise ZeroWeightPoint(f"point {p!r} has no mass", witness={"point": p})
    Zl = np.asarray(Z, dtype=complex)[: spectrum.chain.dim(L)]
    return Zl.conj().T @ spectrum.projection(L, p) @ Zl / float(w)


# --------------------------------------------------------------------------
# fibers


@dataclass(frozen=True)
class FiberData:
    point: str
    first_level: int
    dims: tuple[int, ...]
    # maps ξ ∈ K_L to the canonical coordinates of ξ + N_p in D_p
    class_map: np.ndarray
    null_dim: int


@dataclass(frozen=True)
class FiberConstruction:
    spectrum: SpectrumModel
    fibers: FiberFamily
    data: Mapping[str, FiberData]


def generating_set(chain: HilbertChain) -> np.ndarray:
    """Columns ``e_j`` of ``K_L`` together with every ``P_n e_j`` (duplicates removed)."""
    d = chain.ambient_dim
    cols = [np.eye(d, dtype=complex)[:, j] for j in range(d)]
    for n in range(1, chain.depth + 1):
        P = chain.projection(n)
        cols += [P[:, j] for j in range(d)]
    uniq: list[np.ndarray] = []
    for c in cols:
        if not any(np.array_equal(c, u) for u in uniq):
            uniq.append(c)
    return np.column_stack(uniq) if uniq else np.zeros((d, 0), dtype=complex)


def build_fibers(spectrum: SpectrumModel, pres: AbelianPresentation | None = None,
                 tol: Tolerances | None = None) -> FiberConstruction:
    """Fibers ``D_p = Z̃ / N_p`` with the level flag ``H_{n,p}`` = image of ``K_n``.

    The Gram matrix of ``φ_p`` over the generating set is factored as ``RᴴR``
    after discarding eigenvalues below ``gram_kernel · λ_max``; the columns of
    ``R`` for ``e_1, e_2, …`` (ordered by level) are then orthonormalized, so
    the fiber basis is adapted to the flag ``H_{1,p} ⊆ H_{2,p} ⊆ …``.
    """
    t = resolve(tol)
    chain = spectrum.chain
    L, dL = chain.depth, chain.ambient_dim
    Z = generating_set(chain)
    # restrict to the standard basis columns, which carry the level ordering
    basis_cols = [next(k for k in range(Z.shape[1])
                       if np.array_equal(Z[:, k], np.eye(dL)[:, j])) for j in range(dL)]
    data: dict[str, FiberData] = {}
    for p in spectrum.points:
        G = phi_gram(spectrum, p, Z)
        w, U = hermitian_eig((G + G.conj().T) / 2, t)
        lam_max = max(float(w[-1]), 0.0) if w.size else 0.0
        keep = w > t.gram_kernel * lam_max if lam_max > 0 else np.zeros(w.shape, dtype=bool)
        R = np.sqrt(w[keep])[:, None] * U[:, keep].conj().T      # r × |Z|
        Rb = R[:, basis_cols]                                    # classes of e_1..e_dL
        dims = tuple(orthonormalize(Rb[:, : chain.dim(n)], t.orthonormal).dim
                     for n in range(1, L + 1))
        Q = orthonormalize(Rb, t.orthonormal).basis              # r × r, flag-adapted
        data[p] = FiberData(p, spectrum.first_level(p), dims, frozen(Q.conj().T @ Rb),
                            int(Z.shape[1] - np.sum(keep)))
    space = spectrum.measure_space()
    fam = FiberFamily(space, {p: data[p].dims for p in spectrum.points})
    return FiberConstruction(spectrum, fam, data)


# --------------------------------------------------------------------------
# the isometries W_n


@dataclass(frozen=True)
class DisintegrationResult:
    spectrum: SpectrumModel
    construction: FiberConstruction
    space: DirectIntegralSpace
    W: tuple[np.ndarray, ...]
    residuals: Mapping[str, float]

    @property
    def measure_space(self) -> LocallyStandardMeasureSpace:
        return self.space.space

    @property
    def fibers(self) -> FiberFamily:
        return self.construction.fibers

    def tau(self, f: Mapping[str, complex]) -> LocalOperator:
        """``τ(f) = projlim Γ̂_n(f|X_n)`` on the original chain."""
        missing = [p for p in self.spectrum.points if p not in f]
        if missing:
            raise ValueError(f"function is undefined at {missing[0]!r}")
        blocks = tuple(frozen(self.spectrum.gamma_hat(n, f))
                       for n in range(1, self.spectrum.depth + 1))
        return LocalOperator(self.spectrum.chain, blocks)


def _w_matrix(spectrum: SpectrumModel, cons: FiberConstruction, space: DirectIntegralSpace,
              n: int) -> tuple[np.ndarray, float]:
    """``W_n`` in fiber coordinates, plus how far classes leak beyond ``H_{n,p}``."""
    chain = spectrum.chain
    dn = chain.dim(n)
    W = np.zeros((space.dim(n), dn), dtype=complex)
    leak = 0.0
    for p, sl in space.fiber_slices(n).items():
        fd = cons.data[p]
        lo = chain.dim(fd.first_level - 1) if fd.first_level > 1 else 0
        block = fd.class_map[:, :dn].copy()
        block[:, :lo] = 0.0                       # subtract P_{m_p - 1} h
        k = sl.stop - sl.start
        W[sl, :] = block[:k, :]
        if block.shape[0] > k:
            leak = max(leak, max_abs(block[k:, :]))
    return W, leak


def _cross_terms(spectrum: SpectrumModel, cons: FiberConstruction, n: int, H: np.ndarray
                 ) -> dict[str, float]:
    """The four terms of ``Σ_p φ_p(P_n h − P_{m_p−1} h, same)`` for each column ``h``."""
    chain = spectrum.chain
    L, dL = chain.depth, chain.ambient_dim
    out = {"I2": 0.0, "I3": 0.0, "I4": 0.0, "telescoping": 0.0}
    for col in range(H.shape[1]):
        h = np.zeros(dL, dtype=complex)
        h[: H.shape[0]] = H[:, col]
        Pn_h = h.copy()
        Pn_h[chain.dim(n):] = 0.0
        I1 = I2 = I3 = I4 = 0j
        for p in spectrum.level(n).points:
            m = cons.data[p].first_level
            Pm1_h = h.copy()
            Pm1_h[chain.dim(m - 1) if m > 1 else 0:] = 0.0
            I1 += rn_density(spectrum, L, Pn_h, Pn_h, p)
            I2 += rn_density(spectrum, L, Pn_h, Pm1_h, p)
            I3 += rn_density(spectrum, L, Pm1_h, Pn_h, p)
            I4 += rn_density(spectrum, L, Pm1_h, Pm1_h, p)
        total = I1 - I2 - I3 + I4
        out["I2"] = max(out["I2"], abs(I2))
        out["I3"] = max(out["I3"], abs(I3))
        out["I4"] = max(out["I4"], abs(I4))
        out["telescoping"] = max(out["telescoping"], float(abs(total - np.vdot(Pn_h, Pn_h))))
    return out


def _test_vectors(d: int, count: int = 3) -> np.ndarray:
    """Standard basis of ``C^d`` plus a few fixed pseudo-random vectors."""
    rng = np.random.default_rng(20240601 + d)
    extra = rng.normal(size=(d, count)) + 1j * rng.normal(size=(d, count))
    return np.hstack([np.eye(d, dtype=complex), extra])


def build_isometry(spectrum: SpectrumModel, cons: FiberConstruction,
                   pres: AbelianPresentation | None = None, tol: Tolerances | None = None
                   ) -> DisintegrationResult:
    """Materialize ``W_n : K_n → H_n`` and run the isometry checks listed in the report."""
    t = resolve(tol)
    chain = spectrum.chain
    space = build_direct_integral(cons.fibers)
    Ws, res = [], {"isometry": 0.0, "surjectivity": 0.0, "prefix": 0.0, "leak": 0.0,
                   "I2": 0.0, "I3": 0.0, "I4": 0.0, "telescoping": 0.0, "norm": 0.0}
    for n in range(1, chain.depth + 1):
        W, leak = _w_matrix(spectrum, cons, space, n)
        res["leak"] = max(res["leak"], leak)
        dn = chain.dim(n)
        iso = float(np.linalg.norm(W.conj().T @ W - np.eye(dn)))
        res["isometry"] = max(res["isometry"], iso)
        if iso > t.isometry:
            raise IsometryDefect(f"W_{n} is not isometric (residual {iso:.3e})",
                                 witness={"level": n, "residual": iso})
        if space.dim(n) != dn:
            raise SurjectivityDefect(f"dim H_{n} = {space.dim(n)} but dim K_{n} = {dn}",
                                     witness={"level": n, "dim_H": space.dim(n), "dim_K": dn})
        sur = float(np.linalg.norm(W @ W.conj().T - np.eye(space.dim(n))))
        res["surjectivity"] = max(res["surjectivity"], sur)
        if sur > t.isometry:
            raise SurjectivityDefect(f"W_{n} is not onto (residual {sur:.3e})",
                                     witness={"level": n, "residual": sur})
        H = _test_vectors(dn)
        ct = _cross_terms(spectrum, cons, n, H)
        for k, v in ct.items():
            res[k] = max(res[k], v)
        norms = np.abs(np.linalg.norm(W @ H, axis=0) - np.linalg.norm(H, axis=0)) if dn else [0.0]
        res["norm"] = max(res["norm"], float(np.max(norms)))
        Ws.append(frozen(W))
    for r in range(1, chain.depth + 1):
        for n in range(1, r):
            J = space.fiber_inclusion(r, n)
            pre = float(np.linalg.norm(Ws[r - 1][:, : chain.dim(n)] - J @ Ws[n - 1]))
            res["prefix"] = max(res["prefix"], pre)
            if pre > t.prefix:
                raise IsometryDefect(f"W_{r} does not restrict to W_{n}",
                                     witness={"r": r, "n": n, "residual": pre})
    cross = max(res["I2"], res["I3"], res["I4"])
    if cross > t.cross_term:
        raise IsometryDefect(f"cross terms do not vanish ({cross:.3e})",
                             witness={k: res[k] for k in ("I2", "I3", "I4")})
    return DisintegrationResult(spectrum, cons, space, tuple(Ws), res)


def disintegrate(pres: AbelianPresentation, tol: Tolerances | None = None) -> DisintegrationResult:
    spectrum = build_spectrum(pres, tol)
    return build_isometry(spectrum, build_fibers(spectrum, pres, tol), pres, tol)


# --------------------------------------------------------------------------
# verification


def conjugated_generator(result: DisintegrationResult, G: LocalOperator,
                         tol: Tolerances | None = None) -> LocalOperator:
    """``W G Wᴴ`` as a local operator on the direct-integral chain."""
    t = resolve(tol)
    space = result.space
    blocks = [from_fiber_view(space, W @ G.level(n) @ W.conj().T, n)
              for n, W in enumerate(result.W, start=1)]
    scale = 1.0 + max(max_abs(b) for b in G.blocks)
    return make_local_operator(space.chain, blocks,
                               t.override({"compatibility": t.prefix * scale}))


def _homomorphism_residuals(result: DisintegrationResult,
                            fs: Sequence[Mapping[str, complex]]) -> dict[str, float]:
    pts = result.spectrum.points
    one = {p: 1.0 for p in pts}
    out = {"unit": 0.0, "multiplicative": 0.0, "adjoint": 0.0, "intertwining": 0.0}
    T1 = result.tau(one)
    out["unit"] = max(max_abs(b - np.eye(b.shape[0])) for b in T1.blocks)
    space = result.space
    for f in fs:
        Tf = result.tau(f)
        Tfc = result.tau({p: np.conj(f[p]) for p in pts})
        out["adjoint"] = max(out["adjoint"], max(max_abs(a - b.conj().T)
                                                 for a, b in zip(Tfc.blocks, Tf.blocks)))
        Mf = diagonalizable(space, f).to_local_operator()
        for n, W in enumerate(result.W, start=1):
            lhs = W @ Tf.level(n) @ W.conj().T
            out["intertwining"] = max(out["intertwining"], max_abs(lhs - fiber_view(space, Mf, n)))
        for g in fs:
            Tg = result.tau(g)
            Tfg = result.tau({p: f[p] * g[p] for p in pts})
            out["multiplicative"] = max(out["multiplicative"], max(
                max_abs(c - a @ b) for a, b, c in zip(Tf.blocks, Tg.blocks, Tfg.blocks)))
    return out


def verify_conjugation(result: DisintegrationResult, pres: AbelianPresentation,
                       tol: Tolerances | None = None, check_commutant: bool = True) -> Report:
    """Certify that ``W`` carries the algebra onto the diagonalizable operators."""
    t = resolve(tol)
    spectrum, space = result.spectrum, result.space
    checks: list[Check] = []
    test_functions: list[dict[str, complex]] = []
    for i, G in enumerate(pres.generators):
        f_label = {p: spectrum.labels[p][i] for p in spectrum.points}
        test_functions.append(f_label)
        C = conjugated_generator(result, G, t)
        cls = classify(space, C, t)
        if isinstance(cls, Diagonalizable):
            err = max((abs(cls.f[p] - f_label[p]) for p in spectrum.points), default=0.0)
            checks.append(Check(f"generator{i}.diagonalizable", err <= t.label,
                                {"class": cls.tag}, err))
        else:
            checks.append(Check(f"generator{i}.diagonalizable", False,
                                {"class": cls.tag, "witness": cls.witness}, None))
        tau_err = max(max_abs(a - b) for a, b in zip(result.tau(f_label).blocks, G.blocks))
        checks.append(Check(f"generator{i}.tau_of_label", tau_err <= t.label, None, tau_err))

    # a complex-valued test function that separates the points
    test_functions.append({p: complex(k + 1, (-1) ** k * 0.5) for k, p in enumerate(spectrum.points)})
    hom = _homomorphism_residuals(result, test_functions)
    for k, v in hom.items():
        checks.append(Check(f"tau.{k}", v <= t.homomorphism, None, v))

    for n, W in enumerate(result.W, start=1):
        # every vector of H_n is a combination of T_f W_n h with indicators f and h ∈ Z_n
        vecs = []
        for p in space.active_points(n):
            D = np.zeros(space.dim(n))
            D[space.fiber_slices(n)[p]] = 1.0
            vecs.append(np.diag(D) @ W)
        rank = orthonormalize(np.hstack(vecs), t.orthonormal).dim if vecs else 0
        checks.append(Check(f"level{n}.indicator_span", rank == space.dim(n),
                            {"rank": rank, "dim_H": space.dim(n)}, float(space.dim(n) - rank)))
        # W M_n Wᴴ has the same span as the level image of M_DIAG
        conj = [W @ spectrum.projection(n, p) @ W.conj().T for p in spectrum.level(n).points]
        diag = [fiber_view_matrix(space, B, n) for B in m_diag_level(space, n).basis]
        r = max(span_containment(conj, diag), span_containment(diag, conj))
        checks.append(Check(f"level{n}.algebra_span", r <= t.span, None, r))

    if check_commutant:
        rep = check_dec_equals_diag_commutant(space, t)
        bad = rep.first_failure()
        checks.append(Check("dec_equals_diag_commutant", rep.ok, None if bad is None else bad.name,
                            max((c.residual or 0.0) for c in rep.checks)))
    for k in ("isometry", "surjectivity", "prefix", "I2", "I3", "I4", "telescoping", "norm", "leak"):
        limit = {"isometry": t.isometry, "surjectivity": t.isometry, "prefix": t.prefix,
                 "norm": t.isometry}.get(k, t.cross_term)
        checks.append(Check(f"W.{k}", result.residuals[k] <= limit, None, result.residuals[k]))
    return Report(checks)


def fiber_view_matrix(space: DirectIntegralSpace, B: np.ndarray, n: int) -> np.ndarray:
    V = space.V(n)
    return V @ B @ V.T


def algebra_span(mats: Sequence[np.ndarray], tol: float | None = None,
                 max_rounds: int = 32) -> list[np.ndarray]:
    """Orthonormal basis of the unital *-algebra generated by ``mats``.

    Grows the span by products and adjoints until it stops changing. This
    path never looks at eigenvalues, so it can serve as an independent check
    on the spectral decomposition.
    """
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].shape[0]
    gens = [as_cmatrix(M, square=True) for M in mats]
    gens = gens + [G.conj().T for G in gens]
    current = [np.eye(d, dtype=complex)] + gens

    def basis(ms: list[np.ndarray]) -> list[np.ndarray]:
        Q = orthonormalize(np.column_stack([m.ravel() for m in ms]), tol).basis
        return [Q[:, k].reshape(d, d) for k in range(Q.shape[1])]

    B = basis(current)
    for _ in range(max_rounds):
        grown = basis(B + [a @ g for a in B for g in gens])
        if len(grown) == len(B):
            return B
        B = grown
    return B


def level_algebra_span(pres: AbelianPresentation, n: int) -> list[np.ndarray]:
    return algebra_span(pres.level_generators(n))

