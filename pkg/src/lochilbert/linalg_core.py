"""Dense complex linear algebra kernels.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The eigensolver
is a cyclic complex Jacobi method written here; everything else builds on it,
except :func:`commutant_solve`, which uses LAPACK's SVD for its null spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DidNotConverge, NonHermitian, NotCommuting, NotNormal
from .tolerances import Tolerances, resolve

MAX_SWEEPS = 60
_OFF_DIAGONAL_STOP = 1e-14


def frozen(a: np.ndarray) -> np.ndarray:
    """Mark an array read-only so values handed out stay immutable."""
    a.setflags(write=False)
    return a


def as_cmatrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D complex array and reject NaN/Inf entries."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def exact_vdot(a, b) -> complex:
    """``⟨a, b⟩`` with correctly rounded sums, so zero padding never changes the value."""
    prods = np.conj(np.asarray(a, dtype=complex)) * np.asarray(b, dtype=complex)
    return complex(math.fsum(prods.real), math.fsum(prods.imag))


def op_norm(a: np.ndarray) -> float:
    """Spectral norm, via the Jacobi eigensolver on ``AᴴA``."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    g = a.conj().T @ a
    w, _ = hermitian_eig((g + g.conj().T) / 2)
    return math.sqrt(max(w[-1], 0.0))


@dataclass(frozen=True)
class Subspace:
    """Column span of an orthonormal ``basis`` inside ``C^ambient_dim``."""

    ambient_dim: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


# --------------------------------------------------------------------------
# Hermitian eigenproblem


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate the phase of a vector so its first non-negligible entry is real positive."""
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size == 0:
        return v
    z = v[idx[0]]
    return v * (abs(z) / z)


def _sort_eigenpairs(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = w.shape[0]
    v = np.column_stack([_phase_normalize(v[:, k]) for k in range(d)]) if d else v
    order = list(np.argsort(w, kind="stable"))
    # tie-break degenerate eigenvalues by the entries of the normalized vectors,
    # largest first, so that the identity yields the standard basis in order
    gap = 1e-12 * max(1.0, float(np.max(np.abs(w))) if d else 1.0)
    out: list[int] = []
    i = 0
    while i < d:
        j = i + 1
        while j < d and w[order[j]] - w[order[j - 1]] <= gap:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group.sort(key=lambda k: tuple(
                x for z in v[:, k] for x in (round(z.real, 12), round(z.imag, 12))),
                reverse=True)
        out.extend(group)
        i = j
    return w[out], v[:, out]


def hermitian_eig(a, tol: Tolerances | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each pivot ``a_pq`` is first turned real by a diagonal phase, then removed
    with a real symmetric Jacobi rotation. Returns ascending eigenvalues and a
    unitary matrix of eigenvectors (as columns).
    """
    t = resolve(tol)
    A = as_cmatrix(a, square=True)
    d = A.shape[0]
    if d == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    asym = max_abs(A - A.conj().T)
    if asym > t.hermitian:
        i, j = np.unravel_index(np.argmax(np.abs(A - A.conj().T)), A.shape)
        raise NonHermitian(f"matrix is not Hermitian (max asymmetry {asym:.3e})",
                           witness={"entry": [int(i), int(j)], "asymmetry": asym})
    A = (A + A.conj().T) / 2
    V = np.eye(d, dtype=complex)
    scale = float(np.linalg.norm(A)) or 1.0
    skip = 1e-18 * scale

    for _ in range(MAX_SWEEPS):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= _OFF_DIAGONAL_STOP * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                r = abs(apq)
                if r <= skip:
                    continue
                theta = (A[q, q].real - A[p, p].real) / (2.0 * r)
                tt = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(tt * tt + 1.0)
                s = tt * c
                ph = (apq / r).conjugate()
                U = np.array([[c, s], [-s * ph, c * ph]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ U
                A[idx, :] = U.conj().T @ A[idx, :]
                V[:, idx] = V[:, idx] @ U
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    else:
        raise DidNotConverge(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")

    return _sort_eigenpairs(np.real(np.diag(A)).copy(), V)


# --------------------------------------------------------------------------
# Joint diagonalization


def _clusters(w: np.ndarray, gap: float) -> list[list[int]]:
    """Group indices of an ascending array into runs whose consecutive gaps are ≤ ``gap``."""
    if w.size == 0:
        return []
    groups = [[0]]
    for k in range(1, w.size):
        if w[k] - w[k - 1] > gap:
            groups.append([k])
        else:
            groups[-1].append(k)
    return groups


def _check_family(As: Sequence[np.ndarray], t: Tolerances) -> None:
    for i, A in enumerate(As):
        defect = max_abs(A @ A.conj().T - A.conj().T @ A)
        if defect > t.normal * (1.0 + max_abs(A) ** 2):
            raise NotNormal(f"generator {i} is not normal (defect {defect:.3e})",
                            witness={"generator": i, "defect": defect})
    for i in range(len(As)):
        for j in range(i + 1, len(As)):
            comm = max_abs(As[i] @ As[j] - As[j] @ As[i])
            if comm > t.commuting * (1.0 + max_abs(As[i]) * max_abs(As[j])):
                raise NotCommuting(f"generators {i} and {j} do not commute (defect {comm:.3e})",
                                   witness={"pair": [i, j], "defect": comm})


def label_key(label: Iterable[complex], digits: int = 7) -> tuple[float, ...]:
    """Lexicographic (real, imaginary) sort key for a joint-eigenvalue label."""
    out: list[float] = []
    for z in label:
        out.append(round(z.real, digits) + 0.0)
        out.append(round(z.imag, digits) + 0.0)
    return tuple(out)


def joint_eigenspaces(As: Sequence, tol: Tolerances | None = None
                      ) -> list[tuple[np.ndarray, tuple[complex, ...]]]:
    """Orthonormal bases of the joint eigenspaces of commuting normal matrices.

    Returns ``(basis, label)`` pairs ordered by label. Each normal matrix is
    split through its two Hermitian parts, refining the current list of
    eigenspaces one Hermitian matrix at a time.
    """
    t = resolve(tol)
    mats = [as_cmatrix(A, square=True, name=f"generator {i}") for i, A in enumerate(As)]
    if not mats:
        raise ValueError("joint diagonalization needs at least one matrix")
    d = mats[0].shape[0]
    if any(A.shape != (d, d) for A in mats):
        raise ValueError("all matrices must have the same size")
    _check_family(mats, t)
    if d == 0:
        return []

    blocks = [np.eye(d, dtype=complex)]
    for A in mats:
        for H in ((A + A.conj().T) / 2, (A - A.conj().T) / 2j):
            if max_abs(H) == 0.0:
                continue
            refined = []
            for Q in blocks:
                S = Q.conj().T @ H @ Q
                w, U = hermitian_eig((S + S.conj().T) / 2, t)
                gap = t.cluster * max(1.0, float(np.max(np.abs(w))))
                for group in _clusters(w, gap):
                    refined.append(Q @ U[:, group])
            blocks = refined

    labelled = []
    for Q in blocks:
        r = Q.shape[1]
        labelled.append((Q, tuple(complex(np.trace(Q.conj().T @ A @ Q) / r) for A in mats)))

    # merge blocks whose labels agree to the clustering tolerance
    merged: list[tuple[np.ndarray, tuple[complex, ...]]] = []
    for Q, lab in sorted(labelled, key=lambda x: label_key(x[1])):
        for k, (Q0, lab0) in enumerate(merged):
            if all(abs(a - b) <= t.cluster * max(1.0, abs(a)) for a, b in zip(lab, lab0)):
                r0, r1 = Q0.shape[1], Q.shape[1]
                lab_m = tuple((a * r0 + b * r1) / (r0 + r1) for a, b in zip(lab0, lab))
                merged[k] = (np.hstack([Q0, Q]), lab_m)
                break
        else:
            merged.append((Q, lab))
    merged.sort(key=lambda x: label_key(x[1]))
    return merged


def joint_diagonalize(As: Sequence, tol: Tolerances | None = None
                      ) -> tuple[list[np.ndarray], list[tuple[complex, ...]]]:
    """Spectral projections and joint-eigenvalue labels of commuting normal matrices."""
    spaces = joint_eigenspaces(As, tol)
    projections = [Q @ Q.conj().T for Q, _ in spaces]
    return projections, [lab for _, lab in spaces]


# --------------------------------------------------------------------------
# Subspaces and commutants


def orthonormalize(vectors, tol: float | None = None) -> Subspace:
    """Rank-revealing Gram–Schmidt (two passes) over the columns of ``vectors``.

    A column is dropped when its residual after projecting out the earlier
    accepted columns has norm at most ``tol``.
    """
    tol = resolve(None).orthonormal if tol is None else tol
    V = np.array(vectors, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    n = V.shape[0]
    accepted: list[np.ndarray] = []
    for j in range(V.shape[1]):
        v = V[:, j].copy()
        if accepted:
            Q = np.column_stack(accepted)
            for _ in range(2):
                v -= Q @ (Q.conj().T @ v)
        nrm = float(np.linalg.norm(v))
        if nrm > tol:
            accepted.append(v / nrm)
    basis = np.column_stack(accepted) if accepted else np.zeros((n, 0), dtype=complex)
    return Subspace(n, frozen(basis))


def commutant_solve(generators: Sequence, tol: Tolerances | None = None,
                    dim: int | None = None) -> list[np.ndarray]:
    """Basis of ``{T : T G = G T for every generator G}``.

    The constraint ``(G⊗I − I⊗Gᵀ) vec(T) = 0`` (row-major ``vec``) is imposed
    a few generators at a time, shrinking an orthonormal basis of the current
    solution space with an SVD null-space step. The returned matrices are
    orthonormal for the trace inner product ``⟨S, T⟩ = tr(SᴴT)``.
    Singular values at most ``commutant_rank · d · max(1, σ_max)`` count as zero.
    ``dim`` is only needed when ``generators`` is empty.
    """
    t = resolve(tol)
    gens = [as_cmatrix(G, square=True) for G in generators]
    if gens:
        d = gens[0].shape[0]
        if any(G.shape != (d, d) for G in gens):
            raise ValueError("generators must share one size")
    elif dim is None:
        raise ValueError("dim is required when there are no generators")
    else:
        d = dim
    N = np.eye(d * d, dtype=complex)
    batch = 8
    for start in range(0, len(gens), batch):
        if N.shape[1] == 0:
            break
        r = N.shape[1]
        Ts = N.T.reshape(r, d, d)
        rows = []
        for G in gens[start:start + batch]:
            C = G @ Ts - Ts @ G
            rows.append(C.reshape(r, d * d).T)
        M = np.vstack(rows)
        _, s, vh = np.linalg.svd(M, full_matrices=False)
        thresh = t.commutant_rank * d * max(1.0, float(s[0]) if s.size else 0.0)
        rank = int(np.sum(s > thresh))
        N = N @ vh[rank:].conj().T
    return [frozen(N[:, k].reshape(d, d).copy()) for k in range(N.shape[1])]


def span_dim(mats: Sequence[np.ndarray], tol: float | None = None) -> int:
    """Dimension of the linear span of a list of equal-size matrices."""
    if not mats:
        return 0
    return orthonormalize(np.column_stack([np.ravel(m) for m in mats]), tol).dim


def span_containment(A: Sequence[np.ndarray], B: Sequence[np.ndarray]) -> float:
    """Largest distance from an element of ``A`` (normalized) to ``span B``.

    Zero means ``span A ⊆ span B``.
    """
    if not A:
        return 0.0
    cols = np.column_stack([np.ravel(a) / (np.linalg.norm(a) or 1.0) for a in A])
    if not B:
        return float(np.max(np.linalg.norm(cols, axis=0)))
    Q = orthonormalize(np.column_stack([np.ravel(b) for b in B])).basis
    resid = cols - Q @ (Q.conj().T @ cols)
    return float(np.max(np.linalg.norm(resid, axis=0)))
