import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_chain_dims, random_local_blocks
from lochilbert.errors import ChainMismatch, NotLocallyBounded
from lochilbert.loc_hilbert import (
    HilbertChain,
    adjoint,
    compatibility_defect,
    from_top,
    identity,
    inner,
    is_locally_bounded,
    local_vector,
    make_local_operator,
    seminorm,
    sot_seminorm,
    wot_seminorm,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def diagonal_chain_operator(N):
    """Levels C^1 ⊆ … ⊆ C^N with T e_k = k e_k."""
    chain = HilbertChain(range(1, N + 1))
    return chain, make_local_operator(chain, [np.diag(np.arange(1, n + 1)) for n in chain.dims])


# ---------------------------------------------------------------- chains


def test_chain_rejects_decreasing_dims():
    with pytest.raises(ValueError):
        HilbertChain([2, 1])
    with pytest.raises(ValueError):
        HilbertChain([])


def test_projections_compose_to_the_smaller_level():
    chain = HilbertChain([1, 3, 4])
    for m in range(1, 4):
        for n in range(1, 4):
            assert np.array_equal(chain.projection(n) @ chain.projection(m),
                                  chain.projection(min(m, n)))


def test_inclusions_are_isometric():
    chain = HilbertChain([1, 3, 4])
    J = chain.inclusion(3, 2)
    assert np.allclose(J.conj().T @ J, np.eye(3))
    with pytest.raises(ValueError):
        chain.inclusion(1, 2)


# ---------------------------------------------------------------- operators


def test_identity_blocks_are_valid():
    chain = HilbertChain([1, 2, 2])
    T = make_local_operator(chain, [np.eye(d) for d in chain.dims])
    assert all(np.array_equal(b, np.eye(b.shape[0])) for b in T.blocks)


def test_diagonal_chain_operator_is_valid():
    _, T = diagonal_chain_operator(6)
    assert np.array_equal(T.top, np.diag(np.arange(1, 7)))


def test_non_invariant_complement_is_rejected():
    chain = HilbertChain([1, 2])
    with pytest.raises(NotLocallyBounded) as info:
        make_local_operator(chain, [np.array([[1]]), np.array([[1, 1], [0, 2]])])
    w = info.value.witness
    assert (w["m"], w["n"], w["kind"], w["entry"]) == (1, 2, "upper", [0, 1])


def test_restriction_mismatch_is_rejected():
    chain = HilbertChain([1, 2])
    with pytest.raises(NotLocallyBounded) as info:
        make_local_operator(chain, [np.array([[1]]), np.diag([3, 2])])
    assert info.value.witness["kind"] == "restriction"


def test_wrong_block_shape_is_rejected():
    with pytest.raises(ValueError):
        make_local_operator(HilbertChain([1, 2]), [np.eye(1), np.eye(3)])


def test_from_top_truncates():
    chain = HilbertChain([1, 3])
    T = from_top(chain, np.diag([1, 2, 3]))
    assert np.array_equal(T.level(1), [[1]])


# ---------------------------------------------------------------- seminorms


def test_seminorm_of_identity():
    chain = HilbertChain([1, 2, 4])
    assert all(seminorm(identity(chain), n) == pytest.approx(1.0) for n in (1, 2, 3))


def test_seminorm_of_diagonal_chain_operator_equals_level():
    _, T = diagonal_chain_operator(8)
    assert [round(seminorm(T, n), 12) for n in range(1, 9)] == list(range(1, 9))


def test_seminorm_nilpotent_2x2():
    # TᴴT = diag(0, 4) → largest singular value √4 = 2
    chain = HilbertChain([1, 2])
    T = make_local_operator(chain, [np.array([[0]]), np.array([[0, 0], [0, 0]])])
    assert seminorm(T, 2) == 0.0
    chain = HilbertChain([2])
    T = make_local_operator(chain, [np.array([[0, 2], [0, 0]])])
    assert seminorm(T, 1) == pytest.approx(2.0, abs=1e-12)


def test_sot_and_wot_on_identity():
    chain = HilbertChain([2, 3])
    u = local_vector(chain, 1, [3, 4j])
    I = identity(chain)
    assert sot_seminorm(I, u) == pytest.approx(5.0)
    assert wot_seminorm(I, u, u) == pytest.approx(25.0)


def test_sot_of_diagonal_chain_operator_on_e3():
    chain, T = diagonal_chain_operator(5)
    e3 = local_vector(chain, 3, [0, 0, 1])
    assert sot_seminorm(T, e3) == pytest.approx(3.0)


def test_square_of_diagonal_chain_operator_has_seminorm_n_squared():
    # (T²)_n = diag(1, 4, …, n²)
    _, T = diagonal_chain_operator(5)
    T2 = T @ T
    assert [round(seminorm(T2, n), 10) for n in range(1, 6)] == [n * n for n in range(1, 6)]


def test_composition_with_identity_and_symmetrization():
    chain, T = diagonal_chain_operator(4)
    assert all(np.array_equal(a, b) for a, b in zip((identity(chain) @ T).blocks, T.blocks))
    S = T + T.H
    assert all(np.allclose(b, b.conj().T) for b in S.H.blocks)


def test_chain_mismatch():
    _, T = diagonal_chain_operator(3)
    _, S = diagonal_chain_operator(4)
    with pytest.raises(ChainMismatch):
        T @ S


# ---------------------------------------------------------------- properties


@given(seeds)
def test_inner_product_is_level_independent(seed):
    rng = np.random.default_rng(seed)
    dims = random_chain_dims(rng, 8, 4)
    chain = HilbertChain(dims)
    m = int(rng.integers(1, chain.depth + 1))
    u = local_vector(chain, m, rng.normal(size=dims[m - 1]) + 1j * rng.normal(size=dims[m - 1]))
    v = local_vector(chain, m, rng.normal(size=dims[m - 1]) + 1j * rng.normal(size=dims[m - 1]))
    base = inner(chain, u, v)
    assert base == pytest.approx(np.vdot(u.coords, v.coords), abs=1e-12)
    for n in range(m, chain.depth + 1):
        un = local_vector(chain, n, u.embed(chain, n))
        vn = local_vector(chain, n, v.embed(chain, n))
        assert inner(chain, un, vn) == base
        assert inner(chain, un, v) == base


@given(seeds)
def test_seminorm_filtration_and_c_star_identity(seed):
    rng = np.random.default_rng(seed)
    chain = HilbertChain(random_chain_dims(rng, 8, 4))
    T = make_local_operator(chain, random_local_blocks(rng, list(chain.dims)))
    S = make_local_operator(chain, random_local_blocks(rng, list(chain.dims)))
    norms = [seminorm(T, n) for n in range(1, chain.depth + 1)]
    assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))
    for n in range(1, chain.depth + 1):
        p = seminorm(T, n)
        assert abs(seminorm(T.H @ T, n) - p * p) <= 1e-8 * (1 + p * p)
        assert abs(seminorm(T.H, n) - p) <= 1e-8 * (1 + p)
        assert seminorm(T @ S, n) <= p * seminorm(S, n) * (1 + 1e-8) + 1e-12


@given(seeds)
def test_algebraic_operations_stay_locally_bounded(seed):
    rng = np.random.default_rng(seed)
    chain = HilbertChain(random_chain_dims(rng, 8, 4))
    T = make_local_operator(chain, random_local_blocks(rng, list(chain.dims)))
    S = make_local_operator(chain, random_local_blocks(rng, list(chain.dims)))
    for R in (T @ S, T + S, T - S, adjoint(T), (2 - 1j) * T):
        assert compatibility_defect(chain, list(R.blocks))[0] <= 1e-10
        make_local_operator(chain, list(R.blocks))
        assert is_locally_bounded(chain, list(R.blocks))


@given(seeds)
def test_sot_wot_are_level_independent(seed):
    rng = np.random.default_rng(seed)
    chain = HilbertChain(random_chain_dims(rng, 6, 3))
    T = make_local_operator(chain, random_local_blocks(rng, list(chain.dims)))
    m = 1
    u = local_vector(chain, m, rng.normal(size=chain.dim(1)))
    for n in range(m, chain.depth + 1):
        un = local_vector(chain, n, u.embed(chain, n))
        assert sot_seminorm(T, un) == pytest.approx(sot_seminorm(T, u), abs=1e-12)
        assert wot_seminorm(T, un, un) == pytest.approx(wot_seminorm(T, u, u), abs=1e-12)
