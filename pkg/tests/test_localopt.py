import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minent.coupling import (
    Coupling,
    find_order_preserving_equivalent,
    independent,
    is_upper_triangular,
    joint_entropy,
    order_preserving_coupling,
)
from minent.instances import random_coupling, random_instance, random_two_point, random_vertex
from minent.localopt import (
    PreconditionError,
    TwoByTwo,
    clear_line,
    descend,
    lemma1_transform,
    lemma2_transform,
    min_entropy_2x2,
    scaling_identity_check,
    submatrix_update,
    unnormalized_entropy,
)

from oracles import entropy_bits


def test_unnormalized_entropy_examples():
    assert unnormalized_entropy([[1.0]]) == 0.0
    A = 2 * np.eye(2) / 2
    assert unnormalized_entropy(A) == pytest.approx(0.0, abs=1e-15)
    P = np.eye(2) / 2
    assert unnormalized_entropy(2 * P) == pytest.approx(2 * unnormalized_entropy(P) + 2 * 1.0)
    assert scaling_identity_check(2 * P)
    with pytest.raises(ValueError):
        unnormalized_entropy([[-1.0, 2.0]])


def test_scaling_identity_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 6))
        A = rng.exponential(size=(n, n)) * rng.uniform(0.01, 50)
        A[rng.random((n, n)) < 0.2] = 0.0
        if A.sum() == 0:
            A[0, 0] = 1.0
        assert scaling_identity_check(A, 2)
        assert scaling_identity_check(A, "e")


def H2(A):
    return entropy_bits(np.asarray(A))


@pytest.mark.parametrize(
    "A, b, expected",
    [([[0.4, 0.1], [0.2, 0.3]], 0.1, [[0.5, 0.0], [0.1, 0.4]]),
     ([[0.5, 0.0], [0.2, 0.3]], 0.0, [[0.5, 0.0], [0.2, 0.3]]),
     ([[0.3, 0.2], [0.2, 0.3]], 0.2, [[0.5, 0.0], [0.0, 0.5]])],
)
def test_lemma1_examples(A, b, expected):
    new, shift = lemma1_transform(A)
    assert shift == pytest.approx(b)
    assert new.as_array() == pytest.approx(np.array(expected), abs=1e-15)
    if b > 0:
        assert H2(new.as_array()) < H2(A)
    else:
        assert H2(new.as_array()) == pytest.approx(H2(A))


def test_lemma1_entropy_values():
    new, _ = lemma1_transform([[0.4, 0.1], [0.2, 0.3]])
    assert H2([[0.4, 0.1], [0.2, 0.3]]) == pytest.approx(1.8464, abs=1e-4)
    assert H2(new.as_array()) == pytest.approx(1.3610, abs=1e-4)


def test_lemma1_precondition():
    with pytest.raises(PreconditionError):
        lemma1_transform([[0.1, 0.4], [0.3, 0.2]])


@pytest.mark.parametrize(
    "A, b, expected, H_after",
    [([[0.45, 0.30], [0.15, 0.10]], 0.15, [[0.60, 0.15], [0.0, 0.25]], 1.3527241956246545),
     ([[0.5, 0.0], [0.0, 0.5]], 0.0, [[0.5, 0.0], [0.0, 0.5]], 1.0),
     ([[0.25, 0.25], [0.25, 0.25]], 0.25, [[0.5, 0.0], [0.0, 0.5]], 1.0)],
)
def test_lemma2_examples(A, b, expected, H_after):
    new, shift = lemma2_transform(A)
    assert shift == pytest.approx(b)
    assert new.as_array() == pytest.approx(np.array(expected), abs=1e-15)
    assert H2(new.as_array()) == pytest.approx(H_after, abs=1e-12)
    assert H2(new.as_array()) <= H2(A) + 1e-15


def test_lemma2_precondition():
    with pytest.raises(PreconditionError):
        lemma2_transform([[0.1, 0.1], [0.4, 0.4]])


@given(st.floats(0.5, 1.0), st.floats(0.5, 1.0), st.floats(0, 1))
def test_lemma2_reaches_segment_minimum(a, b, t):
    p, q = max(a, b), min(a, b)
    # the 2x2 couplings form the segment x in [0, 1 - p] for the (2,1) cell
    x = t * (1 - p)
    A = [[q - x, p - q + x], [x, 1 - p - x]]
    new, _ = lemma2_transform(A)
    grid = np.linspace(0, 1 - p, 201)
    best = min(H2([[q - s, p - q + s], [s, 1 - p - s]]) for s in grid)
    assert H2(new.as_array()) <= best + 1e-12
    assert new.as_array() == pytest.approx(np.array([[q, p - q], [0, 1 - p]]), abs=1e-12)


def test_submatrix_update_examples(rng):
    P = independent((0.75, 0.25), (0.6, 0.4))
    out = submatrix_update(P, 0, 1, 0, 1, "lemma2")
    assert out.matrix == pytest.approx(np.array([[0.6, 0.15], [0, 0.25]]), abs=1e-15)
    D = Coupling([[0.5, 0], [0.2, 0.3]])
    assert np.array_equal(submatrix_update(D, 0, 1, 0, 1).matrix, D.matrix)
    for _ in range(50):
        C = random_coupling(*random_instance(3, rng), rng)
        M = C.matrix
        blk = M[np.ix_((0, 2), (0, 1))]
        if max(blk[0, 0], blk[1, 1]) < max(blk[0, 1], blk[1, 0]):
            with pytest.raises(PreconditionError):
                submatrix_update(C, 0, 2, 0, 1)
            continue
        out = submatrix_update(C, 0, 2, 0, 1)
        assert np.allclose(out.row_marginal, C.row_marginal, atol=1e-12)
        assert np.allclose(out.col_marginal, C.col_marginal, atol=1e-12)
        assert joint_entropy(out) <= joint_entropy(C) + 1e-12
        mask = np.ones((3, 3), bool)
        mask[np.ix_((0, 2), (0, 1))] = False
        assert np.array_equal(out.matrix[mask], M[mask])
    with pytest.raises(ValueError):
        submatrix_update(P, 1, 1, 0, 1)


def test_min_entropy_2x2_examples():
    P, H = min_entropy_2x2(0.75, 0.6)
    assert P.matrix == pytest.approx(np.array([[0.6, 0.15], [0, 0.25]]))
    assert H == pytest.approx(1.3527241956246545, abs=1e-12)
    P, H = min_entropy_2x2(0.5, 0.5)
    assert P.matrix == pytest.approx(np.eye(2) / 2) and H == pytest.approx(1.0)
    P, H = min_entropy_2x2(1.0, 0.7)
    assert P.matrix == pytest.approx(np.array([[0.7, 0.3], [0, 0]]))
    assert H == pytest.approx(0.8812908992306927, abs=1e-12)
    with pytest.raises(ValueError):
        min_entropy_2x2(0.6, 0.7)


def test_min_entropy_2x2_closed_form_matches_joint_entropy(rng):
    for _ in range(200):
        p, q = random_two_point(rng)
        P, H = min_entropy_2x2(p, q)
        assert float(H) == pytest.approx(float(joint_entropy(P)), abs=1e-12)


def test_clear_line_examples():
    A = Coupling([[0.6, 0.1, 0.1], [0.0, 0.2, 0.0], [0.0, 0.0, 0.0]])
    out, steps = clear_line(A)
    assert not steps and np.array_equal(out.matrix, A.matrix)

    A = Coupling([[0.4, 0.1, 0.1], [0.1, 0.2, 0.0], [0.05, 0.0, 0.05]])
    out, steps = clear_line(A)
    assert out.matrix[:, 0] == pytest.approx([0.55, 0, 0], abs=1e-15)
    assert np.allclose(out.row_marginal, A.row_marginal, atol=1e-12)
    assert np.allclose(out.col_marginal, A.col_marginal, atol=1e-12)
    assert joint_entropy(out) < joint_entropy(A)
    assert len(steps) == 3 <= 2 * (3 - 1)
    expected = np.array([[0.55, 0.0, 0.05], [0.0, 0.25, 0.05], [0.0, 0.05, 0.05]])
    assert out.matrix == pytest.approx(expected, abs=1e-15)

    A = Coupling([[0.4, 0.2], [0.1, 0.3]])
    out, steps = clear_line(A)
    ref, _ = lemma1_transform(A.matrix)
    assert len(steps) == 1 and out.matrix == pytest.approx(ref.as_array())


def test_clear_line_precondition():
    with pytest.raises(PreconditionError):
        clear_line(Coupling([[0.1, 0.1], [0.4, 0.4]]))
    with pytest.raises(PreconditionError):
        clear_line(Coupling([[0.3, 0.0], [0.3, 0.4]]), "bottom_right")


def _random_cornered(rng, n, corner):
    while True:
        C = random_coupling(*random_instance(n, rng), rng, k=4)
        M = C.matrix
        r, c = divmod(int(np.argmax(M)), n)
        h = 0 if corner == "top_left" else n - 1
        M = M.copy()
        M[[h, r]] = M[[r, h]]
        M[:, [h, c]] = M[:, [c, h]]
        rs, cs = M[h].sum(), M[:, h].sum()
        if (corner == "top_left" and rs >= cs) or (corner == "bottom_right" and rs <= cs):
            return Coupling(M)


@pytest.mark.parametrize("corner", ["top_left", "bottom_right"])
def test_clear_line_properties(rng, corner):
    for _ in range(200):
        n = int(rng.integers(2, 8))
        A = _random_cornered(rng, n, corner)
        out, steps = clear_line(A, corner)
        M = out.matrix
        h = 0 if corner == "top_left" else n - 1
        line = np.delete(M[:, 0] if corner == "top_left" else M[-1], h)
        assert np.all(line <= 1e-12)
        if corner == "top_left":
            assert M[0, 0] == pytest.approx(A.matrix[:, 0].sum(), abs=1e-12)
        else:
            assert M[-1, -1] == pytest.approx(A.matrix[-1].sum(), abs=1e-12)
        assert np.allclose(out.row_marginal, A.row_marginal, atol=1e-12)
        assert np.allclose(out.col_marginal, A.col_marginal, atol=1e-12)
        assert len(steps) <= 2 * (n - 1)
        unchanged = abs(float(joint_entropy(out)) - float(joint_entropy(A))) < 1e-13
        assert unchanged == (abs(M[h, h] - A.matrix[h, h]) < 1e-12)


def test_descend_examples():
    P = independent((0.5, 0.5), (0.5, 0.5))
    final, trace = descend(P)
    assert final.matrix == pytest.approx(np.eye(2) / 2)
    assert trace.lemma_steps == 1
    assert trace.entropies[0] == pytest.approx(2.0) and trace.entropies[-1] == pytest.approx(1.0)

    op = order_preserving_coupling((0.5, 0.3, 0.2), (0.4, 0.35, 0.25))
    final, _ = descend(op)
    assert joint_entropy(final) <= joint_entropy(op) + 1e-12
    assert find_order_preserving_equivalent(final) is not None


def _check_trace(P, final, trace):
    n = P.n
    assert np.array_equal(trace.replay(), final.matrix)
    back = trace.final_in_original_labels()
    assert np.allclose(back.row_marginal, P.row_marginal, atol=1e-12)
    assert np.allclose(back.col_marginal, P.col_marginal, atol=1e-12)
    for s in trace.steps:
        assert s.entropy_after <= s.entropy_before + 1e-12
        assert s.shifted_mass >= 0
        if s.kind == "line_clear_substep" and s.shifted_mass > 1e-9:
            assert s.entropy_after < s.entropy_before - 1e-13
    for a, b in zip(trace.steps, trace.steps[1:]):
        assert b.entropy_before == a.entropy_after
    assert trace.lemma_steps <= n * (n - 1)
    assert len(trace.steps) - trace.lemma_steps <= 2 * (n - 1)
    assert is_upper_triangular(final)


def test_descend_random_4x4():
    rng = np.random.default_rng(4)
    p, q = random_instance(4, rng)
    P = random_coupling(p, q, rng)
    final, trace = descend(P)
    _check_trace(P, final, trace)
    assert joint_entropy(final) <= joint_entropy(P)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.booleans())
def test_descend_properties(n, seed, vertex):
    rng = np.random.default_rng(seed)
    p, q = random_instance(n, rng, sort=bool(seed % 2))
    P = random_vertex(p, q, rng) if vertex else random_coupling(p, q, rng)
    final, trace = descend(P)
    _check_trace(P, final, trace)
    if find_order_preserving_equivalent(P) is None:
        assert float(joint_entropy(final)) < float(joint_entropy(P)) - 1e-13


def test_descend_n2_reaches_closed_form(rng):
    for _ in range(200):
        p, q = random_two_point(rng)
        _, H = min_entropy_2x2(p, q)
        final, _ = descend(independent((p, 1 - p), (q, 1 - q)))
        assert float(joint_entropy(final)) == pytest.approx(float(H), abs=1e-10)
        x = rng.uniform(0, 1 - p)
        P = Coupling([[q - x, p - q + x], [x, 1 - p - x]])
        final, _ = descend(P)
        assert float(joint_entropy(final)) >= float(H) - 1e-12


def test_trace_serialises():
    final, trace = descend(independent((0.5, 0.5), (0.5, 0.5)))
    d = trace.to_dict()
    assert d["steps"][0]["kind"] == "line_clear_substep"
    assert d["steps"][0]["b"] == pytest.approx(0.25)
    assert TwoByTwo(1, 2, 3, 4).as_array().tolist() == [[1, 2], [3, 4]]
