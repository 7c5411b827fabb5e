"""Tests for scalar quaternion algebra."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlstm_multimic.core.counting import CountingFloat, OperationCount, count_hamilton_operations
from qlstm_multimic.core.quaternion import (
    ONE,
    UNIT_I,
    UNIT_J,
    UNIT_K,
    ZERO,
    HamiltonMatrix,
    Quaternion,
    hamilton,
    hamilton_via_matrix,
    q_add,
    q_conj,
    q_norm,
    q_normalize,
    to_hamilton_matrix,
)
from qlstm_multimic.utils.error_handling import DomainError, ShapeError

components = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
quaternions = st.builds(Quaternion, components, components, components, components)


def assert_close(x: Quaternion, y: Quaternion, tol: float = 1e-12) -> None:
    assert np.allclose(x.as_array(), y.as_array(), rtol=0.0, atol=tol), (x, y)


class TestConstruction:
    def test_components_are_floats(self):
        q = Quaternion(1, 2, 3, 4)
        assert q.as_tuple() == (1.0, 2.0, 3.0, 4.0)
        assert all(type(v) is float for v in q.as_tuple())

    def test_imaginary_parts_default_to_zero(self):
        assert Quaternion(5).as_tuple() == (5.0, 0.0, 0.0, 0.0)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_component_rejected(self, bad):
        with pytest.raises(DomainError):
            Quaternion(0.0, bad, 0.0, 0.0)


class TestAddition:
    @pytest.mark.parametrize(
        "x, y, expected",
        [
            ((1, 2, 3, 4), (0, 0, 0, 0), (1, 2, 3, 4)),
            ((1, 2, 3, 4), (-1, -2, -3, -4), (0, 0, 0, 0)),
            ((1, 0, 1, 0), (0, 2, 0, 2), (1, 2, 1, 2)),
        ],
    )
    def test_componentwise_sum(self, x, y, expected):
        assert q_add(Quaternion(*x), Quaternion(*y)).as_tuple() == expected

    def test_operator_matches_function(self):
        x, y = Quaternion(1, 2, 3, 4), Quaternion(0.5, -1, 0, 2)
        assert x + y == q_add(x, y)


class TestConjugate:
    def test_sign_flip(self):
        assert q_conj(Quaternion(1, 2, 3, 4)).as_tuple() == (1.0, -2.0, -3.0, -4.0)

    def test_real_quaternion_is_self_conjugate(self):
        assert q_conj(Quaternion(5)) == Quaternion(5)

    def test_involution_example(self):
        q = Quaternion(0.5, -1, 2, -3)
        assert q_conj(q_conj(q)) == q

    @given(quaternions)
    def test_involution(self, q):
        assert q_conj(q_conj(q)) == q

    @given(quaternions, quaternions)
    def test_anti_homomorphism(self, x, y):
        assert_close(q_conj(hamilton(x, y)), hamilton(q_conj(y), q_conj(x)), tol=1e-12)


class TestNorm:
    @pytest.mark.parametrize(
        "q, expected",
        [((0, 3, 0, 4), 5.0), ((0, 0, 0, 0), 0.0), ((1, 1, 1, 1), 2.0)],
    )
    def test_examples(self, q, expected):
        assert q_norm(Quaternion(*q)) == expected

    @pytest.mark.parametrize(
        "q, expected",
        [
            ((0, 3, 0, 4), (0, 0.6, 0, 0.8)),
            ((2, 0, 0, 0), (1, 0, 0, 0)),
            ((1, 1, 1, 1), (0.5, 0.5, 0.5, 0.5)),
        ],
    )
    def test_normalize_examples(self, q, expected):
        assert_close(q_normalize(Quaternion(*q)), Quaternion(*expected))

    def test_normalize_zero_is_an_error(self):
        with pytest.raises(DomainError, match="cannot normalize zero quaternion"):
            q_normalize(ZERO)

    @given(quaternions)
    def test_normalized_has_unit_norm(self, q):
        if q_norm(q) > 1e-6:
            assert abs(q_norm(q_normalize(q)) - 1.0) <= 1e-12

    @given(quaternions, quaternions)
    def test_norm_is_multiplicative(self, x, y):
        expected = q_norm(x) * q_norm(y)
        assert q_norm(hamilton(x, y)) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    @given(quaternions)
    def test_norm_squared_from_product_with_conjugate(self, q):
        p = hamilton(q, q_conj(q))
        assert p.a == pytest.approx(q_norm(q) ** 2, rel=1e-9, abs=1e-12)
        assert max(abs(p.b), abs(p.c), abs(p.d)) <= 1e-12


class TestHamilton:
    def test_basis_table(self):
        minus_one = Quaternion(-1)
        assert hamilton(UNIT_I, UNIT_J) == UNIT_K
        assert hamilton(UNIT_J, UNIT_K) == UNIT_I
        assert hamilton(UNIT_K, UNIT_I) == UNIT_J
        for unit in (UNIT_I, UNIT_J, UNIT_K):
            assert hamilton(unit, unit) == minus_one
        assert hamilton(hamilton(UNIT_I, UNIT_J), UNIT_K) == minus_one

    def test_non_commutative(self):
        assert hamilton(UNIT_I, UNIT_J).as_tuple() == (0.0, 0.0, 0.0, 1.0)
        assert hamilton(UNIT_J, UNIT_I).as_tuple() == (0.0, 0.0, 0.0, -1.0)

    def test_identity(self):
        q = Quaternion(0.3, -1.5, 2.0, 7.25)
        assert hamilton(ONE, q) == q
        assert hamilton(q, ONE) == q

    def test_worked_example(self):
        x, y = Quaternion(1, 2, 3, 4), Quaternion(5, 6, 7, 8)
        assert hamilton(x, y).as_tuple() == (-60.0, 12.0, 30.0, 24.0)
        assert hamilton_via_matrix(x, y).as_tuple() == (-60.0, 12.0, 30.0, 24.0)

    def test_operator_is_hamilton(self):
        assert UNIT_I * UNIT_J == UNIT_K

    def test_matrix_form_agrees_on_random_pairs(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-10.0, 10.0, size=(10_000, 2, 4))
        worst = 0.0
        for xs, ys in samples:
            x, y = Quaternion(*xs), Quaternion(*ys)
            diff = hamilton(x, y).as_array() - hamilton_via_matrix(x, y).as_array()
            worst = max(worst, float(np.max(np.abs(diff))))
        assert worst <= 1e-12

    @given(quaternions, quaternions)
    def test_matrix_form_agrees(self, x, y):
        assert_close(hamilton(x, y), hamilton_via_matrix(x, y))


class TestHamiltonMatrix:
    def test_real_unit_is_identity(self):
        assert np.array_equal(to_hamilton_matrix(ONE).m, np.eye(4))

    def test_unit_i_layout(self):
        expected = np.array(
            [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=np.float64
        )
        assert np.array_equal(to_hamilton_matrix(UNIT_I).m, expected)

    def test_first_column_is_the_quaternion(self):
        m = to_hamilton_matrix(Quaternion(1, 2, 3, 4))
        assert m.m[:, 0].tolist() == [1.0, 2.0, 3.0, 4.0]
        assert m.quaternion == Quaternion(1, 2, 3, 4)

    def test_identity_matrix_product(self):
        assert hamilton_via_matrix(ONE, Quaternion(7, 8, 9, 10)).as_tuple() == (7.0, 8.0, 9.0, 10.0)

    def test_j_times_k(self):
        assert hamilton_via_matrix(UNIT_J, UNIT_K) == UNIT_I

    @given(quaternions)
    def test_skew_structure(self, q):
        m = to_hamilton_matrix(q).m
        assert np.all(np.diag(m) == q.a)
        assert np.array_equal(m + m.T, 2.0 * q.a * np.eye(4))

    def test_matrix_is_read_only(self):
        m = to_hamilton_matrix(Quaternion(1, 2, 3, 4))
        with pytest.raises(ValueError):
            m.m[0, 0] = 5.0

    def test_rejects_non_hamilton_layout(self):
        with pytest.raises(DomainError):
            HamiltonMatrix(np.ones((4, 4)))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ShapeError):
            HamiltonMatrix(np.eye(3))


class TestOperationCount:
    def test_scalar_product_uses_28_operations(self):
        count = count_hamilton_operations()
        assert count.mul == 16
        assert count.add == 12
        assert count.total == 28

    def test_count_does_not_depend_on_values(self):
        count = count_hamilton_operations(Quaternion(-0.5, 0, 3, 1e3), Quaternion(0, 0, 0, 0))
        assert (count.mul, count.add, count.neg, count.div) == (16, 12, 0, 0)

    def test_counting_float_tallies_expression_tree(self):
        tally = OperationCount()
        x = CountingFloat(2.0, tally)
        result = x * 3.0 + 1.0 - x
        assert result == 5.0
        assert (tally.mul, tally.add) == (1, 2)
