import mpmath
import numpy as np
import pytest

from src.bitarray import BitArray
from src.errors import InvalidArgumentError, OracleScaleExceededError
from src.geometry import lg
from src.toeplitz import (
    ToeplitzSpec,
    build_conv_F,
    check_embedding,
    conv_subarray_length,
    embed_conv_pattern,
    embedded_product,
    entropy_bounds_hold,
    entropy_from_counts,
    exact_entropy,
    output_counts,
    random_conv_matrices,
    random_toeplitz,
    sampled_entropy,
    search_rows,
    search_table,
    search_witnesses,
    toeplitz_apply,
)
from src.types import EntropyMethod, SearchStrategy


def bits(text: str) -> BitArray:
    return BitArray.from_string(text)


class TestToeplitzSpec:

    @staticmethod
    def test_from_diagonals() -> None:
        m = ToeplitzSpec.from_diagonals(2, 3, '1011')
        assert m.first_col == bits('10')
        assert m.first_row == bits('111')
        assert m.dense().tolist() == [[1, 1, 1], [0, 1, 1]]
        assert m.diagonal_string() == '1011'

    @staticmethod
    def test_corner_mismatch() -> None:
        with pytest.raises(InvalidArgumentError):
            ToeplitzSpec(2, 2, bits('10'), bits('01'))

    @staticmethod
    def test_wrong_diagonal_count() -> None:
        with pytest.raises(InvalidArgumentError):
            ToeplitzSpec.from_diagonals(2, 3, '101')

    @staticmethod
    def test_constant_diagonals() -> None:
        m = random_toeplitz(5, 7, np.random.default_rng(0))
        dense = m.dense()
        for r in range(1, 5):
            for c in range(1, 7):
                assert dense[r, c] == dense[r - 1, c - 1]

    @staticmethod
    def test_extend_width() -> None:
        m = ToeplitzSpec.identity(2).extend_width(4)
        assert m.dense().tolist() == [[1, 0, 0, 0], [0, 1, 0, 0]]
        with pytest.raises(InvalidArgumentError):
            m.extend_width(3)


class TestApply:

    @staticmethod
    def test_examples() -> None:
        m = ToeplitzSpec.from_diagonals(2, 3, '1011')
        assert list(toeplitz_apply(m, bits('101'))) == [2, 1]
        assert list(toeplitz_apply(
            ToeplitzSpec.identity(3), bits('011'))) == [0, 1, 1]

    @staticmethod
    def test_wrong_width() -> None:
        with pytest.raises(InvalidArgumentError):
            toeplitz_apply(ToeplitzSpec.identity(3), bits('01'))


class TestEntropy:

    @staticmethod
    def test_identity() -> None:
        result = exact_entropy(ToeplitzSpec.identity(4))
        assert result.entropy_bits == 4
        assert result.distinct_outputs == 16
        assert result.method == EntropyMethod.EXHAUSTIVE

    @staticmethod
    def test_zero() -> None:
        result = exact_entropy(ToeplitzSpec.zeros(3, 3))
        assert result.entropy_bits == 0
        assert result.distinct_outputs == 1

    @staticmethod
    def test_two_bits() -> None:
        m = ToeplitzSpec(2, 2, bits('10'), bits('11'))
        assert exact_entropy(m).entropy_bits == 2

    @staticmethod
    def test_non_power_of_two_counts() -> None:
        m = ToeplitzSpec(1, 2, bits('11'), bits('1'))
        assert sorted(output_counts(m).values()) == [1, 1, 2]
        assert exact_entropy(m).entropy_bits == mpmath.mpf(1.5)
        with mpmath.workdps(30):
            value = entropy_from_counts([1, 1, 1, 5], 3)
            assert abs(value - (3 - 5 * mpmath.log(5, 2) / 8)) < \
                mpmath.mpf(10)**-25

    @staticmethod
    def test_bounds() -> None:
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert entropy_bounds_hold(exact_entropy(
                random_toeplitz(3, 6, rng)))

    @staticmethod
    def test_enumeration_cap() -> None:
        with pytest.raises(OracleScaleExceededError):
            output_counts(ToeplitzSpec.zeros(2, 25))

    @staticmethod
    def test_sampled() -> None:
        result = sampled_entropy(
            ToeplitzSpec.identity(4), 2**20, np.random.default_rng(2))
        assert 3.99 < float(result.entropy_bits) <= 4
        assert result.method == EntropyMethod.SAMPLED
        assert result.sample_size == 2**20

    @staticmethod
    def test_sample_floor() -> None:
        with pytest.raises(InvalidArgumentError):
            sampled_entropy(
                ToeplitzSpec.identity(4), 2**14, np.random.default_rng(2))


class TestSearch:

    @staticmethod
    def test_exhaustive() -> None:
        first = search_witnesses(4, 8, None, 7, SearchStrategy.EXHAUSTIVE)
        second = search_witnesses(4, 8, None, 7, SearchStrategy.EXHAUSTIVE)
        assert first.evaluated == 2**11
        assert not first.partial
        assert first.best is not None and second.best is not None
        assert first.best.matrix == second.best.matrix
        assert 0 < first.best.entropy_bits <= 8
        assert first.alpha == 1.0

    @staticmethod
    def test_budget_zero() -> None:
        result = search_witnesses(4, 8, 0, 7, SearchStrategy.EXHAUSTIVE)
        assert result.partial
        assert result.best is None
        assert result.gamma is None
        assert result.evaluated == 0

    @staticmethod
    def test_partial_exhaustive() -> None:
        result = search_witnesses(4, 8, 10, 7, SearchStrategy.EXHAUSTIVE)
        assert result.partial
        assert result.evaluated == 10

    @staticmethod
    def test_random_is_monotone() -> None:
        result = search_witnesses(3, 5, 30, 1, SearchStrategy.RANDOM)
        assert result.evaluated == 30
        assert result.partial
        assert result.history == sorted(result.history)

    @staticmethod
    def test_random_needs_budget() -> None:
        with pytest.raises(InvalidArgumentError):
            search_witnesses(3, 5, None, 1, SearchStrategy.RANDOM)

    @staticmethod
    def test_ties_go_to_smaller_diagonals() -> None:
        result = search_witnesses(2, 1, None, 0, SearchStrategy.EXHAUSTIVE)
        assert result.best is not None
        assert result.best.matrix.diagonal_string() == '01'
        assert result.best.entropy_bits == 1

    @staticmethod
    def test_greedy_budget() -> None:
        result = search_witnesses(3, 6, 25, 4, SearchStrategy.GREEDY)
        assert result.evaluated <= 25
        assert result.best is not None
        assert result.history == sorted(result.history)

    @staticmethod
    def test_sampled_entropy_lifts_width_cap() -> None:
        result = search_witnesses(
            2, 25, 1, 0, SearchStrategy.RANDOM, EntropyMethod.SAMPLED)
        assert result.evaluated == 1
        assert result.partial
        assert result.best is not None
        assert result.best.method == EntropyMethod.SAMPLED
        assert 0 <= float(result.best.entropy_bits) <= 10

    @staticmethod
    def test_wide_exact_entropy_is_refused() -> None:
        with pytest.raises(OracleScaleExceededError):
            search_witnesses(2, 25, 1, 0, SearchStrategy.RANDOM)

    @staticmethod
    def test_too_short() -> None:
        with pytest.raises(InvalidArgumentError):
            search_witnesses(1, 4, None, 0, SearchStrategy.EXHAUSTIVE)

    @staticmethod
    def test_table() -> None:
        result = search_witnesses(2, 1, None, 0, SearchStrategy.EXHAUSTIVE)
        table = search_table(search_rows([result]))
        assert list(table.columns) == [
            'h', 'width', 'strategy', 'seed', 'budget', 'entropy_bits',
            'gamma', 'alpha', 'diagonal_string_hex']
        assert table.loc[0, 'diagonal_string_hex'] == '1'
        assert table.loc[0, 'entropy_bits'] == '1.0'


class TestEmbedding:

    @staticmethod
    def test_random_vectors() -> None:
        rng = np.random.default_rng(3)
        m = random_toeplitz(4, 8, rng)
        vectors = [BitArray(rng.integers(0, 2, size=8)) for _ in range(100)]
        assert check_embedding(m, vectors) == []

    @staticmethod
    def test_narrow_matrix() -> None:
        rng = np.random.default_rng(4)
        m = random_toeplitz(8, 10, rng)
        vectors = [BitArray(rng.integers(0, 2, size=24)) for _ in range(20)]
        assert check_embedding(m, vectors) == []

    @staticmethod
    def test_zero_matrix() -> None:
        F_ell = embed_conv_pattern(ToeplitzSpec.zeros(4, 8))
        assert F_ell == BitArray.zeros(conv_subarray_length(4))
        product = embedded_product(F_ell, bits('11111111'))
        assert not product.any()

    @staticmethod
    def test_identity() -> None:
        F_ell = embed_conv_pattern(ToeplitzSpec.identity(4))
        v = bits('10110011')
        assert list(embedded_product(F_ell, v)) == [1, 0, 1, 1]

    @staticmethod
    def test_too_wide() -> None:
        with pytest.raises(InvalidArgumentError):
            embed_conv_pattern(ToeplitzSpec.zeros(4, 9))


class TestBuildConvF:

    @staticmethod
    def test_layout() -> None:
        n = 2**16
        matrices = random_conv_matrices(n, np.random.default_rng(5))
        F, layout = build_conv_F(n, matrices)
        assert len(F) == n
        assert layout == {
            16: (65448, conv_subarray_length(16)),
            4096: (11260, conv_subarray_length(4096)),
        }
        assert F[65448:65448 + 79] == embed_conv_pattern(matrices[16])
        assert F[:11260].ones_count() == 0
        assert F[65527:].ones_count() == 0

    @staticmethod
    def test_missing_matrix() -> None:
        n = 2**16
        matrices = random_conv_matrices(n, np.random.default_rng(5))
        del matrices[16]
        with pytest.raises(InvalidArgumentError):
            build_conv_F(n, matrices)

    @staticmethod
    def test_subarray_lengths() -> None:
        for ell in (4, 16, 4096):
            assert conv_subarray_length(ell) == ell + ell * lg(ell) - 1
