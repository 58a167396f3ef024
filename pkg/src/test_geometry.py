import pytest

from src.errors import GeometryOverflowError, InvalidArgumentError
from src.geometry import (
    check_supported,
    gap_length,
    gap_windows_disjoint,
    interval_range_report,
    interval_spec,
    lengths_set,
    lg,
    max_start,
    offset_grid,
    offset_set,
    right_margin,
    subarray_starts,
    suffix_alignment_arrival,
    validate_nesting,
)
from src.hard_instance import build_F, sample_U
from src.stream import StreamState
from src.types import StreamMode


class TestLengthsSet:

    @staticmethod
    def test_small_stream() -> None:
        assert lengths_set(2**16).lengths == (16, 4096)

    @staticmethod
    def test_medium_stream() -> None:
        assert lengths_set(2**20).lengths == (32, 12800)

    @staticmethod
    def test_large_stream() -> None:
        assert lengths_set(2**64).lengths == (2**16, 2**28, 2**40)

    @staticmethod
    def test_membership() -> None:
        lengths = lengths_set(2**16)
        assert 16 in lengths
        assert 32 not in lengths
        assert len(lengths) == 2

    @staticmethod
    def test_unsupported() -> None:
        for n in (2**15, 3 * 2**16, 0):
            with pytest.raises(InvalidArgumentError):
                check_supported(n)

    @staticmethod
    def test_lg() -> None:
        assert lg(1) == 0
        assert lg(20) == 4
        assert lg(2**40) == 40
        with pytest.raises(InvalidArgumentError):
            lg(0)


class TestIntervalSpec:

    @staticmethod
    def test_smallest_length() -> None:
        spec = interval_spec(2**16, 16, 0)
        assert (spec.t0, spec.t1, spec.t2, spec.t3) == (0, 63, 68, 83)
        assert spec.gap_len == 4
        assert spec.gap == (64, 67)
        assert spec.span == 84

    @staticmethod
    def test_shifted_start() -> None:
        spec = interval_spec(2**16, 16, 100)
        assert spec.first_interval == (100, 163)
        assert spec.second_interval == (168, 183)

    @staticmethod
    def test_overflow() -> None:
        with pytest.raises(GeometryOverflowError):
            interval_spec(2**16, 4096, 11265)
        assert interval_spec(2**16, 4096, 11264).t3 == 2**16 - 1

    @staticmethod
    def test_bad_arguments() -> None:
        with pytest.raises(InvalidArgumentError):
            interval_spec(2**16, 32, 0)
        with pytest.raises(InvalidArgumentError):
            interval_spec(2**16, 16, 2**15)

    @staticmethod
    def test_range_report() -> None:
        assert interval_range_report(2**20)['ok']
        report = interval_range_report(2**16)
        assert not report['ok']
        assert report['lengths'] == [
            {'ell': 16, 'max_t': 2**15 - 1, 'ok': True},
            {'ell': 4096, 'max_t': 11264, 'ok': False},
        ]
        assert max_start(2**16, 4096) == 11264


class TestOffsets:

    @staticmethod
    def test_offset_set() -> None:
        assert gap_length(2**16, 16) == 4
        assert offset_set(2**16, 16) == [0, 4, 8, 12]
        assert offset_set(2**20, 32) == [0, 6, 12, 18, 24]

    @staticmethod
    def test_offset_grid() -> None:
        grid = offset_grid(2**16, 16, 4)
        assert grid.arrivals[:3] == (4, 20, 36)
        assert grid.arrivals[-1] <= 2**15
        with pytest.raises(InvalidArgumentError):
            offset_grid(2**16, 16, 16)

    @staticmethod
    def test_gap_windows_disjoint() -> None:
        for n in (2**16, 2**20):
            for ell in lengths_set(n):
                assert gap_windows_disjoint(n, ell) == (True, None)

    @staticmethod
    def test_nesting() -> None:
        for n in (2**16, 2**20):
            report = validate_nesting(n)
            assert report.ok
            assert not report.violations
        pair = validate_nesting(2**16).pairs[0]
        assert (pair.ell, pair.next_ell) == (16, 4096)
        assert pair.margin == 1024 - 84


class TestPlacement:

    @staticmethod
    def test_right_margin() -> None:
        assert right_margin(2**16, 16) == 8
        assert right_margin(2**16, 4096) == 1028

    @staticmethod
    def test_subarray_starts() -> None:
        assert subarray_starts(2**16) == {16: 65448, 4096: 11260}
        for n in (2**16, 2**20):
            for start in subarray_starts(n).values():
                assert start % 4 == 0

    @staticmethod
    def test_suffix_alignment() -> None:
        assert suffix_alignment_arrival(2**16, 16, 0) == 72

    @staticmethod
    def test_suffix_alignment_in_stream() -> None:
        n = 2**16
        F, layout = build_F(n)
        start, length = layout[16]
        U = sample_U(n, 0)
        for t in (0, 40):
            spec = interval_spec(n, 16, t)
            arrival = suffix_alignment_arrival(n, 16, t)
            state = StreamState(
                F, StreamMode.L2_REARRANGEMENT, initial_window=sample_U(n, 1))
            for x in U[:arrival]:
                state.push(x)
            assert state.arrivals_seen == arrival
            width = spec.t1 - spec.t0 + 1
            assert state.window[start + length - width:start + length] == \
                U[spec.t0:spec.t1 + 1]
