import numpy as np
import pytest

from src.bitarray import BitArray
from src.distance import INFINITE, Distance
from src.errors import InvalidArgumentError
from src.hard_instance import build_hard_instance, sample_U
from src.stream import (
    StreamState,
    is_aligned,
    is_warmup,
    offline_output_at,
    offline_outputs,
    stream_update,
)
from src.toeplitz import build_conv_F, random_conv_matrices, sample_bits
from src.types import StreamMode


def bits(text: str) -> BitArray:
    return BitArray.from_string(text)


class TestStreamUpdate:

    @staticmethod
    def test_convolution_example() -> None:
        state = StreamState(
            bits('101'), StreamMode.CONVOLUTION, initial_window=bits('011'))
        state, output = stream_update(state, 1)
        assert state.window == bits('111')
        assert output == 2

    @staticmethod
    def test_l2_equal_window() -> None:
        state = StreamState(
            bits('0110'), StreamMode.L2_REARRANGEMENT,
            initial_window=bits('1011'))
        state, output = stream_update(state, 0)
        assert state.window == bits('0110')
        assert output == Distance.of(0)

    @staticmethod
    def test_l2_unequal_counts() -> None:
        state = StreamState(bits('0110'), StreamMode.L2_REARRANGEMENT)
        _, output = stream_update(state, 1)
        assert output == INFINITE

    @staticmethod
    def test_rejects_non_bits() -> None:
        state = StreamState(bits('01'))
        with pytest.raises(InvalidArgumentError):
            stream_update(state, 2)

    @staticmethod
    def test_initial_window_length() -> None:
        with pytest.raises(InvalidArgumentError):
            StreamState(bits('01'), initial_window=bits('011'))

    @staticmethod
    def test_window_survives_compaction() -> None:
        state = StreamState(bits('0110'))
        sequence = [1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 0, 1]
        history = [0, 0, 0, 0]
        for x in sequence:
            state.push(x)
            history.append(x)
            assert state.window == BitArray(history[-4:])
            assert state.window_ones == sum(history[-4:])


class TestWarmup:

    @staticmethod
    def test_flag() -> None:
        state = StreamState(bits('0101'))
        flags = []
        for _ in range(6):
            state.push(1)
            flags.append(is_warmup(state))
        assert flags == [True, True, True, False, False, False]

    @staticmethod
    def test_alignment() -> None:
        assert [is_aligned(a) for a in range(9)] == [
            False, False, False, False, True, False, False, False, True]


class TestOfflineAgreement:

    @staticmethod
    def test_every_arrival_both_modes() -> None:
        rng = np.random.default_rng(2)
        pattern = BitArray(rng.integers(0, 2, size=32))
        stream = BitArray(rng.integers(0, 2, size=100))
        for mode in StreamMode:
            state = StreamState(pattern, mode)
            online = [stream_update(state, x)[1] for x in stream]
            assert online == offline_outputs(pattern, stream, mode)

    @staticmethod
    def test_arrival_range() -> None:
        with pytest.raises(InvalidArgumentError):
            offline_output_at(
                bits('01'), bits('0110'), 0, StreamMode.CONVOLUTION)

    @staticmethod
    def test_l2_hard_instance() -> None:
        n = 2**16
        instance = build_hard_instance(n, 7)
        history = sample_U(n, 8)
        sequence = history + instance.U[:256]
        state = StreamState(instance.F, StreamMode.L2_REARRANGEMENT)
        checked = 0
        for x in sequence:
            state, output = stream_update(state, x)
            arrival = state.arrivals_seen
            if is_warmup(state) or not is_aligned(arrival):
                continue
            checked += 1
            assert not output.is_infinite  # type: ignore
            assert output == offline_output_at(
                instance.F, sequence, arrival, StreamMode.L2_REARRANGEMENT)
        assert checked == 65

    @staticmethod
    def test_convolution_hard_instance() -> None:
        n = 2**16
        rng = np.random.default_rng(7)
        F, _ = build_conv_F(n, random_conv_matrices(n, rng))
        sequence = sample_bits(n + 128, rng)
        state = StreamState(F, StreamMode.CONVOLUTION)
        arrivals = []
        online = []
        for x in sequence:
            state, output = stream_update(state, x)
            if not is_warmup(state) and is_aligned(state.arrivals_seen):
                arrivals.append(state.arrivals_seen)
                online.append(output)
        assert len(arrivals) == 33
        assert online == offline_outputs(
            F, sequence, StreamMode.CONVOLUTION, arrivals=arrivals)
