'''Online evaluation of a fixed pattern against a sliding stream window.

After every arrival the window ``S`` holds the most recent ``n`` bits and the
engine reports either ``<F, S>`` or the L2-rearrangement distance between
``F`` and ``S``. Before ``n`` bits have arrived the missing positions of the
window are zeros; such outputs are produced but are warm-up outputs.
'''

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from src.bitarray import BitArray
from src.distance import Distance, INFINITE, inner_product, l2_rearrangement
from src.errors import InvalidArgumentError
from src.types import StreamMode


Output = Union[int, Distance]


@dataclass(eq=False)
class StreamState:
    '''Mutable state of one stream.

    The window lives in a buffer of twice its length: arrivals are written
    behind it and it is copied back to the front when the buffer fills, so
    each arrival costs amortized constant time to record.

    Attributes:
        pattern: The fixed array F.
        mode: Which distance to report.
        arrivals_seen: Number of bits appended so far.
    '''
    pattern: BitArray
    mode: StreamMode = StreamMode.CONVOLUTION
    arrivals_seen: int = 0
    initial_window: Optional[BitArray] = None
    _buffer: np.ndarray = field(init=False, repr=False)
    _start: int = field(init=False, repr=False)
    _window_ones: int = field(init=False, repr=False)
    _pattern_ones: int = field(init=False, repr=False)
    _pattern_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.pattern)
        if n == 0:
            raise InvalidArgumentError('the pattern must not be empty')
        self.mode = StreamMode(self.mode)
        initial = self.initial_window
        if initial is None:
            initial = BitArray.zeros(n)
        if len(initial) != n:
            raise InvalidArgumentError(
                'initial window has length {}, pattern has {}'.format(
                    len(initial), n))
        self._buffer = np.zeros(2 * n, dtype=np.uint8)
        self._buffer[:n] = initial.bits
        self._start = 0
        self._window_ones = initial.ones_count()
        self._pattern_ones = self.pattern.ones_count()
        self._pattern_values = self.pattern.bits.astype(np.int64)

    @property
    def n(self) -> int:
        return len(self.pattern)

    @property
    def window(self) -> BitArray:
        '''The last ``n`` arrivals, oldest first.'''
        return BitArray(self._buffer[self._start:self._start + self.n])

    @property
    def window_ones(self) -> int:
        return self._window_ones

    def push(self, x: int) -> None:
        '''Append ``x`` and drop the oldest bit.'''
        if x not in (0, 1):
            raise InvalidArgumentError(
                'stream symbols must be 0 or 1, got {!r}'.format(x))
        n = self.n
        self._window_ones += x - int(self._buffer[self._start])
        end = self._start + n
        if end == 2 * n:
            self._buffer[:n - 1] = self._buffer[self._start + 1:end]
            self._start = 0
            self._buffer[n - 1] = x
        else:
            self._buffer[end] = x
            self._start += 1
        self.arrivals_seen += 1

    def output(self) -> Output:
        '''The distance between the pattern and the current window.'''
        if self.mode == StreamMode.CONVOLUTION:
            current = self._buffer[self._start:self._start + self.n]
            return int(np.dot(self._pattern_values, current))
        if self._window_ones != self._pattern_ones:
            return INFINITE
        return l2_rearrangement(self.pattern, self.window)


def is_warmup(state: StreamState) -> bool:
    '''True until ``n`` bits have arrived.'''
    return state.arrivals_seen < state.n


def is_aligned(arrivals_seen: int) -> bool:
    '''Aligned outputs follow arrivals ``4, 8, 12, ...``.'''
    return arrivals_seen > 0 and arrivals_seen % 4 == 0


def stream_update(state: StreamState, x: int) -> Tuple[StreamState, Output]:
    '''Append ``x`` to the window and evaluate it against the pattern.

    The state is updated in place and returned for convenience.
    '''
    state.push(x)
    return state, state.output()


def offline_output_at(
        pattern: BitArray,
        stream: BitArray,
        arrivals_seen: int,
        mode: StreamMode,
        initial_window: Optional[BitArray] = None) -> Output:
    '''Recompute the output after ``arrivals_seen`` arrivals from scratch.'''
    n = len(pattern)
    if not 0 < arrivals_seen <= len(stream):
        raise InvalidArgumentError(
            'arrivals_seen must lie in [1, {}], got {}'.format(
                len(stream), arrivals_seen))
    if initial_window is None:
        initial_window = BitArray.zeros(n)
    history = initial_window + stream[:arrivals_seen]
    window = history[len(history) - n:]
    if StreamMode(mode) == StreamMode.CONVOLUTION:
        return inner_product(pattern, window)
    return l2_rearrangement(pattern, window)


def offline_outputs(
        pattern: BitArray,
        stream: BitArray,
        mode: StreamMode,
        initial_window: Optional[BitArray] = None,
        arrivals: Optional[Iterable[int]] = None) -> List[Output]:
    '''Batch recomputation of a stream's outputs.

    Args:
        pattern: The fixed array F.
        stream: The appended bits, in arrival order.
        mode: Which distance to compute.
        initial_window: Window contents before the first arrival; zeros
            if omitted.
        arrivals: Arrival counts to evaluate at. Defaults to every arrival
            ``1 .. len(stream)``.

    Returns:
        One output per requested arrival count.
    '''
    if arrivals is None:
        arrivals = range(1, len(stream) + 1)
    return [
        offline_output_at(pattern, stream, count, mode, initial_window)
        for count in arrivals
    ]
