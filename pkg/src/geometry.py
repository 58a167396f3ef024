'''Interval and gap arithmetic for the information-transfer configurations.

Every division and every non-integer power is floored:

* ``lg`` is ``floor(log2(.))``, exact for powers of two;
* ``n^(1/4)`` is the integer fourth root of ``n``;
* the largest exponent ``lg n / (4 lg lg n)`` is floored;
* the gap length ``4 l / lg n`` is floored.

The functions here are pure and never look at a distance function.
'''

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.constants import MIN_N
from src.errors import GeometryOverflowError, InvalidArgumentError


LOGGER = logging.getLogger(__name__)


def lg(value: int) -> int:
    '''Floor of the base-two logarithm of a positive integer.'''
    if value < 1:
        raise InvalidArgumentError(
            'lg needs a positive integer, got {}'.format(value))
    return value.bit_length() - 1


def is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


def check_supported(n: int) -> None:
    '''Raise unless ``n`` is a power of two no smaller than ``MIN_N``.'''
    if not is_power_of_two(n):
        raise InvalidArgumentError(
            'n must be a power of two, got {}'.format(n))
    if n < MIN_N:
        raise InvalidArgumentError(
            'n must be at least {}, got {}'.format(MIN_N, n))


@dataclass(frozen=True)
class LengthSet:
    '''The set L of interval lengths for stream length ``n``.'''
    n: int
    lengths: Tuple[int, ...]

    def __contains__(self, ell: object) -> bool:
        return ell in self.lengths

    def __iter__(self):  # type: ignore
        return iter(self.lengths)

    def __len__(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class IntervalSpec:
    '''First interval, gap and second interval for one ``(l, t)``.'''
    ell: int
    t: int
    t0: int
    t1: int
    t2: int
    t3: int
    gap_len: int

    @property
    def first_interval(self) -> Tuple[int, int]:
        return self.t0, self.t1

    @property
    def gap(self) -> Tuple[int, int]:
        return self.t1 + 1, self.t2 - 1

    @property
    def second_interval(self) -> Tuple[int, int]:
        return self.t2, self.t3

    @property
    def span(self) -> int:
        '''Number of arrivals from ``t0`` through ``t3``.'''
        return self.t3 - self.t0 + 1


@dataclass(frozen=True)
class OffsetGrid:
    '''The arrivals ``T_{l,f}``: ``f, f + l, f + 2l, ...`` up to n/2.'''
    ell: int
    f: int
    arrivals: Tuple[int, ...]


@dataclass(frozen=True)
class NestingPair:
    ell: int
    next_ell: int
    span: int
    next_gap_len: int

    @property
    def margin(self) -> int:
        return self.next_gap_len - self.span

    @property
    def ok(self) -> bool:
        return self.margin >= 0


@dataclass(frozen=True)
class NestingReport:
    n: int
    pairs: Tuple[NestingPair, ...]

    @property
    def ok(self) -> bool:
        return all(pair.ok for pair in self.pairs)

    @property
    def violations(self) -> Tuple[NestingPair, ...]:
        return tuple(pair for pair in self.pairs if not pair.ok)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'ok': self.ok,
            'pairs': [
                {
                    'ell': pair.ell,
                    'next_ell': pair.next_ell,
                    'span': pair.span,
                    'next_gap_len': pair.next_gap_len,
                    'margin': pair.margin,
                    'ok': pair.ok,
                }
                for pair in self.pairs
            ],
        }


def lengths_set(n: int) -> LengthSet:
    '''Compute L = { n^(1/4) (lg n)^(2i) : i = 0 .. lg n / (4 lg lg n) }.

    Args:
        n: Stream length, a power of two no smaller than ``MIN_N``.

    Returns:
        The lengths in increasing order.
    '''
    check_supported(n)
    lg_n = lg(n)
    i_max = lg_n // (4 * lg(lg_n))
    base = math.isqrt(math.isqrt(n))
    lengths = tuple(base * lg_n**(2 * i) for i in range(i_max + 1))
    return LengthSet(n, lengths)


def gap_length(n: int, ell: int) -> int:
    '''Length of the gap associated with ``ell``, ``4 l / lg n``.'''
    return 4 * ell // lg(n)


def _check_length(n: int, ell: int) -> None:
    if ell not in lengths_set(n):
        raise InvalidArgumentError(
            '{} is not in L for n={}'.format(ell, n))


def interval_spec(n: int, ell: int, t: int) -> IntervalSpec:
    '''Compute ``t0 .. t3`` for interval length ``ell`` starting at ``t``.

    Raises:
        InvalidArgumentError: ``ell`` not in L or ``t`` outside
            ``[0, n/2 - 1]``.
        GeometryOverflowError: The second interval runs past ``n - 1``.
    '''
    _check_length(n, ell)
    if not 0 <= t <= n // 2 - 1:
        raise InvalidArgumentError(
            't must lie in [0, {}], got {}'.format(n // 2 - 1, t))
    gap_len = gap_length(n, ell)
    t0 = t
    t1 = t0 + ell * lg(ell) - 1
    t2 = t1 + gap_len + 1
    t3 = t2 + ell - 1
    if t3 >= n:
        raise GeometryOverflowError(
            'l={} t={} ends at arrival {} >= n={}'.format(ell, t, t3, n))
    return IntervalSpec(ell, t, t0, t1, t2, t3, gap_len)


def max_start(n: int, ell: int) -> int:
    '''Largest ``t`` whose configuration still ends before ``n``.'''
    span = ell * lg(ell) + gap_length(n, ell) + ell
    return min(n // 2 - 1, n - span)


def interval_range_report(n: int) -> dict:
    '''Check that every ``(l, t)`` with ``t < n/2`` fits in the stream.

    The configuration's span does not depend on ``t``, so only the last
    start needs testing. Lengths that overflow are listed with the
    largest start that still fits instead of raising.
    '''
    entries = []
    for ell in lengths_set(n):
        last = max_start(n, ell)
        ok = last == n // 2 - 1
        if not ok:
            LOGGER.warning(
                'n=%d l=%d: configurations only fit for t <= %d',
                n, ell, last)
        entries.append({'ell': ell, 'max_t': last, 'ok': ok})
    return {
        'n': n,
        'ok': all(entry['ok'] for entry in entries),
        'lengths': entries,
    }


def offset_set(n: int, ell: int) -> List[int]:
    '''The offsets ``{ i * 4l / lg n : i in [lg n / 4] }``.'''
    _check_length(n, ell)
    spacing = gap_length(n, ell)
    return [i * spacing for i in range(lg(n) // 4)]


def offset_grid(n: int, ell: int, f: int) -> OffsetGrid:
    '''The arrivals ``T_{l,f}``.'''
    _check_length(n, ell)
    if not 0 <= f < ell:
        raise InvalidArgumentError(
            'offset must lie in [0, {}), got {}'.format(ell, f))
    return OffsetGrid(ell, f, tuple(range(f, n // 2 + 1, ell)))


def gap_windows_disjoint(
        n: int, ell: int) -> Tuple[bool, Optional[Tuple[int, int]]]:
    '''Check that gap windows over all offsets in 𝓕 never intersect.

    Returns:
        ``(True, None)`` if disjoint, else ``(False, (a, b))`` where ``a``
        and ``b`` are the starts of the first two overlapping windows.
    '''
    gap_len = gap_length(n, ell)
    if gap_len == 0:
        return True, None
    first_gap_start = ell * lg(ell)
    starts = np.concatenate([
        np.asarray(offset_grid(n, ell, f).arrivals, dtype=np.int64)
        for f in offset_set(n, ell)
    ]) + first_gap_start
    starts.sort()
    ends = starts + gap_len - 1
    clashes = np.flatnonzero(starts[1:] <= ends[:-1])
    if clashes.size:
        i = int(clashes[0])
        return False, (int(starts[i]), int(starts[i + 1]))
    return True, None


def validate_nesting(n: int) -> NestingReport:
    '''Compare each configuration's span with the next length's gap.

    Violations are reported, not raised, and logged as warnings.
    '''
    lengths = lengths_set(n).lengths
    pairs = []
    for ell, next_ell in zip(lengths, lengths[1:]):
        spec = interval_spec(n, ell, 0)
        pair = NestingPair(ell, next_ell, spec.span,
                           gap_length(n, next_ell))
        if not pair.ok:
            LOGGER.warning(
                'n=%d: span %d of l=%d exceeds gap %d of l=%d',
                n, pair.span, ell, pair.next_gap_len, next_ell)
        pairs.append(pair)
    return NestingReport(n, tuple(pairs))


def l2_subarray_length(ell: int) -> int:
    '''Length of ``F_l`` in the L2 construction, ``l lg l + l``.'''
    return ell * lg(ell) + ell


def right_margin(n: int, ell: int) -> int:
    '''Positions of F to the right of ``F_l``.

    Nominally ``gap + 1``; rounded up to a multiple of four so that every
    region of F starts on a four-aligned index.
    '''
    return 4 * -(-(gap_length(n, ell) + 1) // 4)


def subarray_starts(n: int) -> Dict[int, int]:
    '''Start index in F of every subarray ``F_l``.'''
    return {
        ell: n - right_margin(n, ell) - l2_subarray_length(ell)
        for ell in lengths_set(n)
    }


def suffix_alignment_arrival(n: int, ell: int, t: int) -> int:
    '''Arrival count at which ``U[t0 .. t1]`` sits over the suffix of ``F_l``.

    Counts from 1 like ``StreamState.arrivals_seen``, with ``U[0]`` the
    first bit pushed. ``U[t1]`` is arrival ``t1 + 1`` and reaches the last
    position of ``F_l`` ``right_margin`` arrivals later.
    '''
    spec = interval_spec(n, ell, t)
    return spec.t1 + 1 + right_margin(n, ell)
