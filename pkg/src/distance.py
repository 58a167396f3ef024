'''Inner product and L2-rearrangement distance, and their sliding products.

The L2-rearrangement distance between two bit strings is the cheapest way,
measured as the sum of squared moves, to permute one into the other. It is
infinite when the strings hold different numbers of ones. Under an optimal
permutation the ``i``-th one of one string goes to the ``i``-th one of the
other, and likewise for zeros; :func:`l2_rearrangement` evaluates that
matching directly, and :func:`l2_bruteforce` checks it against a search over
all permutations.
'''

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.bitarray import BitArray
from src.constants import ORACLE_MAX_LENGTH
from src.errors import (
    DistanceOverflowError,
    InvalidArgumentError,
    NoValidPermutationError,
    OracleScaleExceededError,
)
from src.geometry import lg


#: Class-preserving bijections the brute force walks one by one before it
#: hands a class over to the assignment solver.
ENUMERATION_LIMIT = 720
INT64_MAX = np.iinfo(np.int64).max


@dataclass(frozen=True)
class Distance:
    '''A non-negative distance, or infinity when ``value`` is None.'''
    value: Optional[int] = None

    @classmethod
    def of(cls, value: int) -> 'Distance':
        if value < 0:
            raise InvalidArgumentError(
                'distances are non-negative, got {}'.format(value))
        return cls(int(value))

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def finite_value(self) -> int:
        '''The value, raising if the distance is infinite.'''
        if self.value is None:
            raise NoValidPermutationError(
                'no permutation maps one string onto the other')
        return self.value

    def to_json(self) -> Union[int, str]:
        return 'inf' if self.value is None else self.value

    def __str__(self) -> str:
        return 'inf' if self.value is None else str(self.value)


INFINITE = Distance(None)


def _check_same_length(a: BitArray, b: BitArray) -> None:
    if len(a) != len(b):
        raise InvalidArgumentError(
            'lengths differ: {} != {}'.format(len(a), len(b)))


def check_accumulator_width(length: int) -> None:
    '''Raise if squared moves over ``length`` symbols could overflow.'''
    if length and length * (length - 1)**2 > INT64_MAX:
        raise DistanceOverflowError(
            'L2 distances over {} symbols can exceed 64 bits'.format(
                length))


def matched_positions(a: BitArray) -> Tuple[np.ndarray, np.ndarray]:
    '''Positions of the ones and of the zeros of ``a``, in order.

    The ``i``-th entries of these tables are what the ``i``-th one or zero
    of another string is matched to.
    '''
    bits = a.bits
    return (
        np.flatnonzero(bits == 1).astype(np.int64),
        np.flatnonzero(bits == 0).astype(np.int64),
    )


def inner_product(a: BitArray, b: BitArray) -> int:
    _check_same_length(a, b)
    return int(np.dot(a.bits.astype(np.int64), b.bits.astype(np.int64)))


def sliding_products(f: np.ndarray, u: np.ndarray) -> np.ndarray:
    '''Inner products of ``u`` against every window of ``f``.

    Works on any integer vectors; element ``i`` is
    ``sum_j f[i + j] * u[j]``.
    '''
    f = np.asarray(f, dtype=np.int64)
    u = np.asarray(u, dtype=np.int64)
    if f.size < u.size:
        raise InvalidArgumentError(
            'pattern of length {} is shorter than the {} values slid '
            'along it'.format(f.size, u.size))
    if u.size == 0:
        return np.zeros(f.size + 1, dtype=np.int64)
    return np.correlate(f, u, mode='valid')


def slide_conv(F_ell: BitArray, U_ell: BitArray) -> np.ndarray:
    '''The sliding inner product ``F_l ⊗ U_l``.

    Returns:
        Integer array of length ``len(F_ell) - len(U_ell) + 1``.
    '''
    return sliding_products(F_ell.bits, U_ell.bits)


def _squared_moves(
        targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
    moves = targets - sources
    return moves * moves


def l2_rearrangement(a: BitArray, b: BitArray) -> Distance:
    '''L2-rearrangement distance between equal-length bit strings.

    Linear time: the ``i``-th one (zero) of ``b`` is charged the squared
    distance to the ``i``-th one (zero) of ``a``.
    '''
    _check_same_length(a, b)
    if a.ones_count() != b.ones_count():
        return INFINITE
    check_accumulator_width(len(a))
    ones_a, zeros_a = matched_positions(a)
    ones_b, zeros_b = matched_positions(b)
    total = (_squared_moves(ones_a, ones_b).sum()
             + _squared_moves(zeros_a, zeros_b).sum())
    return Distance.of(int(total))


def _cheapest_bijection(
        targets: Sequence[int], sources: Sequence[int]) -> int:
    '''Minimum of ``sum (target - source)^2`` over all bijections.'''
    size = len(sources)
    if size == 0:
        return 0
    if math.factorial(size) <= ENUMERATION_LIMIT:
        return min(
            sum((target - source)**2
                for target, source in zip(order, sources))
            for order in itertools.permutations(targets)
        )
    costs = np.subtract.outer(
        np.asarray(sources, dtype=np.int64),
        np.asarray(targets, dtype=np.int64))**2
    rows, cols = linear_sum_assignment(costs)
    return int(costs[rows, cols].sum())


def l2_bruteforce(a: BitArray, b: BitArray) -> Distance:
    '''L2-rearrangement distance by search over every permutation.

    A permutation is admissible when it sends ones to ones and zeros to
    zeros, so the admissible set is the product of the bijections on each
    class and the two costs are minimized independently. Small classes are
    enumerated outright; larger ones are solved exactly as an assignment
    problem. Nothing here relies on the order-preserving matching.

    Raises:
        OracleScaleExceededError: Strings longer than
            ``ORACLE_MAX_LENGTH``.
    '''
    _check_same_length(a, b)
    if len(a) > ORACLE_MAX_LENGTH:
        raise OracleScaleExceededError(
            'brute force is limited to {} symbols, got {}'.format(
                ORACLE_MAX_LENGTH, len(a)))
    if a.ones_count() != b.ones_count():
        return INFINITE
    total = 0
    for symbol in (0, 1):
        targets = [i for i, bit in enumerate(a) if bit == symbol]
        sources = [i for i, bit in enumerate(b) if bit == symbol]
        total += _cheapest_bijection(targets, sources)
    return Distance.of(total)


def contribution_profile(a: BitArray, b: BitArray) -> np.ndarray:
    '''Squared move of every symbol of ``b`` under the optimal matching.

    Element ``i`` is the contribution ``CT(i)`` of ``b[i]``; the profile
    sums to ``l2_rearrangement(a, b)``.

    Raises:
        NoValidPermutationError: The distance is infinite.
    '''
    _check_same_length(a, b)
    if a.ones_count() != b.ones_count():
        raise NoValidPermutationError(
            'strings hold {} and {} ones'.format(
                a.ones_count(), b.ones_count()))
    check_accumulator_width(len(a))
    ones_a, zeros_a = matched_positions(a)
    ones_b, zeros_b = matched_positions(b)
    profile = np.zeros(len(b), dtype=np.int64)
    profile[ones_b] = _squared_moves(ones_a, ones_b)
    profile[zeros_b] = _squared_moves(zeros_a, zeros_b)
    return profile


def slide_l2(F_ell: BitArray, U_ell: BitArray) -> List[Distance]:
    '''The sliding L2 product ``F_l ⊙ U_l``.

    ``l`` is ``len(F_ell) - len(U_ell)``. Element ``i`` is the distance
    between ``U_ell`` and the window of ``F_ell`` starting at ``4i``.

    Raises:
        InvalidArgumentError: ``l`` not a positive multiple of four, or
            ``len(U_ell) != l lg l``.
    '''
    ell = len(F_ell) - len(U_ell)
    if ell <= 0 or ell % 4:
        raise InvalidArgumentError(
            'len(F_l) - len(U_l) must be a positive multiple of 4, '
            'got {}'.format(ell))
    width = len(U_ell)
    if width != ell * lg(ell):
        raise InvalidArgumentError(
            'U_l must have length l lg l = {}, got {}'.format(
                ell * lg(ell), width))
    return [
        l2_rearrangement(F_ell[4 * i:4 * i + width], U_ell)
        for i in range(ell // 4)
    ]
