'''Fixed array and update distribution of the L2-rearrangement hard instance.

F is ``01`` repeats except for one subarray ``F_l`` per length ``l`` in L,
placed near the right end of F. Each ``F_l`` has length ``l lg l + l`` and
is ``1001`` padding around ``floor(lg l / 2)`` gadget blocks. Gadget ``j``
is ``1 0^(2^j + 2) 1^(l/2 - 1) 0^(l/2 - 2^j - 2)``: its second one sits
``3 + 2^j`` positions after its first, which is what makes the cost of the
aligned update frame reveal one bit.

U is drawn uniformly from ``{0101, 1010}^(n/4)``.
'''

import functools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.bitarray import BitArray
from src.constants import (
    FILLER_FRAME,
    FRAME_0101,
    FRAME_1010,
    PADDING_FRAME,
)
from src.errors import (
    ConstructionInfeasibleError,
    CorruptInstanceError,
    InvalidArgumentError,
)
from src.geometry import (
    l2_subarray_length,
    lengths_set,
    lg,
    subarray_starts,
)
from src.types import Layout, SeedLike


LOGGER = logging.getLogger(__name__)

#: Smallest subarray length with room for a gadget.
MIN_ELL = 16


@dataclass(frozen=True)
class BlockSpec:
    '''Shape of gadget block ``j`` of ``F_l``.'''
    ell: int
    j: int
    zero_run: int

    @property
    def second_one(self) -> int:
        '''Local position of the block's second one.'''
        return self.zero_run + 1

    @property
    def ones_run(self) -> int:
        return self.ell // 2 - 1

    @property
    def tail_zeros(self) -> int:
        return self.ell - 1 - self.zero_run - self.ones_run


def check_ell(ell: int) -> None:
    '''Raise unless ``ell`` can hold a hard-instance subarray.'''
    if ell < MIN_ELL or ell % 4:
        raise InvalidArgumentError(
            'l must be a multiple of 4 no smaller than {}, got {}'.format(
                MIN_ELL, ell))


def block_count(ell: int) -> int:
    '''Number of gadget blocks, ``floor(lg l / 2)``.'''
    return lg(ell) // 2


def block_spec(ell: int, j: int) -> BlockSpec:
    check_ell(ell)
    if not 0 <= j < block_count(ell):
        raise InvalidArgumentError(
            'block index must lie in [0, {}), got {}'.format(
                block_count(ell), j))
    spec = BlockSpec(ell, j, 2**j + 2)
    if spec.tail_zeros < 0:
        raise InvalidArgumentError(
            'gadget {} does not fit in a block of length {}'.format(j, ell))
    return spec


def build_block(ell: int, j: int) -> BitArray:
    '''Render gadget block ``F_l^(j)``.'''
    spec = block_spec(ell, j)
    return BitArray(np.concatenate([
        np.ones(1, dtype=np.uint8),
        np.zeros(spec.zero_run, dtype=np.uint8),
        np.ones(spec.ones_run, dtype=np.uint8),
        np.zeros(spec.tail_zeros, dtype=np.uint8),
    ]))


def gadget_start(ell: int, j: int) -> int:
    '''Offset of gadget ``j`` inside ``F_l``.'''
    return (2 * j + 1) * ell - 4


@functools.lru_cache(maxsize=None)
def build_F_ell(ell: int) -> BitArray:
    '''Build the subarray ``F_l``.

    The layout is ``l/4 - 1`` padding frames, the gadgets separated by
    ``l/4`` padding frames each, then ``l/4 + 1`` trailing padding frames.
    When ``lg l`` is odd the last update block has no gadget and another
    ``l/4`` frames are added to the trailing run.

    Raises:
        ConstructionInfeasibleError: The pieces do not add up to
            ``l lg l + l``.
    '''
    check_ell(ell)
    quarter = ell // 4
    blocks = block_count(ell)
    residual_blocks = lg(ell) - 2 * blocks
    parts = [BitArray.repeat(PADDING_FRAME, quarter - 1)]
    for j in range(blocks):
        if j:
            parts.append(BitArray.repeat(PADDING_FRAME, quarter))
        parts.append(build_block(ell, j))
    trailing = quarter + 1 + residual_blocks * quarter
    parts.append(BitArray.repeat(PADDING_FRAME, trailing))
    F_ell = BitArray.concat(parts)
    residual = l2_subarray_length(ell) - len(F_ell)
    if residual:
        raise ConstructionInfeasibleError(
            'F_l for l={} has length {}, expected {}'.format(
                ell, len(F_ell), l2_subarray_length(ell)),
            residual=residual)
    assert 2 * F_ell.ones_count() == len(F_ell)
    return F_ell


def frames_of(bits: BitArray) -> np.ndarray:
    '''View ``bits`` as rows of four.'''
    if len(bits) % 4:
        raise InvalidArgumentError(
            'length {} is not a multiple of 4'.format(len(bits)))
    return bits.bits.reshape(-1, 4)


def is_update_string(bits: BitArray) -> bool:
    '''True if every aligned frame of ``bits`` is 0101 or 1010.'''
    frames = frames_of(bits)
    return bool(np.all(
        np.all(frames == FRAME_0101, axis=1)
        | np.all(frames == FRAME_1010, axis=1)))


def _random_frames(count: int, rng: np.random.Generator) -> BitArray:
    flips = rng.integers(0, 2, size=count).astype(bool)
    frames = np.where(
        flips[:, None],
        np.asarray(FRAME_1010, dtype=np.uint8),
        np.asarray(FRAME_0101, dtype=np.uint8))
    return BitArray(frames.reshape(-1))


def sample_U(n: int, seed: SeedLike) -> BitArray:
    '''Draw U uniformly from ``{0101, 1010}^(n/4)``.'''
    if n <= 0 or n % 4:
        raise InvalidArgumentError(
            'n must be a positive multiple of 4, got {}'.format(n))
    return _random_frames(n // 4, np.random.default_rng(seed))


def sample_U_ell(ell: int, rng: np.random.Generator) -> BitArray:
    '''Draw an update window ``U_l`` of length ``l lg l``.'''
    check_ell(ell)
    return _random_frames(ell * lg(ell) // 4, rng)


def sample_block(ell: int, rng: np.random.Generator) -> BitArray:
    return _random_frames(ell // 4, rng)


def split_blocks(U_ell: BitArray, ell: int) -> List[BitArray]:
    '''Cut ``U_l`` into its ``lg l`` blocks of length ``l``.'''
    check_ell(ell)
    if len(U_ell) != ell * lg(ell):
        raise InvalidArgumentError(
            'U_l must have length {}, got {}'.format(
                ell * lg(ell), len(U_ell)))
    return [U_ell[i * ell:(i + 1) * ell] for i in range(lg(ell))]


def assemble_U_ell(
        even: Sequence[BitArray], odd: Sequence[BitArray]) -> BitArray:
    '''Interleave blocks into ``U_l``: ``even[i]`` is block ``2i``.'''
    if len(even) - len(odd) not in (0, 1):
        raise InvalidArgumentError(
            'need as many even blocks as odd ones, or one more; got {} '
            'and {}'.format(len(even), len(odd)))
    lengths = {len(block) for block in list(even) + list(odd)}
    if len(lengths) != 1:
        raise InvalidArgumentError('blocks must share one length')
    parts = []
    for i, block in enumerate(even):
        parts.append(block)
        if i < len(odd):
            parts.append(odd[i])
    return BitArray.concat(parts)


@dataclass(frozen=True)
class HardInstanceL2:
    '''A sampled hard instance.

    Attributes:
        n: Stream length.
        F: The fixed array.
        layout: ``l -> (start, length)`` of every ``F_l`` in F.
        U: The sampled update string.
        seed: Seed U was drawn with.
    '''
    n: int
    F: BitArray
    layout: Layout
    U: BitArray
    seed: int

    @property
    def ells(self) -> List[int]:
        return sorted(self.layout)

    def F_ell(self, ell: int) -> BitArray:
        start, length = self.layout[ell]
        return self.F[start:start + length]


def build_F(n: int) -> Tuple[BitArray, Layout]:
    '''Lay out the fixed array for stream length ``n``.

    Returns:
        The array and the position of every subarray in it.

    Raises:
        ConstructionInfeasibleError: Two subarrays overlap, or one starts
            off the four-aligned grid.
    '''
    F_bits = np.tile(np.asarray(FILLER_FRAME, dtype=np.uint8), n // 4)
    layout: Layout = {}
    occupied = np.zeros(n, dtype=bool)
    starts = subarray_starts(n)
    for ell in lengths_set(n):
        start = starts[ell]
        F_ell = build_F_ell(ell)
        end = start + len(F_ell)
        if start < 0 or start % 4:
            raise ConstructionInfeasibleError(
                'F_l for l={} would start at {}'.format(ell, start),
                residual=start % 4)
        if occupied[start:end].any():
            raise ConstructionInfeasibleError(
                'F_l for l={} overlaps another subarray'.format(ell))
        occupied[start:end] = True
        F_bits[start:end] = F_ell.bits
        layout[ell] = (start, len(F_ell))
        LOGGER.debug('n=%d: F_l for l=%d at [%d, %d)', n, ell, start, end)
    F = BitArray(F_bits)
    check_balanced_prefixes(F, layout)
    return F, layout


def check_balanced_prefixes(F: BitArray, layout: Layout) -> None:
    '''Check that F and its prefix before each subarray are balanced.'''
    prefix_ones = np.concatenate([[0], np.cumsum(F.bits, dtype=np.int64)])
    for ell, (start, length) in layout.items():
        for cut in (start, start + length):
            if 2 * prefix_ones[cut] != cut:
                raise ConstructionInfeasibleError(
                    'prefix of length {} around l={} is unbalanced'.format(
                        cut, ell))
    if 2 * prefix_ones[-1] != len(F):
        raise ConstructionInfeasibleError('F is unbalanced')


def build_hard_instance(n: int, seed: int) -> HardInstanceL2:
    '''Build F for ``n`` and draw U with ``seed``.'''
    F, layout = build_F(n)
    return HardInstanceL2(n, F, layout, sample_U(n, seed), seed)


def instance_to_json(instance: HardInstanceL2) -> dict:
    return {
        'n': instance.n,
        'seed': instance.seed,
        'ells': instance.ells,
        'F': instance.F.to_base64(),
        'U': instance.U.to_base64(),
        'layout': [
            {'ell': ell, 'start': start, 'len': length}
            for ell, (start, length) in sorted(instance.layout.items())
        ],
    }


def instance_from_json(data: dict) -> HardInstanceL2:
    '''Inverse of :func:`instance_to_json`, checking the stored arrays.

    Raises:
        CorruptInstanceError: Lengths or layout disagree with ``n``.
    '''
    try:
        n = int(data['n'])
        F = BitArray.from_base64(data['F'])
        U = BitArray.from_base64(data['U'])
        layout = {
            int(entry['ell']): (int(entry['start']), int(entry['len']))
            for entry in data['layout']
        }
        seed = int(data['seed'])
    except (KeyError, TypeError, ValueError) as error:
        raise CorruptInstanceError(
            'malformed instance: {}'.format(error)) from error
    if len(F) != n or len(U) != n:
        raise CorruptInstanceError(
            'F and U must have length n={}'.format(n))
    if sorted(layout) != sorted(int(ell) for ell in data['ells']):
        raise CorruptInstanceError('ells and layout disagree')
    for ell, (start, length) in layout.items():
        if F[start:start + length] != build_F_ell(ell):
            raise CorruptInstanceError(
                'stored F_l for l={} differs from the construction'.format(
                    ell))
    return HardInstanceL2(n, F, layout, U, seed)
