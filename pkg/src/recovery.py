'''Recover the even blocks of ``U_l`` from ``F_l ⊙ U_l`` and the odd blocks.

Every aligned frame of an update string holds two ones and two zeros, so
under the optimal matching the ones and zeros of frame ``f`` are always the
ones and zeros of rank ``2f`` and ``2f + 1``. The cost of a frame at output
offset ``k`` therefore depends only on its own content and on the window of
``F_l`` starting at ``4k``, and can be tabulated for both contents before
anything about ``U_l`` is known.

At offset ``k`` the decoder subtracts from the output the cost of the odd
blocks, of the even-block frames recovered so far, and of the unknown frames
that cost the same either way (they sit over ``1001`` padding). What is left
is the summed cost of the frontier frame of each even block, which is lined
up with gadget ``j`` and costs ``v_j 2^(j+1) + 2^(2j) + 2``; the bits
``v_j`` are read off the binary expansion. Sweeping ``k`` from 0 to
``l/4 - 1`` recovers the even blocks back to front.
'''

import functools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from src.bitarray import BitArray
from src.constants import (
    CERTIFICATE_EXHAUSTIVE_BITS,
    FRAME_0101,
    FRAME_1010,
)
from src.distance import (
    Distance,
    check_accumulator_width,
    contribution_profile,
    matched_positions,
    slide_l2,
)
from src.errors import (
    CorruptInstanceError,
    DecodeFailureError,
    InvalidArgumentError,
    NoValidPermutationError,
)
from src.experiment_utils import show_progress, thread_count, trial_rng
from src.geometry import l2_subarray_length, lg
from src.hard_instance import (
    assemble_U_ell,
    block_count,
    build_F_ell,
    frames_of,
    is_update_string,
    sample_block,
    sample_U_ell,
    split_blocks,
)


LOGGER = logging.getLogger(__name__)

OutputKey = Tuple[Optional[int], ...]


@dataclass(frozen=True)
class RecoveryInstance:
    '''What the decoder is given.

    Attributes:
        ell: Subarray length.
        F_ell: The subarray, of length ``l lg l + l``.
        outputs: ``F_l ⊙ U_l``, one distance per offset.
        odd_blocks: Blocks ``1, 3, 5, ...`` of ``U_l``.
    '''
    ell: int
    F_ell: BitArray
    outputs: Tuple[Distance, ...]
    odd_blocks: Tuple[BitArray, ...]

    def __post_init__(self) -> None:
        ell = self.ell
        if len(self.F_ell) != l2_subarray_length(ell):
            raise InvalidArgumentError(
                'F_l must have length {}, got {}'.format(
                    l2_subarray_length(ell), len(self.F_ell)))
        if len(self.outputs) != ell // 4:
            raise InvalidArgumentError(
                'expected {} outputs, got {}'.format(
                    ell // 4, len(self.outputs)))
        if len(self.odd_blocks) != lg(ell) // 2:
            raise InvalidArgumentError(
                'expected {} odd blocks, got {}'.format(
                    lg(ell) // 2, len(self.odd_blocks)))
        for block in self.odd_blocks:
            if len(block) != ell or not is_update_string(block):
                raise InvalidArgumentError(
                    'odd blocks must be l symbols of 0101 and 1010 frames')
        if any(output.is_infinite for output in self.outputs):
            raise CorruptInstanceError('an output is infinite')

    @property
    def width(self) -> int:
        return self.ell * lg(self.ell)

    @property
    def frames_per_block(self) -> int:
        return self.ell // 4

    @property
    def block_count(self) -> int:
        '''Number of even blocks with a gadget, ``J``.'''
        return block_count(self.ell)

    @property
    def even_count(self) -> int:
        return lg(self.ell) - len(self.odd_blocks)

    def frame_index(self, block: int, frame: int) -> int:
        return block * self.frames_per_block + frame


@dataclass(frozen=True)
class DStar:
    '''Frontier cost at one offset.

    Attributes:
        k: Output offset.
        value: Summed cost of every even block's frontier frame.
        reduced: ``value`` less the cost the frontier frames have when all
            of them are 0101.
    '''
    k: int
    value: int
    reduced: int


@dataclass
class RecoveryReport:
    ell: int
    trials: int
    seed: int
    successes: int = 0
    certified_bits: int = 0
    distinct_outputs: int = 0
    failures: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'ell': self.ell,
            'trials': self.trials,
            'seed': self.seed,
            'successes': self.successes,
            'certified_bits': self.certified_bits,
            'distinct_outputs': self.distinct_outputs,
            'failures': self.failures,
        }


@functools.lru_cache(maxsize=None)
def frame_cost_table(F_ell: BitArray, k: int, width: int) -> np.ndarray:
    '''Cost of every update frame against the window of ``F_l`` at ``4k``.

    Returns:
        Read-only array of shape ``(width / 4, 2)``. Column 0 holds the
        cost of a 0101 frame, column 1 that of a 1010 frame.

    Raises:
        CorruptInstanceError: The window does not hold ``width / 2`` ones,
            so no update string is at finite distance from it.
    '''
    window = F_ell[4 * k:4 * k + width]
    if len(window) != width:
        raise InvalidArgumentError(
            'offset {} runs past the end of F_l'.format(k))
    check_accumulator_width(width)
    ones, zeros = matched_positions(window)
    if 2 * len(ones) != width:
        raise CorruptInstanceError(
            'window at offset {} holds {} ones, expected {}'.format(
                k, len(ones), width // 2))
    base = 4 * np.arange(width // 4, dtype=np.int64)
    first_one, second_one = ones[0::2], ones[1::2]
    first_zero, second_zero = zeros[0::2], zeros[1::2]
    cost_0101 = ((first_one - base - 1)**2 + (second_one - base - 3)**2
                 + (first_zero - base)**2 + (second_zero - base - 2)**2)
    cost_1010 = ((first_one - base)**2 + (second_one - base - 2)**2
                 + (first_zero - base - 1)**2 + (second_zero - base - 3)**2)
    table = np.stack([cost_0101, cost_1010], axis=1)
    table.setflags(write=False)
    return table


def frame_choices(bits: BitArray) -> np.ndarray:
    '''Column of :func:`frame_cost_table` for every frame of ``bits``.'''
    return frames_of(bits)[:, 0].astype(np.int64)


def _frames_cost(
        table: np.ndarray, first_frame: int, bits: BitArray) -> int:
    choices = frame_choices(bits)
    rows = np.arange(first_frame, first_frame + len(choices))
    return int(table[rows, choices].sum())


def make_recovery_instance(ell: int, U_ell: BitArray) -> RecoveryInstance:
    '''Evaluate ``F_l ⊙ U_l`` and keep only what the decoder may see.'''
    F_ell = build_F_ell(ell)
    outputs = tuple(slide_l2(F_ell, U_ell))
    odd = tuple(split_blocks(U_ell, ell)[1::2])
    return RecoveryInstance(ell, F_ell, outputs, odd)


def odd_block_contribution(inst: RecoveryInstance, k: int) -> int:
    '''Cost of every odd block at offset ``k``.

    Needs only ``F_l`` and the odd blocks.
    '''
    table = frame_cost_table(inst.F_ell, k, inst.width)
    return sum(
        _frames_cost(table, inst.frame_index(2 * q + 1, 0), block)
        for q, block in enumerate(inst.odd_blocks))


def frontier_frame(inst: RecoveryInstance, k: int, j: int) -> int:
    '''Frame of even block ``2j`` lined up with gadget ``j`` at offset k.'''
    return inst.frame_index(2 * j, inst.frames_per_block - 1 - k)


def frontier_contributions(
        inst: RecoveryInstance, k: int) -> List[Tuple[int, int]]:
    '''Cost of each even block's frontier frame as 0101 and as 1010.'''
    table = frame_cost_table(inst.F_ell, k, inst.width)
    return [
        (int(table[frame, 0]), int(table[frame, 1]))
        for frame in (
            frontier_frame(inst, k, j) for j in range(inst.block_count))
    ]


def _check_offset(inst: RecoveryInstance, k: int) -> None:
    if not 0 <= k < inst.frames_per_block:
        raise InvalidArgumentError(
            'offset must lie in [0, {}), got {}'.format(
                inst.frames_per_block, k))


def _unknown_frames(inst: RecoveryInstance, k: int) -> List[Tuple[int, int]]:
    '''``(j, frame)`` for every even-block frame not yet decodable at k.

    Blocks without a gadget are reported with their block's ``j`` too.
    '''
    unknown = []
    for j in range(inst.even_count):
        if j < inst.block_count:
            frames = range(inst.frames_per_block - 1 - k)
        else:
            frames = range(inst.frames_per_block)
        unknown.extend(
            (j, inst.frame_index(2 * j, m)) for m in frames)
    return unknown


def compute_dstar(
        inst: RecoveryInstance,
        k: int,
        recovered: Optional[Sequence[BitArray]] = None) -> DStar:
    '''Isolate the frontier cost at offset ``k``.

    Args:
        inst: The instance.
        k: Output offset.
        recovered: For each even block with a gadget, its last ``4k``
            symbols. May be omitted when ``k == 0``.

    Raises:
        DecodeFailureError: An unknown frame is not neutral, or a frontier
            frame does not separate its two contents by ``2^(j+1)``.
        CorruptInstanceError: The output is smaller than the costs that
            can be accounted for.
    '''
    _check_offset(inst, k)
    if recovered is None:
        recovered = [BitArray([])] * inst.block_count
    if len(recovered) != inst.block_count:
        raise InvalidArgumentError(
            'expected {} recovered suffixes, got {}'.format(
                inst.block_count, len(recovered)))
    for suffix in recovered:
        if len(suffix) != 4 * k:
            raise InvalidArgumentError(
                'recovered suffixes must have length {} at offset {}'.format(
                    4 * k, k))
    table = frame_cost_table(inst.F_ell, k, inst.width)

    neutral = 0
    for j, frame in _unknown_frames(inst, k):
        if table[frame, 0] != table[frame, 1]:
            raise DecodeFailureError(
                k, j, 'frame {} costs {} or {} depending on content'.format(
                    frame, table[frame, 0], table[frame, 1]))
        neutral += int(table[frame, 0])

    known = sum(
        _frames_cost(
            table, inst.frame_index(2 * j, inst.frames_per_block - k),
            suffix)
        for j, suffix in enumerate(recovered))

    value = (inst.outputs[k].finite_value() - odd_block_contribution(inst, k)
             - neutral - known)
    if value < 0:
        raise CorruptInstanceError(
            'output {} is smaller than its known part'.format(k))

    base = 0
    for j, (cost_0101, cost_1010) in enumerate(
            frontier_contributions(inst, k)):
        if (cost_0101 != 2**(2 * j) + 2
                or cost_1010 - cost_0101 != 2**(j + 1)):
            raise DecodeFailureError(
                k, j, 'frontier costs ({}, {}) do not fit gadget {}'.format(
                    cost_0101, cost_1010, j))
        base += cost_0101
    if value < base:
        raise CorruptInstanceError(
            'frontier cost {} at offset {} is below its minimum {}'.format(
                value, k, base))
    return DStar(k, value, value - base)


def extract_vbits(d: DStar, blocks: int) -> List[int]:
    '''Read ``v_j`` from bit ``j + 1`` of the reduced frontier cost.

    Raises:
        DecodeFailureError: Bits outside ``1 .. J`` are set.
    '''
    bits = [(d.reduced >> (j + 1)) & 1 for j in range(blocks)]
    residual = d.reduced - sum(bit << (j + 1) for j, bit in enumerate(bits))
    if residual:
        raise DecodeFailureError(
            d.k, None, 'reduced cost {} leaves residual {}'.format(
                d.reduced, residual))
    return bits


def recover_even_blocks(inst: RecoveryInstance) -> List[BitArray]:
    '''Reconstruct every even block that has a gadget.

    Returns:
        Blocks ``0, 2, ..., 2J - 2`` of ``U_l``. When ``lg l`` is odd the
        last even block has no gadget and is not returned.
    '''
    frames = {0: BitArray(FRAME_0101), 1: BitArray(FRAME_1010)}
    suffixes = [BitArray([])] * inst.block_count
    for k in range(inst.frames_per_block):
        d = compute_dstar(inst, k, suffixes)
        bits = extract_vbits(d, inst.block_count)
        LOGGER.debug('l=%d k=%d: D*=%d v=%s', inst.ell, k, d.value, bits)
        suffixes = [
            frames[bit] + suffix for bit, suffix in zip(bits, suffixes)]
    return suffixes


def true_even_blocks(U_ell: BitArray, ell: int) -> List[BitArray]:
    '''The even blocks the decoder is expected to return.'''
    return split_blocks(U_ell, ell)[0::2][:block_count(ell)]


def output_key(inst: RecoveryInstance) -> OutputKey:
    return tuple(output.value for output in inst.outputs)


def _recovery_trial(
        ell: int, seed: int, index: int) -> Tuple[bool, dict, OutputKey]:
    U_ell = sample_U_ell(ell, trial_rng(seed, index))
    inst = make_recovery_instance(ell, U_ell)
    failure: dict = {}
    try:
        recovered = recover_even_blocks(inst)
    except DecodeFailureError as error:
        failure = error.to_dict()
    except CorruptInstanceError as error:
        failure = {'k': None, 'j': None, 'detail': str(error)}
    else:
        if recovered != true_even_blocks(U_ell, ell):
            failure = {
                'k': None,
                'j': None,
                'detail': 'recovered blocks differ from the sampled ones',
            }
    if failure:
        failure['trial'] = index
    return not failure, failure, output_key(inst)


def _certified_bits(distinct: int, ell: int) -> int:
    if distinct <= 1:
        return 0
    return min(lg(distinct), block_count(ell) * ell // 4)


def run_recovery_trials(
        ell: int,
        trials: int,
        seed: int,
        threads: Optional[int] = None) -> RecoveryReport:
    '''Round-trip ``trials`` random update windows through the decoder.

    Trial ``i`` draws its window from ``trial_rng(seed, i)``, so the
    report does not depend on the number of workers.
    '''
    if trials < 1:
        raise InvalidArgumentError(
            'trials must be positive, got {}'.format(trials))
    if threads is None:
        threads = thread_count()
    results = Parallel(n_jobs=threads)(
        delayed(_recovery_trial)(ell, seed, index)
        for index in tqdm(range(trials), disable=not show_progress()))
    report = RecoveryReport(ell, trials, seed)
    distinct: Set[OutputKey] = set()
    for ok, failure, key in results:
        if ok:
            report.successes += 1
            distinct.add(key)
        else:
            report.failures.append(failure)
    report.distinct_outputs = len(distinct)
    report.certified_bits = _certified_bits(len(distinct), ell)
    LOGGER.info(
        'l=%d: %d of %d trials recovered', ell, report.successes, trials)
    return report


def even_configurations(ell: int) -> int:
    '''Number of ways to fill the even blocks that have gadgets.'''
    return 2**(block_count(ell) * ell // 4)


def exhaustive_recovery(
        ell: int,
        odd_blocks: Sequence[BitArray],
        residual_block: Optional[BitArray] = None) -> dict:
    '''Decode every even-block configuration with the odd blocks pinned.

    Returns:
        Dictionary with the number of configurations, how many were
        recovered exactly and how many distinct output vectors those gave.
    '''
    J = block_count(ell)
    frames = [BitArray(FRAME_0101), BitArray(FRAME_1010)]
    quarter = ell // 4
    successes = 0
    distinct: Set[OutputKey] = set()
    configurations = even_configurations(ell)
    for config in tqdm(range(configurations), disable=not show_progress()):
        bits = [(config >> i) & 1 for i in range(J * quarter)]
        even = [
            BitArray.concat(
                frames[bit] for bit in bits[j * quarter:(j + 1) * quarter])
            for j in range(J)
        ]
        if residual_block is not None:
            even.append(residual_block)
        U_ell = assemble_U_ell(even, odd_blocks)
        inst = make_recovery_instance(ell, U_ell)
        try:
            recovered = recover_even_blocks(inst)
        except (DecodeFailureError, CorruptInstanceError):
            continue
        if recovered == even[:J]:
            successes += 1
            distinct.add(output_key(inst))
    return {
        'configurations': configurations,
        'successes': successes,
        'distinct_outputs': len(distinct),
    }


def entropy_certificate(
        ell: int,
        trials: int,
        seed: int,
        exhaustive: Optional[bool] = None,
        trial_report: Optional[RecoveryReport] = None) -> dict:
    '''Count distinct output vectors that the decoder inverts exactly.

    Distinct even blocks that are recovered exactly must have given
    distinct outputs, so the outputs carry at least ``lg`` of that count
    bits. All configurations are enumerated when ``exhaustive`` is set,
    or by default when the trial budget covers them and the even blocks
    hold at most ``CERTIFICATE_EXHAUSTIVE_BITS`` bits. Otherwise
    ``trials`` windows are sampled, reusing ``trial_report`` if it came
    from the same trials and seed.

    Raises:
        InvalidArgumentError: ``exhaustive`` was requested for an ``l``
            with too many even-block bits, or ``trial_report`` does not
            match ``trials`` and ``seed``.
    '''
    max_bits = block_count(ell) * ell // 4
    if exhaustive is None:
        exhaustive = (max_bits <= CERTIFICATE_EXHAUSTIVE_BITS
                      and even_configurations(ell) <= trials)
    if exhaustive and max_bits > CERTIFICATE_EXHAUSTIVE_BITS:
        raise InvalidArgumentError(
            'l={} has {} even-block bits, too many to enumerate'.format(
                ell, max_bits))
    if exhaustive:
        rng = trial_rng(seed, 0)
        odd = [sample_block(ell, rng) for _ in range(lg(ell) // 2)]
        residual = None
        if lg(ell) % 2:
            residual = sample_block(ell, rng)
        counts = exhaustive_recovery(ell, odd, residual)
        method = 'exhaustive'
    else:
        report = trial_report
        if report is None:
            report = run_recovery_trials(ell, trials, seed)
        elif (report.ell, report.trials, report.seed) != (ell, trials, seed):
            raise InvalidArgumentError(
                'trial report is for l={}, {} trials, seed {}'.format(
                    report.ell, report.trials, report.seed))
        counts = {
            'configurations': trials,
            'successes': report.successes,
            'distinct_outputs': report.distinct_outputs,
        }
        method = 'sampled'
    return {
        'ell': ell,
        'method': method,
        'configurations': counts['configurations'],
        'successes': counts['successes'],
        'distinct_outputs': counts['distinct_outputs'],
        'certified_bits': _certified_bits(counts['distinct_outputs'], ell),
        'max_bits': max_bits,
    }


def streamed_to_slide(
        F: BitArray,
        window: BitArray,
        u_start: int,
        ell_start: int,
        ell: int,
        offset: int) -> Distance:
    '''Turn a streamed L2 output into an element of ``F_l ⊙ U_l``.

    ``window`` is the stream window at an aligned arrival, with ``U_l``
    occupying ``window[u_start:u_start + l lg l]`` right over
    ``F_l[4 offset:]``. The moves of the symbols outside ``U_l`` are
    subtracted from the streamed distance.

    Raises:
        InvalidArgumentError: ``U_l`` is not over ``F_l[4 offset:]``.
        NoValidPermutationError: The streamed distance is infinite.
    '''
    width = ell * lg(ell)
    if u_start != ell_start + 4 * offset:
        raise InvalidArgumentError(
            'U_l at {} is not over offset {} of F_l at {}'.format(
                u_start, offset, ell_start))
    if not 0 <= offset < ell // 4 or u_start + width > len(window):
        raise InvalidArgumentError(
            'offset {} is outside F_l or the window'.format(offset))
    if F.ones_count() != window.ones_count():
        raise NoValidPermutationError('the streamed distance is infinite')
    profile = contribution_profile(F, window)
    outside = int(profile[:u_start].sum() + profile[u_start + width:].sum())
    return Distance.of(int(profile.sum()) - outside)


def measured_frontier_costs(
        ell: int, U_ell: BitArray, k: int = 0) -> List[int]:
    '''Cost of each even block's frontier frame, read off the profile.

    Unlike :func:`frontier_contributions` this looks at the actual
    window and the actual ``U_l``.
    '''
    F_ell = build_F_ell(ell)
    width = ell * lg(ell)
    profile = contribution_profile(F_ell[4 * k:4 * k + width], U_ell)
    costs = []
    for j in range(block_count(ell)):
        start = 2 * j * ell + ell - 4 - 4 * k
        costs.append(int(profile[start:start + 4].sum()))
    return costs


def frontier_formula(ell: int, U_ell: BitArray, k: int = 0) -> List[int]:
    '''``v_j 2^(j+1) + 2^(2j) + 2`` for the frontier frames of ``U_l``.'''
    costs = []
    for j in range(block_count(ell)):
        start = 2 * j * ell + ell - 4 - 4 * k
        v = U_ell[start]
        costs.append(v * 2**(j + 1) + 2**(2 * j) + 2)
    return costs


def measured_prefix_costs(ell: int, U_ell: BitArray) -> List[int]:
    '''Cost of ``U_l^(2j)[0 .. l-5]`` at offset 0, for every ``j``.'''
    F_ell = build_F_ell(ell)
    profile = contribution_profile(F_ell[:ell * lg(ell)], U_ell)
    return [
        int(profile[2 * j * ell:2 * j * ell + ell - 4].sum())
        for j in range(block_count(ell))
    ]
