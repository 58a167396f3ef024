'''Entropy of Mv for (0,1) Toeplitz matrices, and the convolution pattern.

A Toeplitz matrix is fixed by its diagonals. They are written as one bit
string, ``first_col`` followed by ``first_row[1:]``, which orders candidate
matrices during a search and breaks ties between equally good ones.

A matrix M of height ``h`` is embedded in a pattern
``F = reverse(first_col) + first_row[1:]``, so that ``F[h-1-i+j] = M[i][j]``.
Sliding any ``v`` along F then yields Mv read backwards:
``(F ⊗ v)[h-1-i] = (Mv)[i]``.
'''

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import (
    Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union)

import mpmath
import numpy as np
import pandas as pd
from scipy.linalg import toeplitz
from scipy.stats import entropy as plugin_entropy
from tqdm import tqdm

from src.bitarray import BitArray
from src.constants import (
    EXHAUSTIVE_WIDTH_CAP,
    SAMPLED_ENTROPY_MIN_SAMPLES,
)
from src.distance import sliding_products
from src.errors import (
    ConstructionInfeasibleError,
    InvalidArgumentError,
    OracleScaleExceededError,
)
from src.experiment_utils import show_progress, trial_rng
from src.geometry import is_power_of_two, lengths_set, lg, subarray_starts
from src.types import CsvRows, EntropyMethod, Layout, SearchStrategy


LOGGER = logging.getLogger(__name__)

#: Decimal digits carried when a count is not a power of two.
ENTROPY_DIGITS = 50
#: Input vectors multiplied per batch during enumeration.
CHUNK_SIZE = 2**16


@dataclass(frozen=True)
class ToeplitzSpec:
    '''A (0,1) Toeplitz matrix given by its first row and column.

    Entry ``(r, c)`` is ``first_row[c - r]`` when ``c >= r`` and
    ``first_col[r - c]`` otherwise.
    '''
    height: int
    width: int
    first_row: BitArray
    first_col: BitArray

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError(
                'matrix dimensions must be positive, got {}x{}'.format(
                    self.height, self.width))
        if len(self.first_row) != self.width:
            raise InvalidArgumentError(
                'first row has length {}, width is {}'.format(
                    len(self.first_row), self.width))
        if len(self.first_col) != self.height:
            raise InvalidArgumentError(
                'first column has length {}, height is {}'.format(
                    len(self.first_col), self.height))
        if self.first_row[0] != self.first_col[0]:
            raise InvalidArgumentError(
                'first row and first column disagree on the corner')

    @classmethod
    def from_diagonals(
            cls, height: int, width: int,
            diagonals: Union[str, BitArray]) -> 'ToeplitzSpec':
        '''Build from ``first_col + first_row[1:]``.'''
        if isinstance(diagonals, str):
            diagonals = BitArray.from_string(diagonals)
        if len(diagonals) != height + width - 1:
            raise InvalidArgumentError(
                'need {} diagonals, got {}'.format(
                    height + width - 1, len(diagonals)))
        first_col = diagonals[:height]
        first_row = diagonals[:1] + diagonals[height:]
        return cls(height, width, first_row, first_col)

    @classmethod
    def identity(cls, size: int) -> 'ToeplitzSpec':
        first = BitArray([1] + [0] * (size - 1))
        return cls(size, size, first, first)

    @classmethod
    def zeros(cls, height: int, width: int) -> 'ToeplitzSpec':
        return cls(height, width, BitArray.zeros(width),
                   BitArray.zeros(height))

    def diagonal_string(self) -> str:
        return (self.first_col + self.first_row[1:]).to_string()

    def dense(self) -> np.ndarray:
        return toeplitz(
            self.first_col.bits.astype(np.int64),
            self.first_row.bits.astype(np.int64))

    def extend_width(self, width: int) -> 'ToeplitzSpec':
        '''Append zero diagonals on the right up to ``width`` columns.'''
        if width < self.width:
            raise InvalidArgumentError(
                'cannot shrink width {} to {}'.format(self.width, width))
        row = self.first_row + BitArray.zeros(width - self.width)
        return ToeplitzSpec(self.height, width, row, self.first_col)


def random_toeplitz(
        height: int, width: int, rng: np.random.Generator) -> ToeplitzSpec:
    diagonals = rng.integers(0, 2, size=height + width - 1)
    return ToeplitzSpec.from_diagonals(height, width, BitArray(diagonals))


def toeplitz_apply(m: ToeplitzSpec, v: BitArray) -> np.ndarray:
    '''Exact product ``Mv``.'''
    if len(v) != m.width:
        raise InvalidArgumentError(
            'vector has length {}, matrix width is {}'.format(
                len(v), m.width))
    return m.dense() @ v.bits.astype(np.int64)


@dataclass(frozen=True)
class EntropyResult:
    '''Shannon entropy of Mv for uniformly random v.

    Attributes:
        matrix: The matrix.
        entropy_bits: Entropy in bits. Exact up to ``ENTROPY_DIGITS``
            digits when enumerated, a plug-in estimate when sampled.
        distinct_outputs: Number of distinct products observed.
        method: How the distribution was obtained.
        sample_size: Number of sampled inputs, None when enumerated.
    '''
    matrix: ToeplitzSpec
    entropy_bits: mpmath.mpf
    distinct_outputs: int
    method: EntropyMethod
    sample_size: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            'height': self.matrix.height,
            'width': self.matrix.width,
            'diagonals': self.matrix.diagonal_string(),
            'entropy_bits': float(self.entropy_bits),
            'distinct_outputs': self.distinct_outputs,
            'method': self.method.value,
            'sample_size': self.sample_size,
        }


def _input_chunk(start: int, stop: int, width: int) -> np.ndarray:
    '''Rows are the binary expansions of ``start .. stop - 1``.'''
    numbers = np.arange(start, stop, dtype=np.int64)
    return ((numbers[:, None] >> np.arange(width)) & 1).astype(np.int64)


def _row_keys(products: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(products.astype(np.int32))
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1])))


def output_counts(m: ToeplitzSpec) -> Counter:
    '''How many of the ``2^width`` inputs give each product.'''
    if m.width > EXHAUSTIVE_WIDTH_CAP:
        raise OracleScaleExceededError(
            'width {} is over the enumeration cap {}'.format(
                m.width, EXHAUSTIVE_WIDTH_CAP))
    dense_t = m.dense().T
    counts: Counter = Counter()
    total = 2**m.width
    for start in range(0, total, CHUNK_SIZE):
        inputs = _input_chunk(start, min(start + CHUNK_SIZE, total), m.width)
        keys, tallies = np.unique(
            _row_keys(inputs @ dense_t), return_counts=True)
        counts.update({
            key.tobytes(): int(tally) for key, tally in zip(keys, tallies)})
    return counts


def entropy_from_counts(counts: Sequence[int], width: int) -> mpmath.mpf:
    '''``width - sum(c lg c) / 2^width`` for counts summing to 2^width.

    Counts that are powers of two contribute exactly.
    '''
    assert sum(counts) == 2**width
    with mpmath.workdps(ENTROPY_DIGITS):
        exact = 0
        approx = mpmath.mpf(0)
        for count in counts:
            if is_power_of_two(count):
                exact += count * lg(count)
            else:
                approx += count * mpmath.log(count, 2)
        return +(width - (exact + approx) / mpmath.mpf(2)**width)


def exact_entropy(m: ToeplitzSpec) -> EntropyResult:
    '''Entropy of Mv by enumerating every input vector.

    Raises:
        OracleScaleExceededError: ``m.width`` is over
            ``EXHAUSTIVE_WIDTH_CAP``; use :func:`sampled_entropy`.
    '''
    counts = output_counts(m)
    entropy = entropy_from_counts(list(counts.values()), m.width)
    return EntropyResult(m, entropy, len(counts), EntropyMethod.EXHAUSTIVE)


def sampled_entropy(
        m: ToeplitzSpec,
        samples: int = SAMPLED_ENTROPY_MIN_SAMPLES,
        rng: Optional[np.random.Generator] = None) -> EntropyResult:
    '''Plug-in estimate of the entropy of Mv from random inputs.

    The estimate is biased low whenever the output space is not much
    smaller than ``samples``.

    Raises:
        InvalidArgumentError: ``samples`` is under
            ``SAMPLED_ENTROPY_MIN_SAMPLES``.
    '''
    if samples < SAMPLED_ENTROPY_MIN_SAMPLES:
        raise InvalidArgumentError(
            'need at least {} samples, got {}'.format(
                SAMPLED_ENTROPY_MIN_SAMPLES, samples))
    if rng is None:
        rng = np.random.default_rng()
    LOGGER.warning(
        'entropy of a %dx%d matrix estimated from %d samples; the '
        'plug-in estimate is biased low', m.height, m.width, samples)
    dense_t = m.dense().T
    counts: Counter = Counter()
    for start in range(0, samples, CHUNK_SIZE):
        size = min(CHUNK_SIZE, samples - start)
        inputs = rng.integers(0, 2, size=(size, m.width), dtype=np.int64)
        keys, tallies = np.unique(
            _row_keys(inputs @ dense_t), return_counts=True)
        counts.update({
            key.tobytes(): int(tally) for key, tally in zip(keys, tallies)})
    estimate = plugin_entropy(np.fromiter(counts.values(), dtype=float),
                              base=2)
    return EntropyResult(
        m, mpmath.mpf(float(estimate)), len(counts), EntropyMethod.SAMPLED,
        samples)


@dataclass
class SearchResult:
    '''Best matrix found by :func:`search_witnesses`.

    Attributes:
        best: The best result, None if nothing was evaluated.
        gamma: ``entropy / (h lg h)`` of the best matrix.
        alpha: ``width / (h lg h)``.
        evaluated: Number of matrices whose entropy was computed.
        partial: True when the budget ran out before the strategy
            finished.
    '''
    height: int
    width: int
    strategy: SearchStrategy
    seed: int
    budget: Optional[int]
    best: Optional[EntropyResult] = None
    evaluated: int = 0
    partial: bool = False
    history: List[float] = field(default_factory=list)

    @property
    def scale(self) -> int:
        return self.height * lg(self.height)

    @property
    def alpha(self) -> float:
        return self.width / self.scale

    @property
    def gamma(self) -> Optional[float]:
        if self.best is None:
            return None
        return float(self.best.entropy_bits) / self.scale

    def offer(self, result: EntropyResult) -> None:
        '''Keep ``result`` if it beats the best so far.

        Equal entropies go to the lexicographically smaller diagonals.
        '''
        self.evaluated += 1
        best = self.best
        if (best is None or result.entropy_bits > best.entropy_bits
                or (result.entropy_bits == best.entropy_bits
                    and result.matrix.diagonal_string()
                    < best.matrix.diagonal_string())):
            self.best = result
        assert self.best is not None
        self.history.append(float(self.best.entropy_bits))

    def to_dict(self) -> dict:
        return {
            'h': self.height,
            'width': self.width,
            'strategy': self.strategy.value,
            'seed': self.seed,
            'budget': self.budget,
            'evaluated': self.evaluated,
            'partial': self.partial,
            'alpha': self.alpha,
            'gamma': self.gamma,
            'best': None if self.best is None else self.best.to_dict(),
        }


def _diagonals_of(number: int, count: int) -> str:
    return format(number, '0{}b'.format(count))


Evaluator = Callable[[Union[str, BitArray]], EntropyResult]


def _search_exhaustive(
        result: SearchResult, count: int, evaluate: Evaluator) -> None:
    if count > EXHAUSTIVE_WIDTH_CAP:
        raise InvalidArgumentError(
            '{} diagonals is over the exhaustive cap {}'.format(
                count, EXHAUSTIVE_WIDTH_CAP))
    total = 2**count
    limit = total if result.budget is None else min(total, result.budget)
    for number in tqdm(range(limit), disable=not show_progress()):
        result.offer(evaluate(_diagonals_of(number, count)))
    result.partial = limit < total


def _search_random(
        result: SearchResult, count: int, evaluate: Evaluator,
        rng: np.random.Generator) -> None:
    if result.budget is None:
        raise InvalidArgumentError('the random strategy needs a budget')
    for _ in tqdm(range(result.budget), disable=not show_progress()):
        result.offer(evaluate(BitArray(rng.integers(0, 2, size=count))))
    result.partial = True


def _search_greedy(
        result: SearchResult, count: int, evaluate: Evaluator,
        rng: np.random.Generator) -> None:
    '''Hill-climb on single diagonal flips, taking the best flip per step.'''
    def spent() -> bool:
        return result.budget is not None and result.evaluated >= result.budget

    if spent():
        result.partial = True
        return
    current = evaluate(BitArray(rng.integers(0, 2, count)))
    result.offer(current)
    while True:
        step: Optional[EntropyResult] = None
        diagonals = list(current.matrix.diagonal_string())
        for i in range(count):
            if spent():
                result.partial = True
                return
            flipped = list(diagonals)
            flipped[i] = '1' if flipped[i] == '0' else '0'
            candidate = evaluate(''.join(flipped))
            result.offer(candidate)
            if (candidate.entropy_bits > current.entropy_bits
                    and (step is None
                         or candidate.entropy_bits > step.entropy_bits)):
                step = candidate
        if step is None:
            return
        current = step


def search_witnesses(
        h: int,
        width: int,
        budget: Optional[int],
        seed: int,
        strategy: SearchStrategy,
        entropy: EntropyMethod = EntropyMethod.EXHAUSTIVE) -> SearchResult:
    '''Look for a Toeplitz matrix with high-entropy products.

    Args:
        h: Matrix height, at least 2.
        width: Matrix width.
        budget: Largest number of matrices to evaluate, or None for no
            limit (the random strategy needs one).
        seed: Seed of the random and greedy strategies.
        strategy: Exhaustive enumeration of all diagonal strings in
            lexicographic order, independent random draws, or greedy
            single-flip ascent from a random start.
        entropy: Exact entropy by enumeration, or a plug-in estimate from
            ``SAMPLED_ENTROPY_MIN_SAMPLES`` inputs, which lifts the width cap.
    Returns:
        The best matrix and its ``(alpha, gamma)``. The result is flagged
        partial if the budget ran out first.
    '''
    if h < 2:
        raise InvalidArgumentError('h must be at least 2, got {}'.format(h))
    if width < 1:
        raise InvalidArgumentError(
            'width must be positive, got {}'.format(width))
    if budget is not None and budget < 0:
        raise InvalidArgumentError(
            'budget must be non-negative, got {}'.format(budget))
    strategy = SearchStrategy(strategy)
    result = SearchResult(h, width, strategy, seed, budget)
    if budget == 0:
        result.partial = True
        return result
    count = h + width - 1
    rng = np.random.default_rng(seed)
    sample_rng = trial_rng(seed, 0)

    def evaluate(diagonals: Union[str, BitArray]) -> EntropyResult:
        m = ToeplitzSpec.from_diagonals(h, width, diagonals)
        if entropy == EntropyMethod.SAMPLED:
            return sampled_entropy(m, SAMPLED_ENTROPY_MIN_SAMPLES, sample_rng)
        return exact_entropy(m)

    if strategy == SearchStrategy.EXHAUSTIVE:
        _search_exhaustive(result, count, evaluate)
    elif strategy == SearchStrategy.RANDOM:
        _search_random(result, count, evaluate, rng)
    else:
        _search_greedy(result, count, evaluate, rng)
    LOGGER.info(
        'h=%d width=%d %s: best entropy %s after %d matrices',
        h, width, strategy.value,
        None if result.best is None else mpmath.nstr(
            result.best.entropy_bits, 12),
        result.evaluated)
    return result


def search_rows(results: Sequence[SearchResult]) -> CsvRows:
    rows: CsvRows = []
    for result in results:
        diagonals = ''
        entropy = ''
        if result.best is not None:
            bits = result.best.matrix.diagonal_string()
            diagonals = format(int(bits, 2), '0{}x'.format(
                -(-len(bits) // 4)))
            entropy = mpmath.nstr(result.best.entropy_bits, 17)
        rows.append({
            'h': result.height,
            'width': result.width,
            'strategy': result.strategy.value,
            'seed': result.seed,
            'budget': '' if result.budget is None else result.budget,
            'entropy_bits': entropy,
            'gamma': '' if result.gamma is None else repr(result.gamma),
            'alpha': repr(result.alpha),
            'diagonal_string_hex': diagonals,
        })
    return rows


def search_table(rows: CsvRows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=[
        'h', 'width', 'strategy', 'seed', 'budget', 'entropy_bits',
        'gamma', 'alpha', 'diagonal_string_hex'])


def conv_subarray_length(ell: int) -> int:
    '''Length of ``F_l`` in the convolution construction.'''
    return ell + ell * lg(ell) - 1


def embed_conv_pattern(m: ToeplitzSpec) -> BitArray:
    '''Embed an ``l``-row matrix into the pattern ``F_l``.

    Matrices narrower than ``l lg l`` are padded with zero diagonals.

    Returns:
        ``F_l`` of length ``l + l lg l - 1`` with
        ``slide_conv(F_l, v)[l - 1 - i] == (Mv)[i]``.
    '''
    ell = m.height
    if ell < 2:
        raise InvalidArgumentError(
            'need at least two rows, got {}'.format(ell))
    full_width = ell * lg(ell)
    if m.width > full_width:
        raise InvalidArgumentError(
            'width {} is over l lg l = {}'.format(m.width, full_width))
    m = m.extend_width(full_width)
    pattern = BitArray(m.first_col.bits[::-1]) + m.first_row[1:]
    assert len(pattern) == conv_subarray_length(ell)
    return pattern


def embedded_product(F_ell: BitArray, v: BitArray) -> np.ndarray:
    '''Read ``Mv`` back out of the sliding products of ``v`` on ``F_l``.'''
    return sliding_products(F_ell.bits, v.bits)[::-1]


def build_conv_F(
        n: int,
        matrices: Mapping[int, ToeplitzSpec]) -> Tuple[BitArray, Layout]:
    '''Fixed array of the convolution instance.

    Each ``F_l`` goes where the L2 construction puts its subarray; the
    rest of F is zeros.

    Raises:
        InvalidArgumentError: A length in L has no matrix.
        ConstructionInfeasibleError: Two subarrays overlap.
    '''
    F_bits = np.zeros(n, dtype=np.uint8)
    occupied = np.zeros(n, dtype=bool)
    layout: Layout = {}
    starts = subarray_starts(n)
    for ell in lengths_set(n):
        if ell not in matrices:
            raise InvalidArgumentError('no matrix for l={}'.format(ell))
        F_ell = embed_conv_pattern(matrices[ell])
        start = starts[ell]
        end = start + len(F_ell)
        if start < 0 or end > n or occupied[start:end].any():
            raise ConstructionInfeasibleError(
                'F_l for l={} overlaps another subarray'.format(ell))
        occupied[start:end] = True
        F_bits[start:end] = F_ell.bits
        layout[ell] = (start, len(F_ell))
    return BitArray(F_bits), layout


def random_conv_matrices(
        n: int, rng: np.random.Generator) -> Dict[int, ToeplitzSpec]:
    '''Random full-width matrices for every length in L.'''
    return {
        ell: random_toeplitz(ell, ell * lg(ell), rng)
        for ell in lengths_set(n)
    }


def sample_bits(n: int, rng: np.random.Generator) -> BitArray:
    '''Uniformly random update string for the convolution instance.'''
    return BitArray(rng.integers(0, 2, size=n))


def entropy_bounds_hold(result: EntropyResult) -> bool:
    '''``0 <= H <= min(width, lg distinct)`` up to rounding.'''
    slack = mpmath.mpf(10)**(-ENTROPY_DIGITS // 2)
    with mpmath.workdps(ENTROPY_DIGITS):
        ceiling = min(mpmath.mpf(result.matrix.width),
                      mpmath.log(result.distinct_outputs, 2))
    return bool(-slack <= result.entropy_bits <= ceiling + slack)


def check_embedding(
        m: ToeplitzSpec, vectors: Sequence[BitArray]) -> List[int]:
    '''Indices of ``vectors`` whose embedded product disagrees with Mv.'''
    F_ell = embed_conv_pattern(m)
    full = m.extend_width(m.height * lg(m.height))
    return [
        i for i, v in enumerate(vectors)
        if not np.array_equal(
            embedded_product(F_ell, v), toeplitz_apply(full, v))
    ]
