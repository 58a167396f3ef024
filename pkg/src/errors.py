'''Exceptions raised by the laboratory.'''

from typing import Optional


class BitstreamLabError(Exception):
    '''Base class for every error the package raises on purpose.'''


class InvalidArgumentError(BitstreamLabError, ValueError):
    '''An argument violates an operation's precondition.'''


class GeometryOverflowError(BitstreamLabError):
    '''An interval configuration does not fit in ``[0, n - 1]``.'''


class OracleScaleExceededError(BitstreamLabError):
    '''The permutation brute force was asked to enumerate too much.'''


class NoValidPermutationError(BitstreamLabError):
    '''The two strings have different numbers of ones.'''


class DistanceOverflowError(BitstreamLabError, OverflowError):
    '''A distance could exceed the width of the integer accumulator.'''


class ConstructionInfeasibleError(BitstreamLabError):
    '''A fixed array cannot be laid out as requested.

    Attributes:
        residual: Number of positions the layout is off by, if known.
    '''

    def __init__(self, message: str, residual: Optional[int] = None):
        super().__init__(message)
        self.residual = residual


class CorruptInstanceError(BitstreamLabError):
    '''Outputs are inconsistent with the blocks claimed to produce them.'''


class DecodeFailureError(BitstreamLabError):
    '''The decoder could not extract a frame unambiguously.

    Attributes:
        k: Output offset being decoded.
        j: Even block index, or None if the failure is not block-specific.
        detail: Human-readable description.
    '''

    def __init__(self, k: int, j: Optional[int], detail: str):
        super().__init__('decode failure at k={} j={}: {}'.format(
            k, j, detail))
        self.k = k
        self.j = j
        self.detail = detail

    def to_dict(self) -> dict:
        '''Serialize for the recovery report.'''
        return {'k': self.k, 'j': self.j, 'detail': self.detail}
