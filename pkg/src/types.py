from enum import Enum
from typing import Dict, List, NewType, Tuple, Union

import numpy as np

Bit = int
SeedLike = Union[int, np.random.SeedSequence]
#: Map from subarray length to the subarray's ``(start, length)`` in F.
Layout = Dict[int, Tuple[int, int]]
Report = NewType('Report', dict)
CsvRow = Dict[str, Union[int, float, str]]
CsvRows = List[CsvRow]


class StreamMode(str, Enum):
    '''Which distance the streaming engine reports.'''
    CONVOLUTION = 'conv'
    L2_REARRANGEMENT = 'l2'


class EntropyMethod(str, Enum):
    EXHAUSTIVE = 'exhaustive'
    SAMPLED = 'sampled'


class SearchStrategy(str, Enum):
    EXHAUSTIVE = 'exhaustive'
    RANDOM = 'random'
    GREEDY = 'greedy'
