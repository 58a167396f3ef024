'''Fixed-length arrays of bits.

``BitArray`` is the carrier for the fixed array F, the update array U, the
stream window S and every subarray cut from them. The values are held in an
immutable ``numpy`` ``uint8`` array so slices and comparisons stay cheap.
'''

import base64
from typing import Iterable, Iterator, Sequence, Union, overload

import numpy as np

from src.errors import InvalidArgumentError


#: Bytes in the little-endian length header of the packed form.
HEADER_BYTES = 8


class BitArray:
    '''An immutable sequence of values in ``{0, 1}``.

    Args:
        bits: The values. Anything ``numpy.asarray`` accepts, as long as
            it is one-dimensional and holds only zeros and ones.
    '''

    __slots__ = ('_bits',)

    def __init__(self, bits: Union[Iterable[int], np.ndarray]):
        if not isinstance(bits, np.ndarray):
            bits = list(bits)
        raw = np.asarray(bits)
        if raw.size and raw.dtype.kind not in 'biu':
            raise InvalidArgumentError(
                'BitArray values must be integers, got dtype {}'.format(
                    raw.dtype))
        arr = raw.astype(np.int64)
        if arr.ndim != 1:
            raise InvalidArgumentError(
                'BitArray needs a one-dimensional sequence, got shape '
                '{}'.format(arr.shape))
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise InvalidArgumentError(
                'BitArray values must be 0 or 1')
        packed = arr.astype(np.uint8)
        packed.setflags(write=False)
        self._bits = packed

    @classmethod
    def from_string(cls, text: str) -> 'BitArray':
        '''Parse the ASCII form, e.g. ``'1001'``.'''
        if set(text) - {'0', '1'}:
            raise InvalidArgumentError(
                'not a bit string: {!r}'.format(text))
        return cls([int(char) for char in text])

    @classmethod
    def zeros(cls, length: int) -> 'BitArray':
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def repeat(cls, frame: Sequence[int], count: int) -> 'BitArray':
        '''Concatenate ``count`` copies of ``frame``.'''
        return cls(np.tile(np.asarray(frame, dtype=np.uint8), count))

    @classmethod
    def concat(cls, parts: Iterable['BitArray']) -> 'BitArray':
        arrays = [part.bits for part in parts]
        if not arrays:
            return cls([])
        return cls(np.concatenate(arrays))

    @classmethod
    def unpack(cls, data: bytes) -> 'BitArray':
        '''Inverse of :meth:`pack`.'''
        if len(data) < HEADER_BYTES:
            raise InvalidArgumentError('packed bits lack a length header')
        length = int.from_bytes(data[:HEADER_BYTES], 'little')
        body = np.frombuffer(data[HEADER_BYTES:], dtype=np.uint8)
        if body.size * 8 < length:
            raise InvalidArgumentError(
                'header claims {} bits but only {} are present'.format(
                    length, body.size * 8))
        bits = np.unpackbits(body, bitorder='little')[:length]
        return cls(bits)

    @classmethod
    def from_base64(cls, text: str) -> 'BitArray':
        return cls.unpack(base64.b64decode(text.encode('ascii')))

    @property
    def bits(self) -> np.ndarray:
        '''Read-only ``uint8`` view of the values.'''
        return self._bits

    def ones_count(self) -> int:
        return int(self._bits.sum(dtype=np.int64))

    def to_string(self) -> str:
        return ''.join('1' if bit else '0' for bit in self._bits)

    def pack(self) -> bytes:
        '''Pack into a length header followed by little-endian bits.'''
        header = len(self).to_bytes(HEADER_BYTES, 'little')
        return header + np.packbits(
            self._bits, bitorder='little').tobytes()

    def to_base64(self) -> str:
        return base64.b64encode(self.pack()).decode('ascii')

    def __len__(self) -> int:
        return int(self._bits.size)

    def __iter__(self) -> Iterator[int]:
        return (int(bit) for bit in self._bits)

    @overload
    def __getitem__(self, index: int) -> int:
        ...

    @overload
    def __getitem__(self, index: slice) -> 'BitArray':
        ...

    def __getitem__(
            self, index: Union[int, slice]) -> Union[int, 'BitArray']:
        if isinstance(index, slice):
            return BitArray(self._bits[index])
        return int(self._bits[index])

    def __add__(self, other: 'BitArray') -> 'BitArray':
        return BitArray.concat((self, other))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitArray):
            return NotImplemented
        return bool(np.array_equal(self._bits, other.bits))

    def __hash__(self) -> int:
        return hash((len(self), self._bits.tobytes()))

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        text = self.to_string()
        if len(text) > 64:
            text = text[:61] + '...'
        return 'BitArray({!r}, length={})'.format(text, len(self))
