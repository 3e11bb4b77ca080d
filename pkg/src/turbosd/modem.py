# Gray-labeled constellations and the framing of a coded bit stream into
# per-antenna symbol blocks.
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Constellation",
    "make_constellation",
    "map_block",
    "bit_position",
    "bit_index",
    "frame_bits",
    "unframe_bits",
]

# Gray sequence over the 4-PAM amplitudes -3,-1,+1,+3 (bipolar bit pairs,
# most-significant bit first).
_PAM4_GRAY = {(-1, -1): -3.0, (-1, +1): -1.0, (+1, +1): +1.0, (+1, -1): +3.0}


@dataclass(frozen=True)
class Constellation:
    """Unit-energy constellation with a bipolar bit labeling.

    points[i] is the symbol labeled by bits_table[i] (entries in {-1,+1},
    most-significant bit first).
    """

    name: str
    points: np.ndarray
    bits_table: np.ndarray
    _index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        table = {tuple(int(b) for b in row): i for i, row in enumerate(self.bits_table)}
        object.__setattr__(self, "_index", table)

    @property
    def bits_per_symbol(self) -> int:
        return self.bits_table.shape[1]

    def index_of(self, bits) -> int:
        return self._index[tuple(int(b) for b in bits)]


def _axis_labels(bits_per_axis: int):
    """(amplitude, bit pattern) pairs for one Gray-coded PAM axis."""
    if bits_per_axis == 1:
        return [(-1.0, (-1,)), (+1.0, (+1,))]
    if bits_per_axis == 2:
        return sorted(((amp, bits) for bits, amp in _PAM4_GRAY.items()))
    raise ValueError(f"unsupported axis size: {bits_per_axis} bits")


def make_constellation(name: str) -> Constellation:
    """Build a named constellation ("qpsk" or "16qam")."""
    key = name.lower()
    if key == "qpsk":
        bits_per_axis, scale = 1, 1.0 / np.sqrt(2.0)
    elif key == "16qam":
        bits_per_axis, scale = 2, 1.0 / np.sqrt(10.0)
    else:
        raise ValueError(f"unknown constellation: {name!r}")
    axis = _axis_labels(bits_per_axis)
    points, rows = [], []
    # First half of the block labels the real axis, second half the imaginary.
    for re_amp, re_bits in axis:
        for im_amp, im_bits in axis:
            points.append(scale * (re_amp + 1j * im_amp))
            rows.append(re_bits + im_bits)
    return Constellation(
        name=key,
        points=np.asarray(points, dtype=np.complex128),
        bits_table=np.asarray(rows, dtype=np.int8),
    )


def map_block(c: Constellation, bits) -> complex:
    """Map one bipolar bit block onto its constellation point."""
    bits = np.asarray(bits)
    if bits.shape != (c.bits_per_symbol,):
        raise ValueError(f"expected {c.bits_per_symbol} bits, got shape {bits.shape}")
    return complex(c.points[c.index_of(bits)])


def bit_position(k: int, m_t: int, bits_per_symbol: int) -> tuple[int, int, int]:
    """Map coded-bit index k -> (channel use u, antenna t, bit j within symbol).

    Consecutive bits_per_symbol bits form one block; blocks fill antennas
    t = 0..m_t-1 of a channel use before the next use starts.
    """
    block, j = divmod(k, bits_per_symbol)
    u, t = divmod(block, m_t)
    return u, t, j


def bit_index(u: int, t: int, j: int, m_t: int, bits_per_symbol: int) -> int:
    """Inverse of bit_position."""
    return (u * m_t + t) * bits_per_symbol + j


def frame_bits(coded_bits: np.ndarray, m_t: int, c: Constellation) -> np.ndarray:
    """Group a bipolar coded stream into symbol vectors, one row per channel use.

    Returns an (U, m_t) complex array with U = len(coded_bits)/(m_t*bps).
    """
    coded_bits = np.asarray(coded_bits)
    bps = c.bits_per_symbol
    if coded_bits.size % (m_t * bps) != 0:
        raise ValueError(f"{coded_bits.size} bits not divisible by m_t*bps = {m_t * bps}")
    blocks = coded_bits.reshape(-1, m_t, bps)
    idx = np.array(
        [[c.index_of(blocks[u, t]) for t in range(m_t)] for u in range(blocks.shape[0])]
    )
    return c.points[idx]


def unframe_bits(symbols: np.ndarray, c: Constellation) -> np.ndarray:
    """Recover the bipolar bit stream from (U, m_t) symbol vectors."""
    symbols = np.asarray(symbols)
    flat = symbols.reshape(-1)
    idx = np.argmin(np.abs(flat[:, None] - c.points[None, :]), axis=1)
    return c.bits_table[idx].reshape(-1).astype(np.int8)
