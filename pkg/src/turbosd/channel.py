# Rayleigh flat-fading MIMO channel with complex AWGN, plus the seeded
# substream plumbing that keeps every component independently replayable.
import zlib
from dataclasses import dataclass

import numpy as np

from .numerics import qr_decompose, rotate_received

__all__ = [
    "ChannelUse",
    "substream",
    "sample_channel",
    "transmit",
    "snr_to_noise_var",
    "make_channel_use",
]


def substream(seed: int, *tags) -> np.random.Generator:
    """Named RNG substream: same (seed, tags) always yields the same stream."""
    words = [int(seed) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            words.append(zlib.crc32(tag.encode()))
        else:
            words.append(int(tag) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class ChannelUse:
    """One MIMO channel realization together with its QR-rotated observation."""

    h: np.ndarray
    q: np.ndarray
    r: np.ndarray
    y: np.ndarray
    y_rot: np.ndarray
    noise_var: float  # total complex-noise variance 2*sigma_n^2 per receive entry


def sample_channel(m_r: int, m_t: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an (m_r, m_t) matrix of i.i.d. CN(0, 1) entries."""
    if m_r < m_t:
        raise ValueError(f"need m_r >= m_t, got {m_r} < {m_t}")
    re = rng.standard_normal((m_r, m_t))
    im = rng.standard_normal((m_r, m_t))
    return (re + 1j * im) / np.sqrt(2.0)


def transmit(
    h: np.ndarray, s: np.ndarray, noise_var: float, rng: np.random.Generator
) -> np.ndarray:
    """y = h @ s + n, with n i.i.d. complex Gaussian of total variance noise_var."""
    if noise_var < 0:
        raise ValueError(f"negative noise variance: {noise_var}")
    h = np.asarray(h)
    s = np.asarray(s)
    if s.shape != (h.shape[1],):
        raise ValueError(f"dimension mismatch: h is {h.shape}, s is {s.shape}")
    m_r = h.shape[0]
    n = rng.standard_normal(m_r) + 1j * rng.standard_normal(m_r)
    return h @ s + np.sqrt(noise_var / 2.0) * n


def snr_to_noise_var(snr_db: float, m_t: int) -> float:
    """Noise variance 2*sigma_n^2 for unit-energy symbols.

    Convention (recorded in every report): SNR is the total received signal
    energy per receive antenna, m_t, over the noise power per receive entry.
    """
    return m_t / 10.0 ** (snr_db / 10.0)


def make_channel_use(
    m_r: int,
    m_t: int,
    s: np.ndarray,
    noise_var: float,
    channel_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> ChannelUse:
    """Draw a fresh channel, transmit s over it, and attach the QR factors."""
    h = sample_channel(m_r, m_t, channel_rng)
    y = transmit(h, s, noise_var, noise_rng)
    q, r = qr_decompose(h)
    return ChannelUse(h=h, q=q, r=r, y=y, y_rot=rotate_received(q, y), noise_var=noise_var)
