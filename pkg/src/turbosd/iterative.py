# The iterative receiver loop: soft demapping over all channel uses,
# interleaving, SISO decoding, RWC flag maintenance, TER-driven early
# stopping, and per-iteration complexity counters.
import math
from dataclasses import dataclass, field

import numpy as np

from . import coding, interleave, modem
from .channel import ChannelUse, make_channel_use, snr_to_noise_var, substream
from .coding import Trellis
from .interleave import Permutation
from .modem import Constellation
from .sphere import SdConfig, soft_demap

__all__ = [
    "LlrFrame",
    "RwcFlags",
    "IterationStats",
    "TxFrame",
    "ReceiverConfig",
    "ter_threshold",
    "update_rwc_flags",
    "check_early_stop",
    "make_frame",
    "run_frame",
]


def ter_threshold(ter: float) -> float:
    """LLR-domain threshold ln(TER^-1 - 1) for a target error rate."""
    if not 0.0 < ter <= 0.5:
        raise ValueError(f"need 0 < ter <= 0.5, got {ter}")
    return math.log(1.0 / ter - 1.0)


@dataclass
class RwcFlags:
    """Reliable-and-well-converging flags, in decoder order and interleaved."""

    g: np.ndarray
    g_interleaved: np.ndarray


def update_rwc_flags(
    l_e_dec: np.ndarray, l_d_dec: np.ndarray, l_ter: float, perm: Permutation
) -> RwcFlags:
    """Flag bits whose |extrinsic| and |a-posteriori| both exceed the threshold.

    A full recheck over all bits, no latching across iterations.
    """
    l_e_dec = np.asarray(l_e_dec)
    l_d_dec = np.asarray(l_d_dec)
    if l_e_dec.shape != l_d_dec.shape:
        raise ValueError("extrinsic/a-posteriori length mismatch")
    g = (np.abs(l_e_dec) > l_ter) & (np.abs(l_d_dec) > l_ter)
    return RwcFlags(g=g, g_interleaved=interleave.interleave(perm, g))


def check_early_stop(app_llrs_info: np.ndarray, ter: float) -> bool:
    """Stop once the post-decoding BER estimate reaches the target (inclusive)."""
    return coding.estimate_ber(app_llrs_info) <= ter


@dataclass
class LlrFrame:
    """Soft-information state of one frame, on both sides of the interleaver."""

    l_a_dem: np.ndarray
    l_d_dem: np.ndarray
    l_e_dem: np.ndarray
    l_a_dec: np.ndarray
    l_d_dec: np.ndarray
    l_e_dec: np.ndarray
    iteration: int = 0

    @classmethod
    def zeros(cls, k: int) -> "LlrFrame":
        return cls(*(np.zeros(k) for _ in range(6)))


@dataclass
class IterationStats:
    iteration: int
    ber_estimate: float
    ber_true: float
    visited_nodes: int  # cumulative over iterations
    beta_stores: int  # cumulative over iterations
    non_rwc_count: int
    stopped: bool


@dataclass
class TxFrame:
    """Everything the genie knows about one transmitted frame."""

    info_bits: np.ndarray  # bipolar, length n_info
    coded_dec: np.ndarray  # coded bits in decoder order, length K
    coded_dem: np.ndarray  # interleaved coded bits (demapper order)
    uses: list
    constellation: Constellation
    perm: Permutation
    m_t: int


@dataclass
class ReceiverConfig:
    mode: str
    ter: float
    w: int = 1
    max_iterations: int = 5
    selective_decoding: bool = True
    trellis: Trellis = field(default_factory=coding.make_rsc_5_7)


def make_frame(
    m_r: int,
    m_t: int,
    constellation: Constellation,
    k: int,
    snr_db: float,
    perm: Permutation,
    seed: int,
    frame_idx: int = 0,
) -> TxFrame:
    """Draw data, encode, interleave, map, and transmit one frame."""
    bps = constellation.bits_per_symbol
    if k % (m_t * bps) != 0:
        raise ValueError(f"block length {k} not divisible by m_t*bps = {m_t * bps}")
    n_info = k // 2 - 2
    data_rng = substream(seed, "data", frame_idx)
    chan_rng = substream(seed, "channel", frame_idx)
    noise_rng = substream(seed, "noise", frame_idx)
    info = (2 * data_rng.integers(0, 2, size=n_info) - 1).astype(np.int8)
    coded = coding.encode(info)
    coded_dem = interleave.interleave(perm, coded)
    symbols = modem.frame_bits(coded_dem, m_t, constellation)
    noise_var = snr_to_noise_var(snr_db, m_t)
    uses = [
        make_channel_use(m_r, m_t, symbols[u], noise_var, chan_rng, noise_rng)
        for u in range(symbols.shape[0])
    ]
    return TxFrame(
        info_bits=info,
        coded_dec=coded,
        coded_dem=coded_dem,
        uses=uses,
        constellation=constellation,
        perm=perm,
        m_t=m_t,
    )


def run_frame(tx: TxFrame, cfg: ReceiverConfig) -> list[IterationStats]:
    """Run the iterative receiver on one frame; one stats record per iteration."""
    const = tx.constellation
    k = tx.coded_dec.size
    block = tx.m_t * const.bits_per_symbol
    l_ter = ter_threshold(cfg.ter)
    exact = cfg.mode == "exact"
    sd_cfg = SdConfig(
        clipping_mode=cfg.mode,
        noise_var=tx.uses[0].noise_var,
        l_ter=np.inf if cfg.mode in ("exact", "su") else l_ter,
    )
    info_pos = coding.info_positions(k)
    info_hard = tx.info_bits > 0

    state = LlrFrame.zeros(k)
    flags = RwcFlags(g=np.zeros(k, dtype=bool), g_interleaved=np.zeros(k, dtype=bool))
    prev_dec_app = np.zeros(k)
    prev_dec_ext = np.zeros(k)
    cum_visited = 0
    cum_beta = 0
    stats: list[IterationStats] = []

    for q in range(cfg.max_iterations):
        state.iteration = q
        state.l_a_dem = (
            np.zeros(k) if q == 0 else interleave.interleave(tx.perm, state.l_e_dec)
        )
        for u, use in enumerate(tx.uses):
            sl = slice(u * block, (u + 1) * block)
            res = soft_demap(
                use,
                state.l_a_dem[sl],
                sd_cfg,
                const,
                rwc_flags=None if exact else flags.g_interleaved[sl],
                prev_app=state.l_d_dem[sl],
                prev_ext=state.l_e_dem[sl],
            )
            state.l_d_dem[sl] = res.app_llrs
            state.l_e_dem[sl] = res.ext_llrs
            cum_visited += res.visited_nodes

        state.l_a_dec = interleave.deinterleave(tx.perm, state.l_e_dem)
        selective = cfg.selective_decoding and not exact
        siso = coding.siso_decode(
            state.l_a_dec,
            cfg.trellis,
            flags=flags.g if selective else None,
            w=cfg.w,
            prev_app=prev_dec_app,
            prev_ext=prev_dec_ext,
        )
        state.l_d_dec = siso.app_llrs
        state.l_e_dec = siso.ext_llrs
        cum_beta += siso.beta_store_count

        app_info = state.l_d_dec[info_pos]
        ber_est = coding.estimate_ber(app_info)
        ber_true = float(np.mean((app_info > 0) != info_hard))
        stopped = ber_est <= cfg.ter
        stats.append(
            IterationStats(
                iteration=q,
                ber_estimate=ber_est,
                ber_true=ber_true,
                visited_nodes=cum_visited,
                beta_stores=cum_beta,
                non_rwc_count=int(k - flags.g.sum()),
                stopped=stopped,
            )
        )
        if stopped:
            break
        # RWC recheck happens only after the stopping-control check
        if not exact:
            flags = update_rwc_flags(state.l_e_dec, state.l_d_dec, l_ter, tx.perm)
        prev_dec_app = siso.app_llrs
        prev_dec_ext = siso.ext_llrs
    return stats
