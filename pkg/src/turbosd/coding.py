# Rate-1/2 recursive systematic convolutional (5/7)_8 code: encoder, trellis
# tables, and a log-MAP BCJR SISO decoder with optional selective (windowed)
# decoding and backward-metric store counting.
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.ndimage import binary_dilation

__all__ = [
    "Trellis",
    "SisoResult",
    "make_rsc_5_7",
    "encode",
    "max_star",
    "siso_decode",
    "estimate_ber",
    "info_positions",
]

_NEG = -1e300  # log-domain "impossible" sentinel, absorbed exactly by max*


@dataclass(frozen=True)
class Trellis:
    """State-transition tables of a terminated rate-1/2 RSC code.

    State s encodes the shift register (m1, m2) as 2*m1 + m2. For input bit
    d in {0, 1}: next_state[s, d], parity[s, d] in {0, 1}; the systematic
    output equals d. tail_input[s] is the input that steps s toward state 0.
    """

    num_states: int
    next_state: np.ndarray
    parity: np.ndarray
    tail_input: np.ndarray
    num_tail: int = 2


def make_rsc_5_7() -> Trellis:
    """(5/7)_8 RSC: feedback 1+D+D^2 (7_8), feedforward 1+D^2 (5_8)."""
    ns = 4
    next_state = np.empty((ns, 2), dtype=np.int64)
    parity = np.empty((ns, 2), dtype=np.int64)
    tail_input = np.empty(ns, dtype=np.int64)
    for s in range(ns):
        m1, m2 = s >> 1, s & 1
        for d in range(2):
            a = d ^ m1 ^ m2
            next_state[s, d] = (a << 1) | m1
            parity[s, d] = a ^ m2
        tail_input[s] = m1 ^ m2
    return Trellis(num_states=ns, next_state=next_state, parity=parity, tail_input=tail_input)


def encode(info_bits: np.ndarray, trellis: Trellis | None = None) -> np.ndarray:
    """Encode a bipolar info sequence; output [sys, par] pairs incl. 2 tail steps."""
    if trellis is None:
        trellis = make_rsc_5_7()
    info = (np.asarray(info_bits) > 0).astype(np.int64)
    n_info = info.size
    out = np.empty(2 * (n_info + trellis.num_tail), dtype=np.int8)
    s = 0
    for t in range(n_info + trellis.num_tail):
        d = int(info[t]) if t < n_info else int(trellis.tail_input[s])
        out[2 * t] = 2 * d - 1
        out[2 * t + 1] = 2 * int(trellis.parity[s, d]) - 1
        s = int(trellis.next_state[s, d])
    assert s == 0, "trellis not terminated"
    return out


def max_star(a: float, b: float) -> float:
    """Exact Jacobian logarithm max(a,b) + ln(1 + exp(-|a-b|))."""
    hi, lo = (a, b) if a >= b else (b, a)
    if lo - hi < -745.0 or math.isinf(lo):  # exp underflow / -inf sentinel
        return hi
    return hi + math.log1p(math.exp(lo - hi))


@njit(cache=True)
def _bcjr_pass(l_a, next_state, parity, tail_input, n_info, decode_mask):
    """Full log-MAP forward/backward recursions; LLR output at masked stages."""
    n_stages = l_a.size // 2
    ns = next_state.shape[0]
    alpha = np.full((n_stages + 1, ns), _NEG)
    beta = np.full((n_stages + 1, ns), _NEG)
    alpha[0, 0] = 0.0
    beta[n_stages, 0] = 0.0

    for t in range(n_stages):
        la0 = l_a[2 * t]
        la1 = l_a[2 * t + 1]
        tail = t >= n_info
        for s in range(ns):
            am = alpha[t, s]
            if am <= _NEG:
                continue
            for d in range(2):
                if tail and d != tail_input[s]:
                    continue
                g = 0.5 * ((2 * d - 1) * la0 + (2 * parity[s, d] - 1) * la1)
                sp = next_state[s, d]
                x = am + g
                y = alpha[t + 1, sp]
                if x < y:
                    x, y = y, x
                alpha[t + 1, sp] = x + np.log1p(np.exp(y - x))

    for t in range(n_stages - 1, -1, -1):
        la0 = l_a[2 * t]
        la1 = l_a[2 * t + 1]
        tail = t >= n_info
        for s in range(ns):
            acc = _NEG
            for d in range(2):
                if tail and d != tail_input[s]:
                    continue
                bm = beta[t + 1, next_state[s, d]]
                if bm <= _NEG:
                    continue
                g = 0.5 * ((2 * d - 1) * la0 + (2 * parity[s, d] - 1) * la1)
                x = bm + g
                if x < acc:
                    x, acc = acc, x
                acc = x + np.log1p(np.exp(acc - x))
            beta[t, s] = acc

    app = np.zeros(2 * n_stages)
    beta_stores = 0
    for t in range(n_stages):
        if not decode_mask[t]:
            continue
        beta_stores += 1
        la0 = l_a[2 * t]
        la1 = l_a[2 * t + 1]
        tail = t >= n_info
        sys_pos = _NEG
        sys_neg = _NEG
        par_pos = _NEG
        par_neg = _NEG
        for s in range(ns):
            am = alpha[t, s]
            if am <= _NEG:
                continue
            for d in range(2):
                if tail and d != tail_input[s]:
                    continue
                p = parity[s, d]
                g = 0.5 * ((2 * d - 1) * la0 + (2 * p - 1) * la1)
                m = am + g + beta[t + 1, next_state[s, d]]
                if d == 1:
                    x, y = (m, sys_pos) if m >= sys_pos else (sys_pos, m)
                    sys_pos = x + np.log1p(np.exp(y - x))
                else:
                    x, y = (m, sys_neg) if m >= sys_neg else (sys_neg, m)
                    sys_neg = x + np.log1p(np.exp(y - x))
                if p == 1:
                    x, y = (m, par_pos) if m >= par_pos else (par_pos, m)
                    par_pos = x + np.log1p(np.exp(y - x))
                else:
                    x, y = (m, par_neg) if m >= par_neg else (par_neg, m)
                    par_neg = x + np.log1p(np.exp(y - x))
        app[2 * t] = sys_pos - sys_neg
        app[2 * t + 1] = par_pos - par_neg
    return app, beta_stores


@dataclass
class SisoResult:
    app_llrs: np.ndarray
    ext_llrs: np.ndarray
    beta_store_count: int
    decoded_positions: np.ndarray  # bool mask over the K coded-bit positions


def _window_mask(flags: np.ndarray, n_stages: int, w: int) -> np.ndarray:
    """Stages to recompute: within w-1 steps of any stage holding a non-RWC bit."""
    non_rwc = ~(flags.reshape(n_stages, 2).all(axis=1))
    if w >= n_stages:
        return np.ones(n_stages, dtype=bool) if non_rwc.any() else non_rwc
    if w == 1:
        return non_rwc
    return binary_dilation(non_rwc, structure=np.ones(2 * w - 1, dtype=bool))


def siso_decode(
    apriori: np.ndarray,
    trellis: Trellis,
    flags: np.ndarray | None = None,
    w: int = 1,
    prev_app: np.ndarray | None = None,
    prev_ext: np.ndarray | None = None,
) -> SisoResult:
    """Log-MAP BCJR over the full block.

    With flags given, decoding is selective: LLRs are recomputed only at
    trellis stages within a window of w steps centered on each non-RWC bit,
    other positions carry the previous iteration's values, and the beta-store
    counter covers only the recomputed stages.
    """
    apriori = np.asarray(apriori, dtype=np.float64)
    if apriori.size % 2 != 0:
        raise ValueError("a-priori length must be even (rate-1/2 code)")
    n_stages = apriori.size // 2
    n_info = n_stages - trellis.num_tail

    if flags is None:
        mask = np.ones(n_stages, dtype=bool)
    else:
        flags = np.asarray(flags, dtype=bool)
        if flags.shape != apriori.shape:
            raise ValueError("flags length must match a-priori length")
        if w < 1:
            raise ValueError(f"need w >= 1, got {w}")
        mask = _window_mask(flags, n_stages, w)

    app, beta_stores = _bcjr_pass(
        apriori, trellis.next_state, trellis.parity, trellis.tail_input, n_info, mask
    )
    bit_mask = np.repeat(mask, 2)
    ext = app - apriori
    if flags is not None and not mask.all():
        if prev_app is None or prev_ext is None:
            raise ValueError("selective decode needs previous-iteration LLRs")
        app = np.where(bit_mask, app, prev_app)
        ext = np.where(bit_mask, ext, prev_ext)
    return SisoResult(
        app_llrs=app, ext_llrs=ext, beta_store_count=int(beta_stores), decoded_positions=bit_mask
    )


def info_positions(k: int, num_tail: int = 2) -> np.ndarray:
    """Indices of the systematic information bits in a K-bit coded block."""
    n_info = k // 2 - num_tail
    return 2 * np.arange(n_info)


def estimate_ber(app_llrs_info: np.ndarray) -> float:
    """Post-decoding BER estimate: mean of 1/(1 + exp(|L|)) over the info bits."""
    mag = np.abs(np.asarray(app_llrs_info, dtype=np.float64))
    if mag.size == 0:
        raise ValueError("empty LLR vector")
    e = np.exp(-mag)
    return float(np.mean(e / (1.0 + e)))
