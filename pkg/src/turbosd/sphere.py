# Depth-first soft-input/soft-output sphere decoder: Schnorr-Euchner
# enumeration, single-tree-search per-bit radii, selective update of flagged
# bits, and the performance-driven clipping policies, plus an exhaustive
# max-log oracle kept independent of the tree search.
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channel import ChannelUse
from .modem import Constellation

__all__ = [
    "MODES",
    "SdConfig",
    "SdResult",
    "RadiusSet",
    "prior_metric_block",
    "partial_distance",
    "clip_radius",
    "prune_check",
    "soft_demap",
    "brute_force_maxlog",
]

MODES = ("exact", "su", "su_pdc", "su_spdc", "su_dapdc", "su_sdapdc")
_MODE_CODE = {m: i for i, m in enumerate(MODES)}
_MODE_CODE["su_only"] = _MODE_CODE["su"]

# Stand-in magnitude for a missing counter-hypothesis (unreachable for
# unflagged bits; kept finite so downstream arithmetic stays clean).
_BIG_LLR = 1e9


@dataclass
class SdConfig:
    """Sphere-decoder policy: clipping mode, LLR threshold, noise variance."""

    clipping_mode: str
    noise_var: float
    l_ter: float = np.inf

    def __post_init__(self):
        if self.clipping_mode == "su_only":
            self.clipping_mode = "su"
        if self.clipping_mode not in MODES:
            raise ValueError(f"unknown clipping mode: {self.clipping_mode!r}")
        if self.clipping_mode in ("exact", "su"):
            self.l_ter = np.inf
        if not self.l_ter >= 0:
            raise ValueError(f"need l_ter >= 0, got {self.l_ter}")
        if not self.noise_var > 0:
            raise ValueError(f"need noise_var > 0, got {self.noise_var}")

    @property
    def mode_code(self) -> int:
        return _MODE_CODE[self.clipping_mode]


@dataclass
class SdResult:
    app_llrs: np.ndarray
    ext_llrs: np.ndarray
    visited_nodes: int
    skipped_bits: int


@dataclass
class RadiusSet:
    """Per-bit hypothesis/counter-hypothesis radii of a single-tree search.

    r2[k, 0] / r2[k, 1] hold the best metric found so far among leaves whose
    k-th bit is -1 / +1; lam_hat is the best overall leaf metric and c_map the
    corresponding bit pattern.
    """

    r2: np.ndarray
    lam_hat: float = np.inf
    c_map: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.c_map is None:
            self.c_map = np.ones(self.r2.shape[0], dtype=np.int8)


def prior_metric_block(bits, l_a, exclude_bit: int | None = None) -> float:
    """A-priori metric of one hypothesis block: sum of 0.5*(|L_A| - c*L_A).

    Same-sign (likely) bits contribute zero; exclude_bit drops one position
    (the extrinsic form).
    """
    bits = np.asarray(bits, dtype=np.float64)
    l_a = np.asarray(l_a, dtype=np.float64)
    terms = 0.5 * (np.abs(l_a) - bits * l_a)
    if exclude_bit is not None:
        terms[exclude_bit] = 0.0
    return float(terms.sum())


def partial_distance(
    parent_pd: float,
    level: int,
    symbols,
    bits_block,
    y_rot: np.ndarray,
    r_mat: np.ndarray,
    l_a: np.ndarray,
    noise_var: float,
) -> float:
    """One recursion step of the tree metric D(s^(l)) = D(s^(l+1)) + increments.

    level is 1-based (root children at level m_t, leaves at level 1); symbols
    holds the fixed symbols for antennas level..m_t and bits_block the bipolar
    labeling of the level's own symbol.
    """
    m_t = r_mat.shape[0]
    if not 1 <= level <= m_t:
        raise ValueError(f"level must be in [1, {m_t}], got {level}")
    row = level - 1
    resid = y_rot[row] - np.dot(r_mat[row, row:], np.asarray(symbols))
    i_channel = float(np.abs(resid) ** 2) / noise_var
    bps = len(bits_block)
    i_prior = prior_metric_block(bits_block, l_a[row * bps : (row + 1) * bps])
    return parent_pd + i_channel + i_prior


def _sphere_radius(mode_code: int, lam_hat: float, c_hat: float, l_a_k: float, l_ter: float) -> float:
    """Search-hypersphere radius of the given clipping policy for one bit."""
    s = 1.0 if l_a_k >= 0.0 else -1.0
    if mode_code == 2:  # PDC
        return lam_hat + abs(l_a_k) + l_ter + 0.5 * (c_hat - s) * l_a_k
    if mode_code == 3:  # sPDC
        return lam_hat + abs(l_a_k) + l_ter + (c_hat - s) * l_a_k
    if mode_code == 4:  # DA-PDC
        return lam_hat + l_ter + 0.5 * (c_hat - s) * (c_hat * abs(l_a_k) + l_a_k)
    if mode_code == 5:  # sDA-PDC
        return lam_hat + l_ter
    return np.inf


def _fallback_radius(mode_code: int, lam_hat: float, c_hat: float, l_a_k: float, l_ter: float) -> float:
    """Radius used to floor counter-hypothesis metrics when a new MAP is found.

    PDC-family modes fall back to the PDC radius, the simplified modes to the
    sPDC radius.
    """
    s = 1.0 if l_a_k >= 0.0 else -1.0
    if mode_code in (2, 4):
        return lam_hat + abs(l_a_k) + l_ter + 0.5 * (c_hat - s) * l_a_k
    return lam_hat + abs(l_a_k) + l_ter + (c_hat - s) * l_a_k


def clip_radius(mode: str, k: int, l_a_k: float, radius_set: RadiusSet, l_ter: float) -> float:
    """The mode's hypersphere radius for bit k given the current search state."""
    code = _MODE_CODE[mode]
    if code < 2 or not np.isfinite(radius_set.lam_hat):
        return np.inf
    return _sphere_radius(code, radius_set.lam_hat, float(radius_set.c_map[k]), l_a_k, l_ter)


def prune_check(
    pd: float,
    fixed_bits,
    radius_set: RadiusSet,
    mode: str,
    l_a: np.ndarray,
    l_ter: float,
) -> bool:
    """True if a node with partial distance pd survives the constraint check.

    fixed_bits is the node's already-determined bit pattern as (k, value)
    pairs; all other bits count as undetermined (both radii relevant).
    """
    n_bits = radius_set.r2.shape[0]
    fixed = dict(fixed_bits)
    thr = -np.inf
    for k in range(n_bits):
        ck = clip_radius(mode, k, float(l_a[k]), radius_set, l_ter)
        if k in fixed:
            col = (int(fixed[k]) + 1) // 2
            thr = max(thr, min(radius_set.r2[k, col], ck))
        else:
            thr = max(thr, min(radius_set.r2[k, 0], ck), min(radius_set.r2[k, 1], ck))
    return not pd > thr


@njit(cache=True)
def _refresh(r2, flags, lam, c_map, l_a, mode, l_ter, eff, bit_max, undet_cum, m_t, bps):
    """Recompute effective radii and their per-antenna maxima; returns the global max."""
    n_bits = r2.shape[0]
    clip_active = mode >= 2 and lam < np.inf
    for k in range(n_bits):
        ck = np.inf
        if clip_active and flags[k] == 0:
            la = l_a[k]
            s = 1.0 if la >= 0.0 else -1.0
            chat = c_map[k]
            if mode == 2:
                ck = lam + abs(la) + l_ter + 0.5 * (chat - s) * la
            elif mode == 3:
                ck = lam + abs(la) + l_ter + (chat - s) * la
            elif mode == 4:
                ck = lam + l_ter + 0.5 * (chat - s) * (chat * abs(la) + la)
            else:
                ck = lam + l_ter
        e0 = r2[k, 0] if r2[k, 0] < ck else ck
        e1 = r2[k, 1] if r2[k, 1] < ck else ck
        eff[k, 0] = e0
        eff[k, 1] = e1
        bit_max[k] = e0 if e0 > e1 else e1
    undet_cum[0] = -np.inf
    for a in range(m_t):
        m = undet_cum[a]
        for j in range(bps):
            bm = bit_max[a * bps + j]
            if bm > m:
                m = bm
        undet_cum[a + 1] = m
    return undet_cum[m_t]


@njit(cache=True)
def _expand(depth, parent_d, path, r_mat, y_rot, points, prior_inc, inv2s, order, dval, m_t, n_sym):
    """Score all children of the current node and sort them (Schnorr-Euchner)."""
    a = m_t - 1 - depth
    tail = 0.0 + 0.0j
    for dd in range(depth):
        tail += r_mat[a, m_t - 1 - dd] * points[path[dd]]
    base = y_rot[a] - tail
    for si in range(n_sym):
        resid = base - r_mat[a, a] * points[si]
        d = parent_d + (resid.real * resid.real + resid.imag * resid.imag) * inv2s
        d += prior_inc[a, si]
        # stable insertion sort, ascending metric
        pos = si
        while pos > 0 and dval[depth, pos - 1] > d:
            dval[depth, pos] = dval[depth, pos - 1]
            order[depth, pos] = order[depth, pos - 1]
            pos -= 1
        dval[depth, pos] = d
        order[depth, pos] = si


@njit(cache=True)
def _sts_search(r_mat, y_rot, points, bits_table, l_a, flags, mode, l_ter, noise_var):
    """Single-tree-search over one channel use; returns (a-posteriori LLRs, visited)."""
    m_t = r_mat.shape[0]
    n_sym, bps = bits_table.shape
    n_bits = m_t * bps
    inv2s = 1.0 / noise_var

    r2 = np.full((n_bits, 2), np.inf)
    for k in range(n_bits):
        if flags[k] != 0:
            r2[k, 0] = 0.0
            r2[k, 1] = 0.0
    lam = np.inf
    c_map = np.ones(n_bits, dtype=np.int8)

    # per-(antenna, symbol) a-priori increments
    prior_inc = np.zeros((m_t, n_sym))
    for a in range(m_t):
        for si in range(n_sym):
            acc = 0.0
            for j in range(bps):
                la = l_a[a * bps + j]
                acc += 0.5 * (abs(la) - bits_table[si, j] * la)
            prior_inc[a, si] = acc

    eff = np.empty((n_bits, 2))
    bit_max = np.empty(n_bits)
    undet_cum = np.empty(m_t + 1)
    glob_max = _refresh(r2, flags, lam, c_map, l_a, mode, l_ter, eff, bit_max, undet_cum, m_t, bps)

    order = np.empty((m_t, n_sym), dtype=np.int64)
    dval = np.empty((m_t, n_sym))
    ptr = np.zeros(m_t, dtype=np.int64)
    path = np.zeros(m_t, dtype=np.int64)
    pd_stack = np.zeros(m_t)
    leaf_bits = np.empty(n_bits, dtype=np.int8)

    visited = n_sym
    _expand(0, 0.0, path, r_mat, y_rot, points, prior_inc, inv2s, order, dval, m_t, n_sym)
    depth = 0

    while depth >= 0:
        if ptr[depth] >= n_sym:
            ptr[depth] = 0
            depth -= 1
            continue
        i = ptr[depth]
        ptr[depth] += 1
        ci = order[depth, i]
        d = dval[depth, i]
        if d > glob_max:
            # SE order: every remaining sibling is at least as far
            ptr[depth] = n_sym
            continue
        # constraint check against the searches this node can still affect
        a_child = m_t - 1 - depth
        thr = undet_cum[a_child]
        pruned = False
        if d > thr:
            pruned = True
            for dd in range(depth + 1):
                aa = m_t - 1 - dd
                si = ci if dd == depth else path[dd]
                for j in range(bps):
                    k = aa * bps + j
                    col = (bits_table[si, j] + 1) >> 1
                    if eff[k, col] >= d:
                        pruned = False
                        break
                if not pruned:
                    break
        if pruned:
            continue
        if depth == m_t - 1:
            # leaf: update subset radii, the MAP candidate, and any clip floors
            path[depth] = ci
            for dd in range(m_t):
                aa = m_t - 1 - dd
                si = path[dd]
                for j in range(bps):
                    leaf_bits[aa * bps + j] = bits_table[si, j]
            for k in range(n_bits):
                col = (leaf_bits[k] + 1) >> 1
                if d < r2[k, col]:
                    r2[k, col] = d
            if d < lam:
                lam = d
                for k in range(n_bits):
                    c_map[k] = leaf_bits[k]
                if mode >= 2:
                    for k in range(n_bits):
                        if flags[k] != 0:
                            continue
                        la = l_a[k]
                        s = 1.0 if la >= 0.0 else -1.0
                        chat = c_map[k]
                        if mode == 2 or mode == 4:
                            fb = lam + abs(la) + l_ter + 0.5 * (chat - s) * la
                        else:
                            fb = lam + abs(la) + l_ter + (chat - s) * la
                        if fb < r2[k, 0]:
                            r2[k, 0] = fb
                        if fb < r2[k, 1]:
                            r2[k, 1] = fb
            glob_max = _refresh(
                r2, flags, lam, c_map, l_a, mode, l_ter, eff, bit_max, undet_cum, m_t, bps
            )
        else:
            path[depth] = ci
            pd_stack[depth] = d
            depth += 1
            ptr[depth] = 0
            visited += n_sym
            _expand(depth, d, path, r_mat, y_rot, points, prior_inc, inv2s, order, dval, m_t, n_sym)

    l_d = np.zeros(n_bits)
    for k in range(n_bits):
        if flags[k] != 0:
            continue
        if c_map[k] == 1:
            v = r2[k, 0] - lam
        else:
            v = lam - r2[k, 1]
        if not np.isfinite(v):
            v = c_map[k] * _BIG_LLR
        l_d[k] = v
    return l_d, visited


def soft_demap(
    use: ChannelUse,
    l_a: np.ndarray,
    cfg: SdConfig,
    constellation: Constellation,
    rwc_flags: np.ndarray | None = None,
    prev_app: np.ndarray | None = None,
    prev_ext: np.ndarray | None = None,
) -> SdResult:
    """Soft demapping of one channel use via the single-tree-search SD.

    Flagged (RWC) bits are skipped: their per-bit radii are zeroed at the
    start of the search and their outputs are copied from the previous
    iteration. In the clipping modes, per-bit searches are constrained to the
    policy's hypersphere and unresolved counter-hypotheses are floored at the
    fallback radius, producing clipped LLRs.
    """
    m_t = use.r.shape[0]
    bps = constellation.bits_per_symbol
    n_bits = m_t * bps
    l_a = np.asarray(l_a, dtype=np.float64)
    if l_a.shape != (n_bits,):
        raise ValueError(f"expected {n_bits} a-priori LLRs, got shape {l_a.shape}")
    if rwc_flags is None:
        flags = np.zeros(n_bits, dtype=np.uint8)
    else:
        flags = np.asarray(rwc_flags).astype(np.uint8)
        if flags.shape != (n_bits,):
            raise ValueError(f"expected {n_bits} flags, got shape {flags.shape}")
    if cfg.clipping_mode == "exact" and flags.any():
        raise ValueError("exact mode does not consult RWC flags")
    skipped = int(flags.sum())
    if skipped and (prev_app is None or prev_ext is None):
        raise ValueError("skipped bits need previous-iteration LLRs")

    if skipped == n_bits:
        return SdResult(
            app_llrs=np.array(prev_app, dtype=np.float64),
            ext_llrs=np.array(prev_ext, dtype=np.float64),
            visited_nodes=0,
            skipped_bits=skipped,
        )

    l_d, visited = _sts_search(
        use.r,
        use.y_rot,
        constellation.points,
        constellation.bits_table,
        l_a,
        flags,
        cfg.mode_code,
        cfg.l_ter,
        cfg.noise_var,
    )
    ext = l_d - l_a
    if skipped:
        sel = flags.astype(bool)
        l_d[sel] = np.asarray(prev_app)[sel]
        ext[sel] = np.asarray(prev_ext)[sel]
    return SdResult(app_llrs=l_d, ext_llrs=ext, visited_nodes=int(visited), skipped_bits=skipped)


def brute_force_maxlog(
    use: ChannelUse, l_a: np.ndarray, constellation: Constellation
) -> np.ndarray:
    """Exact max-log LLRs by exhaustive enumeration (reference oracle)."""
    m_t = use.r.shape[0]
    points = constellation.points
    n_sym, bps = constellation.bits_table.shape
    n_bits = m_t * bps
    if n_sym**m_t > 2**20:
        raise ValueError(f"enumeration guard exceeded: |S|^m_t = {n_sym**m_t}")
    l_a = np.asarray(l_a, dtype=np.float64)
    grids = np.indices((n_sym,) * m_t).reshape(m_t, -1)  # antenna-major index tuples
    sym = points[grids]
    resid = use.y_rot[:, None] - use.r @ sym
    i_channel = np.sum(np.abs(resid) ** 2, axis=0) / use.noise_var
    bits = constellation.bits_table[grids]  # (m_t, n_cand, bps)
    bits = np.transpose(bits, (1, 0, 2)).reshape(-1, n_bits).astype(np.float64)
    i_prior = np.sum(0.5 * (np.abs(l_a)[None, :] - bits * l_a[None, :]), axis=1)
    metric = i_channel + i_prior
    llrs = np.empty(n_bits)
    for k in range(n_bits):
        pos = bits[:, k] > 0
        llrs[k] = metric[~pos].min() - metric[pos].min()
    return llrs
