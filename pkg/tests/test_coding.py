import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp

from turbosd import coding
from turbosd.coding import make_rsc_5_7, max_star, siso_decode


@pytest.fixture(scope="module")
def trellis():
    return make_rsc_5_7()


def exhaustive_app(apriori: np.ndarray, n_info: int) -> np.ndarray:
    """A-posteriori LLRs by exact log-sum over all codewords (reference oracle)."""
    cws = np.array(
        [coding.encode(2 * np.array(b) - 1) for b in itertools.product([0, 1], repeat=n_info)],
        dtype=np.float64,
    )
    logp = 0.5 * cws @ apriori
    app = np.empty(apriori.size)
    for k in range(apriori.size):
        pos = cws[:, k] > 0
        app[k] = logsumexp(logp[pos]) - logsumexp(logp[~pos])
    return app


def test_trellis_structure(trellis):
    # 2 outgoing per state, 2 incoming per state
    assert trellis.num_states == 4
    incoming = np.zeros(4, dtype=int)
    for s in range(4):
        assert trellis.next_state[s, 0] != trellis.next_state[s, 1]
        for d in range(2):
            incoming[trellis.next_state[s, d]] += 1
    np.testing.assert_array_equal(incoming, 2)


def test_encode_zero_input(trellis):
    out = coding.encode(-np.ones(10, dtype=np.int8), trellis)
    np.testing.assert_array_equal(out, -1)


def test_encode_impulse_response(trellis):
    # parity stream of input 1,0,0,... is the impulse response of
    # (1 + D^2) / (1 + D + D^2): 1,1,1,0,1,1 (then periodic 0,1,1)
    info = -np.ones(6, dtype=np.int8)
    info[0] = 1
    out = coding.encode(info, trellis)
    np.testing.assert_array_equal(out[0::2][:6], info)
    np.testing.assert_array_equal((out[1::2][:6] + 1) // 2, [1, 1, 1, 0, 1, 1])


@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(1, 40))
def test_encode_always_terminates(seed, n):
    info = 2 * np.random.default_rng(seed).integers(0, 2, n) - 1
    out = coding.encode(info)
    assert out.size == 2 * (n + 2)
    np.testing.assert_array_equal(out[0::2][:n], info)


def test_max_star_values():
    assert max_star(0.0, 0.0) == pytest.approx(math.log(2.0))
    assert max_star(10.0, 0.0) == pytest.approx(10.0 + math.log1p(math.e**-10))
    assert max_star(3.5, -math.inf) == 3.5
    assert max_star(-math.inf, -2.0) == -2.0


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_max_star_is_exact_log_sum_exp(a, b):
    assert max_star(a, b) == pytest.approx(np.logaddexp(a, b), abs=1e-12)


def test_decode_strong_zero_codeword(trellis):
    # strongly negative channel LLRs for the all-zero codeword decode to it
    apriori = -8.0 * np.ones(2 * 12)
    res = siso_decode(apriori, trellis)
    assert np.all(res.app_llrs < 0)


def test_full_decode_matches_exhaustive_oracle(trellis):
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(100):
        n_info = int(rng.integers(2, 11))
        apriori = rng.normal(0.0, 3.0, 2 * (n_info + 2))
        res = siso_decode(apriori, trellis)
        worst = max(worst, np.max(np.abs(res.app_llrs - exhaustive_app(apriori, n_info))))
    assert worst <= 1e-6


def test_extrinsic_identity(trellis):
    apriori = np.random.default_rng(3).normal(0, 2, 40)
    res = siso_decode(apriori, trellis)
    np.testing.assert_allclose(res.ext_llrs, res.app_llrs - apriori, atol=1e-9)


def test_selective_all_false_flags_equals_full(trellis):
    apriori = np.random.default_rng(5).normal(0, 2, 60)
    full = siso_decode(apriori, trellis)
    sel = siso_decode(
        apriori,
        trellis,
        flags=np.zeros(60, dtype=bool),
        prev_app=np.zeros(60),
        prev_ext=np.zeros(60),
    )
    np.testing.assert_array_equal(sel.app_llrs, full.app_llrs)
    assert sel.beta_store_count == full.beta_store_count == 30


def test_selective_wide_window_equals_full(trellis):
    rng = np.random.default_rng(6)
    apriori = rng.normal(0, 2, 60)
    flags = rng.integers(0, 2, 60).astype(bool)
    full = siso_decode(apriori, trellis)
    sel = siso_decode(
        apriori, trellis, flags=flags, w=60, prev_app=np.zeros(60), prev_ext=np.zeros(60)
    )
    np.testing.assert_array_equal(sel.app_llrs, full.app_llrs)


def test_selective_carries_previous_values(trellis):
    rng = np.random.default_rng(7)
    apriori = rng.normal(0, 2, 40)
    flags = np.zeros(40, dtype=bool)
    flags[10:20] = True  # stages 5..9 fully flagged
    prev_app = rng.normal(0, 1, 40)
    prev_ext = rng.normal(0, 1, 40)
    res = siso_decode(apriori, trellis, flags=flags, prev_app=prev_app, prev_ext=prev_ext)
    carried = ~res.decoded_positions
    assert carried.any() and res.decoded_positions.any()
    np.testing.assert_array_equal(res.app_llrs[carried], prev_app[carried])
    np.testing.assert_array_equal(res.ext_llrs[carried], prev_ext[carried])
    full = siso_decode(apriori, trellis)
    np.testing.assert_allclose(
        res.app_llrs[res.decoded_positions], full.app_llrs[res.decoded_positions], atol=1e-12
    )


def test_beta_store_count_is_recomputed_stages_only(trellis):
    rng = np.random.default_rng(8)
    apriori = rng.normal(0, 2, 40)
    flags = np.zeros(40, dtype=bool)
    flags[10:20] = True
    res = siso_decode(apriori, trellis, flags=flags, prev_app=np.zeros(40), prev_ext=np.zeros(40))
    assert res.beta_store_count == 20 - 5


def test_window_widens_recomputation(trellis):
    rng = np.random.default_rng(9)
    apriori = rng.normal(0, 2, 40)
    flags = np.ones(40, dtype=bool)
    flags[20:22] = False  # one non-RWC stage
    zero = np.zeros(40)
    r1 = siso_decode(apriori, trellis, flags=flags, w=1, prev_app=zero, prev_ext=zero)
    r3 = siso_decode(apriori, trellis, flags=flags, w=3, prev_app=zero, prev_ext=zero)
    assert r1.beta_store_count == 1
    assert r3.beta_store_count == 5
    assert r3.decoded_positions.sum() > r1.decoded_positions.sum()


def test_siso_rejects_bad_shapes(trellis):
    with pytest.raises(ValueError):
        siso_decode(np.zeros(7), trellis)
    with pytest.raises(ValueError):
        siso_decode(np.zeros(8), trellis, flags=np.zeros(6, dtype=bool))
    with pytest.raises(ValueError):
        siso_decode(np.zeros(8), trellis, flags=np.zeros(8, dtype=bool), w=0)


def test_info_positions():
    np.testing.assert_array_equal(coding.info_positions(12), [0, 2, 4, 6])
    assert coding.info_positions(18432).size == 9214


def test_estimate_ber_values():
    assert coding.estimate_ber(np.full(5, math.log(499.0))) == pytest.approx(2e-3)
    assert coding.estimate_ber(np.zeros(4)) == pytest.approx(0.5)
    llrs = np.array([0.3, -2.0, 5.0, -0.1])
    direct = np.mean(1.0 / (1.0 + np.exp(np.abs(llrs))))
    assert coding.estimate_ber(llrs) == pytest.approx(direct, abs=1e-12)
