import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from franson_sec.franson import (
    CYCLIC,
    D2,
    D3,
    TRUNCATED,
    DegenerateCoincidenceError,
    FransonSetting,
    SettingsBank,
    coincidence_table,
    joint_detection_continuous,
    p_error,
    p_error_continuous,
    projection_state,
    visibility,
)
from franson_sec.statevec import BiphotonState, EnvelopeFunction, FrameSpec, uniform_biphoton

from _oracle import coincidence_oracle, dense_state, error_rate_oracle

R2 = 1 / math.sqrt(2)


def test_setting_validation():
    with pytest.raises(ValueError):
        FransonSetting(0)
    FransonSetting(3).validate_for(FrameSpec(8))
    with pytest.raises(ValueError):
        FransonSetting(8).validate_for(FrameSpec(8))


def test_settings_bank_rejects_duplicates():
    with pytest.raises(ValueError):
        SettingsBank.of(2, 2)
    bank = SettingsBank.of(1, 3, 5)
    assert [s.delta_tau for s in bank] == [1, 3, 5]
    assert len(bank) == 3


def test_projection_wraps_cyclically():
    frame = FrameSpec(8)
    s = projection_state(0, FransonSetting(2), +1, frame)
    assert s.amplitude(0) == pytest.approx(R2)
    assert s.amplitude(6) == pytest.approx(R2)
    assert not s.subnormalized


def test_projection_truncated_drops_early_bin():
    frame = FrameSpec(8)
    s = projection_state(1, FransonSetting(2), -1, frame, indexing=TRUNCATED)
    assert s.amplitude(1) == pytest.approx(R2)
    assert s.norm_sq() == pytest.approx(0.5)
    assert s.subnormalized


def test_two_peak_state_quarter_error():
    # coherence between bins 5 and 7 probed at delay 2: the mismatch
    # weight is a quarter of the same-bin coincidences
    frame = FrameSpec(16)
    state = BiphotonState(frame, {(5, 5): R2, (7, 7): R2})
    setting = FransonSetting(2)
    assert p_error(state, setting, setting) == pytest.approx(0.25, abs=1e-12)


@given(dt=st.integers(1, 15))
def test_uniform_state_is_undisturbed(dt):
    state = uniform_biphoton(FrameSpec(16))
    setting = FransonSetting(dt)
    assert p_error(state, setting, setting) == pytest.approx(0.0, abs=1e-14)


def test_single_bin_state_is_maximally_random():
    # no coherence at all: every detector pairing is equally likely
    frame = FrameSpec(4)
    state = BiphotonState(frame, {(1, 1): 1.0})
    setting = FransonSetting(1)
    table = coincidence_table(state, setting, setting)
    values = {
        table.weight(D2, D2, r) + table.weight(D3, D3, r) for r in (1, 2)
    }
    for sa in (D2, D3):
        for sb in (D2, D3):
            assert table.weight(sa, sb, 1) == pytest.approx(table.weight(sa, sb, 2))
    assert p_error(state, setting, setting) == pytest.approx(0.5)
    assert len(values) == 1


def test_sign_pair_symmetry_for_diagonal_states():
    frame = FrameSpec(8)
    state = BiphotonState(frame, {(2, 2): R2, (5, 5): R2 * 1j})
    setting = FransonSetting(3)
    table = coincidence_table(state, setting, setting)
    for r in range(8):
        assert table.weight(D2, D3, r) == pytest.approx(table.weight(D3, D2, r))
        assert table.weight(D2, D2, r) == pytest.approx(table.weight(D3, D3, r))


def test_degenerate_truncated_table_raises():
    # a single early bin probed with unequal delays reaches no same-bin
    # coincidence once the edge bins are dropped
    frame = FrameSpec(8)
    state = BiphotonState(frame, {(0, 0): 1.0})
    with pytest.raises(DegenerateCoincidenceError):
        p_error(state, FransonSetting(2), FransonSetting(3), indexing=TRUNCATED)


def test_edge_loss_is_tallied():
    frame = FrameSpec(8)
    state = BiphotonState(frame, {(0, 0): R2, (5, 5): R2})
    setting = FransonSetting(2)
    table = coincidence_table(state, setting, setting, indexing=TRUNCATED)
    oracle_weights, oracle_total, oracle_edge = coincidence_oracle(
        dense_state(state), 2, 2, cyclic=False
    )
    assert table.edge_loss == pytest.approx(oracle_edge, abs=1e-12)
    assert table.total_weight == pytest.approx(oracle_total, abs=1e-12)


def test_visibility():
    assert visibility(0.0) == 1.0
    assert visibility(0.25) == pytest.approx(0.5)
    assert visibility(0.5) == 0.0
    with pytest.raises(ValueError):
        visibility(0.6)


@st.composite
def sparse_biphotons(draw):
    m = draw(st.integers(4, 16))
    npairs = draw(st.integers(1, 4))
    pairs = draw(
        st.lists(
            st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)),
            min_size=npairs,
            max_size=npairs,
            unique=True,
        )
    )
    amps = {}
    for pair in pairs:
        re = draw(st.floats(-1, 1, allow_nan=False))
        im = draw(st.floats(-1, 1, allow_nan=False))
        if re or im:
            amps[pair] = complex(re, im)
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    if norm == 0.0:  # everything drawn zero or underflowed
        amps, norm = {pairs[0]: 1.0}, 1.0
    return BiphotonState(FrameSpec(m), {k: v / norm for k, v in amps.items()})


@given(
    state=sparse_biphotons(),
    dta=st.integers(1, 3),
    dtb=st.integers(1, 3),
    cyclic=st.booleans(),
)
@settings(max_examples=120, deadline=None)
def test_table_matches_dense_enumeration(state, dta, dtb, cyclic):
    indexing = CYCLIC if cyclic else TRUNCATED
    table = coincidence_table(
        state, FransonSetting(dta), FransonSetting(dtb), indexing=indexing
    )
    weights, total, edge = coincidence_oracle(
        dense_state(state), dta, dtb, cyclic=cyclic
    )
    sign = {+1: D2, -1: D3}
    for (sa, sb, r), w in weights.items():
        assert table.weight(sign[sa], sign[sb], r) == pytest.approx(w, abs=1e-12)
    assert table.total_weight == pytest.approx(total, abs=1e-12)
    assert table.edge_loss == pytest.approx(edge, abs=1e-12)
    # and no spurious entries beyond the oracle's
    recorded = sum(table.weights.values())
    assert recorded == pytest.approx(total, abs=1e-12)


@given(state=sparse_biphotons(), dt=st.integers(1, 3))
@settings(max_examples=80, deadline=None)
def test_p_error_matches_oracle(state, dt):
    setting = FransonSetting(dt)
    try:
        p = p_error(state, setting, setting)
    except DegenerateCoincidenceError:
        return
    assert p == pytest.approx(error_rate_oracle(dense_state(state), dt), abs=1e-12)


# --- continuous-time statistics ------------------------------------------


def _diagonal_tophat(m: int) -> EnvelopeFunction:
    c = 1 / math.sqrt(m)

    def g(t1, t2):
        if 0 <= t1 < m and 0 <= t2 < m and math.floor(t1) == math.floor(t2):
            return c
        return 0.0

    return EnvelopeFunction(g, t_min=0.0, t_max=float(m))


def test_continuous_densities_sum_rule():
    env = _diagonal_tophat(8)
    t1, t2 = 3.3, 3.7
    total = sum(
        joint_detection_continuous(env, t1, t2, 1.0, 1.0, det_a=da, det_b=db)
        for da in (D2, D3)
        for db in (D2, D3)
    )
    expected = 0.25 * (
        abs(env(t1, t2)) ** 2
        + abs(env(t1 - 1, t2)) ** 2
        + abs(env(t1, t2 - 1)) ** 2
        + abs(env(t1 - 1, t2 - 1)) ** 2
    )
    assert total == pytest.approx(expected, abs=1e-14)


def test_continuous_uniform_envelope_no_error():
    env = _diagonal_tophat(8)
    p = p_error_continuous(env, FrameSpec(8), 1.0, 1.0, samples_per_bin=6)
    assert p == pytest.approx(0.0, abs=1e-9)


def test_continuous_single_bin_is_random():
    def g(t1, t2):
        if 2 <= t1 < 3 and 2 <= t2 < 3:
            return 1.0
        return 0.0

    env = EnvelopeFunction(g, t_min=2.0, t_max=3.0)
    p = p_error_continuous(env, FrameSpec(8), 1.0, 1.0, samples_per_bin=6)
    assert p == pytest.approx(0.5, abs=1e-9)
