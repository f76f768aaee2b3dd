"""Acceptance gate: one test per headline result, one PASS/FAIL line each.

Each test prints ``criterion NN: PASS/FAIL — measured values`` so a full
run reads as a checklist.  Tolerances are part of the contract and are
asserted as stated, not loosened to fit.
"""
import json
import math
import time

import numpy as np
import pytest

from franson_sec.attacks import (
    EXPONENT_SQUARED,
    DiagonalAttack,
    MultiPeakShape,
    apply_attack,
    gaussian_grid_weights,
    gaussian_window_attack,
    multipeak_attack,
    product_multipeak_attack,
    sharp_attack,
    square_window_attack,
)
from franson_sec.cli import main
from franson_sec.franson import D2, D3, SettingsBank, coincidence_table, visibility
from franson_sec.mcsim import ZeroVarianceError, compare_to_exact, run_protocol
from franson_sec.metrics import (
    disturbance,
    eve_information,
    window_error_rate,
)
from franson_sec.mubnet import certify_network, effective_povm, synthesize_network
from franson_sec.statevec import BiphotonState, FrameSpec

from _oracle import (
    apply_row_oracle,
    attack_error_oracle,
    coincidence_oracle,
    dense_state,
    random_attack_matrix,
    random_diagonal_amplitudes,
)

M1024 = FrameSpec(1024)


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} — {detail}"
    print(line)
    assert ok, line


def test_criterion_01_matched_flat_comb():
    start = time.perf_counter()
    attack = multipeak_attack(M1024, MultiPeakShape.flat(32, 1))
    p = disturbance(attack, SettingsBank.of(1)).p_error
    elapsed = time.perf_counter() - start
    err = abs(p - 0.015625)
    _report(
        1,
        err <= 1e-12 and elapsed < 1.0,
        f"p_error={p!r} (|err|={err:.1e}), V={visibility(p):.4f}, {elapsed:.2f}s",
    )


def test_criterion_02_hard_window_grid():
    start = time.perf_counter()
    worst = 0.0
    cells = 0
    for L in (2, 4, 8, 16, 32, 64):
        attack = square_window_attack(M1024, L)
        for dt in range(1, L):
            p = disturbance(attack, SettingsBank.of(dt)).p_error
            worst = max(worst, abs(p - dt / (2 * L)))
            cells += 1
        for dt in {L, L + 1, 2 * L, 3 * L + 1}:
            p = disturbance(attack, SettingsBank.of(dt)).p_error
            worst = max(worst, abs(p - 0.5))
            cells += 1
    elapsed = time.perf_counter() - start
    _report(
        2,
        worst <= 1e-9 and elapsed < 10.0,
        f"{cells} (L, dtau) cells, worst |err|={worst:.1e}, {elapsed:.2f}s",
    )


def test_criterion_03_multi_setting_dilution():
    unmatched = [k for k in range(2, 200) if k % 5 and k != 5]
    worst_small = 0.0
    for L in (8, 32):
        attack = multipeak_attack(M1024, MultiPeakShape.flat(L, 5))
        for d in (1, 2, 3, 4):
            bank = SettingsBank.of(5, *unmatched[: d - 1])
            p = disturbance(attack, bank, convention="raw-average").p_error
            worst_small = max(worst_small, abs(p - ((d - 1) * L + 1) / (2 * d * L)))

    deviations = {}
    for L in (8, 32):
        attack = multipeak_attack(M1024, MultiPeakShape.flat(L, 5))
        bank = SettingsBank.of(5, *unmatched[:63])
        p = disturbance(attack, bank, convention="raw-average").p_error
        deviations[L] = abs(p - 0.5)
    _report(
        3,
        worst_small <= 1e-9 and all(dev <= 1e-3 for dev in deviations.values()),
        f"d<=4 worst |err|={worst_small:.1e}; d=64 |p-1/2|="
        + ", ".join(f"{dev:.3e} (L={L})" for L, dev in deviations.items())
        + " vs 1e-3 allowance",
    )


def test_criterion_04_flat_product_point():
    attack = product_multipeak_attack(M1024, 16, (3, 67))
    p = disturbance(attack, SettingsBank.of(3, 67)).p_error
    bits = eve_information(attack)
    _report(
        4,
        p == 1 / 32 and bits == 2.0,
        f"p_error={p!r} (want 1/32 exactly), eve_bits={bits!r} (want 2.0 exactly)",
    )


def _soft_comb_point(L: int, alpha: float) -> tuple[float, float]:
    weights = gaussian_grid_weights(L, 1, alpha, EXPONENT_SQUARED).weights
    attack = multipeak_attack(M1024, MultiPeakShape(L, (1,), weights))
    p = disturbance(attack, SettingsBank.of(1)).p_error
    return eve_information(attack), visibility(p)


def test_criterion_05_soft_comb_operating_points(tmp_path):
    report_path = tmp_path / "verify.json"
    main(["verify", "--out", str(report_path)])
    recorded = json.loads(report_path.read_text())["exponent_mode"]

    bits32, vis32 = _soft_comb_point(32, 0.0335)
    bits64, vis64 = _soft_comb_point(64, 0.0084)
    ok = (
        recorded is not None
        and abs(bits32 - 6.0) <= 0.15
        and abs(vis32 - 0.992) <= 0.003
        and abs(bits64 - 5.0) <= 0.15
        and abs(vis64 - 0.998) <= 0.0015
    )
    _report(
        5,
        ok,
        f"mode={recorded}: (L=32, a=0.0335) -> {bits32:.3f} bits at V={100 * vis32:.2f}%;"
        f" (L=64, a=0.0084) -> {bits64:.3f} bits at V={100 * vis64:.2f}%",
    )


def test_criterion_06_best_leak_under_error_budget():
    start = time.perf_counter()
    best = 0.0
    for i in range(48):
        alpha = round(3e-4 * 1.18**i, 10)
        weights = gaussian_grid_weights(64, 1, alpha, EXPONENT_SQUARED).weights
        attack = multipeak_attack(M1024, MultiPeakShape(64, (1,), weights))
        if disturbance(attack, SettingsBank.of(1)).p_error <= 0.01:
            best = max(best, eve_information(attack))
    elapsed = time.perf_counter() - start
    _report(
        6,
        abs(best - 6.5) <= 0.3 and elapsed < 60.0,
        f"max eve_bits at p_error<=0.01: {best:.3f} (want 6.5±0.3), {elapsed:.1f}s",
    )


def test_criterion_07_soft_product_operating_points():
    results = {}
    for alpha in (0.3, 0.2):
        weights = gaussian_grid_weights(16, 2, alpha, EXPONENT_SQUARED).weights
        attack = product_multipeak_attack(M1024, 16, (3, 67), weights)
        p = disturbance(attack, SettingsBank.of(3, 67)).p_error
        results[alpha] = (eve_information(attack), visibility(p))
    bits3, vis3 = results[0.3]
    bits2, vis2 = results[0.2]
    ok = (
        abs(bits3 - 5.1) <= 0.2
        and abs(vis3 - 0.955) <= 0.005
        and abs(bits2 - 4.5) <= 0.2
        and abs(vis2 - 0.967) <= 0.005
    )
    _report(
        7,
        ok,
        f"a=0.3 -> {bits3:.3f} bits at V={100 * vis3:.2f}% (want 5.1±0.2 at 95.5±0.5%);"
        f" a=0.2 -> {bits2:.3f} bits at V={100 * vis2:.2f}% (want 4.5±0.2 at 96.7±0.5%)",
    )


def test_criterion_08_undisturbed_and_fully_collapsed():
    bank = SettingsBank.of(1, 2, 7)
    p_clean = disturbance(None, bank, frame=M1024).p_error
    p_sharp = disturbance(sharp_attack(M1024), bank).p_error
    _report(
        8,
        p_clean <= 1e-14 and p_sharp == 0.5,
        f"no attack p_error={p_clean!r}, sharp attack p_error={p_sharp!r}",
    )


def test_criterion_09_wrong_spacing_is_blind():
    attack = multipeak_attack(M1024, MultiPeakShape.flat(32, 3))
    worst = max(
        abs(disturbance(attack, SettingsBank.of(dt)).p_error - 0.5) for dt in (5, 7)
    )
    _report(9, worst <= 1e-12, f"comb spacing 3 probed at 5 and 7: |p-1/2|<={worst:.1e}")


def test_criterion_10_randomized_oracle_corpus():
    rng = np.random.default_rng(20260815)
    attacks = 0
    worst = 0.0
    for m in range(2, 17):
        frame = FrameSpec(m)
        for _ in range(7):
            lam = random_attack_matrix(rng, m)
            c = random_diagonal_amplitudes(rng, m)
            state = BiphotonState(
                frame, {(n, n): complex(v) for n, v in enumerate(c) if v != 0}
            )
            psi = dense_state(state)
            dt = int(rng.integers(1, m))
            rows = {
                k: {n: float(v) for n, v in enumerate(lam[k]) if v > 0}
                for k in range(lam.shape[0])
            }
            attack = DiagonalAttack(frame, rows)
            setting = next(iter(SettingsBank.of(dt)))

            for k in range(lam.shape[0]):
                prob_ref, post_ref = apply_row_oracle(psi, lam[k])
                if prob_ref < 1e-15:
                    continue
                outcome = apply_attack(state, attack, outcome=k)
                worst = max(worst, abs(outcome.probability - prob_ref))
                worst = max(
                    worst, np.abs(dense_state(outcome.post_state) - post_ref).max()
                )
                table = coincidence_table(outcome.post_state, setting, setting)
                ref_weights, ref_total, _ = coincidence_oracle(post_ref, dt, dt)
                worst = max(worst, abs(table.total_weight - ref_total))
                sign = {+1: D2, -1: D3}
                for (sa, sb, r), w_ref in ref_weights.items():
                    worst = max(worst, abs(table.weight(sign[sa], sign[sb], r) - w_ref))

            p = disturbance(attack, SettingsBank.of(dt), state=state).p_error
            worst = max(worst, abs(p - attack_error_oracle(psi, lam, dt, cyclic=True)))
            attacks += 1
    _report(
        10,
        attacks >= 100 and worst <= 1e-12,
        f"{attacks} random attacks on M=2..16, worst |dev| vs dense oracle {worst:.1e}",
    )


def test_criterion_11_monte_carlo_presets():
    from franson_sec.cli import _SIM_PRESETS, _protocol_from_config

    cases = {"flat-comb": 1 / 64, "no-attack": 0.0, "sharp": 0.5}
    hits = {}
    slowest = 0.0
    for name, exact in cases.items():
        inside = 0
        for seed in range(100):
            start = time.perf_counter()
            stats = run_protocol(_protocol_from_config(_SIM_PRESETS[name], seed))
            slowest = max(slowest, time.perf_counter() - start)
            try:
                if abs(compare_to_exact(stats, exact)) <= 3:
                    inside += 1
            except ZeroVarianceError:
                pass
        hits[name] = inside

    protocol = _protocol_from_config(_SIM_PRESETS["flat-comb"], 17)
    identical = run_protocol(protocol).to_json() == run_protocol(protocol).to_json()

    _report(
        11,
        all(v >= 95 for v in hits.values()) and identical and slowest < 30.0,
        f"within 3 sigma: {hits} /100 seeds; rerun byte-identical: {identical};"
        f" slowest run {slowest:.2f}s",
    )


def test_criterion_12_analyzer_trees():
    worst = 0.0
    blocks_ok = True
    for depth in range(1, 6):
        net = synthesize_network(depth)
        blocks_ok &= net.num_blocks == 2**depth - 1
        worst = max(worst, max(certify_network(net).values()))

    outcomes = sorted(effective_povm(synthesize_network(1)), key=lambda o: o.output)
    even, odd = (tuple(o.vector) for o in outcomes)
    analytic = (
        even == (0.5 + 0j, 0.5 + 0j)
        and odd in ((0.5 + 0j, -0.5 + 0j), (-0.5 + 0j, 0.5 + 0j))
        and all(o.success_probability == 0.5 for o in outcomes)
    )
    _report(
        12,
        blocks_ok and worst <= 1e-10 and analytic,
        f"depths 1..5 certified, worst deviation {worst:.1e};"
        f" depth-1 outcomes exactly (|0>±|1>)/2 at success 1/2: {analytic}",
    )


def test_criterion_13_soft_window_dominates():
    from scipy.optimize import brentq

    frame = FrameSpec(64)
    target = math.log2(64) - math.log2(6)
    a_star = brentq(
        lambda a: eve_information(gaussian_window_attack(frame, a)) - target,
        1e-4,
        256.0,
        xtol=1e-12,
    )
    attack = gaussian_window_attack(frame, a_star)
    info_gap = abs(eve_information(attack) - target)
    margins = []
    for dt in range(1, 13):
        p_soft = disturbance(attack, SettingsBank.of(dt)).p_error
        margins.append(window_error_rate(6, dt) - p_soft)
    _report(
        13,
        info_gap <= 1e-9 and all(m > 0 for m in margins),
        f"width a*={a_star:.4f} (leak matched to {target:.4f} bits),"
        f" min hard-minus-soft margin {min(margins):.3e} over dtau=1..12",
    )
