import numpy as np
import pytest

from csicalib import (
    QualityThresholds,
    SimConfig,
    VariationStats,
    classify,
    classify_losses,
    simulate_capture,
    stats_to_csv,
    variation_stats,
)
from csicalib.errors import InsufficientData

from conftest import REALISTIC_DISTORTION, make_record


def _stats(zero_fraction=(0.0, 0.0, 0.0), agc=(28, 28, 28), n_rx=3):
    pairs = ((1, 0), (2, 1), (0, 2))
    return VariationStats(
        amp_mean_dbm=np.zeros((n_rx, 30)),
        amp_std_db=np.zeros((n_rx, 30)),
        phase_mean_deg=np.zeros((len(pairs), 30)),
        phase_std_deg=np.zeros((len(pairs), 30)),
        zero_fraction=np.asarray(zero_fraction, dtype=float),
        pairs=pairs,
        agc_readouts=tuple(agc),
        port_power_mean_dbm={p: -40.0 for p in range(n_rx)},
        n_records=len(agc),
    )


def test_identical_records_zero_variation(consts):
    rng = np.random.default_rng(21)
    csi = (rng.integers(-40, 41, (30, 3, 1))
           + 1j * rng.integers(-40, 41, (30, 3, 1))).astype(complex)
    records = [make_record(csi=csi.copy()) for _ in range(10)]
    stats = variation_stats(records, consts)
    np.testing.assert_allclose(stats.port_amp_std_db(), 0.0, atol=1e-9)
    np.testing.assert_allclose(stats.pair_phase_std_deg(), 0.0, atol=1e-9)
    np.testing.assert_allclose(stats.zero_fraction, 0.0)


def test_variation_stats_needs_two_records(consts):
    with pytest.raises(InsufficientData):
        variation_stats([make_record()], consts)


def test_classify_losses_examples():
    assert classify_losses([33, 30, 36]) == "Reliable"
    assert classify_losses([66, 66, 66]) == "Unstable"
    assert classify_losses([23, 50, 50]) == "Degraded"
    assert classify_losses([30, 80, 80]) == "PhaseUnmeasurable"
    assert classify_losses([30, None, 80]) == "PhaseUnmeasurable"


def test_classify_balanced_losses(consts):
    verdict = classify(_stats(), [33, 30, 36])
    assert verdict.cls == "Reliable"
    assert verdict.reasons == []


def test_classify_degraded_spread(consts):
    verdict = classify(_stats(), [23, 50, 50])
    assert verdict.cls == "Degraded"
    assert any(r["check"] == "loss_spread" for r in verdict.reasons)


def test_classify_unstable(consts):
    verdict = classify(_stats(), [66, 66, 66])
    assert verdict.cls == "Unstable"
    assert any(r["check"] == "max_loss" for r in verdict.reasons)


def test_classify_unmeasurable_from_zero_fraction(consts):
    verdict = classify(_stats(zero_fraction=(0.0, 1.0, 1.0)), [30, 80, 80])
    assert verdict.cls == "PhaseUnmeasurable"
    checks = {r["check"] for r in verdict.reasons}
    assert "zero_fraction" in checks


def test_classify_agc_pinning(consts):
    low = classify(_stats(agc=(26, 26, 26)), [20, 20, 20])
    assert low.cls == "AgcSaturatedLow"
    high = classify(_stats(agc=(63, 63, 63)), [55, 55, 55])
    assert high.cls == "AgcSaturatedHigh"
    mixed = classify(_stats(agc=(26, 27, 26)), [33, 30, 36])
    assert mixed.cls == "Reliable"


def test_classify_precedence(consts):
    # unmeasurable spread plus a pinned AGC: the spread wins
    verdict = classify(_stats(agc=(63, 63, 63)), [20, 55, 55])
    assert verdict.cls == "PhaseUnmeasurable"
    # over-ceiling loss plus pinned AGC: unstable wins
    verdict = classify(_stats(agc=(63, 63, 63)), [61, 61, 61])
    assert verdict.cls == "Unstable"


_SEVERITY = {
    "Reliable": 0,
    "Degraded": 1,
    "AgcSaturatedHigh": 2,
    "AgcSaturatedLow": 2,
    "Unstable": 3,
    "PhaseUnmeasurable": 4,
}


def test_classify_losses_monotone_in_max_port():
    # raising only the already-largest loss never improves the class
    rng = np.random.default_rng(31)
    for _ in range(200):
        losses = sorted(rng.uniform(15, 75, 3))
        before = classify_losses(losses)
        bumped = losses[:2] + [losses[2] + float(rng.uniform(0, 30))]
        after = classify_losses(bumped)
        assert _SEVERITY[after] >= _SEVERITY[before]


def test_classify_losses_permutation_invariant():
    rng = np.random.default_rng(32)
    for _ in range(100):
        losses = list(rng.uniform(15, 90, 3))
        ref = classify_losses(losses)
        for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
            assert classify_losses([losses[i] for i in perm]) == ref


def test_simulated_capture_stats_bounds(consts):
    config = SimConfig(attenuation_db=(33.0, 30.0, 36.0), n_packets=60, seed=4)
    records = simulate_capture(config, REALISTIC_DISTORTION)
    stats = variation_stats(records, consts)
    assert np.all(stats.port_amp_std_db() < 0.5)
    assert np.all(stats.pair_phase_std_deg() < 3.0)
    assert np.all(stats.zero_fraction < 0.01)
    # measured port powers track tx minus attenuation to within ~1.5 dB
    for p, att in enumerate(config.attenuation_db):
        assert stats.port_power_mean_dbm[p] == pytest.approx(
            config.tx_power_dbm - att, abs=1.5
        )


def test_stats_to_csv_shape(consts):
    config = SimConfig(attenuation_db=(33.0, 30.0, 36.0), n_packets=20, seed=4)
    stats = variation_stats(simulate_capture(config, REALISTIC_DISTORTION), consts)
    text = stats_to_csv([("run1", stats)])
    lines = text.strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("label,amp_std_port1_db")
    assert lines[1].startswith("run1,")
