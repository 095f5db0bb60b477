"""Deterministic receiver-chain simulator for cabled attenuator experiments.

Models one transmit port feeding three receive ports through a power
divider and independent attenuators: a static (optionally multipath)
channel, complex white Gaussian noise at the receiver input, strongest-port
AGC steering to a fixed ADC target, integer quantization of the CSI
components, and integer RSSI readouts.  Zero CSI on badly unbalanced
channels emerges from quantization alone, not from a hard-coded rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .ingest import CalibrationConstants, N_SUBCARRIERS, RawCsiRecord
from .powercalib import check_ratio_consistency
from .quality import (
    QualityThresholds,
    QualityVerdict,
    VariationStats,
    classify,
    variation_stats,
)


@dataclass(frozen=True)
class MultipathTap:
    """One propagation path: linear gain, phase offset, and a per-subcarrier
    phase slope standing in for the path delay."""

    gain: float = 1.0
    phase_deg: float = 0.0
    delay_slope_deg: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    """Ground-truth description of the cabled chain.

    noise_floor_dbm is the aggregate in-band noise power per port, spread
    evenly over the 30 subcarriers; None disables noise.  quantize=False is
    a diagnostic mode that skips CSI rounding/clipping and RSSI rounding so
    the analysis pipeline can be checked against exact values.
    """

    tx_power_dbm: float = -3.0
    attenuation_db: tuple[float, ...] = (30.0, 30.0, 30.0)
    multipath: tuple[MultipathTap, ...] = (MultipathTap(),)
    noise_floor_dbm: float | None = -92.0
    adc_target_dbm: float = -5.0
    adc_ref_amplitude: float = 30.0
    agc_min_db: int = 26
    agc_max_db: int = 63
    n_packets: int = 100
    seed: int = 0
    quantize: bool = True
    c_fixed_db: float = 44.0

    def validate(self) -> None:
        if self.n_packets < 1:
            raise ConfigError("n_packets must be >= 1")
        if not 1 <= len(self.attenuation_db) <= 3:
            raise ConfigError("attenuation_db needs 1 to 3 entries")
        if len(self.multipath) < 1:
            raise ConfigError("at least one multipath tap required")
        if self.noise_floor_dbm is not None and \
                self.noise_floor_dbm >= self.tx_power_dbm:
            raise ConfigError("noise floor must sit below transmit power")
        if self.agc_min_db >= self.agc_max_db:
            raise ConfigError("agc_min_db must be < agc_max_db")


@dataclass(frozen=True)
class PhaseDistortion:
    """Oscillator-induced phase terms, common to all ports except delta_deg.

    cfo_rate_deg drifts the common phase per packet, sfo_slope_deg adds a
    per-subcarrier slope growing per packet, pdd_jitter_deg is a random
    common offset per packet, and delta_deg are the constant per-port
    offsets from the PLL locking point.
    """

    cfo_rate_deg: float = 0.0
    sfo_slope_deg: float = 0.0
    pdd_jitter_deg: float = 0.0
    delta_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)


def _unit_channel(config: SimConfig) -> np.ndarray:
    """Complex channel shape normalized to unit total power over subcarriers."""
    k = np.arange(N_SUBCARRIERS)
    h = np.zeros(N_SUBCARRIERS, dtype=np.complex128)
    for tap in config.multipath:
        h += tap.gain * np.exp(1j * np.deg2rad(tap.phase_deg + tap.delay_slope_deg * k))
    norm = math.sqrt(float(np.sum(np.abs(h) ** 2)))
    if norm == 0.0:
        raise ConfigError("multipath taps cancel to a zero channel")
    return h / norm


def simulate_capture(
    config: SimConfig, distortion: PhaseDistortion | None = None
) -> list[RawCsiRecord]:
    """Produce a deterministic capture of records for the configured chain."""
    config.validate()
    if distortion is None:
        distortion = PhaseDistortion()
    rng = np.random.default_rng(config.seed)
    n_rx = len(config.attenuation_db)
    u = _unit_channel(config)  # (K,)
    k = np.arange(N_SUBCARRIERS)

    port_power_lin = np.array(
        [10.0 ** ((config.tx_power_dbm - a) / 10.0) for a in config.attenuation_db]
    )
    # Per-subcarrier complex signal per port; sum over subcarriers of |x|^2
    # equals the port power in mW.
    x = np.sqrt(port_power_lin)[:, None] * u[None, :]  # (n_rx, K)

    if config.noise_floor_dbm is None:
        noise_scale = 0.0
    else:
        per_sub = 10.0 ** (config.noise_floor_dbm / 10.0) / N_SUBCARRIERS
        noise_scale = math.sqrt(per_sub / 2.0)

    # Count scale: a port whose amplified power hits the ADC target digitizes
    # to adc_ref_amplitude counts per subcarrier on a flat channel.
    kappa = config.adc_ref_amplitude * math.sqrt(N_SUBCARRIERS) / \
        10.0 ** (config.adc_target_dbm / 20.0)

    delta = np.deg2rad(np.asarray(distortion.delta_deg[:n_rx]))
    records: list[RawCsiRecord] = []
    for t in range(config.n_packets):
        common = (
            distortion.cfo_rate_deg * t
            + distortion.sfo_slope_deg * k * t
            + (rng.normal(0.0, distortion.pdd_jitter_deg) if distortion.pdd_jitter_deg else 0.0)
        )
        rot = np.exp(1j * (np.deg2rad(common)[None, :] + delta[:, None]))
        noise = noise_scale * (
            rng.standard_normal((n_rx, N_SUBCARRIERS))
            + 1j * rng.standard_normal((n_rx, N_SUBCARRIERS))
        )
        y = x * rot + noise  # (n_rx, K)

        p_meas = 10.0 * np.log10(np.sum(np.abs(y) ** 2, axis=1))
        agc = int(
            np.clip(
                round(config.adc_target_dbm - float(p_meas.max())),
                config.agc_min_db,
                config.agc_max_db,
            )
        )
        gain = kappa * 10.0 ** (agc / 20.0)
        counts = gain * y
        if config.quantize:
            re = np.clip(np.round(counts.real), -128, 127)
            im = np.clip(np.round(counts.imag), -128, 127)
            counts = re + 1j * im
            rssi = tuple(
                int(np.clip(round(float(p) + agc + config.c_fixed_db), 0, 255))
                for p in p_meas
            )
        else:
            rssi = tuple(float(p) + agc + config.c_fixed_db for p in p_meas)
        rssi = tuple(rssi) + (0,) * (3 - n_rx)

        csi = counts.T[:, :, None]  # (K, n_rx, 1)
        records.append(
            RawCsiRecord(
                timestamp_low=(t * 1024) & 0xFFFFFFFF,
                bfee_count=t & 0xFFFF,
                n_rx=n_rx,
                n_tx=1,
                rssi=rssi,
                noise=-92,
                agc=agc,
                antenna_perm=(0, 1, 2),
                rate_flags=0x0100,
                csi=csi,
            )
        )
    return records


@dataclass
class SweepResult:
    """Full-pipeline outcome for one sweep configuration."""

    config: SimConfig
    stats: VariationStats
    verdict: QualityVerdict
    ratio_max_abs_db: dict[str, float]
    rssi_deviation_db: dict[int, float]
    records: list[RawCsiRecord] = field(repr=False, default_factory=list)


def run_sweep(
    configs: list[SimConfig],
    distortion: PhaseDistortion | None = None,
    consts: CalibrationConstants | None = None,
    thresholds: QualityThresholds = QualityThresholds(),
    keep_records: bool = False,
) -> list[SweepResult]:
    """Simulate, calibrate, and classify each configuration in turn.

    Loss estimates for classification come from the simulator ground truth
    (the configured attenuations).  Results only depend on each entry's own
    config and seed, so order is immaterial.
    """
    if not configs:
        raise ConfigError("empty sweep")
    results = []
    for config in configs:
        if consts is None:
            run_consts = CalibrationConstants(
                c_fixed=config.c_fixed_db,
                agc_min=config.agc_min_db,
                agc_max=config.agc_max_db,
            )
        else:
            run_consts = consts
        records = simulate_capture(config, distortion)
        stats = variation_stats(records, run_consts)
        verdict = classify(stats, config.attenuation_db, thresholds, run_consts)

        ratio_max: dict[str, float] = {}
        for record in records:
            if len(record.present_ports()) < 2:
                continue
            for pr in check_ratio_consistency(record, run_consts):
                if math.isnan(pr.discrepancy_db):
                    continue
                ratio_max[pr.label] = max(
                    ratio_max.get(pr.label, 0.0), abs(pr.discrepancy_db)
                )

        deviation = {
            p: stats.port_power_mean_dbm[p]
            - (config.tx_power_dbm - config.attenuation_db[p])
            for p in stats.port_power_mean_dbm
        }
        results.append(
            SweepResult(
                config=config,
                stats=stats,
                verdict=verdict,
                ratio_max_abs_db=ratio_max,
                rssi_deviation_db=deviation,
                records=records if keep_records else [],
            )
        )
    return results


def with_attenuation(config: SimConfig, attenuation_db) -> SimConfig:
    return replace(config, attenuation_db=tuple(float(a) for a in attenuation_db))
