"""Differential phase extraction and circular statistics.

The raw per-port phase drifts packet to packet with the common oscillator
offsets; differencing two ports of the same chip cancels every common term
and leaves only the channel phase difference plus a constant per-port
offset, so the differential series is the stable observable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import AbsentPort, InsufficientData, ZeroEntry
from .ingest import RawCsiRecord


def wrap_deg(angle_deg):
    """Wrap angles (scalar or array) to (-180, 180]."""
    return 180.0 - np.mod(180.0 - np.asarray(angle_deg, dtype=float), 360.0)


def raw_phase(csi_entry: complex) -> float:
    """Four-quadrant angle of a complex CSI sample, degrees in (-180, 180]."""
    if csi_entry == 0:
        raise ZeroEntry("phase of a zero sample is undefined")
    return float(wrap_deg(np.degrees(np.angle(csi_entry))))


def differential_phase(
    record: RawCsiRecord, pair: tuple[int, int], tx: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Per-subcarrier phase difference between two ports of one record.

    Returns (phase_deg, unmeasurable_mask); masked entries hold NaN.
    """
    i, j = pair
    for port in (i, j):
        if port >= record.n_rx or record.rssi[port] == 0:
            raise AbsentPort(f"port {port + 1} absent")
    hi = record.csi[:, i, tx]
    hj = record.csi[:, j, tx]
    mask = (hi == 0) | (hj == 0)
    phase = np.full(hi.shape, np.nan)
    ok = ~mask
    phase[ok] = wrap_deg(np.degrees(np.angle(hi[ok])) - np.degrees(np.angle(hj[ok])))
    return phase, mask


@dataclass
class DifferentialPhaseSeries:
    """Differential phase of one ordered port pair over a whole capture."""

    pair: tuple[int, int]
    phase_deg: np.ndarray = field(repr=False)        # (packets, subcarriers), NaN where masked
    unmeasurable_mask: np.ndarray = field(repr=False)  # same shape, bool

    @property
    def label(self) -> str:
        return f"{self.pair[0] + 1}/{self.pair[1] + 1}"


def differential_series(
    records: list[RawCsiRecord], pair: tuple[int, int], tx: int = 0
) -> DifferentialPhaseSeries:
    """Stack per-record differential phases into a capture-long series."""
    phases = []
    masks = []
    for record in records:
        phase, mask = differential_phase(record, pair, tx=tx)
        phases.append(phase)
        masks.append(mask)
    return DifferentialPhaseSeries(
        pair=pair,
        phase_deg=np.array(phases),
        unmeasurable_mask=np.array(masks),
    )


def circular_stats(angles_deg) -> dict[str, float]:
    """Mean and spread of wrapped angles.

    The mean is the angle of the mean unit vector; the spread is the
    population standard deviation of deviations wrapped to (-180, 180]
    around that mean.  For the small dispersions this toolkit cares about
    it coincides with the familiar linear standard deviation.
    """
    a = np.asarray(angles_deg, dtype=float).reshape(-1)
    a = a[~np.isnan(a)]
    if a.size < 2:
        raise InsufficientData("need at least two angles")
    z = np.exp(1j * np.deg2rad(a))
    mean = float(wrap_deg(np.degrees(np.angle(z.mean()))))
    dev = wrap_deg(a - mean)
    return {"mean_deg": mean, "std_deg": float(np.sqrt(np.mean(dev**2)))}


def series_to_csv(series_list: list[DifferentialPhaseSeries]) -> str:
    """CSV export: packet index, subcarrier, pair, phase_deg, unmeasurable."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["packet", "subcarrier", "pair", "phase_deg", "unmeasurable"])
    for series in series_list:
        n_pkt, n_sc = series.phase_deg.shape
        for t in range(n_pkt):
            for k in range(n_sc):
                masked = bool(series.unmeasurable_mask[t, k])
                value = "" if masked else f"{series.phase_deg[t, k]:.6f}"
                writer.writerow([t, k, series.label, value, int(masked)])
    return buf.getvalue()
