"""Spike-train statistics and binned raster export."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import SpikeLog, steps_for
from ..trial import TrialSpec

__all__ = ["ISIStats", "isi_stats", "RasterTable", "export_raster", "trial_windows"]


def trial_windows(spec: TrialSpec) -> dict[str, tuple[float, float]]:
    """Stimulated and self-sustained periods of a trial, in seconds."""
    return {
        "stimulated": (0.0, spec.stimulation_s),
        "self_sustained": (spec.stimulation_s, spec.target_stop_s),
    }


@dataclass
class ISIStats:
    """Per-neuron interspike-interval statistics inside one window.

    ``neurons`` lists the neurons with at least two spikes in the window; the
    statistic arrays are aligned with it. Standard deviations use the
    population (divide by N) form. ``deviation`` is ``std - mean``.
    """

    window: tuple[float, float]
    label: str | None
    neurons: np.ndarray
    isis: dict[int, np.ndarray]
    mean: np.ndarray
    std: np.ndarray
    deviation: np.ndarray
    cv: np.ndarray
    omitted: list[int] = field(default_factory=list)

    def pooled_isis(self) -> np.ndarray:
        if not self.isis:
            return np.empty(0)
        return np.concatenate([self.isis[n] for n in self.neurons.tolist()])

    def rows(self):
        for k, n in enumerate(self.neurons.tolist()):
            yield n, len(self.isis[n]) + 1, self.mean[k], self.std[k], self.deviation[k], self.cv[k]


def isi_stats(log: SpikeLog, window: tuple[float, float], dt: float | None = None, *,
              neurons=None, label: str | None = None) -> ISIStats:
    """ISI statistics (ms) from consecutive spikes with ``start <= t < end`` (s)."""
    dt = log.dt if dt is None else dt
    start_s, end_s = window
    if end_s < start_s:
        raise ValueError("window end precedes its start")
    lo = steps_for(1000.0 * start_s, dt)
    hi = steps_for(1000.0 * end_s, dt)
    sel = (log.steps >= lo) & (log.steps < hi)
    steps, ids = log.steps[sel], log.neurons[sel]
    if neurons is None:
        neurons = range(log.n_neurons)
    kept, isis, omitted = [], {}, []
    for n in neurons:
        train = steps[ids == n]
        if len(train) < 2:
            omitted.append(int(n))
            continue
        kept.append(int(n))
        isis[int(n)] = np.diff(train) * dt
    mean = np.array([isis[n].mean() for n in kept])
    std = np.array([isis[n].std() for n in kept])
    return ISIStats(
        window=(start_s, end_s), label=label, neurons=np.array(kept, dtype=np.int64),
        isis=isis, mean=mean, std=std, deviation=std - mean,
        cv=std / mean if kept else np.empty(0), omitted=omitted,
    )


@dataclass
class RasterTable:
    """Spike counts per (bin, neuron), nonzero cells only, plus per-step totals."""

    bin_ms: float
    rows: np.ndarray  # (k, 3): bin_index, neuron_id, spike_count
    counts_per_step: np.ndarray

    def __len__(self):
        return len(self.rows)

    def counts_per_neuron(self, n_neurons: int) -> np.ndarray:
        if not len(self.rows):
            return np.zeros(n_neurons, dtype=np.int64)
        return np.bincount(self.rows[:, 1], weights=self.rows[:, 2], minlength=n_neurons).astype(np.int64)


def _bin_index(steps: np.ndarray, dt: float, bin_ms: float) -> np.ndarray:
    ratio = bin_ms / dt
    whole = round(ratio)
    if whole >= 1 and abs(ratio - whole) <= 1e-9 * ratio:
        return steps // whole
    return np.floor(steps * dt / bin_ms).astype(np.int64)


def export_raster(log: SpikeLog, bin_ms: float) -> RasterTable:
    if not bin_ms > 0:
        raise ValueError("bin_ms must be positive")
    per_step = log.counts_per_step()
    if not len(log):
        return RasterTable(bin_ms, np.empty((0, 3), dtype=np.int64), per_step)
    bins = _bin_index(log.steps, log.dt, bin_ms)
    cells, counts = np.unique(np.stack([bins, log.neurons], axis=1), axis=0, return_counts=True)
    rows = np.column_stack([cells, counts]).astype(np.int64)
    return RasterTable(bin_ms, rows, per_step)
