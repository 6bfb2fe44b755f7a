"""Deactivation experiments and the functional groups they reveal."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .._parallel import ordered_map
from ..core import NetworkInstance, steps_for
from ..trial import TrialRecord, TrialSpec, evaluate, prune_vector

__all__ = [
    "PruningResult",
    "GroupLabel",
    "GroupLabels",
    "default_pruning_times",
    "prune_sweep",
    "prune_group",
    "classify_groups",
    "group_composition",
]


@dataclass
class PruningResult:
    neuron_id: int
    pruning_times_s: list[float]
    last_spike_times_s: list[float]

    @property
    def mean_s(self) -> float:
        return float(np.mean(self.last_spike_times_s))

    @property
    def stddev_s(self) -> float:
        return float(np.std(self.last_spike_times_s))


class GroupLabel(enum.Enum):
    SUSTAINING = "sustaining"
    STOPPING = "stopping"
    INACTIVE = "inactive"


@dataclass
class GroupLabels:
    labels: dict[int, GroupLabel]

    def members(self, label: GroupLabel) -> list[int]:
        return sorted(n for n, lab in self.labels.items() if lab is label)

    def __getitem__(self, neuron: int) -> GroupLabel:
        return self.labels[neuron]


def default_pruning_times(spec: TrialSpec, step_s: float = 0.1) -> list[float]:
    """Every ``step_s`` through the self-sustained period, end excluded."""
    count = round(spec.target_sustain_s / step_s)
    return [round(spec.stimulation_s + k * step_s, 10) for k in range(count)]


def _time_to_step(spec: TrialSpec, t: float) -> int:
    step = steps_for(1000.0 * t, spec.dt)
    if not 0 <= step <= spec.total_steps:
        raise ValueError(f"pruning time {t} s lies outside the trial")
    return step


def _last_spike_s(record: TrialRecord, spec: TrialSpec) -> float:
    # An output that never spiked is scored as stopping at t = 0.
    last = record.last_output_spike_step
    return 0.0 if last is None else spec.seconds(last)


def prune_group(network: NetworkInstance, spec: TrialSpec, neuron_ids, time_s: float) -> TrialRecord:
    """Run the trial with every neuron in ``neuron_ids`` silenced from ``time_s`` on."""
    step = _time_to_step(spec, time_s)
    return evaluate(network, spec, prune_steps=prune_vector(network, sorted(neuron_ids), step))


def prune_sweep(network: NetworkInstance, spec: TrialSpec, times_s=None, *,
                neurons=None, workers: int | None = 1) -> list[PruningResult]:
    """Silence each neuron alone at each time and record the last output spike.

    ``neurons`` defaults to the hidden layer; ``times_s`` to
    :func:`default_pruning_times`.
    """
    times_s = default_pruning_times(spec) if times_s is None else [float(t) for t in times_s]
    for t in times_s:
        _time_to_step(spec, t)
    neurons = list(network.hidden_ids if neurons is None else neurons)
    cells = [(n, t) for n in neurons for t in times_s]
    lasts = ordered_map(
        lambda cell: _last_spike_s(prune_group(network, spec, [cell[0]], cell[1]), spec),
        cells, workers,
    )
    k = len(times_s)
    return [
        PruningResult(n, list(times_s), lasts[i * k : (i + 1) * k])
        for i, n in enumerate(neurons)
    ]


def classify_groups(results, spec: TrialSpec, margin_s: float | None = None) -> GroupLabels:
    """Label neurons by how their removal moves the stopping time.

    Removal that keeps the network running past the target marks a stopping
    neuron; removal that ends activity early marks a sustaining one.
    """
    if margin_s is None:
        margin_s = 0.25 * spec.target_sustain_s
    target = spec.target_stop_s
    labels = {}
    for res in results:
        mean = res.mean_s
        if mean > target + margin_s:
            labels[res.neuron_id] = GroupLabel.STOPPING
        elif mean < target - margin_s:
            labels[res.neuron_id] = GroupLabel.SUSTAINING
        else:
            labels[res.neuron_id] = GroupLabel.INACTIVE
    return GroupLabels(labels)


def group_composition(labels: GroupLabels, network: NetworkInstance) -> dict[GroupLabel, dict[str, int]]:
    """Excitatory and inhibitory head-counts of each group."""
    out = {}
    for label in GroupLabel:
        members = labels.members(label)
        inh = int(network.inhibitory[members].sum()) if members else 0
        out[label] = {"excitatory": len(members) - inh, "inhibitory": inh}
    return out
