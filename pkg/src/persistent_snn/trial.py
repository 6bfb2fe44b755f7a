"""The memory task: stimulate, sustain, fall silent, and score the timing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import NetworkInstance, SpikeLog, StimulusSpec, run_trial, steps_for

__all__ = [
    "ConfigurationError",
    "TrialSpec",
    "TrialRecord",
    "fitness",
    "evaluate",
    "LATE_SIGMA_STEPS",
    "EARLY_SIGMA_FRACTION",
]

EARLY_SIGMA_FRACTION = 0.35
LATE_SIGMA_STEPS = 1e3


class ConfigurationError(ValueError):
    """Invalid trial or run configuration."""


def fitness(x: float, s: float) -> float:
    """Gaussian score of the last output spike step ``x`` against the target ``s``.

    The width is ``0.35 * s`` for early stops and a fixed 1000 steps for late
    ones, so overshooting the deadline is punished much harder.
    """
    if not s > 0:
        raise ConfigurationError(f"target stop step must be positive, got {s!r}")
    if x < 0:
        raise ValueError(f"last spike step must be non-negative, got {x!r}")
    sigma = EARLY_SIGMA_FRACTION * s if x <= s else LATE_SIGMA_STEPS
    return math.exp(-((x - s) ** 2) / (2.0 * sigma**2))


@dataclass(frozen=True)
class TrialSpec:
    """Protocol timing (seconds) and stimulus. ``dt`` is in ms."""

    target_sustain_s: float = 2.0
    stimulation_s: float = 1.0
    silence_window_s: float = 4.0
    dt: float = 0.1
    stimulus: StimulusSpec = field(default_factory=StimulusSpec)

    def __post_init__(self):
        for name in ("target_sustain_s", "stimulation_s", "silence_window_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be a non-negative number, got {value!r}")
        if self.stimulation_s + self.target_sustain_s <= 0:
            raise ConfigurationError("target stop time must be positive")
        try:
            steps_for(1.0, self.dt)
            for seconds in (self.stimulation_s, self.target_sustain_s, self.silence_window_s):
                steps_for(1000.0 * seconds, self.dt)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def with_target(self, target_sustain_s: float) -> "TrialSpec":
        return replace(self, target_sustain_s=target_sustain_s)

    @property
    def duration_s(self) -> float:
        return self.stimulation_s + self.target_sustain_s + self.silence_window_s

    @property
    def stimulation_steps(self) -> int:
        return steps_for(1000.0 * self.stimulation_s, self.dt)

    @property
    def target_stop_step(self) -> int:
        return steps_for(1000.0 * (self.stimulation_s + self.target_sustain_s), self.dt)

    @property
    def total_steps(self) -> int:
        return self.target_stop_step + steps_for(1000.0 * self.silence_window_s, self.dt)

    @property
    def target_stop_s(self) -> float:
        return self.stimulation_s + self.target_sustain_s

    def seconds(self, step) -> float:
        return step * self.dt / 1000.0

    def to_dict(self) -> dict:
        stim = self.stimulus
        return {
            "target_sustain_s": self.target_sustain_s,
            "stimulation_s": self.stimulation_s,
            "silence_window_s": self.silence_window_s,
            "dt_ms": self.dt,
            "stimulus": {
                "amplitude": stim.amplitude,
                "pattern": "constant" if not stim.periodic
                else {"on_steps": stim.on_steps, "off_steps": stim.off_steps},
            },
        }


@dataclass(eq=False)
class TrialRecord:
    spike_log: SpikeLog
    last_output_spike_step: int | None
    fitness: float

    def __eq__(self, other):
        if not isinstance(other, TrialRecord):
            return NotImplemented
        return (
            self.last_output_spike_step == other.last_output_spike_step
            and self.fitness == other.fitness
            and self.spike_log == other.spike_log
        )

    def to_dict(self) -> dict:
        return {"last_output_spike_step": self.last_output_spike_step, "fitness": self.fitness}


def evaluate(network: NetworkInstance, spec: TrialSpec, *, prune_steps=None,
             early_exit: bool = True) -> TrialRecord:
    """Run the full protocol and score the output neuron's last spike.

    A network whose output never spikes is scored as if it stopped at step 0.
    """
    log = run_trial(
        network, spec.stimulus, spec.total_steps, dt=spec.dt,
        stimulation_steps=spec.stimulation_steps, prune_steps=prune_steps,
        early_exit=early_exit,
    )
    last = log.last_spike_step(network.output_ids)
    score = fitness(0 if last is None else last, spec.target_stop_step)
    return TrialRecord(log, last, score)


def prune_vector(network: NetworkInstance, neurons, step: int) -> np.ndarray:
    """Per-neuron silencing steps with ``neurons`` silenced from ``step`` on."""
    prune = np.full(network.n_neurons, np.iinfo(np.int64).max, dtype=np.int64)
    prune[list(neurons)] = step
    return prune
