"""How rare are task-solving networks among random genomes?"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._parallel import ordered_map
from ..genome import GenomeLayout, decode, random_genome
from ..trial import TrialSpec, evaluate

__all__ = ["LandscapeSample", "sample_landscape", "landscape_genome"]

SILENT_OR_BRIEF = "silent_or_brief"
STOPPED_IN_WINDOW = "stopped_in_window"
SUSTAINED_FULL_TRIAL = "sustained_full_trial"


@dataclass
class LandscapeSample:
    n_sampled: int
    counts: dict[str, int]
    thresholds: dict[str, int]
    last_spike_steps: np.ndarray  # -1 where the output never spiked
    seed: int

    def fraction(self, bucket: str) -> float:
        return self.counts[bucket] / self.n_sampled

    def to_dict(self) -> dict:
        return {
            "n_sampled": self.n_sampled,
            "seed": self.seed,
            "counts": dict(self.counts),
            "thresholds_steps": dict(self.thresholds),
        }


def landscape_genome(seed: int, index: int, layout: GenomeLayout = GenomeLayout()):
    return random_genome(np.random.SeedSequence(seed, spawn_key=(index,)), layout)


def sample_landscape(n: int, spec: TrialSpec, seed: int, *, layout: GenomeLayout = GenomeLayout(),
                     workers: int | None = 1) -> LandscapeSample:
    """Evaluate ``n`` random genomes and bucket them by last output spike.

    A last spike in the final 1% of the trial counts as sustained for the
    whole trial; one after the target stop (but before that) as a network that
    sustained and then stopped; anything else as silent or brief.
    """
    if n < 1:
        raise ValueError("n must be at least 1")

    def last_step(i):
        last = evaluate(decode(landscape_genome(seed, i, layout)), spec).last_output_spike_step
        return -1 if last is None else last

    lasts = np.array(ordered_map(last_step, range(n), workers), dtype=np.int64)
    total = spec.total_steps
    full_from = total - total // 100
    stop = spec.target_stop_step
    sustained = lasts >= full_from
    stopped = (lasts > stop) & ~sustained
    counts = {
        SILENT_OR_BRIEF: int(n - sustained.sum() - stopped.sum()),
        STOPPED_IN_WINDOW: int(stopped.sum()),
        SUSTAINED_FULL_TRIAL: int(sustained.sum()),
    }
    thresholds = {"target_stop_step": stop, "full_trial_from_step": full_from, "total_steps": total}
    return LandscapeSample(n, counts, thresholds, lasts, seed)
