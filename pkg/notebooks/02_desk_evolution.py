"""Evolving a small network for a short sustain target.

Twenty hidden neurons, a 0.5 s target, a population of 64. The run is cut
short here; raise ``GENERATIONS`` for a real attempt.
"""

import tempfile
from pathlib import Path

from persistent_snn import GAConfig, GenomeLayout, Schedule, TrialSpec, evolve
from persistent_snn.evolution import load_checkpoint

GENERATIONS = 30

layout = GenomeLayout(n_inputs=5, n_hidden=20, n_outputs=1)
spec = TrialSpec(target_sustain_s=0.5, stimulation_s=1.0, silence_window_s=2.0)
config = GAConfig(population_size=64, max_generations=GENERATIONS, master_seed=0)


def show(record):
    if record.generation % 5 == 0:
        print(f"gen {record.generation:4d}  target {record.stage_target_s:.1f} s  "
              f"best {record.best_fitness:.4f}  mean {record.mean_fitness:.4f}")


# %% Evolve, checkpointing as we go.
workdir = Path(tempfile.mkdtemp())
result = evolve(config, Schedule((0.5, 1.0)), spec, layout=layout, workers=None,
                checkpoint_path=workdir / "checkpoint.json", checkpoint_interval=10, callback=show)
print("champions:", sorted(result.champions), "failed stage:", result.failed_stage)

# %% The best generation score translated back into a stopping time.
# On the early branch fitness = exp(-(x - s)^2 / (2 (0.35 s)^2)), so
# x = s (1 - 0.35 sqrt(-2 ln f)).
import math

best = float(max(result.log.best_fitness()))
s = spec.target_stop_step
x = s * (1 - 0.35 * math.sqrt(-2 * math.log(best)))
print(f"best fitness {best:.4f} ~ output stops {spec.seconds(x) - spec.stimulation_s:.3f} s after the stimulus")

# %% Checkpoints hold everything needed to continue.
state = load_checkpoint(workdir / "checkpoint.json")["state"]
print(f"checkpoint at generation {state.generation}, {len(state.population)} genomes")
