"""Why the default stimulus amplitude is 150.

Each delivered spike moves its target by 3 mV per unit weight (30 x dt).
With five inputs the largest possible kick into a hidden neuron is 15 mV,
about the distance from rest to the spiking threshold region, so weak input
drive leaves the hidden layer silent whatever the weights. This script
scans the amplitude and reports how much of a random population is still
active shortly after the stimulus, and whether a strongly coupled
excitatory network keeps itself going.
"""

import numpy as np

from persistent_snn import StimulusSpec, TrialSpec, decode, evaluate, random_genome
from persistent_snn.genome import Genome, GenomeLayout

layout = GenomeLayout()
clique = np.full(layout.total, 0.85)          # all excitatory, strong coupling

print(" amplitude  hidden spikes  active>=0.9s  clique last spike (s)")
for amplitude in (10.0, 50.0, 100.0, 150.0, 300.0):
    spec = TrialSpec(stimulus=StimulusSpec(amplitude=amplitude))
    hidden, active = [], 0
    for seed in range(40):
        net = decode(random_genome(seed))
        rec = evaluate(net, spec)
        ids = rec.spike_log.neurons
        hidden.append(int(((ids >= 5) & (ids < 65)).sum()))
        last = rec.last_output_spike_step
        active += last is not None and last >= 9000
    last = evaluate(decode(Genome(clique, layout)), spec).last_output_spike_step
    last_s = "never" if last is None else f"{spec.seconds(last):.3f}"
    print(f"{amplitude:10.0f}  {np.mean(hidden):13.0f}  {active:9d}/40  {last_s:>10s}")
