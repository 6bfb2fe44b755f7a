"""The analysis toolkit on a network that keeps firing after its stimulus.

Evolved champions are the intended subject. Lacking one, this script builds
a hand-wired network: a fully connected excitatory core that sustains itself,
plus five inhibitory hidden neurons. It never stops, so it scores poorly,
but it has plenty of self-sustained activity to analyse.
"""

import numpy as np

from persistent_snn import TrialSpec, evaluate
from persistent_snn.analysis import (
    GroupLabel,
    classify_groups,
    export_raster,
    group_composition,
    isi_stats,
    prune_sweep,
    sample_landscape,
    trial_windows,
    weight_sweep,
)
from persistent_snn.analysis.sensitivity import default_grid
from persistent_snn.genome import Genome, GenomeLayout, decode

layout = GenomeLayout()
genes = np.full(layout.total, 0.95)
genes[:layout.kind_gene_count] = 0.9          # all hidden excitatory...
genes[55:60] = 0.1                            # ...except the last five
pre, post = layout.synapse_index
syn = genes[layout.kind_gene_count:]
inhibitory_pre = (pre >= 5 + 55) & (pre < 5 + 60)
syn[inhibitory_pre] = 0.2                     # moderate inhibition
net = decode(Genome(genes, layout))
spec = TrialSpec()

# %% One trial.
rec = evaluate(net, spec)
print(f"{len(rec.spike_log)} spikes; output last fires at {spec.seconds(rec.last_output_spike_step):.4f} s")

# %% Raster with 3.5 ms bins, and population activity per step.
raster = export_raster(rec.spike_log, 3.5)
per_step = rec.spike_log.counts_per_step()
print(f"raster rows: {len(raster)}; neurons spiking per step during sustain: "
      f"{per_step[10_000:30_000].min()}..{per_step[10_000:30_000].max()}")

# %% Interspike intervals in both windows.
for name, window in trial_windows(spec).items():
    st = isi_stats(rec.spike_log, window, neurons=net.hidden_ids, label=name)
    if st.neurons.size:
        print(f"{name:15s}: {st.neurons.size} neurons, mean ISI {st.mean.mean():.2f} ms, "
              f"max CV {st.cv.max():.3f}")

# %% Silencing single neurons. A few pruning times keep this quick.
results = prune_sweep(net, spec, [1.2, 2.0], neurons=list(net.hidden_ids)[::6])
labels = classify_groups(results, spec)
for lab in GroupLabel:
    print(f"{lab.value:10s}: {labels.members(lab)}")
print(group_composition(labels, net))

# %% Sweep three synapses and correlate strength with stopping time.
cmap = weight_sweep(net, spec, default_grid(0.25), synapses=(pre[:3], post[:3]))
print("top synapses (pre, post, |r|):", cmap.top(3))

# %% How often does a random network do anything interesting?
sample = sample_landscape(200, spec, seed=1, workers=None)
print(sample.counts)
