"""A first look: one regular-spiking neuron, then one random network trial.

Run with ``python3 notebooks/01_neurons_and_trials.py``.
"""

import numpy as np

from persistent_snn import NetworkInstance, StimulusSpec, TrialSpec, decode, evaluate, fitness, random_genome, run_trial

# %% A single neuron under constant current.
# A 1-input / 0-hidden / 1-output network with zero weights is just the input
# neuron integrating its external drive.
net = NetworkInstance.zeros(n_inputs=1, n_hidden=0, n_outputs=1)
for current in (4.0, 10.0, 20.0):
    log = run_trial(net, StimulusSpec(amplitude=current), 10_000)
    steps = log.spike_steps(0)
    isi = np.diff(steps).mean() * 0.1 if len(steps) > 1 else float("nan")
    print(f"I={current:5.1f}: {len(steps):3d} spikes in 1 s, mean ISI {isi:6.1f} ms")

# %% The trial protocol.
# Inputs are driven for the stimulation window, then the network is on its
# own. The score looks only at the output neuron's last spike.
spec = TrialSpec()
print(f"\n{spec.duration_s:.0f} s trial, {spec.total_steps} steps, target stop at step {spec.target_stop_step}")

# %% Fitness is a lopsided Gaussian around the target stop step.
for x in (0, 10_000, 20_000, 29_000, 30_000, 30_500, 31_000, 33_000):
    print(f"  last spike at step {x:6d} -> fitness {fitness(x, spec.target_stop_step):.4f}")

# %% A random network.
for seed in range(5):
    rec = evaluate(decode(random_genome(seed)), spec)
    last = rec.last_output_spike_step
    when = "never" if last is None else f"{spec.seconds(last):.4f} s"
    print(f"genome {seed}: {len(rec.spike_log):6d} spikes, output last fires {when}, fitness {rec.fitness:.4f}")
