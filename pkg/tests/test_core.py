import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from persistent_snn.core import (
    QUIESCENT_BOX,
    NetworkInstance,
    NeuronKind,
    NeuronParams,
    NeuronState,
    SimClock,
    SimulationFault,
    SpikeLog,
    StimulusSpec,
    quiescent_box_is_invariant,
    run_trial,
    step_neuron,
    steps_for,
    synaptic_input,
)
from persistent_snn.genome import Genome, GenomeLayout, decode, random_genome

import oracles


def single_neuron(current):
    """A 1-input, 0-hidden, 1-output network; the input neuron is the one we watch."""
    net = NetworkInstance.zeros(n_inputs=1, n_hidden=0, n_outputs=1)
    return net, StimulusSpec(amplitude=current)


def small_random_network(seed, n_inputs=2, n_hidden=5, inh_fraction=0.3):
    lay = GenomeLayout(n_inputs, n_hidden, 1)
    rng = np.random.default_rng(seed)
    genes = rng.random(lay.total)
    genes[: lay.kind_gene_count] = np.where(rng.random(lay.kind_gene_count) < inh_fraction, 0.2, 0.8)
    return decode(Genome(genes, lay))


class TestParams:
    def test_regular_spiking_defaults(self):
        p = NeuronParams()
        assert (p.a, p.b, p.c, p.d) == (0.02, 0.2, -65.0, 6.0)

    def test_initial_state(self):
        s = NeuronState.initial()
        assert s.v == -65.0
        assert s.u == -13.0

    def test_clock_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            SimClock(dt=0.0)

    def test_steps_for(self):
        assert steps_for(1.0, 0.1) == 10
        assert steps_for(3000.0, 0.1) == 30000
        with pytest.raises(ValueError):
            steps_for(1.0, 0.3)


class TestStepNeuron:
    def test_resting_step(self):
        # dv/dt = 0.04*4225 - 325 + 140 + 13 = -3 mV/ms, du/dt = 0
        state, spiked = step_neuron(NeuronState(-65.0, -13.0), NeuronParams(), 0.0, 0.1)
        assert state.v == pytest.approx(-65.3, abs=1e-12)
        assert state.u == pytest.approx(-13.0, abs=1e-12)
        assert not spiked

    def test_spike_resets(self):
        p = NeuronParams()
        u0 = -10.0
        state, spiked = step_neuron(NeuronState(31.0, u0), p, 0.0, 0.1)
        u_post = u0 + 0.1 * (p.a * (p.b * 31.0 - u0))
        assert spiked
        assert state.v == p.c
        assert state.u == pytest.approx(u_post + p.d, abs=1e-12)

    @pytest.mark.parametrize("dt", [0.0, -0.1])
    def test_rejects_bad_dt(self, dt):
        with pytest.raises(ValueError):
            step_neuron(NeuronState(-65.0, -13.0), NeuronParams(), 0.0, dt)

    def test_non_finite_is_a_fault(self):
        with pytest.raises(SimulationFault) as info:
            step_neuron(NeuronState(float("nan"), 0.0), NeuronParams(), 0.0, 0.1, neuron=4, step=17)
        assert (info.value.neuron, info.value.step) == (4, 17)

    def test_overflow_is_a_fault(self):
        with pytest.raises(SimulationFault):
            step_neuron(NeuronState(1e300, 0.0), NeuronParams(), 0.0, 0.1)

    def test_matches_oracle_trace(self):
        p = NeuronParams()
        state = NeuronState.initial(p)
        steps = []
        for t in range(20000):
            state, spiked = step_neuron(state, p, 10.0, 0.1)
            if spiked:
                steps.append(t)
        assert steps == oracles.izhikevich_spike_steps(10.0, 20000)


class TestSynapticInput:
    def _net(self, w_a, w_b, inh_b=False):
        net = NetworkInstance.zeros(n_inputs=1, n_hidden=2, n_outputs=1,
                                    inhibitory=np.array([False, False, inh_b, False]))
        w = net.weights.copy()
        w[1, 3] = w_a
        w[2, 3] = w_b
        return net.with_weights(w)

    def test_single_pre(self):
        net = self._net(0.5, 0.0)
        flags = np.zeros(4, dtype=bool)
        flags[1] = True
        assert synaptic_input(net, 3, flags) == 15.0

    def test_empty_sum(self):
        net = self._net(0.5, 0.0)
        assert synaptic_input(net, 3, np.zeros(4, dtype=bool)) == 0.0

    def test_symmetric_cancellation(self):
        net = self._net(0.5, -0.5, inh_b=True)
        assert synaptic_input(net, 3, np.ones(4, dtype=bool)) == 0.0

    def test_external_added(self):
        net = self._net(0.5, 0.0)
        assert synaptic_input(net, 0, np.zeros(4, dtype=bool), external=7.5) == 7.5


class TestNetworkInstance:
    def test_mask_topology(self):
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1)
        m = net.mask
        assert not m[:, list(net.input_ids)].any()
        assert not m[list(net.output_ids), :].any()
        assert not np.diag(m).any()
        assert m[np.ix_(list(net.input_ids), list(net.hidden_ids) + list(net.output_ids))].all()
        assert m.sum() == 2 * 4 + 3 * 2 + 3

    def test_rejects_inhibitory_input(self):
        inh = np.zeros(6, dtype=bool)
        inh[0] = True
        with pytest.raises(ValueError):
            NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1, inhibitory=inh)

    def test_rejects_sign_violation(self):
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1)
        w = net.weights.copy()
        w[0, 2] = -0.3
        with pytest.raises(ValueError):
            net.with_weights(w)

    def test_rejects_edge_outside_mask(self):
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1)
        w = net.weights.copy()
        w[2, 0] = 0.3
        with pytest.raises(ValueError):
            net.with_weights(w)

    def test_rejects_large_weight(self):
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1)
        w = net.weights.copy()
        w[0, 2] = 1.5
        with pytest.raises(ValueError):
            net.with_weights(w)

    def test_kinds(self):
        inh = np.zeros(6, dtype=bool)
        inh[3] = True
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=3, n_outputs=1, inhibitory=inh)
        assert net.kinds[3] is NeuronKind.INHIBITORY
        assert net.kinds[2] is NeuronKind.EXCITATORY

    def test_delay_steps(self):
        assert NetworkInstance.zeros().delay_steps(0.1) == 10


class TestRunTrial:
    def test_zero_network_silence(self):
        net = NetworkInstance.zeros()
        log = run_trial(net, StimulusSpec(amplitude=0.0), 1000)
        assert len(log) == 0

    @settings(max_examples=10, deadline=None)
    @given(st.integers(1, 3000))
    def test_zero_network_silence_any_horizon(self, steps):
        net = NetworkInstance.zeros(n_inputs=2, n_hidden=4, n_outputs=1)
        assert len(run_trial(net, StimulusSpec(amplitude=0.0), steps)) == 0

    def test_single_neuron_matches_oracle(self):
        net, stim = single_neuron(10.0)
        log = run_trial(net, stim, 20000)
        assert log.spike_steps(0).tolist() == oracles.izhikevich_spike_steps(10.0, 20000)
        # frozen reference from the oracle
        assert log.spike_steps(0)[:4].tolist() == [33, 142, 522, 904]

    def test_all_half_genome_deterministic(self):
        net = decode(Genome(np.full(GenomeLayout().total, 0.5)))
        a = run_trial(net, StimulusSpec(), 5000, stimulation_steps=2000)
        b = run_trial(net, StimulusSpec(), 5000, stimulation_steps=2000)
        assert a == b
        assert len(a) > 0

    @pytest.mark.parametrize("seed", range(6))
    def test_small_networks_match_oracle(self, seed):
        net = small_random_network(seed)
        amp = 150.0
        events = oracles.network_spikes(net.weights.tolist(), net.n_inputs, amp, 400, 1200)
        log = run_trial(net, StimulusSpec(amplitude=amp), 1200, stimulation_steps=400, early_exit=False)
        assert log.events == events

    def test_pruned_network_matches_oracle(self):
        net = small_random_network(3)
        prune = np.full(net.n_neurons, 10**9, dtype=np.int64)
        prune[3] = 250
        prune[5] = 600
        events = oracles.network_spikes(net.weights.tolist(), net.n_inputs, 150.0, 400, 1200,
                                        prune={3: 250, 5: 600})
        log = run_trial(net, StimulusSpec(amplitude=150.0), 1200, stimulation_steps=400,
                        prune_steps=prune, early_exit=False)
        assert log.events == events

    def test_delay_is_exactly_one_ms(self):
        # input 0 drives hidden neuron 1 hard enough for a spike on arrival
        net = NetworkInstance.zeros(n_inputs=1, n_hidden=1, n_outputs=1)
        w = net.weights.copy()
        w[0, 1] = 1.0
        net = net.with_weights(w)
        stim = StimulusSpec(amplitude=150.0)
        log = run_trial(net, stim, 40, stimulation_steps=40, early_exit=False)
        first_input = int(log.spike_steps(0)[0])
        # without the synapse the hidden neuron is silent; with it, its
        # potential departs from rest exactly one delay after the input spike
        alone = run_trial(net.with_weights(np.zeros_like(w)), stim, 40, early_exit=False)
        assert len(alone.spike_steps(1)) == 0
        p = NeuronParams()
        s = NeuronState.initial(p)
        for t in range(40):
            drive = 30.0 if t == first_input + 10 else 0.0
            s, spiked = step_neuron(s, p, drive, 0.1)
            if spiked:
                break
        expected = [t] if spiked else []
        assert log.spike_steps(1).tolist()[:1] == expected

    def test_input_isolation(self):
        net = small_random_network(1)
        stim = StimulusSpec(amplitude=150.0)
        full = run_trial(net, stim, 2000, stimulation_steps=1000)
        bare = run_trial(net.with_weights(np.zeros_like(net.weights)), stim, 2000, stimulation_steps=1000)
        for i in net.input_ids:
            assert full.spike_steps(i).tolist() == bare.spike_steps(i).tolist()

    def test_no_double_fire(self):
        net = decode(random_genome(11))
        log = run_trial(net, StimulusSpec(), 15000, stimulation_steps=10000)
        for i in range(net.n_neurons):
            steps = log.spike_steps(i)
            assert (np.diff(steps) >= 2).all()

    def test_events_sorted(self):
        log = run_trial(decode(random_genome(4)), StimulusSpec(), 12000, stimulation_steps=10000)
        assert (np.diff(log.steps) >= 0).all()
        assert log.neurons.min() >= 0 and log.neurons.max() < 66

    def test_periodic_stimulus(self):
        net, _ = single_neuron(0)
        stim = StimulusSpec(amplitude=150.0, on_steps=50, off_steps=450)
        log = run_trial(net, stim, 2000, early_exit=False)
        assert all(t % 500 < 80 for t in log.spike_steps(0))
        assert len(log.spike_steps(0)) > 0

    def test_buffer_growth(self):
        # a saturated network overflows the first output buffer
        net = decode(Genome(np.ones(GenomeLayout().total)))
        log = run_trial(net, StimulusSpec(), 70000, stimulation_steps=10000)
        assert len(log) > 1 << 18
        assert (np.diff(log.steps) >= 0).all()

    def test_fault_on_overflow(self):
        net, stim = single_neuron(-1e200)
        with pytest.raises(SimulationFault):
            run_trial(net, stim, 10)


class TestEarlyExit:
    def test_box_is_invariant_for_defaults(self):
        assert quiescent_box_is_invariant(NeuronParams(), 0.1)

    def test_box_contains_rest(self):
        v_lo, v_hi, u_lo, u_hi = QUIESCENT_BOX
        assert v_lo <= -65.0 <= v_hi and u_lo <= -13.0 <= u_hi

    @settings(max_examples=200, deadline=None)
    @given(st.floats(QUIESCENT_BOX[0], QUIESCENT_BOX[1]), st.floats(QUIESCENT_BOX[2], QUIESCENT_BOX[3]))
    def test_box_traps_points(self, v, u):
        p = NeuronParams()
        s = NeuronState(v, u)
        for _ in range(50):
            s, spiked = step_neuron(s, p, 0.0, 0.1)
            assert not spiked
            assert QUIESCENT_BOX[0] <= s.v <= QUIESCENT_BOX[1]
            assert QUIESCENT_BOX[2] <= s.u <= QUIESCENT_BOX[3]

    @pytest.mark.parametrize("seed", range(8))
    def test_log_identical_with_and_without(self, seed):
        net = decode(random_genome(100 + seed))
        stim = StimulusSpec()
        a = run_trial(net, stim, 30000, stimulation_steps=10000, early_exit=True)
        b = run_trial(net, stim, 30000, stimulation_steps=10000, early_exit=False)
        assert a == b

    def test_identical_with_pruning(self):
        net = decode(random_genome(7))
        prune = np.full(net.n_neurons, 10**9, dtype=np.int64)
        prune[10:30] = 10500
        kw = dict(stimulation_steps=10000, prune_steps=prune)
        assert run_trial(net, StimulusSpec(), 30000, early_exit=True, **kw) == \
            run_trial(net, StimulusSpec(), 30000, early_exit=False, **kw)


class TestSpikeLog:
    def _log(self):
        return SpikeLog(np.array([1, 1, 5, 9]), np.array([0, 2, 2, 1]), 3, 0.1, 10)

    def test_queries(self):
        log = self._log()
        assert len(log) == 4
        assert log.events == [(1, 0), (1, 2), (5, 2), (9, 1)]
        assert log.last_spike_step([2]) == 5
        assert log.last_spike_step([0, 1]) == 9
        assert log.counts_per_neuron().tolist() == [1, 1, 2]
        assert log.counts_per_step().tolist() == [0, 2, 0, 0, 0, 1, 0, 0, 0, 1]
        assert log.before(5).events == [(1, 0), (1, 2)]

    def test_never_spiked(self):
        log = SpikeLog(np.array([], dtype=np.int64), np.array([], dtype=np.int64), 3, 0.1, 10)
        assert log.last_spike_step([0]) is None
