"""Fixed-step Izhikevich network simulation with delayed spike transmission.

Neurons are indexed globally as ``[inputs | hidden | outputs]``. Weights are a
dense ``(N, N)`` matrix indexed ``[pre, post]``. A spike emitted at step ``t``
reaches its targets as a one-step current of ``30 * w`` at step
``t + delay_steps``.

The inner loop is compiled with numba. :func:`step_neuron` and
:func:`synaptic_input` are scalar reference versions of the same arithmetic;
the compiled kernel performs the operations in the same order so results match
bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "SPIKE_THRESHOLD",
    "SPIKE_DELTA",
    "INITIAL_V",
    "NeuronParams",
    "NeuronState",
    "NeuronKind",
    "NetworkInstance",
    "SimClock",
    "SpikeLog",
    "StimulusSpec",
    "SimulationFault",
    "step_neuron",
    "synaptic_input",
    "run_trial",
    "quiescent_box_is_invariant",
]

SPIKE_THRESHOLD = 30.0  # mV
SPIKE_DELTA = 30.0  # mV carried by each delivered spike
INITIAL_V = -65.0  # mV

# Zero-input trapping region used by the early-exit check: every state inside
# maps back inside under one Euler step, and v stays far below threshold.
QUIESCENT_BOX = (-80.0, -62.5, -16.1, -5.0)  # v_lo, v_hi, u_lo, u_hi


class SimulationFault(RuntimeError):
    """Raised when a neuron state or input current becomes non-finite."""

    def __init__(self, neuron: int, step: int, message: str = "non-finite state"):
        super().__init__(f"{message} at neuron {neuron}, step {step}")
        self.neuron = neuron
        self.step = step


@dataclass(frozen=True)
class NeuronParams:
    """Izhikevich regime parameters. Defaults are the regular-spiking set."""

    a: float = 0.02
    b: float = 0.2
    c: float = -65.0
    d: float = 6.0


@dataclass(frozen=True)
class NeuronState:
    v: float
    u: float

    @classmethod
    def initial(cls, params: NeuronParams = NeuronParams()) -> "NeuronState":
        return cls(INITIAL_V, params.b * INITIAL_V)


class NeuronKind(enum.Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"


@dataclass(frozen=True)
class SimClock:
    """Time step bookkeeping. ``dt`` is in ms."""

    dt: float = 0.1
    step_index: int = 0

    def __post_init__(self):
        steps_for(1.0, self.dt)  # validates dt and 1 ms representability

    def steps(self, ms: float) -> int:
        return steps_for(ms, self.dt)


def steps_for(ms: float, dt: float) -> int:
    """Convert a duration in ms to an exact integer number of steps."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    ratio = ms / dt
    steps = round(ratio)
    if abs(ratio - steps) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(f"{ms} ms is not an integer multiple of dt={dt} ms")
    return int(steps)


@dataclass(frozen=True)
class StimulusSpec:
    """External drive applied to every input neuron during the stimulation window.

    ``on_steps``/``off_steps`` give an optional periodic on/off pattern; leave
    both as ``None`` for constant drive.
    """

    amplitude: float = 150.0
    on_steps: int | None = None
    off_steps: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("stimulus amplitude must be finite")
        if (self.on_steps is None) != (self.off_steps is None):
            raise ValueError("on_steps and off_steps must be given together")
        if self.on_steps is not None and (self.on_steps <= 0 or self.off_steps <= 0):
            raise ValueError("periodic stimulus windows must be positive")

    @property
    def periodic(self) -> bool:
        return self.on_steps is not None

    def is_on(self, step: int) -> bool:
        if not self.periodic:
            return True
        return step % (self.on_steps + self.off_steps) < self.on_steps


def _connectivity_mask(n_inputs: int, n_hidden: int, n_outputs: int) -> np.ndarray:
    n = n_inputs + n_hidden + n_outputs
    mask = np.zeros((n, n), dtype=bool)
    hid = slice(n_inputs, n_inputs + n_hidden)
    out = slice(n_inputs + n_hidden, n)
    mask[:n_inputs, n_inputs:] = True
    mask[hid, hid] = ~np.eye(n_hidden, dtype=bool)
    mask[hid, out] = True
    return mask


@dataclass(eq=False)
class NetworkInstance:
    """A decoded, runnable network.

    Parameters
    ----------
    n_inputs, n_hidden, n_outputs : int
        Population sizes. Neuron ids follow ``[inputs | hidden | outputs]``.
    inhibitory : np.ndarray of bool, shape (N,)
        Nature of each neuron. Inputs and outputs must be excitatory.
    weights : np.ndarray, shape (N, N)
        Signed strengths indexed ``[pre, post]``; zero wherever no synapse exists.
    params : NeuronParams
        Shared by every neuron.
    delay_ms : float
        Transmission delay of every synapse.
    """

    n_inputs: int
    n_hidden: int
    n_outputs: int
    inhibitory: np.ndarray
    weights: np.ndarray
    params: NeuronParams = field(default_factory=NeuronParams)
    delay_ms: float = 1.0

    def __post_init__(self):
        n = self.n_neurons
        self.inhibitory = np.asarray(self.inhibitory, dtype=bool)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.inhibitory.shape != (n,):
            raise ValueError(f"inhibitory must have shape ({n},)")
        if self.weights.shape != (n, n):
            raise ValueError(f"weights must have shape ({n}, {n})")
        if self.inhibitory[: self.n_inputs].any() or self.inhibitory[n - self.n_outputs :].any():
            raise ValueError("input and output neurons must be excitatory")
        w = self.weights
        if not np.all(np.isfinite(w)) or np.abs(w).max(initial=0.0) > 1.0:
            raise ValueError("weights must be finite and within [-1, 1]")
        if np.any(w[~self.mask] != 0.0):
            raise ValueError("weights present on a connection the topology forbids")
        if np.any(w[self.inhibitory] > 0.0) or np.any(w[~self.inhibitory] < 0.0):
            raise ValueError("weight sign disagrees with the pre-synaptic neuron kind")

    @classmethod
    def zeros(cls, n_inputs=5, n_hidden=60, n_outputs=1, inhibitory=None, **kwargs):
        n = n_inputs + n_hidden + n_outputs
        if inhibitory is None:
            inhibitory = np.zeros(n, dtype=bool)
        return cls(n_inputs, n_hidden, n_outputs, inhibitory, np.zeros((n, n)), **kwargs)

    @property
    def n_neurons(self) -> int:
        return self.n_inputs + self.n_hidden + self.n_outputs

    @property
    def input_ids(self) -> range:
        return range(0, self.n_inputs)

    @property
    def hidden_ids(self) -> range:
        return range(self.n_inputs, self.n_inputs + self.n_hidden)

    @property
    def output_ids(self) -> range:
        return range(self.n_inputs + self.n_hidden, self.n_neurons)

    @property
    def mask(self) -> np.ndarray:
        return _connectivity_mask(self.n_inputs, self.n_hidden, self.n_outputs)

    @property
    def kinds(self) -> list[NeuronKind]:
        return [NeuronKind.INHIBITORY if inh else NeuronKind.EXCITATORY for inh in self.inhibitory]

    def synapses(self) -> tuple[np.ndarray, np.ndarray]:
        """(pre, post) id arrays of every synapse, in row-major order."""
        return np.nonzero(self.mask)

    def delay_steps(self, dt: float) -> int:
        return steps_for(self.delay_ms, dt)

    def with_weights(self, weights: np.ndarray) -> "NetworkInstance":
        return NetworkInstance(
            self.n_inputs, self.n_hidden, self.n_outputs,
            self.inhibitory.copy(), weights, self.params, self.delay_ms,
        )

    def __eq__(self, other):
        if not isinstance(other, NetworkInstance):
            return NotImplemented
        return (
            (self.n_inputs, self.n_hidden, self.n_outputs, self.params, self.delay_ms)
            == (other.n_inputs, other.n_hidden, other.n_outputs, other.params, other.delay_ms)
            and np.array_equal(self.inhibitory, other.inhibitory)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(eq=False)
class SpikeLog:
    """Spike events of one run, ordered by step then neuron id."""

    steps: np.ndarray
    neurons: np.ndarray
    n_neurons: int
    dt: float
    total_steps: int

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return zip(self.steps.tolist(), self.neurons.tolist())

    def __eq__(self, other):
        if not isinstance(other, SpikeLog):
            return NotImplemented
        return (
            (self.n_neurons, self.dt, self.total_steps) == (other.n_neurons, other.dt, other.total_steps)
            and np.array_equal(self.steps, other.steps)
            and np.array_equal(self.neurons, other.neurons)
        )

    @property
    def events(self) -> list[tuple[int, int]]:
        return list(self)

    def spike_steps(self, neuron: int) -> np.ndarray:
        return self.steps[self.neurons == neuron]

    def last_spike_step(self, neurons) -> int | None:
        sel = np.isin(self.neurons, np.asarray(list(neurons)))
        if not sel.any():
            return None
        return int(self.steps[sel].max())

    def counts_per_neuron(self) -> np.ndarray:
        return np.bincount(self.neurons, minlength=self.n_neurons)

    def counts_per_step(self) -> np.ndarray:
        """Number of neurons spiking at each step."""
        return np.bincount(self.steps, minlength=self.total_steps)

    def before(self, step: int) -> "SpikeLog":
        sel = self.steps < step
        return SpikeLog(self.steps[sel], self.neurons[sel], self.n_neurons, self.dt, self.total_steps)


def step_neuron(state: NeuronState, params: NeuronParams, I: float, dt: float,
                *, neuron: int = 0, step: int = 0) -> tuple[NeuronState, bool]:
    """Advance one neuron by a single forward-Euler step.

    The threshold test uses the updated potential; on a spike the returned
    state is already reset to ``v = c`` and ``u + d``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    v, u = state.v, state.u
    if not (math.isfinite(v) and math.isfinite(u) and math.isfinite(I)):
        raise SimulationFault(neuron, step)
    v_new = v + dt * (0.04 * v * v + 5.0 * v + 140.0 - u + I)
    u_new = u + dt * (params.a * (params.b * v - u))
    if not (math.isfinite(v_new) and math.isfinite(u_new)):
        raise SimulationFault(neuron, step)
    if v_new >= SPIKE_THRESHOLD:
        return NeuronState(params.c, u_new + params.d), True
    return NeuronState(v_new, u_new), False


def synaptic_input(network: NetworkInstance, post: int, delayed_spike_flags,
                   external: float = 0.0) -> float:
    """Total current into ``post`` given which neurons spiked one delay ago."""
    if not 0 <= post < network.n_neurons:
        raise IndexError(f"neuron {post} out of range")
    total = 0.0
    column = network.weights[:, post]
    for pre, spiked in enumerate(delayed_spike_flags):
        if spiked:
            total += column[pre] * SPIKE_DELTA
    return total + external


def quiescent_box_is_invariant(params: NeuronParams, dt: float) -> bool:
    """Whether :data:`QUIESCENT_BOX` traps the zero-input Euler map.

    The map is monotone in v and u over the box (checked here), so testing the
    corners bounds the image of the whole box.
    """
    v_lo, v_hi, u_lo, u_hi = QUIESCENT_BOX
    a, b = params.a, params.b
    if not (1.0 + dt * (0.08 * v_lo + 5.0) > 0 and 1.0 - dt * a > 0 and a * b >= 0):
        return False

    def v_next(v, u):
        return v + dt * (0.04 * v * v + 5.0 * v + 140.0 - u)

    def u_next(v, u):
        return u + dt * (a * (b * v - u))

    return (
        v_next(v_lo, u_hi) >= v_lo
        and v_next(v_hi, u_lo) <= v_hi
        and u_next(v_lo, u_lo) >= u_lo
        and u_next(v_hi, u_hi) <= u_hi
        and v_hi < SPIKE_THRESHOLD
    )


@njit(cache=True, nogil=True)
def _simulate(weights, a, b, c, d, dt, delay_steps, external, stim_steps,
              on_steps, off_steps, total_steps, prune_step, quiescent_exit, box,
              out_steps, out_ids):
    # Returns (count, fault_step, fault_neuron); count > len(out_steps) means
    # the buffers overflowed and the caller must retry with larger ones.
    n = weights.shape[0]
    cap = out_steps.shape[0]
    v = np.full(n, -65.0)
    u = b * v
    ring = np.zeros((delay_steps, n), dtype=np.uint8)
    current = np.zeros(n)
    count = 0
    fault_step = -1
    fault_neuron = -1
    last_spike = -delay_steps - 1
    period = on_steps + off_steps
    v_lo = box[0]
    v_hi = box[1]
    u_lo = box[2]
    u_hi = box[3]
    for t in range(total_steps):
        slot = t % delay_steps
        current[:] = 0.0
        for pre in range(n):
            if ring[slot, pre]:
                for post in range(n):
                    current[post] += weights[pre, post] * 30.0
        if t < stim_steps and (period == 0 or t % period < on_steps):
            for i in range(n):
                current[i] += external[i]
        for i in range(n):
            if t >= prune_step[i]:
                ring[slot, i] = 0
                continue
            vi = v[i]
            ui = u[i]
            vn = vi + dt * (0.04 * vi * vi + 5.0 * vi + 140.0 - ui + current[i])
            un = ui + dt * (a * (b * vi - ui))
            # NaN fails both comparisons, so this also catches NaN.
            if not (abs(vn) <= 1.7976931348623157e308 and abs(un) <= 1.7976931348623157e308):
                fault_step = t
                fault_neuron = i
                break
            if vn >= 30.0:
                vn = c
                un = un + d
                if count < cap:
                    out_steps[count] = t
                    out_ids[count] = i
                count += 1
                last_spike = t
                ring[slot, i] = 1
            else:
                ring[slot, i] = 0
            v[i] = vn
            u[i] = un
        if fault_step >= 0 or count > cap:
            break
        if quiescent_exit and slot == 0 and t + 1 >= stim_steps and t - last_spike >= delay_steps:
            settled = True
            for i in range(n):
                if t + 1 >= prune_step[i]:
                    continue
                if not (v_lo <= v[i] <= v_hi and u_lo <= u[i] <= u_hi):
                    settled = False
                    break
            if settled:
                break
    return count, fault_step, fault_neuron


def run_trial(network: NetworkInstance, stimulus: StimulusSpec, total_steps: int, *,
              dt: float = 0.1, stimulation_steps: int | None = None,
              prune_steps=None, early_exit: bool = True) -> SpikeLog:
    """Simulate ``network`` for ``total_steps`` steps and return its spikes.

    Parameters
    ----------
    stimulation_steps : int, optional
        Length of the stimulation window; defaults to the whole run.
    prune_steps : array-like of int, optional
        Per-neuron step from which the neuron is silenced (state frozen, no
        further emission). Use a value ``>= total_steps`` to leave a neuron intact.
    early_exit : bool
        Stop once the network provably cannot spike again. The returned log is
        identical either way; the option is ignored when the quiescent region
        is not invariant for ``network.params`` and ``dt``.
    """
    if stimulation_steps is None:
        stimulation_steps = total_steps
    if total_steps < stimulation_steps:
        raise ValueError("total_steps must cover the stimulation window")
    n = network.n_neurons
    delay = network.delay_steps(dt)
    if delay < 1:
        raise ValueError("delay must be at least one step")
    external = np.zeros(n)
    external[: network.n_inputs] = stimulus.amplitude
    if prune_steps is None:
        prune = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    else:
        prune = np.asarray(prune_steps, dtype=np.int64)
        if prune.shape != (n,):
            raise ValueError(f"prune_steps must have shape ({n},)")
    p = network.params
    quiescent = bool(early_exit) and quiescent_box_is_invariant(p, dt)
    capacity = min(n * int(total_steps), 1 << 18)
    while True:
        out_steps = np.empty(max(capacity, 1), dtype=np.int64)
        out_ids = np.empty(max(capacity, 1), dtype=np.int64)
        count, fault_step, fault_neuron = _simulate(
            network.weights, p.a, p.b, p.c, p.d, float(dt), delay, external,
            int(stimulation_steps), int(stimulus.on_steps or 0), int(stimulus.off_steps or 0),
            int(total_steps), prune, quiescent, np.array(QUIESCENT_BOX), out_steps, out_ids,
        )
        if count <= len(out_steps):
            break
        capacity = min(4 * capacity, n * int(total_steps))
    if fault_step >= 0:
        raise SimulationFault(int(fault_neuron), int(fault_step))
    return SpikeLog(out_steps[:count].copy(), out_ids[:count].copy(), n, float(dt), int(total_steps))
