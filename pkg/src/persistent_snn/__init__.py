"""Evolving Izhikevich spiking networks that hold activity for a set time and then fall silent."""

__version__ = "0.1.0"

from .core import (
    NetworkInstance,
    NeuronKind,
    NeuronParams,
    NeuronState,
    SimulationFault,
    SpikeLog,
    StimulusSpec,
    run_trial,
    step_neuron,
    synaptic_input,
)
from .evolution import GAConfig, Schedule, evaluate_population, evolve
from .genome import Genome, GenomeLayout, decode, load_genome, random_genome, save_genome, validate
from .trial import TrialRecord, TrialSpec, evaluate, fitness

__all__ = [
    "NetworkInstance", "NeuronKind", "NeuronParams", "NeuronState", "SimulationFault", "SpikeLog",
    "StimulusSpec", "run_trial", "step_neuron", "synaptic_input",
    "GAConfig", "Schedule", "evaluate_population", "evolve",
    "Genome", "GenomeLayout", "decode", "load_genome", "random_genome", "save_genome", "validate",
    "TrialRecord", "TrialSpec", "evaluate", "fitness",
]
