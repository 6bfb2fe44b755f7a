"""Generational real-coded GA with a continuous schedule of target durations.

Every stochastic choice made while breeding individual ``i`` of generation
``g`` draws from ``SeedSequence(master_seed, spawn_key=(BREED, g, i))``, so
results depend only on the master seed, never on evaluation order or worker
count. Because no generator state is carried between generations, a
checkpoint only needs the population and the loop counters.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .genome import Genome, GenomeLayout, decode, genome_from_dict, genome_to_dict
from .trial import TrialSpec, evaluate

__all__ = [
    "GAConfig",
    "Schedule",
    "GenerationRecord",
    "EvolutionLog",
    "EvolutionResult",
    "evolve",
    "evaluate_population",
    "breed",
    "load_checkpoint",
    "FAILED_FITNESS",
]

_INIT, _BREED = 0, 1
FAILED_FITNESS = float("nan")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 100
    tournament_size: int = 3
    elite_count: int = 1
    crossover_rate: float = 0.9
    per_gene_mutation_rate: float = 0.01
    mutation_sigma: float = 0.05
    max_generations: int = 10_000
    success_fitness: float = 0.99
    master_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_rate", "per_gene_mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("population_size", "tournament_size", "max_generations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must be in [0, population_size)")
        if self.mutation_sigma < 0:
            raise ValueError("mutation_sigma must be non-negative")


@dataclass(frozen=True)
class Schedule:
    """Target sustain durations (s), solved in order."""

    stages: tuple[float, ...] = tuple(float(s) for s in range(2, 12))

    def __post_init__(self):
        stages = tuple(float(s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValueError("schedule needs at least one stage")
        if any(b <= a for a, b in zip(stages, stages[1:])):
            raise ValueError("schedule stages must be strictly increasing")

    def __len__(self):
        return len(self.stages)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    stage: int
    stage_target_s: float
    best_fitness: float
    mean_fitness: float
    best_index: int


@dataclass
class EvolutionLog:
    records: list[GenerationRecord] = field(default_factory=list)
    # (generation, stage index) at which the stage was solved
    stage_boundaries: list[tuple[int, int]] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, EvolutionLog):
            return NotImplemented
        return self.records == other.records and self.stage_boundaries == other.stage_boundaries

    def best_fitness(self) -> np.ndarray:
        return np.array([r.best_fitness for r in self.records])

    def to_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "stage_boundaries": [list(b) for b in self.stage_boundaries],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvolutionLog":
        return cls(
            [GenerationRecord(**r) for r in doc["records"]],
            [tuple(b) for b in doc["stage_boundaries"]],
        )


@dataclass
class EvolutionResult:
    champions: dict[float, Genome]
    log: EvolutionLog
    population: list[Genome]
    failed_stage: float | None = None

    @property
    def completed(self) -> bool:
        return self.failed_stage is None


def _evaluate_one(genome: Genome, spec: TrialSpec) -> float:
    try:
        return evaluate(decode(genome), spec).fitness
    except (ArithmeticError, ValueError, RuntimeError):
        return FAILED_FITNESS


def evaluate_population(genomes: Sequence[Genome], spec: TrialSpec, *,
                        workers: int | None = 1) -> list[float]:
    """Fitness of each genome, in input order.

    The simulation kernel releases the GIL, so a thread pool gives real
    parallelism. Individuals whose simulation faults get :data:`FAILED_FITNESS`.
    """
    genomes = list(genomes)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(genomes) <= 1:
        return [_evaluate_one(g, spec) for g in genomes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_one, genomes, [spec] * len(genomes)))


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


def _ranking(fitness: np.ndarray) -> np.ndarray:
    """Indices from best to worst; failed individuals last, ties by index."""
    keyed = np.where(np.isnan(fitness), -np.inf, fitness)
    return np.lexsort((np.arange(len(keyed)), -keyed))


def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    entrants = rng.integers(0, len(fitness), size=size)
    keyed = np.where(np.isnan(fitness[entrants]), -np.inf, fitness[entrants])
    best = keyed.max()
    return int(entrants[keyed == best].min())


def breed(population: Sequence[Genome], fitness: Sequence[float], config: GAConfig,
          generation: int) -> list[Genome]:
    """Next population: elites copied unchanged, the rest bred by tournament,
    uniform crossover and clamped Gaussian mutation."""
    fitness = np.asarray(fitness, dtype=float)
    order = _ranking(fitness)
    layout = population[0].layout
    children = [population[k].copy() for k in order[: config.elite_count]]
    for i in range(config.elite_count, config.population_size):
        rng = _rng(config.master_seed, _BREED, generation, i)
        mother = population[_tournament(rng, fitness, config.tournament_size)].genes
        father = population[_tournament(rng, fitness, config.tournament_size)].genes
        if rng.random() < config.crossover_rate:
            genes = np.where(rng.random(len(mother)) < 0.5, mother, father)
        else:
            genes = mother.copy()
        hit = rng.random(len(genes)) < config.per_gene_mutation_rate
        noise = rng.normal(0.0, config.mutation_sigma, size=int(hit.sum()))
        genes[hit] = np.clip(genes[hit] + noise, 0.0, 1.0)
        children.append(Genome(genes, layout))
    return children


def initial_population(config: GAConfig, layout: GenomeLayout) -> list[Genome]:
    return [
        Genome(_rng(config.master_seed, _INIT, i).random(layout.total), layout)
        for i in range(config.population_size)
    ]


@dataclass
class _LoopState:
    population: list[Genome]
    generation: int = 0
    stage: int = 0
    stage_generation: int = 0
    champions: dict[float, Genome] = field(default_factory=dict)
    log: EvolutionLog = field(default_factory=EvolutionLog)


def _write_checkpoint(path: Path, state: _LoopState, config: GAConfig, schedule: Schedule,
                      trial_template: TrialSpec) -> None:
    doc = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "generation": state.generation,
        "stage_index": state.stage,
        "stage_generation": state.stage_generation,
        # Breeding randomness is derived from the master seed and the generation
        # counter, so this is the complete generator state.
        "rng": {"bit_generator": "PCG64", "master_seed": config.master_seed,
                "derivation": "SeedSequence(master_seed, spawn_key=(stream, generation, index))"},
        "config": asdict(config),
        "schedule": list(schedule.stages),
        "trial": trial_template.to_dict(),
        "population": [g.genes.tolist() for g in state.population],
        "layout": state.population[0].layout.to_dict(),
        "champions": {repr(k): genome_to_dict(g) for k, g in state.champions.items()},
        "log": state.log.to_dict(),
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc))
    os.replace(tmp, path)


def load_checkpoint(path) -> dict:
    """Read a checkpoint written by :func:`evolve` into plain objects."""
    doc = json.loads(Path(path).read_text())
    if doc.get("checkpoint_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('checkpoint_version')!r}")
    layout = GenomeLayout(**doc["layout"])
    doc["state"] = _LoopState(
        population=[Genome(np.asarray(g, dtype=float), layout) for g in doc["population"]],
        generation=doc["generation"],
        stage=doc["stage_index"],
        stage_generation=doc["stage_generation"],
        champions={float(k): genome_from_dict(v) for k, v in doc["champions"].items()},
        log=EvolutionLog.from_dict(doc["log"]),
    )
    return doc


def evolve(config: GAConfig, schedule: Schedule, trial_template: TrialSpec, *,
           layout: GenomeLayout = GenomeLayout(),
           initial: Sequence[Genome] | None = None,
           resume_from=None,
           checkpoint_path=None,
           checkpoint_interval: int = 0,
           stop_after: int | None = None,
           workers: int | None = 1,
           callback: Callable[[GenerationRecord], None] | None = None) -> EvolutionResult:
    """Run the GA through every stage of ``schedule``.

    Each generation is scored on the current stage's trial. When the best
    individual reaches ``config.success_fitness`` it becomes that stage's
    champion and the same population moves on to the next stage, where it is
    scored again in the following generation.

    Parameters
    ----------
    initial : sequence of Genome, optional
        Starting population instead of random genomes; its length must equal
        ``config.population_size``.
    resume_from : path, optional
        Checkpoint to continue from. The result matches an uninterrupted run.
    checkpoint_path, checkpoint_interval : optional
        Write a checkpoint every ``checkpoint_interval`` generations.
    stop_after : int, optional
        Return after this many generations in this call (used to interrupt).

    Returns
    -------
    EvolutionResult
        ``failed_stage`` holds the target of a stage that exhausted
        ``config.max_generations`` without success; evolution stops there.
    """
    if resume_from is not None:
        state = load_checkpoint(resume_from)["state"]
    else:
        if initial is not None:
            population = [g.copy() for g in initial]
            if len(population) != config.population_size:
                raise ValueError("initial population size differs from config.population_size")
        else:
            population = initial_population(config, layout)
        state = _LoopState(population)
    checkpoint_path = Path(checkpoint_path) if checkpoint_path else None

    steps_done = 0
    while state.stage < len(schedule):
        if stop_after is not None and steps_done >= stop_after:
            break
        if checkpoint_path and checkpoint_interval and state.generation % checkpoint_interval == 0:
            _write_checkpoint(checkpoint_path, state, config, schedule, trial_template)
        target = schedule.stages[state.stage]
        if state.stage_generation >= config.max_generations:
            return EvolutionResult(state.champions, state.log, state.population, failed_stage=target)
        spec = trial_template.with_target(target)
        fitness = np.asarray(evaluate_population(state.population, spec, workers=workers))
        order = _ranking(fitness)
        best = int(order[0])
        valid = fitness[~np.isnan(fitness)]
        record = GenerationRecord(
            generation=state.generation,
            stage=state.stage,
            stage_target_s=target,
            best_fitness=float(fitness[best]),
            mean_fitness=float(valid.mean()) if valid.size else math.nan,
            best_index=best,
        )
        state.log.records.append(record)
        if callback is not None:
            callback(record)
        if fitness[best] >= config.success_fitness:
            state.champions[target] = state.population[best].copy()
            state.log.stage_boundaries.append((state.generation, state.stage))
            state.stage += 1
            state.stage_generation = 0
        else:
            state.population = breed(state.population, fitness, config, state.generation + 1)
            state.stage_generation += 1
        state.generation += 1
        steps_done += 1

    if checkpoint_path and checkpoint_interval:
        _write_checkpoint(checkpoint_path, state, config, schedule, trial_template)
    return EvolutionResult(state.champions, state.log, state.population)
