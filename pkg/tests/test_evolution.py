import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from persistent_snn.evolution import (
    EvolutionLog,
    GAConfig,
    Schedule,
    breed,
    evaluate_population,
    evolve,
    initial_population,
    load_checkpoint,
)
from persistent_snn.genome import Genome, GenomeLayout, random_genome
from persistent_snn.trial import TrialSpec

TINY = GenomeLayout(2, 6, 1)
TINY_SPEC = TrialSpec(target_sustain_s=0.01, stimulation_s=0.02, silence_window_s=0.02)
TINY_SCHEDULE = Schedule((0.01, 0.02, 0.03))


def tiny_config(**kw):
    base = dict(population_size=8, max_generations=6, master_seed=5)
    base.update(kw)
    return GAConfig(**base)


def output_driven_genome():
    """Both inputs drive the output at full strength; nothing else is wired.

    Its only output spike lands at step 46, so a 4.7 ms stimulus with a zero
    sustain target scores ~0.998.
    """
    genes = np.zeros(TINY.total)
    genes[: TINY.kind_gene_count] = 0.9
    pre, post = TINY.synapse_index
    genes[TINY.kind_gene_count:][(post == TINY.n_neurons - 1) & (pre < TINY.n_inputs)] = 1.0
    return Genome(genes, TINY)


class TestConfig:
    def test_defaults(self):
        c = GAConfig()
        assert (c.population_size, c.tournament_size, c.elite_count) == (100, 3, 1)
        assert (c.crossover_rate, c.per_gene_mutation_rate, c.mutation_sigma) == (0.9, 0.01, 0.05)
        assert c.success_fitness == 0.99

    @pytest.mark.parametrize("kw", [
        dict(elite_count=100), dict(crossover_rate=1.5), dict(tournament_size=0),
        dict(per_gene_mutation_rate=-0.1), dict(population_size=0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            GAConfig(**kw)

    def test_schedule_default(self):
        assert Schedule().stages == tuple(float(s) for s in range(2, 12))

    @pytest.mark.parametrize("stages", [(), (2.0, 2.0), (3.0, 2.0)])
    def test_schedule_rejects(self, stages):
        with pytest.raises(ValueError):
            Schedule(stages)


class TestEvaluatePopulation:
    def test_empty(self):
        assert evaluate_population([], TINY_SPEC) == []

    def test_identical_genomes(self):
        g = random_genome(1, TINY)
        f = evaluate_population([g, g.copy(), g.copy()], TINY_SPEC)
        assert f[0] == f[1] == f[2]

    def test_parallel_equals_sequential(self):
        pop = [random_genome(i, GenomeLayout()) for i in range(12)]
        spec = TrialSpec()
        seq = evaluate_population(pop, spec, workers=1)
        par = evaluate_population(pop, spec, workers=4)
        assert np.array_equal(np.asarray(seq), np.asarray(par))


class TestBreed:
    def test_elite_copied(self):
        cfg = tiny_config(elite_count=2)
        pop = initial_population(cfg, TINY)
        fit = np.linspace(0.1, 0.8, len(pop))
        kids = breed(pop, fit, cfg, 1)
        assert len(kids) == len(pop)
        assert kids[0] == pop[-1] and kids[1] == pop[-2]

    def test_nan_ranked_last(self):
        cfg = tiny_config()
        pop = initial_population(cfg, TINY)
        fit = np.full(len(pop), 0.2)
        fit[0] = np.nan
        fit[3] = 0.3
        assert breed(pop, fit, cfg, 1)[0] == pop[3]

    def test_deterministic(self):
        cfg = tiny_config()
        pop = initial_population(cfg, TINY)
        fit = np.arange(len(pop), dtype=float)
        a = breed(pop, fit, cfg, 3)
        b = breed(pop, fit, cfg, 3)
        assert all(x == y for x, y in zip(a, b))
        c = breed(pop, fit, cfg, 4)
        assert any(x != y for x, y in zip(a[1:], c[1:]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.0, 1.0), st.floats(0.01, 2.0))
    def test_mutation_closure(self, seed, rate, sigma):
        cfg = GAConfig(population_size=6, per_gene_mutation_rate=rate, mutation_sigma=sigma,
                       master_seed=seed)
        pop = initial_population(cfg, TINY)
        pop[0] = Genome(np.ones(TINY.total), TINY)
        pop[1] = Genome(np.zeros(TINY.total), TINY)
        for child in breed(pop, np.arange(6.0), cfg, 1):
            assert ((child.genes >= 0.0) & (child.genes <= 1.0)).all()

    def test_initial_population_seeded(self):
        cfg = tiny_config()
        a = initial_population(cfg, TINY)
        assert all(x == y for x, y in zip(a, initial_population(cfg, TINY)))
        assert a[0] != a[1]


class TestEvolve:
    def test_clone_population_advances_immediately(self):
        champ = output_driven_genome()
        spec = TrialSpec(target_sustain_s=0.0, stimulation_s=0.0047, silence_window_s=0.05)
        cfg = GAConfig(population_size=4, max_generations=2)
        res = evolve(cfg, Schedule((0.0, 0.01)), spec, layout=TINY, initial=[champ] * 4)
        assert res.champions[0.0] == champ
        assert res.log.records[0].best_fitness >= 0.99
        assert res.log.stage_boundaries == [(0, 0)]
        # the next generation rescores the untouched population on the next stage
        assert res.log.records[1].stage == 1
        assert res.failed_stage == 0.01

    def test_same_seed_same_log(self):
        a = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        b = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        assert a.log == b.log
        assert all(x == y for x, y in zip(a.population, b.population))

    def test_different_seed_differs(self):
        a = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        b = evolve(tiny_config(master_seed=6), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        assert a.log != b.log

    def test_workers_do_not_change_results(self):
        a = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY, workers=1)
        b = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY, workers=3)
        assert a.log == b.log

    def test_elitism_within_stage(self):
        res = evolve(tiny_config(max_generations=10), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        by_stage = {}
        for r in res.log.records:
            by_stage.setdefault(r.stage, []).append(r.best_fitness)
        for values in by_stage.values():
            assert all(b >= a for a, b in zip(values, values[1:]))

    def test_failed_stage_reported(self):
        res = evolve(tiny_config(max_generations=3, success_fitness=1.0), TINY_SCHEDULE, TINY_SPEC,
                     layout=TINY)
        assert res.failed_stage == 0.01
        assert not res.completed
        assert len(res.log.records) == 3

    @pytest.mark.parametrize("cut", [1, 3, 4])
    @pytest.mark.parametrize("success", [0.99, 0.4])
    def test_resume_equals_uninterrupted(self, tmp_path, cut, success):
        # success=0.4 makes the run cross stage boundaries around the cut
        cfg = tiny_config(max_generations=8, success_fitness=success)
        full = evolve(cfg, TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        ckpt = tmp_path / "ckpt.json"
        first = evolve(cfg, TINY_SCHEDULE, TINY_SPEC, layout=TINY, checkpoint_path=ckpt,
                       checkpoint_interval=2, stop_after=cut)
        assert len(first.log.records) == cut
        rest = evolve(cfg, TINY_SCHEDULE, TINY_SPEC, layout=TINY, resume_from=ckpt)
        assert rest.log == full.log
        assert rest.failed_stage == full.failed_stage
        assert all(x == y for x, y in zip(rest.population, full.population))

    def test_checkpoint_contents(self, tmp_path):
        ckpt = tmp_path / "ckpt.json"
        evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY, checkpoint_path=ckpt,
               checkpoint_interval=1, stop_after=2)
        doc = json.loads(ckpt.read_text())
        assert doc["generation"] == 2
        assert len(doc["population"]) == 8
        state = load_checkpoint(ckpt)["state"]
        assert state.generation == 2 and len(state.log.records) == 2

    def test_log_round_trip(self):
        res = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY)
        assert EvolutionLog.from_dict(json.loads(json.dumps(res.log.to_dict()))) == res.log

    def test_callback_sees_every_generation(self):
        seen = []
        res = evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY, callback=seen.append)
        assert seen == res.log.records

    def test_initial_size_checked(self):
        with pytest.raises(ValueError):
            evolve(tiny_config(), TINY_SCHEDULE, TINY_SPEC, layout=TINY,
                   initial=[random_genome(0, TINY)])
