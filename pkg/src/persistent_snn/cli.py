"""Command-line entry point: ``persistent-snn {evolve,run,analyze}``.

Exit codes: 0 success, 2 configuration error, 3 a schedule stage failed,
4 I/O error. Every command writes only inside ``--output-dir`` and finishes
with a ``manifest.json`` listing what it wrote.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    GroupLabel,
    PruningResult,
    classify_groups,
    export_raster,
    group_composition,
    isi_stats,
    prune_sweep,
    sample_landscape,
    trial_windows,
    weight_deviation,
    weight_sweep,
)
from .analysis.sensitivity import default_grid
from .evolution import evolve
from .genome import EncodingError, decode, load_genome, save_genome
from .io import (
    ConfigError,
    RunConfig,
    canonical_hash,
    format_float,
    load_run_config,
    parse_run_config,
    read_csv,
    trial_to_config,
    write_csv,
    write_json,
    write_manifest,
)
from .trial import ConfigurationError, evaluate

EXIT_OK, EXIT_CONFIG, EXIT_STAGE_FAILED, EXIT_IO = 0, 2, 3, 4

_DEFAULT_CONFIG = {"trial": {"dt_s": 0.0001}}


class _IOFailure(Exception):
    pass


def _trial_overrides(args) -> dict:
    return {
        "trial.target_sustain_s": getattr(args, "target_sustain_s", None),
        "trial.stimulation_s": getattr(args, "stimulation_s", None),
        "trial.silence_window_s": getattr(args, "silence_window_s", None),
        "trial.dt_s": getattr(args, "dt_s", None),
        "trial.stimulus.amplitude": getattr(args, "amplitude", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
    }


def _load_config(args) -> RunConfig:
    overrides = _trial_overrides(args)
    if getattr(args, "config", None):
        try:
            return load_run_config(args.config, overrides)
        except OSError as exc:
            raise _IOFailure(f"cannot read config: {exc}") from exc
    return parse_run_config(_DEFAULT_CONFIG, overrides=overrides)


def _output_dir(args, config: RunConfig) -> Path:
    out = args.output_dir or config.output_dir
    if not out:
        raise ConfigError("no output directory: pass --output-dir or set io.output_dir")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(f"cannot create {out}: {exc}") from exc
    return out


def _load_genome(path):
    try:
        return load_genome(path)
    except OSError as exc:
        raise _IOFailure(f"cannot read genome {path}: {exc}") from exc
    except (EncodingError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _meta(config: RunConfig) -> dict:
    return {"seed": config.seed, "spec_hash": canonical_hash(trial_to_config(config.trial))[:16]}


# -- evolve -------------------------------------------------------------------

def cmd_evolve(args) -> int:
    config = _load_config(args)
    if args.initial_genome:
        _load_genome(args.initial_genome)
    out = _output_dir(args, config)
    champions_dir = out / "champions"
    champions_dir.mkdir(exist_ok=True)
    checkpoint = out / "checkpoint.json"
    resume = checkpoint if args.resume and checkpoint.exists() else None
    initial = None
    if args.initial_genome and resume is None:
        seed_genome = _load_genome(args.initial_genome)
        if seed_genome.layout != config.layout:
            raise ConfigError(f"{args.initial_genome}: layout differs from the config's network")
        initial = [seed_genome] * config.ga.population_size
    result = evolve(
        config.ga, config.schedule, config.trial, layout=config.layout,
        initial=initial, resume_from=resume, checkpoint_path=checkpoint,
        checkpoint_interval=config.checkpoint_interval, stop_after=args.stop_after,
        workers=config.workers,
    )
    files = [checkpoint] if checkpoint.exists() else []
    files.append(write_csv(
        out / "evolution_log.csv",
        ["generation", "stage_target_s", "best_fitness", "mean_fitness"],
        ((r.generation, r.stage_target_s, r.best_fitness, r.mean_fitness) for r in result.log.records),
        _meta(config),
    ))
    files.append(write_json(out / "stage_boundaries.json", {
        "boundaries": [
            {"generation": g, "stage_target_s": config.schedule.stages[s]}
            for g, s in result.log.stage_boundaries
        ],
        "failed_stage_s": result.failed_stage,
    }))
    for target, genome in sorted(result.champions.items()):
        files.append(save_genome(genome, champions_dir / f"champion_{target:g}s.json"))
    write_manifest(out, config.to_dict(), files, config.seed)
    if result.failed_stage is not None:
        print(f"stage {result.failed_stage:g} s failed after {config.ga.max_generations} generations",
              file=sys.stderr)
        return EXIT_STAGE_FAILED
    return EXIT_OK


# -- run ----------------------------------------------------------------------

def cmd_run(args) -> int:
    config = _load_config(args)
    genome = _load_genome(args.genome)
    out = _output_dir(args, config)
    record = evaluate(decode(genome), config.trial)
    doc = record.to_dict()
    files = [write_json(out / "trial_record.json", doc)]
    meta = _meta(config)
    files.append(write_csv(
        out / "spike_counts.csv", ["step", "spike_count"],
        ((k, int(c)) for k, c in enumerate(record.spike_log.counts_per_step()) if c), meta,
    ))
    if args.raster_bin_ms is not None:
        raster = export_raster(record.spike_log, args.raster_bin_ms)
        files.append(write_csv(
            out / "raster.csv", ["bin_index", "neuron_id", "spike_count"],
            raster.rows.tolist(), {**meta, "bin_ms": args.raster_bin_ms},
        ))
    write_manifest(out, {**config.to_dict(), "genome": str(args.genome)}, files, config.seed)
    print(json.dumps(doc))
    return EXIT_OK


# -- analyze ------------------------------------------------------------------

def _pruning_from_csv(path) -> list[PruningResult]:
    _, rows = read_csv(path)
    by_neuron: dict[int, PruningResult] = {}
    for row in rows:
        n = int(row["neuron_id"])
        res = by_neuron.setdefault(n, PruningResult(n, [], []))
        res.pruning_times_s.append(float(row["prune_time_s"]))
        res.last_spike_times_s.append(float(row["last_spike_s"]))
    return list(by_neuron.values())


def _analyze_prune(args, config, out):
    net = decode(_load_genome(args.genome))
    results = prune_sweep(net, config.trial, args.times, workers=config.workers)
    rows = [(r.neuron_id, t, s) for r in results for t, s in zip(r.pruning_times_s, r.last_spike_times_s)]
    return [write_csv(out / "pruning.csv", ["neuron_id", "prune_time_s", "last_spike_s"], rows, _meta(config))]


def _analyze_groups(args, config, out):
    net = decode(_load_genome(args.genome))
    if args.pruning_csv:
        try:
            results = _pruning_from_csv(args.pruning_csv)
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc
    else:
        results = prune_sweep(net, config.trial, workers=config.workers)
    labels = classify_groups(results, config.trial, args.margin_s)
    rows = [
        (r.neuron_id, labels[r.neuron_id].value, net.kinds[r.neuron_id].value, r.mean_s, r.stddev_s)
        for r in results
    ]
    comp = group_composition(labels, net)
    return [
        write_csv(out / "groups.csv", ["neuron_id", "group", "kind", "mean_last_spike_s", "stddev_s"],
                  rows, _meta(config)),
        write_json(out / "group_composition.json", {lab.value: comp[lab] for lab in GroupLabel}),
    ]


def _analyze_isi(args, config, out):
    net = decode(_load_genome(args.genome))
    log = evaluate(net, config.trial).spike_log
    files = []
    for name, window in trial_windows(config.trial).items():
        stats = isi_stats(log, window, label=name)
        files.append(write_csv(
            out / f"isi_{name}.csv",
            ["neuron_id", "n_spikes", "mean_isi_ms", "std_isi_ms", "deviation_ms", "cv"],
            stats.rows(), {**_meta(config), "window_s": f"{window[0]}-{window[1]}"},
        ))
    return files


def _analyze_sweep(args, config, out):
    net = decode(_load_genome(args.genome))
    synapses = None
    if args.max_synapses is not None:
        pre, post = net.synapses()
        synapses = (pre[: args.max_synapses], post[: args.max_synapses])
    cmap = weight_sweep(net, config.trial, default_grid(args.grid_step), synapses=synapses,
                        workers=config.workers)
    rows = [(int(p), int(q), float(c)) for p, q, c in zip(cmap.pre, cmap.post, cmap.correlation)]
    return [
        write_csv(out / "correlation.csv", ["pre", "post", "correlation"], rows, _meta(config)),
        write_csv(out / "sweep_last_spikes.csv",
                  ["pre", "post", "strength", "last_spike_s"],
                  ((int(cmap.pre[k]), int(cmap.post[k]), float(cmap.strengths[k, j]),
                    float(cmap.last_spike_s[k, j]))
                   for k in range(len(cmap.pre)) for j in range(len(cmap.grid))),
                  _meta(config)),
    ]


def _analyze_wdev(args, config, out):
    genomes = [_load_genome(p) for p in args.genomes]
    if len(genomes) < 2:
        raise ConfigError("need >= 2 genomes")
    try:
        wmap = weight_deviation(genomes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(int(p), int(q), float(s)) for p, q, s in zip(wmap.pre, wmap.post, wmap.stddev)]
    return [write_csv(out / "weight_deviation.csv", ["pre", "post", "stddev"], rows, _meta(config))]


def _analyze_sample(args, config, out):
    sample = sample_landscape(args.n, config.trial, config.seed, layout=config.layout,
                              workers=config.workers)
    return [write_json(out / "landscape.json", sample.to_dict())]


_ANALYSES = {
    "prune": _analyze_prune,
    "groups": _analyze_groups,
    "isi": _analyze_isi,
    "sweep": _analyze_sweep,
    "wdev": _analyze_wdev,
    "sample": _analyze_sample,
}


def cmd_analyze(args) -> int:
    config = _load_config(args)
    if args.analysis == "wdev" and len(args.genomes) < 2:
        raise ConfigError("need >= 2 genomes")
    if args.analysis == "sample" and args.n < 1:
        raise ConfigError("--n must be at least 1")
    out = _output_dir(args, config)
    files = _ANALYSES[args.analysis](args, config, out)
    write_manifest(out, {**config.to_dict(), "analysis": args.analysis}, files, config.seed)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, trial: bool = True) -> None:
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--output-dir", "-o", help="directory for every artifact")
    p.add_argument("--workers", type=int, help="evaluation threads (results do not depend on it)")
    p.add_argument("--seed", type=int)
    if trial:
        g = p.add_argument_group("trial")
        g.add_argument("--target-sustain-s", type=float)
        g.add_argument("--stimulation-s", type=float)
        g.add_argument("--silence-window-s", type=float)
        g.add_argument("--dt-s", type=float)
        g.add_argument("--amplitude", type=float, help="stimulus current on the input neurons")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="persistent-snn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run the GA over the configured schedule")
    p.add_argument("config")
    p.add_argument("--output-dir", "-o")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", action="store_true", help="continue from output-dir/checkpoint.json")
    p.add_argument("--initial-genome", help="start from a population of clones of this genome")
    p.add_argument("--stop-after", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("run", help="evaluate one genome")
    p.add_argument("genome")
    _add_common(p)
    p.add_argument("--raster-bin-ms", type=float, help="also write raster.csv with this bin width")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="post-hoc analyses")
    asub = p.add_subparsers(dest="analysis", required=True)
    for name in ("prune", "groups", "isi", "sweep"):
        q = asub.add_parser(name)
        q.add_argument("genome")
        _add_common(q)
        if name == "prune":
            q.add_argument("--times", type=float, nargs="+", help="pruning times (s)")
        if name == "groups":
            q.add_argument("--pruning-csv", help="reuse the output of 'analyze prune'")
            q.add_argument("--margin-s", type=float)
        if name == "sweep":
            q.add_argument("--grid-step", type=float, default=0.05)
            q.add_argument("--max-synapses", type=int, help="sweep only the first N synapses")
    q = asub.add_parser("wdev")
    q.add_argument("genomes", nargs="+")
    _add_common(q, trial=False)
    q = asub.add_parser("sample")
    q.add_argument("--n", type=int, required=True)
    _add_common(q)
    for q in asub.choices.values():
        q.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (_IOFailure, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
