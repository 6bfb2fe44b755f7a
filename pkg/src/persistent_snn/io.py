"""Run configuration, CSV/JSON artifacts and manifests.

Configuration is one JSON document. Every duration in it is in seconds,
including the time step (``trial.dt_s``); conversion to steps happens once,
here, when the document is loaded.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .core import StimulusSpec
from .evolution import GAConfig, Schedule
from .genome import GenomeLayout
from .trial import ConfigurationError, TrialSpec

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_run_config",
    "parse_run_config",
    "trial_from_dict",
    "canonical_hash",
    "write_csv",
    "read_csv",
    "write_json",
    "write_manifest",
    "verify_manifest",
    "format_float",
]

MANIFEST_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration, optionally anchored to a line of the source."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _seconds_to_ms(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigurationError(f"{name} must be a number of seconds")
    return float(value) * 1000.0


def trial_from_dict(doc: dict, target_sustain_s: float | None = None) -> TrialSpec:
    """Build a :class:`TrialSpec` from the ``trial`` section of a config."""
    if "dt_s" not in doc:
        raise ConfigurationError("missing required key 'dt_s'")
    dt = _seconds_to_ms(doc["dt_s"], "dt_s")
    stim = doc.get("stimulus", {})
    pattern = stim.get("pattern", "constant")
    on_steps = off_steps = None
    if pattern != "constant":
        if not isinstance(pattern, dict) or set(pattern) != {"on_s", "off_s"}:
            raise ConfigurationError("stimulus.pattern must be 'constant' or {on_s, off_s}")
        on_steps = round(_seconds_to_ms(pattern["on_s"], "on_s") / dt)
        off_steps = round(_seconds_to_ms(pattern["off_s"], "off_s") / dt)
    try:
        stimulus = StimulusSpec(
            amplitude=float(stim.get("amplitude", StimulusSpec.amplitude)),
            on_steps=on_steps, off_steps=off_steps,
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    if target_sustain_s is None:
        target_sustain_s = doc.get("target_sustain_s", TrialSpec.target_sustain_s)
    return TrialSpec(
        target_sustain_s=float(target_sustain_s),
        stimulation_s=float(doc.get("stimulation_s", TrialSpec.stimulation_s)),
        silence_window_s=float(doc.get("silence_window_s", TrialSpec.silence_window_s)),
        dt=dt,
        stimulus=stimulus,
    )


def trial_to_config(spec: TrialSpec) -> dict:
    stim = spec.stimulus
    pattern = "constant" if not stim.periodic else {
        "on_s": stim.on_steps * spec.dt / 1000.0, "off_s": stim.off_steps * spec.dt / 1000.0,
    }
    return {
        "target_sustain_s": spec.target_sustain_s,
        "stimulation_s": spec.stimulation_s,
        "silence_window_s": spec.silence_window_s,
        "dt_s": spec.dt / 1000.0,
        "stimulus": {"amplitude": stim.amplitude, "pattern": pattern},
    }


@dataclass
class RunConfig:
    trial: TrialSpec
    ga: GAConfig = field(default_factory=GAConfig)
    schedule: Schedule = field(default_factory=Schedule)
    layout: GenomeLayout = field(default_factory=GenomeLayout)
    output_dir: str | None = None
    checkpoint_interval: int = 25
    workers: int | None = None

    @property
    def seed(self) -> int:
        return self.ga.master_seed

    def to_dict(self) -> dict:
        return {
            "network": self.layout.to_dict(),
            "trial": trial_to_config(self.trial),
            "schedule": list(self.schedule.stages),
            "ga": {k: v for k, v in asdict(self.ga).items() if k != "master_seed"},
            "seed": self.ga.master_seed,
            "io": {"output_dir": self.output_dir, "checkpoint_interval": self.checkpoint_interval},
        }


_GA_KEYS = {f for f in GAConfig.__dataclass_fields__ if f != "master_seed"}


def parse_run_config(doc, text: str | None = None, source: str | None = None,
                     overrides: dict | None = None) -> RunConfig:
    """Validate a config document; ``overrides`` (flag values) win over it."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", 1, source)
    doc = json.loads(json.dumps(doc))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = doc
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value

    section = None
    try:
        section = "trial"
        if "trial" not in doc:
            raise ConfigurationError("missing required section 'trial'")
        section = "schedule"
        schedule = Schedule(tuple(doc.get("schedule", Schedule().stages)))
        section = "trial"
        trial_doc = doc["trial"]
        if "dt_s" not in trial_doc:
            raise ConfigurationError("missing required key 'trial.dt_s'")
        section = "dt_s"
        trial = trial_from_dict(trial_doc, trial_doc.get("target_sustain_s", schedule.stages[0]))
        section = "network"
        layout = GenomeLayout(**doc.get("network", {}))
        section = "ga"
        ga_doc = doc.get("ga", {})
        unknown = set(ga_doc) - _GA_KEYS
        if unknown:
            raise ConfigurationError(f"unknown ga keys {sorted(unknown)}")
        section = "seed"
        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        section = "ga"
        ga = GAConfig(master_seed=seed, **ga_doc)
        section = "io"
        io_doc = doc.get("io", {})
        interval = int(io_doc.get("checkpoint_interval", 25))
        if interval < 0:
            raise ConfigurationError("checkpoint_interval must be >= 0")
        section = "workers"
        workers = doc.get("workers")
    except (ConfigurationError, ValueError, TypeError) as exc:
        line = _line_of(text, section) or (1 if text else None)
        raise ConfigError(str(exc), line, source) from exc
    return RunConfig(trial, ga, schedule, layout, io_doc.get("output_dir"), interval, workers)


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, str(path)) from exc
    return parse_run_config(doc, text, str(path), overrides)


def canonical_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def format_float(x: float) -> str:
    return "undef" if isinstance(x, float) and math.isnan(x) else repr(x)


def write_csv(path, header, rows, meta: dict | None = None) -> Path:
    """CSV with a ``# key=value ...`` metadata line followed by a header row."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_csv`: (metadata, rows as dicts of strings)."""
    meta = {}
    with Path(path).open(newline="") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("#"):
        for item in lines[0][1:].split():
            k, _, v = item.partition("=")
            meta[k] = v
        lines = lines[1:]
    return meta, list(csv.DictReader(lines))


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(output_dir, config: dict, files, seed=None) -> Path:
    """List every produced file with its content hash, plus the effective config."""
    output_dir = Path(output_dir)
    entries = []
    for f in sorted({Path(f).resolve() for f in files}):
        entries.append({"path": str(f.relative_to(output_dir.resolve())), "sha256": _sha256(f)})
    doc = {
        "schema_version": MANIFEST_VERSION,
        "tool_version": __version__,
        "config_hash": canonical_hash(config),
        "config": config,
        "seed": seed,
        "files": entries,
    }
    return write_json(output_dir / "manifest.json", doc)


def verify_manifest(path) -> list[str]:
    """Paths whose content no longer matches the manifest (empty if all good)."""
    path = Path(path)
    doc = json.loads(path.read_text())
    bad = []
    for entry in doc["files"]:
        f = path.parent / entry["path"]
        if not f.exists() or _sha256(f) != entry["sha256"]:
            bad.append(entry["path"])
    if canonical_hash(doc["config"]) != doc["config_hash"]:
        bad.append("<config>")
    return bad
