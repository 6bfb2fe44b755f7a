"""Flat gene vectors and their decoding into networks.

Gene order for a layout with ``I`` inputs, ``H`` hidden and ``O`` outputs:

1. ``H`` kind genes, one per hidden neuron (``< 0.5`` means inhibitory);
2. input -> hidden, input-major (``I * H``);
3. input -> output, input-major (``I * O``);
4. hidden -> hidden, pre-major, self-connections skipped (``H * (H - 1)``);
5. hidden -> output, pre-major (``H * O``).

Each synapse gene is the weight magnitude; its sign comes from the
pre-synaptic neuron.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import NetworkInstance, NeuronParams

__all__ = [
    "GenomeLayout",
    "Genome",
    "EncodingError",
    "decode",
    "random_genome",
    "validate",
    "save_genome",
    "load_genome",
    "genome_to_dict",
    "genome_from_dict",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
INHIBITORY_BELOW = 0.5


class EncodingError(ValueError):
    """A gene vector does not fit its layout."""


@dataclass(frozen=True)
class GenomeLayout:
    n_inputs: int = 5
    n_hidden: int = 60
    n_outputs: int = 1

    def __post_init__(self):
        if min(self.n_inputs, self.n_hidden, self.n_outputs) < 0:
            raise ValueError("population sizes must be non-negative")

    @property
    def n_neurons(self) -> int:
        return self.n_inputs + self.n_hidden + self.n_outputs

    @property
    def kind_gene_count(self) -> int:
        return self.n_hidden

    @property
    def synapse_gene_count(self) -> int:
        i, h, o = self.n_inputs, self.n_hidden, self.n_outputs
        return i * (h + o) + h * (h - 1) + h * o

    @property
    def total(self) -> int:
        return self.kind_gene_count + self.synapse_gene_count

    @cached_property
    def synapse_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Global (pre, post) neuron ids of synapse genes, in gene order."""
        i, h, o = self.n_inputs, self.n_hidden, self.n_outputs
        inputs = np.arange(i)
        hidden = np.arange(i, i + h)
        outputs = np.arange(i + h, i + h + o)
        blocks = [
            np.meshgrid(inputs, hidden, indexing="ij"),
            np.meshgrid(inputs, outputs, indexing="ij"),
            np.meshgrid(hidden, hidden, indexing="ij"),
            np.meshgrid(hidden, outputs, indexing="ij"),
        ]
        pre, post = [], []
        for k, (p, q) in enumerate(blocks):
            p, q = p.ravel(), q.ravel()
            if k == 2:
                keep = p != q
                p, q = p[keep], q[keep]
            pre.append(p)
            post.append(q)
        return np.concatenate(pre), np.concatenate(post)

    def to_dict(self) -> dict:
        return {"n_inputs": self.n_inputs, "n_hidden": self.n_hidden, "n_outputs": self.n_outputs}


@dataclass(eq=False)
class Genome:
    genes: np.ndarray
    layout: GenomeLayout = GenomeLayout()

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.genes)

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.genes, other.genes)

    @property
    def kind_genes(self) -> np.ndarray:
        return self.genes[: self.layout.kind_gene_count]

    @property
    def synapse_genes(self) -> np.ndarray:
        return self.genes[self.layout.kind_gene_count :]

    def copy(self) -> "Genome":
        return Genome(self.genes.copy(), self.layout)


def validate(genome: Genome) -> list[dict]:
    """Return a list of violations; an empty list means the genome is valid."""
    violations = []
    expected = genome.layout.total
    if len(genome.genes) != expected or genome.genes.ndim != 1:
        violations.append({"expected": expected, "got": int(genome.genes.size)})
    bad = np.flatnonzero(~((genome.genes >= 0.0) & (genome.genes <= 1.0)))
    violations.extend({"index": int(k), "value": float(genome.genes[k])} for k in bad)
    return violations


def decode(genome: Genome, params: NeuronParams = NeuronParams(), delay_ms: float = 1.0) -> NetworkInstance:
    """Build the network a genome describes."""
    violations = validate(genome)
    if violations:
        first = violations[0]
        if "index" in first:
            raise EncodingError(f"gene {first['index']} = {first['value']!r} is outside [0, 1]")
        raise EncodingError(f"expected {first['expected']} genes, got {first['got']}")
    lay = genome.layout
    inhibitory = np.zeros(lay.n_neurons, dtype=bool)
    inhibitory[lay.n_inputs : lay.n_inputs + lay.n_hidden] = genome.kind_genes < INHIBITORY_BELOW
    pre, post = lay.synapse_index
    weights = np.zeros((lay.n_neurons, lay.n_neurons))
    weights[pre, post] = np.where(inhibitory[pre], -genome.synapse_genes, genome.synapse_genes)
    return NetworkInstance(lay.n_inputs, lay.n_hidden, lay.n_outputs, inhibitory, weights,
                           params, delay_ms)


def random_genome(rng_seed, layout: GenomeLayout = GenomeLayout()) -> Genome:
    """Genome with i.i.d. uniform genes.

    ``rng_seed`` may be an int, a sequence of ints, or a
    :class:`numpy.random.SeedSequence`; genes are drawn from numpy's PCG64.
    """
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return Genome(rng.random(layout.total), layout)


def genome_to_dict(genome: Genome) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "layout": genome.layout.to_dict(),
        "genes": genome.genes.tolist(),
    }


def genome_from_dict(doc: dict) -> Genome:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise EncodingError(f"unsupported genome schema_version {doc.get('schema_version')!r}")
    try:
        layout = GenomeLayout(**doc["layout"])
        genes = np.asarray(doc["genes"], dtype=np.float64)
    except (KeyError, TypeError) as exc:
        raise EncodingError(f"malformed genome document: {exc}") from exc
    genome = Genome(genes, layout)
    violations = validate(genome)
    if violations:
        raise EncodingError(f"invalid genome: {violations[:3]}")
    return genome


def save_genome(genome: Genome, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(genome_to_dict(genome)) + "\n")
    return path


def load_genome(path) -> Genome:
    return genome_from_dict(json.loads(Path(path).read_text()))
