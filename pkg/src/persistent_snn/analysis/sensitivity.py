"""Per-synapse strength sweeps and cross-network weight variability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._parallel import ordered_map
from ..core import NetworkInstance
from ..genome import Genome, decode
from ..trial import TrialSpec, evaluate

__all__ = [
    "pearson",
    "default_grid",
    "CorrelationMap",
    "weight_sweep",
    "WeightDeviationMap",
    "weight_deviation",
]


def pearson(x, y) -> float:
    """Pearson correlation; ``nan`` when either sample is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-d samples of equal length")
    if len(x) < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return float("nan")
    dx = x - x.mean()
    dy = y - y.mean()
    # rescale so the sums of squares cannot underflow (or overflow)
    sx, sy = np.abs(dx).max(), np.abs(dy).max()
    if sx == 0 or sy == 0:
        return float("nan")
    dx, dy = dx / sx, dy / sy
    r = np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    return float(np.clip(r, -1.0, 1.0))


def default_grid(step: float = 0.05) -> np.ndarray:
    count = round(1.0 / step)
    return np.round(np.arange(count + 1) * step, 10)


def _to_matrix(n: int, pre: np.ndarray, post: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.full((n, n), np.nan)
    out[pre, post] = values
    return out


@dataclass
class CorrelationMap:
    """``|pearson(strengths, last-spike times)|`` per synapse; ``nan`` = undefined.

    ``last_spike_s[k, j]`` is the last output spike (s) with synapse ``k`` at
    signed strength ``strengths[k, j]``.
    """

    n_neurons: int
    pre: np.ndarray
    post: np.ndarray
    grid: np.ndarray
    strengths: np.ndarray
    last_spike_s: np.ndarray
    correlation: np.ndarray

    def matrix(self) -> np.ndarray:
        return _to_matrix(self.n_neurons, self.pre, self.post, self.correlation)

    def column_means(self, neurons) -> np.ndarray:
        """Mean correlation of the synapses arriving at each of ``neurons``
        (undefined entries count as zero)."""
        neurons = list(neurons)
        values = _to_matrix(self.n_neurons, self.pre, self.post, np.nan_to_num(self.correlation))
        values = values[:, neurons]
        sums = np.nansum(values, axis=0)
        totals = (~np.isnan(values)).sum(axis=0)
        return np.divide(sums, totals, out=np.zeros(len(neurons)), where=totals > 0)

    def top(self, k: int = 3) -> list[tuple[int, int, float]]:
        order = np.argsort(-np.nan_to_num(self.correlation, nan=-1.0), kind="stable")[:k]
        return [(int(self.pre[i]), int(self.post[i]), float(self.correlation[i])) for i in order]


def weight_sweep(network: NetworkInstance, spec: TrialSpec, grid=None, *, synapses=None,
                 workers: int | None = 1) -> CorrelationMap:
    """Vary each synapse's magnitude over ``grid`` (sign kept) and correlate
    the strengths with the resulting last output spike times.

    ``synapses`` is an optional ``(pre, post)`` pair of id arrays restricting
    the sweep; all synapses are swept by default.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or not len(grid) or grid.min() < 0 or grid.max() > 1:
        raise ValueError("grid must be a non-empty list of magnitudes in [0, 1]")
    pre, post = network.synapses() if synapses is None else map(np.asarray, synapses)
    pre = np.asarray(pre, dtype=np.int64)
    post = np.asarray(post, dtype=np.int64)
    if not network.mask[pre, post].all():
        raise ValueError("sweep requested for a connection that does not exist")
    sign = np.where(network.inhibitory[pre], -1.0, 1.0)
    strengths = sign[:, None] * grid[None, :]

    def run(cell):
        k, j = cell
        weights = network.weights.copy()
        weights[pre[k], post[k]] = strengths[k, j]
        last = evaluate(network.with_weights(weights), spec).last_output_spike_step
        return 0.0 if last is None else spec.seconds(last)

    cells = [(k, j) for k in range(len(pre)) for j in range(len(grid))]
    lasts = np.array(ordered_map(run, cells, workers), dtype=float).reshape(len(pre), len(grid))
    corr = np.array([abs(pearson(strengths[k], lasts[k])) for k in range(len(pre))])
    return CorrelationMap(network.n_neurons, pre, post, grid, strengths, lasts, corr)


@dataclass
class WeightDeviationMap:
    """Population standard deviation of each synapse's signed strength."""

    n_neurons: int
    pre: np.ndarray
    post: np.ndarray
    stddev: np.ndarray

    def matrix(self) -> np.ndarray:
        return _to_matrix(self.n_neurons, self.pre, self.post, self.stddev)


def weight_deviation(genomes) -> WeightDeviationMap:
    genomes = list(genomes)
    if len(genomes) < 2:
        raise ValueError("need >= 2 genomes")
    layout = genomes[0].layout
    if any(g.layout != layout for g in genomes):
        raise ValueError("genomes have different layouts")
    pre, post = layout.synapse_index
    order = np.lexsort((post, pre))
    pre, post = pre[order], post[order]
    weights = np.stack([decode(g).weights[pre, post] for g in genomes])
    return WeightDeviationMap(layout.n_neurons, pre, post, weights.std(axis=0))
