"""Path samples, grid quantization and finitely supported path measures.

A path lives in (R^d)^T and is stored as a (T, d) array; collections of paths
are (N, T, d). Path measures carry a prefix tree so that conditional one-step
laws (kernels) can be read off directly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import UnsupportedPrefixError, ValidationError
from .ot_core import WEIGHT_TOL, DiscreteMeasure


def _as_paths(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValidationError("paths must have shape (N, T, d) or (N, T)")
    return arr


@dataclass(frozen=True)
class PathSample:
    """N observed paths of length T in R^d, stored as an (N, T, d) array."""

    paths: np.ndarray

    def __post_init__(self):
        arr = _as_paths(self.paths)
        if arr.shape[0] < 1 or arr.shape[1] < 2 or arr.shape[2] < 1:
            raise ValidationError("need N >= 1, T >= 2, d >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("paths contain non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "paths", arr)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def horizon(self) -> int:
        return self.paths.shape[1]

    @property
    def dim(self) -> int:
        return self.paths.shape[2]


def grid_resolution(n: int, d: int, T: int) -> float:
    """Edge length of the quantization cubes for N samples of (R^d)^T paths.

    N^(-1/(T+1)) when d = 1 and N^(-1/(dT)) when d >= 2.
    """
    if n < 1 or d < 1 or T < 2:
        raise ValidationError("grid_resolution needs n >= 1, d >= 1, T >= 2")
    rate = 1.0 / (T + 1) if d == 1 else 1.0 / (d * T)
    return float(n) ** (-rate)


@dataclass(frozen=True)
class GridQuantizer:
    """Map each coordinate to the center of its half-open cube [k delta, (k+1) delta) + anchor."""

    delta: float
    anchor: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValidationError("grid edge must be positive and finite")

    def cell_index(self, x) -> np.ndarray:
        return np.floor((np.asarray(x, dtype=np.float64) - self.anchor) / self.delta).astype(np.int64)

    def __call__(self, x) -> np.ndarray:
        k = self.cell_index(x)
        return self.anchor + (k + 0.5) * self.delta


@dataclass(frozen=True)
class TreeLevel:
    """Nodes at one depth of a prefix tree.

    ``points[u]`` is the value x_t of node u, ``prefix[u]`` its full history,
    ``mass[u]`` its probability, ``parent[u]`` the node one level up (-1 at
    the root level) and ``children[u]`` the node indices one level down.
    """

    points: np.ndarray
    prefix: np.ndarray
    mass: np.ndarray
    parent: np.ndarray
    atom_node: np.ndarray
    children: list

    @property
    def size(self) -> int:
        return self.mass.size

    def child_weights(self, u: int, below: "TreeLevel") -> np.ndarray:
        ch = self.children[u]
        return below.mass[ch] / self.mass[u]


def _build_tree(support: np.ndarray, weights: np.ndarray) -> list[TreeLevel]:
    K, T, d = support.shape
    levels: list[TreeLevel] = []
    prev_nodes = None
    for t in range(1, T + 1):
        keys = support[:, :t, :].reshape(K, t * d)
        _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        mass = np.bincount(inv, weights=weights, minlength=first.size)
        parent = prev_nodes[first] if prev_nodes is not None else np.full(first.size, -1)
        levels.append(
            TreeLevel(
                points=support[first, t - 1, :],
                prefix=support[first, :t, :],
                mass=mass,
                parent=parent,
                atom_node=inv,
                children=[],
            )
        )
        prev_nodes = inv
    for upper, lower in zip(levels[:-1], levels[1:]):
        order = np.argsort(lower.parent, kind="stable")
        bounds = np.searchsorted(lower.parent[order], np.arange(upper.size + 1))
        upper.children.extend(order[bounds[u] : bounds[u + 1]] for u in range(upper.size))
    last = levels[-1]
    last.children.extend(np.empty(0, dtype=np.int64) for _ in range(last.size))
    return levels


@dataclass(frozen=True)
class DiscretePathMeasure:
    """Finitely supported probability measure on (R^d)^T.

    Parameters
    ----------
    support : ndarray, shape (K, T, d)
        Distinct paths.
    weights : ndarray, shape (K,)
        Strictly positive, summing to one.
    """

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        sup = _as_paths(self.support)
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size != sup.shape[0] or w.size == 0:
            raise ValidationError("weights must be (K,) matching support (K, T, d)")
        if not np.all(np.isfinite(sup)):
            raise ValidationError("support contains non-finite values")
        if np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, w.size):
            raise ValidationError(f"weights sum to {w.sum()!r}, expected 1")
        flat = sup.reshape(sup.shape[0], -1)
        if np.unique(flat, axis=0).shape[0] != flat.shape[0]:
            raise ValidationError("support paths must be distinct")
        sup.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, paths, weights=None) -> "DiscretePathMeasure":
        """Build from possibly repeated paths; repeats are merged, zero weights dropped."""
        arr = _as_paths(paths)
        K, T, d = arr.shape
        if weights is None:
            weights = np.full(K, 1.0 / K)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (K,) or np.any(w < 0):
            raise ValidationError("weights must be nonnegative and match the paths")
        uniq, inv = np.unique(arr.reshape(K, T * d), axis=0, return_inverse=True)
        merged = np.bincount(inv.ravel(), weights=w, minlength=uniq.shape[0])
        keep = merged > 0
        return cls(uniq[keep].reshape(-1, T, d), merged[keep] / merged[keep].sum())

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def horizon(self) -> int:
        return self.support.shape[1]

    @property
    def dim(self) -> int:
        return self.support.shape[2]

    @cached_property
    def tree(self) -> list[TreeLevel]:
        """Prefix tree, one TreeLevel per time step (index 0 is time 1)."""
        return _build_tree(self.support, self.weights)

    def flatten(self) -> DiscreteMeasure:
        """The same measure viewed on R^(T d)."""
        return DiscreteMeasure(self.support.reshape(self.size, -1), self.weights)

    def marginal(self, t: int) -> DiscreteMeasure:
        """Law of x_t, t in 1..T."""
        if not 1 <= t <= self.horizon:
            raise ValidationError("time index out of range")
        return DiscreteMeasure.from_atoms(self.support[:, t - 1, :], self.weights)

    def push_forward(self, fn) -> "DiscretePathMeasure":
        """Image under a map acting on (K, T, d) path arrays."""
        return DiscretePathMeasure.from_atoms(fn(self.support), self.weights)

    def disintegrate(self, prefix) -> DiscreteMeasure:
        return disintegrate(self, prefix)


def quantize(obj, quantizer: GridQuantizer):
    """Apply the quantizer coordinate-wise to a sample, path measure or array."""
    if isinstance(obj, PathSample):
        return PathSample(quantizer(obj.paths))
    if isinstance(obj, DiscretePathMeasure):
        return DiscretePathMeasure.from_atoms(quantizer(obj.support), obj.weights)
    return quantizer(obj)


def empirical_measure(sample: PathSample) -> DiscretePathMeasure:
    """Uniform weights on the observed paths, duplicates merged."""
    return DiscretePathMeasure.from_atoms(sample.paths)


def adapted_empirical_measure(sample: PathSample, delta: float | None = None, anchor: float = 0.0) -> DiscretePathMeasure:
    """Empirical measure of the grid-quantized sample.

    The grid edge defaults to ``grid_resolution(N, d, T)``.
    """
    if delta is None:
        delta = grid_resolution(sample.n_paths, sample.dim, sample.horizon)
    return empirical_measure(quantize(sample, GridQuantizer(delta, anchor)))


def _find_node(measure: DiscretePathMeasure, prefix: np.ndarray) -> tuple[int, int]:
    t = prefix.shape[0]
    level = measure.tree[t - 1]
    hit = np.flatnonzero(np.all(level.prefix.reshape(level.size, -1) == prefix.reshape(1, -1), axis=1))
    if hit.size == 0:
        raise UnsupportedPrefixError(prefix.tolist())
    return t, int(hit[0])


def disintegrate(measure: DiscretePathMeasure, prefix) -> DiscreteMeasure:
    """Conditional law of x_{t+1} given x_{1:t} = prefix.

    An empty prefix gives the law of x_1. Prefixes outside the support raise
    UnsupportedPrefixError.
    """
    p = np.asarray(prefix, dtype=np.float64)
    if p.size == 0:
        return measure.marginal(1)
    p = p.reshape(-1, measure.dim)
    if p.shape[0] >= measure.horizon:
        raise ValidationError("prefix must be shorter than the horizon")
    t, u = _find_node(measure, p)
    level, below = measure.tree[t - 1], measure.tree[t]
    ch = level.children[u]
    return DiscreteMeasure(below.points[ch], level.child_weights(u, below))


# ------------------------------------------------------------------ CSV


def _fmt(v: float) -> str:
    return repr(float(v))


def write_paths_csv(target, obj) -> None:
    """Write a PathSample or DiscretePathMeasure as ``path_id,t,x_1..x_d[,weight]`` rows."""
    if isinstance(obj, DiscretePathMeasure):
        paths, weights = obj.support, obj.weights
    elif isinstance(obj, PathSample):
        paths, weights = obj.paths, None
    else:
        paths, weights = _as_paths(obj), None
    N, T, d = paths.shape
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        header = ["path_id", "t"] + [f"x_{i + 1}" for i in range(d)]
        if weights is not None:
            header.append("weight")
        w.writerow(header)
        for n in range(N):
            for t in range(T):
                row = [str(n), str(t + 1)] + [_fmt(v) for v in paths[n, t]]
                if weights is not None:
                    row.append(_fmt(weights[n]))
                w.writerow(row)
    finally:
        if own:
            fh.close()


def _read_rows(source) -> tuple[list[str], list[list[str]]]:
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if r]
    if not rows:
        raise ValidationError("empty CSV")
    return [h.strip() for h in rows[0]], rows[1:]


def read_paths_csv(source):
    """Read a path CSV. Returns (paths (N, T, d), weights or None)."""
    header, rows = _read_rows(source)
    if header[:2] != ["path_id", "t"]:
        raise ValidationError("path CSV header must start with path_id,t")
    has_w = header[-1] == "weight"
    xcols = header[2:-1] if has_w else header[2:]
    if not xcols or xcols != [f"x_{i + 1}" for i in range(len(xcols))]:
        raise ValidationError("path CSV needs columns x_1..x_d")
    d = len(xcols)
    data: dict[str, dict[int, list[float]]] = {}
    wts: dict[str, float] = {}
    order: list[str] = []
    for r in rows:
        if len(r) != len(header):
            raise ValidationError(f"malformed row {r!r}")
        pid, t = r[0].strip(), int(r[1])
        if pid not in data:
            data[pid] = {}
            order.append(pid)
        data[pid][t] = [float(v) for v in r[2 : 2 + d]]
        if has_w:
            wts[pid] = float(r[-1])
    T = len(data[order[0]])
    paths = np.empty((len(order), T, d))
    for n, pid in enumerate(order):
        steps = data[pid]
        if sorted(steps) != list(range(1, T + 1)):
            raise ValidationError(f"path {pid} does not cover t = 1..{T}")
        paths[n] = [steps[t] for t in range(1, T + 1)]
    weights = np.array([wts[p] for p in order]) if has_w else None
    return paths, weights


def load_path_measure(source) -> DiscretePathMeasure:
    paths, weights = read_paths_csv(source)
    return DiscretePathMeasure.from_atoms(paths, weights)


def load_path_sample(source) -> PathSample:
    paths, _ = read_paths_csv(source)
    return PathSample(paths)


def paths_csv_string(obj) -> str:
    buf = io.StringIO()
    write_paths_csv(buf, obj)
    return buf.getvalue()
