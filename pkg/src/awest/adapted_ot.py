"""Adapted (bicausal) Wasserstein distance and estimators built on it.

The distance is computed by backward induction over the prefix trees of the
two measures: the value at a pair of depth-t nodes is the optimal transport
between their one-step kernels, with cost ``|x_{t+1} - y_{t+1}|`` plus the
value of the child pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .ot_core import euclidean_cost, transport_cost, wasserstein1
from .path_measure import (
    DiscretePathMeasure,
    PathSample,
    adapted_empirical_measure,
    grid_resolution,
)
from .rng import stream


@dataclass(frozen=True)
class NestedValueTable:
    """Backward-induction values.

    ``values[t]`` has shape (nodes of mu at time t+1, nodes of nu at time t+1)
    and holds the adapted cost-to-go from that node pair; the last entry is
    identically zero. ``root`` is the distance itself.
    """

    values: list
    root: float


def _check_pair(mu: DiscretePathMeasure, nu: DiscretePathMeasure):
    if mu.horizon != nu.horizon or mu.dim != nu.dim:
        raise ValidationError(
            f"path spaces differ: (T={mu.horizon}, d={mu.dim}) vs (T={nu.horizon}, d={nu.dim})"
        )


def _sorted_kernels(level, below):
    """Per-node children sorted by their (1-d) value, with conditional weights."""
    out = []
    for u in range(level.size):
        ch = level.children[u]
        x = below.points[ch, 0]
        o = np.argsort(x, kind="stable")
        out.append((x[o], below.mass[ch][o] / level.mass[u]))
    return out


def _pair_value(pu, pv, C):
    if pu.size == 1:
        return float(C[0] @ pv)
    if pv.size == 1:
        return float(pu @ C[:, 0])
    return transport_cost(pu, pv, C)


def aw_distance(mu: DiscretePathMeasure, nu: DiscretePathMeasure) -> tuple[float, NestedValueTable]:
    """Adapted Wasserstein distance with per-step Euclidean cost summed over time."""
    _check_pair(mu, nu)
    T, d = mu.horizon, mu.dim
    tm, tn = mu.tree, nu.tree
    values = [None] * T
    values[T - 1] = np.zeros((tm[T - 1].size, tn[T - 1].size))
    for t in range(T - 2, -1, -1):
        A, B, Ab, Bb = tm[t], tn[t], tm[t + 1], tn[t + 1]
        nxt = values[t + 1]
        out = np.empty((A.size, B.size))
        if t == T - 2 and d == 1:
            # cost-to-go vanishes, so each kernel pair is a plain W1 on the line
            ka, kb = _sorted_kernels(A, Ab), _sorted_kernels(B, Bb)
            for u, (xa, wa) in enumerate(ka):
                for v, (xb, wb) in enumerate(kb):
                    if xa.size == 1 or xb.size == 1:
                        out[u, v] = float(np.abs(xa[:, None] - xb[None, :]).ravel() @ np.outer(wa, wb).ravel())
                        continue
                    r, c, m = kernels.quantile_coupling(xa, wa, xb, wb)
                    out[u, v] = float(np.sum(m * np.abs(xa[r] - xb[c])))
        else:
            for u in range(A.size):
                cu = A.children[u]
                pu = Ab.mass[cu] / A.mass[u]
                xu = Ab.points[cu]
                for v in range(B.size):
                    cv = B.children[v]
                    pv = Bb.mass[cv] / B.mass[v]
                    C = euclidean_cost(xu, Bb.points[cv]) + nxt[np.ix_(cu, cv)]
                    out[u, v] = _pair_value(pu, pv, C)
        values[t] = out
    C0 = euclidean_cost(tm[0].points, tn[0].points) + values[0]
    root = _pair_value(tm[0].mass, tn[0].mass, C0)
    return root, NestedValueTable(values, root)


def sum_of_steps_cost(T: int, d: int):
    """Cost on flattened paths: sum over time of per-step Euclidean distances."""

    def cost(x, y):
        xa = x.reshape(x.shape[0], T, d)
        ya = y.reshape(y.shape[0], T, d)
        diff = xa[:, None, :, :] - ya[None, :, :, :]
        return np.sqrt(np.sum(diff * diff, axis=3)).sum(axis=2)

    return cost


def wasserstein_paths(mu: DiscretePathMeasure, nu: DiscretePathMeasure) -> float:
    """Unconstrained W1 on path space with the same summed per-step cost."""
    _check_pair(mu, nu)
    return wasserstein1(mu.flatten(), nu.flatten(), sum_of_steps_cost(mu.horizon, mu.dim))[0]


def aw_lower_bound_check(mu: DiscretePathMeasure, nu: DiscretePathMeasure, tol: float = 1e-10):
    """Return (aw, w, holds) where holds means aw >= w - tol."""
    aw = aw_distance(mu, nu)[0]
    w = wasserstein_paths(mu, nu)
    return aw, w, aw >= w - tol


def estimate_aw(mu: DiscretePathMeasure, sample: PathSample, delta: float | None = None) -> float:
    """AW between a reference measure and the adapted empirical measure of ``sample``."""
    return aw_distance(mu, adapted_empirical_measure(sample, delta))[0]


# ------------------------------------------------------------ truncation


def kappa_R(x, R: float) -> np.ndarray:
    """Radial squash applied to each time step (last axis).

    Identity on the ball of radius R; outside, the radius r is mapped to
    2R - R exp(1 - r/R), which is continuous, increasing and bounded by 2R.
    """
    if not R > 0:
        raise ValidationError("R must be positive")
    x = np.asarray(x, dtype=np.float64)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    outside = r > R
    safe = np.where(outside, r, 1.0)
    scale = np.where(outside, (2.0 * R - R * np.exp(1.0 - safe / R)) / safe, 1.0)
    return x * scale


def truncation_bound(nu: DiscretePathMeasure, R: float) -> float:
    """sqrt(T) times the mass-weighted path norm outside the ball of radius R."""
    norms = np.linalg.norm(nu.support.reshape(nu.size, -1), axis=1)
    far = norms >= R
    return math.sqrt(nu.horizon) * float(nu.weights[far] @ norms[far])


# ------------------------------------------------------------ smoothing


@dataclass(frozen=True)
class SmoothingSchedule:
    """Noise level sigma_N = max(sqrt(grid edge), N^(-1/8)) for (R^d)^T paths."""

    d: int
    T: int

    def sigma(self, n: int) -> float:
        return max(math.sqrt(grid_resolution(n, self.d, self.T)), float(n) ** (-1.0 / 8.0))


def smoothed_adapted_estimator(sample: PathSample, noise_samples_per_atom: int, seed: int = 0) -> DiscretePathMeasure:
    """Adapted empirical measure with each atom spread into Gaussian copies.

    Every atom is replaced by ``noise_samples_per_atom`` equally weighted
    copies shifted by independent N(0, sigma_N^2 I) path offsets.
    """
    k = int(noise_samples_per_atom)
    if k < 1:
        raise ValidationError("noise_samples_per_atom must be >= 1")
    base = adapted_empirical_measure(sample)
    sigma = SmoothingSchedule(sample.dim, sample.horizon).sigma(sample.n_paths)
    rng = stream(seed, "smoothing", sample.n_paths)
    offsets = sigma * rng.standard_normal((base.size, k, base.horizon, base.dim))
    paths = base.support[:, None, :, :] + offsets
    weights = np.repeat(base.weights / k, k)
    return DiscretePathMeasure.from_atoms(paths.reshape(-1, base.horizon, base.dim), weights)
