"""Discrete measures, optimal transport and total-variation type distances.

All measures are finitely supported. Costs are Euclidean unless a cost matrix
is supplied explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .errors import ValidationError
from .rng import stream

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on R^k.

    Parameters
    ----------
    points : ndarray, shape (K, k)
        Distinct atoms.
    weights : ndarray, shape (K,)
        Strictly positive weights summing to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=np.float64)
        if pts.ndim != 2 or w.ndim != 1 or pts.shape[0] != w.shape[0]:
            raise ValidationError("points must be (K, k) and weights (K,)")
        if w.size == 0:
            raise ValidationError("measure needs at least one atom")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValidationError("non-finite atoms or weights")
        if np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, w.size):
            raise ValidationError(f"weights sum to {w.sum()!r}, expected 1")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValidationError("atoms must be distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, points, weights=None) -> "DiscreteMeasure":
        """Build a measure, merging repeated atoms and dropping zero weights."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if weights is None:
            weights = np.full(pts.shape[0], 1.0 / pts.shape[0])
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0):
            raise ValidationError("negative weight")
        uniq, inv = np.unique(pts, axis=0, return_inverse=True)
        merged = np.bincount(inv.ravel(), weights=w, minlength=uniq.shape[0])
        keep = merged > 0
        merged = merged[keep]
        return cls(uniq[keep], merged / merged.sum())

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls(np.atleast_2d(np.asarray(x, dtype=np.float64)), np.ones(1))

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def push_forward(self, fn) -> "DiscreteMeasure":
        """Image measure under a map applied row-wise to the atoms."""
        return DiscreteMeasure.from_atoms(np.asarray(fn(self.points)), self.weights)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: ``mass[k]`` moves from source ``rows[k]`` to target ``cols[k]``."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    shape: tuple

    @classmethod
    def from_dense(cls, F: np.ndarray) -> "TransportPlan":
        r, c = np.nonzero(F > 0)
        return cls(r, c, F[r, c], F.shape)

    def dense(self) -> np.ndarray:
        F = np.zeros(self.shape)
        np.add.at(F, (self.rows, self.cols), self.mass)
        return F

    def marginals(self):
        a = np.bincount(self.rows, weights=self.mass, minlength=self.shape[0])
        b = np.bincount(self.cols, weights=self.mass, minlength=self.shape[1])
        return a, b


def euclidean_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def transport(a, b, C) -> tuple[float, TransportPlan]:
    """Optimal coupling of weight vectors ``a`` and ``b`` under cost matrix ``C``.

    Solved as an uncapacitated min-cost flow (successive shortest paths).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (a.size, b.size):
        raise ValidationError("cost matrix shape does not match marginals")
    if a.size == 1 or b.size == 1:
        # only one coupling exists
        F = np.outer(a, b)
    else:
        F = kernels.transport_ssp(a, b, C)
    return float(np.sum(F * C)), TransportPlan.from_dense(F)


def transport_cost(a, b, C) -> float:
    return transport(a, b, C)[0]


def _check_dims(mu: DiscreteMeasure, nu: DiscreteMeasure):
    if mu.dim != nu.dim:
        raise ValidationError(f"dimension mismatch: {mu.dim} vs {nu.dim}")


def wasserstein1_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, TransportPlan]:
    """W1 on the line via the monotone (quantile) coupling."""
    _check_dims(mu, nu)
    if mu.dim != 1:
        raise ValidationError("wasserstein1_1d needs one-dimensional measures")
    ox = np.argsort(mu.points[:, 0], kind="stable")
    oy = np.argsort(nu.points[:, 0], kind="stable")
    x = mu.points[ox, 0]
    y = nu.points[oy, 0]
    r, c, m = kernels.quantile_coupling(x, mu.weights[ox], y, nu.weights[oy])
    cost = float(np.sum(m * np.abs(x[r] - y[c])))
    return cost, TransportPlan(ox[r], oy[c], m, (mu.size, nu.size))


def wasserstein1(mu: DiscreteMeasure, nu: DiscreteMeasure, cost=None) -> tuple[float, TransportPlan]:
    """W1 between discrete measures via min-cost flow.

    ``cost`` may be a precomputed (K_mu, K_nu) matrix or a callable taking the
    two point arrays; it defaults to the Euclidean distance.
    """
    _check_dims(mu, nu)
    if cost is None:
        C = euclidean_cost(mu.points, nu.points)
    elif callable(cost):
        C = np.asarray(cost(mu.points, nu.points), dtype=np.float64)
    else:
        C = np.asarray(cost, dtype=np.float64)
    return transport(mu.weights, nu.weights, C)


def _aligned(mu: DiscreteMeasure, nu: DiscreteMeasure):
    _check_dims(mu, nu)
    pts = np.concatenate([mu.points, nu.points])
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.ravel()
    p = np.bincount(inv[: mu.size], weights=mu.weights, minlength=uniq.shape[0])
    q = np.bincount(inv[mu.size :], weights=nu.weights, minlength=uniq.shape[0])
    return uniq, p, q


def total_variation(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Half the L1 distance between the weight vectors on the union support."""
    _, p, q = _aligned(mu, nu)
    return 0.5 * float(np.abs(p - q).sum())


def tv1_weighted(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Integral of (|x| + 1/2) against the variation |mu - nu|."""
    pts, p, q = _aligned(mu, nu)
    return float(np.sum((np.linalg.norm(pts, axis=1) + 0.5) * np.abs(p - q)))


# ----------------------------------------------------- Gaussian smoothing


@dataclass(frozen=True)
class SmoothedTV:
    value: float
    error: float
    method: str


def _log_mixture(x, atoms, w, sigma):
    """log of the N(0, sigma^2 I)-smoothed density of sum_j w_j delta_{atoms_j} at x."""
    k = atoms.shape[1]
    d2 = np.sum((x[:, None, :] - atoms[None, :, :]) ** 2, axis=2)
    logw = np.log(w)[None, :] - d2 / (2.0 * sigma * sigma)
    top = logw.max(axis=1, keepdims=True)
    out = top[:, 0] + np.log(np.exp(logw - top).sum(axis=1))
    return out - 0.5 * k * math.log(2.0 * math.pi) - k * math.log(sigma)


def _abs_diff_density(x, mu, nu, sigma):
    lp = _log_mixture(x, mu.points, mu.weights, sigma)
    lq = _log_mixture(x, nu.points, nu.weights, sigma)
    return np.abs(np.exp(lp) - np.exp(lq))


def _gauss_legendre_nodes(edges, order):
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


_PANELS = {1: (1024, 8), 2: (120, 6), 3: (36, 4)}


def _kinks_1d(mu, nu, sigma, edges):
    """Points where the 1-d integrand is not smooth: the origin and the sign changes of p - q."""
    from scipy.optimize import brentq

    g = lambda x: float(_log_mixture(np.array([[x]]), mu.points, mu.weights, sigma)[0]
                        - _log_mixture(np.array([[x]]), nu.points, nu.weights, sigma)[0])
    vals = _log_mixture(edges[:, None], mu.points, mu.weights, sigma) - _log_mixture(
        edges[:, None], nu.points, nu.weights, sigma
    )
    out = [0.0]
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        out.append(brentq(g, edges[i], edges[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    out.extend(float(edges[i]) for i in np.flatnonzero(vals == 0))
    return np.array(out)


def _integrate_1d(mu, nu, sigma, edges, order):
    nodes, wts = _gauss_legendre_nodes(edges, order)
    f = (np.abs(nodes) + 0.5) * _abs_diff_density(nodes[:, None], mu, nu, sigma)
    return float(f @ wts)


def _integrate_box(mu, nu, sigma, lo, hi, panels, order, chunk=200_000):
    k = mu.dim
    nodes, wts = _gauss_legendre_nodes(np.linspace(lo, hi, panels + 1), order)
    total = 0.0
    grids = np.meshgrid(*([np.arange(nodes.size)] * k), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    for s in range(0, idx.shape[0], chunk):
        block = idx[s : s + chunk]
        x = nodes[block]
        w = np.prod(wts[block], axis=1)
        f = (np.linalg.norm(x, axis=1) + 0.5) * _abs_diff_density(x, mu, nu, sigma)
        total += float(f @ w)
    return total


def _quadrature(mu, nu, sigma, radius, panels, order):
    """(value, discretization error estimate) of the box integral."""
    if mu.dim == 1:
        # split panels at the kinks so every piece is smooth
        fine_edges = np.linspace(-radius, radius, panels + 1)
        kinks = _kinks_1d(mu, nu, sigma, fine_edges)
        kinks = kinks[np.abs(kinks) < radius]
        fine = _integrate_1d(mu, nu, sigma, np.unique(np.concatenate([fine_edges, kinks])), order)
        coarse_edges = np.unique(np.concatenate([np.linspace(-radius, radius, panels // 2 + 1), kinks]))
        coarse = _integrate_1d(mu, nu, sigma, coarse_edges, order)
        return fine, abs(fine - coarse)
    fine = _integrate_box(mu, nu, sigma, -radius, radius, panels, order)
    coarse = _integrate_box(mu, nu, sigma, -radius, radius, max(1, panels // 2), order)
    # kink error depends on where the grid falls; compare against a shifted grid
    h = 2 * radius / panels
    shifted = _integrate_box(mu, nu, sigma, -radius - 0.381966 * h, radius + 0.618034 * h, panels + 1, order)
    return fine, max(abs(fine - coarse), abs(fine - shifted))


def _tail_bound(mu, nu, sigma, cut=8.0):
    chi = stats.chi(mu.dim)
    p_out = chi.sf(cut)
    r_out = chi.expect(lambda r: r, lb=cut)
    out = 0.0
    for m in (mu, nu):
        norms = np.linalg.norm(m.points, axis=1)
        out += float(m.weights @ ((norms + 0.5) * p_out + sigma * r_out))
    return out


def tv1_smoothed(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    sigma: float,
    method: str = "auto",
    n_samples: int = 100_000,
    seed: int = 0,
) -> SmoothedTV:
    """Weighted TV between the Gaussian-smoothed measures mu * N(0, sigma^2 I), nu * N(0, sigma^2 I).

    Quadrature (dimension <= 3) integrates over the box of half-width
    max|atom| + 8 sigma. In one dimension panels are split at the kinks of
    the integrand; ``error`` is the discrepancy against coarser (and, in
    higher dimension, shifted) grids plus a bound on the mass outside the
    box. Monte Carlo samples the equal mixture of the two smoothed measures
    and reports one standard error.
    """
    _check_dims(mu, nu)
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    if method == "auto":
        method = "quadrature" if mu.dim <= 3 else "monte_carlo"
    if method == "quadrature":
        if mu.dim > 3:
            raise ValidationError("quadrature supports dimension <= 3")
        radius = max(np.linalg.norm(mu.points, axis=1).max(), np.linalg.norm(nu.points, axis=1).max())
        radius += 8.0 * sigma
        panels, order = _PANELS[mu.dim]
        # keep panels no wider than sigma / 2 where the budget allows
        panels = max(panels, min(int(math.ceil(4 * radius / sigma)), 4 * panels if mu.dim == 1 else panels))
        value, err = _quadrature(mu, nu, sigma, radius, panels, order)
        return SmoothedTV(value, err + _tail_bound(mu, nu, sigma), "quadrature")
    if method != "monte_carlo":
        raise ValidationError(f"unknown method {method!r}")
    rng = stream(seed, "tv1_smoothed")
    pick = rng.random(n_samples) < 0.5
    x = np.empty((n_samples, mu.dim))
    for flag, m in ((True, mu), (False, nu)):
        sel = np.flatnonzero(pick == flag)
        atoms = rng.choice(m.size, size=sel.size, p=m.weights)
        x[sel] = m.points[atoms]
    x += sigma * rng.standard_normal(x.shape)
    lp = _log_mixture(x, mu.points, mu.weights, sigma)
    lq = _log_mixture(x, nu.points, nu.weights, sigma)
    # |p - q| / ((p + q) / 2) without overflow
    ratio = 2.0 * np.abs(np.tanh(0.5 * (lp - lq)))
    h = (np.linalg.norm(x, axis=1) + 0.5) * ratio
    return SmoothedTV(float(h.mean()), float(h.std(ddof=1) / math.sqrt(n_samples)), "monte_carlo")
