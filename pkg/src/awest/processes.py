"""Example processes: a three-state memory chain, a seasonal chain and generic
finite-state Markov chains.

Sliced sequences follow a 1-based convention: slice n (n = 0, 1, ...) of a
series s_1, s_2, ... with stride D and horizon T is (s_{Dn+1}, ..., s_{Dn+T}).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import ValidationError
from .path_measure import DiscretePathMeasure, PathSample
from .rng import stream

INNOVATIONS = np.array([-1.0, 0.0, 1.0])


@dataclass(frozen=True)
class MemoryChainParams:
    """X_{n+1} = X_n B_n + eps_n (1 - B_n), eps uniform on {-1, 0, 1}, B ~ Ber(rho).

    ``lag`` is the stride D between consecutive slices, ``horizon`` the slice length.
    rho = 0 (fresh draw every step) is accepted as the independent baseline.
    """

    rho: float
    lag: int = 1
    horizon: int = 2

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError("memory parameter must lie in [0, 1)")
        if self.lag < 1 or self.horizon < 1:
            raise ValidationError("lag and horizon must be >= 1")


@dataclass(frozen=True)
class SeasonalParams:
    """Flags B ~ rho d0 + theta d1 + (1 - rho - theta) d2; keep, seasonal copy, fresh draw."""

    rho: float
    theta: float
    tau: int
    horizon: int = 2

    def __post_init__(self):
        if self.rho < 0 or self.theta < 0 or not self.rho + self.theta < 1:
            raise ValidationError("need rho, theta >= 0 and rho + theta < 1")
        if self.tau < 1 or self.horizon < 1:
            raise ValidationError("tau and horizon must be >= 1")


def slice_series(series, horizon: int, stride: int, n_slices: int | None = None) -> PathSample:
    """Cut windows (s_{Dn+1}, ..., s_{Dn+T}) out of s_1, s_2, ... (1-based)."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if horizon < 1 or stride < 1:
        raise ValidationError("horizon and stride must be >= 1")
    available = 0 if arr.shape[0] < horizon else (arr.shape[0] - horizon) // stride + 1
    if n_slices is None:
        n_slices = available
    if n_slices < 1 or n_slices > available:
        raise ValidationError(
            f"series of length {arr.shape[0]} too short for {max(n_slices, 1)} slice(s) "
            f"of horizon {horizon} at stride {stride}"
        )
    # 0-based start of slice n is D n
    idx = stride * np.arange(n_slices)[:, None] + np.arange(horizon)[None, :]
    return PathSample(arr[idx])


def memory_chain_series(rho: float, length: int, seed: int = 0, replication: int = 0) -> np.ndarray:
    """X_0, ..., X_{length-1} of the memory chain, X_0 = eps_0."""
    rng = stream(seed, "memory", replication)
    eps = INNOVATIONS[rng.integers(0, 3, size=length)]
    keep = rng.random(length - 1) < rho
    return kernels.memory_chain_path(eps, keep)


def simulate_memory_chain(params: MemoryChainParams, n_slices: int, seed: int = 0, replication: int = 0) -> PathSample:
    """N slices X^n = X_{Dn+1 : Dn+T}, n = 0..N-1."""
    length = params.lag * (n_slices - 1) + params.horizon + 1
    x = memory_chain_series(params.rho, length, seed, replication)
    return slice_series(x[1:], params.horizon, params.lag, n_slices)


def exact_law_memory_chain(rho: float, horizon: int = 2) -> DiscretePathMeasure:
    """Stationary law of T consecutive values of the memory chain.

    Uniform start, then kernel rho delta_x + (1 - rho) uniform.
    """
    if not 0.0 <= rho < 1.0:
        raise ValidationError("memory parameter must lie in [0, 1)")
    K = memory_chain_markov(rho).transition
    paths, weights = [], []
    for idx in itertools.product(range(3), repeat=horizon):
        w = 1.0 / 3.0
        for a, b in zip(idx[:-1], idx[1:]):
            w *= K[a, b]
        paths.append(INNOVATIONS[list(idx)])
        weights.append(w)
    return DiscretePathMeasure.from_atoms(np.array(paths), np.array(weights))


def simulate_seasonal(params: SeasonalParams, n_slices: int, seed: int = 0, replication: int = 0) -> PathSample:
    """N slices X^n = X_{tau n + 1 : tau n + T} of the seasonal chain, X_0 = 0.

    Innovations with negative time index come from a pre-drawn buffer of tau values.
    """
    tau = params.tau
    length = tau * (n_slices - 1) + params.horizon + 1
    rng = stream(seed, "seasonal", replication)
    eps_ext = INNOVATIONS[rng.integers(0, 3, size=length - 1 + tau)]
    u = rng.random(length - 1)
    branch = np.where(u < params.rho, 0, np.where(u < params.rho + params.theta, 1, 2))
    x = kernels.seasonal_path(eps_ext, branch, tau)
    return slice_series(x[1:], params.horizon, tau, n_slices)


# ----------------------------------------------------------- Markov chains


@dataclass(frozen=True)
class FiniteMarkovChain:
    """Markov chain on ``states`` with row-stochastic ``transition`` and optional ``initial`` law."""

    states: tuple
    transition: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        K = np.asarray(self.transition, dtype=np.float64)
        n = len(self.states)
        if K.shape != (n, n):
            raise ValidationError("transition matrix must be square over the states")
        if np.any(K < 0) or np.max(np.abs(K.sum(axis=1) - 1.0)) > 1e-12:
            raise ValidationError("transition rows must be nonnegative and sum to 1")
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transition", K)
        if self.initial is not None:
            p = np.asarray(self.initial, dtype=np.float64)
            if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValidationError("initial law must be a probability vector over the states")
            object.__setattr__(self, "initial", p)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def start(self) -> np.ndarray:
        return self.initial if self.initial is not None else stationary_distribution(self)

    def sequence_law(self, length: int, exact: bool = False):
        """Joint law of (Z_1, ..., Z_length) started from ``start()``."""
        from .mixing import FiniteSequenceLaw

        return FiniteSequenceLaw.from_markov(self.states, self.start(), self.transition, length, exact=exact)

    def simulate(self, length: int, seed: int = 0, replication: int = 0) -> np.ndarray:
        """State indices Z_1..Z_length."""
        rng = stream(seed, "markov", replication)
        u = rng.random(length)
        cdf = np.cumsum(self.transition, axis=1)
        z = np.empty(length, dtype=np.int64)
        z[0] = min(np.searchsorted(np.cumsum(self.start()), u[0], side="right"), self.n_states - 1)
        for k in range(1, length):
            z[k] = min(np.searchsorted(cdf[z[k - 1]], u[k], side="right"), self.n_states - 1)
        return z


def memory_chain_markov(rho: float) -> FiniteMarkovChain:
    """The memory chain as a Markov chain on {-1, 0, 1}."""
    K = rho * np.eye(3) + (1.0 - rho) / 3.0 * np.ones((3, 3))
    return FiniteMarkovChain((-1, 0, 1), K, np.full(3, 1.0 / 3.0))


def stationary_distribution(chain: FiniteMarkovChain, tol: float = 1e-12, max_squarings: int = 200) -> np.ndarray:
    """Stationary law of an irreducible chain.

    Power iteration on the lazy kernel (K + I)/2, accelerated by repeated
    squaring; the lazy kernel has the same fixed point and is aperiodic.
    """
    K = chain.transition
    n_comp, _ = connected_components(K > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ValidationError("chain is reducible; stationary law is not unique")
    P = 0.5 * (K + np.eye(K.shape[0]))
    pi = np.full(K.shape[0], 1.0 / K.shape[0])
    for _ in range(max_squarings):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() <= tol:
            pi = nxt
            break
        pi = nxt
        P = P @ P
        P /= P.sum(axis=1, keepdims=True)
    pi = pi / pi.sum()
    for _ in range(50):
        # polish with plain steps of K itself
        nxt = pi @ K
        if np.abs(nxt - pi).sum() <= tol:
            break
        pi = 0.5 * (pi + nxt)
    return pi
