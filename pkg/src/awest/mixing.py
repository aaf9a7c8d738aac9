"""Mixing coefficients of finite-alphabet sequences by exhaustive enumeration.

For a law of (Z_1, ..., Z_N) on a finite alphabet, the coefficients compare
the conditional law of a later coordinate (or of the whole tail) given that
the history lies in a product event A_1 x ... x A_n against the same law given
only A_1 x ... x A_{n-1}. Product events over a finite alphabet are tuples of
nonempty subsets, so the supremum is a finite maximum.

Probabilities may be floats or ``fractions.Fraction`` objects; in the latter
case every coefficient is computed exactly.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import StateSpaceTooLarge, ValidationError

MAX_STATES = 10**7
MAX_EVENT_CELLS = 2 * 10**7


@dataclass(frozen=True)
class FiniteSequenceLaw:
    """Joint law of (Z_1, ..., Z_N) with values in ``alphabet``.

    ``prob`` has shape (A,) * N; entry [i_1, ..., i_N] is
    P(Z_1 = alphabet[i_1], ..., Z_N = alphabet[i_N]).
    """

    alphabet: tuple
    prob: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob)
        A = len(self.alphabet)
        if A < 1 or p.ndim < 1 or any(s != A for s in p.shape):
            raise ValidationError("prob must have shape (A,) * N")
        if len(set(self.alphabet)) != A:
            raise ValidationError("alphabet entries must be distinct")
        if p.dtype != object:
            p = p.astype(np.float64)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValidationError("probabilities must be nonnegative and sum to 1")
        else:
            if any(v < 0 for v in p.flat) or p.sum() != 1:
                raise ValidationError("exact probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "prob", p)

    @property
    def length(self) -> int:
        return self.prob.ndim

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def exact(self) -> bool:
        return self.prob.dtype == object

    # -- constructors

    @staticmethod
    def _guard(A: int, N: int):
        if A**N > MAX_STATES:
            raise StateSpaceTooLarge(f"state space too large: {A}^{N} > {MAX_STATES}")

    @classmethod
    def from_table(cls, rows, exact: bool | None = None) -> "FiniteSequenceLaw":
        """Build from ``(z_tuple, prob)`` pairs; unlisted sequences get probability 0."""
        rows = [(tuple(z), p) for z, p in rows]
        if not rows:
            raise ValidationError("empty law table")
        N = len(rows[0][0])
        if any(len(z) != N for z, _ in rows):
            raise ValidationError("all sequences must have the same length")
        if exact is None:
            exact = all(isinstance(p, (Fraction, int)) for _, p in rows)
        alphabet = tuple(sorted({v for z, _ in rows for v in z}))
        cls._guard(len(alphabet), N)
        index = {v: i for i, v in enumerate(alphabet)}
        shape = (len(alphabet),) * N
        prob = _zeros(shape, exact)
        for z, p in rows:
            prob[tuple(index[v] for v in z)] += Fraction(p) if exact else float(p)
        return cls(alphabet, prob)

    @classmethod
    def product(cls, alphabet, marginals) -> "FiniteSequenceLaw":
        """Independent coordinates with the given marginal vectors."""
        marginals = [np.asarray(m, dtype=object if _is_exact(m) else np.float64) for m in marginals]
        cls._guard(len(alphabet), len(marginals))
        prob = marginals[0]
        for m in marginals[1:]:
            prob = np.multiply.outer(prob, m)
        return cls(tuple(alphabet), prob)

    @classmethod
    def from_markov(cls, states, initial, transition, length: int, exact: bool = False) -> "FiniteSequenceLaw":
        """Law of a Markov chain path of the given length."""
        A = len(states)
        cls._guard(A, length)
        if exact:
            init = np.array([Fraction(v) for v in np.asarray(initial).ravel()], dtype=object)
            K = np.array([[Fraction(v) for v in row] for row in np.asarray(transition)], dtype=object)
        else:
            init = np.asarray(initial, dtype=np.float64)
            K = np.asarray(transition, dtype=np.float64)
        prob = init
        for _ in range(length - 1):
            prob = prob[..., None] * K.reshape((1,) * (prob.ndim - 1) + K.shape)
        return cls(tuple(states), prob)

    # -- transformations

    def marginal(self, axes: Sequence[int]) -> np.ndarray:
        """Joint law of the coordinates ``axes`` (0-based), in the given order."""
        axes = list(axes)
        drop = tuple(a for a in range(self.length) if a not in axes)
        p = self.prob.sum(axis=drop) if drop else self.prob
        kept = [a for a in range(self.length) if a in axes]
        return np.transpose(p, [kept.index(a) for a in axes])

    def push_forward(self, fn: Callable) -> "FiniteSequenceLaw":
        """Law of (fn(Z_1), ..., fn(Z_N)) for a map on alphabet values."""
        images = [fn(v) for v in self.alphabet]
        new = tuple(sorted(set(images), key=_sort_key))
        pos = np.array([new.index(v) for v in images])
        p = self.prob
        for ax in range(self.length):
            M = _zeros((len(new), self.size), self.exact)
            for i, j in enumerate(pos):
                M[j, i] = 1
            p = np.moveaxis(np.tensordot(M, p, axes=([1], [ax])), 0, ax)
        return FiniteSequenceLaw(new, p)

    def is_independent(self, tol: float = 1e-12) -> bool:
        """True when the joint law is the product of its one-dimensional marginals."""
        prod = self.marginal([0])
        for k in range(1, self.length):
            prod = np.multiply.outer(prod, self.marginal([k]))
        diff = self.prob - prod
        if self.exact:
            return all(v == 0 for v in diff.flat)
        return bool(np.max(np.abs(diff)) <= tol)


def _is_exact(values) -> bool:
    arr = np.asarray(values, dtype=object).ravel()
    return all(isinstance(v, Fraction) for v in arr)


def _zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def _sort_key(v):
    return (0, v) if isinstance(v, (int, float, Fraction)) else (1, str(v))


# ------------------------------------------------------------------ events


def subset_masks(A: int) -> np.ndarray:
    """Indicator rows of the nonempty subsets of range(A); the last row is the full set."""
    masks = np.arange(1, 2**A)
    return ((masks[:, None] >> np.arange(A)[None, :]) & 1).astype(np.int64)


def _half_l1(x):
    return np.abs(x).sum(axis=-1) / 2


def _conditional(Q, mass, exact):
    safe = np.where(mass > 0, mass, 1)
    if exact:
        safe = safe.astype(object)
    return Q / safe[..., None]


def _event_sup(P: np.ndarray, n: int, exact: bool):
    """sup over product events A_{1:n} of TV(P(.|A_{1:n}), P(.|A_{1:n-1})).

    ``P`` has n history axes followed by target axes.
    """
    A = P.shape[0]
    target = P.reshape(P.shape[:n] + (-1,))
    S = subset_masks(A)
    E = S.shape[0]
    if E**n * target.shape[-1] > MAX_EVENT_CELLS:
        raise StateSpaceTooLarge("state space too large for product-event enumeration")
    if exact:
        S = S.astype(object)
    Q = target
    for ax in range(n):
        Q = np.moveaxis(np.tensordot(S, Q, axes=([1], [ax])), 0, ax)
    mass = Q.sum(axis=-1)
    cond = _conditional(Q, mass, exact)
    prev = np.take(cond, [E - 1], axis=n - 1)
    tv = _half_l1(cond - prev)
    valid = mass > 0
    return tv[valid].max() if valid.any() else (Fraction(0) if exact else 0.0)


def _scalar(x, exact: bool):
    return x if exact else float(x)


def _check_s(law: FiniteSequenceLaw, s: int):
    if not 1 <= s < law.length:
        raise ValidationError(f"lag s must satisfy 1 <= s < N = {law.length}")


def eta_exact(law: FiniteSequenceLaw, s: int):
    """Mixing coefficient for the single coordinate Z_{n+s}."""
    _check_s(law, s)
    best = Fraction(0) if law.exact else 0.0
    for n in range(1, law.length - s + 1):
        P = law.marginal(list(range(n)) + [n + s - 1])
        best = max(best, _event_sup(P, n, law.exact))
    return _scalar(best, law.exact)


def eta_bar_exact(law: FiniteSequenceLaw, s: int):
    """Tail mixing coefficient for the block Z_{n+s:N}."""
    _check_s(law, s)
    best = Fraction(0) if law.exact else 0.0
    N = law.length
    for n in range(1, N - s + 1):
        P = law.marginal(list(range(n)) + list(range(n + s - 1, N)))
        best = max(best, _event_sup(P, n, law.exact))
    return _scalar(best, law.exact)


def event_tv(law: FiniteSequenceLaw, events: Sequence, s: int, tail: bool = False):
    """TV between the laws of Z_{n+s} (or Z_{n+s:N}) given A_{1:n} and given A_{1:n-1}.

    ``events`` lists n subsets of alphabet values. Raises if P(A_{1:n}) = 0.
    """
    n = len(events)
    N = law.length
    if n < 1 or n + s > N:
        raise ValidationError("need 1 <= n and n + s <= N")
    target = list(range(n + s - 1, N)) if tail else [n + s - 1]
    P = law.marginal(list(range(n)) + target)
    P = P.reshape(P.shape[:n] + (-1,))
    ind = []
    for ev in events:
        row = np.array([1 if v in ev else 0 for v in law.alphabet])
        ind.append(row.astype(object) if law.exact else row.astype(np.float64))
    cur = P
    for k, row in enumerate(ind):
        cur = np.tensordot(row, cur, axes=([0], [0]))
        if k == n - 2:
            prev = cur
    prev = P.sum(axis=0) if n == 1 else prev.sum(axis=0)
    if cur.sum() == 0:
        raise ValidationError("event has probability zero")
    return _scalar(_half_l1(cur / cur.sum() - prev / prev.sum()), law.exact)


def eta_hat_kr(law: FiniteSequenceLaw, n: int, s: int):
    """Pointwise coefficient: sup over z_{1:n}, z'_n of TV of the tail laws.

    Compares Law(Z_{n+s:N} | Z_{1:n} = z_{1:n}) with the law given
    z_{1:n-1} z'_n. Returns 0 when no admissible pair exists.
    """
    N = law.length
    if not (1 <= n and 1 <= s and n + s <= N):
        raise ValidationError("need 1 <= n, 1 <= s and n + s <= N")
    A = law.size
    P = law.marginal(list(range(n)) + list(range(n + s - 1, N)))
    P = P.reshape(A ** (n - 1), A, -1)
    mass = P.sum(axis=-1)
    cond = _conditional(P, mass, law.exact)
    tv = _half_l1(cond[:, :, None, :] - cond[:, None, :, :])
    ok = (mass > 0)[:, :, None] & (mass > 0)[:, None, :]
    zero = Fraction(0) if law.exact else 0.0
    return _scalar(tv[ok].max(), law.exact) if ok.any() else zero


def eta_hat_sup(law: FiniteSequenceLaw, s: int):
    """max over n of eta_hat_kr(law, n, s)."""
    _check_s(law, s)
    return max(eta_hat_kr(law, n, s) for n in range(1, law.length - s + 1))


def phi_exact(law: FiniteSequenceLaw, s: int):
    """phi-mixing coefficient sup TV(Law(Z_{n+s} | Z_{1:n} in B), Law(Z_{n+s})) over all sets B.

    For a fixed target set the conditional probability given B is an average
    over the histories in B, so the supremum is attained at single histories.
    """
    _check_s(law, s)
    best = Fraction(0) if law.exact else 0.0
    A = law.size
    for n in range(1, law.length - s + 1):
        P = law.marginal(list(range(n)) + [n + s - 1]).reshape(A**n, A)
        mass = P.sum(axis=-1)
        cond = _conditional(P, mass, law.exact)
        base = law.marginal([n + s - 1])
        tv = _half_l1(cond - base[None, :])
        valid = mass > 0
        if valid.any():
            best = max(best, tv[valid].max())
    return _scalar(best, law.exact)


# ----------------------------------------------------------- Markov route


def eta_markov_filter(initial, transition, length: int, s: int) -> float:
    """Mixing coefficient of a Markov chain path via forward filtering.

    For a Markov chain the conditional law of Z_{n+s:N} given a product event
    is (filtered law of Z_n) K^s followed by the chain itself, so the single
    coordinate and the tail coefficients coincide.
    """
    init = np.asarray(initial, dtype=np.float64)
    K = np.asarray(transition, dtype=np.float64)
    A = init.size
    if not 1 <= s < length:
        raise ValidationError("need 1 <= s < length")
    S = subset_masks(A).astype(np.float64)
    Ks = np.linalg.matrix_power(K, s)
    best = 0.0
    pre = init[None, :]
    for n in range(1, length - s + 1):
        if pre.shape[0] * S.shape[0] * A > MAX_EVENT_CELLS:
            raise StateSpaceTooLarge("state space too large for product-event enumeration")
        alpha = (pre[:, None, :] * S[None, :, :]).reshape(-1, A)
        base = np.repeat(pre, S.shape[0], axis=0)
        mass = alpha.sum(axis=1)
        ok = mass > 0
        a = alpha[ok] / mass[ok, None]
        b = base[ok] / base[ok].sum(axis=1, keepdims=True)
        tv = 0.5 * np.abs(a @ Ks - b @ Ks).sum(axis=1)
        best = max(best, float(tv.max()))
        pre = alpha @ K
    return best


# ------------------------------------------------------------- profiles


@dataclass(frozen=True)
class MixingProfile:
    """Coefficients for s = 1..N-1 (index 0 holds s = 1)."""

    eta: tuple
    eta_bar: tuple
    eta_hat: tuple

    @property
    def eta_sum(self):
        return 1 + 2 * sum(self.eta)

    @property
    def eta_bar_sum(self):
        return 1 + sum(self.eta_bar)


def mixing_profile(law: FiniteSequenceLaw, lags: Sequence[int] | None = None) -> MixingProfile:
    """Compute eta, eta_bar and sup_n eta_hat for each lag (default: all of 1..N-1)."""
    lags = range(1, law.length) if lags is None else lags
    return MixingProfile(
        tuple(eta_exact(law, s) for s in lags),
        tuple(eta_bar_exact(law, s) for s in lags),
        tuple(eta_hat_sup(law, s) for s in lags),
    )


def eta_bound_memory_chain(rho: float, lag: int, s: int) -> float:
    """min(1, 2 rho^(D s - 1)) for slices of the memory chain at stride D."""
    if s < 1 or lag < 1:
        raise ValidationError("need s >= 1 and lag >= 1")
    if rho == 0:
        return 0.0 if lag * s > 1 else 1.0
    return min(1.0, 2.0 * rho ** (lag * s - 1))


def eta_bound_seasonal(rho: float, theta: float, tau: int, s: int) -> float:
    """min(1, 2 (rho + theta)^(tau s - 1)) for slices of the seasonal chain."""
    r = rho + theta
    if r == 0:
        return 0.0 if tau * s > 1 else 1.0
    return min(1.0, 2.0 * r ** (tau * s - 1))


def eta_bound_uniformly_ergodic(C: float, rho: float, s: int) -> float:
    """min(1, C rho^s) for a chain with sup_z,z' TV(K^s(z), K^s(z')) <= C rho^s."""
    return min(1.0, C * rho**s)


def eta_sums(eta_fn: Callable[[int], float], n: int) -> tuple[float, float]:
    """(1 + 2 sum_{s<n} eta(s), 1 + sum_{s<n} eta(s)) for an eta bound used for both coefficients."""
    total = math.fsum(eta_fn(s) for s in range(1, n))
    return 1.0 + 2.0 * total, 1.0 + total


def phi_bound_from_eta(eta: Sequence, s: int) -> float:
    """min(1, sum_{k >= s} eta(k)) where eta[0] is the lag-1 coefficient."""
    if s < 1:
        raise ValidationError("s must be >= 1")
    return float(min(1.0, max(0.0, math.fsum(float(v) for v in eta[s - 1 :]))))


# ----------------------------------------------------- moment inequalities


def _values(law: FiniteSequenceLaw, f) -> np.ndarray:
    vals = np.array([f(v) for v in law.alphabet] if callable(f) else list(f), dtype=object if law.exact else np.float64)
    if vals.shape != (law.size,):
        raise ValidationError("f must give one value per alphabet entry")
    if any(v < 0 for v in vals):
        raise ValidationError("f must be nonnegative")
    return vals


def covariance_bound_check(law: FiniteSequenceLaw, f, i: int, j: int, tol: float = 1e-12):
    """(lhs, rhs, holds) for Cov(f(Z_i), f(Z_j)) <= eta(i - j) sup f E f(Z_j), 1 <= j < i <= N."""
    if not 1 <= j < i <= law.length:
        raise ValidationError("need 1 <= j < i <= N")
    v = _values(law, f)
    pij = law.marginal([i - 1, j - 1])
    Ei = law.marginal([i - 1]) @ v
    Ej = law.marginal([j - 1]) @ v
    lhs = v @ pij @ v - Ei * Ej
    rhs = eta_exact(law, i - j) * max(v) * Ej
    return lhs, rhs, bool(lhs <= rhs + tol)


def variance_bound_check(law: FiniteSequenceLaw, f, tol: float = 1e-12):
    """(lhs, rhs, holds) for Var(mean f(Z_n)) <= sup f E f(Z_1) (1 + 2 sum eta) / N.

    Requires identically distributed coordinates.
    """
    N = law.length
    first = law.marginal([0])
    for k in range(1, N):
        diff = law.marginal([k]) - first
        if law.exact and any(d != 0 for d in diff):
            raise ValidationError("coordinates are not identically distributed")
        if not law.exact and np.max(np.abs(diff.astype(np.float64))) > 1e-12:
            raise ValidationError("coordinates are not identically distributed")
    v = _values(law, f)
    mean = 0
    second = 0
    for i in range(N):
        mean = mean + law.marginal([i]) @ v
        for j in range(N):
            second = second + (v @ law.marginal([i, j]) @ v if i != j else law.marginal([i]) @ (v * v))
    lhs = second / (N * N) - (mean / N) ** 2
    eta_total = sum(eta_exact(law, s) for s in range(1, N))
    rhs = max(v) * (first @ v) * (1 + 2 * eta_total) / N
    return lhs, rhs, bool(lhs <= rhs + tol)


# ---------------------------------------------------------- example law


def eta_hat_gap_law(q=Fraction(1, 10)) -> FiniteSequenceLaw:
    """Three binary steps where the pointwise coefficient misses a large event effect.

    Z_1 ~ Ber(q). Given Z_1 = 0: Z_2 = 0 and Z_3 ~ Ber(1 - q). Given Z_1 = 1:
    Z_2 ~ Ber(q), then Z_3 ~ Ber(q) if Z_2 = 1 and Z_3 ~ Ber(1/2) if Z_2 = 0.
    """
    half = Fraction(1, 2) if isinstance(q, Fraction) else 0.5
    rows = [
        ((0, 0, 0), (1 - q) * q),
        ((0, 0, 1), (1 - q) * (1 - q)),
        ((1, 1, 1), q * q * q),
        ((1, 1, 0), q * q * (1 - q)),
        ((1, 0, 0), q * (1 - q) * half),
        ((1, 0, 1), q * (1 - q) * half),
    ]
    return FiniteSequenceLaw.from_table(rows, exact=isinstance(q, Fraction))


# ------------------------------------------------------------------- CSV


def _parse_token(tok: str):
    tok = tok.strip()
    for cast in (int, float):
        try:
            return cast(tok)
        except ValueError:
            pass
    return tok


def read_law_csv(source, exact: bool = False) -> FiniteSequenceLaw:
    """Read ``z_1,...,z_N,prob`` rows. Probabilities may be decimals or ratios like 1/10."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    else:
        rows = [r for r in csv.reader(source) if r]
    if not rows:
        raise ValidationError("empty law CSV")
    header = [h.strip() for h in rows[0]]
    N = len(header) - 1
    if N < 1 or header[-1] != "prob" or header[:-1] != [f"z_{k + 1}" for k in range(N)]:
        raise ValidationError("law CSV header must be z_1,...,z_N,prob")
    table = []
    for r in rows[1:]:
        if len(r) != N + 1:
            raise ValidationError(f"malformed row {r!r}")
        p = Fraction(r[-1].strip())
        table.append((tuple(_parse_token(t) for t in r[:-1]), p if exact else float(p)))
    return FiniteSequenceLaw.from_table(table, exact=exact)


def write_law_csv(target, law: FiniteSequenceLaw) -> None:
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"z_{k + 1}" for k in range(law.length)] + ["prob"])
        for idx in itertools.product(range(law.size), repeat=law.length):
            p = law.prob[idx]
            if p > 0:
                w.writerow([str(law.alphabet[i]) for i in idx] + [str(p) if law.exact else repr(float(p))])
    finally:
        if own:
            fh.close()
