"""Hot loops: numba kernels with pure-numpy fallbacks.

The numba path is used when numba imports and ``AWEST_DISABLE_NUMBA`` is unset
(or set to 0/false). Both paths implement the same algorithms with the same
tie-breaking, so they agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def numba_requested() -> bool:
    flag = os.environ.get("AWEST_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and numba_requested()


def _njit(fn):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------- chains


def memory_chain_path_numpy(eps, keep):
    """X[0] = eps[0]; X[k+1] = X[k] if keep[k] else eps[k]."""
    eps = np.asarray(eps, dtype=np.float64)
    keep = np.asarray(keep, dtype=np.bool_)
    src = np.where(keep, 0, np.arange(keep.size))
    idx = np.empty(eps.size, dtype=np.int64)
    idx[0] = 0
    if keep.size:
        idx[1:] = np.maximum.accumulate(src)
    return eps[idx]


def _memory_chain_path_loop(eps, keep):
    out = np.empty(eps.size, dtype=np.float64)
    out[0] = eps[0]
    for k in range(keep.size):
        if keep[k]:
            out[k + 1] = out[k]
        else:
            out[k + 1] = eps[k]
    return out


def seasonal_path_numpy(eps_ext, branch, lag):
    """X[0] = 0; branch 0 keeps, 1 takes eps_ext[k], 2 takes eps_ext[k + lag].

    ``eps_ext[j + lag]`` holds the innovation with time index ``j``.
    """
    eps_ext = np.asarray(eps_ext, dtype=np.float64)
    branch = np.asarray(branch, dtype=np.int64)
    k = np.arange(branch.size)
    val = np.where(branch == 1, eps_ext[k], eps_ext[k + lag])
    src = np.where(branch != 0, k + 1, 0)
    last = np.maximum.accumulate(src) if branch.size else src
    out = np.zeros(branch.size + 1, dtype=np.float64)
    hit = last > 0
    out[1:][hit] = val[last[hit] - 1]
    return out


def _seasonal_path_loop(eps_ext, branch, lag):
    out = np.empty(branch.size + 1, dtype=np.float64)
    out[0] = 0.0
    for k in range(branch.size):
        b = branch[k]
        if b == 0:
            out[k + 1] = out[k]
        elif b == 1:
            out[k + 1] = eps_ext[k]
        else:
            out[k + 1] = eps_ext[k + lag]
    return out


# ------------------------------------------------------- 1-d quantile coupling


def quantile_coupling_numpy(x, wx, y, wy):
    """Monotone coupling of two sorted 1-d weighted point sets.

    Returns (rows, cols, mass) of the comonotone plan.
    """
    cx = np.cumsum(wx)
    cy = np.cumsum(wy)
    total = min(cx[-1], cy[-1])
    cuts = np.unique(np.concatenate(([0.0], cx, cy)))
    cuts = cuts[cuts <= total]
    if cuts[-1] < total:
        cuts = np.append(cuts, total)
    mass = np.diff(cuts)
    mid = cuts[:-1] + 0.5 * mass
    rows = np.minimum(np.searchsorted(cx, mid, side="right"), x.size - 1)
    cols = np.minimum(np.searchsorted(cy, mid, side="right"), y.size - 1)
    keep = mass > 0
    return rows[keep], cols[keep], mass[keep]


def _quantile_coupling_loop(x, wx, y, wy):
    n = x.size
    m = y.size
    rows = np.empty(n + m, dtype=np.int64)
    cols = np.empty(n + m, dtype=np.int64)
    mass = np.empty(n + m, dtype=np.float64)
    i = 0
    j = 0
    k = 0
    ra = wx[0]
    rb = wy[0]
    while i < n and j < m:
        t = min(ra, rb)
        if t > 0:
            rows[k] = i
            cols[k] = j
            mass[k] = t
            k += 1
        ra -= t
        rb -= t
        if ra <= rb:
            i += 1
            if i < n:
                ra = wx[i]
        else:
            j += 1
            if j < m:
                rb = wy[j]
    return rows[:k], cols[:k], mass[:k]


# ------------------------------------------------ successive shortest paths


def transport_ssp_numpy(a, b, C, tol):
    """Min-cost transport plan by successive shortest augmenting paths.

    Dense Dijkstra on reduced costs; potentials keep reduced costs nonnegative.
    """
    n, m = C.shape
    F = np.zeros((n, m))
    sup = a.astype(np.float64).copy()
    dem = b.astype(np.float64).copy()
    pu = np.zeros(n)
    pv = C.min(axis=0)
    inf = np.inf
    guard = 0
    while (sup > tol).any():
        guard += 1
        if guard > 20 * (n + m) * (n + m) + 100:
            raise RuntimeError("transport solver failed to converge")
        du = np.where(sup > tol, 0.0, inf)
        dv = np.full(m, inf)
        doneu = np.zeros(n, dtype=bool)
        donev = np.zeros(m, dtype=bool)
        predu = np.full(n, -1)
        predv = np.full(m, -1)
        target = -1
        while True:
            cu = np.where(doneu, inf, du)
            cv = np.where(donev, inf, dv)
            iu = int(np.argmin(cu))
            iv = int(np.argmin(cv))
            if cu[iu] <= cv[iv]:
                if cu[iu] == inf:
                    break
                doneu[iu] = True
                nd = du[iu] + np.maximum(C[iu] + pu[iu] - pv, 0.0)
                upd = (~donev) & (nd < dv)
                dv[upd] = nd[upd]
                predv[upd] = iu
            else:
                donev[iv] = True
                if dem[iv] > tol:
                    target = iv
                    break
                nd = dv[iv] + np.maximum(pv[iv] - pu - C[:, iv], 0.0)
                upd = (~doneu) & (F[:, iv] > tol) & (nd < du)
                du[upd] = nd[upd]
                predu[upd] = iv
        if target < 0:
            break
        dt = dv[target]
        pu += np.minimum(du, dt)
        pv += np.minimum(dv, dt)

        delta = dem[target]
        j = target
        while True:
            i = predv[j]
            jj = predu[i]
            if jj < 0:
                delta = min(delta, sup[i])
                break
            delta = min(delta, F[i, jj])
            j = jj
        j = target
        while True:
            i = predv[j]
            F[i, j] += delta
            jj = predu[i]
            if jj < 0:
                sup[i] -= delta
                break
            F[i, jj] -= delta
            if F[i, jj] <= tol:
                F[i, jj] = 0.0
            j = jj
        dem[target] -= delta
    return F


def _transport_ssp_loop(a, b, C, tol):
    n, m = C.shape
    F = np.zeros((n, m))
    sup = a.copy()
    dem = b.copy()
    pu = np.zeros(n)
    pv = np.empty(m)
    for j in range(m):
        best = C[0, j]
        for i in range(1, n):
            if C[i, j] < best:
                best = C[i, j]
        pv[j] = best
    inf = np.inf
    du = np.empty(n)
    dv = np.empty(m)
    doneu = np.empty(n, dtype=np.bool_)
    donev = np.empty(m, dtype=np.bool_)
    predu = np.empty(n, dtype=np.int64)
    predv = np.empty(m, dtype=np.int64)
    guard = 0
    while True:
        left = False
        for i in range(n):
            if sup[i] > tol:
                left = True
        if not left:
            break
        guard += 1
        if guard > 20 * (n + m) * (n + m) + 100:
            raise RuntimeError("transport solver failed to converge")
        for i in range(n):
            du[i] = 0.0 if sup[i] > tol else inf
            doneu[i] = False
            predu[i] = -1
        for j in range(m):
            dv[j] = inf
            donev[j] = False
            predv[j] = -1
        target = -1
        while True:
            best = inf
            bi = -1
            is_u = True
            for i in range(n):
                if not doneu[i] and du[i] < best:
                    best = du[i]
                    bi = i
            for j in range(m):
                if not donev[j] and dv[j] < best:
                    best = dv[j]
                    bi = j
                    is_u = False
            if bi < 0:
                break
            if is_u:
                doneu[bi] = True
                for j in range(m):
                    if not donev[j]:
                        r = C[bi, j] + pu[bi] - pv[j]
                        if r < 0.0:
                            r = 0.0
                        nd = du[bi] + r
                        if nd < dv[j]:
                            dv[j] = nd
                            predv[j] = bi
            else:
                donev[bi] = True
                if dem[bi] > tol:
                    target = bi
                    break
                for i in range(n):
                    if not doneu[i] and F[i, bi] > tol:
                        r = pv[bi] - pu[i] - C[i, bi]
                        if r < 0.0:
                            r = 0.0
                        nd = dv[bi] + r
                        if nd < du[i]:
                            du[i] = nd
                            predu[i] = bi
        if target < 0:
            break
        dt = dv[target]
        for i in range(n):
            pu[i] += min(du[i], dt)
        for j in range(m):
            pv[j] += min(dv[j], dt)

        delta = dem[target]
        j = target
        while True:
            i = predv[j]
            jj = predu[i]
            if jj < 0:
                delta = min(delta, sup[i])
                break
            delta = min(delta, F[i, jj])
            j = jj
        j = target
        while True:
            i = predv[j]
            F[i, j] += delta
            jj = predu[i]
            if jj < 0:
                sup[i] -= delta
                break
            F[i, jj] -= delta
            if F[i, jj] <= tol:
                F[i, jj] = 0.0
            j = jj
        dem[target] -= delta
    return F


memory_chain_path_numba = _njit(_memory_chain_path_loop)
seasonal_path_numba = _njit(_seasonal_path_loop)
quantile_coupling_numba = _njit(_quantile_coupling_loop)
transport_ssp_numba = _njit(_transport_ssp_loop)


def _pick(fast, slow):
    return fast if (USE_NUMBA and fast is not None) else slow


def memory_chain_path(eps, keep):
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    keep = np.ascontiguousarray(keep, dtype=np.bool_)
    return _pick(memory_chain_path_numba, memory_chain_path_numpy)(eps, keep)


def seasonal_path(eps_ext, branch, lag):
    eps_ext = np.ascontiguousarray(eps_ext, dtype=np.float64)
    branch = np.ascontiguousarray(branch, dtype=np.int64)
    return _pick(seasonal_path_numba, seasonal_path_numpy)(eps_ext, branch, int(lag))


def quantile_coupling(x, wx, y, wy):
    args = [np.ascontiguousarray(v, dtype=np.float64) for v in (x, wx, y, wy)]
    return _pick(quantile_coupling_numba, quantile_coupling_numpy)(*args)


def transport_ssp(a, b, C, tol=1e-14):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    return _pick(transport_ssp_numba, transport_ssp_numpy)(a, b, C, float(tol))
