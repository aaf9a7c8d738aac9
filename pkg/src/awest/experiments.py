"""Monte-Carlo experiments: convergence rate, concentration, consistency and a
bounded-differences check, with CSV/SVG output.

Every replication draws from its own counter-based stream keyed by the run
seed, the experiment cell and the replication index, so results do not depend
on the number of workers. Aggregation is an ordered reduction.
"""

from __future__ import annotations

import configparser
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from . import bounds
from .adapted_ot import aw_distance, smoothed_adapted_estimator
from .errors import ValidationError
from .mixing import eta_bound_memory_chain, eta_bound_seasonal, eta_sums
from .path_measure import DiscretePathMeasure, PathSample, adapted_empirical_measure
from .processes import (
    MemoryChainParams,
    SeasonalParams,
    exact_law_memory_chain,
    memory_chain_series,
    simulate_memory_chain,
    simulate_seasonal,
)

log = logging.getLogger(__name__)

DEFAULT_N_GRID = (250, 354, 500, 707, 1000, 1414, 2000)
# quarter-octave steps: the grid-alignment bias of a discrete law oscillates in N,
# so the baseline slope fit samples the oscillation densely
BASELINE_N_GRID = (250, 297, 354, 420, 500, 595, 707, 841, 1000, 1189, 1414, 1682, 2000)
KINDS = ("memory", "seasonal")
EXPERIMENTS = ("rate", "concentration", "consistency", "bdd")


def fmt(x) -> str:
    """12 significant digits, locale independent."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment run (see ``from_ini`` for the file format)."""

    kind: str = "memory"
    rho: float = 0.99
    lags: tuple = (2, 5, 10)
    theta: float = 0.0
    tau: int = 1
    baseline: bool = True
    baseline_lag: int = 2
    n_values: tuple = DEFAULT_N_GRID
    baseline_n_values: tuple = BASELINE_N_GRID
    replications: int = 200
    seed: int = 0
    concentration_n: int = 1000
    concentration_replications: int = 500
    hist_bins: int = 30
    consistency_n: tuple = (125, 500, 2000)
    consistency_rho: float = 0.7
    consistency_lag: int = 5
    consistency_replications: int = 40
    noise_samples: int = 8
    bdd_process: str = "bernoulli"
    bdd_n: int = 100
    bdd_rho: float = 0.9
    bdd_replications: int = 4000
    out_dir: str = "results"
    calibrate: bool = True
    experiments: tuple = ("rate", "concentration")

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"process kind must be one of {KINDS}")
        if self.replications < 1 or self.concentration_replications < 1:
            raise ValidationError("replications must be >= 1")
        for grid in (self.n_values, self.baseline_n_values):
            if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValidationError("N grid must be nonempty and strictly increasing")
        if any(n < 1 for n in self.n_values + self.baseline_n_values) or not self.lags:
            raise ValidationError("need N >= 1 and at least one lag")
        bad = set(self.experiments) - set(EXPERIMENTS)
        if bad:
            raise ValidationError(f"unknown experiments {sorted(bad)}")
        if self.kind == "memory":
            MemoryChainParams(self.rho, min(self.lags))
        else:
            SeasonalParams(self.rho, self.theta, self.tau)

    @property
    def curve_lags(self) -> tuple:
        # the seasonal chain is sliced at its own period
        return self.lags if self.kind == "memory" else (self.tau,)

    @classmethod
    def from_ini(cls, source) -> "ExperimentConfig":
        """Read ``[process]``, ``[grid]`` and ``[output]`` sections; missing keys keep defaults."""
        cp = configparser.ConfigParser()
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
            with open(source) as fh:
                cp.read_file(fh)
        else:
            cp.read_string(str(source))
        kw = {}
        p = cp["process"] if cp.has_section("process") else {}
        g = cp["grid"] if cp.has_section("grid") else {}
        o = cp["output"] if cp.has_section("output") else {}
        if "kind" in p:
            kw["kind"] = p["kind"].strip()
        for key in ("rho", "theta", "consistency_rho", "bdd_rho"):
            if key in p:
                kw[key] = float(p[key])
        for key in ("tau", "baseline_lag", "consistency_lag"):
            if key in p:
                kw[key] = int(p[key])
        if "lags" in p:
            kw["lags"] = _ints(p["lags"])
        if "baseline" in p:
            kw["baseline"] = cp.getboolean("process", "baseline")
        if "bdd_process" in p:
            kw["bdd_process"] = p["bdd_process"].strip()
        for key in ("n_values", "baseline_n_values"):
            if key in g:
                kw[key] = _ints(g[key])
        if "consistency_n" in g:
            kw["consistency_n"] = _ints(g["consistency_n"])
        for key in (
            "replications",
            "seed",
            "concentration_n",
            "concentration_replications",
            "hist_bins",
            "consistency_replications",
            "noise_samples",
            "bdd_n",
            "bdd_replications",
        ):
            if key in g:
                kw[key] = int(g[key])
        if "dir" in o:
            kw["out_dir"] = o["dir"].strip()
        if "calibrate" in o:
            kw["calibrate"] = cp.getboolean("output", "calibrate")
        if "experiments" in o:
            kw["experiments"] = tuple(v.strip() for v in o["experiments"].split(",") if v.strip())
        return cls(**kw)


@dataclass(frozen=True)
class RunRecord:
    """One replication: which process and cell, the AW value and the time it took."""

    process: str
    params: tuple
    N: int
    replication: int
    aw_value: float
    wall_time: float
    error: str = ""


# ------------------------------------------------------------- processes


def exact_law_seasonal(rho: float, theta: float, tau: int) -> DiscretePathMeasure:
    """Stationary law of two consecutive values of the seasonal chain.

    X_m is uniform. X_{m+1} repeats X_m with probability rho, copies the
    seasonal innovation eps_{m - tau} with probability theta and draws afresh
    otherwise. The seasonal innovation is X_m itself exactly when X_m was set
    by a fresh draw at time m - tau and kept for the tau - 1 steps since,
    which has probability (1 - rho - theta) rho^(tau - 1); otherwise it is
    independent of X_m.
    """
    same_source = (1.0 - rho - theta) * rho ** (tau - 1)
    stay = rho + theta * (same_source + (1.0 - same_source) / 3.0) + (1.0 - rho - theta) / 3.0
    vals = np.array([-1.0, 0.0, 1.0])
    paths, weights = [], []
    for a in vals:
        for b in vals:
            paths.append([a, b])
            weights.append((stay if a == b else (1.0 - stay) / 2.0) / 3.0)
    return DiscretePathMeasure.from_atoms(np.array(paths), np.array(weights))


@lru_cache(maxsize=32)
def _reference(kind: str, rho: float, theta: float, tau: int) -> DiscretePathMeasure:
    if kind == "memory":
        return exact_law_memory_chain(rho)
    return exact_law_seasonal(rho, theta, tau)


def _simulate(kind, rho, theta, tau, lag, N, seed, rep) -> PathSample:
    if kind == "memory":
        return simulate_memory_chain(MemoryChainParams(rho, lag), N, seed, rep)
    return simulate_seasonal(SeasonalParams(rho, theta, tau), N, seed, rep)


def cell_seed(seed: int, *labels) -> int:
    """Integer seed for one experiment cell, derived from the run seed."""
    from .rng import _label

    ss = np.random.SeedSequence(entropy=_label(seed), spawn_key=tuple(_label(v) for v in labels))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _aw_task(task) -> RunRecord:
    kind, rho, theta, tau, lag, N, seed, rep, smooth = task
    t0 = time.perf_counter()
    try:
        mu = _reference(kind, rho, theta, tau)
        sample = _simulate(kind, rho, theta, tau, lag, N, seed, rep)
        if smooth:
            nu = smoothed_adapted_estimator(sample, smooth, seed=cell_seed(seed, "noise", rep))
        else:
            nu = adapted_empirical_measure(sample)
        value, err = aw_distance(mu, nu)[0], ""
    except Exception as exc:  # recorded, not raised
        value, err = float("nan"), f"{type(exc).__name__}: {exc}"
    return RunRecord(kind, (rho, theta, tau, lag), N, rep, value, time.perf_counter() - t0, err)


def _run_tasks(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _mean_se(values):
    v = np.asarray([x for x in values if not math.isnan(x)])
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _eta_fn(kind, rho, theta, tau, lag):
    if kind == "memory":
        return lambda s: eta_bound_memory_chain(rho, lag, s)
    return lambda s: eta_bound_seasonal(rho, theta, tau, s)


# ------------------------------------------------------------------ rate


@dataclass(frozen=True)
class RateRow:
    label: str
    rho: float
    D: int
    N: int
    replications: int
    mean: float
    std_err: float
    eta_sum: float
    bound: float = float("nan")
    failures: int = 0


@dataclass
class RateResult:
    rows: list
    constants: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    records: list = field(default_factory=list)


def _rate_curves(cfg: ExperimentConfig):
    curves = [("main", cfg.rho, D, cfg.n_values) for D in cfg.curve_lags]
    if cfg.baseline:
        curves.append(("independent", 0.0, cfg.baseline_lag if cfg.kind == "memory" else cfg.tau, cfg.baseline_n_values))
    return curves


def run_rate_experiment(cfg: ExperimentConfig, threads: int = 1) -> RateResult:
    """Mean AW(mu, adapted empirical measure) over replications for each lag and N."""
    tasks, index = [], []
    for label, rho, D, grid in _rate_curves(cfg):
        theta = cfg.theta if label == "main" else 0.0
        kind = cfg.kind if label == "main" else "memory"
        for N in grid:
            seed = cell_seed(cfg.seed, "rate", label, D, N)
            index.append((label, kind, rho, theta, D, N, len(tasks)))
            tasks.extend((kind, rho, theta, cfg.tau, D, N, seed, r, 0) for r in range(cfg.replications))
    records = _run_tasks(_aw_task, tasks, threads)
    rows = []
    for label, kind, rho, theta, D, N, start in index:
        chunk = records[start : start + cfg.replications]
        mean, se = _mean_se([r.aw_value for r in chunk])
        eta_sum, _ = eta_sums(_eta_fn(kind, rho, theta, cfg.tau, D), N)
        rows.append(RateRow(label, rho, D, N, cfg.replications, mean, se, eta_sum, failures=sum(1 for r in chunk if r.error)))
    result = RateResult(rows, records=records)
    for label in {r.label for r in rows}:
        sub = [r for r in rows if r.label == label]
        for D in sorted({r.D for r in sub}):
            cur = [r for r in sub if r.D == D]
            if len(cur) >= 2 and all(r.mean > 0 for r in cur):
                result.slopes[(label, D)] = float(np.polyfit(np.log([r.N for r in cur]), np.log([r.mean for r in cur]), 1)[0])
    if cfg.calibrate:
        result.rows, result.constants = calibrate_rate(rows)
    return result


def calibrate_rate(rows: list) -> tuple[list, dict]:
    """Fit C per label by least squares in log space on the two smallest N, then fill the bound column."""
    out, consts = [], {}
    for label in sorted({r.label for r in rows}):
        sub = [r for r in rows if r.label == label]
        small = sorted({r.N for r in sub})[:2]
        logs = [
            math.log(r.mean / (math.sqrt(r.eta_sum) * bounds.rate_inf(r.N, 1, 2)))
            for r in sub
            if r.N in small and r.mean > 0
        ]
        if logs:
            consts[label] = math.exp(sum(logs) / len(logs))
    for r in rows:
        C = consts.get(r.label)
        if C is None:
            out.append(r)
            continue
        spec = bounds.RateSpec(d=1, T=2, eta_sum=r.eta_sum, C=C)
        out.append(replace(r, bound=bounds.moment_bound_compact(r.N, spec)))
    return out, consts


def write_rate_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("curve,rho,D,N,replications,mean_aw,std_err,eta_sum,bound,failures\n")
        for r in rows:
            fh.write(
                ",".join(
                    [r.label, fmt(r.rho), fmt(r.D), fmt(r.N), fmt(r.replications), fmt(r.mean), fmt(r.std_err), fmt(r.eta_sum), fmt(r.bound), fmt(r.failures)]
                )
                + "\n"
            )


# --------------------------------------------------------- concentration


@dataclass(frozen=True)
class ConcentrationSummary:
    D: int
    mean: float
    std_err: float
    skewness: float
    p95: float
    eta_bar_sum: float
    counts: tuple
    edges: tuple
    tail_eps: tuple = ()
    tail_empirical: tuple = ()
    tail_slack: tuple = ()
    tail_bound: tuple = ()

    @property
    def tails_ok(self) -> bool:
        return all(p <= b + s for p, b, s in zip(self.tail_empirical, self.tail_bound, self.tail_slack))


@dataclass
class ConcentrationResult:
    summaries: list
    c: float
    values: dict
    records: list = field(default_factory=list)


TAIL_MULTIPLES = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
DIAMETER = 4.0  # support {-1,0,1}^2 under the summed per-step distance


def _tail(values, eps):
    v = np.asarray(values)
    dev = np.abs(v - v.mean())
    return np.array([float(np.mean(dev > e)) for e in eps])


def run_concentration_experiment(cfg: ExperimentConfig, threads: int = 1) -> ConcentrationResult:
    """Distribution of AW at a fixed N for each lag, with a calibrated tail check.

    The tail constant c is fitted on the even-indexed replications as the
    largest value for which the compact bound dominates every lag and grid
    eps; the odd-indexed replications are then checked against it with a
    3-standard-error allowance.
    """
    N, M = cfg.concentration_n, cfg.concentration_replications
    tasks = []
    lags = cfg.curve_lags
    for D in lags:
        seed = cell_seed(cfg.seed, "concentration", D, N)
        tasks.extend((cfg.kind, cfg.rho, cfg.theta, cfg.tau, D, N, seed, r, 0) for r in range(M))
    records = _run_tasks(_aw_task, tasks, threads)
    values = {}
    for i, D in enumerate(lags):
        vals = np.array([r.aw_value for r in records[i * M : (i + 1) * M]])
        values[D] = vals[~np.isnan(vals)]
    top = max(float(v.max()) for v in values.values() if v.size)
    edges = np.linspace(0.0, top * (1 + 1e-9) if top > 0 else 1.0, cfg.hist_bins + 1)

    sums = {D: eta_sums(_eta_fn(cfg.kind, cfg.rho, cfg.theta, cfg.tau, D), N)[1] for D in lags}
    eps = {D: tuple(k * float(values[D].std(ddof=1)) if values[D].size > 1 else 0.0 for k in TAIL_MULTIPLES) for D in lags}
    # calibration on even replications
    c_needed = []
    for D in lags:
        cal = values[D][0::2]
        if cal.size < 2:
            continue
        for e, p in zip(eps[D], _tail(cal, eps[D])):
            if e > 0 and p > 0:
                c_needed.append(-math.log(p / 2.0) * DIAMETER**2 * sums[D] ** 2 / (N * e * e))
    c = min(c_needed) if c_needed else 1.0

    summaries = []
    for D in lags:
        v = values[D]
        mean, se = _mean_se(v)
        test = v[1::2]
        p_emp = _tail(test, eps[D]) if test.size else np.zeros(len(TAIL_MULTIPLES))
        slack = 3.0 * np.sqrt(p_emp * (1 - p_emp) / max(test.size, 1))
        bnd = [bounds.concentration_bound_compact(N, e, DIAMETER, 2, sums[D], c) if e > 0 else 1.0 for e in eps[D]]
        counts, _ = np.histogram(v, bins=edges)
        summaries.append(
            ConcentrationSummary(
                D=D,
                mean=mean,
                std_err=se,
                skewness=float(stats.skew(v)) if v.size > 2 else float("nan"),
                p95=float(np.percentile(v, 95)) if v.size else float("nan"),
                eta_bar_sum=sums[D],
                counts=tuple(int(x) for x in counts),
                edges=tuple(float(x) for x in edges),
                tail_eps=eps[D],
                tail_empirical=tuple(float(x) for x in p_emp),
                tail_slack=tuple(float(x) for x in slack),
                tail_bound=tuple(bnd),
            )
        )
    return ConcentrationResult(summaries, c, values, records)


def write_hist_csv(path, s: ConcentrationSummary) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_left,bin_right,count\n")
        for a, b, k in zip(s.edges[:-1], s.edges[1:], s.counts):
            fh.write(f"{fmt(a)},{fmt(b)},{k}\n")


def write_tail_csv(path, summaries: list, c: float) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("D,eps,empirical_tail,slack,bound,c\n")
        for s in summaries:
            for e, p, sl, b in zip(s.tail_eps, s.tail_empirical, s.tail_slack, s.tail_bound):
                fh.write(",".join([fmt(s.D), fmt(e), fmt(p), fmt(sl), fmt(b), fmt(c)]) + "\n")


# ----------------------------------------------------------- consistency


@dataclass(frozen=True)
class ConsistencyRow:
    N: int
    mean: float
    std_err: float
    mean_smoothed: float
    std_err_smoothed: float


def run_consistency_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, bool]:
    """AW of the plain and Gaussian-smoothed estimators along ``consistency_n``.

    Returns the table and whether the last mean is at most half the first.
    """
    M = cfg.consistency_replications
    rho, D = cfg.consistency_rho, cfg.consistency_lag
    tasks = []
    for N in cfg.consistency_n:
        seed = cell_seed(cfg.seed, "consistency", D, N)
        for smooth in (0, cfg.noise_samples):
            tasks.extend(("memory", rho, 0.0, 1, D, N, seed, r, smooth) for r in range(M))
    records = _run_tasks(_aw_task, tasks, threads)
    rows = []
    for i, N in enumerate(cfg.consistency_n):
        plain = records[2 * i * M : (2 * i + 1) * M]
        smooth = records[(2 * i + 1) * M : (2 * i + 2) * M]
        m, se = _mean_se([r.aw_value for r in plain])
        ms, ses = _mean_se([r.aw_value for r in smooth])
        rows.append(ConsistencyRow(N, m, se, ms, ses))
    trend = len(rows) >= 2 and rows[-1].mean * 2.0 <= rows[0].mean
    return rows, trend


def write_consistency_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("N,mean_aw,std_err,mean_aw_smoothed,std_err_smoothed\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in (r.N, r.mean, r.std_err, r.mean_smoothed, r.std_err_smoothed)) + "\n")


# -------------------------------------------------------- bounded diffs


@dataclass(frozen=True)
class BddRow:
    eps: float
    empirical: float
    slack: float
    bound: float

    @property
    def violation(self) -> float:
        return self.empirical - self.bound - self.slack


def _bdd_series(process: str, N: int, rho: float, seed: int, rep: int) -> tuple[np.ndarray, float]:
    """A length-N finite-alphabet series and its exact mean."""
    from .rng import stream

    if process == "bernoulli":
        return (stream(seed, "bdd", rep).random(N) < 0.5).astype(float), 0.5
    if process == "memory":
        return memory_chain_series(rho, N + 1, seed, rep)[1:], 0.0
    if process == "constant":
        return np.ones(N), 1.0
    raise ValidationError(f"unknown bdd process {process!r}")


def _bdd_task(task):
    process, N, rho, seed, rep = task
    z, mean = _bdd_series(process, N, rho, seed, rep)
    return float(z.mean()) - mean


def run_bdd_check(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, float]:
    """Deviation tails of the sample mean against the mixing bounded-differences bound.

    Returns the rows and the largest violation (empirical - bound - 3 se).
    """
    process, N, M = cfg.bdd_process, cfg.bdd_n, cfg.bdd_replications
    seed = cell_seed(cfg.seed, "bdd", process, N)
    dev = np.abs(_run_tasks(_bdd_task, [(process, N, cfg.bdd_rho, seed, r) for r in range(M)], threads))
    value_range = {"bernoulli": 1.0, "memory": 2.0, "constant": 0.0}[process]
    if process == "memory":
        eta_bar_sum = eta_sums(lambda s: eta_bound_memory_chain(cfg.bdd_rho, 1, s), N)[1]
    else:
        eta_bar_sum = 1.0
    rows = []
    scale = max(value_range, 1.0) / math.sqrt(N)
    for k in TAIL_MULTIPLES:
        e = k * scale
        p = float(np.mean(dev > e))
        slack = 3.0 * math.sqrt(p * (1 - p) / M)
        b = bounds.bdd_bound(N, value_range / N, e, eta_bar_sum) if value_range > 0 else 0.0
        rows.append(BddRow(e, p, slack, b))
    return rows, max(r.violation for r in rows)


def write_bdd_csv(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("eps,empirical_tail,slack,bound\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in (r.eps, r.empirical, r.slack, r.bound)) + "\n")


# ----------------------------------------------------------------- plots


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "awest"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(plt, fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def emit_plots(out_dir, rate: RateResult | None = None, conc: ConcentrationResult | None = None) -> list:
    """Write rate.svg (log-log means with calibrated bounds) and hist.svg."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plt = _figure()
    written = []
    if rate is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        for label in sorted({r.label for r in rate.rows}):
            for D in sorted({r.D for r in rate.rows if r.label == label}):
                cur = [r for r in rate.rows if r.label == label and r.D == D]
                name = f"D={D}" if label == "main" else f"independent (D={D})"
                line = ax.errorbar([r.N for r in cur], [r.mean for r in cur], yerr=[r.std_err for r in cur], marker="o", ms=3, label=name)
                if not any(math.isnan(r.bound) for r in cur):
                    ax.plot([r.N for r in cur], [r.bound for r in cur], ls="--", lw=0.8, color=line[0].get_color())
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("mean AW")
        ax.legend(fontsize=7)
        _save(plt, fig, out / "rate.svg")
        written.append(out / "rate.svg")
    if conc is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in conc.summaries:
            ax.stairs(s.counts, s.edges, label=f"D={s.D}")
        ax.set_xlabel("AW")
        ax.set_ylabel("count")
        ax.legend(fontsize=7)
        _save(plt, fig, out / "hist.svg")
        written.append(out / "hist.svg")
    return written


# ------------------------------------------------------------------ driver


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> dict:
    """Run the configured experiments and write all outputs. Returns the results by name."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    lines = [f"seed {cfg.seed}", f"process {cfg.kind} rho {fmt(cfg.rho)} lags {','.join(map(str, cfg.curve_lags))}"]
    rate = conc = None
    if "rate" in cfg.experiments:
        t0 = time.perf_counter()
        rate = run_rate_experiment(cfg, threads)
        log.info("rate experiment: %.1fs", time.perf_counter() - t0)
        write_rate_csv(out / "rate.csv", rate.rows)
        results["rate"] = rate
        for label, C in sorted(rate.constants.items()):
            lines.append(f"rate calibrated C[{label}] {fmt(C)}")
        for (label, D), slope in sorted(rate.slopes.items()):
            lines.append(f"rate slope {label} D={D} {fmt(slope)}")
        main = [r for r in rate.rows if r.label == "main"]
        for D in sorted({r.D for r in main}):
            cur = [r.mean for r in main if r.D == D]
            lines.append(f"rate strictly decreasing D={D} {all(b < a for a, b in zip(cur, cur[1:]))}")
    if "concentration" in cfg.experiments:
        t0 = time.perf_counter()
        conc = run_concentration_experiment(cfg, threads)
        log.info("concentration experiment: %.1fs", time.perf_counter() - t0)
        for s in conc.summaries:
            write_hist_csv(out / f"hist_D{s.D}.csv", s)
            lines.append(
                f"concentration D={s.D} mean {fmt(s.mean)} se {fmt(s.std_err)} skew {fmt(s.skewness)} "
                f"p95 {fmt(s.p95)} tails_ok {s.tails_ok}"
            )
        write_tail_csv(out / "tails.csv", conc.summaries, conc.c)
        lines.append(f"concentration calibrated c {fmt(conc.c)}")
        results["concentration"] = conc
    if "consistency" in cfg.experiments:
        rows, trend = run_consistency_experiment(cfg, threads)
        write_consistency_csv(out / "consistency.csv", rows)
        lines.append(f"consistency halving {trend}")
        results["consistency"] = (rows, trend)
    if "bdd" in cfg.experiments:
        rows, worst = run_bdd_check(cfg, threads)
        write_bdd_csv(out / "bdd.csv", rows)
        lines.append(f"bdd {cfg.bdd_process} max violation {fmt(worst)}")
        results["bdd"] = (rows, worst)
    emit_plots(out, rate, conc)
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return results
