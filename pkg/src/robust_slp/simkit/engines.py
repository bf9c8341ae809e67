"""Monte Carlo experiment engines.

Every random quantity comes from its own substream
``trial_rng(seed, stream, realization[, slot])``, so all grid points of a run
see the same channels, symbols, errors and noise (common random numbers), and
results do not depend on the worker count. Work is split per channel
realization and reduced in realization order.
"""

from __future__ import annotations

import functools
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from robust_slp.errors import ConfigError
from robust_slp.geometry import ml_detect, psk_constellation
from robust_slp.precoder import SlpInstance, solve_slp
from robust_slp.robustcons import Method, RobustParams
from robust_slp.simkit.config import ScenarioConfig
from robust_slp.simkit.report import MetricsReport, version_string
from robust_slp.simkit.validation import binomial_std, validate_chance, validate_worst_case
from robust_slp.socp import Status
from robust_slp.uncertainty import sample_channel, t_transform, trial_rng

CHANNEL, SYMBOLS, ERROR, NOISE, BENCH, VALIDATE = range(6)


@dataclass(frozen=True)
class GridPoint:
    gamma_db: float
    method: Method
    epsilon: float = math.nan
    xi2: float = math.nan
    upsilon: float = math.nan

    @property
    def gamma(self) -> float:
        return 10.0 ** (self.gamma_db / 10.0)

    def params(self) -> RobustParams:
        if self.method is Method.WORST_CASE:
            return RobustParams(epsilon=self.epsilon)
        if self.method.stochastic:
            return RobustParams.gaussian(self.xi2, self.upsilon)
        return RobustParams()

    def keys(self) -> dict:
        return {"gamma_db": self.gamma_db, "method": self.method.value,
                "epsilon": self.epsilon, "xi2": self.xi2, "upsilon": self.upsilon}


GRID_COLUMNS = ("gamma_db", "method", "epsilon", "xi2", "upsilon")


def _check_uncertainty(cfg: ScenarioConfig):
    if Method.WORST_CASE in cfg.methods and any(e <= 0 for e in cfg.epsilon):
        raise ConfigError("epsilon", "WorstCase needs error radii > 0")
    if any(m.stochastic for m in cfg.methods) and any(v <= 0 for v in cfg.xi2):
        raise ConfigError("xi2", "stochastic methods need error variances > 0")


def build_grid(cfg: ScenarioConfig, sweep: str = "violation_prob"):
    """Grid points in report order: gamma, method, then uncertainty values."""
    _check_uncertainty(cfg)
    points = []
    for g in cfg.gamma_db:
        for m in cfg.methods:
            if m is Method.NON_ROBUST:
                points.append(GridPoint(g, m))
            elif m is Method.WORST_CASE:
                points.extend(GridPoint(g, m, epsilon=e) for e in cfg.epsilon)
            elif sweep == "variance":
                points.extend(GridPoint(g, m, xi2=x, upsilon=u)
                              for u in cfg.upsilon for x in cfg.xi2)
            else:
                points.extend(GridPoint(g, m, xi2=x, upsilon=u)
                              for x in cfg.xi2 for u in cfg.upsilon)
    return points


# -- random inputs --------------------------------------------------------

def realization_channel(cfg: ScenarioConfig, r: int) -> np.ndarray:
    return sample_channel(trial_rng(cfg.seed, CHANNEL, r), cfg.N, size=cfg.K)


def slot_symbols(cfg: ScenarioConfig, r: int, j: int) -> np.ndarray:
    return trial_rng(cfg.seed, SYMBOLS, r, j).integers(0, cfg.modulation, size=cfg.K)


def realization_error_shape(cfg: ScenarioConfig, r: int) -> np.ndarray:
    """Unit-variance CN(0, I) error draw; scaled by ``xi`` per grid point."""
    return sample_channel(trial_rng(cfg.seed, ERROR, r), cfg.N, size=cfg.K)


def _constellation(cfg):
    return psk_constellation(cfg.modulation, cfg.phase_offset)


def _instance(cfg, const, h_hat, symbols, gamma):
    return SlpInstance.from_complex(h_hat, symbols, const, cfg.sigma2_per_user(), gamma)


# -- per-point accumulators ------------------------------------------------

@dataclass
class _Tally:
    trials: int = 0
    optimal: int = 0
    infeasible: int = 0
    other: int = 0
    power: float = 0.0
    iterations: int = 0
    seconds: float = 0.0
    errors: int = 0
    detections: int = 0

    def record(self, out):
        self.trials += 1
        self.iterations += out.iterations
        self.seconds += out.solve_time
        if out.status is Status.OPTIMAL:
            self.optimal += 1
            self.power += out.power
        elif out.status is Status.PRIMAL_INFEASIBLE:
            self.infeasible += 1
        else:
            self.other += 1

    def merge(self, other: "_Tally"):
        for f in self.__dataclass_fields__:
            setattr(self, f, getattr(self, f) + getattr(other, f))

    def summary(self) -> dict:
        avg = self.power / self.optimal if self.optimal else math.nan
        return {
            "trials": self.trials,
            "optimal_count": self.optimal,
            "infeasible_count": self.infeasible,
            "failed_count": self.other,
            "feasibility_rate": self.optimal / self.trials if self.trials else math.nan,
            "avg_power_dbw": 10.0 * math.log10(avg) if avg > 0 else (-math.inf if avg == 0 else math.nan),
            "mean_solver_iterations": self.iterations / self.trials if self.trials else math.nan,
            "mean_wall_time": self.seconds / self.trials if self.trials else math.nan,
        }


def _parallel_map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _reduce(per_realization, n_points):
    totals = [_Tally() for _ in range(n_points)]
    for tallies in per_realization:
        for t, part in zip(totals, tallies):
            t.merge(part)
    return totals


def _metadata(cfg: ScenarioConfig, command: str, **extra) -> dict:
    meta = {"command": command, "seed": cfg.seed, "config_hash": cfg.config_hash(),
            "version": version_string()}
    meta.update(extra)
    return meta


# -- power sweep ------------------------------------------------------------

POWER_COLUMNS = GRID_COLUMNS + ("trials", "optimal_count", "infeasible_count", "failed_count",
                                "feasibility_rate", "avg_power_dbw", "mean_solver_iterations",
                                "mean_wall_time")


def _power_realization(cfg, grid, r):
    const = _constellation(cfg)
    h_hat = realization_channel(cfg, r)
    tallies = [_Tally() for _ in grid]
    for j in range(cfg.slots):
        symbols = slot_symbols(cfg, r, j)
        base = _instance(cfg, const, h_hat, symbols, 1.0)
        for t, pt in zip(tallies, grid):
            t.record(solve_slp(base.with_gamma(pt.gamma), pt.method, pt.params()))
    return tallies


def run_power_sweep(cfg: ScenarioConfig) -> MetricsReport:
    """Average transmit power per (gamma, method, uncertainty) grid point.

    Powers are averaged in watts over the optimal slots and converted to dBW
    once; ``trials`` counts realizations times slots.
    """
    grid = build_grid(cfg)
    fn = functools.partial(_power_realization, cfg, grid)
    totals = _reduce(_parallel_map(fn, range(cfg.realizations), cfg.workers), len(grid))
    rep = MetricsReport("power_sweep", POWER_COLUMNS, metadata=_metadata(cfg, "power-sweep"))
    for pt, t in zip(grid, totals):
        rep.add(**pt.keys(), **t.summary())
    return rep


# -- symbol error rate ------------------------------------------------------

SER_COLUMNS = GRID_COLUMNS + ("true_xi2", "trials", "optimal_count", "infeasible_count",
                              "failed_count", "feasibility_rate", "avg_power_dbw",
                              "detections", "symbol_errors", "ser", "mean_solver_iterations",
                              "mean_wall_time")


def _ser_realization(cfg, grid, true_xi2, r):
    const = _constellation(cfg)
    h_hat = realization_channel(cfg, r)
    h_true = h_hat + math.sqrt(true_xi2) * realization_error_shape(cfg, r)
    T_true = t_transform(h_true)  # (K, 2, 2N)
    noise_sd = np.sqrt(np.asarray(cfg.sigma2_per_user(), dtype=float) / 2.0)
    tallies = [_Tally() for _ in grid]
    for j in range(cfg.slots):
        symbols = slot_symbols(cfg, r, j)
        base = _instance(cfg, const, h_hat, symbols, 1.0)
        z = trial_rng(cfg.seed, NOISE, r, j).standard_normal((cfg.noise_draws, cfg.K, 2))
        z *= noise_sd[None, :, None]
        for t, pt in zip(tallies, grid):
            out = solve_slp(base.with_gamma(pt.gamma), pt.method, pt.params())
            t.record(out)
            if not out.optimal:
                continue  # no transmission in infeasible slots
            y = (T_true @ out.u_tilde)[None, :, :] + z
            detected = ml_detect(const, y)
            t.errors += int(np.count_nonzero(detected != symbols[None, :]))
            t.detections += detected.size
    return tallies


def run_ser(cfg: ScenarioConfig, true_xi2: float | None = None) -> MetricsReport:
    """Symbol error rate of designs on estimated channels over true channels.

    The true channel is ``h_hat + e`` with ``e ~ CN(0, true_xi2 I)`` drawn once
    per realization; ``true_xi2`` defaults to the first ``xi2`` of the config.
    Infeasible slots transmit nothing and are reported in ``infeasible_count``
    instead of entering the SER.
    """
    true_xi2 = cfg.xi2[0] if true_xi2 is None else float(true_xi2)
    if true_xi2 < 0:
        raise ConfigError("xi2", "error variance must be >= 0")
    grid = build_grid(cfg)
    fn = functools.partial(_ser_realization, cfg, grid, true_xi2)
    totals = _reduce(_parallel_map(fn, range(cfg.realizations), cfg.workers), len(grid))
    rep = MetricsReport("ser", SER_COLUMNS, metadata=_metadata(cfg, "ser", true_xi2=true_xi2))
    for pt, t in zip(grid, totals):
        ser = t.errors / t.detections if t.detections else math.nan
        rep.add(**pt.keys(), true_xi2=true_xi2, **t.summary(), detections=t.detections,
                symbol_errors=t.errors, ser=ser)
    return rep


# -- feasibility rate -------------------------------------------------------

FEAS_COLUMNS = ("sweep",) + GRID_COLUMNS + ("trials", "optimal_count", "infeasible_count",
                                            "failed_count", "feasibility_rate",
                                            "mean_solver_iterations", "mean_wall_time")


def _feasibility_realization(cfg, grid, r):
    const = _constellation(cfg)
    base = _instance(cfg, const, realization_channel(cfg, r), slot_symbols(cfg, r, 0), 1.0)
    tallies = [_Tally() for _ in grid]
    for t, pt in zip(tallies, grid):
        t.record(solve_slp(base.with_gamma(pt.gamma), pt.method, pt.params()))
    return tallies


def run_feasibility(cfg: ScenarioConfig, sweep: str | None = None) -> MetricsReport:
    """Fraction of channel realizations whose design is solvable.

    ``sweep`` (``violation_prob`` or ``variance``) orders the grid by the swept
    axis; one symbol vector is drawn per realization.
    """
    sweep = sweep or cfg.sweep
    if sweep not in ("violation_prob", "variance"):
        raise ConfigError("sweep", f"unknown sweep {sweep!r}")
    grid = build_grid(cfg, sweep)
    fn = functools.partial(_feasibility_realization, cfg, grid)
    totals = _reduce(_parallel_map(fn, range(cfg.realizations), cfg.workers), len(grid))
    rep = MetricsReport("feasibility", FEAS_COLUMNS, metadata=_metadata(cfg, "feasibility"))
    for pt, t in zip(grid, totals):
        s = t.summary()
        del s["avg_power_dbw"]
        rep.add(sweep=sweep, **pt.keys(), **s)
    return rep


def curve_crossing(x, a, b):
    """Abscissa where ``a - b`` changes sign from negative to positive.

    The sign change is taken between the last strictly negative difference
    and the next strictly positive one. Adjacent points are linearly
    interpolated; when tied points (``a == b``) lie between them, the
    piecewise-linear difference vanishes on the whole tie run and its
    midpoint is returned. Returns ``nan`` when there is no such change.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    order = np.argsort(x)
    x, d = x[order], d[order]
    neg = np.flatnonzero(d < 0)
    if not len(neg):
        return math.nan
    for i in neg[::-1]:
        pos = np.flatnonzero((d > 0) & (np.arange(len(d)) > i))
        if len(pos) and not np.any(d[i + 1 : pos[0]] < 0):
            j = pos[0]
            if j == i + 1:
                return float(x[i] + (x[j] - x[i]) * (-d[i]) / (d[j] - d[i]))
            return float(0.5 * (x[i + 1] + x[j - 1]))
    return math.nan


# -- runtime benchmark ------------------------------------------------------

BENCH_COLUMNS = ("K", "N", "method", "solves", "mean_wall_time", "plain_mean_wall_time",
                 "mean_solver_iterations", "runtime_ratio")


def median_of_means(samples, groups=5) -> float:
    samples = list(samples)
    groups = max(1, min(groups, len(samples)))
    size = len(samples) // groups
    means = [statistics.fmean(samples[g * size : (g + 1) * size]) for g in range(groups)]
    return statistics.median(means)


def benchmark_runtime(cfg: ScenarioConfig) -> MetricsReport:
    """Wall time per solve of the non-robust and one robust design, ``K = N``.

    For each ``K`` in ``k_grid`` the same ``solves`` instances are solved by
    both designs, alternating solve by solve so that slow drifts of the host
    hit both equally. Times are aggregated as a median of five means.
    """
    robust = cfg.robust_method
    point = GridPoint(cfg.gamma_db[0], robust, epsilon=cfg.epsilon[0], xi2=cfg.xi2[0],
                      upsilon=cfg.upsilon[0])
    if robust is Method.WORST_CASE and not point.epsilon > 0:
        raise ConfigError("epsilon", "WorstCase needs an error radius > 0")
    if robust.stochastic and not point.xi2 > 0:
        raise ConfigError("xi2", "stochastic methods need an error variance > 0")
    params = point.params()
    const = _constellation(cfg)
    rep = MetricsReport("benchmark", BENCH_COLUMNS, include_timing=True,
                        timing_columns=("mean_wall_time", "plain_mean_wall_time", "runtime_ratio"),
                        metadata=_metadata(cfg, "benchmark", robust_method=robust.value))
    sigma2 = cfg.sigma2[0]
    for K in cfg.k_grid:
        instances = []
        for i in range(cfg.solves):
            rng = trial_rng(cfg.seed, BENCH, K, i)
            h = sample_channel(rng, K, size=K)
            sym = rng.integers(0, cfg.modulation, size=K)
            instances.append(SlpInstance.from_complex(h, sym, const, sigma2, point.gamma))
        designs = ((Method.NON_ROBUST, RobustParams()), (robust, params))
        for m, p in designs:  # warm-up
            solve_slp(instances[0], m, p)
        times = {m: [] for m, _ in designs}
        iters = {m: 0 for m, _ in designs}
        for inst in instances:
            for m, p in designs:
                t0 = time.perf_counter()
                out = solve_slp(inst, m, p)
                times[m].append(time.perf_counter() - t0)
                iters[m] += out.iterations
        base = median_of_means(times[Method.NON_ROBUST])
        for m, _ in designs:
            mom = median_of_means(times[m])
            rep.add(K=K, N=K, method=m.value, solves=cfg.solves, mean_wall_time=mom,
                    plain_mean_wall_time=statistics.fmean(times[m]),
                    mean_solver_iterations=iters[m] / cfg.solves, runtime_ratio=mom / base)
    return rep


# -- design validation ------------------------------------------------------

VALIDATE_COLUMNS = ("method", "gamma_db", "epsilon", "xi2", "upsilon", "realization", "status",
                    "power_dbw", "samples", "metric", "value", "bound", "passed")


def _validate_realization(cfg, grid, r):
    const = _constellation(cfg)
    inst0 = _instance(cfg, const, realization_channel(cfg, r), slot_symbols(cfg, r, 0), 1.0)
    rows = []
    for i, pt in enumerate(grid):
        inst = inst0.with_gamma(pt.gamma)
        out = solve_slp(inst, pt.method, pt.params())
        row = {**pt.keys(), "realization": r, "status": out.status.value,
               "power_dbw": out.power_dbw, "samples": cfg.validation_samples}
        rng = trial_rng(cfg.seed, VALIDATE, r, i)
        if not out.optimal:
            row.update(metric="", value=math.nan, bound=math.nan, passed="")
        elif pt.method is Method.WORST_CASE:
            rep = validate_worst_case(out.u_tilde, inst, pt.epsilon, cfg.validation_samples, rng)
            row.update(metric="min_margin", value=rep.min_margin, bound=-1e-6,
                       passed=bool(rep.min_margin >= -1e-6))
        else:
            rep = validate_chance(out.u_tilde, inst, pt.params(), cfg.validation_samples, rng)
            bound = pt.upsilon + 3.0 * binomial_std(pt.upsilon, cfg.validation_samples)
            row.update(metric="violation_prob", value=rep.worst, bound=bound,
                       passed=bool(rep.worst <= bound))
        rows.append(row)
    return rows


def run_validation(cfg: ScenarioConfig) -> MetricsReport:
    """Monte Carlo check of each robust design against its own error model.

    One slot per realization is solved for every robust grid point.
    WorstCase designs are probed with errors on the radius-``epsilon``
    sphere and must keep every CI margin above ``-1e-6``. Stochastic
    designs are probed with Gaussian errors and must keep the worst user's
    violation rate within ``upsilon`` plus three binomial standard deviations.
    """
    grid = [pt for pt in build_grid(cfg) if pt.method is not Method.NON_ROBUST]
    if not grid:
        raise ConfigError("methods", "validation needs at least one robust method")
    fn = functools.partial(_validate_realization, cfg, grid)
    rep = MetricsReport("validate", VALIDATE_COLUMNS, metadata=_metadata(cfg, "validate"))
    for rows in _parallel_map(fn, range(cfg.realizations), cfg.workers):
        for row in rows:
            rep.add(**row)
    return rep
