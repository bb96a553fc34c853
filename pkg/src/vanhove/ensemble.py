"""Seeded ensemble averages over interaction samples, rate fits and Van Hove sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from threadpoolctl import threadpool_limits

from .model import (
    SpectrumConfig,
    assemble_hamiltonian,
    build_h0,
    make_initial_state,
    sample_interaction,
)
from .propagator import RelaxationTrace, eigendecompose, evolve

DEFAULT_WINDOW = (0.02, 0.15)
MIN_FIT_POINTS = 4


class EnsembleMemberError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"ensemble member {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class InitialState:
    site: int = 1
    band: Tuple[float, float] = (0.3, 0.7)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    trace_mean: RelaxationTrace
    trace_stderr: RelaxationTrace
    n_samples: int
    member_seeds: Tuple[int, ...]
    member_p1: np.ndarray = field(repr=False)
    member_p2: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    r_squared: float
    fit_window: Tuple[float, float]
    n_points: int
    rate_stderr: Optional[float] = None


@dataclass(frozen=True)
class SweepRow:
    n_levels: int
    coupling: float
    samples: int
    rate: float
    rate_stderr: float
    equilibrium_p1: float
    equilibrium_stderr: float
    r_squared: float
    flagged: bool = False
    note: str = ""


def member_seed(master_seed: int, index: int) -> int:
    """Seed of ensemble member ``index``, independent of scheduling order."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def resolve_times(
    coupling: float, scaled_times=None, times=None
) -> Tuple[np.ndarray, np.ndarray]:
    """Physical and scaled time grids from either one (``T = coupling**2 t``)."""
    if (scaled_times is None) == (times is None):
        raise ValueError("give exactly one of scaled_times or times")
    if times is not None:
        t = np.asarray(times, dtype=float)
        return t, coupling**2 * t
    T = np.asarray(scaled_times, dtype=float)
    if coupling == 0.0:
        raise ValueError("scaled times need a nonzero coupling")
    return T / coupling**2, T


def _run_member(config: SpectrumConfig, initial: InitialState, times: np.ndarray, seed: int):
    h0 = build_h0(config)
    v = sample_interaction(config, seed)
    ham = assemble_hamiltonian(h0, v, config.coupling)
    factors = eigendecompose(ham, check=False)
    psi0 = make_initial_state(config, initial.site, initial.band)
    trace = evolve(psi0, factors, times)
    return trace.p1, trace.p2, trace.norm


def run_ensemble(
    config: SpectrumConfig,
    initial: InitialState = InitialState(),
    *,
    samples: int,
    master_seed: int,
    scaled_times=None,
    times=None,
    threads: int = 1,
) -> EnsembleStats:
    """Average site probabilities over ``samples`` independent interaction draws.

    Members run on ``threads`` worker threads with BLAS pinned to one thread,
    so the result is bit-identical for any ``threads``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    t, T = resolve_times(config.coupling, scaled_times, times)
    seeds = tuple(member_seed(master_seed, i) for i in range(samples))

    def task(i):
        try:
            return _run_member(config, initial, t, seeds[i])
        except Exception as exc:
            raise EnsembleMemberError(i, exc) from exc

    with threadpool_limits(limits=1):
        if threads == 1:
            results = [task(i) for i in range(samples)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(task, range(samples)))

    p1 = np.stack([r[0] for r in results])
    p2 = np.stack([r[1] for r in results])
    norm = np.stack([r[2] for r in results])
    return _aggregate(t, T, p1, p2, norm, seeds)


def _stderr(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.zeros(x.shape[1])
    return x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def _aggregate(t, T, p1, p2, norm, seeds) -> EnsembleStats:
    mean = RelaxationTrace(t, T, p1.mean(axis=0), p2.mean(axis=0), norm.mean(axis=0))
    err = RelaxationTrace(t, T, _stderr(p1), _stderr(p2), _stderr(norm))
    return EnsembleStats(mean, err, p1.shape[0], tuple(seeds), p1, p2)


def _log_linear_fit(T: np.ndarray, d: np.ndarray, window) -> Tuple[float, float, float, int]:
    lo, hi = window
    mask = (T >= lo) & (T <= hi)
    count = int(mask.sum())
    if count < MIN_FIT_POINTS:
        raise ValueError(f"only {count} points in fit window {window}; need {MIN_FIT_POINTS}")
    dw = d[mask]
    if np.any(dw <= 0):
        raise ValueError(f"imbalance P1 - P2 is not strictly positive on window {window}")
    x = T[mask]
    y = np.log(dw)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return -float(slope), float(intercept), min(max(r2, 0.0), 1.0), count


def fit_rate(
    data: Union[EnsembleStats, RelaxationTrace],
    window: Tuple[float, float] = DEFAULT_WINDOW,
) -> RateFit:
    """Decay rate of the imbalance from a straight-line fit of ``log(P1 - P2)`` against T.

    For ensembles the rate's standard error is the leave-one-out jackknife
    estimate over members.
    """
    trace = data.trace_mean if isinstance(data, EnsembleStats) else data
    T = trace.scaled_times
    rate, intercept, r2, count = _log_linear_fit(T, trace.p1 - trace.p2, window)
    stderr = None
    if isinstance(data, EnsembleStats) and data.n_samples >= 2:
        s = data.n_samples
        d = data.member_p1 - data.member_p2
        total = d.sum(axis=0)
        loo = np.array([_log_linear_fit(T, (total - d[i]) / (s - 1), window)[0] for i in range(s)])
        stderr = float(math.sqrt((s - 1) / s * np.sum((loo - loo.mean()) ** 2)))
    return RateFit(rate, intercept, r2, tuple(window), count, stderr)


def vanhove_sweep(
    base: SpectrumConfig,
    couplings: Sequence[float],
    n_levels: Sequence[int],
    samples: int,
    master_seed: int,
    *,
    initial: InitialState = InitialState(),
    scaled_times=None,
    window: Tuple[float, float] = DEFAULT_WINDOW,
    threads: int = 1,
) -> List[SweepRow]:
    """One ensemble and rate fit per ``(N, lambda)`` on a common scaled-time grid.

    The physical grid of each row is ``t = T / lambda**2``. Rows whose fit fails
    are kept with ``flagged=True`` and a NaN rate.
    """
    if not couplings or not n_levels:
        raise ValueError("coupling and N lists must be nonempty")
    if scaled_times is None:
        scaled_times = np.linspace(0.0, 0.3, 61)
    rows = []
    for n in n_levels:
        for lam in couplings:
            config = replace(base, n_levels=int(n), coupling=float(lam))
            stats = run_ensemble(
                config,
                initial,
                samples=samples,
                master_seed=master_seed,
                scaled_times=scaled_times,
                threads=threads,
            )
            rows.append(sweep_row(stats, config, window))
    return rows


def sweep_row(stats: EnsembleStats, config: SpectrumConfig, window=DEFAULT_WINDOW) -> SweepRow:
    eq = float(stats.trace_mean.p1[-1])
    eq_err = float(stats.trace_stderr.p1[-1])
    try:
        fit = fit_rate(stats, window)
    except ValueError as exc:
        return SweepRow(
            config.n_levels, config.coupling, stats.n_samples,
            math.nan, math.nan, eq, eq_err, math.nan, True, str(exc),
        )
    stderr = fit.rate_stderr if fit.rate_stderr is not None else 0.0
    flagged = not math.isfinite(fit.rate)
    return SweepRow(
        config.n_levels, config.coupling, stats.n_samples,
        fit.rate, stderr, eq, eq_err, fit.r_squared, flagged, "non-finite rate" if flagged else "",
    )
