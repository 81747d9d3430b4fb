"""Crank-Nicolson drivers for periodic 1D diffusion and hyperdiffusion.

Both problems are rescaled to unit domain and unit coefficient, with
``x_i = i dx`` for ``i = 1..n`` and ``dx = 1/n``.  Diffusion uses the cyclic
tridiagonal path and hyperdiffusion the cyclic pentadiagonal one.
"""

from __future__ import annotations

import enum
import math
import time
import tracemalloc
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .layout import (FootprintReport, InterleavedBatch, StorageVariant,
                     count_allocations, footprint, write_ibat)
from .parallel import default_workers, run_columns
from .pent import PentBandBatch, pent_factor_per_system_batch, \
    pent_solve_factored_per_system_batch
from .periodic import (periodic_pent_correct, periodic_pent_prepare,
                       periodic_pent_solve_batch, periodic_tri_correct,
                       periodic_tri_prepare, periodic_tri_solve_batch)
from .tri import TriBandBatch, tri_solve_per_system_batch

__all__ = [
    "BenchConfig",
    "FieldBatch",
    "Problem",
    "TimingReport",
    "Variant",
    "amplification_factor",
    "diffusion_lhs",
    "diffusion_rhs",
    "hyper_lhs",
    "hyper_rhs",
    "mode_amplitude",
    "run_benchmark",
    "sine_modes",
]


# fixed Python-level overhead tolerated inside the traced loop
TRACE_FLOOR_BYTES = 16 * 1024


class Problem(enum.Enum):
    DIFFUSION = "diffusion"
    HYPERDIFFUSION = "hyperdiffusion"


class Variant(enum.Enum):
    SHARED = "shared"
    PER_SYSTEM = "persystem"
    UNIFORM = "uniform"


_STORAGE = {
    (Problem.DIFFUSION, Variant.SHARED): StorageVariant.TRI_SHARED,
    (Problem.DIFFUSION, Variant.PER_SYSTEM): StorageVariant.TRI_PER_SYSTEM,
    (Problem.HYPERDIFFUSION, Variant.SHARED): StorageVariant.PENT_SHARED,
    (Problem.HYPERDIFFUSION, Variant.PER_SYSTEM): StorageVariant.PENT_PER_SYSTEM,
    (Problem.HYPERDIFFUSION, Variant.UNIFORM): StorageVariant.PENT_UNIFORM,
}


def storage_variant(problem, variant):
    try:
        return _STORAGE[Problem(problem), Variant(variant)]
    except KeyError:
        raise ValueError(f"variant {Variant(variant).value!r} is not available for "
                         f"{Problem(problem).value}") from None


# ---------------------------------------------------------------------------
# configuration and state

@dataclass(frozen=True)
class BenchConfig:
    """Benchmark parameters.

    ``dt`` defaults to the step giving ``sigma_x = 1``.
    """

    n: int
    m: int
    steps: int = 1000
    problem: Problem = Problem.DIFFUSION
    variant: Variant = Variant.SHARED
    dt: float | None = None
    dump_every: int | None = None
    dump_prefix: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "problem", Problem(self.problem))
        object.__setattr__(self, "variant", Variant(self.variant))
        storage_variant(self.problem, self.variant)
        min_n = 3 if self.problem is Problem.DIFFUSION else 6
        if self.n < min_n:
            raise ValueError(f"{self.problem.value} needs n >= {min_n}, got {self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.dt is None:
            object.__setattr__(self, "dt", 2.0 * self.dx ** self._order)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dump_every is not None and (self.dump_every < 1 or not self.dump_prefix):
            raise ValueError("dump_every needs a positive interval and a dump_prefix")

    @property
    def _order(self):
        return 2 if self.problem is Problem.DIFFUSION else 4

    @property
    def dx(self):
        return 1.0 / self.n

    @property
    def sigma_x(self):
        return self.dt / (2.0 * self.dx ** self._order)

    @classmethod
    def with_sigma(cls, sigma_x, **kwargs):
        """Config whose ``dt`` yields the requested ``sigma_x``."""
        problem = Problem(kwargs.get("problem", Problem.DIFFUSION))
        order = 2 if problem is Problem.DIFFUSION else 4
        dt = 2.0 * sigma_x * (1.0 / kwargs["n"]) ** order
        return cls(dt=dt, **kwargs)


@dataclass(eq=False)
class FieldBatch:
    """``m`` independent fields ``C_i^k`` sharing grid and time index ``k``."""

    state: InterleavedBatch
    time_index: int = 0

    @property
    def n(self):
        return self.state.n

    @property
    def m(self):
        return self.state.m


def grid(n):
    return np.arange(1, n + 1) / n


def sine_modes(n, m, wavenumbers=None, *, offset=0.0):
    """Column ``j`` holds ``offset + sin(2 pi k_j x)``.

    Default wavenumbers are ``k_j = 1 + (j mod max(1, n // 4))``.
    """
    if wavenumbers is None:
        period = max(1, n // 4)
        wavenumbers = [1 + (j % period) for j in range(m)]
    wavenumbers = np.asarray(wavenumbers, dtype=np.float64)
    if wavenumbers.shape != (m,):
        raise ValueError(f"need {m} wavenumbers, got {wavenumbers.shape}")
    x = grid(n)
    rows = offset + np.sin(2.0 * np.pi * np.outer(x, wavenumbers))
    return FieldBatch(InterleavedBatch.from_rows(rows))


def mode_amplitude(batch, k):
    """Projection of each column onto ``sin(2 pi k x)`` (an ``m`` vector)."""
    n = batch.n
    s = np.sin(2.0 * np.pi * np.asarray(k, dtype=np.float64) * grid(n)[:, None])
    return 2.0 / n * (batch.view() * s).sum(axis=0)


# ---------------------------------------------------------------------------
# coefficients and stencils

def diffusion_lhs(sigma_x):
    return (-sigma_x, 1.0 + 2.0 * sigma_x, -sigma_x)


def hyper_lhs(sigma_x):
    return (sigma_x, -4.0 * sigma_x, 1.0 + 6.0 * sigma_x, -4.0 * sigma_x, sigma_x)


def _rhs_target(state, out):
    src = state.state if isinstance(state, FieldBatch) else state
    if out is None:
        out = InterleavedBatch.zeros(src.n, src.m)
    elif out.shape != src.shape:
        raise ValueError(f"out has shape {out.shape}, state has {src.shape}")
    return src, out


def diffusion_rhs(state, sigma_x, *, out=None, workers=None):
    """``sigma C_{i-1} + (1 - 2 sigma) C_i + sigma C_{i+1}``, periodic in ``i``."""
    src, out = _rhs_target(state, out)
    run_columns(K.stencil3_periodic, src.m, workers, sigma_x, 1.0 - 2.0 * sigma_x, sigma_x,
                src.view(), out.view())
    return out


def hyper_rhs(state, sigma_x, *, out=None, workers=None):
    """``-s C_{i-2} + 4s C_{i-1} + (1 - 6s) C_i + 4s C_{i+1} - s C_{i+2}``, periodic."""
    src, out = _rhs_target(state, out)
    s = sigma_x
    run_columns(K.stencil5_periodic, src.m, workers, -s, 4.0 * s, 1.0 - 6.0 * s, 4.0 * s, -s,
                src.view(), out.view())
    return out


def amplification_factor(problem, sigma_x, theta):
    """Per-step growth of the Fourier mode with phase ``theta`` per grid cell."""
    problem = Problem(problem)
    if problem is Problem.DIFFUSION:
        q = 2.0 * (1.0 - math.cos(theta))
    else:
        q = 6.0 - 8.0 * math.cos(theta) + 2.0 * math.cos(2.0 * theta)
    return (1.0 - sigma_x * q) / (1.0 + sigma_x * q)


# ---------------------------------------------------------------------------
# stepping

@dataclass
class TimingReport:
    variant: Variant
    problem: Problem
    n: int
    m: int
    steps: int
    threads: int
    wall_seconds_total: float
    seconds_per_step_mean: float
    seconds_per_step_stddev: float
    footprint: FootprintReport
    step_seconds: np.ndarray = field(repr=False, default=None)


class _Stepper:
    """Allocates everything a variant needs, then advances one step per call."""

    def __init__(self, config, workers):
        self.config = config
        self.workers = workers
        n, m = config.n, config.m
        s = config.sigma_x
        tri = config.problem is Problem.DIFFUSION
        self.rhs = diffusion_rhs if tri else hyper_rhs
        if tri:
            self.corr = periodic_tri_prepare(*diffusion_lhs(s), n)
        else:
            self.corr = periodic_pent_prepare(*hyper_lhs(s), n,
                                              uniform=config.variant is Variant.UNIFORM)
        self.scratch = InterleavedBatch.zeros(n, m)
        self.bands = None
        if config.variant is Variant.PER_SYSTEM:
            if tri:
                self.bands = TriBandBatch.allocate(n, m)
            else:
                # the pentadiagonal baseline factors each system once, then
                # reuses its per-system factors every step without a reset
                self.bands = PentBandBatch.replicate(self.corr.lhs, m)
                pent_factor_per_system_batch(self.bands, workers=workers)

    def solve(self, batch):
        cfg, w = self.config, self.workers
        if cfg.problem is Problem.DIFFUSION:
            if cfg.variant is Variant.SHARED:
                periodic_tri_solve_batch(self.corr, batch, workers=w)
            else:
                self.bands.reset_from(self.corr.lhs, workers=w)
                tri_solve_per_system_batch(self.bands, batch, workers=w)
                periodic_tri_correct(self.corr, batch, workers=w)
        else:
            if cfg.variant is Variant.PER_SYSTEM:
                pent_solve_factored_per_system_batch(self.bands, batch, workers=w)
                periodic_pent_correct(self.corr, batch, workers=w)
            else:
                periodic_pent_solve_batch(self.corr, batch, workers=w)

    def step(self, current):
        """Advance ``current`` by one step; returns the buffer now holding it."""
        nxt = self.scratch
        self.rhs(current, self.config.sigma_x, out=nxt, workers=self.workers)
        self.solve(nxt)
        self.scratch = current
        return nxt


def run_benchmark(config, initial, *, workers=None, warmup=False, check_allocations=False):
    """Advance ``initial`` by ``config.steps`` Crank-Nicolson steps.

    Only the stepping loop is timed; preparation, factorisation and buffer
    allocation happen before it.  The per-system tridiagonal baseline
    re-copies its destroyed band buffers inside every timed step.

    Parameters
    ----------
    warmup : bool
        Run one untimed step on a throwaway copy first.
    check_allocations : bool
        Assert that the timed loop allocates no library storage and, for the
        shared and uniform variants, nothing batch-sized at all.  Implies
        ``warmup``.

    Returns
    -------
    (FieldBatch, TimingReport)
    """
    if initial.state.shape != (config.n, config.m):
        raise ValueError(f"initial field has shape {initial.state.shape}, "
                         f"config expects {(config.n, config.m)}")
    workers = default_workers() if workers is None else int(workers)
    stepper = _Stepper(config, workers)
    current = initial.state.copy()
    if warmup or check_allocations:
        # also pulls kernel compilation out of the traced/timed region
        spare = current.copy()
        stepper.step(spare)
    times = np.zeros(config.steps)
    dump = config.dump_every

    def loop(cur):
        perf = time.perf_counter
        for k in range(config.steps):
            t0 = perf()
            cur = stepper.step(cur)
            times[k] = perf() - t0
            if dump and (k + 1) % dump == 0:
                write_ibat(f"{config.dump_prefix}{initial.time_index + k + 1:08d}.ibat", cur)
        return cur

    if check_allocations:
        tracemalloc.start()
        try:
            base, _ = tracemalloc.get_traced_memory()
            tracemalloc.reset_peak()
            with count_allocations() as counter:
                current = loop(current)
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        if counter.elements:
            raise AssertionError(f"timed loop allocated {counter.elements} library reals")
        # below the floor a batch-sized buffer is indistinguishable from
        # interpreter bookkeeping; the library counter still applies
        limit = max(8 * config.n * config.m, TRACE_FLOOR_BYTES)
        if config.variant is not Variant.PER_SYSTEM and peak - base >= limit:
            raise AssertionError(f"timed loop peaked {peak - base} bytes above baseline "
                                 f"(limit {limit})")
    else:
        current = loop(current)

    total = float(times.sum())
    report = TimingReport(
        variant=config.variant,
        problem=config.problem,
        n=config.n,
        m=config.m,
        steps=config.steps,
        threads=workers,
        wall_seconds_total=total,
        seconds_per_step_mean=total / config.steps,
        seconds_per_step_stddev=float(times.std()),
        footprint=footprint(storage_variant(config.problem, config.variant),
                            config.n, config.m),
        step_seconds=times,
    )
    return FieldBatch(current, initial.time_index + config.steps), report
