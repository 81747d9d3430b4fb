"""Batched tridiagonal and pentadiagonal solvers for many right-hand sides
sharing one left-hand-side matrix, stored in an interleaved layout."""

from .banded import (BREAKDOWN_EPS, PentDiagLHS, PentFactor, TriDiagLHS, TriFactor,
                     dense_solve_oracle, pent_prefactor, tri_prefactor)
from .errors import (BandSolveError, DivisionByZero, FactorizationBreakdown, InvalidBands,
                     MalformedBatchFile, ShapeMismatch, SingularCorrection, SingularMatrix)
from .layout import (FootprintReport, InterleavedBatch, StorageVariant, count_allocations,
                     deinterleave, footprint, interleave, read_ibat, write_ibat)
from .parallel import set_default_workers, using_workers
from .pde import (BenchConfig, FieldBatch, Problem, TimingReport, Variant,
                  amplification_factor, diffusion_lhs, diffusion_rhs, hyper_lhs, hyper_rhs,
                  run_benchmark, sine_modes)
from .pent import (PentBandBatch, UniformPentFactor, UniformPentLHS,
                   pent_solve_per_system_batch, pent_solve_shared_batch,
                   pent_solve_uniform_batch, uniform_prefactor)
from .periodic import (PeriodicPentCorrection, PeriodicTriCorrection, periodic_pent_prepare,
                       periodic_pent_solve_batch, periodic_tri_prepare, periodic_tri_solve_batch)
from .tri import TriBandBatch, tri_solve_per_system_batch, tri_solve_shared_batch

__all__ = [
    "amplification_factor",
    "BandSolveError",
    "BenchConfig",
    "BREAKDOWN_EPS",
    "count_allocations",
    "deinterleave",
    "dense_solve_oracle",
    "diffusion_lhs",
    "diffusion_rhs",
    "DivisionByZero",
    "FactorizationBreakdown",
    "FieldBatch",
    "footprint",
    "FootprintReport",
    "hyper_lhs",
    "hyper_rhs",
    "interleave",
    "InterleavedBatch",
    "InvalidBands",
    "MalformedBatchFile",
    "pent_prefactor",
    "pent_solve_per_system_batch",
    "pent_solve_shared_batch",
    "pent_solve_uniform_batch",
    "PentBandBatch",
    "PentDiagLHS",
    "PentFactor",
    "periodic_pent_prepare",
    "periodic_pent_solve_batch",
    "periodic_tri_prepare",
    "periodic_tri_solve_batch",
    "PeriodicPentCorrection",
    "PeriodicTriCorrection",
    "Problem",
    "read_ibat",
    "run_benchmark",
    "set_default_workers",
    "ShapeMismatch",
    "sine_modes",
    "SingularCorrection",
    "SingularMatrix",
    "StorageVariant",
    "TimingReport",
    "tri_prefactor",
    "tri_solve_per_system_batch",
    "tri_solve_shared_batch",
    "TriBandBatch",
    "TriDiagLHS",
    "TriFactor",
    "uniform_prefactor",
    "UniformPentFactor",
    "UniformPentLHS",
    "using_workers",
    "Variant",
    "write_ibat",
]

__version__ = "0.1.0"
