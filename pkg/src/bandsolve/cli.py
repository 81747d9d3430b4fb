"""``bandsolve`` command line: ``bench``, ``solve`` and ``footprint``.

Exit codes: 0 success, 1 solver failure, 2 bad arguments, 3 malformed IBAT.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import os
import sys
import tempfile

import numpy as np

from . import parallel
from .banded import PentDiagLHS, TriDiagLHS, pent_prefactor, tri_prefactor
from .errors import BandSolveError, MalformedBatchFile
from .layout import StorageVariant, footprint, read_ibat, write_ibat
from .pde import BenchConfig, Problem, Variant, run_benchmark, sine_modes, storage_variant
from .pent import (PentBandBatch, UniformPentLHS, pent_solve_per_system_batch,
                   pent_solve_shared_batch, pent_solve_uniform_batch, uniform_prefactor)
from .periodic import (periodic_pent_prepare, periodic_pent_solve_batch,
                       periodic_tri_prepare, periodic_tri_solve_batch)
from .tri import TriBandBatch, tri_solve_per_system_batch, tri_solve_shared_batch

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_USAGE = 2
EXIT_MALFORMED = 3

TIMING_HEADER = ["problem", "variant", "n", "m", "steps", "threads", "wall_s",
                 "per_step_mean_s", "per_step_std_s", "elements"]
SPEEDUP_HEADER = ["problem", "n", "m", "baseline", "variant", "speedup",
                  "baseline_per_step_s", "variant_per_step_s"]
FOOTPRINT_HEADER = ["n", "m", "variant", "elements", "reduction"]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers

def _int_list(text):
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _float_list(text):
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _choice_list(choices):
    def parse(text):
        values = [tok.strip().lower() for tok in text.split(",") if tok.strip()]
        bad = [v for v in values if v not in choices]
        if not values or bad:
            raise argparse.ArgumentTypeError(
                f"choose from {', '.join(choices)}; got {text!r}")
        return values
    return parse


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _fmt(x):
    # repr() of a float is locale independent and round-trips
    return repr(float(x))


@contextlib.contextmanager
def _atomic_outputs(paths):
    """Yield text buffers; files appear (renamed into place) only on success."""
    buffers = {p: io.StringIO() for p in paths}
    yield buffers
    staged = []
    try:
        for path, buf in buffers.items():
            directory = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(prefix=".bandsolve-", suffix=".csv", dir=directory)
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(buf.getvalue())
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)


def _resolve_threads(flag):
    if flag is not None:
        return flag
    try:
        return parallel.default_workers()
    except ValueError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# bench

def _speedup_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_speedup{ext or '.csv'}"


def cmd_bench(args):
    threads = _resolve_threads(args.threads)
    problems = [Problem(p) for p in args.problem]
    variants = [Variant(v) for v in args.variants]
    for problem in problems:
        for variant in variants:
            try:
                storage_variant(problem, variant)
            except ValueError as exc:
                raise UsageError(str(exc))
        min_n = 3 if problem is Problem.DIFFUSION else 6
        small = [n for n in args.n if n < min_n]
        if small:
            raise UsageError(f"{problem.value} needs n >= {min_n}, got {small}")

    rows = []
    means = {}
    for problem in problems:
        for variant in variants:
            for n in args.n:
                for m in args.m:
                    cell = f"problem={problem.value} variant={variant.value} n={n} m={m}"
                    try:
                        if args.sigma is not None:
                            cfg = BenchConfig.with_sigma(args.sigma, n=n, m=m, steps=args.steps,
                                                         problem=problem, variant=variant)
                        else:
                            cfg = BenchConfig(n=n, m=m, steps=args.steps, problem=problem,
                                              variant=variant, dt=args.dt)
                        initial = sine_modes(n, m)
                        samples = []
                        for _ in range(args.repeats):
                            _, rep = run_benchmark(cfg, initial, workers=threads, warmup=True,
                                                   check_allocations=args.check_alloc)
                            samples.append(rep.step_seconds)
                    except (BandSolveError, ArithmeticError, AssertionError) as exc:
                        print(f"bandsolve bench: failed in cell {cell}: {exc}", file=sys.stderr)
                        return EXIT_SOLVER
                    except ValueError as exc:
                        raise UsageError(f"cell {cell}: {exc}")
                    times = np.concatenate(samples)
                    mean = float(times.mean())
                    means[problem, variant, n, m] = mean
                    rows.append([problem.value, variant.value, n, m, args.steps, threads,
                                 _fmt(times.sum() / args.repeats), _fmt(mean),
                                 _fmt(times.std()), rep.footprint.element_count])
                    if args.verbose:
                        print(f"{cell}: {mean:.3e} s/step", file=sys.stderr)

    speedups = []
    for problem in problems:
        if Variant.PER_SYSTEM not in variants:
            continue
        for n in args.n:
            for m in args.m:
                base = means[problem, Variant.PER_SYSTEM, n, m]
                for variant in variants:
                    if variant is Variant.PER_SYSTEM:
                        continue
                    mean = means[problem, variant, n, m]
                    speedups.append([problem.value, n, m, Variant.PER_SYSTEM.value,
                                     variant.value, _fmt(base / mean), _fmt(base), _fmt(mean)])

    speedup_out = args.speedup_out or _speedup_path(args.out)
    with _atomic_outputs([args.out, speedup_out]) as bufs:
        for path, header, body in ((args.out, TIMING_HEADER, rows),
                                   (speedup_out, SPEEDUP_HEADER, speedups)):
            writer = csv.writer(bufs[path], lineterminator="\n")
            writer.writerow(header)
            writer.writerows(body)
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve

def _load_ibat(path, what):
    if not os.path.exists(path):
        raise UsageError(f"{what} file not found: {path}")
    return read_ibat(path)


def _build_lhs(args, n):
    kind = args.kind
    width = 3 if kind == "tri" else 5
    if args.bands is not None:
        if len(args.bands) != width:
            raise UsageError(f"--bands needs {width} values for --kind {kind}")
        if kind == "tri":
            return TriDiagLHS.constant(*args.bands, n), tuple(args.bands)
        return PentDiagLHS.constant(*args.bands, n), tuple(args.bands)
    bands = _load_ibat(args.band_file, "band")
    if bands.m != width or bands.n != n:
        raise MalformedBatchFile(
            f"{args.band_file}: band file must be n={n} x {width}, got {bands.n} x {bands.m}")
    cols = [bands.column(k) for k in range(width)]
    lhs = TriDiagLHS(*cols) if kind == "tri" else PentDiagLHS(*cols)
    return lhs, None


def _residual(args, lhs, consts, x, d):
    """Largest per-system ``|A x - d|_inf / |d|_inf`` against the banded operator."""
    X, D = x.view(), d.view()
    if args.periodic:
        offsets = (-1, 0, 1) if args.kind == "tri" else (-2, -1, 0, 1, 2)
        AX = sum(coef * np.roll(X, -off, axis=0) for coef, off in zip(consts, offsets))
    else:
        AX = lhs.matvec(X)
    scale = np.maximum(np.abs(D).max(axis=0), np.finfo(float).tiny)
    return float((np.abs(AX - D).max(axis=0) / scale).max())


def cmd_solve(args):
    threads = _resolve_threads(args.threads)
    batch = _load_ibat(args.input, "input")
    n = batch.n
    if args.periodic and args.bands is None:
        raise UsageError("--periodic needs constant --bands")
    if args.variant == "uniform" and (args.kind != "pent" or args.bands is None):
        raise UsageError("--variant uniform needs --kind pent with constant --bands")
    if args.periodic and args.variant == "persystem":
        raise UsageError("--periodic supports the shared and uniform variants")
    min_n = {("tri", False): 2, ("tri", True): 3, ("pent", False): 5, ("pent", True): 6}
    need = min_n[args.kind, args.periodic]
    if n < need:
        raise UsageError(f"{args.kind} {'periodic ' if args.periodic else ''}solve needs n >= {need}")
    lhs, consts = _build_lhs(args, n)
    rhs = batch.copy() if args.check else None
    try:
        if args.periodic:
            if args.kind == "tri":
                periodic_tri_solve_batch(periodic_tri_prepare(*consts, n), batch, workers=threads)
            else:
                corr = periodic_pent_prepare(*consts, n, uniform=args.variant == "uniform")
                periodic_pent_solve_batch(corr, batch, workers=threads)
        elif args.kind == "tri":
            if args.variant == "shared":
                tri_solve_shared_batch(tri_prefactor(lhs), batch, workers=threads)
            else:
                tri_solve_per_system_batch(TriBandBatch.replicate(lhs, batch.m), batch,
                                           workers=threads)
        else:
            if args.variant == "shared":
                pent_solve_shared_batch(pent_prefactor(lhs), batch, workers=threads)
            elif args.variant == "uniform":
                pent_solve_uniform_batch(uniform_prefactor(UniformPentLHS(*consts, n)), batch,
                                         workers=threads)
            else:
                pent_solve_per_system_batch(PentBandBatch.replicate(lhs, batch.m), batch,
                                            workers=threads)
    except (BandSolveError, ArithmeticError) as exc:
        print(f"bandsolve solve: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_ibat(args.output, batch)
    if args.check:
        print(f"max residual: {_residual(args, lhs, consts, batch, rhs):.6e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# footprint

def cmd_footprint(args):
    rows = []
    for n in args.n:
        if n < 2:
            raise UsageError(f"footprint needs n >= 2, got {n}")
        for m in args.m:
            for variant in StorageVariant:
                rep = footprint(variant, n, m)
                rows.append([n, m, variant.value, rep.element_count, rep.reduction_vs_baseline])
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(FOOTPRINT_HEADER)
        writer.writerows([r[:4] + [_fmt(r[4])] for r in rows])
    else:
        print(f"{'n':>8} {'m':>8}  {'variant':<14} {'elements':>14} {'reduction':>10}")
        for n, m, name, count, red in rows:
            print(f"{n:>8} {m:>8}  {name:<14} {count:>14} {100 * red:>9.2f}%")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="bandsolve", description="Batched banded solvers with a shared LHS.")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="time the Crank-Nicolson drivers over an (N, M) grid")
    bench.add_argument("--problem", type=_choice_list([p.value for p in Problem]),
                       default=["diffusion"], help="comma list: diffusion,hyperdiffusion")
    bench.add_argument("--variants", type=_choice_list([v.value for v in Variant]),
                       default=["shared", "persystem"], help="comma list of solver variants")
    bench.add_argument("--n", type=_int_list, default=[256], help="comma list of sizes N")
    bench.add_argument("--m", type=_int_list, default=[1024], help="comma list of batch sizes M")
    bench.add_argument("--steps", type=_positive_int, default=1000)
    bench.add_argument("--repeats", type=_positive_int, default=1,
                       help="repeat each cell and pool the step times")
    step = bench.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float, default=None, help="time step (default: sigma_x = 1)")
    step.add_argument("--sigma", type=float, default=None, help="set sigma_x directly")
    bench.add_argument("--threads", type=_positive_int, default=None,
                       help=f"worker threads (default: ${parallel.ENV_THREADS} or all cores)")
    bench.add_argument("--out", default="bench.csv", help="timing CSV path")
    bench.add_argument("--speedup-out", default=None,
                       help="speedup CSV path (default: <out>_speedup.csv)")
    bench.add_argument("--check-alloc", action="store_true",
                       help="debug: assert the timed loop allocates no batch storage")
    bench.add_argument("-v", "--verbose", action="store_true")
    bench.set_defaults(func=cmd_bench)

    solve = sub.add_parser("solve", help="solve a batch stored in an IBAT file")
    solve.add_argument("input")
    solve.add_argument("output")
    solve.add_argument("--kind", choices=["tri", "pent"], default="tri")
    lhs = solve.add_mutually_exclusive_group(required=True)
    lhs.add_argument("--bands", type=_float_list, help="constant bands a,b,c or a,b,c,d,e")
    lhs.add_argument("--band-file", help="IBAT file with n rows and one column per band")
    solve.add_argument("--variant", choices=[v.value for v in Variant], default="shared")
    solve.add_argument("--periodic", action="store_true", help="cyclic boundary coupling")
    solve.add_argument("--check", action="store_true", help="print the max relative residual")
    solve.add_argument("--threads", type=_positive_int, default=None)
    solve.set_defaults(func=cmd_solve)

    foot = sub.add_parser("footprint", help="storage per variant")
    foot.add_argument("--n", type=_int_list, required=True)
    foot.add_argument("--m", type=_int_list, required=True)
    foot.add_argument("--format", choices=["table", "csv"], default="table")
    foot.set_defaults(func=cmd_footprint)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except MalformedBatchFile as exc:
        print(f"bandsolve {args.command}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (BandSolveError, ValueError) as exc:
        # invalid band values and similar input problems
        print(f"bandsolve {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
