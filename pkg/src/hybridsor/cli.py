"""Command-line front end.

Subcommands::

    hybridsor solve-heat   --config run.json
    hybridsor solve-system --system A.txt [--config run.json]
    hybridsor analyze      --system A.txt --blocks 9
    hybridsor compare      --config run.json

Exit status: 0 converged, 2 not converged (or predicted divergence), 1 usage
or runtime error. Diagnostics are single lines on stderr.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import blocksolve as bs
from .errors import DivergenceError, HybridSorError, NumericalFailureError
from .grid import analytic_reference, assemble_system
from .io import (
    _PLATE_EDGES,
    RunConfig,
    load_config,
    read_system,
    write_heatmap,
    write_trace,
)

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _omega_arg(text):
    if text == "optimal":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'optimal', got {text!r}")


def build_parser():
    parser = _Parser(prog="hybridsor", description="Hybrid block SOR solver for the Laplace equation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "solve-heat": "solve the square-plate heat problem described by the config",
        "solve-system": "solve a linear system read from a coordinate file",
        "analyze": "spectral radii, optimal omega and convergence verdict",
        "compare": "block Gauss-Seidel vs block SOR traces for several bit counts",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--system", help="linear system file (coordinate format)")
        p.add_argument("--omega", type=_omega_arg, help="relaxation factor or 'optimal'")
        p.add_argument("--blocks", type=int, help="number of equal blocks N_b")
        p.add_argument("--bits", type=int, help="bits per unknown R")
        p.add_argument("--backend", choices=("direct", "anneal", "remote"))
        p.add_argument("--endpoint", help="remote sampler URL")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", help="directory for output files")
    return parser


def _resolve_config(args):
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {"omega": args.omega, "blocks": args.blocks, "bits": args.bits,
                 "backend": args.backend, "endpoint": args.endpoint, "seed": args.seed,
                 "output_dir": args.out_dir, "system": args.system}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **overrides)


def _heat_system(config):
    grid = config.grid()
    plate_edges = all(getattr(config, e) == s for e, s in _PLATE_EDGES.items())
    if plate_edges and config.n == config.m:
        L = config.side_length
        system = assemble_system(grid, exact=lambda x, y: analytic_reference(x, y, L))
    else:
        system = assemble_system(grid)
        system = system.with_reference(np.linalg.solve(system.A, system.b))
    return grid, system


def _file_system(config):
    if not config.system:
        raise UsageError("--system (or 'system' in the config) is required")
    system = read_system(config.system)
    if config.stopping_mode == "reference":
        system = system.with_reference(np.linalg.solve(system.A, system.b))
    return system


def _omega(config, splitting, log):
    if config.omega != "optimal":
        return float(config.omega)
    rho = bs.jacobi_spectral_radius(splitting)
    if rho >= 1.0:
        log(f"warning: rho(H_J) = {rho:.6g} >= 1, optimal omega undefined; using omega = 1")
        return 1.0
    return bs.optimal_omega(rho)


def _out_dir(config):
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_solve(config, system, splitting, omega, backend_seed=None, bits=None,
               backend=None, stop_early=True):
    part = splitting.partition
    be = config.make_backend(bits=bits, seed=backend_seed, backend=backend)
    try:
        return bs.solve(system, part, config.sor_config(omega, stop_early), be,
                        splitting=splitting)
    except DivergenceError as exc:
        return exc.report


def cmd_solve_heat(config, out, err):
    grid, system = _heat_system(config)
    splitting = bs.split_dlu(system, bs.partition(system, config.blocks))
    omega = _omega(config, splitting, err)
    report = _run_solve(config, system, splitting, omega)
    outdir = _out_dir(config)
    write_heatmap(grid, report.solution, outdir / "heatmap.pgm", csv_path=outdir / "solution.csv")
    write_trace(report, outdir / "trace.csv")
    last = report.error_trace[-1] if report.error_trace else float("nan")
    out(f"converged={str(report.converged).lower()} iterations={report.iterations_used} "
        f"omega={omega:.10g} final_error={last:.6g}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_solve_system(config, out, err):
    system = _file_system(config)
    splitting = bs.split_dlu(system, bs.partition(system, config.blocks))
    omega = _omega(config, splitting, err)
    if system.dimension <= bs.MAX_EXPLICIT_DIMENSION:
        check = bs.check_convergence(splitting, omega)
        if not check.converges:
            err(f"error: block SOR diverges for this system: rho(H_SOR({omega:.6g})) = "
                f"{check.spectral_radius:.6g} >= 1")
            return EXIT_NOT_CONVERGED
    report = _run_solve(config, system, splitting, omega)
    outdir = _out_dir(config)
    lines = ["index,value"] + [f"{k},{v:.17g}" for k, v in enumerate(report.solution)]
    (outdir / "solution.csv").write_text("\n".join(lines) + "\n")
    write_trace(report, outdir / "trace.csv")
    if not report.converged and report.error_trace and report.error_trace[-1] > bs.DIVERGENCE_THRESHOLD:
        err(f"error: block SOR diverged after {report.iterations_used} iterations")
        return EXIT_NOT_CONVERGED
    out(f"converged={str(report.converged).lower()} iterations={report.iterations_used} "
        f"omega={omega:.10g}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_analyze(config, out, err):
    if config.system:
        system = read_system(config.system)
    else:
        system = _heat_system(config)[1]
    splitting = bs.split_dlu(system, bs.partition(system, config.blocks))
    rho_j = bs.jacobi_spectral_radius(splitting)
    omega_opt = bs.optimal_omega(rho_j) if rho_j < 1.0 else float("nan")
    rho_gs = bs.sor_spectral_radius(splitting, 1.0)
    out(f"rho_jacobi={rho_j:.12g}")
    out(f"omega_opt={omega_opt:.12g}")
    out(f"rho_sor_omega1={rho_gs:.12g}")
    if rho_j < 1.0:
        check = bs.check_convergence(splitting, omega_opt)
        out(f"rho_sor_opt={check.spectral_radius:.12g}")
        out(f"converges={str(check.converges).lower()}")
        return EXIT_OK if check.converges else EXIT_NOT_CONVERGED
    out("rho_sor_opt=nan")
    out(f"converges={str(rho_gs < 1.0 - bs.CONVERGENCE_GUARD).lower()}")
    return EXIT_NOT_CONVERGED


def plateau(trace, tail=5):
    """Mean of the last ``tail`` entries of a fixed-length error trace."""
    return float(np.mean(trace[-tail:]))


def cmd_compare(config, out, err):
    grid, system = _heat_system(config)
    splitting = bs.split_dlu(system, bs.partition(system, config.blocks))
    rho_j = bs.jacobi_spectral_radius(splitting)
    omega = float(config.omega) if config.omega != "optimal" else bs.optimal_omega(rho_j)
    outdir = _out_dir(config)
    tol = config.tolerance
    runs = {}
    classic = "direct"
    for label, w in (("gs", 1.0), ("sor", omega)):
        rep = _run_solve(config, system, splitting, w, backend=classic, stop_early=False)
        write_trace(rep, outdir / f"trace_{label}.csv")
        runs[(label, None)] = rep
    hybrid = config.backend if config.backend != "direct" else "anneal"
    for r in config.compare_bits:
        for label, w in (("gs", 1.0), ("sor", omega)):
            rep = _run_solve(config, system, splitting, w, backend_seed=config.seed, bits=r,
                             backend=hybrid, stop_early=False)
            write_trace(rep, outdir / f"trace_{label}_R{r}.csv")
            runs[(label, r)] = rep
    out(f"omega_opt={omega:.10g} tolerance={tol:g}")
    out("run,bits,gs_crossing,sor_crossing,gs_plateau,sor_plateau")
    ok = True
    for r in (None,) + tuple(config.compare_bits):
        gs, sor = runs[("gs", r)], runs[("sor", r)]
        gc, sc = gs.first_crossing(tol), sor.first_crossing(tol)
        ok &= sc is not None
        name = "classic" if r is None else "hybrid"
        out(f"{name},{'-' if r is None else r},{gc if gc else '-'},{sc if sc else '-'},"
            f"{plateau(gs.error_trace):.6g},{plateau(sor.error_trace):.6g}")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


COMMANDS = {
    "solve-heat": cmd_solve_heat,
    "solve-system": cmd_solve_system,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def run(argv=None, stdout=None, stderr=None):
    """Execute one command; returns the exit status instead of exiting."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def out(line):
        print(line, file=stdout)

    def err(line):
        print(line, file=stderr)

    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command (solve-heat, solve-system, analyze, compare)")
        config = _resolve_config(args)
        return COMMANDS[args.command](config, out, err)
    except UsageError as exc:
        err(f"usage error: {exc}")
    except NumericalFailureError as exc:
        err(f"numerical failure: {exc}")
    except HybridSorError as exc:
        err(f"error: {type(exc).__name__}: {exc}")
    except OSError as exc:
        err(f"error: I/O failure: {exc}")
    return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
