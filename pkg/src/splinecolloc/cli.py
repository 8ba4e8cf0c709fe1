"""Command-line entry point: solves, sweeps, baselines, and exports.

Commands: solve, convergence, odil-fd, inverse, sample.  Results are
written as JSON documents (schema_version field included); solution
samples and sweep tables as CSV.  Exit codes: 0 success, 2 configuration
error, 3 solver failure, 4 I/O failure.
"""

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .assembly import apply_dirichlet, assemble, uniform_collocation
from .basis import make_uniform_open_space
from .geometry import GeometryMap, sample_mapped_grid
from .gram import build_gram, robust_loss
from .inverse import solve_inverse
from .metrics import l2_error, observed_rate
from .odil_fd import odil_solve
from .problems import BENCHMARKS, make_benchmark
from .solver import GNConfig, SolverError, gauss_newton

SCHEMA_VERSION = 1

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


@dataclasses.dataclass
class RunConfig:
    """Declarative description of one CLI run; round-trips through JSON."""
    command: str
    benchmark: str = "poisson2d"
    degree: int = 3
    elements: int = 30
    collocation: int = 30
    collocation_factor: int = 2
    gram: str = "identity"
    geometry: str = "identity"
    epsilon: float | None = None
    alpha: float | None = None
    kappa: float | None = None
    kappa_true: float | None = None
    kappa_init: float | None = None
    lambda_reg: float = 1.0
    max_iters: int = 50
    step_tol: float = 1e-10
    loss_tol: float = 1e-24
    damping: float = 1e-8
    nodes: int = 100
    degrees: tuple = (2, 3)
    element_sweep: tuple = (8, 16, 32)
    samples: int = 33
    seed: int = 0
    out: str | None = None
    export_solution: str | None = None
    kappa_csv: str | None = None

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["degrees"] = list(self.degrees)
        d["element_sweep"] = list(self.element_sweep)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("degrees", "element_sweep"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _benchmark_params(cfg):
    params = {}
    if cfg.benchmark in ("eriksson_johnson", "ej_disk", "allen_cahn"):
        params["epsilon"] = cfg.epsilon if cfg.epsilon is not None else (
            0.01 if cfg.benchmark == "allen_cahn" else 0.001)
    if cfg.benchmark in ("helmholtz2d", "helmholtz3d_ball"):
        if cfg.kappa is None:
            raise ValueError(f"benchmark {cfg.benchmark!r} requires --kappa")
        params["kappa"] = cfg.kappa
        if cfg.benchmark == "helmholtz2d":
            params["alpha"] = cfg.alpha if cfg.alpha is not None else 1.0
    return params


def _gn_config(cfg):
    return GNConfig(max_iterations=cfg.max_iters, step_tolerance=cfg.step_tol,
                    loss_tolerance=cfg.loss_tol, damping_initial=cfg.damping)


def run_forward(cfg):
    """Solve one forward benchmark; returns (result dict, field)."""
    problem = make_benchmark(cfg.benchmark, **_benchmark_params(cfg))
    spaces = tuple(make_uniform_open_space(cfg.degree, cfg.elements, 0.0, 1.0)
                   for _ in range(problem.dim))
    colloc = uniform_collocation(cfg.collocation, problem.dim)
    dofs = apply_dirichlet(problem, spaces)
    gram = build_gram(cfg.gram, colloc)
    field0 = dofs.field_from_interior(np.zeros(dofs.n_interior))
    field, report = gauss_newton(problem, field0, colloc, dofs, gram, _gn_config(cfg))

    system = assemble(problem, field, colloc, dofs)
    err = l2_error(field, problem.exact) if problem.exact is not None else None
    result = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "l2_error": err,
        "final_loss": robust_loss(gram, system.residual),
        "loss_history": report.loss_history,
        "iterations": report.iterations_used,
        "converged": report.converged,
        "wall_seconds": report.wall_seconds,
        "n_interior": dofs.n_interior,
        "n_collocation": colloc.size,
        "jacobian_nnz": int(system.jacobian.nnz),
    }
    return result, field


def run(config):
    """Execute a RunConfig; returns the result dict (also written to disk)."""
    cfg = config
    if cfg.benchmark not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {cfg.benchmark!r}")

    if cfg.command in ("solve", "sample"):
        result, field = run_forward(cfg)
        if cfg.export_solution or cfg.command == "sample":
            path = cfg.export_solution
            if path is None:
                raise ValueError("sample command requires --export-solution PATH")
            geo = _geometry_for(cfg, field.dim)
            export_solution(field, geo, cfg.samples, path)
            result["solution_csv"] = path
    elif cfg.command == "convergence":
        result = run_convergence(cfg)
    elif cfg.command == "odil-fd":
        problem = make_benchmark("poisson2d")
        gram = build_gram(cfg.gram, uniform_collocation(cfg.nodes - 2, 2))
        grid, report, err = odil_solve(cfg.nodes, problem, gram, _gn_config(cfg))
        result = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "l2_error": err,
            "iterations": report.iterations_used,
            "converged": report.converged,
            "wall_seconds": report.wall_seconds,
        }
    elif cfg.command == "inverse":
        if cfg.kappa_true is None or cfg.kappa_init is None:
            raise ValueError("inverse command requires --kappa-true and --kappa-init")
        spaces = tuple(make_uniform_open_space(cfg.degree, cfg.elements, 0.0, 1.0)
                       for _ in range(2))
        colloc = uniform_collocation(cfg.collocation, 2)
        gn = GNConfig(max_iterations=cfg.max_iters, step_tolerance=cfg.step_tol,
                      loss_tolerance=cfg.loss_tol, damping_initial=cfg.damping)
        kappa, field, report = solve_inverse(cfg.kappa_init, cfg.kappa_true,
                                             cfg.lambda_reg, spaces, colloc, gn)
        result = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "kappa_recovered": kappa,
            "kappa_history": report.kappa_history,
            "loss_history": report.loss_history,
            "iterations": report.iterations_used,
            "converged": report.converged,
            "wall_seconds": report.wall_seconds,
        }
        if cfg.kappa_csv:
            with open(cfg.kappa_csv, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["iteration", "kappa"])
                for i, k in enumerate(report.kappa_history):
                    writer.writerow([i, _fmt(k)])
            result["kappa_csv"] = cfg.kappa_csv
    else:
        raise ValueError(f"unknown command {cfg.command!r}")

    if cfg.out:
        with open(cfg.out, "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    return result


def run_convergence(cfg):
    rows = []
    rates = {}
    for p in cfg.degrees:
        errs, hs = [], []
        for n in cfg.element_sweep:
            n_c = cfg.collocation_factor * n if cfg.collocation_factor else cfg.collocation
            sub = dataclasses.replace(cfg, command="solve", degree=int(p),
                                      elements=int(n), collocation=int(n_c),
                                      out=None, export_solution=None)
            res, _ = run_forward(sub)
            h = 1.0 / n
            rows.append({"p": int(p), "n": int(n), "n_c": int(n_c), "h": h,
                         "l2_error": res["l2_error"],
                         "iterations": res["iterations"],
                         "wall_seconds": res["wall_seconds"]})
            errs.append(res["l2_error"])
            hs.append(h)
        rates[int(p)] = observed_rate(errs, hs) if len(errs) >= 3 else None
    result = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "rows": rows,
        "observed_rates": rates,
    }
    if cfg.export_solution:
        with open(cfg.export_solution, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["p", "n", "n_c", "h", "l2_error", "iterations",
                             "wall_seconds"])
            for r in rows:
                writer.writerow([r["p"], r["n"], r["n_c"], _fmt(r["h"]),
                                 _fmt(r["l2_error"]), r["iterations"],
                                 _fmt(r["wall_seconds"])])
            for p, rate in rates.items():
                writer.writerow([f"# observed_rate p={p}",
                                 _fmt(rate) if rate is not None else ""])
    return result


def _geometry_for(cfg, dim):
    if cfg.geometry == "disk" and dim != 2:
        raise ValueError("disk geometry requires a 2D benchmark")
    if cfg.geometry == "ball" and dim != 3:
        raise ValueError("ball geometry requires a 3D benchmark")
    return GeometryMap(cfg.geometry, dim=dim)


def _fmt(x):
    return "%.17g" % float(x)


def export_solution(field, geo, samples, path):
    """Write sampled solution values in physical coordinates as CSV."""
    rows = sample_mapped_grid(geo, field, samples)
    header = ["x", "y", "z"][: geo.dim] + ["u"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splinecolloc",
        description="Spline collocation residual-minimization PDE solver")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    def add(name, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.add_argument("--config", help="JSON file with defaults for any flag")
        sp.add_argument("--benchmark", default="poisson2d", choices=BENCHMARKS)
        sp.add_argument("--degree", type=int, default=3)
        sp.add_argument("--elements", type=int, default=30)
        sp.add_argument("--collocation", type=int, default=30)
        sp.add_argument("--collocation-factor", dest="collocation_factor",
                        type=int, default=2)
        sp.add_argument("--gram", default="identity", choices=("identity", "h1"))
        sp.add_argument("--geometry", default="identity",
                        choices=("identity", "disk", "ball"))
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--kappa", type=float, default=None)
        sp.add_argument("--kappa-true", dest="kappa_true", type=float, default=None)
        sp.add_argument("--kappa-init", dest="kappa_init", type=float, default=None)
        sp.add_argument("--lambda", dest="lambda_reg", type=float, default=1.0)
        sp.add_argument("--max-iters", dest="max_iters", type=int, default=50)
        sp.add_argument("--step-tol", dest="step_tol", type=float, default=1e-10)
        sp.add_argument("--loss-tol", dest="loss_tol", type=float, default=1e-24)
        sp.add_argument("--damping", type=float, default=1e-8)
        sp.add_argument("--nodes", type=int, default=100)
        sp.add_argument("--degrees", default="2,3")
        sp.add_argument("--element-sweep", dest="element_sweep", default="8,16,32")
        sp.add_argument("--samples", type=int, default=33)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--export-solution", dest="export_solution", default=None)
        sp.add_argument("--kappa-csv", dest="kappa_csv", default=None)
        subparsers[name] = sp
        return sp

    add("solve", help="solve one forward benchmark")
    add("convergence", help="mesh sweep with observed-rate footer")
    add("odil-fd", help="finite-difference Poisson baseline")
    add("inverse", help="inverse Helmholtz parameter recovery")
    add("sample", help="solve and export mapped solution samples")
    return parser, subparsers


def config_from_args(args):
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    d = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    for key in ("degrees", "element_sweep"):
        if key in d and isinstance(d[key], str):
            d[key] = tuple(int(tok) for tok in d[key].split(","))
    return RunConfig(**d)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
            known = {f.name for f in dataclasses.fields(RunConfig)}
            bad = set(file_cfg) - known
            if bad:
                raise ValueError(f"unknown config keys: {sorted(bad)}")
            subparsers[args.command].set_defaults(**file_cfg)
            args = parser.parse_args(argv)  # explicit flags still win
        cfg = config_from_args(args)
        if cfg.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {cfg.benchmark!r}")
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run(cfg)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO

    summary = {k: result.get(k) for k in
               ("l2_error", "kappa_recovered", "iterations", "wall_seconds")
               if result.get(k) is not None}
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
