"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, mesh as meshes
from .linsolve import ProbeSizeError, SolverBreakdown
from .weak_gradient import auto_degree

EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 2, 3, 4

GENERATORS = {
    "tri": meshes.build_uniform_triangle_mesh,
    "quad": meshes.build_uniform_quad_mesh,
    "hex": meshes.build_hexagon_mesh,
}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class StudyConfig:
    command: str
    field: str = "sinsin"
    k: int = 1
    j: object = "auto"
    levels: tuple = ()
    mesh: str | None = None
    tol: float = 1e-10
    seed: int = 0
    samples: int = 100
    fmt: str = "csv"
    out: str | None = None

    def validate(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.j != "auto":
            if self.j < self.k:
                raise ConfigError(f"j={self.j} must be at least k={self.k}")
        if self.command == "converge":
            if not self.levels:
                raise ConfigError("levels must not be empty")
            if any(n < 1 for n in self.levels):
                raise ConfigError("levels must be positive")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise ConfigError("levels must be strictly increasing")
        if self.command in ("converge", "solve") and self.field not in analysis.FIELDS:
            raise ConfigError(f"unknown field {self.field!r}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        return self


def _degree(text):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _levels(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="sfwg", description="Stabilizer-free weak Galerkin studies")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=True):
        sp.add_argument("--k", type=int, default=1, help="polynomial degree of v0 and v_b")
        sp.add_argument("--j", type=_degree, default="auto",
                        help="weak-gradient degree, or auto for the stable minimum")
        if mesh:
            sp.add_argument("--mesh", required=True,
                            help="polymesh file or gen:tri:N, gen:quad:N, gen:hex:N")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    c = sub.add_parser("converge", help="convergence study on uniform triangle meshes")
    common(c, mesh=False)
    c.add_argument("--field", default="sinsin", help="manufactured solution: sinsin or bubble")
    c.add_argument("--levels", type=_levels, default=(2, 4, 8),
                   help="comma-separated mesh sizes n, e.g. 2,4,8,16")
    c.add_argument("--tol", type=float, default=1e-10, help="relative CG residual tolerance")
    c.add_argument("--format", dest="fmt", choices=("csv", "md"), default="csv")

    pr = sub.add_parser("probe", help="singularity probe of the assembled system")
    common(pr)

    ne = sub.add_parser("normequiv", help="energy / discrete H1 norm ratio extremes")
    common(ne)
    ne.add_argument("--samples", type=int, default=100, help="number of random vectors")
    ne.add_argument("--seed", type=int, default=0, help="RNG seed")

    so = sub.add_parser("solve", help="solve and dump the unknown vector")
    common(so)
    so.add_argument("--field", default="sinsin", help="manufactured solution: sinsin or bubble")
    so.add_argument("--tol", type=float, default=1e-10, help="relative CG residual tolerance")
    return p


def load_mesh(spec):
    if spec.startswith("gen:"):
        parts = spec.split(":")
        if len(parts) != 3 or parts[1] not in GENERATORS:
            raise ConfigError(f"bad mesh generator {spec!r}")
        try:
            n = int(parts[2])
        except ValueError:
            raise ConfigError(f"bad mesh size in {spec!r}") from None
        try:
            return GENERATORS[parts[1]](n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        return meshes.load_mesh(spec)
    except (OSError, meshes.MeshError) as exc:
        raise ConfigError(f"cannot load mesh {spec!r}: {exc}") from None


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_j(cfg, mesh):
    j = auto_degree(mesh, cfg.k) if cfg.j == "auto" else cfg.j
    if j < cfg.k:
        raise ConfigError(f"j={j} must be at least k={cfg.k}")
    return j


def cmd_converge(cfg):
    report = analysis.convergence_study(cfg.field, cfg.k, cfg.j, cfg.levels, cfg.tol)
    for r in report.rows:
        if r.cg_iters and r.residual > cfg.tol:
            raise NumericalFailure(f"CG did not converge at level {r.level}")
    text = report.to_csv() if cfg.fmt == "csv" else report.to_markdown()
    _emit(text, cfg.out)


def cmd_probe(cfg):
    mesh = load_mesh(cfg.mesh)
    rep = analysis.singularity_study(mesh, cfg.k, _resolve_j(cfg, mesh))
    _emit("\n".join(rep.lines()) + "\n", cfg.out)


def cmd_normequiv(cfg):
    mesh = load_mesh(cfg.mesh)
    j = _resolve_j(cfg, mesh)
    res = analysis.norm_equivalence_study(mesh, cfg.k, j, cfg.samples, cfg.seed)
    lines = [f"k={cfg.k} j={j} samples={cfg.samples} seed={cfg.seed}",
             f"min_ratio={res.min_ratio:.10e}", f"max_ratio={res.max_ratio:.10e}"]
    if res.exact_min is not None:
        lines += [f"exact_min={res.exact_min:.10e}", f"exact_max={res.exact_max:.10e}"]
    _emit("\n".join(lines) + "\n", cfg.out)


def cmd_solve(cfg):
    mesh = load_mesh(cfg.mesh)
    j = _resolve_j(cfg, mesh)
    uh, stats, dofmap, _ = analysis.solve_problem(mesh, cfg.field, cfg.k, j, cfg.tol)
    if stats is not None and not stats.converged:
        raise NumericalFailure(f"CG did not converge (residual {stats.residual:.3e})")
    buf = io.StringIO()
    buf.write(f"# field={cfg.field} k={cfg.k} j={j}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "kind", "owner", "slot", "value"])
    n_int = mesh.n_elements * dofmap.n0
    interior_edges = np.flatnonzero(dofmap.edge_offsets >= 0)
    for i, val in enumerate(uh):
        if i < n_int:
            kind, owner, slot = "interior", i // dofmap.n0, i % dofmap.n0
        else:
            r = i - n_int
            kind, owner, slot = "edge", int(interior_edges[r // dofmap.nb]), r % dofmap.nb
        w.writerow([i, kind, owner, slot, f"{val:.16e}"])
    _emit(buf.getvalue(), cfg.out)


COMMANDS = {"converge": cmd_converge, "probe": cmd_probe, "normequiv": cmd_normequiv,
            "solve": cmd_solve}


def run(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    cfg = StudyConfig(
        command=ns.command, k=ns.k, j=ns.j, out=ns.out,
        field=getattr(ns, "field", "sinsin"), levels=getattr(ns, "levels", ()),
        mesh=getattr(ns, "mesh", None), tol=getattr(ns, "tol", 1e-10),
        seed=getattr(ns, "seed", 0), samples=getattr(ns, "samples", 100),
        fmt=getattr(ns, "fmt", "csv"),
    )
    try:
        cfg.validate()
        COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"sfwg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, SolverBreakdown, ProbeSizeError, ArithmeticError) as exc:
        print(f"sfwg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main():
    sys.exit(run())
