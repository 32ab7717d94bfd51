"""Command line entry point: ``tdqas <command> --config run.json``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as cfgmod
from .ansatz import cumulative_k_moment_basis, extended_operator_set
from .baselines import expectation_trace, trotter_evolve, vqs_run
from .config import RunSpec
from .errors import ConfigError, TdqasError
from .evolution import build_stage, run_closed
from .lindblad import run_open
from .output import complex_matrix, summary, write_csv, write_json

ALIGN_TOL = 1e-9


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _load(args) -> RunSpec:
    spec = cfgmod.load_config(args.config)
    if args.seed is not None:
        spec = cfgmod.with_seed(spec, args.seed)
    return spec


def _outdir(args, spec: RunSpec) -> Path:
    out = Path(args.out if args.out else spec.output.path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _align(grid: np.ndarray, times: np.ndarray, values: np.ndarray, what: str) -> np.ndarray:
    idx = np.searchsorted(times, grid - ALIGN_TOL)
    idx = np.clip(idx, 0, len(times) - 1)
    if np.any(np.abs(times[idx] - grid) > ALIGN_TOL):
        raise ConfigError(f"{what} time grid does not contain the recorded times")
    return values[idx]


def cmd_simulate(spec: RunSpec, out: Path) -> dict:
    start = time.perf_counter()
    rec = run_closed(cfgmod.build_problem(spec))
    write_csv(out / "trajectory.csv", rec.columns())
    doc = summary(rec.diagnostics, wall_time=time.perf_counter() - start,
                  config=spec.model_dump(mode="json", by_alias=True))
    write_json(out / "summary.json", doc)
    return doc


def cmd_compare(spec: RunSpec, out: Path) -> dict:
    """QAS, exact, and the configured Trotter/VQS baselines on one time grid."""
    start = time.perf_counter()
    problem = cfgmod.build_problem(spec)
    problem.reference = True
    rec = run_closed(problem)
    grid = rec.times
    psi = problem.state.to_dense()
    cols: dict[str, np.ndarray] = {"t": grid}
    for k, v in rec.observables.items():
        cols[f"qas_{k}"] = v
    for k, v in rec.reference_observables.items():
        cols[f"exact_{k}"] = v
    extra: dict = {}
    bl = spec.baselines
    if bl.trotter is not None:
        ev = spec.evolution
        times, states = trotter_evolve(problem.h, psi, bl.trotter.steps, ev.t1 - ev.t0, ev.t0)
        for k, op in problem.observables.items():
            cols[f"trotter_{k}"] = _align(grid, times, expectation_trace(states, op), "Trotter")
        extra["trotter_steps"] = bl.trotter.steps
    if bl.vqs is not None:
        ev = spec.evolution
        res = vqs_run(
            cfgmod.vqs_generators(spec), problem.h, psi, ev.t0, ev.t1,
            bl.vqs.dt or ev.dt, cfgmod.vqs_noise(spec), bl.vqs.svd_tol, problem.observables,
        )
        for k, v in res.observables.items():
            cols[f"vqs_{k}"] = _align(grid, res.times, v, "VQS")
        extra["vqs_lambda"] = bl.vqs.lam
    cols["fidelity"] = rec.fidelity
    write_csv(out / "compare.csv", cols)
    doc = summary(rec.diagnostics, wall_time=time.perf_counter() - start, **extra)
    write_json(out / "summary.json", doc)
    return doc


def cmd_closure(spec: RunSpec, out: Path) -> dict:
    start = time.perf_counter()
    h = cfgmod.build_hamiltonian(spec)
    s = extended_operator_set(h, spec.ansatz.closure_cap)
    basis = cumulative_k_moment_basis(s, spec.ansatz.K, spec.ansatz.basis_cap)
    doc = {
        "closure_size": len(s),
        "closure_capped": s.capped,
        "operators": [p.indexed_label() for p in s.operators],
        "depths": list(s.depths),
        "K": spec.ansatz.K,
        "basis_sizes": list(basis.level_sizes),
        "basis_size": len(basis),
        "basis_capped": basis.capped,
        "schema_version": cfgmod.SCHEMA_VERSION,
        "timings": {"total": time.perf_counter() - start},
    }
    write_json(out / "closure.json", doc)
    return doc


def cmd_lindblad(spec: RunSpec, out: Path) -> dict:
    start = time.perf_counter()
    problem = cfgmod.build_problem(spec)
    model = cfgmod.build_lindblad_model(spec, problem.h)
    rec = run_open(problem, model)
    cols = rec.columns()
    for k, v in rec.reference_observables.items():
        cols[f"exact_{k}"] = v
    write_csv(out / "trajectory.csv", cols)
    doc = summary(rec.diagnostics, wall_time=time.perf_counter() - start)
    write_json(out / "summary.json", doc)
    return doc


def cmd_overlaps(spec: RunSpec, out: Path) -> dict:
    """Dump the overlap matrices, the whole 'quantum' output of a run."""
    problem = cfgmod.build_problem(spec)
    timings: dict[str, float] = {}
    jumps, extra_gens = None, ()
    if spec.lindblad is not None:
        model = cfgmod.build_lindblad_model(spec, problem.h)
        jumps, extra_gens = model.operators, model.jump_strings()
    _, basis, _, ov = build_stage(problem, timings, extra_gens, jumps)
    doc = {
        "basis": [p.indexed_label() for p in basis.operators],
        "E": complex_matrix(ov.E),
        "D": [complex_matrix(d) for d in ov.D],
        "M": {k: complex_matrix(m) for k, m in zip(ov.obs_labels, ov.M_obs)},
        "basis_size": len(basis),
        "eval_count": ov.eval_count,
        "backend": ov.backend,
        "schema_version": cfgmod.SCHEMA_VERSION,
        "timings": timings,
    }
    if ov.R is not None:
        doc["R"] = [complex_matrix(r) for r in ov.R]
        doc["F"] = [complex_matrix(f) for f in ov.F]
    write_json(out / "overlaps.json", doc)
    return doc


COMMANDS = {
    "simulate": (cmd_simulate, "run QAS and write trajectory.csv and summary.json"),
    "compare": (cmd_compare, "run QAS against exact, Trotter and VQS baselines"),
    "closure": (cmd_closure, "report the operator set and basis sizes"),
    "lindblad": (cmd_lindblad, "run open-system QAS"),
    "overlaps": (cmd_overlaps, "dump the E, D, M (and R, F) matrices as JSON"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdqas", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", help="output directory (default: output.path of the config)")
        p.add_argument("--seed", type=_u64, help="override the config seed")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        spec = _load(args)
        out = _outdir(args, spec)
        doc = func(spec, out)
    except TdqasError as exc:
        print(f"tdqas {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    keys = ("basis_size", "eval_count", "cond_E")
    print(" ".join(f"{k}={doc[k]}" for k in keys if k in doc) + f" out={out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
