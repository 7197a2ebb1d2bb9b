"""Command-line front end: ``cqavwc validate|symmetrize|bound|simulate|lemmas``.

Every command writes one JSON report (stdout or ``--out``). Exit status is
0 on success, 1 when a lemma sweep finds a violation, 2 on validation
failure, 3 when a resource cap would be exceeded and 4 on parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, qmath, symmetrize
from .channel import Distribution, ResourceCaps, validate_channel
from .coding import run_secrecy_experiment
from .errors import ChannelValidationError, CqavwcError, ParseError, ResourceError
from .infoquant import SimplexGrid, lower_bound_csi, lower_bound_no_csi
from .typical import ProductState, projector_mass_checks, spectral_projector

log = logging.getLogger("cqavwc")

EXIT_OK = 0
EXIT_LEMMA = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_PARSE = 4

CSV_HEADER = ["seed", "t_seq", "max_error", "leakage_bits", "covering_gap", "rate_message", "rate_total"]
SCHEMA_VERSION = 1


# channel files --------------------------------------------------------------


def load_channel_file(path: str) -> dict:
    """Read and structurally check a channel file; invariants are left to validation."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), context=path) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, context=f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be an object", context=path)
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}", context="schema_version")
    for key in ("inputs", "states"):
        if not isinstance(raw.get(key), list):
            raise ParseError("expected a list of labels", context=key)
    for key in ("rho", "sigma"):
        if not isinstance(raw.get(key), dict):
            raise ParseError('expected an object keyed by "x|t"', context=key)
    for key in ("dim_legal", "dim_eve"):
        if key in raw and not isinstance(raw[key], int):
            raise ParseError("expected an integer", context=key)
    return raw


def read_channel(path: str):
    return validate_channel(load_channel_file(path))


# reports --------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: tuples become lists, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(command: str, parameters: dict, results, seeds=None, wall_clock=None) -> dict:
    return {
        "command": command,
        "parameters": parameters,
        "results": results,
        "tool_version": __version__,
        "seeds": seeds,
        "wall_clock_seconds": wall_clock,
    }


def dump_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _caps(args) -> ResourceCaps:
    return ResourceCaps(args.max_dim, args.max_input_seqs, args.max_state_seqs)


def _threads() -> int:
    value = os.environ.get("CQAVWC_THREADS", "1")
    try:
        k = int(value)
    except ValueError:
        raise ParseError(f"not an integer: {value!r}", context="CQAVWC_THREADS") from None
    return max(k, 1)


# commands -------------------------------------------------------------------


def cmd_validate(args) -> tuple[dict, int]:
    params = {"path": args.path}
    try:
        ch = read_channel(args.path)
    except ChannelValidationError as exc:
        results = {"valid": False, "violations": [v.as_dict() for v in exc.violations]}
        return make_report("validate", params, results), EXIT_VALIDATION
    results = {
        "valid": True,
        "violations": [],
        "inputs": list(ch.inputs),
        "states": list(ch.states),
        "dim_legal": ch.dim_legal,
        "dim_eve": ch.dim_eve,
    }
    return make_report("validate", params, results), EXIT_OK


def cmd_symmetrize(args) -> tuple[dict, int]:
    ch = read_channel(args.path)
    params = {"path": args.path, "mode": args.mode, "tol": args.tol}
    if args.mode == "joint":
        results = {"joint": symmetrize.check_joint(ch, args.tol).as_dict()}
    else:
        results = {
            "per_t": {t: v.as_dict() for t, v in symmetrize.check_per_state(ch, args.tol).items()}
        }
    return make_report("symmetrize", params, results), EXIT_OK


def cmd_bound(args) -> tuple[dict, int]:
    ch = read_channel(args.path)
    params = {
        "path": args.path,
        "mode": args.mode,
        "n": args.n,
        "grid_step": args.grid_step,
        "final_step": args.final_step,
        "tol_sym": args.tol,
    }
    grid = SimplexGrid(args.grid_step, args.final_step)
    fn = lower_bound_no_csi if args.mode == "no-csi" else lower_bound_csi
    report = fn(ch, grid, args.n, _caps(args), args.tol)
    return make_report("bound", params, report.as_dict()), EXIT_OK


def _parse_p(text: str | None, inputs) -> Distribution:
    if text is None:
        return Distribution.uniform(inputs)
    try:
        weights = [float(v) for v in text.split(",")]
    except ValueError:
        raise ParseError(f"not a comma-separated list of numbers: {text!r}", context="--p") from None
    if len(weights) != len(inputs):
        raise ParseError(f"{len(weights)} weights for {len(inputs)} inputs", context="--p")
    return Distribution(inputs, np.array(weights))


def simulation_rows(reports) -> list[list]:
    """CSV rows, one per ``(seed, t^n)``, in seed then enumeration order of ``t^n``."""
    rows = []
    for r in reports:
        for t_seq in r.leakage_by_t:
            rows.append([
                r.seed,
                "|".join(t_seq),
                repr(float(r.max_error)),
                repr(float(r.leakage_by_t[t_seq])),
                repr(float(r.covering_gap_by_t[t_seq])),
                repr(float(r.rate_message)),
                repr(float(r.rate_total)),
            ])
    return rows


def write_csv(path: str, reports) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(simulation_rows(reports))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def cmd_simulate(args) -> tuple[dict, int]:
    ch = read_channel(args.path)
    p = _parse_p(args.p, ch.inputs)
    seeds = [args.seed] if args.seed is not None else list(range(args.seeds))
    caps = _caps(args)
    params = {
        "path": args.path,
        "n": args.n,
        "J": args.J,
        "L": args.L,
        "alpha": args.alpha,
        "delta": args.delta,
        "p": p.as_dict(),
        "projector_source": args.projector_source,
        "csv": args.csv,
    }

    def one(seed):
        return run_secrecy_experiment(
            ch, p, args.n, args.J, args.L, seed, args.alpha, args.delta,
            projector_source=args.projector_source, caps=caps,
        )

    workers = min(_threads(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, seeds))
    else:
        reports = [one(s) for s in seeds]
    if args.csv:
        write_csv(args.csv, reports)
    results = {
        "summary": {
            "median_max_error": float(np.median([r.max_error for r in reports])),
            "median_max_leakage_bits": float(np.median([r.max_leakage for r in reports])),
            "median_max_covering_gap": float(np.median([r.max_covering_gap for r in reports])),
            "gentle_violations": sum(r.gentle_violations for r in reports),
        },
        "experiments": [r.as_dict() for r in reports],
    }
    return make_report("simulate", params, results, seeds=seeds), EXIT_OK


def gentle_sweep(trials: int, dim: int, rng: np.random.Generator) -> dict:
    """``||rho - sqrt(X) rho sqrt(X)||_1 <= sqrt(8 (1 - tr(rho X)))`` on random pairs."""
    violations, worst = 0, math.inf
    for _ in range(trials):
        rank = int(rng.integers(1, dim + 1))
        rho = qmath.random_density(dim, rng, rank)
        u = qmath.random_unitary(dim, rng)
        contraction = (u * rng.uniform(0, 1, dim) ** 3) @ u.conj().T
        x = qmath.hermitian_part(np.eye(dim) - contraction)
        d, bound = qmath.gentle_damage(rho, x)
        worst = min(worst, bound - d)
        violations += d > bound + qmath.TOL_PSD
    return {"trials": trials, "violations": int(violations), "worst_margin": worst}


def fannes_sweep(trials: int, dim: int, rng: np.random.Generator) -> dict:
    """``|S(x) - S(y)| <= mu log d - mu log mu`` on random pairs with ``mu < 1/e``."""
    violations, applicable, worst = 0, 0, math.inf
    for _ in range(trials):
        x = qmath.random_density(dim, rng, int(rng.integers(1, dim + 1)))
        eps = rng.uniform(0, 0.25)
        y = (1 - eps) * x + eps * qmath.random_density(dim, rng)
        gap, bound = qmath.fannes_gap(x, y)
        if bound is None:
            continue
        applicable += 1
        worst = min(worst, bound - gap)
        violations += gap > bound + qmath.TOL_SPEC
    return {
        "trials": trials,
        "applicable": applicable,
        "violations": int(violations),
        "worst_margin": worst,
    }


def mass_sweep(
    seeds: int, dim: int, rng: np.random.Generator, caps: ResourceCaps,
    ns=(4, 8, 12), alphas=(0.25, 0.5, 1.0),
) -> dict:
    """Projector mass, rank and sandwich checks on i.i.d. products of random letters."""
    out = {"checks": 0, "violations": 0, "worst_mass_margin": math.inf, "skipped_n": []}
    for n in ns:
        if dim**n > caps.max_dim:
            out["skipped_n"].append(n)
            continue
        for alpha in alphas:
            for _ in range(seeds):
                state = ProductState([qmath.random_density(dim, rng)] * n)
                proj = spectral_projector(state, n, alpha)
                rep = projector_mass_checks(state, proj, n, alpha, dim)
                out["checks"] += 1
                out["violations"] += not rep.all_ok
                if rep.mass_floor > 0:
                    out["worst_mass_margin"] = min(out["worst_mass_margin"], rep.mass_margin)
    return out


def cmd_lemmas(args) -> tuple[dict, int]:
    params = {"trials": args.trials, "dim": args.dim, "seed": args.seed}
    rng = np.random.default_rng([args.seed, 0])
    results = {
        "gentle_measurement": gentle_sweep(args.trials, args.dim, rng),
        "fannes": fannes_sweep(args.trials, args.dim, np.random.default_rng([args.seed, 1])),
        "projector_mass": mass_sweep(
            max(args.trials // 100, 1), args.dim, np.random.default_rng([args.seed, 2]), _caps(args)
        ),
    }
    bad = sum(v["violations"] for v in results.values())
    results["all_pass"] = bad == 0
    return make_report("lemmas", params, results, seeds=[args.seed]), EXIT_OK if bad == 0 else EXIT_LEMMA


# argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="record wall-clock seconds in the report (breaks byte identity)")
    common.add_argument("--max-dim", type=int, default=4096, help="cap on dim**n")
    common.add_argument("--max-input-seqs", type=int, default=4096, help="cap on |X|**n")
    common.add_argument("--max-state-seqs", type=int, default=4096, help="cap on |Theta|**n")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cqavwc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a channel file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("symmetrize", parents=[common], help="symmetrizability of the legal family")
    p.add_argument("path")
    p.add_argument("--mode", choices=["per-t", "joint"], default="per-t")
    p.add_argument("--tol", type=float, default=symmetrize.TOL_SYM)
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("bound", parents=[common], help="secrecy-rate lower bound")
    p.add_argument("path")
    p.add_argument("--mode", choices=["no-csi", "csi"], default="no-csi")
    p.add_argument("--n", type=int, default=1, help="block length of the leakage proxy")
    p.add_argument("--grid-step", type=float, default=1 / 32)
    p.add_argument("--final-step", type=float, default=1 / 1024)
    p.add_argument("--tol", type=float, default=symmetrize.TOL_SYM, help="symmetrizability tolerance")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", parents=[common], help="random wiretap code experiment")
    p.add_argument("path")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--J", type=int, default=2)
    p.add_argument("--L", type=int, default=1)
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, default=1, help="run seeds 0 .. k-1")
    seeds.add_argument("--seed", type=int, help="run this single seed")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--p", help="input distribution as comma-separated weights (default uniform)")
    p.add_argument("--projector-source", choices=["eve", "legal"], default="eve")
    p.add_argument("--csv", help="write one row per (seed, t^n) here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lemmas", parents=[common], help="numerical lemma sweeps")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lemmas)
    return parser


def _error_report(args, exc: CqavwcError) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc), "stage": exc.stage}
    if isinstance(exc, ChannelValidationError):
        err["violations"] = [v.as_dict() for v in exc.violations]
    if isinstance(exc, ResourceError):
        err.update(cap=exc.cap, required=exc.required, limit=exc.limit, n=exc.n)
    if isinstance(exc, ParseError):
        err["context"] = exc.context
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose", "timing")}
    report = make_report(args.command, params, None)
    report["error"] = err
    return report


def exit_code_for(exc: CqavwcError) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, ResourceError):
        return EXIT_RESOURCE
    return EXIT_VALIDATION


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    start = time.perf_counter()
    try:
        report, code = args.func(args)
    except CqavwcError as exc:
        log.error("%s", exc)
        report, code = _error_report(args, exc), exit_code_for(exc)
    elapsed = time.perf_counter() - start
    log.info("%s finished in %.3f s", args.command, elapsed)
    if args.timing:
        report["wall_clock_seconds"] = elapsed
    text = dump_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
