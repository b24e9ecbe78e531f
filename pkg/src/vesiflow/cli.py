"""Command-line entry point: run, besov, verify-lemmas, diagnose."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys

from .cli_io import CheckpointError, ConfigError, load_checkpoint, load_config, simulate
from .diagnostics import collect
from .littlewood_paley import besov_diagnostics, besov_norm, block_sups, build_cutoffs, sweep_ratios
from .spectral import GridSpec, curl

log = logging.getLogger("vesiflow")


def _finite_or_none(obj):
    if dataclasses.is_dataclass(obj):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump(data) -> str:
    # undefined values (e.g. a residual without a previous step) print as null
    return json.dumps(_finite_or_none(data), indent=2, sort_keys=True, allow_nan=False)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    sim = simulate(cfg)
    res = sim.result
    summary = {
        "status": res.status,
        "steps": res.steps,
        "t": res.state.t,
        "blowup_time": res.blowup_time,
        "criteria": sim.tracker.report().as_dict(),
    }
    print(_dump(summary))
    if res.blew_up:
        log.error("%s", res.message)
    return sim.exit_code


def _besov_summary(field, cutoffs, s):
    d = besov_diagnostics(field, cutoffs)
    out = {"b0_inf": d.b0_inf, "bm1_inf": d.bm1_inf, "linf": d.linf, **d.hs}
    if s is not None:
        out[f"B^{s:g}_inf"] = besov_norm(field, s, cutoffs, block_sups(field, cutoffs))
    return out


def cmd_besov(args) -> int:
    state, _ = load_checkpoint(args.checkpoint)
    cutoffs = build_cutoffs(state.grid)
    print(_dump({
        "t": state.t,
        "omega": _besov_summary(curl(state.u), cutoffs, args.s),
        "u": _besov_summary(state.u, cutoffs, args.s),
    }))
    return 0


def cmd_verify_lemmas(args) -> int:
    grid = GridSpec.cube(args.grid)
    ratios = sweep_ratios(grid, size=args.corpus_size, seed=args.seed)
    finite = all(math.isfinite(v) for v in ratios.values())
    print(_dump({"grid": args.grid, "corpus_size": args.corpus_size, "seed": args.seed,
                 "max_ratios": ratios, "finite": finite}))
    return 0 if finite else 1


def cmd_diagnose(args) -> int:
    state, params = load_checkpoint(args.checkpoint)
    rec = collect(state, params, build_cutoffs(state.grid), eta_hat=args.eta_hat)
    print(_dump(rec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vesiflow",
        description="Pseudo-spectral phase-field vesicle flow with Besov blow-up monitoring.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a JSON run configuration")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("besov", help="Besov and Sobolev norms of omega and u from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--s", type=float, default=None, help="extra Besov index to evaluate")
    p.set_defaults(func=cmd_besov)

    p = sub.add_parser("verify-lemmas", help="empirical inequality-ratio sweep")
    p.add_argument("--corpus-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--grid", type=int, default=32, help="cube side of the evaluation grid")
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("diagnose", help="print the diagnostics record of a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--eta-hat", type=float, default=1.0)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
