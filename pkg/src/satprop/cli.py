"""Command-line front end: solve, generate, sweep-y, and oracle subcommands.

Solve prints MaxSAT-evaluation style output ("o <energy>" and a "v" model
line) and can write a JSON run report; sweep-y emits CSV rows per y; oracle
wraps the brute-force references.  Exit codes: 0 completed, 2 input error,
3 capacity guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bp import Schedule, beliefs_from_messages, maxsat_factor_graph, run_bp
from .errors import CapacityError, DegeneracyError
from .instance import STAR, Instance
from .io import GeneratorConfig, ParseError, generate, parse_dimacs, write_dimacs, write_sweep_csv
from .localsearch import WalkSatConfig, polish, walksat
from .oracle import CoverDistributionParams, brute_min_energy, enumerate_v_covers, exact_cover_marginals
from .rng import substream
from .rsp import RspConfig, degeneracy_report, rsp_decimate
from .sp import sid
from .spy import sid_backtrack

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3


@dataclass
class RunReport:
    algorithm: str
    final_energy: float
    assignment: list[int]
    degenerate_cover: bool
    cover: list[int]
    vars_fixed: int
    converged_all: bool
    wall_time_s: float
    rounds: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _fmt_energy(e: float) -> str:
    return str(int(e)) if float(e).is_integer() else repr(float(e))


def _model_line(assignment: np.ndarray) -> str:
    return "v " + " ".join(str((i + 1) * int(v)) for i, v in enumerate(assignment))


def _bp_decimate(inst: Instance, y: float, k: int, schedule: Schedule, ws_cfg: WalkSatConfig):
    """Belief-guided decimation on the original graph; plumbing around run_bp."""
    fixes: dict[int, int] = {}
    embed = list(range(inst.num_vars))
    current = inst
    rounds = []
    remainder = None
    round_no = 0
    while True:
        if current.num_clauses == 0 or current.num_vars == 0:
            remainder = np.ones(current.num_vars, dtype=np.int8)
            break
        g = maxsat_factor_graph(current, y)
        res = run_bp(
            g,
            Schedule(
                mode=schedule.mode,
                damping=schedule.damping,
                max_sweeps=schedule.max_sweeps,
                tol=schedule.tol,
                seed=substream(schedule.seed, f"round/{round_no}"),
            ),
        )
        rounds.append({"y": y, "sweeps": res.sweeps, "converged": res.converged, "fixed": 0})
        if not res.converged:
            break
        beliefs = np.array([[b[0], b[1]] for b in res.beliefs])
        gap = np.abs(beliefs[:, 1] - beliefs[:, 0])
        order = np.lexsort((np.arange(current.num_vars), -gap))
        chosen = order[: min(k, current.num_vars)]
        local = {int(i): (+1 if beliefs[i, 1] >= beliefs[i, 0] else -1) for i in chosen}
        rounds[-1]["fixed"] = len(local)
        for i, val in local.items():
            fixes[embed[i]] = val
        sim = current.simplify(local)
        embed = [embed[old] for old in sim.kept_vars]
        current = sim.instance
        round_no += 1
    if remainder is None:
        cfg = WalkSatConfig(
            noise=ws_cfg.noise,
            max_flips=ws_cfg.max_flips,
            tries=ws_cfg.tries,
            seed=substream(ws_cfg.seed ^ current.stable_hash(), "walksat"),
            weighted=inst.is_weighted,
        )
        remainder = walksat(current, cfg).assignment
    full = np.ones(inst.num_vars, dtype=np.int8)
    for i, orig in enumerate(embed):
        full[orig] = remainder[i]
    for orig, val in fixes.items():
        full[orig] = val
    full = polish(inst, full)
    return full, rounds, len(fixes)


def _solve(inst: Instance, args) -> tuple[np.ndarray, list[dict], int, bool]:
    schedule = Schedule(
        damping=args.damping,
        max_sweeps=args.max_sweeps,
        tol=args.eps,
        seed=substream(args.seed, "init"),
    )
    ws_cfg = WalkSatConfig(
        noise=args.walksat_noise,
        max_flips=args.walksat_flips,
        tries=args.walksat_tries,
        seed=substream(args.seed, "walksat"),
        weighted=inst.is_weighted,
    )
    if args.alg == "walksat":
        res = walksat(inst, ws_cfg)
        return res.assignment, [], 0, True
    if args.alg == "sp":
        res = sid(inst, k=args.k, schedule=schedule, walksat_cfg=ws_cfg)
        rounds = [
            {"y": None, "sweeps": r.sweeps, "converged": r.converged, "fixed": r.fixed}
            for r in res.rounds
        ]
        return res.assignment, rounds, sum(r.fixed for r in res.rounds), all(r.converged for r in res.rounds)
    if args.alg == "spy":
        res = sid_backtrack(
            inst, k=args.k, y=args.y, r=args.backtrack_r, schedule=schedule, walksat_cfg=ws_cfg
        )
        rounds = [
            {"action": r.action, "sweeps": r.sweeps, "converged": r.converged, "count": r.count}
            for r in res.rounds
        ]
        fixed = sum(r.count for r in res.rounds if r.action == "fix") - sum(
            r.count for r in res.rounds if r.action == "unfix"
        )
        return res.assignment, rounds, fixed, all(r.converged for r in res.rounds)
    if args.alg == "rsp":
        cfg = RspConfig(y=args.y, schedule=schedule, k=args.k, adapt_y=args.adapt_y)
        res = rsp_decimate(inst, cfg, walksat_cfg=ws_cfg)
        rounds = [
            {"y": r.y, "sweeps": r.sweeps, "converged": r.converged, "fixed": r.fixed}
            for r in res.rounds
        ]
        return res.assignment, rounds, res.fixed_total, all(r.converged for r in res.rounds)
    if args.alg == "bp":
        full, rounds, fixed = _bp_decimate(inst, args.y, args.k, schedule, ws_cfg)
        return full, rounds, fixed, all(r["converged"] for r in rounds)
    raise ValueError(f"unknown algorithm {args.alg!r}")


def cmd_solve(args) -> int:
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            inst = parse_dimacs(fh)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.alg == "spy" and inst.is_weighted:
        print("error: SP-y handles unweighted instances only; use rsp or walksat", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    assignment, rounds, fixed, converged_all = _solve(inst, args)
    wall = time.perf_counter() - t0
    energy = inst.energy(assignment)
    cover, degenerate = degeneracy_report(inst, assignment)
    print(f"o {_fmt_energy(energy)}")
    print(_model_line(assignment))
    report = RunReport(
        algorithm=args.alg,
        final_energy=energy,
        assignment=[int(v) for v in assignment],
        degenerate_cover=degenerate,
        cover=[int(v) for v in cover],
        vars_fixed=fixed,
        converged_all=converged_all,
        wall_time_s=wall,
        rounds=rounds,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        cfg = GeneratorConfig(
            num_vars=args.n,
            clause_ratio=args.alpha,
            clause_size=args.kclause,
            weight_max=args.wmax,
            seed=args.seed,
        )
        inst = generate(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = write_dimacs(inst)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _sweep_point(payload) -> tuple[float, float, bool, int]:
    path, y, alg, k, seed, eps, max_sweeps, damping, backtrack_r, flips, tries, noise = payload
    with open(path, "r", encoding="utf-8") as fh:
        inst = parse_dimacs(fh)
    schedule = Schedule(damping=damping, max_sweeps=max_sweeps, tol=eps, seed=substream(seed, f"y/{y}"))
    ws_cfg = WalkSatConfig(
        noise=noise, max_flips=flips, tries=tries, seed=substream(seed, "walksat"), weighted=inst.is_weighted
    )
    if alg == "spy":
        res = sid_backtrack(inst, k=k, y=y, r=backtrack_r, schedule=schedule, walksat_cfg=ws_cfg)
        fixed = sum(r.count for r in res.rounds if r.action == "fix") - sum(
            r.count for r in res.rounds if r.action == "unfix"
        )
        converged = all(r.converged for r in res.rounds)
        return y, res.energy, converged, fixed
    cfg = RspConfig(y=y, schedule=schedule, k=k)
    res = rsp_decimate(inst, cfg, walksat_cfg=ws_cfg)
    return y, res.energy, all(r.converged for r in res.rounds), res.fixed_total


def cmd_sweep_y(args) -> int:
    try:
        start, stop, step = (float(t) for t in args.ys.split(":"))
    except ValueError:
        print("error: --ys expects start:stop:step", file=sys.stderr)
        return EXIT_INPUT
    if step <= 0 or stop < start:
        print("error: --ys expects a positive step and stop >= start", file=sys.stderr)
        return EXIT_INPUT
    ys = []
    y = start
    while y <= stop + 1e-9:
        ys.append(round(y, 12))
        y += step
    if args.alg not in ("rsp", "spy"):
        print("error: sweep-y supports --alg rsp or spy", file=sys.stderr)
        return EXIT_INPUT
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            inst = parse_dimacs(fh)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.alg == "spy" and inst.is_weighted:
        print("error: SP-y handles unweighted instances only", file=sys.stderr)
        return EXIT_INPUT
    payloads = [
        (
            args.input,
            yy,
            args.alg,
            args.k,
            args.seed,
            args.eps,
            args.max_sweeps,
            args.damping,
            args.backtrack_r,
            args.walksat_flips,
            args.walksat_tries,
            args.walksat_noise,
        )
        for yy in ys
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    text = write_sweep_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fmt_extended(x) -> str:
    return "(" + ",".join("*" if v == STAR else f"{v:+d}" for v in x) + ")"


def cmd_oracle(args) -> int:
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            inst = parse_dimacs(fh)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        if args.mode == "energy":
            m, argmin = brute_min_energy(inst)
            print(f"min={_fmt_energy(m)}, argmin count={len(argmin)}")
        elif args.mode == "covers":
            census = enumerate_v_covers(inst)
            m, _ = brute_min_energy(inst)
            for v in sorted(census):
                print(f"v={_fmt_energy(v)}: {len(census[v])} cover(s)")
            print(f"instance optimum m={_fmt_energy(m)}")
            key = round(m, 12)
            if census.get(key):
                for x in census[key]:
                    print(f"min-cover v={_fmt_energy(m)}: {_fmt_extended(x)}")
            else:
                print(f"min-cover v={_fmt_energy(m)}: none")
        elif args.mode == "marginals":
            params = CoverDistributionParams(y=args.y, omega0=1.0 - args.rho, omega_star=args.rho)
            marg = exact_cover_marginals(inst, params)
            for i in range(inst.num_vars):
                print(
                    f"x{i + 1}: P(-1)={marg[i, 0]:.6g} P(+1)={marg[i, 1]:.6g} P(*)={marg[i, 2]:.6g}"
                )
        else:
            print(f"error: unknown mode {args.mode!r}", file=sys.stderr)
            return EXIT_INPUT
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--y", type=float, default=6.0, help="violation penalty rate")
    p.add_argument("--k", type=int, default=100, help="variables fixed per decimation round")
    p.add_argument("--seed", type=int, default=1, help="master seed for all randomness")
    p.add_argument("--eps", type=float, default=1e-3, help="message convergence tolerance")
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--backtrack-r", type=float, default=0.0, help="spy unfix probability")
    p.add_argument("--adapt-y", action="store_true", help="rsp: lower y on non-convergence (weighted mode)")
    p.add_argument("--walksat-flips", type=int, default=None)
    p.add_argument("--walksat-tries", type=int, default=10)
    p.add_argument("--walksat-noise", type=float, default=0.5)
    p.add_argument("--out", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satprop")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a DIMACS instance")
    p_solve.add_argument("--alg", choices=("bp", "sp", "spy", "rsp", "walksat"), required=True)
    p_solve.add_argument("--input", required=True)
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("generate", help="generate a random instance")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--alpha", type=float, required=True)
    p_gen.add_argument("--kclause", type=int, default=3)
    p_gen.add_argument("--wmax", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--out", type=str, default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_sweep = sub.add_parser("sweep-y", help="run a solver over a grid of y values")
    p_sweep.add_argument("--alg", default="rsp")
    p_sweep.add_argument("--input", required=True)
    p_sweep.add_argument("--ys", required=True, help="start:stop:step")
    p_sweep.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep_y)

    p_oracle = sub.add_parser("oracle", help="brute-force references on small instances")
    p_oracle.add_argument("--input", required=True)
    p_oracle.add_argument("--mode", choices=("energy", "covers", "marginals"), required=True)
    p_oracle.add_argument("--y", type=float, default=2.0)
    p_oracle.add_argument("--rho", type=float, default=1.0)
    p_oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
