"""Survey propagation and survey-inspired decimation for SAT instances.

A survey eta[e] on the directed clause-to-variable edge e is the probability
that the clause warns the variable against its violating value.  Clause
weights play no role in the update equations; SP treats every instance as a
plain SAT formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bp import Schedule
from .errors import DegeneracyError
from .instance import Instance
from .localsearch import WalkSatConfig, polish, walksat
from .rng import substream


def sp_sweep(inst: Instance, eta: np.ndarray, damping: float = 0.0) -> tuple[np.ndarray, float]:
    """One synchronous survey update; returns (new surveys, max change).

    Per edge, the variable-side weights are
      warn-to-violate = (1 - prod_opp (1-eta)) * prod_same' (1-eta)
      warn-to-satisfy = (1 - prod_same'(1-eta)) * prod_opp (1-eta)
      unwarned        = prod_same'(1-eta) * prod_opp (1-eta)
    where prod_same' excludes the receiving clause; the outgoing survey is the
    product over the clause's other members of the normalised first weight,
    with 0/0 ratios taken as 0.  Inputs are clamped into [0, 1] defensively.
    """
    lay = inst.layout()
    eta = np.clip(eta, 0.0, 1.0)
    q = 1.0 - eta
    same_excl = lay.sign_excl_prod(q)
    pos_full, neg_full = lay.var_sign_full_prod(q)
    opp_full = lay.gather_opp(pos_full, neg_full)
    pi_u = (1.0 - opp_full) * same_excl
    pi_s = (1.0 - same_excl) * opp_full
    pi_0 = same_excl * opp_full
    denom = pi_u + pi_s + pi_0
    ratio = np.divide(pi_u, denom, out=np.zeros_like(pi_u), where=denom > 0)
    raw = lay.clause_excl_prod(ratio)
    new = (1.0 - damping) * raw + damping * eta
    new = np.clip(new, 0.0, 1.0)
    return new, float(np.abs(new - eta).max(initial=0.0))


def _sp_sweep_sequential(inst: Instance, eta: np.ndarray, rng: np.random.Generator, damping: float) -> float:
    """In-place random-order edge updates; single-threaded reference path."""
    lay = inst.layout()
    change = 0.0
    for e in rng.permutation(lay.num_edges):
        c = lay.edge_clause[e]
        raw = 1.0
        for f in range(lay.clause_ptr[c], lay.clause_ptr[c + 1]):
            if f == e:
                continue
            j = lay.edge_var[f]
            pos_rows, neg_rows = lay._pos_rows[j], lay._neg_rows[j]
            same, opp = (pos_rows, neg_rows) if lay.edge_sat[f] == 1 else (neg_rows, pos_rows)
            prod_same = float(np.prod(1.0 - eta[same[same != f]]))
            prod_opp = float(np.prod(1.0 - eta[opp]))
            pi_u = (1.0 - prod_opp) * prod_same
            denom = pi_u + (1.0 - prod_same) * prod_opp + prod_same * prod_opp
            raw *= pi_u / denom if denom > 0 else 0.0
        new = (1.0 - damping) * raw + damping * eta[e]
        change = max(change, abs(new - eta[e]))
        eta[e] = new
    return change


@dataclass
class SPResult:
    converged: bool
    sweeps: int
    eta: np.ndarray


def sp_run(
    inst: Instance,
    schedule: Schedule = Schedule(tol=1e-3),
    retry_damping: float | None = 0.5,
) -> SPResult:
    """Iterate sp_sweep from seeded uniform-random surveys until converged.

    When the undamped run fails to converge, one damped retry is attempted
    from the same initial surveys.
    """
    lay = inst.layout()
    rng = np.random.default_rng(substream(schedule.seed, "sp-init"))
    eta0 = rng.random(lay.num_edges)

    def _iterate(damping: float) -> SPResult:
        eta = eta0.copy()
        seq_rng = np.random.default_rng(substream(schedule.seed, "sp-order"))
        for sweep in range(1, schedule.max_sweeps + 1):
            if schedule.mode == "synchronous":
                eta, change = sp_sweep(inst, eta, damping)
            else:
                change = _sp_sweep_sequential(inst, eta, seq_rng, damping)
            if change < schedule.tol:
                return SPResult(True, sweep, eta)
        return SPResult(False, schedule.max_sweeps, eta)

    res = _iterate(schedule.damping)
    if not res.converged and retry_damping is not None and schedule.damping == 0.0:
        res = _iterate(retry_damping)
    return res


def sp_biases(inst: Instance, eta: np.ndarray) -> np.ndarray:
    """Per-variable (W+, W-, W0) from converged surveys, rows normalised."""
    lay = inst.layout()
    q = 1.0 - np.clip(eta, 0.0, 1.0)
    pos_full, neg_full = lay.var_sign_full_prod(q)
    pi_plus = (1.0 - pos_full) * neg_full
    pi_minus = (1.0 - neg_full) * pos_full
    pi_zero = pos_full * neg_full
    total = pi_plus + pi_minus + pi_zero
    if (total <= 0).any():
        i = int(np.nonzero(total <= 0)[0][0])
        raise DegeneracyError(f"all bias weights vanished for variable {i}")
    return np.stack([pi_plus, pi_minus, pi_zero], axis=1) / total[:, None]


@dataclass
class DecimationRound:
    fixed: int
    converged: bool
    sweeps: int
    offset: float


@dataclass
class SIDResult:
    assignment: np.ndarray
    energy: float
    satisfied: bool
    rounds: list[DecimationRound] = field(default_factory=list)
    contradiction_weight: float = 0.0  # weight lost to emptied clauses while fixing


def sid(
    inst: Instance,
    k: int = 100,
    schedule: Schedule = Schedule(tol=1e-3),
    walksat_cfg: WalkSatConfig | None = None,
    paramagnetic_eps: float = 1e-3,
) -> SIDResult:
    """Survey-inspired decimation: run SP, fix the k most biased variables,
    simplify, repeat; fall back to WalkSAT on non-convergence or when the
    surveys go paramagnetic.  Returns the best full assignment found."""
    seed = schedule.seed
    fixes: dict[int, int] = {}
    current = inst
    embed = list(range(inst.num_vars))  # current index -> original variable
    rounds: list[DecimationRound] = []
    contradiction = 0.0
    remainder_assignment: np.ndarray | None = None
    round_no = 0

    while True:
        if current.num_clauses == 0 or current.num_vars == 0:
            remainder_assignment = np.ones(current.num_vars, dtype=np.int8)
            break
        res = sp_run(
            current,
            Schedule(
                mode=schedule.mode,
                damping=schedule.damping,
                max_sweeps=schedule.max_sweeps,
                tol=schedule.tol,
                seed=substream(seed, f"round/{round_no}"),
            ),
        )
        if not res.converged or res.eta.max() < paramagnetic_eps:
            rounds.append(DecimationRound(0, res.converged, res.sweeps, 0.0))
            break
        biases = sp_biases(current, res.eta)
        gap = np.abs(biases[:, 0] - biases[:, 1])
        order = np.lexsort((np.arange(current.num_vars), -gap))
        chosen = order[: min(k, current.num_vars)]
        local_fixes = {
            int(i): (+1 if biases[i, 0] >= biases[i, 1] else -1) for i in chosen
        }
        for i, val in local_fixes.items():
            fixes[embed[i]] = val
        sim = current.simplify(local_fixes)
        contradiction += sim.offset
        rounds.append(DecimationRound(len(local_fixes), True, res.sweeps, sim.offset))
        embed = [embed[old] for old in sim.kept_vars]
        current = sim.instance
        round_no += 1

    if remainder_assignment is None:
        cfg = walksat_cfg if walksat_cfg is not None else WalkSatConfig()
        cfg = WalkSatConfig(
            noise=cfg.noise,
            max_flips=cfg.max_flips,
            tries=cfg.tries,
            seed=substream(cfg.seed ^ current.stable_hash(), "walksat"),
            weighted=False,
        )
        remainder_assignment = walksat(current, cfg).assignment

    full = np.ones(inst.num_vars, dtype=np.int8)
    for i, orig in enumerate(embed):
        full[orig] = remainder_assignment[i]
    for orig, val in fixes.items():
        full[orig] = val
    full = polish(inst, full)
    energy = inst.energy(full)
    return SIDResult(full, energy, satisfied=energy == 0.0, rounds=rounds, contradiction_weight=contradiction)
