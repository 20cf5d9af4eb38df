"""WalkSAT and weighted WalkSAT, the completion solver behind every
decimation driver, plus a greedy single-flip polish pass.

The flip loop is numba-compiled; all randomness flows from the config seed
through per-try sub-seeds, so results are reproducible."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .instance import Instance
from .rng import substream


@dataclass(frozen=True)
class WalkSatConfig:
    noise: float = 0.5
    max_flips: int | None = None  # defaults to 100 * num_vars
    tries: int = 10
    seed: int = 0
    weighted: bool = False

    def __post_init__(self):
        if not 0 <= self.noise <= 1:
            raise ValueError("noise must lie in [0, 1]")
        if self.max_flips is not None and self.max_flips < 1:
            raise ValueError("max_flips must be >= 1")
        if self.tries < 1:
            raise ValueError("tries must be >= 1")


@dataclass
class WalkSatResult:
    assignment: np.ndarray
    energy: float


@njit(cache=True)
def _recompute(num_clauses, clause_ptr, edge_var, edge_sat, x, n_sat):
    for c in range(num_clauses):
        cnt = 0
        for e in range(clause_ptr[c], clause_ptr[c + 1]):
            if x[edge_var[e]] == edge_sat[e]:
                cnt += 1
        n_sat[c] = cnt


@njit(cache=True)
def _break_weight(v, x, var_ptr, var_clause, var_sat, n_sat, weights):
    brk = 0.0
    for p in range(var_ptr[v], var_ptr[v + 1]):
        c = var_clause[p]
        if x[v] == var_sat[p] and n_sat[c] == 1:
            brk += weights[c]
    return brk


@njit(cache=True)
def _make_weight(v, x, var_ptr, var_clause, var_sat, n_sat, weights):
    gain = 0.0
    for p in range(var_ptr[v], var_ptr[v + 1]):
        c = var_clause[p]
        if x[v] != var_sat[p] and n_sat[c] == 0:
            gain += weights[c]
    return gain


@njit(cache=True)
def _flip(v, x, var_ptr, var_clause, var_sat, n_sat, weights, viol_list, viol_pos, state):
    # state: [n_viol, total_viol_weight]
    x[v] = -x[v]
    for p in range(var_ptr[v], var_ptr[v + 1]):
        c = var_clause[p]
        if x[v] == var_sat[p]:
            n_sat[c] += 1
            if n_sat[c] == 1:  # newly satisfied
                pos = viol_pos[c]
                last = int(state[0]) - 1
                moved = viol_list[last]
                viol_list[pos] = moved
                viol_pos[moved] = pos
                viol_pos[c] = -1
                state[0] -= 1
                state[1] -= weights[c]
        else:
            n_sat[c] -= 1
            if n_sat[c] == 0:  # newly violated
                viol_list[int(state[0])] = c
                viol_pos[c] = int(state[0])
                state[0] += 1
                state[1] += weights[c]


@njit(cache=True)
def _walksat_core(
    num_vars,
    num_clauses,
    clause_ptr,
    edge_var,
    edge_sat,
    weights,
    var_ptr,
    var_clause,
    var_sat,
    noise,
    max_flips,
    try_seeds,
    weighted,
):
    best_energy = np.inf
    best_x = np.zeros(num_vars, dtype=np.int8)
    n_sat = np.zeros(num_clauses, dtype=np.int64)
    viol_list = np.zeros(num_clauses, dtype=np.int64)
    viol_pos = np.full(num_clauses, -1, dtype=np.int64)
    state = np.zeros(2, dtype=np.float64)
    members = np.zeros(64, dtype=np.int64)

    for t in range(len(try_seeds)):
        np.random.seed(try_seeds[t])
        x = np.empty(num_vars, dtype=np.int8)
        for v in range(num_vars):
            x[v] = 1 if np.random.random() < 0.5 else -1
        _recompute(num_clauses, clause_ptr, edge_var, edge_sat, x, n_sat)
        state[0] = 0.0
        state[1] = 0.0
        viol_pos[:] = -1
        for c in range(num_clauses):
            if n_sat[c] == 0:
                viol_list[int(state[0])] = c
                viol_pos[c] = int(state[0])
                state[0] += 1
                state[1] += weights[c]
        if state[1] < best_energy:
            best_energy = state[1]
            best_x[:] = x
        for _ in range(max_flips):
            n_viol = int(state[0])
            if n_viol == 0:
                break
            # choose a violated clause
            if weighted:
                r = np.random.random() * state[1]
                acc = 0.0
                c = viol_list[n_viol - 1]
                for q in range(n_viol):
                    acc += weights[viol_list[q]]
                    if r < acc:
                        c = viol_list[q]
                        break
            else:
                c = viol_list[np.random.randint(0, n_viol)]
            k = clause_ptr[c + 1] - clause_ptr[c]
            for j in range(k):
                members[j] = edge_var[clause_ptr[c] + j]
            if np.random.random() < noise:
                v = members[np.random.randint(0, k)]
            else:
                # min break weight, ties uniform at random
                best_brk = np.inf
                n_ties = 0
                for j in range(k):
                    brk = _break_weight(
                        members[j], x, var_ptr, var_clause, var_sat, n_sat, weights
                    )
                    if brk < best_brk - 1e-12:
                        best_brk = brk
                        n_ties = 1
                        members[64 - n_ties] = members[j]
                    elif brk <= best_brk + 1e-12:
                        n_ties += 1
                        members[64 - n_ties] = members[j]
                v = members[64 - 1 - np.random.randint(0, n_ties)]
            _flip(v, x, var_ptr, var_clause, var_sat, n_sat, weights, viol_list, viol_pos, state)
            if state[1] < best_energy - 1e-12:
                best_energy = state[1]
                best_x[:] = x
        if best_energy <= 0.0:
            break
    return best_x, best_energy


@njit(cache=True)
def _polish_core(x, num_clauses, clause_ptr, edge_var, edge_sat, weights, var_ptr, var_clause, var_sat):
    n_sat = np.zeros(num_clauses, dtype=np.int64)
    _recompute(num_clauses, clause_ptr, edge_var, edge_sat, x, n_sat)
    improved = True
    while improved:
        improved = False
        for v in range(len(x)):
            gain = _make_weight(v, x, var_ptr, var_clause, var_sat, n_sat, weights)
            loss = _break_weight(v, x, var_ptr, var_clause, var_sat, n_sat, weights)
            if gain - loss > 1e-12:
                x[v] = -x[v]
                for p in range(var_ptr[v], var_ptr[v + 1]):
                    c = var_clause[p]
                    if x[v] == var_sat[p]:
                        n_sat[c] += 1
                    else:
                        n_sat[c] -= 1
                improved = True


def _var_csr(inst: Instance):
    lay = inst.layout()
    order = np.argsort(lay.edge_var, kind="stable")
    var_clause = lay.edge_clause[order]
    var_sat = lay.edge_sat[order]
    counts = np.bincount(lay.edge_var, minlength=inst.num_vars)
    var_ptr = np.zeros(inst.num_vars + 1, dtype=np.int64)
    np.cumsum(counts, out=var_ptr[1:])
    return var_ptr, var_clause.astype(np.int64), var_sat.astype(np.int8)


def polish(inst: Instance, x: np.ndarray) -> np.ndarray:
    """Greedy single-flip descent to a local optimum (ascending scan order)."""
    if inst.num_vars == 0 or inst.num_clauses == 0:
        return np.asarray(x, dtype=np.int8).copy()
    lay = inst.layout()
    var_ptr, var_clause, var_sat = _var_csr(inst)
    out = np.asarray(x, dtype=np.int8).copy()
    _polish_core(
        out,
        inst.num_clauses,
        lay.clause_ptr,
        lay.edge_var,
        lay.edge_sat,
        lay.clause_weight,
        var_ptr,
        var_clause,
        var_sat,
    )
    return out


def walksat(inst: Instance, cfg: WalkSatConfig = WalkSatConfig(), do_polish: bool = True) -> WalkSatResult:
    """Noisy greedy local search over violated clauses.

    Per try: random restart, then up to max_flips steps of {pick a violated
    clause (uniform, or weight-proportional when cfg.weighted), flip a random
    member with probability noise, otherwise the member with the least break
    weight}.  Tracks the best assignment seen across tries; optionally ends
    with a greedy descent pass.  Deterministic given cfg.seed.
    """
    n = inst.num_vars
    if n == 0:
        return WalkSatResult(np.zeros(0, dtype=np.int8), 0.0)
    if inst.num_clauses == 0:
        return WalkSatResult(np.ones(n, dtype=np.int8), 0.0)
    lay = inst.layout()
    var_ptr, var_clause, var_sat = _var_csr(inst)
    max_k = int(np.diff(lay.clause_ptr).max())
    if max_k > 32:
        raise ValueError("clauses with more than 32 members are not supported here")
    max_flips = cfg.max_flips if cfg.max_flips is not None else 100 * n
    try_seeds = np.array(
        [substream(cfg.seed, f"try/{t}") & 0x7FFFFFFF for t in range(cfg.tries)],
        dtype=np.int64,
    )
    x, energy = _walksat_core(
        n,
        inst.num_clauses,
        lay.clause_ptr,
        lay.edge_var,
        lay.edge_sat,
        lay.clause_weight,
        var_ptr,
        var_clause,
        var_sat,
        cfg.noise,
        max_flips,
        try_seeds,
        cfg.weighted,
    )
    if do_polish:
        x = polish(inst, x)
    actual = inst.energy(x)
    if not do_polish and abs(actual - energy) > 1e-9 * max(1.0, abs(actual)):
        raise AssertionError("incremental energy bookkeeping drifted")
    return WalkSatResult(x.astype(np.int8), actual)
