"""Loopy sum-product over arbitrary discrete factor graphs.

Messages are kept normalised to unit sum.  A synchronous sweep updates every
variable-to-factor message from the previous factor-to-variable state, then
every factor-to-variable message from the fresh variable-side state; the
random-sequential schedule updates one directed edge at a time in a seeded
random order.  On trees the beliefs equal exact marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DegeneracyError
from .instance import Instance

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Factor:
    vars: tuple[int, ...]
    table: np.ndarray


class FactorGraph:
    """Variables with finite cardinalities plus dense non-negative factors."""

    def __init__(self, cards: Sequence[int], factors: Iterable[Factor]):
        self.cards = tuple(int(c) for c in cards)
        if any(c < 1 for c in self.cards):
            raise ValueError("variable cardinalities must be >= 1")
        self.factors = []
        for fid, f in enumerate(factors):
            if len(set(f.vars)) != len(f.vars):
                raise ValueError(f"factor {fid} repeats a variable")
            expected = tuple(self.cards[v] for v in f.vars)
            table = np.asarray(f.table, dtype=np.float64)
            if table.shape != expected:
                raise ValueError(f"factor {fid} table shape {table.shape} != {expected}")
            if (table < 0).any():
                raise ValueError(f"factor {fid} has negative entries")
            if not (table > 0).any():
                raise ValueError(f"factor {fid} is identically zero")
            self.factors.append(Factor(tuple(f.vars), table))
        self.num_vars = len(self.cards)
        self.var_factors: list[list[int]] = [[] for _ in self.cards]
        for fid, f in enumerate(self.factors):
            for v in f.vars:
                self.var_factors[v].append(fid)

    def state_count(self) -> int:
        n = 1
        for c in self.cards:
            n *= c
        return n


@dataclass(frozen=True)
class Schedule:
    mode: str = "synchronous"  # or "random_sequential"
    damping: float = 0.0
    max_sweeps: int = 1000
    tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("synchronous", "random_sequential"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if not 0 <= self.damping < 1:
            raise ValueError("damping must be in [0, 1)")
        if self.max_sweeps < 1 or not self.tol > 0:
            raise ValueError("need max_sweeps >= 1 and tol > 0")


@dataclass
class MessageState:
    """Normalised messages per directed edge."""

    to_var: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)  # (factor, var)
    to_factor: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)  # (var, factor)


@dataclass
class BPResult:
    converged: bool
    sweeps: int
    messages: MessageState
    beliefs: list[np.ndarray]


def _normalize(vec: np.ndarray, edge: str) -> np.ndarray:
    z = vec.sum()
    if not np.isfinite(z) or z <= 0:
        raise DegeneracyError(f"zero or non-finite normaliser on {edge}")
    return vec / z


def uniform_messages(g: FactorGraph) -> MessageState:
    state = MessageState()
    for fid, f in enumerate(g.factors):
        for v in f.vars:
            state.to_var[(fid, v)] = np.full(g.cards[v], 1.0 / g.cards[v])
            state.to_factor[(v, fid)] = np.full(g.cards[v], 1.0 / g.cards[v])
    return state


def _var_to_factor(g: FactorGraph, state: MessageState, v: int, fid: int) -> np.ndarray:
    out = np.ones(g.cards[v])
    for other in g.var_factors[v]:
        if other != fid:
            out = out * state.to_var[(other, v)]
    return _normalize(out, f"variable {v} -> factor {fid}")


def _factor_to_var(g: FactorGraph, state: MessageState, fid: int, v: int) -> np.ndarray:
    f = g.factors[fid]
    k = len(f.vars)
    if k > len(_LETTERS):
        raise CapacityError(f"factor {fid} has too many members ({k})")
    pos = f.vars.index(v)
    subs_in = [_LETTERS[:k]]
    operands: list[np.ndarray] = [f.table]
    for j, u in enumerate(f.vars):
        if j == pos:
            continue
        subs_in.append(_LETTERS[j])
        operands.append(state.to_factor[(u, fid)])
    expr = ",".join(subs_in) + "->" + _LETTERS[pos]
    out = np.einsum(expr, *operands)
    return _normalize(out, f"factor {fid} -> variable {v}")


def beliefs_from_messages(g: FactorGraph, state: MessageState) -> list[np.ndarray]:
    out = []
    for v in range(g.num_vars):
        if not g.var_factors[v]:
            out.append(np.full(g.cards[v], 1.0 / g.cards[v]))
            continue
        b = np.ones(g.cards[v])
        for fid in g.var_factors[v]:
            b = b * state.to_var[(fid, v)]
        out.append(_normalize(b, f"belief of variable {v}"))
    return out


def sweep_synchronous(g: FactorGraph, state: MessageState, damping: float = 0.0) -> tuple[MessageState, float]:
    """One full synchronous sweep (variable side first); returns (state, max change)."""
    lam = damping
    new = MessageState()
    change = 0.0
    for (v, fid), old in state.to_factor.items():
        raw = _var_to_factor(g, state, v, fid)
        msg = (1 - lam) * raw + lam * old
        change = max(change, float(np.abs(msg - old).max()))
        new.to_factor[(v, fid)] = msg
    for (fid, v), old in state.to_var.items():
        raw = _factor_to_var(g, new, fid, v)
        msg = (1 - lam) * raw + lam * old
        change = max(change, float(np.abs(msg - old).max()))
        new.to_var[(fid, v)] = msg
    return new, change


def run_bp(g: FactorGraph, schedule: Schedule = Schedule()) -> BPResult:
    """Iterate Eqs of the sum-product update until the largest per-entry
    message change over a sweep drops below the tolerance."""
    state = uniform_messages(g)
    rng = np.random.default_rng(schedule.seed)
    converged = False
    sweeps = 0
    for sweeps in range(1, schedule.max_sweeps + 1):
        if schedule.mode == "synchronous":
            state, change = sweep_synchronous(g, state, schedule.damping)
        else:
            change = 0.0
            edges = [("vf", v, fid) for (v, fid) in state.to_factor]
            edges += [("fv", fid, v) for (fid, v) in state.to_var]
            order = rng.permutation(len(edges))
            for idx in order:
                kind, a, b = edges[idx]
                if kind == "vf":
                    old = state.to_factor[(a, b)]
                    raw = _var_to_factor(g, state, a, b)
                    msg = (1 - schedule.damping) * raw + schedule.damping * old
                    change = max(change, float(np.abs(msg - old).max()))
                    state.to_factor[(a, b)] = msg
                else:
                    old = state.to_var[(a, b)]
                    raw = _factor_to_var(g, state, a, b)
                    msg = (1 - schedule.damping) * raw + schedule.damping * old
                    change = max(change, float(np.abs(msg - old).max()))
                    state.to_var[(a, b)] = msg
        if change < schedule.tol:
            converged = True
            break
    return BPResult(converged, sweeps, state, beliefs_from_messages(g, state))


def joint_table(g: FactorGraph, guard: int = 10**7) -> np.ndarray:
    """Dense joint weight tensor (unnormalised); guarded by total state count."""
    if g.state_count() > guard:
        raise CapacityError(f"state space {g.state_count()} exceeds guard {guard}")
    joint = np.ones(g.cards)
    for f in g.factors:
        order = np.argsort(f.vars)
        table = np.transpose(f.table, order)
        shape = [1] * g.num_vars
        for v in sorted(f.vars):
            shape[v] = g.cards[v]
        joint = joint * table.reshape(shape)
    return joint


def exact_marginals(g: FactorGraph, guard: int = 10**7) -> list[np.ndarray]:
    """Brute-force normalised marginals of the factorised distribution."""
    joint = joint_table(g, guard)
    z = joint.sum()
    if not np.isfinite(z) or z <= 0:
        raise DegeneracyError("joint distribution has zero total mass")
    out = []
    for v in range(g.num_vars):
        axes = tuple(a for a in range(g.num_vars) if a != v)
        out.append(joint.sum(axis=axes) / z)
    return out


def maxsat_factor_graph(inst: Instance, y: float = 1.0) -> FactorGraph:
    """Original-graph representation of a weighted formula: one binary-domain
    variable per spin (state 0 = -1, state 1 = +1) and one factor per clause
    with entry exp(-w*y) on the violating configuration and 1 elsewhere."""
    factors = []
    for cl in inst.clauses:
        k = len(cl.vars)
        table = np.ones((2,) * k)
        # the unique violating configuration takes index 0/1 per member
        idx = tuple(0 if s == +1 else 1 for s in cl.sat_vals)
        table[idx] = np.exp(-cl.weight * y)
        factors.append(Factor(cl.vars, table))
    return FactorGraph([2] * inst.num_vars, factors)
