"""Brute-force ground truth: energy minima, v-cover census, the explicit
extended factor graph over (value, parent-set) states, and exact marginals of
the cover distribution.

Everything here is desk-scale and guarded; the point is to have independent
references for the message-passing solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product

import numpy as np

from .bp import Factor, FactorGraph, joint_table
from .errors import CapacityError, DegeneracyError
from .instance import STAR, Instance

# extended-value encoding used by enumeration chunks: digit -> spin
_DIGIT_TO_VALUE = np.array([-1, +1, 0], dtype=np.int8)

LambdaState = tuple[int, frozenset]  # (value, parent clause ids); value 0 is *


@dataclass(frozen=True)
class CoverDistributionParams:
    """Penalty rate y plus the smoothing split (omega0, omega_star).

    omega_star = 1 gives the pure cover distribution; omega_star = 0 recovers
    the plain Boltzmann distribution over full assignments at rate y.
    """

    y: float
    omega0: float = 0.0
    omega_star: float = 1.0

    def __post_init__(self):
        if self.y < 0:
            raise ValueError("y must be non-negative")
        if not (0 <= self.omega0 <= 1 and 0 <= self.omega_star <= 1):
            raise ValueError("omega weights must lie in [0, 1]")
        if abs(self.omega0 + self.omega_star - 1.0) > 1e-12:
            raise ValueError("omega0 + omega_star must equal 1")

    @property
    def rho(self) -> float:
        return self.omega_star


# -- exhaustive energy ---------------------------------------------------------


def brute_min_energy(inst: Instance, max_vars: int = 24, chunk: int = 1 << 16):
    """Exhaustive minimum energy and all minimisers over {-1,+1}^N."""
    n = inst.num_vars
    if n > max_vars:
        raise CapacityError(f"{n} variables exceeds the 2^N guard ({max_vars})")
    best = np.inf
    argmin: list[tuple[int, ...]] = []
    total = 1 << n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        viol = np.zeros(len(idx))
        for cl in inst.clauses:
            mask = np.ones(len(idx), dtype=bool)
            for v, s in zip(cl.vars, cl.sat_vals):
                bit = (idx >> np.uint64(v)) & np.uint64(1)
                spin = 2 * bit.astype(np.int8) - 1
                mask &= spin == -s
            viol += cl.weight * mask
        lo = viol.min() if len(viol) else np.inf
        if lo < best:
            best = lo
            argmin = []
        if lo <= best:
            for j in np.nonzero(viol == best)[0]:
                bits = (int(idx[j]) >> np.arange(n)) & 1
                argmin.append(tuple(2 * b - 1 for b in bits))
    return float(best), argmin


# -- extended-assignment enumeration -------------------------------------------


def _classify_chunk(inst: Instance, X: np.ndarray):
    """Vectorised cover classification of a batch of extended assignments.

    Returns (valid, violated_weight, constrained) where constrained[b, i]
    marks variables that uniquely satisfy some clause (a star co-member
    disqualifies, per the formal definition of a constrained variable).
    """
    B = X.shape[0]
    valid = np.ones(B, dtype=bool)
    viol = np.zeros(B)
    constrained = np.zeros(X.shape, dtype=bool)
    for cl in inst.clauses:
        vals = X[:, cl.vars]
        sat = vals == np.array(cl.sat_vals, dtype=np.int8)
        star = vals == STAR
        n_sat = sat.sum(axis=1)
        n_star = star.sum(axis=1)
        violated = (n_sat == 0) & (n_star == 0)
        invalid = (n_sat == 0) & (n_star == 1)
        valid &= ~invalid
        viol += cl.weight * violated
        unique = (n_sat == 1) & (n_star == 0)
        if unique.any():
            hit = sat & unique[:, None]
            for k, v in enumerate(cl.vars):
                constrained[:, v] |= hit[:, k]
    return valid, viol, constrained


def _extended_chunks(n: int, chunk: int = 1 << 17):
    """Yield batches of all extended assignments as (B, n) int8 arrays."""
    total = 3**n
    powers = 3 ** np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers) % 3
        yield _DIGIT_TO_VALUE[digits]


def enumerate_v_covers(inst: Instance, max_vars: int = 14) -> dict[float, list[tuple[int, ...]]]:
    """Census of all v-covers, grouped by violated weight v."""
    n = inst.num_vars
    if n > max_vars:
        raise CapacityError(f"{n} variables exceeds the 3^N guard ({max_vars})")
    census: dict[float, list[tuple[int, ...]]] = {}
    for X in _extended_chunks(n):
        valid, viol, constrained = _classify_chunk(inst, X)
        unconstrained_pm = ((X != STAR) & ~constrained).any(axis=1)
        is_cover = valid & ~unconstrained_pm
        for b in np.nonzero(is_cover)[0]:
            v = round(float(viol[b]), 12)
            census.setdefault(v, []).append(tuple(int(t) for t in X[b]))
    return census


def min_covers(inst: Instance) -> tuple[float, list[tuple[int, ...]]]:
    """Covers whose violated weight equals the instance optimum.

    The minimum is anchored to the best full assignment, so the all-star
    0-cover of an unsatisfiable instance does not count as a min-cover.
    """
    m, _ = brute_min_energy(inst)
    census = enumerate_v_covers(inst)
    return m, census.get(round(m, 12), [])


def _pow0(base: float, exponent: np.ndarray) -> np.ndarray:
    """base**exponent with the 0**0 = 1 convention."""
    out = np.power(base, exponent.astype(np.float64))
    if base == 0.0:
        out = np.where(exponent == 0, 1.0, out)
    return out


def exact_cover_marginals(inst: Instance, params: CoverDistributionParams, max_vars: int = 14) -> np.ndarray:
    """Exact per-variable marginals over {-1, +1, *} of the cover distribution.

    Every valid extended assignment x carries weight
    omega0^n0 * omega_star^nstar * prod_{violated} exp(-w*y), where n0 counts
    unconstrained variables held at -1/+1 and nstar the stars.  Returns an
    (N, 3) array with columns ordered (-1, +1, *).
    """
    n = inst.num_vars
    if n > max_vars:
        raise CapacityError(f"{n} variables exceeds the 3^N guard ({max_vars})")
    mass = np.zeros((n, 3))
    total = 0.0
    for X in _extended_chunks(n):
        valid, viol, constrained = _classify_chunk(inst, X)
        n0 = ((X != STAR) & ~constrained).sum(axis=1)
        nstar = (X == STAR).sum(axis=1)
        w = _pow0(params.omega0, n0) * _pow0(params.omega_star, nstar)
        w = np.where(valid, w * np.exp(-params.y * viol), 0.0)
        total += w.sum()
        for col, val in enumerate((-1, +1, STAR)):
            mass[:, col] += (w[:, None] * (X == val)).sum(axis=0)
    if total <= 0:
        raise DegeneracyError("cover distribution has zero total mass")
    return mass / total


# -- explicit extended factor graph --------------------------------------------


@dataclass
class ExtendedGraph:
    """Explicit factor graph over (value, parent-set) variable states."""

    graph: FactorGraph
    var_states: list[list[LambdaState]]
    clause_factor: dict[int, int]  # clause id -> factor id
    unary_factor: dict[int, int]  # variable id -> factor id
    params: CoverDistributionParams

    def state_of(self, i: int, state: LambdaState) -> int:
        return self.var_states[i].index(state)


def _subsets(ids: tuple[int, ...]):
    for mask in range(1 << len(ids)):
        yield frozenset(ids[k] for k in range(len(ids)) if (mask >> k) & 1)


def build_extended_graph(
    inst: Instance,
    params: CoverDistributionParams,
    max_states: int = 4096,
    max_table: int = 2_000_000,
) -> ExtendedGraph:
    """Build the extended factor graph: one node per variable over admissible
    (value, parent-set) pairs, a unary smoothing factor per variable, and one
    compatibility factor per clause (violation penalty exp(-w*y), zero on
    invalid combinations, parent-set membership pinned to constrainedness).

    States whose unary weight is zero are pruned, so with omega_star = 1 the
    node cardinality is 2^|V+| + 2^|V-| - 1.
    """
    var_states: list[list[LambdaState]] = []
    unary_weights: list[np.ndarray] = []
    for i in range(inst.num_vars):
        n_states = (1 << len(inst.pos_adj[i])) + (1 << len(inst.neg_adj[i])) + 1
        if n_states > max_states:
            raise CapacityError(f"variable {i} has {n_states} extended states (> {max_states})")
        states: list[LambdaState] = []
        weights: list[float] = []
        for value, adj in ((+1, inst.pos_adj[i]), (-1, inst.neg_adj[i])):
            for parents in _subsets(adj):
                w = params.omega0 if not parents else 1.0
                if w > 0:
                    states.append((value, parents))
                    weights.append(w)
        if params.omega_star > 0:
            states.append((STAR, frozenset()))
            weights.append(params.omega_star)
        var_states.append(states)
        unary_weights.append(np.array(weights))

    factors: list[Factor] = []
    unary_factor: dict[int, int] = {}
    for i in range(inst.num_vars):
        unary_factor[i] = len(factors)
        factors.append(Factor((i,), unary_weights[i]))

    clause_factor: dict[int, int] = {}
    for cid, cl in enumerate(inst.clauses):
        cards = [len(var_states[v]) for v in cl.vars]
        size = int(np.prod(cards))
        if size > max_table:
            raise CapacityError(f"clause {cid} factor table has {size} entries (> {max_table})")
        # entry depends only on each member's (value, beta-in-parents) class
        member_classes = []
        for v in cl.vars:
            codes = np.array(
                [(_value_code(x), int(cid in parents)) for x, parents in var_states[v]],
                dtype=np.int64,
            )
            member_classes.append(codes[:, 0] * 2 + codes[:, 1])
        k = len(cl.vars)
        class_table = np.zeros((6,) * k)
        for combo in iter_product(range(6), repeat=k):
            xs = [_CODE_TO_VALUE[c // 2] for c in combo]
            bits = [c % 2 for c in combo]
            class_table[combo] = _clause_weight(cl, xs, bits, params.y)
        table = class_table[np.ix_(*member_classes)]
        clause_factor[cid] = len(factors)
        factors.append(Factor(cl.vars, table))

    graph = FactorGraph([len(s) for s in var_states], factors)
    return ExtendedGraph(graph, var_states, clause_factor, unary_factor, params)


_CODE_TO_VALUE = (-1, +1, STAR)


def _value_code(x: int) -> int:
    return 0 if x == -1 else (1 if x == +1 else 2)


def _clause_weight(cl, xs: list[int], parent_bits: list[int], y: float) -> float:
    n_sat = sum(1 for x, s in zip(xs, cl.sat_vals) if x == s)
    n_star = sum(1 for x in xs if x == STAR)
    if n_sat == 0 and n_star == 1:
        return 0.0  # invalid
    for k in range(len(xs)):
        con = (
            xs[k] == cl.sat_vals[k]
            and n_sat == 1
            and n_star == 0
        )
        if parent_bits[k] != int(con):
            return 0.0
        if xs[k] == STAR and parent_bits[k]:
            return 0.0
    if n_sat == 0 and n_star == 0:
        return float(np.exp(-cl.weight * y))
    return 1.0


def extended_joint_by_assignment(ext: ExtendedGraph, guard: int = 10**7) -> dict[tuple[int, ...], float]:
    """Total joint weight per extended assignment (marginalised over parent
    sets, of which each assignment admits at most one consistent choice)."""
    joint = joint_table(ext.graph, guard)
    out: dict[tuple[int, ...], float] = {}
    flat = joint.reshape(-1)
    nz = np.nonzero(flat)[0]
    shape = joint.shape
    for pos in nz:
        combo = np.unravel_index(int(pos), shape)
        x = tuple(ext.var_states[i][si][0] for i, si in enumerate(combo))
        if x in out:
            raise AssertionError("two parent-set choices survived for one assignment")
        out[x] = float(flat[pos])
    return out


def edge_state_groups(ext: ExtendedGraph, inst: Instance, cid: int, i: int) -> np.ndarray:
    """Group id per state of variable i relative to clause cid:
    0 = constrained by the clause, 1 = violating, 2 = satisfying but not
    constrained by it, 3 = star."""
    cl = inst.clauses[cid]
    s = cl.sat_vals[cl.vars.index(i)]
    groups = []
    for x, parents in ext.var_states[i]:
        if x == STAR:
            groups.append(3)
        elif x == s:
            groups.append(0 if cid in parents else 2)
        else:
            groups.append(1)
    return np.array(groups, dtype=np.int64)
