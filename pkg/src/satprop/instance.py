"""Weighted CNF instances over spin variables, and don't-care cover semantics.

Variables take values in {-1, +1}; the extended domain adds a third value
``*`` (represented by 0) meaning "no clause relies on this variable as its
sole satisfier".  A clause stores, per member, the spin value that satisfies
it; the sign convention J = -sat_value (J = +1 for a negated literal) is
exposed for interoperability.

Cover semantics follow the formal definitions exactly: a variable is
*constrained* by a clause when it takes the satisfying value and every other
member takes its violating value (a ``*`` co-member disqualifies the clause);
a *v-cover* is a valid extended assignment with violated weight v and no
unconstrained variable left at -1/+1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .rng import fnv1a64

STAR = 0  # "don't care" value in extended assignments


class ClauseStatus(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INVALID = "invalid"


class CoverKind(Enum):
    INVALID = "invalid"
    NOT_COVER = "not_cover"
    COVER = "cover"


@dataclass(frozen=True)
class CoverStatus:
    """Result of classifying an extended assignment."""

    kind: CoverKind
    violated_weight: float | None = None

    @property
    def is_cover(self) -> bool:
        return self.kind is CoverKind.COVER


@dataclass(frozen=True)
class Clause:
    """A weighted disjunction: ``vars[k]`` is satisfied by spin ``sat_vals[k]``."""

    vars: tuple[int, ...]
    sat_vals: tuple[int, ...]
    weight: float = 1.0

    @property
    def couplings(self) -> tuple[int, ...]:
        """Edge signs J: +1 when the variable appears negated."""
        return tuple(-s for s in self.sat_vals)

    @staticmethod
    def from_lits(lits: Sequence[int], weight: float = 1.0) -> "Clause":
        """Build from DIMACS-style literals: +v satisfied by +1, -v by -1 (1-based)."""
        if not lits:
            raise ValueError("empty clause")
        return Clause(
            vars=tuple(abs(l) - 1 for l in lits),
            sat_vals=tuple(+1 if l > 0 else -1 for l in lits),
            weight=weight,
        )


class Instance:
    """Immutable weighted CNF formula with per-variable adjacency.

    Safe to share across threads after construction.  ``pos_adj[i]`` and
    ``neg_adj[i]`` list the clauses satisfied by x_i = +1 and x_i = -1
    respectively; their concatenation is the full neighbourhood of i.
    """

    def __init__(self, num_vars: int, clauses: Iterable[Clause]):
        clauses = tuple(clauses)
        pos_adj: list[list[int]] = [[] for _ in range(num_vars)]
        neg_adj: list[list[int]] = [[] for _ in range(num_vars)]
        for cid, cl in enumerate(clauses):
            if len(set(cl.vars)) != len(cl.vars):
                raise ValueError(f"clause {cid} repeats a variable")
            if not cl.vars:
                raise ValueError(f"clause {cid} is empty")
            if not cl.weight > 0:
                raise ValueError(f"clause {cid} has non-positive weight")
            for v, s in zip(cl.vars, cl.sat_vals):
                if not 0 <= v < num_vars:
                    raise ValueError(f"clause {cid} mentions variable {v} out of range")
                if s not in (-1, +1):
                    raise ValueError(f"clause {cid} has invalid sign {s}")
                (pos_adj[v] if s == +1 else neg_adj[v]).append(cid)
        self.num_vars = num_vars
        self.clauses = clauses
        self.pos_adj = tuple(tuple(a) for a in pos_adj)
        self.neg_adj = tuple(tuple(a) for a in neg_adj)
        self._layout = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_lits(num_vars: int, weighted_lits: Sequence[tuple[float, Sequence[int]]]) -> "Instance":
        """Build from (weight, DIMACS-literal list) pairs."""
        return Instance(num_vars, [Clause.from_lits(lits, w) for w, lits in weighted_lits])

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def is_weighted(self) -> bool:
        return any(cl.weight != 1.0 for cl in self.clauses)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.pos_adj[i] + self.neg_adj[i]

    def layout(self):
        """Cached flat edge arrays for vectorised message passing."""
        if self._layout is None:
            from ._edges import EdgeLayout

            self._layout = EdgeLayout(self)
        return self._layout

    def stable_hash(self) -> int:
        """64-bit content hash, stable across processes and platforms."""
        parts = [str(self.num_vars)]
        for cl in self.clauses:
            parts.append(",".join(f"{v}:{s}" for v, s in zip(cl.vars, cl.sat_vals)))
            parts.append(repr(cl.weight))
        return fnv1a64("|".join(parts).encode("utf-8"))

    def __repr__(self) -> str:
        return f"Instance(num_vars={self.num_vars}, num_clauses={self.num_clauses})"

    # -- evaluation ------------------------------------------------------------

    def _check_assignment(self, x: Sequence[int], extended: bool = False) -> np.ndarray:
        arr = np.asarray(x, dtype=np.int8)
        if arr.shape != (self.num_vars,):
            raise ValueError(f"assignment has length {arr.shape}, expected {self.num_vars}")
        allowed = (-1, 0, +1) if extended else (-1, +1)
        if not np.isin(arr, allowed).all():
            raise ValueError("assignment contains values outside the domain")
        return arr

    def energy(self, x: Sequence[int]) -> float:
        """Total weight of clauses violated by a full +-1 assignment."""
        arr = self._check_assignment(x)
        total = 0.0
        for cl in self.clauses:
            if all(arr[v] != s for v, s in zip(cl.vars, cl.sat_vals)):
                total += cl.weight
        return total

    def clause_status(self, cid: int, x: Sequence[int]) -> ClauseStatus:
        """Status of one clause under an extended assignment.

        Satisfied: some member takes its satisfying value, or >= 2 members are
        ``*``.  Violated: every member takes its violating value.  Invalid:
        exactly one member is ``*`` and the rest violate.
        """
        arr = self._check_assignment(x, extended=True)
        cl = self.clauses[cid]
        n_star = sum(1 for v in cl.vars if arr[v] == STAR)
        n_sat = sum(1 for v, s in zip(cl.vars, cl.sat_vals) if arr[v] == s)
        if n_sat > 0 or n_star >= 2:
            return ClauseStatus.SATISFIED
        if n_star == 1:
            return ClauseStatus.INVALID
        return ClauseStatus.VIOLATED

    def is_constrained(self, i: int, cid: int, x: Sequence[int]) -> bool:
        """True iff i is the unique satisfying variable of the clause.

        Requires x_i at the satisfying value and every other member at its
        violating value; a ``*`` co-member means i is not constrained.
        """
        arr = self._check_assignment(x, extended=True)
        cl = self.clauses[cid]
        if i not in cl.vars:
            raise ValueError(f"variable {i} is not a member of clause {cid}")
        for v, s in zip(cl.vars, cl.sat_vals):
            if v == i:
                if arr[v] != s:
                    return False
            elif arr[v] != -s:
                return False
        return True

    def parent_sets(self, x: Sequence[int]) -> list[frozenset[int]]:
        """Per-variable set of clauses that the variable uniquely satisfies."""
        arr = self._check_assignment(x, extended=True)
        parents: list[set[int]] = [set() for _ in range(self.num_vars)]
        for cid, cl in enumerate(self.clauses):
            n_star = sum(1 for v in cl.vars if arr[v] == STAR)
            if n_star > 0:
                continue
            sat = [v for v, s in zip(cl.vars, cl.sat_vals) if arr[v] == s]
            if len(sat) == 1:
                parents[sat[0]].add(cid)
        return [frozenset(p) for p in parents]

    def classify_cover(self, x: Sequence[int]) -> CoverStatus:
        """Classify an extended assignment as invalid, not a cover, or a v-cover."""
        arr = self._check_assignment(x, extended=True)
        violated_weight = 0.0
        for cid, cl in enumerate(self.clauses):
            status = self.clause_status(cid, arr)
            if status is ClauseStatus.INVALID:
                return CoverStatus(CoverKind.INVALID)
            if status is ClauseStatus.VIOLATED:
                violated_weight += cl.weight
        parents = self.parent_sets(arr)
        for i in range(self.num_vars):
            if arr[i] != STAR and not parents[i]:
                return CoverStatus(CoverKind.NOT_COVER)
        return CoverStatus(CoverKind.COVER, violated_weight)

    def peel(self, x: Sequence[int]) -> np.ndarray:
        """Star, to fixpoint, every +-1 variable that uniquely satisfies no
        clause and sits in no violated clause.

        Scan order is ascending variable index with immediate effect.  The
        violated-clause set is untouched by construction, so the output keeps
        the input's violated weight and is always valid.
        """
        arr = self._check_assignment(x).astype(np.int8).copy()
        # per-clause counts and per-variable support, maintained incrementally
        n_sat = np.zeros(self.num_clauses, dtype=np.int32)
        n_star = np.zeros(self.num_clauses, dtype=np.int32)
        for cid, cl in enumerate(self.clauses):
            n_sat[cid] = sum(1 for v, s in zip(cl.vars, cl.sat_vals) if arr[v] == s)
        constrained_by = [set() for _ in range(self.num_vars)]
        in_violated = np.zeros(self.num_vars, dtype=np.int32)
        for cid, cl in enumerate(self.clauses):
            if n_sat[cid] == 1:
                for v, s in zip(cl.vars, cl.sat_vals):
                    if arr[v] == s:
                        constrained_by[v].add(cid)
            elif n_sat[cid] == 0:
                for v in cl.vars:
                    in_violated[v] += 1

        changed = True
        while changed:
            changed = False
            for i in range(self.num_vars):
                if arr[i] == STAR or constrained_by[i] or in_violated[i]:
                    continue
                # star i; update counts of its clauses
                for cid in self.neighbors(i):
                    cl = self.clauses[cid]
                    i_sats = arr[i] == cl.sat_vals[cl.vars.index(i)]
                    first_star = n_star[cid] == 0
                    if i_sats:
                        n_sat[cid] -= 1
                    n_star[cid] += 1
                    # a first star co-member retracts unique-satisfier status
                    if first_star and not i_sats and n_sat[cid] == 1:
                        for v, s in zip(cl.vars, cl.sat_vals):
                            if v != i and arr[v] == s:
                                constrained_by[v].discard(cid)
                arr[i] = STAR
                changed = True
        return arr

    # -- reduction ---------------------------------------------------------------

    def simplify(self, fixes: Mapping[int, int]) -> "SimplifyResult":
        """Fix variables and reduce the formula.

        Clauses satisfied by a fix disappear; fixed violating literals are
        dropped from their clauses; clauses emptied this way contribute their
        weight to ``offset``.  For any completion x of the survivors,
        ``energy(original, fixes + x) == offset + energy(reduced, x)``.
        """
        for v, val in fixes.items():
            if not 0 <= v < self.num_vars:
                raise ValueError(f"fix for unknown variable {v}")
            if val not in (-1, +1):
                raise ValueError(f"fix value for variable {v} must be -1 or +1")
        keep = [i for i in range(self.num_vars) if i not in fixes]
        old_to_new = {old: new for new, old in enumerate(keep)}
        offset = 0.0
        reduced: list[Clause] = []
        for cl in self.clauses:
            satisfied = False
            rest_vars: list[int] = []
            rest_sats: list[int] = []
            for v, s in zip(cl.vars, cl.sat_vals):
                if v in fixes:
                    if fixes[v] == s:
                        satisfied = True
                        break
                else:
                    rest_vars.append(old_to_new[v])
                    rest_sats.append(s)
            if satisfied:
                continue
            if not rest_vars:
                offset += cl.weight
            else:
                reduced.append(Clause(tuple(rest_vars), tuple(rest_sats), cl.weight))
        return SimplifyResult(
            instance=Instance(len(keep), reduced),
            offset=offset,
            kept_vars=tuple(keep),
        )


@dataclass(frozen=True)
class SimplifyResult:
    instance: Instance
    offset: float
    kept_vars: tuple[int, ...]  # new index -> original variable id

    def lift(self, x: Sequence[int], fixes: Mapping[int, int], num_vars: int) -> np.ndarray:
        """Recombine a reduced-instance assignment with the fixes."""
        full = np.zeros(num_vars, dtype=np.int8)
        for v, val in fixes.items():
            full[v] = val
        for new, old in enumerate(self.kept_vars):
            full[old] = x[new]
        return full


def leq(x: Sequence[int], y: Sequence[int]) -> bool:
    """Partial order on extended assignments: x <= y iff coordinatewise
    x_i equals y_i or x_i is ``*``."""
    xa = np.asarray(x, dtype=np.int8)
    ya = np.asarray(y, dtype=np.int8)
    if xa.shape != ya.shape:
        raise ValueError("assignments differ in length")
    return bool(np.all((xa == ya) | (xa == STAR)))
