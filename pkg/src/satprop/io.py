"""DIMACS CNF/WCNF parsing and writing, random instance generation, CSV output."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .instance import Clause, Instance
from .rng import Xoshiro256StarStar


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GeneratorConfig:
    """Random K-SAT ensemble parameters.

    The clause count is ``num_clauses`` when given, otherwise
    round(clause_ratio * num_vars) with half-up rounding.  ``weight_max`` = 1
    yields an unweighted instance; otherwise clause weights are uniform
    integers in [1, weight_max].
    """

    num_vars: int
    clause_ratio: float = 0.0
    num_clauses: int | None = None
    clause_size: int = 3
    weight_max: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.clause_size < 1:
            raise ValueError("clause_size must be >= 1")
        if self.clause_size > self.num_vars:
            raise ValueError("clause_size exceeds num_vars")
        if self.num_clauses is None and not self.clause_ratio > 0:
            raise ValueError("need clause_ratio > 0 or an explicit num_clauses")
        if self.weight_max < 1:
            raise ValueError("weight_max must be >= 1")

    @property
    def resolved_num_clauses(self) -> int:
        if self.num_clauses is not None:
            return self.num_clauses
        # half-up rounding
        return int(self.clause_ratio * self.num_vars + 0.5)


def parse_dimacs(source: str | IO[str]) -> Instance:
    """Parse DIMACS CNF ("p cnf N M") or WCNF ("p wcnf N M [top]") text.

    A positive literal v is satisfied by x_v = +1 (edge sign J = -1).  CNF
    clauses get weight 1; WCNF clauses carry their leading weight, including
    hard-clause "top" weights, verbatim.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    num_vars = None
    weighted = False
    clauses: list[Clause] = []
    pending: list[int] = []
    pending_weight: float | None = None
    lineno = 0

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            toks = line.split()
            if len(toks) < 4 or toks[1] not in ("cnf", "wcnf"):
                raise ParseError("malformed problem header", lineno)
            weighted = toks[1] == "wcnf"
            if len(toks) != 4 and not (weighted and len(toks) == 5):
                raise ParseError("malformed problem header", lineno)
            try:
                num_vars = int(toks[2])
                int(toks[3])
            except ValueError:
                raise ParseError("non-integer counts in header", lineno) from None
            continue
        if num_vars is None:
            raise ParseError("clause before problem header", lineno)
        for tok in line.split():
            if weighted and pending_weight is None and not pending:
                try:
                    pending_weight = float(tok)
                except ValueError:
                    raise ParseError(f"bad clause weight {tok!r}", lineno) from None
                if not pending_weight > 0:
                    raise ParseError("non-positive clause weight", lineno)
                continue
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                if not pending:
                    raise ParseError("empty clause", lineno)
                clauses.append(Clause.from_lits(pending, pending_weight or 1.0))
                pending = []
                pending_weight = None
            else:
                if abs(lit) > num_vars:
                    raise ParseError(f"literal {lit} out of range", lineno)
                pending.append(lit)
    if pending or pending_weight is not None:
        raise ParseError("unterminated clause (missing 0)", lineno)
    if num_vars is None:
        raise ParseError("missing problem header", max(lineno, 1))
    return Instance(num_vars, clauses)


def _format_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(w)


def write_dimacs(inst: Instance) -> str:
    """Render an instance as CNF when unweighted, WCNF otherwise."""
    weighted = inst.is_weighted
    out = [f"p {'wcnf' if weighted else 'cnf'} {inst.num_vars} {inst.num_clauses}"]
    for cl in inst.clauses:
        lits = " ".join(str((v + 1) * s) for v, s in zip(cl.vars, cl.sat_vals))
        if weighted:
            out.append(f"{_format_weight(cl.weight)} {lits} 0")
        else:
            out.append(f"{lits} 0")
    return "\n".join(out) + "\n"


def generate(cfg: GeneratorConfig) -> Instance:
    """Seed-deterministic random K-SAT generation (xoshiro256**).

    Per clause: draw clause_size variable indices with the multiply-shift
    reduction, redrawing the whole tuple until all are distinct; then one sign
    word per literal (top bit set = positive literal); then, when
    weight_max > 1, a uniform integer weight in [1, weight_max].  Duplicate
    clauses are allowed.
    """
    rng = Xoshiro256StarStar(cfg.seed)
    n, k = cfg.num_vars, cfg.clause_size
    clauses = []
    for _ in range(cfg.resolved_num_clauses):
        while True:
            vs = [rng.below(n) for _ in range(k)]
            if len(set(vs)) == k:
                break
        sats = [rng.sign() for _ in range(k)]
        w = float(rng.randint(1, cfg.weight_max)) if cfg.weight_max > 1 else 1.0
        clauses.append(Clause(tuple(vs), tuple(sats), w))
    return Instance(n, clauses)


def write_sweep_csv(rows: Iterable[Sequence]) -> str:
    """CSV for y-sweep results: header y,violations,converged,fixed; rows
    sorted by y ascending; LF line endings."""
    out = ["y,violations,converged,fixed"]
    for y, viol, converged, fixed in sorted(rows, key=lambda r: r[0]):
        out.append(
            f"{float(y)!r},{_format_weight(viol)},{'true' if converged else 'false'},{int(fixed)}"
        )
    return "\n".join(out) + "\n"
