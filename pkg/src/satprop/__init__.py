"""Message-passing solvers for weighted Max-SAT.

Core pieces: the instance model with don't-care cover semantics
(`instance`), DIMACS and random generation (`io`), a generic loopy
sum-product engine (`bp`), survey propagation and decimation (`sp`), the
finite-penalty variant (`spy`), relaxed survey propagation on the extended
factor graph (`rsp`), WalkSAT (`localsearch`), brute-force references
(`oracle`), and a CLI (`cli`).
"""

from .instance import (
    STAR,
    Clause,
    ClauseStatus,
    CoverKind,
    CoverStatus,
    Instance,
    leq,
)
from .io import GeneratorConfig, generate, parse_dimacs, write_dimacs

__all__ = [
    "STAR",
    "Clause",
    "ClauseStatus",
    "CoverKind",
    "CoverStatus",
    "Instance",
    "leq",
    "GeneratorConfig",
    "generate",
    "parse_dimacs",
    "write_dimacs",
]
