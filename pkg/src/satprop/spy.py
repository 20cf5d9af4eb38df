"""SP-y: survey propagation with a finite violation penalty, for unweighted
Max-SAT, plus the backtracking decimation driver.

Each directed clause-to-variable edge carries a scalar warning probability;
the warned variable is pushed toward the value satisfying the warning clause.
A variable aggregates the warnings it receives into a distribution over the
integer net field h (positive = pushed toward +1); every warning landing on
the losing side of the field costs a factor exp(-2y), which accumulates to
exp(-2y * min(#pushes up, #pushes down)) over any insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bp import Schedule
from .instance import Instance
from .localsearch import WalkSatConfig, polish, walksat
from .rng import substream


@dataclass(frozen=True)
class FieldDistribution:
    """Distribution of the net warning field of one variable."""

    h_min: int
    probs: np.ndarray  # probs[t] = P(h = h_min + t); sums to 1

    @property
    def h_max(self) -> int:
        return self.h_min + len(self.probs) - 1

    def prob(self, h: int) -> float:
        if self.h_min <= h <= self.h_max:
            return float(self.probs[h - self.h_min])
        return 0.0

    @property
    def w_plus(self) -> float:
        """Probability the variable prefers +1 (field >= 1)."""
        return float(self.probs[max(0, 1 - self.h_min):].sum()) if self.h_max >= 1 else 0.0

    @property
    def w_minus(self) -> float:
        return float(self.probs[: max(0, -1 - self.h_min + 1)].sum()) if self.h_min <= -1 else 0.0


def tri_components(inst: Instance, warn: np.ndarray, e: int) -> tuple[float, float, float]:
    """(eta+, eta-, eta0) of one edge: the warning is against the violating
    value, so exactly one signed component can be non-zero."""
    lay = inst.layout()
    against_plus = lay.edge_sat[e] == -1  # pushes toward -1, i.e. warns against +1
    eta = float(warn[e])
    return (eta if against_plus else 0.0, 0.0 if against_plus else eta, 1.0 - eta)


def _convolve(h_probs: np.ndarray, h_min: int, eta: float, push: int, y: float) -> tuple[np.ndarray, int]:
    """Fold one incoming warning into a field distribution (unnormalised)."""
    n = len(h_probs)
    out = np.zeros(n + 2)
    new_min = h_min - 1
    out[1 : n + 1] += (1.0 - eta) * h_probs
    for t in range(n):
        h_new = h_min + t + push
        pos = h_new - new_min
        if push == +1:
            pen = np.exp(-2.0 * y) if h_new <= 0 else 1.0
        else:
            pen = np.exp(-2.0 * y) if h_new >= 0 else 1.0
        out[pos] += eta * h_probs[t] * pen
    return out, new_min


def field_distribution(inst: Instance, j: int, cid: int | None, warn: np.ndarray, y: float) -> FieldDistribution:
    """Cavity field distribution of variable j excluding the edge to clause
    cid (include every clause when cid is None).  Incoming warnings are folded
    in ascending clause-id order; the result is normalised over the full
    support."""
    lay = inst.layout()
    edges = [e for e in np.nonzero(lay.edge_var == j)[0] if cid is None or lay.edge_clause[e] != cid]
    edges.sort(key=lambda e: lay.edge_clause[e])
    probs = np.array([1.0])
    h_min = 0
    for e in edges:
        probs, h_min = _convolve(probs, h_min, float(warn[e]), int(lay.edge_sat[e]), y)
    total = probs.sum()
    return FieldDistribution(h_min, probs / total if total > 0 else probs)


@njit(cache=True)
def _cavity_w(vptr, vedge, vpush, warn, y, w_plus, w_minus, full_wp, full_wm):
    """Per-edge cavity preference masses and per-variable full masses.

    For each variable, folds its warnings (ascending clause order within the
    variable's edge list) into the field distribution, once per excluded edge
    and once with nothing excluded.
    """
    pen = np.exp(-2.0 * y)
    n_vars = len(vptr) - 1
    for j in range(n_vars):
        lo, hi = vptr[j], vptr[j + 1]
        d = hi - lo
        if d == 0:
            full_wp[j] = 0.0
            full_wm[j] = 0.0
            continue
        size = 2 * d + 1
        buf = np.zeros(size)
        nxt = np.zeros(size)
        for excl in range(-1, d):
            off = d  # index of h = 0
            buf[:] = 0.0
            buf[off] = 1.0
            for t in range(d):
                if t == excl:
                    continue
                e = vedge[lo + t]
                eta = warn[e]
                push = vpush[lo + t]
                nxt[:] = 0.0
                for pos in range(size):
                    p = buf[pos]
                    if p == 0.0:
                        continue
                    nxt[pos] += (1.0 - eta) * p
                    h_new = (pos - off) + push
                    if push == 1:
                        f = pen if h_new <= 0 else 1.0
                    else:
                        f = pen if h_new >= 0 else 1.0
                    nxt[pos + push] += eta * p * f
                buf[:] = nxt
            total = 0.0
            up = 0.0
            down = 0.0
            for pos in range(size):
                total += buf[pos]
                if pos > off:
                    up += buf[pos]
                elif pos < off:
                    down += buf[pos]
            if total > 0.0:
                up /= total
                down /= total
            if excl == -1:
                full_wp[j] = up
                full_wm[j] = down
            else:
                w_plus[vedge[lo + excl]] = up
                w_minus[vedge[lo + excl]] = down


def _var_edge_csr(inst: Instance):
    lay = inst.layout()
    order = np.argsort(lay.edge_var, kind="stable")  # canonical ids ascend = clause ids ascend
    counts = np.bincount(lay.edge_var, minlength=inst.num_vars)
    vptr = np.zeros(inst.num_vars + 1, dtype=np.int64)
    np.cumsum(counts, out=vptr[1:])
    return vptr, order.astype(np.int64), lay.edge_sat[order].astype(np.int64)


def spy_cavity_masses(inst: Instance, warn: np.ndarray, y: float):
    """(w_plus, w_minus) per edge (cavity) and per variable (full)."""
    lay = inst.layout()
    vptr, vedge, vpush = _var_edge_csr(inst)
    w_plus = np.zeros(lay.num_edges)
    w_minus = np.zeros(lay.num_edges)
    full_wp = np.zeros(inst.num_vars)
    full_wm = np.zeros(inst.num_vars)
    _cavity_w(vptr, vedge, vpush, np.clip(warn, 0.0, 1.0), y, w_plus, w_minus, full_wp, full_wm)
    return w_plus, w_minus, full_wp, full_wm


def spy_sweep(inst: Instance, warn: np.ndarray, y: float, damping: float = 0.0) -> tuple[np.ndarray, float]:
    """One synchronous warning update: the outgoing warning is the product,
    over the clause's other members, of each member's probability of
    preferring its violating value."""
    lay = inst.layout()
    w_plus, w_minus, _, _ = spy_cavity_masses(inst, warn, y)
    toward_violation = np.where(lay.edge_pos, w_minus, w_plus)
    raw = lay.clause_excl_prod(toward_violation)
    new = np.clip((1.0 - damping) * raw + damping * warn, 0.0, 1.0)
    return new, float(np.abs(new - warn).max(initial=0.0))


def spy_biases(inst: Instance, warn: np.ndarray, y: float) -> np.ndarray:
    """Per-variable (W+, W-) over the full (non-cavity) field distribution."""
    _, _, full_wp, full_wm = spy_cavity_masses(inst, warn, y)
    return np.stack([full_wp, full_wm], axis=1)


@dataclass
class SpyResult:
    converged: bool
    sweeps: int
    warn: np.ndarray


def spy_run(
    inst: Instance,
    y: float,
    schedule: Schedule = Schedule(tol=1e-3),
    retry_damping: float | None = 0.5,
    warn0: np.ndarray | None = None,
) -> SpyResult:
    """Iterate spy_sweep from seeded uniform-random warnings to convergence."""
    lay = inst.layout()
    if warn0 is None:
        rng = np.random.default_rng(substream(schedule.seed, "spy-init"))
        warn0 = rng.random(lay.num_edges)

    def _iterate(damping: float) -> SpyResult:
        warn = warn0.copy()
        for sweep in range(1, schedule.max_sweeps + 1):
            warn, change = spy_sweep(inst, warn, y, damping)
            if change < schedule.tol:
                return SpyResult(True, sweep, warn)
        return SpyResult(False, schedule.max_sweeps, warn)

    res = _iterate(schedule.damping)
    if not res.converged and retry_damping is not None and schedule.damping == 0.0:
        res = _iterate(retry_damping)
    return res


@dataclass
class BacktrackRound:
    action: str  # "fix" | "unfix" | "stop"
    count: int
    converged: bool
    sweeps: int


@dataclass
class SidBacktrackResult:
    assignment: np.ndarray
    energy: float
    rounds: list[BacktrackRound] = field(default_factory=list)


def sid_backtrack(
    inst: Instance,
    k: int = 100,
    y: float = 2.0,
    r: float = 0.0,
    schedule: Schedule = Schedule(tol=1e-3),
    walksat_cfg: WalkSatConfig | None = None,
    paramagnetic_eps: float = 0.01,
    max_outer: int | None = None,
) -> SidBacktrackResult:
    """Backtracking decimation: per outer round draw q in [0,1); with
    q >= r fix the k most field-biased variables, otherwise unfix the k
    previously-fixed variables whose fix-time bias was weakest.  Stops into
    WalkSAT on non-convergence or a paramagnetic fixed point.  r = 0 is plain
    decimation."""
    if inst.is_weighted:
        raise ValueError("this decimation driver handles unweighted instances only")
    seed = schedule.seed
    q_rng = np.random.default_rng(substream(seed, "backtrack-q"))
    fixes: dict[int, int] = {}
    fix_gap: dict[int, float] = {}  # fix-time W+ - W- per original variable
    rounds: list[BacktrackRound] = []
    if max_outer is None:
        max_outer = 10 * (inst.num_vars // max(k, 1) + 1) + 50
    current = inst
    embed = list(range(inst.num_vars))
    remainder: np.ndarray | None = None

    for outer in range(max_outer):
        if current.num_clauses == 0 or current.num_vars == 0:
            remainder = np.ones(current.num_vars, dtype=np.int8)
            break
        res = spy_run(
            current,
            y,
            Schedule(
                mode=schedule.mode,
                damping=schedule.damping,
                max_sweeps=schedule.max_sweeps,
                tol=schedule.tol,
                seed=substream(seed, f"round/{outer}"),
            ),
        )
        if not res.converged:
            rounds.append(BacktrackRound("stop", 0, False, res.sweeps))
            break
        biases = spy_biases(current, res.warn, y)
        gap = biases[:, 0] - biases[:, 1]
        if np.abs(gap).max(initial=0.0) < paramagnetic_eps:
            rounds.append(BacktrackRound("stop", 0, True, res.sweeps))
            break
        q = q_rng.random()
        if q >= r or not fixes:
            order = np.lexsort((np.arange(current.num_vars), -np.abs(gap)))
            chosen = order[: min(k, current.num_vars)]
            for i in chosen:
                orig = embed[i]
                fixes[orig] = +1 if gap[i] >= 0 else -1
                fix_gap[orig] = float(gap[i])
            rounds.append(BacktrackRound("fix", len(chosen), True, res.sweeps))
        else:
            # unfix score -x_j * (W+ - W-): largest first = weakest decisions first
            ranked = sorted(fixes, key=lambda v: (fixes[v] * fix_gap[v], v))
            dropped = ranked[: min(k, len(ranked))]
            for v in dropped:
                del fixes[v]
                del fix_gap[v]
            rounds.append(BacktrackRound("unfix", len(dropped), True, res.sweeps))
        sim = inst.simplify(fixes)
        embed = list(sim.kept_vars)
        current = sim.instance

    if remainder is None:
        base = walksat_cfg if walksat_cfg is not None else WalkSatConfig()
        ws_cfg = WalkSatConfig(
            noise=base.noise,
            max_flips=base.max_flips,
            tries=base.tries,
            seed=substream(base.seed ^ current.stable_hash(), "walksat"),
            weighted=False,
        )
        remainder = walksat(current, ws_cfg).assignment

    full = np.ones(inst.num_vars, dtype=np.int8)
    for i, orig in enumerate(embed):
        full[orig] = remainder[i]
    for orig, val in fixes.items():
        full[orig] = val
    full = polish(inst, full)
    return SidBacktrackResult(full, inst.energy(full), rounds)
