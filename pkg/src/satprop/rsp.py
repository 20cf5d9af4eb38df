"""Relaxed survey propagation: grouped three-component messages on the
extended (value, parent-set) factor graph, beliefs over {-1, +1, *}, and the
y-adaptive decimation driver.

Messages per directed edge are triples in the fixed order (s, u, *):
factor-to-variable triples (M^s, M^u, M^*) and variable-to-factor triples
(R^s, R^u, R^*), each normalised to unit sum.  The fast path implements the
pure cover distribution (omega_star = 1); other smoothing weights are served
at desk scale by the explicit graph in the oracle module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bp import Schedule
from .errors import DegeneracyError
from .instance import STAR, Instance
from .localsearch import WalkSatConfig, polish, walksat
from .rng import substream

S, U, ST = 0, 1, 2  # triple component order


def _normalize_rows(raw: np.ndarray, what: str, lay=None) -> np.ndarray:
    raw = np.maximum(raw, 0.0)
    z = raw.sum(axis=1)
    bad = ~(z > 0) | ~np.isfinite(z)
    if bad.any():
        e = int(np.nonzero(bad)[0][0])
        if lay is not None:
            raise DegeneracyError(
                f"all-zero {what} triple on edge clause {lay.edge_clause[e]}"
                f" <-> variable {lay.edge_var[e]}"
            )
        raise DegeneracyError(f"all-zero {what} triple on edge {e}")
    return raw / z[:, None]


def _penalties(inst: Instance, y: float) -> np.ndarray:
    lay = inst.layout()
    return np.exp(-lay.clause_weight * y)[lay.edge_clause]


def rsp_factor_sweep(inst: Instance, R: np.ndarray, y: float) -> np.ndarray:
    """All factor-to-variable triples from the variable-to-factor state.

    Per edge (clause beta -> variable i), with products over the clause's
    other members j:
      M^s = prod R^u_j
      M^u = prod (R^u_j + R^*_j) + sum_k (R^s_k - R^*_k) prod_{j != k} R^u_j
            + (exp(-w*y) - 1) prod R^u_j
      M^* = prod (R^u_j + R^*_j) - prod R^u_j
    """
    lay = inst.layout()
    p_both = lay.clause_excl_prod(R[:, U] + R[:, ST])
    p_u = lay.clause_excl_prod(R[:, U])
    pair = lay.clause_pair_sum(R[:, S] - R[:, ST], R[:, U])
    ew = _penalties(inst, y)
    raw = np.empty_like(R)
    raw[:, S] = p_u
    raw[:, U] = p_both + pair + (ew - 1.0) * p_u
    raw[:, ST] = p_both - p_u
    # a variable with no opposite-sign clause has no state that violates this
    # one; its u-component is structurally absent on the extended graph
    opp_deg = lay.gather_opp(lay.var_pos_deg, lay.var_neg_deg)
    raw[opp_deg == 0, U] = 0.0
    return _normalize_rows(raw, "factor-to-variable", lay)


def rsp_var_sweep(inst: Instance, M: np.ndarray) -> np.ndarray:
    """All variable-to-factor triples from the factor-to-variable state.

    Per edge (variable i -> clause beta), "same" runs over i's other clauses
    with the same satisfying value and "opp" over the rest:
      R^s = prod_opp M^u * prod_same (M^s + M^*)
      R^u = prod_same M^u * (prod_opp (M^s + M^*) - prod_opp M^*)
      R^* = prod_opp M^u * (prod_same (M^s + M^*) - prod_same M^*)
            + prod_same M^* * prod_opp M^*
    """
    lay = inst.layout()
    sm = M[:, S] + M[:, ST]
    same_sm = lay.sign_excl_prod(sm)
    same_m = lay.sign_excl_prod(M[:, ST])
    same_u = lay.sign_excl_prod(M[:, U])
    pos_u, neg_u = lay.var_sign_full_prod(M[:, U])
    pos_sm, neg_sm = lay.var_sign_full_prod(sm)
    pos_m, neg_m = lay.var_sign_full_prod(M[:, ST])
    opp_u = lay.gather_opp(pos_u, neg_u)
    opp_sm = lay.gather_opp(pos_sm, neg_sm)
    opp_m = lay.gather_opp(pos_m, neg_m)
    raw = np.empty_like(M)
    raw[:, S] = opp_u * same_sm
    raw[:, U] = same_u * (opp_sm - opp_m)
    raw[:, ST] = opp_u * (same_sm - same_m) + same_m * opp_m
    return _normalize_rows(raw, "variable-to-factor", lay)


def rsp_beliefs(inst: Instance, M: np.ndarray) -> np.ndarray:
    """Per-variable beliefs (B(-1), B(+1), B(*)) from factor-to-variable
    triples, rows normalised."""
    lay = inst.layout()
    sm = M[:, S] + M[:, ST]
    pos_u, neg_u = lay.var_sign_full_prod(M[:, U])
    pos_sm, neg_sm = lay.var_sign_full_prod(sm)
    pos_m, neg_m = lay.var_sign_full_prod(M[:, ST])
    raw = np.empty((inst.num_vars, 3))
    raw[:, 0] = pos_u * (neg_sm - neg_m)
    raw[:, 1] = neg_u * (pos_sm - pos_m)
    raw[:, 2] = pos_m * neg_m
    raw = np.maximum(raw, 0.0)
    z = raw.sum(axis=1)
    bad = ~(z > 0) | ~np.isfinite(z)
    if bad.any():
        raise DegeneracyError(f"zero belief normaliser for variable {int(np.nonzero(bad)[0][0])}")
    return raw / z[:, None]


# -- per-edge reference updates (loop form, used by tests and small cases) ------

Triple = tuple[float, float, float]


def rsp_factor_to_var(inst: Instance, cid: int, i: int, incoming: Mapping[int, Triple], y: float) -> Triple:
    """Reference single-edge factor-to-variable update; see rsp_factor_sweep."""
    cl = inst.clauses[cid]
    others = [v for v in cl.vars if v != i]
    if set(incoming) != set(others):
        raise ValueError("incoming triples must cover exactly the other members")
    p_both = float(np.prod([incoming[j][U] + incoming[j][ST] for j in others])) if others else 1.0
    p_u = float(np.prod([incoming[j][U] for j in others])) if others else 1.0
    pair = 0.0
    for k in others:
        rest = float(np.prod([incoming[j][U] for j in others if j != k])) if len(others) > 1 else 1.0
        pair += (incoming[k][S] - incoming[k][ST]) * rest
    ew = float(np.exp(-cl.weight * y))
    raw = np.array([p_u, p_both + pair + (ew - 1.0) * p_u, p_both - p_u])
    s = cl.sat_vals[cl.vars.index(i)]
    if not (inst.neg_adj[i] if s == +1 else inst.pos_adj[i]):
        raw[U] = 0.0  # no state of i can violate this clause
    raw = np.maximum(raw, 0.0)
    if not raw.sum() > 0:
        raise DegeneracyError(f"all-zero triple on edge clause {cid} -> variable {i}")
    return tuple(raw / raw.sum())


def rsp_var_to_factor(inst: Instance, i: int, cid: int, incoming: Mapping[int, Triple]) -> Triple:
    """Reference single-edge variable-to-factor update; see rsp_var_sweep."""
    cl = inst.clauses[cid]
    s = cl.sat_vals[cl.vars.index(i)]
    same = [g for g in (inst.pos_adj[i] if s == +1 else inst.neg_adj[i]) if g != cid]
    opp = list(inst.neg_adj[i] if s == +1 else inst.pos_adj[i])
    if set(incoming) != set(same) | set(opp):
        raise ValueError("incoming triples must cover exactly the other clauses")

    def prod(ids, f):
        return float(np.prod([f(incoming[g]) for g in ids])) if ids else 1.0

    r_s = prod(opp, lambda m: m[U]) * prod(same, lambda m: m[S] + m[ST])
    r_u = prod(same, lambda m: m[U]) * (prod(opp, lambda m: m[S] + m[ST]) - prod(opp, lambda m: m[ST]))
    r_st = prod(opp, lambda m: m[U]) * (
        prod(same, lambda m: m[S] + m[ST]) - prod(same, lambda m: m[ST])
    ) + prod(same, lambda m: m[ST]) * prod(opp, lambda m: m[ST])
    raw = np.maximum(np.array([r_s, r_u, r_st]), 0.0)
    if not raw.sum() > 0:
        raise DegeneracyError(f"all-zero triple on edge variable {i} -> clause {cid}")
    return tuple(raw / raw.sum())


# -- full runs -------------------------------------------------------------------


@dataclass(frozen=True)
class RspConfig:
    """Penalty rate, schedule and decimation policy for RSP runs."""

    y: float
    schedule: Schedule = Schedule(tol=1e-3)
    k: int = 100
    b_min: float = 0.5
    adapt_y: bool = False
    y_floor: float = 1e-3
    retry_damping: float | None = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("decimation batch k must be >= 1")
        if not 0 < self.b_min < 1:
            raise ValueError("b_min must lie in (0, 1)")


@dataclass
class RspResult:
    converged: bool
    sweeps: int
    M: np.ndarray
    R: np.ndarray
    beliefs: np.ndarray


def random_message_state(inst: Instance, seed: int) -> np.ndarray:
    """Seeded random normalised factor-to-variable triples."""
    lay = inst.layout()
    rng = np.random.default_rng(seed)
    M = rng.random((lay.num_edges, 3))
    return M / M.sum(axis=1)[:, None]


def grouped_uniform_R(inst: Instance) -> np.ndarray:
    """Variable-to-factor triples matching uniform per-state messages on the
    explicit extended graph: proportional to the pruned group sizes
    (2^|same|, 2^|opp| - 1, 2^|same|)."""
    lay = inst.layout()
    pos_deg = np.array([len(a) for a in inst.pos_adj])
    neg_deg = np.array([len(a) for a in inst.neg_adj])
    same_deg = lay.gather_same(pos_deg, neg_deg) - 1
    opp_deg = lay.gather_opp(pos_deg, neg_deg)
    raw = np.empty((lay.num_edges, 3))
    raw[:, S] = 2.0**same_deg
    raw[:, U] = 2.0**opp_deg - 1.0
    raw[:, ST] = 2.0**same_deg
    return raw / raw.sum(axis=1)[:, None]


def rsp_run(inst: Instance, cfg: RspConfig, M0: np.ndarray | None = None) -> RspResult:
    """Alternate full variable-side and factor-side sweeps from a seeded
    random initialisation until the largest triple change falls below the
    schedule tolerance.  Non-convergence is reported, not raised; one damped
    retry is attempted when the undamped run fails."""
    if cfg.schedule.mode != "synchronous":
        raise ValueError("rsp_run uses the synchronous two-phase schedule")
    lay = inst.layout()
    if M0 is None:
        M0 = random_message_state(inst, substream(cfg.schedule.seed, "rsp-init"))

    def _iterate(damping: float) -> RspResult:
        M = M0.copy()
        R = np.full((lay.num_edges, 3), 1.0 / 3.0)
        sweeps = 0
        for sweeps in range(1, cfg.schedule.max_sweeps + 1):
            R_new = rsp_var_sweep(inst, M)
            if damping > 0:
                R_new = _normalize_rows((1 - damping) * R_new + damping * R, "variable-to-factor", lay)
            M_new = rsp_factor_sweep(inst, R_new, cfg.y)
            if damping > 0:
                M_new = _normalize_rows((1 - damping) * M_new + damping * M, "factor-to-variable", lay)
            change = max(
                float(np.abs(R_new - R).max(initial=0.0)),
                float(np.abs(M_new - M).max(initial=0.0)),
            )
            M, R = M_new, R_new
            if change < cfg.schedule.tol:
                return RspResult(True, sweeps, M, R, rsp_beliefs(inst, M))
        return RspResult(False, sweeps, M, R, rsp_beliefs(inst, M))

    res = _iterate(cfg.schedule.damping)
    if not res.converged and cfg.retry_damping is not None and cfg.schedule.damping == 0.0:
        res = _iterate(cfg.retry_damping)
    return res


def degeneracy_report(inst: Instance, x: Sequence[int]) -> tuple[np.ndarray, bool]:
    """Peel an assignment to its cover-like fixpoint; degenerate means the
    result kept every variable at -1/+1 (no stars)."""
    cover = inst.peel(x)
    return cover, bool((cover != STAR).all())


@dataclass
class RspRound:
    y: float
    sweeps: int
    converged: bool
    fixed: int
    offset: float


@dataclass
class RspDecimateResult:
    assignment: np.ndarray
    energy: float
    rounds: list[RspRound] = field(default_factory=list)
    fixed_total: int = 0
    walksat_vars: int = 0
    cover: np.ndarray | None = None
    degenerate: bool = False


def rsp_decimate(
    inst: Instance,
    cfg: RspConfig,
    walksat_cfg: WalkSatConfig | None = None,
) -> RspDecimateResult:
    """Decimation driver: run RSP at the current y; on convergence fix the
    top-k variables with belief gap |B(+1) - B(-1)| > b_min and simplify; on
    non-convergence lower y (weighted adaptive mode) or hand the remainder to
    WalkSAT; finish with (weighted) WalkSAT and a greedy polish."""
    seed = cfg.schedule.seed
    fixes: dict[int, int] = {}
    current = inst
    embed = list(range(inst.num_vars))
    rounds: list[RspRound] = []
    y = cfg.y
    round_no = 0
    attempt = 0
    remainder: np.ndarray | None = None
    walksat_vars = 0

    while True:
        if current.num_clauses == 0 or current.num_vars == 0:
            remainder = np.ones(current.num_vars, dtype=np.int8)
            break
        run_cfg = RspConfig(
            y=y,
            schedule=Schedule(
                mode="synchronous",
                damping=cfg.schedule.damping,
                max_sweeps=cfg.schedule.max_sweeps,
                tol=cfg.schedule.tol,
                seed=substream(seed, f"round/{round_no}/try/{attempt}"),
            ),
            k=cfg.k,
            b_min=cfg.b_min,
            retry_damping=cfg.retry_damping,
        )
        try:
            res = rsp_run(current, run_cfg)
        except DegeneracyError:
            res = None
        if res is not None and res.converged:
            gap = np.abs(res.beliefs[:, 1] - res.beliefs[:, 0])
            eligible = np.nonzero(gap > cfg.b_min)[0]
            order = eligible[np.lexsort((eligible, -gap[eligible]))]
            chosen = order[: cfg.k]
            rounds.append(RspRound(y, res.sweeps, True, len(chosen), 0.0))
            if len(chosen) == 0:
                break
            local = {
                int(i): (+1 if res.beliefs[i, 1] > res.beliefs[i, 0] else -1)
                for i in chosen
            }
            for i, val in local.items():
                fixes[embed[i]] = val
            sim = current.simplify(local)
            rounds[-1].offset = sim.offset
            embed = [embed[old] for old in sim.kept_vars]
            current = sim.instance
            round_no += 1
            attempt = 0
        else:
            sweeps = res.sweeps if res is not None else 0
            rounds.append(RspRound(y, sweeps, False, 0, 0.0))
            if cfg.adapt_y:
                y = y - 1.0 if y >= 1.0 else y / 2.0
                attempt += 1
                if y < cfg.y_floor:
                    break
                continue
            break

    if remainder is None:
        walksat_vars = current.num_vars
        base = walksat_cfg if walksat_cfg is not None else WalkSatConfig(weighted=inst.is_weighted)
        ws_cfg = WalkSatConfig(
            noise=base.noise,
            max_flips=base.max_flips,
            tries=base.tries,
            seed=substream(base.seed ^ current.stable_hash(), "walksat"),
            weighted=base.weighted,
        )
        remainder = walksat(current, ws_cfg).assignment

    full = np.ones(inst.num_vars, dtype=np.int8)
    for i, orig in enumerate(embed):
        full[orig] = remainder[i]
    for orig, val in fixes.items():
        full[orig] = val
    full = polish(inst, full)
    energy = inst.energy(full)
    cover, degenerate = degeneracy_report(inst, full)
    return RspDecimateResult(
        assignment=full,
        energy=energy,
        rounds=rounds,
        fixed_total=len(fixes),
        walksat_vars=walksat_vars,
        cover=cover,
        degenerate=degenerate,
    )
