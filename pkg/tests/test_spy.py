import itertools

import numpy as np
import pytest

from satprop.bp import Schedule
from satprop.instance import Instance
from satprop.io import GeneratorConfig, generate
from satprop.localsearch import WalkSatConfig
from satprop.oracle import brute_min_energy
from satprop.sp import sp_run, sp_sweep
from satprop.spy import (
    field_distribution,
    sid_backtrack,
    spy_biases,
    spy_cavity_masses,
    spy_run,
    spy_sweep,
    tri_components,
)


def _chain_instance(pushes):
    """One centre variable (index 0) warned by unit-adjacent clauses whose
    satisfying values for it are given by `pushes`."""
    lits = []
    for t, p in enumerate(pushes):
        lits.append((1.0, [1 if p > 0 else -1, t + 2]))
    return Instance.from_lits(len(pushes) + 1, lits)


def test_field_distribution_no_neighbors():
    inst = Instance.from_lits(2, [(1.0, [1, 2])])
    fd = field_distribution(inst, 0, 0, np.zeros(2), y=1.0)
    assert fd.prob(0) == 1.0 and fd.w_plus == 0.0 and fd.w_minus == 0.0


def test_field_distribution_single_silent_edge():
    inst = _chain_instance([+1])
    warn = np.zeros(inst.layout().num_edges)
    fd = field_distribution(inst, 0, None, warn, y=1.0)
    assert fd.prob(0) == 1.0


def test_field_distribution_matches_combination_enumeration():
    # oracle: sum over firing subsets of prod(eta / 1-eta) with the net
    # penalty exp(-2y min(#up, #dn)) landing at h = #up - #dn
    rng = np.random.default_rng(2)
    y = 0.6
    for d in range(1, 5):
        for pushes in itertools.product([+1, -1], repeat=d):
            inst = _chain_instance(pushes)
            lay = inst.layout()
            warn = np.zeros(lay.num_edges)
            centre_edges = [e for e in range(lay.num_edges) if lay.edge_var[e] == 0]
            etas = rng.random(d)
            for e, eta in zip(centre_edges, etas):
                warn[e] = eta
            fd = field_distribution(inst, 0, None, warn, y)
            expected = {}
            for fire in itertools.product([0, 1], repeat=d):
                p = np.prod([eta if f else 1 - eta for f, eta in zip(fire, etas)])
                up = sum(1 for f, push in zip(fire, pushes) if f and push > 0)
                dn = sum(1 for f, push in zip(fire, pushes) if f and push < 0)
                w = p * np.exp(-2 * y * min(up, dn))
                expected[up - dn] = expected.get(up - dn, 0.0) + w
            z = sum(expected.values())
            for h, w in expected.items():
                assert fd.prob(h) == pytest.approx(w / z, abs=1e-12)


def test_net_penalty_is_min_rule_all_orders():
    # with every warning firing, the accumulated reweighting equals
    # exp(-2y min(#up, #dn)) regardless of the interleaving
    y = 0.8
    for d in range(1, 6):
        for pushes in itertools.product([+1, -1], repeat=d):
            for order in set(itertools.permutations(pushes)):
                inst = _chain_instance(order)
                lay = inst.layout()
                warn = np.ones(lay.num_edges)
                from satprop.spy import _convolve

                probs, h_min = np.array([1.0]), 0
                for e in [e for e in range(lay.num_edges) if lay.edge_var[e] == 0]:
                    probs, h_min = _convolve(probs, h_min, 1.0, int(lay.edge_sat[e]), y)
                up = sum(1 for p in order if p > 0)
                assert probs.sum() == pytest.approx(
                    np.exp(-2 * y * min(up, d - up)), rel=1e-12
                )


def test_tri_survey_one_sidedness():
    inst = generate(GeneratorConfig(num_vars=10, clause_ratio=2.5, seed=4))
    warn = np.random.default_rng(1).random(inst.layout().num_edges)
    for e in range(inst.layout().num_edges):
        plus, minus, zero = tri_components(inst, warn, e)
        assert min(plus, minus) == 0.0
        assert plus + minus + zero == pytest.approx(1.0)


def test_all_silent_input_stays_silent():
    inst = generate(GeneratorConfig(num_vars=15, clause_ratio=3.0, seed=9))
    warn = np.zeros(inst.layout().num_edges)
    new, change = spy_sweep(inst, warn, y=2.0)
    assert change == 0.0 and (new == 0.0).all()


def test_numba_cavity_matches_reference():
    inst = generate(GeneratorConfig(num_vars=12, clause_ratio=3.0, seed=6))
    lay = inst.layout()
    warn = np.random.default_rng(3).random(lay.num_edges)
    y = 1.4
    w_plus, w_minus, full_wp, full_wm = spy_cavity_masses(inst, warn, y)
    for e in range(lay.num_edges):
        fd = field_distribution(inst, int(lay.edge_var[e]), int(lay.edge_clause[e]), warn, y)
        assert w_plus[e] == pytest.approx(fd.w_plus, abs=1e-12)
        assert w_minus[e] == pytest.approx(fd.w_minus, abs=1e-12)
    for j in range(inst.num_vars):
        fd = field_distribution(inst, j, None, warn, y)
        assert full_wp[j] == pytest.approx(fd.w_plus, abs=1e-12)
        assert full_wm[j] == pytest.approx(fd.w_minus, abs=1e-12)


def test_large_y_matches_plain_survey_propagation():
    inst = generate(GeneratorConfig(num_vars=80, clause_ratio=3.2, seed=5))
    lay = inst.layout()
    eta = np.random.default_rng(7).random(lay.num_edges)
    warn = eta.copy()
    for _ in range(40):
        eta, _ = sp_sweep(inst, eta)
        warn, _ = spy_sweep(inst, warn, y=30.0)
        assert np.abs(eta - warn).max() < 1e-9


def test_biases_isolated_and_symmetric():
    inst = Instance.from_lits(3, [(1.0, [2, 3])])  # variable 1 is isolated
    warn = np.full(inst.layout().num_edges, 0.4)
    b = spy_biases(inst, warn, y=1.0)
    assert b[0, 0] == 0.0 and b[0, 1] == 0.0
    # mirror-image neighbourhoods with equal warnings are unbiased
    inst2 = Instance.from_lits(3, [(1.0, [1, 2]), (1.0, [-1, 3])])
    warn2 = np.full(inst2.layout().num_edges, 0.6)
    b2 = spy_biases(inst2, warn2, y=0.7)
    assert b2[0, 0] == pytest.approx(b2[0, 1])


def test_bias_stability_across_seeds(ex1):
    ref = None
    for seed in range(20):
        res = spy_run(ex1, 2.0, Schedule(tol=1e-12, max_sweeps=20_000, damping=0.5, seed=seed))
        assert res.converged
        b = spy_biases(ex1, res.warn, 2.0)
        if ref is None:
            ref = b
        else:
            assert np.abs(b - ref).max() < 1e-4


def test_backtrack_zero_rate_is_plain_decimation():
    inst = generate(GeneratorConfig(num_vars=40, clause_ratio=3.0, seed=10))
    res = sid_backtrack(inst, k=5, y=2.0, r=0.0, schedule=Schedule(tol=1e-4, seed=2))
    assert all(r.action in ("fix", "stop") for r in res.rounds)


def test_backtrack_result_bounded_by_oracle():
    inst = generate(GeneratorConfig(num_vars=14, clause_ratio=4.0, seed=13))
    m, _ = brute_min_energy(inst)
    res = sid_backtrack(
        inst, k=3, y=2.0, r=0.2, schedule=Schedule(tol=1e-4, seed=3), walksat_cfg=WalkSatConfig(seed=3)
    )
    assert res.energy >= m
    assert res.energy == inst.energy(res.assignment)


def test_backtrack_rejects_weighted():
    inst = Instance.from_lits(2, [(2.0, [1, 2])])
    with pytest.raises(ValueError):
        sid_backtrack(inst)


@pytest.mark.slow
def test_backtrack_maxsat_regime_large():
    inst = generate(GeneratorConfig(num_vars=10_000, clause_ratio=4.7, seed=70))
    best = np.inf
    for y in (1.0, 2.0, 3.0):
        res = sid_backtrack(
            inst, k=100, y=y, r=0.2, schedule=Schedule(tol=1e-3, seed=4), walksat_cfg=WalkSatConfig(seed=4)
        )
        best = min(best, res.energy)
    assert best <= 150
