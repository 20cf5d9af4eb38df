"""Flat edge indexing plus bucketed segment products for vectorised sweeps.

The canonical edge order enumerates clause members clause by clause.  Sweeps
need three kinds of reductions over that layout: products over a clause's
other members, products over a variable's other same-sign edges, and full
products over each variable's positive/negative edge sets.  Segments of equal
length are gathered into dense matrices once, so every reduction is a handful
of numpy calls with no zero-unsafe divisions.
"""

from __future__ import annotations

import numpy as np


class _Buckets:
    def __init__(self, rows: list[np.ndarray]):
        by_len: dict[int, list[np.ndarray]] = {}
        for ids in rows:
            if len(ids):
                by_len.setdefault(len(ids), []).append(ids)
        self.buckets = [
            (d, np.array(group, dtype=np.int64)) for d, group in sorted(by_len.items())
        ]

    def excl_prod(self, values: np.ndarray, out: np.ndarray) -> np.ndarray:
        """out[e] = product of values over e's row excluding e itself."""
        for d, idx in self.buckets:
            V = values[idx]
            if d == 1:
                out[idx[:, 0]] = 1.0
                continue
            pre = np.ones_like(V)
            np.cumprod(V[:, :-1], axis=1, out=pre[:, 1:])
            suf = np.ones_like(V)
            suf[:, :-1] = np.cumprod(V[:, :0:-1], axis=1)[:, ::-1]
            out[idx] = pre * suf
        return out

    def pair_sum(self, d_values: np.ndarray, u_values: np.ndarray, out: np.ndarray) -> np.ndarray:
        """out[e] = sum over row-mates k of d[k] * prod(u over row minus {e, k})."""
        for d, idx in self.buckets:
            D = d_values[idx]
            U = u_values[idx]
            if d == 1:
                out[idx[:, 0]] = 0.0
                continue
            A = np.zeros_like(D)
            cols = list(range(d))
            for i in cols:
                acc = np.zeros(len(idx))
                for k in cols:
                    if k == i:
                        continue
                    rest = [j for j in cols if j != i and j != k]
                    prod = np.prod(U[:, rest], axis=1) if rest else 1.0
                    acc += D[:, k] * prod
                A[:, i] = acc
            out[idx] = A
        return out


class EdgeLayout:
    """Precomputed arrays describing the clause-variable incidence."""

    def __init__(self, inst):
        edge_var: list[int] = []
        edge_sat: list[int] = []
        clause_ptr = [0]
        weights = []
        for cl in inst.clauses:
            edge_var.extend(cl.vars)
            edge_sat.extend(cl.sat_vals)
            clause_ptr.append(len(edge_var))
            weights.append(cl.weight)
        self.num_vars = inst.num_vars
        self.num_clauses = inst.num_clauses
        self.num_edges = len(edge_var)
        self.edge_var = np.array(edge_var, dtype=np.int64)
        self.edge_sat = np.array(edge_sat, dtype=np.int8)
        self.clause_ptr = np.array(clause_ptr, dtype=np.int64)
        self.clause_weight = np.array(weights, dtype=np.float64)
        self.edge_clause = np.repeat(
            np.arange(self.num_clauses, dtype=np.int64), np.diff(self.clause_ptr)
        )
        self.edge_pos = self.edge_sat == +1

        self._clause_rows = _Buckets(
            [np.arange(self.clause_ptr[c], self.clause_ptr[c + 1]) for c in range(self.num_clauses)]
        )
        pos_rows: list[list[int]] = [[] for _ in range(self.num_vars)]
        neg_rows: list[list[int]] = [[] for _ in range(self.num_vars)]
        for e in range(self.num_edges):
            (pos_rows if edge_sat[e] == +1 else neg_rows)[edge_var[e]].append(e)
        self._pos_rows = [np.array(r, dtype=np.int64) for r in pos_rows]
        self._neg_rows = [np.array(r, dtype=np.int64) for r in neg_rows]
        self._sign_rows = _Buckets(self._pos_rows + self._neg_rows)

        def _flatten(rows):
            owners = np.array([i for i, r in enumerate(rows) if len(r)], dtype=np.int64)
            order = np.concatenate([r for r in rows if len(r)]) if len(owners) else np.empty(0, np.int64)
            starts = np.cumsum([0] + [len(rows[i]) for i in owners[:-1]]) if len(owners) else np.empty(0, np.int64)
            return owners, order, starts.astype(np.int64)

        self._pos_flat = _flatten(self._pos_rows)
        self._neg_flat = _flatten(self._neg_rows)
        self.var_pos_deg = np.array([len(r) for r in self._pos_rows], dtype=np.int64)
        self.var_neg_deg = np.array([len(r) for r in self._neg_rows], dtype=np.int64)

    # -- reductions --------------------------------------------------------

    def clause_excl_prod(self, values: np.ndarray) -> np.ndarray:
        return self._clause_rows.excl_prod(values, np.ones(self.num_edges))

    def clause_pair_sum(self, d_values: np.ndarray, u_values: np.ndarray) -> np.ndarray:
        return self._clause_rows.pair_sum(d_values, u_values, np.zeros(self.num_edges))

    def sign_excl_prod(self, values: np.ndarray) -> np.ndarray:
        """Product over the edge's variable's other edges of the same sign."""
        return self._sign_rows.excl_prod(values, np.ones(self.num_edges))

    def var_sign_full_prod(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-variable products over all positive / all negative edges."""
        pos = np.ones(self.num_vars)
        neg = np.ones(self.num_vars)
        for (owners, order, starts), out in ((self._pos_flat, pos), (self._neg_flat, neg)):
            if len(owners):
                out[owners] = np.multiply.reduceat(values[order], starts)
        return pos, neg

    def gather_opp(self, pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
        """Per edge, the per-variable value for the sign opposite the edge's."""
        return np.where(self.edge_pos, neg[self.edge_var], pos[self.edge_var])

    def gather_same(self, pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
        return np.where(self.edge_pos, pos[self.edge_var], neg[self.edge_var])
