"""Finite absorbing Markov chains and the sparse direct solves behind every exact quantity."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class MeasureVector:
    """Nonnegative weights on a labelled support, tagged with how they were obtained."""

    support: tuple
    weights: np.ndarray
    method: str
    error_estimate: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.support) != len(self.weights):
            raise ValueError("support and weights differ in length")

    def __getitem__(self, label) -> float:
        label = tuple(label) if isinstance(label, (list, np.ndarray)) else label
        return float(self.weights[self.support.index(label)])

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.weights.tolist()))

    def total(self) -> float:
        return float(self.weights.sum())

    def to_json(self) -> dict:
        return {
            "support": [list(s) if isinstance(s, tuple) else s for s in self.support],
            "weights": self.weights.tolist(),
            "method": self.method,
            "error_estimate": self.error_estimate,
            **({"info": self.info} if self.info else {}),
        }


def factorize(M: sp.spmatrix):
    """Sparse LU without row pivoting on a symmetric ordering.

    The systems here are nonsingular M-matrices, for which pivoting is not
    needed, and skipping it keeps forward/back substitution free of
    cancellation so that very small solution entries stay accurate.
    """
    return spla.splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                     options={"SymmetricMode": True})


def solve_refined(M, lu, B, rtol: float = 1e-12, max_iter: int = 3):
    """Direct solve plus iterative refinement until the residual is below rtol * row norm."""
    B = np.asarray(B, dtype=float)
    X = lu.solve(B)
    rownorm = float(abs(M).sum(axis=1).max())
    for _ in range(max_iter):
        R = B - M @ X
        scale = rownorm * max(float(np.abs(X).max()), 1e-300)
        res = float(np.abs(R).max()) / scale
        if res < rtol:
            return X, res
        X = X + lu.solve(R)
    R = B - M @ X
    return X, float(np.abs(R).max()) / (rownorm * max(float(np.abs(X).max()), 1e-300))


class AbsorbingChain:
    """Transient block Q and absorption block R; every transient row of [Q R] sums to one."""

    def __init__(self, transient: Sequence[Hashable], absorbing: Sequence[Hashable],
                 Q: sp.spmatrix, R: sp.spmatrix, check: bool = True):
        self.transient = list(transient)
        self.absorbing = list(absorbing)
        self.Q = sp.csr_matrix(Q)
        self.R = sp.csr_matrix(R)
        nT, nA = len(self.transient), len(self.absorbing)
        if self.Q.shape != (nT, nT) or self.R.shape != (nT, nA):
            raise ValueError("block shapes do not match the state lists")
        if check:
            rows = np.asarray(self.Q.sum(axis=1)).ravel() + np.asarray(self.R.sum(axis=1)).ravel()
            if nT and np.abs(rows - 1.0).max() > 1e-12:
                raise ValueError("transient rows are not stochastic")
            if (self.Q.data < 0).any() or (self.R.data < 0).any():
                raise ValueError("negative transition mass")
        self._t_index = None
        self._a_index = None
        self._lu = None
        self._M = None

    @classmethod
    def from_graph(cls, states, edges, absorbing) -> "AbsorbingChain":
        """Simple random walk on an undirected multigraph given as an edge list.

        ``edges`` holds (u, v) or (u, v, multiplicity); loops are ignored.
        """
        absorbing = list(absorbing)
        aset = set(absorbing)
        transient = [s for s in states if s not in aset]
        t_idx = {s: i for i, s in enumerate(transient)}
        a_idx = {s: i for i, s in enumerate(absorbing)}
        deg = {s: 0.0 for s in states}
        adj = []
        for e in edges:
            u, v = e[0], e[1]
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                continue
            deg[u] += w
            deg[v] += w
            adj.append((u, v, w))
            adj.append((v, u, w))
        qr, qc, qv, rr, rc, rv = [], [], [], [], [], []
        for u, v, w in adj:
            if u not in t_idx:
                continue
            p = w / deg[u]
            if v in t_idx:
                qr.append(t_idx[u]); qc.append(t_idx[v]); qv.append(p)
            else:
                rr.append(t_idx[u]); rc.append(a_idx[v]); rv.append(p)
        nT, nA = len(transient), len(absorbing)
        Q = sp.csr_matrix((qv, (qr, qc)), shape=(nT, nT))
        R = sp.csr_matrix((rv, (rr, rc)), shape=(nT, nA))
        return cls(transient, absorbing, Q, R)

    # index helpers -------------------------------------------------------
    def t_index(self, s) -> int:
        if self._t_index is None:
            self._t_index = {x: i for i, x in enumerate(self.transient)}
        return self._t_index[s]

    def a_index(self, s) -> int:
        if self._a_index is None:
            self._a_index = {x: i for i, x in enumerate(self.absorbing)}
        return self._a_index[s]

    def is_transient(self, s) -> bool:
        try:
            self.t_index(s)
            return True
        except KeyError:
            return False

    # linear algebra ------------------------------------------------------
    @property
    def M(self) -> sp.csc_matrix:
        if self._M is None:
            n = len(self.transient)
            self._M = sp.csc_matrix(sp.identity(n) - self.Q)
        return self._M

    def lu(self):
        if self._lu is None:
            self._lu = factorize(self.M)
        return self._lu

    def solve(self, B):
        return solve_refined(self.M, self.lu(), B)

    def solve_transposed(self, B):
        """Solve (I - Q)^T X = B."""
        B = np.asarray(B, dtype=float)
        X = self.lu().solve(B, trans="T")
        R = B - self.M.T @ X
        return X, float(np.abs(R).max()) / max(float(np.abs(X).max()), 1e-300)

    def absorption_probabilities(self, targets: Sequence | None = None):
        """Matrix h[x, a] = P_x(absorbed at a) for the requested absorbing states."""
        cols = range(len(self.absorbing)) if targets is None else [self.a_index(t) for t in targets]
        B = self.R[:, list(cols)].toarray()
        return self.solve(B)

    def green_row(self, x):
        """Expected visits G(x, .) to every transient state before absorption."""
        e = np.zeros(len(self.transient))
        e[self.t_index(x)] = 1.0
        return self.solve_transposed(e)

    def green_column(self, y):
        """Expected visits G(., y) from every transient state."""
        e = np.zeros(len(self.transient))
        e[self.t_index(y)] = 1.0
        return self.solve(e)

    def to_json(self) -> dict:
        coo_q = self.Q.tocoo()
        coo_r = self.R.tocoo()
        lab = lambda s: list(s) if isinstance(s, tuple) else s
        edges = [[lab(self.transient[i]), lab(self.transient[j]), float(p)]
                 for i, j, p in zip(coo_q.row, coo_q.col, coo_q.data)]
        edges += [[lab(self.transient[i]), lab(self.absorbing[j]), float(p)]
                  for i, j, p in zip(coo_r.row, coo_r.col, coo_r.data)]
        return {
            "states": [lab(s) for s in self.transient + self.absorbing],
            "edges": edges,
            "absorbing": [lab(s) for s in self.absorbing],
        }


def chain_hitting(chain: AbsorbingChain, start) -> MeasureVector:
    """Absorption distribution of the chain started at ``start``."""
    support = tuple(chain.absorbing)
    if not chain.is_transient(start):
        w = np.zeros(len(support))
        w[chain.a_index(start)] = 1.0
        return MeasureVector(support, w, "chain", 0.0)
    u, res = chain.green_row(start)
    w = chain.R.T @ u
    return MeasureVector(support, np.asarray(w).ravel(), "chain", res)


class LatticeChain(AbsorbingChain):
    """Simple random walk on a finite domain of Z^d, absorbed on leaving it or on a killed set.

    Transient states are domain points not in ``killed``. Each absorbing state is
    a single lattice point: either a killed point or an exterior point adjacent
    to the domain (``exterior`` flags the latter).
    """

    def __init__(self, d, transient_pts, absorbing_pts, exterior, Q, R, lo, shape, t_lookup):
        self.d = d
        self.transient_pts = transient_pts
        self.absorbing_pts = absorbing_pts
        self.exterior = exterior
        self._lo = lo
        self._shape = shape
        self._t_lookup = t_lookup
        super().__init__(_Rows(transient_pts), _Rows(absorbing_pts), Q, R, check=False)

    def t_index(self, s) -> int:
        idx = tuple(int(c) - l for c, l in zip(s, self._lo))
        if any(i < 0 or i >= n for i, n in zip(idx, self._shape)):
            raise KeyError(s)
        k = int(self._t_lookup[idx])
        if k < 0:
            raise KeyError(s)
        return k

    def a_index(self, s) -> int:
        if self._a_index is None:
            self._a_index = {tuple(int(c) for c in p): i for i, p in enumerate(self.absorbing_pts)}
        return self._a_index[tuple(int(c) for c in s)]

    def exterior_mass(self) -> np.ndarray:
        """One-step probability of leaving the domain from each transient state."""
        return np.asarray(self.R[:, np.flatnonzero(self.exterior)].sum(axis=1)).ravel()


class _Rows(Sequence):
    """Read-only view of an (N, d) point array as a sequence of tuples."""

    def __init__(self, arr):
        self.arr = arr

    def __len__(self):
        return len(self.arr)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [tuple(int(c) for c in r) for r in self.arr[i]]
        return tuple(int(c) for c in self.arr[i])

    def __add__(self, other):
        return list(self) + list(other)


def lattice_chain(domain_pts, killed=(), d: int | None = None) -> LatticeChain:
    """Build the killed simple random walk on a finite domain.

    ``domain_pts`` is an (N, d) integer array (or iterable of points); ``killed``
    points inside the domain become absorbing.
    """
    dom = np.asarray(list(domain_pts) if not isinstance(domain_pts, np.ndarray) else domain_pts,
                     dtype=np.int64)
    if d is None:
        d = dom.shape[1]
    dom = dom.reshape(-1, d)
    lo = dom.min(0) - 1
    hi = dom.max(0) + 1
    shape = tuple(int(v) for v in hi - lo + 1)
    in_dom = np.zeros(shape, dtype=bool)
    in_dom[tuple((dom - lo).T)] = True
    kill = np.zeros(shape, dtype=bool)
    kp = np.asarray(list(killed), dtype=np.int64).reshape(-1, d)
    if len(kp):
        kidx = kp - lo
        ok = np.all((kidx >= 0) & (kidx < np.array(shape)), axis=1)
        kidx = kidx[ok]
        kill[tuple(kidx.T)] = in_dom[tuple(kidx.T)]
    trans = in_dom & ~kill
    t_lookup = np.full(shape, -1, dtype=np.int64)
    t_idx = np.flatnonzero(trans.ravel())
    t_lookup.ravel()[t_idx] = np.arange(len(t_idx))
    t_coords = np.array(np.unravel_index(t_idx, shape)).T

    rows_q, cols_q, rows_a, lin_a = [], [], [], []
    p = 1.0 / (2 * d)
    for axis in range(d):
        for s in (1, -1):
            nb = t_coords.copy()
            nb[:, axis] += s
            lin = np.ravel_multi_index(tuple(nb.T), shape)
            tgt = t_lookup.ravel()[lin]
            src = np.arange(len(t_idx))
            m = tgt >= 0
            rows_q.append(src[m]); cols_q.append(tgt[m])
            rows_a.append(src[~m]); lin_a.append(lin[~m])
    rows_q = np.concatenate(rows_q); cols_q = np.concatenate(cols_q)
    rows_a = np.concatenate(rows_a); lin_a = np.concatenate(lin_a)
    a_lin, a_col = np.unique(lin_a, return_inverse=True)
    nT, nA = len(t_idx), len(a_lin)
    Q = sp.csr_matrix((np.full(len(rows_q), p), (rows_q, cols_q)), shape=(nT, nT))
    R = sp.csr_matrix((np.full(len(rows_a), p), (rows_a, a_col)), shape=(nT, nA))
    a_coords = np.array(np.unravel_index(a_lin, shape)).T
    exterior = ~in_dom.ravel()[a_lin]
    return LatticeChain(d, t_coords + lo, a_coords + lo, exterior, Q, R,
                        tuple(int(v) for v in lo), shape, t_lookup)
