"""Exhaustive vertex enumeration of the coupling polytope for small n.

Joint entropy is concave, so its minimum over all couplings is attained at
a vertex. Listing every vertex gives the exact minimum and a ground truth
for the descent.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from minent.coupling import (
    Coupling,
    PermutationPair,
    find_order_preserving_equivalent,
    independent,
    joint_entropy,
    nw_matrix,
)
from minent.instances import all_permutations, random_simplex
from minent.probcore import (
    Base,
    EntropyValue,
    ProbVector,
    as_prob_vector,
    entropy,
    meet,
    normalize_base,
    one_bit,
    sort_desc,
)

DEFAULT_N_LIMIT = 6
DEDUP_TOL = 1e-9
MIN_TIE_TOL = 1e-9
LEX_TOL = 1e-12


class SizeLimitError(ValueError):
    pass


@dataclass
class VertexSet:
    """Distinct vertices, as a ``(V, n, n)`` array in lexicographic order."""

    vertices: np.ndarray
    p: ProbVector
    q: ProbVector

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def couplings(self) -> list:
        return [Coupling(v) for v in self.vertices]

    def entropies(self, base: Base = 2) -> np.ndarray:
        V = self.vertices.reshape(len(self.vertices), -1)
        log = np.log2 if normalize_base(base) == "2" else np.log
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(V > 0, -V * log(np.where(V > 0, V, 1.0)), 0.0)
        return np.maximum(terms.sum(axis=1), 0.0)


def _lex_less(x: tuple, y: tuple) -> bool:
    d = x[0] - y[0]
    if d < -LEX_TOL:
        return True
    if d > LEX_TOL:
        return False
    return x[1] < y[1]


def _sub(x: tuple, y: tuple) -> tuple:
    return (x[0] - y[0], x[1] - y[1])


def _add(x: tuple, y: tuple) -> tuple:
    return (x[0] + y[0], x[1] + y[1])


def _pivot_bases(a: list, b: list) -> list:
    """All feasible bases of the perturbed transportation problem.

    Quantities are pairs ``(value, k)`` meaning ``value + k * eps`` for an
    infinitesimal ``eps``: every row mass gets ``+eps`` and the last column
    gets ``+m * eps``. No basic variable of the perturbed problem is zero,
    so bases and vertices correspond one to one and the pivot graph is
    connected; a depth-first walk over it from the northwest-corner basis
    visits every basis. Each basis is a spanning tree on ``m + n`` nodes
    (rows ``0..m-1``, columns ``m..m+n-1``) stored as ``{(i, j): value}``.
    """
    m, n = len(a), len(b)
    r = [(x, 1) for x in a]
    c = [(x, 0) for x in b]
    c[-1] = (b[-1], m)

    basis = {}
    i = j = 0
    while i < m and j < n:
        if _lex_less(r[i], c[j]):
            basis[(i, j)] = r[i]
            c[j] = _sub(c[j], r[i])
            i += 1
        else:
            basis[(i, j)] = c[j]
            r[i] = _sub(r[i], c[j])
            j += 1
    if len(basis) != m + n - 1:
        raise RuntimeError("perturbed northwest-corner basis is degenerate")

    N = m + n
    seen = {frozenset(basis)}
    stack = [basis]
    found = []
    while stack:
        B = stack.pop()
        found.append(B)
        adj = [[] for _ in range(N)]
        for (i, j) in B:
            adj[i].append(m + j)
            adj[m + j].append(i)
        parent = [-1] * N
        depth = [0] * N
        parent[0] = 0
        order = [0]
        for u in order:
            for w in adj[u]:
                if parent[w] == -1:
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    order.append(w)
        for i in range(m):
            for j in range(n):
                if (i, j) in B:
                    continue
                # tree path between row node i and column node m + j
                u, v = i, m + j
                up, vp = [u], [v]
                while depth[u] > depth[v]:
                    u = parent[u]
                    up.append(u)
                while depth[v] > depth[u]:
                    v = parent[v]
                    vp.append(v)
                while u != v:
                    u, v = parent[u], parent[v]
                    up.append(u)
                    vp.append(v)
                nodes = vp + up[-2::-1]  # column j ... row i
                cells = [
                    (y, x - m) if x >= m else (x, y - m) for x, y in zip(nodes, nodes[1:])
                ]
                # entering (i, j) gains; cycle cells alternate lose, gain
                minus, plus = cells[0::2], cells[1::2]
                leave = minus[0]
                for cell in minus[1:]:
                    if _lex_less(B[cell], B[leave]):
                        leave = cell
                key = frozenset(B) - {leave} | {(i, j)}
                if key in seen:
                    continue
                seen.add(key)
                theta = B[leave]
                NB = dict(B)
                del NB[leave]
                NB[(i, j)] = theta
                for cell in minus:
                    if cell != leave:
                        NB[cell] = _sub(B[cell], theta)
                for cell in plus:
                    NB[cell] = _add(B[cell], theta)
                stack.append(NB)
    return found


def enumerate_vertices(p, q, n_limit: int = DEFAULT_N_LIMIT) -> VertexSet:
    """All vertices of the polytope of couplings of ``p`` and ``q``.

    Walks the simplex pivot graph of a lexicographically perturbed problem
    (so degenerate marginals need no special casing), drops the
    perturbation and deduplicates on a 1e-9 grid. Zero-mass rows and
    columns are set aside first; they are empty in every coupling.
    """
    pv, qv = as_prob_vector(p), as_prob_vector(q)
    n = pv.n
    if qv.n != n:
        raise ValueError(f"size mismatch: {n} vs {qv.n}")
    if n > n_limit:
        raise SizeLimitError(f"n={n} exceeds the enumeration limit {n_limit}")
    rows = [i for i in range(n) if pv[i] > 0]
    cols = [j for j in range(n) if qv[j] > 0]
    scale = 1.0 / DEDUP_TOL
    merged = {}
    for B in _pivot_bases([float(pv[i]) for i in rows], [float(qv[j]) for j in cols]):
        W = np.zeros((n, n))
        for (i, j), (x, _) in B.items():
            W[rows[i], cols[j]] = x if x > LEX_TOL else 0.0
        merged.setdefault(tuple(np.rint(W.ravel() * scale).astype(np.int64).tolist()), W)
    V = np.array(list(merged.values())).reshape(-1, n, n)
    order = np.lexsort(V.reshape(len(V), -1).T[::-1])
    return VertexSet(V[order], pv, qv)


def _nw_chunk(args) -> dict:
    p, q, row_perms, col_perms = args
    n = len(p)
    found = {}
    for s in row_perms:
        for u in col_perms:
            W = np.zeros((n, n))
            W[np.ix_(s, u)] = nw_matrix([p[i] for i in s], [q[j] for j in u])
            found.setdefault(tuple(np.rint(W.ravel() / DEDUP_TOL).astype(np.int64).tolist()), W)
    return found


def enumerate_nw_vertices(p, q, n_limit: int = DEFAULT_N_LIMIT, workers: int = 1) -> VertexSet:
    """Northwest-corner fills under all ``n!**2`` row/column orders.

    These are exactly the vertices whose support is a path; from ``n = 4``
    on, vertices with branching supports exist and are missed. Kept for
    comparison with :func:`enumerate_vertices`. Work splits by row order
    across ``workers`` processes and merges by set union.
    """
    pv, qv = as_prob_vector(p), as_prob_vector(q)
    n = pv.n
    if n > n_limit:
        raise SizeLimitError(f"n={n} exceeds the enumeration limit {n_limit}")
    perms = all_permutations(n)
    pl, ql = pv.tolist(), qv.tolist()
    if workers > 1:
        chunks = [perms[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_nw_chunk, [(pl, ql, ch, perms) for ch in chunks]))
    else:
        parts = [_nw_chunk((pl, ql, perms, perms))]
    merged = {}
    for part in parts:
        for key, W in part.items():
            merged.setdefault(key, W)
    V = np.array(list(merged.values())).reshape(-1, n, n)
    order = np.lexsort(V.reshape(len(V), -1).T[::-1])
    return VertexSet(V[order], pv, qv)


def oracle_min(
    p, q, base: Base = 2, n_limit: int = DEFAULT_N_LIMIT, vertices: Optional[VertexSet] = None
):
    """Minimum-entropy vertex; ties go to the lexicographically first matrix."""
    vs = vertices if vertices is not None else enumerate_vertices(p, q, n_limit)
    H = vs.entropies(base)
    k = int(np.flatnonzero(H <= H.min() + 1e-12)[0])
    return Coupling(vs.vertices[k]), EntropyValue(H[k], base)


@dataclass
class OracleReport:
    p: ProbVector
    q: ProbVector
    base: str
    min_coupling: Coupling
    min_entropy: float
    max_entropy_bound: float
    meet_entropy: float
    lower_ok: bool
    upper_ok: bool
    order_preserving_ok: bool
    witness_permutations: Optional[PermutationPair]
    n_vertices: int
    n_minimizers: int
    # stricter reading: both reordered marginals non-increasing
    sorted_order_preserving_ok: bool = False
    minimizers: list = field(default_factory=list, repr=False)

    @property
    def sandwich_ok(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        w = self.witness_permutations
        return {
            "base": self.base,
            "p": self.p.tolist(),
            "q": self.q.tolist(),
            "n_vertices": self.n_vertices,
            "n_minimizers": self.n_minimizers,
            "min_coupling": self.min_coupling.tolist(),
            "min_entropy": self.min_entropy,
            "max_entropy_bound": self.max_entropy_bound,
            "meet_entropy": self.meet_entropy,
            "sandwich_ok": self.sandwich_ok,
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "order_preserving_ok": self.order_preserving_ok,
            "sorted_order_preserving_ok": self.sorted_order_preserving_ok,
            "witness_permutations": w.to_dict() if w is not None else None,
        }


def verify_sandwich(
    p, q, base: Base = 2, n_limit: int = DEFAULT_N_LIMIT, vertices: Optional[VertexSet] = None
) -> tuple:
    """Check ``H(p ^ q) <= min H(P) <= H(p ^ q) + 1 bit`` against the oracle.

    Returns:
        ``(lower_ok, upper_ok, meet_entropy, min_entropy)``.
    """
    ps, qs = sort_desc(p), sort_desc(q)
    _, hmin = oracle_min(ps, qs, base, n_limit, vertices)
    hmeet = float(entropy(meet(ps, qs), base))
    lower_ok = hmeet - 1e-9 <= hmin
    upper_ok = hmin <= hmeet + one_bit(base) + 1e-9
    return lower_ok, upper_ok, hmeet, float(hmin)


def verify_main_theorem(
    p, q, base: Base = 2, n_limit: int = DEFAULT_N_LIMIT, zero_tol: float = 1e-12
) -> OracleReport:
    """Check that every minimum-entropy vertex has an upper-triangular rearrangement."""
    base = normalize_base(base)
    ps, qs = sort_desc(p), sort_desc(q)
    vs = enumerate_vertices(ps, qs, n_limit)
    H = vs.entropies(base)
    hmin = H.min()
    idx = np.flatnonzero(H <= hmin + MIN_TIE_TOL)
    minimizers = [vs.vertices[k] for k in idx]
    witnesses = [find_order_preserving_equivalent(V, zero_tol) for V in minimizers]
    sorted_ok = all(
        find_order_preserving_equivalent(V, zero_tol, sorted_marginals=True) is not None
        for V in minimizers
    )
    k0 = int(np.flatnonzero(H <= hmin + 1e-12)[0])
    lower_ok, upper_ok, hmeet, _ = verify_sandwich(ps, qs, base, n_limit, vs)
    return OracleReport(
        p=ps,
        q=qs,
        base=base,
        min_coupling=Coupling(vs.vertices[k0]),
        min_entropy=float(H[k0]),
        max_entropy_bound=float(entropy(ps, base)) + float(entropy(qs, base)),
        meet_entropy=hmeet,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        order_preserving_ok=all(w is not None for w in witnesses),
        witness_permutations=witnesses[list(idx).index(k0)],
        n_vertices=len(vs),
        n_minimizers=len(minimizers),
        sorted_order_preserving_ok=sorted_ok,
        minimizers=minimizers,
    )


def verify_independent_max(
    p,
    q,
    samples: int = 50,
    rng: Optional[np.random.Generator] = None,
    base: Base = 2,
    n_limit: int = DEFAULT_N_LIMIT,
    vertices: Optional[VertexSet] = None,
    tol: float = 1e-10,
) -> bool:
    """No vertex or random mixture of vertices beats the independent coupling."""
    rng = rng if rng is not None else np.random.default_rng(0)
    vs = vertices if vertices is not None else enumerate_vertices(p, q, n_limit)
    pv, qv = vs.p, vs.q
    bound = float(entropy(pv, base)) + float(entropy(qv, base))
    if abs(float(joint_entropy(independent(pv, qv), base)) - bound) > tol:
        return False
    if np.any(vs.entropies(base) > bound + tol):
        return False
    V = vs.vertices
    for _ in range(samples):
        k = int(rng.integers(2, max(3, min(len(V), 2 * pv.n) + 1)))
        pick = rng.choice(len(V), size=min(k, len(V)), replace=False)
        w = random_simplex(len(pick), rng)
        mix = np.tensordot(w, V[pick], axes=1)
        if float(joint_entropy(Coupling(mix), base)) > bound + tol:
            return False
    return True
