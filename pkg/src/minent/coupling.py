"""Coupling matrices, joint entropy, mutual information and row/column exchanges."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from minent.probcore import (
    TOL_MASS,
    Base,
    EntropyValue,
    ProbVector,
    as_prob_vector,
    as_sorted,
    entropy,
    entropy_terms,
    log_fn,
)


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class Coupling:
    """Dense n x n joint distribution. The matrix is stored read-only."""

    matrix: np.ndarray
    tol: float = field(default=TOL_MASS, repr=False, compare=False)

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise CouplingError(f"coupling must be square with n >= 2, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise CouplingError("non-finite entry")
        if np.any(M < 0):
            raise CouplingError(f"negative entry {M.min()!r}")
        mass = math.fsum(M.ravel())
        if abs(mass - 1.0) > self.tol:
            raise CouplingError(f"total mass {mass!r} differs from 1 by more than {self.tol}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def tolist(self) -> list:
        return self.matrix.tolist()


def as_coupling(P) -> Coupling:
    return P if isinstance(P, Coupling) else Coupling(np.asarray(P, dtype=float))


@dataclass(frozen=True)
class PermutationPair:
    """Row and column reorderings; ``apply(M)[r, c] == M[row_perm[r], col_perm[c]]``."""

    row_perm: tuple
    col_perm: tuple

    def __post_init__(self):
        for perm in (self.row_perm, self.col_perm):
            if sorted(perm) != list(range(len(perm))):
                raise ValueError(f"{perm} is not a permutation")
        if len(self.row_perm) != len(self.col_perm):
            raise ValueError("row and column permutations differ in size")

    def apply(self, P) -> np.ndarray:
        M = np.asarray(P, dtype=float)
        return M[np.ix_(self.row_perm, self.col_perm)]

    def inverse(self) -> "PermutationPair":
        return PermutationPair(
            tuple(int(i) for i in np.argsort(self.row_perm)),
            tuple(int(i) for i in np.argsort(self.col_perm)),
        )

    def to_dict(self) -> dict:
        return {"row_perm": list(self.row_perm), "col_perm": list(self.col_perm)}


def marginals(P) -> tuple:
    """Row sums and column sums as :class:`ProbVector` objects."""
    C = as_coupling(P)
    return ProbVector(C.row_marginal, tol=C.tol), ProbVector(C.col_marginal, tol=C.tol)


def joint_entropy(P, base: Base = 2) -> EntropyValue:
    C = as_coupling(P)
    return EntropyValue(max(math.fsum(entropy_terms(C.matrix, base)), 0.0), base)


def mutual_information(P, base: Base = 2) -> float:
    """``sum p(x,y) log(p(x,y) / (p(x) p(y)))`` over the support."""
    C = as_coupling(P)
    M = C.matrix
    r, c = M.sum(axis=1), M.sum(axis=0)
    log = log_fn(base)
    terms = []
    for i, j in zip(*np.nonzero(M > 0)):
        if r[i] <= 0 or c[j] <= 0:
            raise CouplingError(f"positive cell ({i}, {j}) in a zero-mass line")
        pij = M[i, j]
        terms.append(pij * log(pij / (r[i] * c[j])))
    return math.fsum(terms)


def mutual_information_from_entropies(P, base: Base = 2) -> float:
    """``H(X) + H(Y) - H(X, Y)``; must agree with :func:`mutual_information`."""
    C = as_coupling(P)
    px, py = marginals(C)
    return float(entropy(px, base)) + float(entropy(py, base)) - float(joint_entropy(C, base))


def _same_size(p: ProbVector, q: ProbVector):
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")


def independent(p, q) -> Coupling:
    pv, qv = as_prob_vector(p), as_prob_vector(q)
    _same_size(pv, qv)
    return Coupling(np.outer(pv.values, qv.values))


def nw_matrix(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Northwest-corner fill on raw arrays (no validation).

    On ties the row advances first. The support is a staircase path, so at
    most ``2n - 1`` cells are nonzero.
    """
    n, m = len(p), len(q)
    P = np.zeros((n, m))
    r, c = list(map(float, p)), list(map(float, q))
    i = j = 0
    while i < n and j < m:
        x = r[i] if r[i] <= c[j] else c[j]
        P[i, j] = x
        r[i] -= x
        c[j] -= x
        if r[i] <= c[j]:
            i += 1
        else:
            j += 1
    return P


def nw_corner(p, q) -> Coupling:
    pv, qv = as_prob_vector(p), as_prob_vector(q)
    _same_size(pv, qv)
    return Coupling(nw_matrix(pv.values, qv.values))


def order_preserving_coupling(p, q) -> Coupling:
    """Upper-triangular coupling of sorted ``p`` with ``q`` in ascending order.

    ``F_p`` dominates the CDF of the ascending rearrangement of ``q``, so the
    northwest-corner fill never drops below the diagonal. Row marginal is
    ``p``; column marginal is ``q`` reversed.
    """
    ps, qs = as_sorted(p), as_sorted(q)
    _same_size(ps, qs)
    return Coupling(nw_matrix(ps.values, qs.values[::-1]))


def _check_index(n: int, *idx: int):
    for k in idx:
        if not 0 <= k < n:
            raise IndexError(f"index {k} out of range for n={n}")


def swap_rows(P, k: int, l: int) -> Coupling:
    """Exchange rows ``k`` and ``l`` (0-based)."""
    C = as_coupling(P)
    _check_index(C.n, k, l)
    M = C.matrix.copy()
    M[[k, l]] = M[[l, k]]
    return Coupling(M, tol=C.tol)


def swap_cols(P, k: int, l: int) -> Coupling:
    """Exchange columns ``k`` and ``l`` (0-based)."""
    C = as_coupling(P)
    _check_index(C.n, k, l)
    M = C.matrix.copy()
    M[:, [k, l]] = M[:, [l, k]]
    return Coupling(M, tol=C.tol)


def is_upper_triangular(P, tol: float = 1e-12) -> bool:
    """True iff every entry strictly below the diagonal is below ``tol``."""
    M = np.asarray(P, dtype=float)
    return bool(np.all(M[np.tril_indices(M.shape[0], -1)] < tol))


def _eligible(marg: np.ndarray, mask: int, tol: float) -> list:
    idx = [i for i in range(len(marg)) if mask >> i & 1]
    if not idx:
        return idx
    top = max(marg[i] for i in idx)
    return [i for i in idx if marg[i] >= top - tol]


def find_order_preserving_equivalent(
    P, tol: float = 1e-12, sorted_marginals: bool = False
) -> Optional[PermutationPair]:
    """Search row/column reorderings that make ``P`` upper triangular.

    Builds the ordering one position at a time: the next column may only
    have a nonzero in the next row among the rows not yet placed. That is
    necessary for any triangular arrangement, so the depth-first search with
    memoised dead ends over (rows left, columns left) is exhaustive.

    Args:
        P: square nonnegative matrix.
        tol: entries below ``tol`` count as zero.
        sorted_marginals: additionally require both reordered marginals to be
            non-increasing (ties within ``tol`` may go either way).

    Returns:
        The first pair found, trying columns then rows in index order, or
        ``None`` when no triangular arrangement exists.
    """
    M = np.asarray(P, dtype=float)
    n = M.shape[0]
    nz_rows = [sum(1 << i for i in range(n) if M[i, j] >= tol) for j in range(n)]
    rmarg, cmarg = M.sum(axis=1), M.sum(axis=0)
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def search(rows: int, cols: int):
        if cols == 0:
            return ()
        if sorted_marginals:
            col_choices = _eligible(cmarg, cols, tol)
            row_ok = set(_eligible(rmarg, rows, tol))
        else:
            col_choices = [j for j in range(n) if cols >> j & 1]
            row_ok = None
        for j in col_choices:
            hit = nz_rows[j] & rows
            if hit & (hit - 1):
                continue
            cands = [hit.bit_length() - 1] if hit else [i for i in range(n) if rows >> i & 1]
            for i in cands:
                if row_ok is not None and i not in row_ok:
                    continue
                rest = search(rows & ~(1 << i), cols & ~(1 << j))
                if rest is not None:
                    return ((i, j),) + rest
        return None

    found = search(full, full)
    if found is None:
        return None
    return PermutationPair(tuple(i for i, _ in found), tuple(j for _, j in found))


def are_equivalent(P, Q, tol: float = 1e-9) -> bool:
    """Whether ``Q`` is a row/column reordering of ``P`` (entrywise within ``tol``).

    Brute force over row orders with greedy column matching; meant for
    small ``n``.
    """
    A, B = np.asarray(P, dtype=float), np.asarray(Q, dtype=float)
    if A.shape != B.shape:
        return False
    n = A.shape[0]
    if not np.allclose(np.sort(A.ravel()), np.sort(B.ravel()), atol=tol, rtol=0):
        return False
    for rp in itertools.permutations(range(n)):
        Ar = A[list(rp)]
        used = [False] * n
        ok = True
        for j in range(n):
            for k in range(n):
                if not used[k] and np.all(np.abs(Ar[:, k] - B[:, j]) <= tol):
                    used[k] = True
                    break
            else:
                ok = False
                break
        if ok:
            return True
    return False
