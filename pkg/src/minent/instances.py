"""Seeded random marginals and random couplings."""

from __future__ import annotations

import itertools

import numpy as np

from minent.coupling import Coupling, nw_matrix
from minent.probcore import ProbVector, SortedProbVector, sort_desc

GENERATOR = "numpy.random.Generator(PCG64)"


def random_simplex(n: int, rng: np.random.Generator) -> np.ndarray:
    """Flat-Dirichlet point: normalised exponentials of seeded uniforms."""
    e = -np.log1p(-rng.random(n))
    return e / e.sum()


def random_instance(n: int, rng: np.random.Generator, sort: bool = True):
    p, q = ProbVector(random_simplex(n, rng)), ProbVector(random_simplex(n, rng))
    if sort:
        return sort_desc(p), sort_desc(q)
    return p, q


def random_two_point(rng: np.random.Generator) -> tuple:
    """``(p, q)`` with ``0.5 <= q <= p < 1``."""
    a, b = 0.5 + 0.5 * rng.random(2)
    return max(a, b), min(a, b)


def random_vertex(p, q, rng: np.random.Generator) -> Coupling:
    """Northwest-corner vertex under random row and column orders."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    n = len(p)
    s, u = rng.permutation(n), rng.permutation(n)
    W = np.zeros((n, n))
    W[np.ix_(s, u)] = nw_matrix(p[s], q[u])
    return Coupling(W)


def random_coupling(p, q, rng: np.random.Generator, k: int = 3) -> Coupling:
    """Random convex combination of ``k`` random vertices."""
    vs = [random_vertex(p, q, rng).matrix for _ in range(k)]
    w = random_simplex(k, rng)
    return Coupling(np.tensordot(w, np.array(vs), axes=1))


def all_permutations(n: int):
    return list(itertools.permutations(range(n)))
