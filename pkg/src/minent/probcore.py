"""Discrete distributions, Shannon entropy, CDFs and the meet distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

TOL_MASS = 1e-9

Base = Union[int, float, str]


class DistributionError(ValueError):
    """Raised for vectors that are not probability distributions."""


def normalize_base(base: Base) -> str:
    """Map a user-facing base tag to ``"2"`` or ``"e"``."""
    if base in (2, 2.0, "2", "bits", "bit"):
        return "2"
    if base in ("e", "nat", "nats") or (isinstance(base, float) and base == math.e):
        return "e"
    raise ValueError(f"unsupported logarithm base {base!r}; use 2 or 'e'")


def log_fn(base: Base):
    return math.log2 if normalize_base(base) == "2" else math.log


def one_bit(base: Base) -> float:
    """One bit expressed in ``base`` units."""
    return 1.0 if normalize_base(base) == "2" else math.log(2.0)


class EntropyValue(float):
    """A float that remembers the logarithm base it was computed in.

    Arithmetic on it yields plain floats.
    """

    base: str

    def __new__(cls, value: float, base: Base = 2):
        obj = super().__new__(cls, value)
        obj.base = normalize_base(base)
        return obj

    def __repr__(self) -> str:
        return f"EntropyValue({float(self)!r}, base={self.base!r})"

    def to_dict(self) -> dict:
        return {"value": float(self), "base": self.base}


@dataclass(frozen=True)
class ProbVector:
    """A probability vector on ``{0, ..., n-1}`` with ``n >= 2``.

    Validation is strict: negative entries or a total mass further than
    ``tol`` from 1 raise :class:`DistributionError`. Use
    :meth:`renormalized` to rescale explicitly.
    """

    values: np.ndarray
    tol: float = field(default=TOL_MASS, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size < 2:
            raise DistributionError(f"need at least 2 outcomes, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DistributionError("non-finite probability")
        if np.any(arr < 0):
            raise DistributionError(f"negative probability in {arr.tolist()}")
        mass = math.fsum(arr)
        if abs(mass - 1.0) > self.tol:
            raise DistributionError(f"mass {mass!r} differs from 1 by more than {self.tol}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def renormalized(cls, values: Sequence[float]) -> "ProbVector":
        arr = np.asarray(values, dtype=float)
        if np.any(arr < 0):
            raise DistributionError(f"negative probability in {arr.tolist()}")
        total = math.fsum(arr)
        if total <= 0:
            raise DistributionError("cannot renormalize a vector with zero mass")
        return cls(arr / total)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, i):
        return self.values[i]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def tolist(self) -> list:
        return self.values.tolist()


@dataclass(frozen=True)
class SortedProbVector(ProbVector):
    """Non-increasing representative of a permutation class.

    ``sort_perm[k]`` is the original index of the entry at sorted position
    ``k``, so ``original[sort_perm] == values``.
    """

    sort_perm: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if np.any(np.diff(self.values) > 0):
            raise DistributionError(f"not sorted non-increasing: {self.values.tolist()}")
        perm = tuple(int(i) for i in self.sort_perm) or tuple(range(self.values.size))
        if sorted(perm) != list(range(self.values.size)):
            raise DistributionError(f"sort_perm {perm} is not a permutation")
        object.__setattr__(self, "sort_perm", perm)


def as_prob_vector(p, tol: float = TOL_MASS) -> ProbVector:
    if isinstance(p, ProbVector):
        return p
    return ProbVector(np.asarray(p, dtype=float), tol=tol)


def as_sorted(p) -> SortedProbVector:
    """Accept an already-sorted vector; raise if it is not non-increasing."""
    if isinstance(p, SortedProbVector):
        return p
    pv = as_prob_vector(p)
    return SortedProbVector(pv.values)


def entropy_terms(values: np.ndarray, base: Base = 2) -> list:
    log = log_fn(base)
    return [-x * log(x) for x in np.asarray(values, dtype=float).ravel().tolist() if x > 0]


def entropy(p, base: Base = 2) -> EntropyValue:
    """Shannon entropy ``-sum p_i log p_i`` with ``0 log 0 = 0``.

    Terms are accumulated with :func:`math.fsum`, so the result does not
    depend on the order of the entries.
    """
    pv = as_prob_vector(p)
    return EntropyValue(max(math.fsum(entropy_terms(pv.values, base)), 0.0), base)


def sort_desc(p) -> SortedProbVector:
    """Stable non-increasing sort; equal entries keep their original order."""
    pv = as_prob_vector(p)
    perm = np.argsort(-pv.values, kind="stable")
    return SortedProbVector(pv.values[perm], sort_perm=tuple(int(i) for i in perm))


def cdf(p) -> np.ndarray:
    return np.cumsum(as_prob_vector(p).values)


def meet(p, q) -> ProbVector:
    """Distribution whose CDF is the pointwise minimum of the two CDFs."""
    ps, qs = as_sorted(p), as_sorted(q)
    if ps.n != qs.n:
        raise ValueError(f"size mismatch: {ps.n} vs {qs.n}")
    F = np.minimum(cdf(ps), cdf(qs))
    F[-1] = min(F[-1], 1.0)
    vals = np.diff(F, prepend=0.0)
    # min of two non-decreasing sequences is non-decreasing; clip rounding dust
    vals = np.where(vals < 0, 0.0, vals)
    return ProbVector(vals)


def h_c(x: float, c: float, base: Base = 2) -> float:
    """``x log x + (c - x) log(c - x)`` on ``[0, c]``; ``0 log 0 = 0``."""
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if x < 0 or x > c:
        raise ValueError(f"x={x} outside [0, {c}]")
    log = log_fn(base)
    y = c - x
    return (x * log(x) if x > 0 else 0.0) + (y * log(y) if y > 0 else 0.0)


def h_c_interval_max(a: float, b: float, c: float, base: Base = 2) -> tuple:
    """Maximum of :func:`h_c` over ``[a, b]``, attained at an endpoint.

    ``h_c`` is convex and symmetric about ``c/2``, so the endpoint farther
    from the centre wins: ``a`` when ``a <= c - b``, otherwise ``b``.

    Returns:
        ``(argmax, value)`` with ``argmax`` one of ``a`` or ``b``.
    """
    if not (0 <= a <= b <= c):
        raise ValueError(f"need 0 <= a <= b <= c, got a={a}, b={b}, c={c}")
    x = a if a <= c - b else b
    return x, h_c(x, c, base)
