"""Entropy-decreasing 2x2 mass shifts and the descent to an upper-triangular coupling.

Matrices here need not have unit mass: ``h(A) = sum a log a`` and
``H(A) = -h(A)`` are defined for any nonnegative matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from minent.coupling import Coupling, PermutationPair, as_coupling
from minent.probcore import Base, EntropyValue, entropy_terms, log_fn, normalize_base

ZERO = 1e-12
PRECONDITION_TOL = 1e-12

LEMMA_KINDS = ("lemma1", "lemma2", "line_clear_substep")


class PreconditionError(ValueError):
    """A local transform was asked to run outside its hypotheses."""


class TwoByTwo(NamedTuple):
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def from_array(cls, A) -> "TwoByTwo":
        A = np.asarray(A, dtype=float)
        if A.shape != (2, 2):
            raise ValueError(f"expected a 2x2 block, got {A.shape}")
        return cls(*(float(x) for x in A.ravel()))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def validate(self):
        if min(self) < 0:
            raise ValueError(f"negative entry in {tuple(self)}")
        return self


def unnormalized_entropy(A, base: Base = 2) -> float:
    """``h(A) = sum a_ij log a_ij`` (note the sign: ``H(A) = -h(A)``)."""
    A = np.asarray(A, dtype=float)
    if np.any(A < 0):
        raise ValueError("negative entry")
    return -math.fsum(entropy_terms(A, base))


def scaling_identity_check(A, base: Base = 2, tol: float = 1e-10) -> bool:
    """Check ``h(A) == C h(A / C) + C log C`` with ``C`` the total mass."""
    A = np.asarray(A, dtype=float)
    C = math.fsum(A.ravel())
    if C <= 0:
        raise ValueError("total mass must be positive")
    lhs = unnormalized_entropy(A, base)
    rhs = C * unnormalized_entropy(A / C, base) + C * log_fn(base)(C)
    return abs(lhs - rhs) <= tol


def _shift(A: TwoByTwo, b: float) -> TwoByTwo:
    return TwoByTwo(A.a11 + b, A.a12 - b, A.a21 - b, A.a22 + b)


def lemma1_transform(A, tol: float = PRECONDITION_TOL) -> Tuple[TwoByTwo, float]:
    """Move ``b = min(a12, a21)`` onto the diagonal.

    Requires the largest entry to sit on the diagonal. Row and column sums
    are unchanged and the entropy drops strictly whenever ``b > 0``.
    """
    A = A if isinstance(A, TwoByTwo) else TwoByTwo.from_array(A)
    A.validate()
    if max(A.a11, A.a22) < max(A.a12, A.a21) - tol:
        raise PreconditionError(f"largest entry is off the diagonal: {tuple(A)}")
    b = min(A.a12, A.a21)
    return _shift(A, b), b


def lemma2_transform(A, tol: float = PRECONDITION_TOL) -> Tuple[TwoByTwo, float]:
    """Same shift as :func:`lemma1_transform` under marginal conditions.

    Requires row 1 to outweigh row 2, column 1 to outweigh column 2, and
    row 1 to outweigh column 1. Here ``b = a21`` and the result is the
    minimum-entropy member of the segment of 2x2 couplings.
    """
    A = A if isinstance(A, TwoByTwo) else TwoByTwo.from_array(A)
    A.validate()
    r1, r2 = A.a11 + A.a12, A.a21 + A.a22
    c1, c2 = A.a11 + A.a21, A.a12 + A.a22
    if r1 < r2 - tol or c1 < c2 - tol or r1 < c1 - tol:
        raise PreconditionError(
            f"need row1 >= row2, col1 >= col2, row1 >= col1; got rows ({r1}, {r2}), cols ({c1}, {c2})"
        )
    b = min(A.a12, A.a21)
    return _shift(A, b), b


_TRANSFORMS = {"lemma1": lemma1_transform, "lemma2": lemma2_transform}


def _apply_shift(M: np.ndarray, i: int, k: int, j: int, l: int, new: TwoByTwo):
    M[i, j], M[i, l], M[k, j], M[k, l] = new


def submatrix_update(P, i: int, k: int, j: int, l: int, which: str = "lemma1") -> Coupling:
    """Apply a 2x2 transform to rows ``(i, k)`` and columns ``(j, l)`` of ``P``."""
    if which not in _TRANSFORMS:
        raise ValueError(f"unknown transform {which!r}")
    if not (i < k and j < l):
        raise ValueError(f"need i < k and j < l, got rows ({i}, {k}), cols ({j}, {l})")
    C = as_coupling(P)
    M = C.matrix.copy()
    new, _ = _TRANSFORMS[which](M[np.ix_((i, k), (j, l))])
    _apply_shift(M, i, k, j, l, new)
    return Coupling(M, tol=C.tol)


def min_entropy_2x2(p: float, q: float, base: Base = 2) -> Tuple[Coupling, EntropyValue]:
    """Closed-form minimum-entropy coupling of ``(p, 1-p)`` and ``(q, 1-q)``.

    Requires ``1 >= p >= q >= 0.5``; the minimiser is
    ``[[q, p - q], [0, 1 - p]]``.
    """
    if not (0.5 <= q <= p <= 1.0):
        raise ValueError(f"need 0.5 <= q <= p <= 1, got p={p}, q={q}")
    log = log_fn(base)

    def xlogx(x):
        return x * log(x) if x > 0 else 0.0

    P = Coupling(np.array([[q, p - q], [0.0, 1.0 - p]]))
    H = -math.fsum([xlogx(q), xlogx(1.0 - p), xlogx(p - q)])
    return P, EntropyValue(max(H, 0.0), base)


@dataclass
class TransformStep:
    """One recorded move of the descent.

    For 2x2 shifts ``indices`` is ``(i, k, j, l)``: ``+b`` lands on cells
    ``(i, j)`` and ``(k, l)``, ``-b`` on ``(i, l)`` and ``(k, j)``. For swaps
    it is the exchanged pair ``(a, b)``.
    """

    kind: str
    indices: tuple
    shifted_mass: float
    entropy_before: float
    entropy_after: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "indices": list(self.indices),
            "b": self.shifted_mass,
            "entropy_before": self.entropy_before,
            "entropy_after": self.entropy_after,
        }


@dataclass
class DescentTrace:
    """Ordered record of a descent.

    ``row_perm[r]`` (``col_perm[c]``) is the original label of working row
    ``r`` (column ``c``) once all swaps are done.
    """

    initial: Coupling
    final: Coupling
    steps: List[TransformStep] = field(default_factory=list)
    row_perm: tuple = ()
    col_perm: tuple = ()
    base: str = "2"

    @property
    def lemma_steps(self) -> int:
        return sum(s.kind in LEMMA_KINDS for s in self.steps)

    @property
    def entropies(self) -> list:
        if not self.steps:
            return []
        return [self.steps[0].entropy_before] + [s.entropy_after for s in self.steps]

    def replay(self) -> np.ndarray:
        """Re-run the recorded steps on ``initial``."""
        M = self.initial.matrix.copy()
        for s in self.steps:
            if s.kind == "row_swap":
                a, b = s.indices
                M[[a, b]] = M[[b, a]]
            elif s.kind == "col_swap":
                a, b = s.indices
                M[:, [a, b]] = M[:, [b, a]]
            else:
                i, k, j, l = s.indices
                x = s.shifted_mass
                M[i, j] += x
                M[k, l] += x
                M[i, l] -= x
                M[k, j] -= x
        return M

    def final_in_original_labels(self) -> Coupling:
        """The final coupling with rows and columns back in input order."""
        pp = PermutationPair(self.row_perm, self.col_perm).inverse()
        return Coupling(pp.apply(self.final.matrix))

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "initial": self.initial.tolist(),
            "final": self.final.tolist(),
            "row_perm": list(self.row_perm),
            "col_perm": list(self.col_perm),
            "lemma_steps": self.lemma_steps,
            "steps": [s.to_dict() for s in self.steps],
        }


def _H(M: np.ndarray, base) -> float:
    return math.fsum(entropy_terms(M, base))


def _clear_line(M: np.ndarray, lo: int, hi: int, corner: str, steps: list, base) -> None:
    """In-place line clearing on the active block ``[lo, hi) x [lo, hi)``.

    top_left empties column ``lo`` below the corner, drawing on row ``lo``;
    bottom_right empties row ``hi - 1`` left of the corner, drawing on
    column ``hi - 1``. Each substep pairs the smallest entry to clear with
    the smallest donor and shifts the smaller of the two.
    """
    if corner == "top_left":
        h = lo
        others = range(lo + 1, hi)
    elif corner == "bottom_right":
        h = hi - 1
        others = range(lo, hi - 1)
    else:
        raise ValueError(f"unknown corner {corner!r}")

    block = M[lo:hi, lo:hi]
    if M[h, h] < block.max() - PRECONDITION_TOL:
        raise PreconditionError(f"corner ({h}, {h}) is not a maximal entry of the block")
    rsum, csum = M[h, lo:hi].sum(), M[lo:hi, h].sum()
    if corner == "top_left" and rsum < csum - PRECONDITION_TOL:
        raise PreconditionError(f"row sum {rsum} < column sum {csum} at top_left corner")
    if corner == "bottom_right" and rsum > csum + PRECONDITION_TOL:
        raise PreconditionError(f"row sum {rsum} > column sum {csum} at bottom_right corner")

    while True:
        if corner == "top_left":
            clear = [i for i in others if M[i, h] > ZERO]
            donors = [j for j in others if M[h, j] > ZERO]
        else:
            clear = [j for j in others if M[h, j] > ZERO]
            donors = [i for i in others if M[i, h] > ZERO]
        if not clear:
            return
        if not donors:
            # dominance of the corner's own line rules this out beyond rounding
            raise RuntimeError("line clearing ran out of donor mass")
        if corner == "top_left":
            i0 = min(clear, key=lambda i: M[i, h])
            j0 = min(donors, key=lambda j: M[h, j])
            idx = (h, i0, h, j0)
        else:
            j0 = min(clear, key=lambda j: M[h, j])
            i0 = min(donors, key=lambda i: M[i, h])
            idx = (i0, h, j0, h)
        i, k, j, l = idx
        before = _H(M, base)
        new, b = lemma1_transform(M[np.ix_((i, k), (j, l))])
        _apply_shift(M, i, k, j, l, new)
        steps.append(TransformStep("line_clear_substep", idx, b, before, _H(M, base)))


def clear_line(A, corner: str = "top_left", base: Base = 2) -> Tuple[Coupling, List[TransformStep]]:
    """Empty the first column (or last row) of ``A`` into its corner.

    Requires the corner to hold a maximal entry, and for ``top_left`` the
    first row to carry at least as much mass as the first column (mirrored
    for ``bottom_right``). Uses at most ``2(n - 1)`` 2x2 shifts.
    """
    C = as_coupling(A)
    M = C.matrix.copy()
    steps: List[TransformStep] = []
    _clear_line(M, 0, C.n, corner, steps, normalize_base(base))
    return Coupling(M, tol=C.tol), steps


def descend(P, base: Base = 2) -> Tuple[Coupling, DescentTrace]:
    """Drive ``P`` to an upper-triangular coupling without raising its entropy.

    The active block starts as the whole matrix. Each round moves the
    block's largest entry (first in row-major order) to the top-left corner
    if its row outweighs its column inside the block, else to the
    bottom-right corner, clears the corresponding line and shrinks the block
    by one. Swaps are recorded, so the final matrix is a relabelling of a
    coupling with the input's marginals.
    """
    base = normalize_base(base)
    C = as_coupling(P)
    n = C.n
    M = C.matrix.copy()
    steps: List[TransformStep] = []
    rows, cols = list(range(n)), list(range(n))

    def swap(kind, a, b):
        if a == b:
            return
        H = _H(M, base)
        if kind == "row_swap":
            M[[a, b]] = M[[b, a]]
            rows[a], rows[b] = rows[b], rows[a]
        else:
            M[:, [a, b]] = M[:, [b, a]]
            cols[a], cols[b] = cols[b], cols[a]
        steps.append(TransformStep(kind, (a, b), 0.0, H, H))

    lo, hi = 0, n
    while hi - lo > 1:
        block = M[lo:hi, lo:hi]
        r, c = divmod(int(np.argmax(block)), hi - lo)
        r += lo
        c += lo
        if M[r, lo:hi].sum() >= M[lo:hi, c].sum():
            swap("row_swap", lo, r)
            swap("col_swap", lo, c)
            _clear_line(M, lo, hi, "top_left", steps, base)
            lo += 1
        else:
            swap("row_swap", hi - 1, r)
            swap("col_swap", hi - 1, c)
            _clear_line(M, lo, hi, "bottom_right", steps, base)
            hi -= 1

    final = Coupling(M, tol=C.tol)
    trace = DescentTrace(C, final, steps, tuple(rows), tuple(cols), base)
    return final, trace
