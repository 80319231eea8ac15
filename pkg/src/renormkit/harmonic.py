"""Harmonic sum and the two inequalities built on it.

``hsum`` is the series-resistor rule ``(sum 1/x_i)^-1``.  A zero entry blocks
the whole chain, so ``hsum`` returns 0 whenever any entry is 0.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import DomainError

DEFAULT_TOL = 1e-12


def _checked(values: Iterable[float]) -> list[float]:
    xs = [float(x) for x in values]
    if not xs:
        raise DomainError("harmonic sum of an empty list")
    for x in xs:
        if not x >= 0:  # also rejects nan
            raise DomainError(f"negative or nan weight {x!r}")
    return xs


def hsum(values: Iterable[float]) -> float:
    """Return ``(sum 1/x)^-1`` over a non-empty list of nonnegative weights."""
    xs = _checked(values)
    if any(x == 0.0 for x in xs):
        return 0.0
    inv = math.fsum(1.0 / x for x in xs)
    if inv == 0.0:
        return math.inf
    return 1.0 / inv


def shifted_lower_bound(y: float, bs: Sequence[float]) -> float:
    """Lower bound for ``hsum(xs)`` given ``hsum(x_i + b_i) >= y``.

    Since the harmonic sum is 1-Lipschitz in every coordinate, removing the
    shifts ``b_i`` costs at most ``sum(b_i)``.
    """
    y = float(y)
    if not y >= 0:
        raise DomainError(f"y must be nonnegative, got {y!r}")
    bs = [float(b) for b in bs]
    if any(not b >= 0 for b in bs):
        raise DomainError("shifts must be nonnegative")
    return max(y - math.fsum(bs), 0.0)


def interchange(values: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Both sides of ``sum_i hsum_j v_ij <= hsum_j sum_i v_ij``."""
    rows = [list(r) for r in values]
    if not rows or not rows[0]:
        raise DomainError("interchange needs a non-empty matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError("ragged matrix")
    lhs = math.fsum(hsum(r) for r in rows)
    cols = [math.fsum(float(r[j]) for r in rows) for j in range(width)]
    rhs = hsum(cols)
    return lhs, rhs


def is_le(a: float, b: float, tol: float = DEFAULT_TOL) -> bool:
    return a <= b + tol
