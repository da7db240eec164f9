"""Exact rational linear algebra on numpy object arrays of Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DescentLabError


class SingularSystemError(DescentLabError):
    """The linear system has no unique solution."""


def rational_array(rows: Sequence[Sequence]) -> np.ndarray:
    return np.array([[Fraction(v) for v in row] for row in rows], dtype=object).reshape(len(rows), -1)


def solve(A: Sequence[Sequence], b: Sequence) -> list:
    """
    Solve A x = b exactly by Gauss-Jordan elimination.

    Raises:
        SingularSystemError: when some column has no nonzero pivot
    """
    X = rational_array(A)
    n = X.shape[0]
    if X.shape != (n, n) or len(b) != n:
        raise ValueError("solve needs a square system")
    y = np.array([Fraction(v) for v in b], dtype=object)

    for i in range(n):
        for j in range(i, n):
            if X[j, i] != 0:
                if j != i:
                    X[[i, j]] = X[[j, i]]
                    y[[i, j]] = y[[j, i]]
                break
        else:
            raise SingularSystemError(f"no pivot in column {i}")

        pivot = X[i, i]
        X[i, :] = X[i, :] / pivot
        y[i] = y[i] / pivot

        for j in range(n):
            if j != i and X[j, i] != 0:
                factor = X[j, i]
                X[j, :] = X[j, :] - factor * X[i, :]
                y[j] = y[j] - factor * y[i]

    return list(y)


def stationary_law(Q: Sequence[Sequence]) -> list:
    """
    Stationary law pi of an irreducible generator restricted to one class:
    pi Q = 0 with sum(pi) = 1, the last balance equation replaced by the
    normalization.
    """
    Q = rational_array(Q)
    n = Q.shape[0]
    if n == 1:
        return [Fraction(1)]
    A = Q.T.copy()
    A[n - 1, :] = np.array([Fraction(1)] * n, dtype=object)
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return solve(A.tolist(), rhs)
