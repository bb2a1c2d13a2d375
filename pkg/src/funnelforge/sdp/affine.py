"""Dense affine matrix expressions over a flat variable vector.

An AffExpr of shape (r, c) stores a coefficient tensor (r, c, d+1): the
first d slots multiply the packed variable vector, the last slot is the
constant part. Only constant-by-expression products are defined, which is
all an LMI needs.
"""

from __future__ import annotations

import numbers

import numpy as np


class AffExpr:
    __slots__ = ("coef",)

    # keep numpy from absorbing us in mixed expressions
    __array_ufunc__ = None

    def __init__(self, coef: np.ndarray):
        self.coef = np.asarray(coef, dtype=float)
        if self.coef.ndim != 3:
            raise ValueError("AffExpr coefficient tensor must be (rows, cols, d+1)")

    @property
    def shape(self) -> tuple[int, int]:
        return self.coef.shape[0], self.coef.shape[1]

    @property
    def dim(self) -> int:
        return self.coef.shape[2] - 1

    @property
    def T(self) -> "AffExpr":
        return AffExpr(np.swapaxes(self.coef, 0, 1))

    def value(self, x: np.ndarray) -> np.ndarray:
        xext = np.concatenate([np.asarray(x, dtype=float), [1.0]])
        return self.coef @ xext

    def _lift(self, other) -> "AffExpr":
        if isinstance(other, AffExpr):
            if other.dim != self.dim:
                raise ValueError("mixing expressions with different variable spaces")
            return other
        return const_expr(other, self.dim, self.shape)

    def __add__(self, other):
        o = self._lift(other)
        if o.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} + {o.shape}")
        return AffExpr(self.coef + o.coef)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return AffExpr(-self.coef)

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return AffExpr(self.coef * float(other))
        other = np.atleast_2d(np.asarray(other, dtype=float))
        if self.shape == (1, 1):
            # scalar expression times a constant matrix
            return AffExpr(np.einsum("ab,k->abk", other, self.coef[0, 0]))
        raise TypeError("can only scale an AffExpr by a number, or a 1x1 AffExpr by a matrix")

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = np.asarray(other, dtype=float)
        return AffExpr(np.einsum("abk,bc->ack", self.coef, other))

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        return AffExpr(np.einsum("ab,bck->ack", other, self.coef))

    def sym(self) -> "AffExpr":
        """He{expr} = expr + expr^T."""
        return self + self.T


def const_expr(M, dim: int, shape: tuple[int, int] | None = None) -> AffExpr:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if shape is not None and M.shape == (1, 1) and shape != (1, 1):
        M = np.full(shape, M[0, 0])
    coef = np.zeros(M.shape + (dim + 1,))
    coef[:, :, dim] = M
    return AffExpr(coef)


def blockmat(rows: list[list], dim: int) -> AffExpr:
    """Assemble a block matrix from AffExpr / ndarray / scalar entries."""
    lifted: list[list[AffExpr]] = []
    for row in rows:
        lifted.append([e if isinstance(e, AffExpr) else const_expr(e, dim) for e in row])
    row_h = [r[0].shape[0] for r in lifted]
    col_w = [e.shape[1] for e in lifted[0]]
    for r in lifted:
        if [e.shape[1] for e in r] != col_w:
            raise ValueError("inconsistent block column widths")
        if len({e.shape[0] for e in r}) != 1:
            raise ValueError("inconsistent block row heights")
    coef = np.zeros((sum(row_h), sum(col_w), dim + 1))
    i = 0
    for r, h in zip(lifted, row_h):
        j = 0
        for e, w in zip(r, col_w):
            coef[i : i + h, j : j + w, :] = e.coef
            j += w
        i += h
    return AffExpr(coef)
