"""Determinant-maximization problem container and its JSON form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affine import AffExpr, const_expr

SYMMETRY_TOL = 1e-10


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class VarSpec:
    name: str
    kind: str  # "scalar" | "symmetric" | "matrix"
    rows: int
    cols: int
    offset: int
    lower: float | None = None
    upper: float | None = None

    @property
    def n_slots(self) -> int:
        if self.kind == "scalar":
            return 1
        if self.kind == "symmetric":
            return self.rows * (self.rows + 1) // 2
        return self.rows * self.cols


@dataclass(frozen=True)
class Constraint:
    name: str
    sense: str  # ">=0" | "<=0"
    tensor: np.ndarray  # (d+1, m, m), symmetric in the matrix axes

    @property
    def size(self) -> int:
        return self.tensor.shape[1]

    def matrix(self, x: np.ndarray) -> np.ndarray:
        xext = np.concatenate([x, [1.0]])
        return np.einsum("k,kab->ab", xext, self.tensor)

    def psd_tensor(self) -> np.ndarray:
        """Tensor of the equivalent >=0 constraint."""
        return self.tensor if self.sense == ">=0" else -self.tensor


class MaxDetProblem:
    """maximize log det(detvar) subject to affine matrix inequalities.

    Declare every variable before requesting expressions; scalar bounds are
    materialized as 1x1 constraint blocks when the problem freezes.
    """

    def __init__(self):
        self._specs: dict[str, VarSpec] = {}
        self._dim = 0
        self._frozen = False
        self.constraints: list[Constraint] = []
        self.detvar: str | None = None

    # -- variable declaration -------------------------------------------------

    def _add(self, spec: VarSpec):
        if self._frozen:
            raise RuntimeError("declare all variables before building expressions")
        if spec.name in self._specs:
            raise ValueError(f"duplicate variable {spec.name!r}")
        self._specs[spec.name] = spec
        self._dim += spec.n_slots

    def add_scalar(self, name: str, lower: float | None = None, upper: float | None = None):
        self._add(VarSpec(name, "scalar", 1, 1, self._dim, lower, upper))

    def add_symmetric(self, name: str, n: int):
        self._add(VarSpec(name, "symmetric", n, n, self._dim))

    def add_matrix(self, name: str, rows: int, cols: int):
        self._add(VarSpec(name, "matrix", rows, cols, self._dim))

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def specs(self) -> dict[str, VarSpec]:
        return dict(self._specs)

    # -- expressions ----------------------------------------------------------

    def _freeze(self):
        if self._frozen:
            return
        self._frozen = True
        for spec in self._specs.values():
            if spec.kind != "scalar":
                continue
            e = self.var(spec.name)
            if spec.lower is not None:
                self.add_psd(e - spec.lower, name=f"bound:{spec.name}>={spec.lower:g}")
            if spec.upper is not None:
                self.add_psd(spec.upper - e, name=f"bound:{spec.name}<={spec.upper:g}")

    def var(self, name: str) -> AffExpr:
        self._freeze()
        spec = self._specs[name]
        coef = np.zeros((spec.rows, spec.cols, self._dim + 1))
        if spec.kind == "scalar":
            coef[0, 0, spec.offset] = 1.0
        elif spec.kind == "symmetric":
            k = spec.offset
            for i in range(spec.rows):
                for j in range(i, spec.rows):
                    coef[i, j, k] = 1.0
                    coef[j, i, k] = 1.0
                    k += 1
        else:
            k = spec.offset
            for i in range(spec.rows):
                for j in range(spec.cols):
                    coef[i, j, k] = 1.0
                    k += 1
        return AffExpr(coef)

    def constant(self, M) -> AffExpr:
        self._freeze()
        return const_expr(M, self._dim)

    def set_detvar(self, name: str):
        spec = self._specs.get(name)
        if spec is None or spec.kind != "symmetric":
            raise ValueError("detvar must name a symmetric matrix variable")
        self.detvar = name

    # -- constraints ----------------------------------------------------------

    def _add_constraint(self, expr: AffExpr, sense: str, name: str | None):
        self._freeze()
        if expr.dim != self._dim:
            raise DimensionMismatch("expression built against a different variable space")
        if expr.shape[0] != expr.shape[1]:
            raise ValueError("constraint blocks must be square")
        t = np.moveaxis(expr.coef, 2, 0)
        asym = float(np.max(np.abs(t - np.swapaxes(t, 1, 2)))) if t.size else 0.0
        if asym > SYMMETRY_TOL:
            raise ValueError(f"constraint block is not symmetric (max asymmetry {asym:g})")
        t = 0.5 * (t + np.swapaxes(t, 1, 2))
        self.constraints.append(Constraint(name or f"c{len(self.constraints)}", sense, t))

    def add_psd(self, expr: AffExpr, name: str | None = None):
        self._add_constraint(expr, ">=0", name)

    def add_nsd(self, expr: AffExpr, name: str | None = None):
        self._add_constraint(expr, "<=0", name)

    # -- packing --------------------------------------------------------------

    def pack(self, values: dict[str, np.ndarray | float]) -> np.ndarray:
        """Flatten named values into the solver vector."""
        self._freeze()
        x = np.zeros(self._dim)
        missing = set(self._specs) - set(values)
        if missing:
            raise DimensionMismatch(f"missing values for {sorted(missing)}")
        for name, val in values.items():
            spec = self._specs.get(name)
            if spec is None:
                raise DimensionMismatch(f"unknown variable {name!r}")
            if spec.kind == "scalar":
                x[spec.offset] = float(val)
                continue
            arr = np.asarray(val, dtype=float)
            if arr.shape != (spec.rows, spec.cols):
                raise DimensionMismatch(
                    f"{name}: expected shape {(spec.rows, spec.cols)}, got {arr.shape}"
                )
            if spec.kind == "symmetric":
                arr = 0.5 * (arr + arr.T)
                k = spec.offset
                for i in range(spec.rows):
                    for j in range(i, spec.rows):
                        x[k] = arr[i, j]
                        k += 1
            else:
                x[spec.offset : spec.offset + arr.size] = arr.ravel()
        return x

    def unpack(self, x: np.ndarray) -> dict[str, np.ndarray | float]:
        self._freeze()
        out: dict[str, np.ndarray | float] = {}
        for name, spec in self._specs.items():
            if spec.kind == "scalar":
                out[name] = float(x[spec.offset])
            elif spec.kind == "symmetric":
                M = np.zeros((spec.rows, spec.rows))
                k = spec.offset
                for i in range(spec.rows):
                    for j in range(i, spec.rows):
                        M[i, j] = M[j, i] = x[k]
                        k += 1
                out[name] = M
            else:
                out[name] = x[spec.offset : spec.offset + spec.n_slots].reshape(spec.rows, spec.cols)
        return out


@dataclass(frozen=True)
class MaxDetSolution:
    status: str  # "Optimal" | "Infeasible" | "MaxIterations"
    values: dict
    objective: float
    max_residual: float
    newton_iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "Optimal"


# -- JSON forms ----------------------------------------------------------------


def problem_to_json(p: MaxDetProblem) -> dict:
    """Documented debug form: variables, detvar, and per-constraint dense
    coefficient matrices in row-major order keyed by variable name."""
    p._freeze()
    out = {
        "variables": [
            {
                "name": s.name,
                "kind": s.kind,
                "rows": s.rows,
                "cols": s.cols,
                **({"lower": s.lower} if s.lower is not None else {}),
                **({"upper": s.upper} if s.upper is not None else {}),
            }
            for s in p._specs.values()
        ],
        "detvar": p.detvar,
        "constraints": [],
    }
    for c in p.constraints:
        entry = {
            "name": c.name,
            "sense": c.sense,
            "size": c.size,
            "constant": c.tensor[-1].ravel().tolist(),
            "coefficients": {},
        }
        for s in p._specs.values():
            for k in range(s.n_slots):
                mat = c.tensor[s.offset + k]
                if np.any(mat != 0.0):
                    entry["coefficients"][f"{s.name}[{k}]"] = mat.ravel().tolist()
        out["constraints"].append(entry)
    return out


def solution_to_json(sol: MaxDetSolution) -> dict:
    values = {}
    for name, v in sol.values.items():
        values[name] = float(v) if np.isscalar(v) or np.ndim(v) == 0 else np.asarray(v).ravel().tolist()
    return {
        "status": sol.status,
        "objective": sol.objective,
        "max_residual": sol.max_residual,
        "newton_iterations": sol.newton_iterations,
        "values": values,
    }
