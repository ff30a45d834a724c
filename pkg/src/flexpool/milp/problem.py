"""Mixed-integer linear program container.

Constraints are stored row-wise as sparse (index, coefficient) pairs so
large instances can be built and exported without a dense matrix; the
built-in solvers densify what they need at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

RELATIONS = ("<=", ">=", "=")


@dataclass(frozen=True)
class SolverOptions:
    abs_gap: float = 0.0          # absolute optimality gap at which search stops
    time_limit: float | None = None   # s of wall clock, None = unlimited
    node_limit: int | None = None     # LPs solved after the root, None = unlimited

    def __post_init__(self):
        if not np.isfinite(self.abs_gap) or self.abs_gap < 0:
            raise ValueError("abs_gap must be finite and nonnegative")


class MilpProblem:
    """Linear objective, linear constraints, boxed variables, binary flags."""

    def __init__(self, name: str = "", sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.name = name
        self.sense = sense
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_integer: list[bool] = []
        self.rows: list[np.ndarray] = []       # column indices per constraint
        self.coefs: list[np.ndarray] = []      # matching coefficients
        self.relations: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.objective: dict[int, float] = {}
        self._matrix_cache = None

    # -- construction -------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_constraints(self) -> int:
        return len(self.rows)

    def add_variable(self, name: str, lb: float, ub: float, integer: bool = False) -> int:
        if lb > ub:
            raise ValueError(f"variable {name}: lb {lb} > ub {ub}")
        if integer and not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError(f"integer variable {name} must have finite bounds")
        if integer and not (lb == 0.0 and ub in (0.0, 1.0)):
            raise ValueError(f"integer variable {name} must be binary (bounds 0/1)")
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.is_integer.append(bool(integer))
        self._matrix_cache = None
        return len(self.var_names) - 1

    def add_constraint(self, indices, coefs, relation: str, rhs: float, name: str = "") -> int:
        if relation not in RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        idx = np.asarray(indices, dtype=np.int64)
        cf = np.asarray(coefs, dtype=float)
        if idx.shape != cf.shape or idx.ndim != 1:
            raise ValueError("indices and coefficients must be matching 1-D arrays")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_vars):
            raise ValueError("constraint references undeclared variables")
        if not np.all(np.isfinite(cf)) or not np.isfinite(rhs):
            raise ValueError("constraint data must be finite")
        self.rows.append(idx)
        self.coefs.append(cf)
        self.relations.append(relation)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"c{len(self.rows) - 1}")
        self._matrix_cache = None
        return len(self.rows) - 1

    def set_objective(self, terms: dict[int, float], sense: str | None = None) -> None:
        for j in terms:
            if not 0 <= j < self.n_vars:
                raise ValueError("objective references undeclared variables")
        self.objective = {int(j): float(v) for j, v in terms.items()}
        if sense is not None:
            if sense not in ("min", "max"):
                raise ValueError("sense must be 'min' or 'max'")
            self.sense = sense

    # -- views --------------------------------------------------------------

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def constraint_matrix(self) -> tuple[sparse.csc_matrix, sparse.csr_matrix]:
        """(A in CSC for column access, A^T in CSR for pricing), cached."""
        if self._matrix_cache is None:
            if not self.rows:
                csc = sparse.csc_matrix((0, self.n_vars))
                self._matrix_cache = (csc, csc.T.tocsr())
            else:
                indptr = np.zeros(len(self.rows) + 1, dtype=np.int64)
                np.cumsum([r.size for r in self.rows], out=indptr[1:])
                data = np.concatenate(self.coefs)
                indices = np.concatenate(self.rows)
                csr = sparse.csr_matrix(
                    (data, indices, indptr), shape=(len(self.rows), self.n_vars)
                )
                csr.sum_duplicates()
                csc = csr.tocsc()
                self._matrix_cache = (csc, csc.T.tocsr())
        return self._matrix_cache

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lb, dtype=float), np.asarray(self.ub, dtype=float)

    def constraint_value(self, row: int, x: np.ndarray) -> float:
        return float(np.dot(self.coefs[row], x[self.rows[row]]))

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(v * x[j] for j, v in self.objective.items()))

    def is_feasible(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        lb, ub = self.bounds_arrays()
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            return False
        for i in range(self.n_constraints):
            v = self.constraint_value(i, x)
            rel, rhs = self.relations[i], self.rhs[i]
            if rel == "<=" and v > rhs + tol:
                return False
            if rel == ">=" and v < rhs - tol:
                return False
            if rel == "=" and abs(v - rhs) > tol:
                return False
        return True


@dataclass(frozen=True)
class LpSolution:
    status: str                 # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = field(repr=False, default=None)
    objective: float = np.nan
    iterations: int = 0


@dataclass(frozen=True)
class MilpSolution:
    status: str                 # "optimal" | "infeasible" | "gap_unproven"
    x: np.ndarray | None = field(repr=False, default=None)
    objective: float = np.nan   # incumbent objective in the problem's sense
    bound: float = np.nan       # best proven bound in the problem's sense
    gap: float = np.nan         # |objective - bound|, inf without incumbent
    nodes: int = 0
    gap_proven: bool = False
