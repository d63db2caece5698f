"""Thin conic-programming layer shared by all precoder solvers.

Problems are linear objectives over variables subject to equality
constraints, per-variable nonnegativity, and second-order-cone
constraints on affine images.  The implementation delegates to the
Clarabel interior-point solver; nothing outside this module talks to the
solver directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

DEFAULT_TOL = 1e-8

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical"


@dataclass
class ConicProblem:
    """minimize c^T x  s.t.  A_eq x = b_eq,  x_i >= 0 (i in nonneg),
    and ||tail(F x + g)|| <= head(F x + g) for each SOC block."""

    n_vars: int
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    nonneg: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    socs: list = field(default_factory=list)   # list of (F, g)

    def validate(self) -> None:
        if self.c.shape != (self.n_vars,):
            raise ValueError("objective length mismatch")
        if (self.A_eq is None) != (self.b_eq is None):
            raise ValueError("A_eq and b_eq must be given together")
        if self.A_eq is not None:
            if self.A_eq.shape[1] != self.n_vars:
                raise ValueError("A_eq column count mismatch")
            if self.A_eq.shape[0] != self.b_eq.shape[0]:
                raise ValueError("A_eq / b_eq row mismatch")
        if self.nonneg.size and (self.nonneg.min() < 0 or self.nonneg.max() >= self.n_vars):
            raise ValueError("nonneg index out of range")
        for F, g in self.socs:
            if F.shape[1] != self.n_vars or F.shape[0] != g.shape[0]:
                raise ValueError("SOC block dimension mismatch")
            if F.shape[0] < 2:
                raise ValueError("SOC block needs at least 2 rows")


@dataclass(frozen=True)
class ConicResult:
    status: str
    primal: np.ndarray | None
    objective_value: float


_STATUS_MAP = {
    "Solved": OPTIMAL,
    "AlmostSolved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
    "AlmostDualInfeasible": UNBOUNDED,
}


def solve(p: ConicProblem, tol: float = DEFAULT_TOL) -> ConicResult:
    """Solve a conic problem; numerical failures come back as a status,
    never as an exception."""
    p.validate()
    rows, rhs, cones = [], [], []
    if p.A_eq is not None and p.A_eq.shape[0] > 0:
        rows.append(sparse.csc_matrix(p.A_eq))
        rhs.append(np.asarray(p.b_eq, dtype=float))
        cones.append(clarabel.ZeroConeT(p.A_eq.shape[0]))
    if p.nonneg.size:
        sel = sparse.csc_matrix(
            (-np.ones(p.nonneg.size), (np.arange(p.nonneg.size), p.nonneg)),
            shape=(p.nonneg.size, p.n_vars),
        )
        rows.append(sel)
        rhs.append(np.zeros(p.nonneg.size))
        cones.append(clarabel.NonnegativeConeT(p.nonneg.size))
    for F, g in p.socs:
        rows.append(sparse.csc_matrix(-np.asarray(F, dtype=float)))
        rhs.append(np.asarray(g, dtype=float))
        cones.append(clarabel.SecondOrderConeT(F.shape[0]))

    if rows:
        A = sparse.vstack(rows, format="csc")
        b = np.concatenate(rhs)
    else:
        A = sparse.csc_matrix((0, p.n_vars))
        b = np.zeros(0)

    P = sparse.csc_matrix((p.n_vars, p.n_vars))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    try:
        solver = clarabel.DefaultSolver(P, np.asarray(p.c, dtype=float), A, b,
                                        cones, settings)
        sol = solver.solve()
    except BaseException:
        return ConicResult(NUMERICAL, None, float("nan"))

    status = _STATUS_MAP.get(str(sol.status), NUMERICAL)
    if status == OPTIMAL:
        x = np.asarray(sol.x, dtype=float)
        return ConicResult(OPTIMAL, x, float(p.c @ x))
    return ConicResult(status, None, float("nan"))
