"""Precoder solvers: feasibility, power minimization, and SINR balancing.

All solvers consume a :class:`~slpkit.system_model.StackedSystem` and
return :class:`~slpkit.system_model.PrecodeSolution`.  The reported
``min_sinr_achieved`` is always computed post-hoc from the transmit
vector (min_k ||H_k u||^2 / sigma^2) so that every balancing method is
comparable on the same axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic_backend as cb
from .dpcir import FREE, NONNEG, ZERO
from .system_model import PrecodeSolution, StackedSystem

DELTA_TOL = 1e-6


class PrecoderError(ValueError):
    """Raised for parameter/usage errors (not solver failures)."""


@dataclass(frozen=True)
class MaxMinConfig:
    """Knobs for the SINR-balancing solvers."""

    p_max: float
    epsilon: float = 1e-3
    max_iter: int = 100
    n_delta: int = 5
    interval: tuple = (0.0, 2.5)

    def __post_init__(self):
        if self.p_max <= 0:
            raise PrecoderError("p_max must be positive")
        lo, hi = self.interval
        if lo < 0 or hi <= lo or self.n_delta < 2:
            raise PrecoderError("need interval hi > lo >= 0 and n_delta >= 2")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.interval[0], self.interval[1], self.n_delta)


@dataclass(frozen=True)
class FeasibilityVerdict:
    sufficient: bool
    zf_power: float


# ---------------------------------------------------------------------------
# zero forcing and feasibility

def zf_transmit(sys: StackedSystem, target: np.ndarray | None = None) -> np.ndarray:
    """Least-norm solution of G u = target (default Sigma Gamma^{1/2}(b+c))."""
    if target is None:
        target = sys.power_target()
    u, *_ = np.linalg.lstsq(sys.G, target, rcond=None)
    residual = np.linalg.norm(sys.G @ u - target)
    if residual > 1e-8 * max(1.0, np.linalg.norm(target)):
        raise PrecoderError(
            f"stacked system is inconsistent (residual {residual:.3g}); "
            "zero-forcing point does not exist"
        )
    return u


def feasibility_check(sys: StackedSystem, P: float) -> FeasibilityVerdict:
    """Sufficient (not necessary) condition: the zero-forcing point fits in
    the power budget.  sufficient=False means unknown, not infeasible."""
    u = zf_transmit(sys)
    power = float(u @ u)
    return FeasibilityVerdict(sufficient=bool(power <= P + 1e-9), zf_power=power)


# ---------------------------------------------------------------------------
# power minimization

def _power_row_rules(sys: StackedSystem) -> list:
    # power problems keep the stored sign rules (full rows are all nonneg)
    return list(sys.row_constraint)


def _solve_power(sys: StackedSystem, target: np.ndarray, peak: bool) -> PrecodeSolution:
    L, n2 = sys.G.shape
    N = n2 // 2
    rules = _power_row_rules(sys)
    var_rows = [r for r in range(L) if rules[r] != ZERO]
    nv = len(var_rows)
    n = n2 + nv + 1            # [u, delta_vars, t]
    t_idx = n - 1

    c = np.zeros(n)
    c[t_idx] = 1.0
    A_eq = np.zeros((L, n))
    A_eq[:, :n2] = sys.G
    for col, r in enumerate(var_rows):
        A_eq[r, n2 + col] = -1.0
    b_eq = target.copy()
    nonneg = np.array(
        [n2 + col for col, r in enumerate(var_rows) if rules[r] == NONNEG],
        dtype=int,
    )
    socs = []
    if peak:
        for a in range(N):
            F = np.zeros((3, n))
            F[0, t_idx] = 1.0
            F[1, a] = 1.0
            F[2, N + a] = 1.0
            socs.append((F, np.zeros(3)))
    else:
        F = np.zeros((n2 + 1, n))
        F[0, t_idx] = 1.0
        F[1:, :n2] = np.eye(n2)
        socs.append((F, np.zeros(n2 + 1)))

    res = cb.solve(cb.ConicProblem(n, c, A_eq, b_eq, nonneg, socs))
    if res.status != cb.OPTIMAL:
        status = "infeasible" if res.status == cb.INFEASIBLE else "numerical"
        return PrecodeSolution(np.zeros(n2), np.zeros(L), float("nan"), status)
    x = res.primal
    u = x[:n2]
    delta = np.zeros(L)
    for col, r in enumerate(var_rows):
        delta[r] = x[n2 + col]
    if peak:
        ue = u[:N] ** 2 + u[N:] ** 2
        objective = float(ue.max())
    else:
        objective = float(u @ u)
    return PrecodeSolution(u, delta, objective, "optimal")


def power_min_qp(sys: StackedSystem, peak: bool = False) -> PrecodeSolution:
    """Minimize total (or peak per-antenna complex) transmit power subject
    to G u = Sigma Gamma^{1/2}(b+c) + Delta, Delta >= 0."""
    return _solve_power(sys, sys.power_target(), peak)


def power_min_reduced(sys: StackedSystem) -> PrecodeSolution:
    """Displacement-only reformulation: minimize ||pinv(G)(target + W Delta)||
    over Delta >= 0 on the boundary users' rows, then reconstruct u."""
    if sys.K > sys.N:
        raise PrecoderError(f"reduced power solver needs K <= N (K={sys.K}, N={sys.N})")
    L, n2 = sys.G.shape
    target = sys.power_target()
    rules = list(sys.row_constraint)
    var_rows = [
        r for r in range(L)
        if int(sys.row_user[r]) in sys.boundary_users and rules[r] != ZERO
    ]
    Gp = np.linalg.pinv(sys.G)
    u0 = Gp @ target
    nv = len(var_rows)
    n = nv + 1
    t_idx = nv
    c = np.zeros(n)
    c[t_idx] = 1.0
    M = Gp[:, var_rows] if nv else np.zeros((n2, 0))
    F = np.zeros((n2 + 1, n))
    F[0, t_idx] = 1.0
    if nv:
        F[1:, :nv] = M
    g = np.concatenate([[0.0], u0])
    nonneg = np.array(
        [col for col, r in enumerate(var_rows) if rules[r] == NONNEG], dtype=int
    )
    res = cb.solve(cb.ConicProblem(n, c, None, None, nonneg, [(F, g)]))
    if res.status != cb.OPTIMAL:
        status = "infeasible" if res.status == cb.INFEASIBLE else "numerical"
        return PrecodeSolution(np.zeros(n2), np.zeros(L), float("nan"), status)
    x = res.primal
    delta = np.zeros(L)
    for col, r in enumerate(var_rows):
        delta[r] = x[col]
    u = u0 + (M @ x[:nv] if nv else 0.0)
    # the reconstruction must actually satisfy the stacked equalities
    residual = np.linalg.norm(sys.G @ u - (target + delta))
    if residual > 1e-6 * max(1.0, np.linalg.norm(target)):
        return PrecodeSolution(u, delta, float("nan"), "numerical")
    return PrecodeSolution(u, delta, float(u @ u), "optimal")


# ---------------------------------------------------------------------------
# SINR balancing

def _require_balancing(sys: StackedSystem) -> None:
    if not sys.reduced:
        raise PrecoderError("balancing solvers need a reduced-assembly system")


def _balance_rows(sys: StackedSystem):
    """Row classification for balancing: boundary users keep their stored
    rules; every non-boundary row is pinned to zero."""
    rules = []
    for r in range(sys.L):
        if int(sys.row_user[r]) in sys.boundary_users:
            rules.append(sys.row_constraint[r])
        else:
            rules.append(ZERO)
    return rules


def _solve_balance(sys: StackedSystem, sigma: float, P: float,
                   lam_rows, fixed: dict, lam_floor: float | None = None):
    """Maximize lambda s.t. G u = sigma (b+c) + Delta, power cap, with
    delta_r >= max(lambda, 0) on lam_rows (the displacement stays
    nonnegative even when the floor is negative), delta_r = fixed[r] on
    fixed rows, and the per-row sign rules elsewhere.

    Returns (status, u, delta, lambda)."""
    L, n2 = sys.G.shape
    rules = _balance_rows(sys)
    lam_rows = list(lam_rows)
    target = sys.balance_target(sigma)

    free_rows, plain_nonneg = [], []
    for r in range(L):
        if r in fixed or r in lam_rows or rules[r] == ZERO:
            continue
        if rules[r] == FREE:
            free_rows.append(r)
        else:
            plain_nonneg.append(r)

    # variables: [u, delta_r (lam rows), slack s_r (lam rows,
    # = delta_r - lambda), delta_r for plain nonneg rows, delta_r for free
    # rows, lambda]
    nl = len(lam_rows)
    nf = 1 if lam_floor is not None else 0
    nv = 2 * nl + len(plain_nonneg) + len(free_rows) + nf
    n = n2 + nv + 1
    lam_idx = n - 1
    floor_idx = n - 2 if nf else None
    col_of, slack_of = {}, {}
    col = n2
    for r in lam_rows:
        col_of[r] = col
        slack_of[r] = col + nl
        col += 1
    col += nl
    for r in plain_nonneg + free_rows:
        col_of[r] = col
        col += 1

    c = np.zeros(n)
    c[lam_idx] = -1.0
    A_eq = np.zeros((L + nl + nf, n))
    A_eq[:L, :n2] = sys.G
    b_eq = np.concatenate([target, np.zeros(nl + nf)])
    for j, r in enumerate(lam_rows):
        A_eq[r, col_of[r]] = -1.0
        # delta_r - s_r - lambda = 0 enforces delta_r >= lambda
        A_eq[L + j, col_of[r]] = 1.0
        A_eq[L + j, slack_of[r]] = -1.0
        A_eq[L + j, lam_idx] = -1.0
    for r in plain_nonneg + free_rows:
        A_eq[r, col_of[r]] = -1.0
    for r, val in fixed.items():
        b_eq[r] += float(val)
    if nf:
        # lambda - q = lam_floor with q >= 0: a known-feasible hard floor
        # (tiny backoff absorbs the previous solve's readout noise)
        A_eq[L + nl, lam_idx] = 1.0
        A_eq[L + nl, floor_idx] = -1.0
        b_eq[L + nl] = float(lam_floor) - 9e-10
    nonneg = np.array(
        [col_of[r] for r in lam_rows] + [slack_of[r] for r in lam_rows]
        + [col_of[r] for r in plain_nonneg]
        + ([floor_idx] if nf else []),
        dtype=int,
    )
    F = np.zeros((n2 + 1, n))
    F[1:, :n2] = np.eye(n2)
    g = np.zeros(n2 + 1)
    g[0] = np.sqrt(P)

    problem = cb.ConicProblem(n, c, A_eq, b_eq, nonneg, [(F, g)])
    # tight tolerance keeps the delta trace clean; fall back to the default
    # when the interior-point method stalls short of it
    res = cb.solve(problem, tol=1e-10)
    if res.status == cb.NUMERICAL:
        res = cb.solve(problem)
    if res.status != cb.OPTIMAL:
        status = "infeasible" if res.status == cb.INFEASIBLE else "numerical"
        return status, None, None, float("nan")
    x = res.primal
    u = x[:n2]
    if nf:
        lam = float(lam_floor) - 9e-10 + max(float(x[floor_idx]), 0.0)
    else:
        lam = float(x[lam_idx])
    delta = np.zeros(L)
    for r in lam_rows:
        # project interior-point noise off the nonneg cone
        delta[r] = max(x[col_of[r]], 0.0, lam)
    for r in plain_nonneg:
        delta[r] = max(x[col_of[r]], 0.0)
    for r in free_rows:
        delta[r] = x[col_of[r]]
    for r, val in fixed.items():
        delta[r] = float(val)
    return "optimal", u, delta, lam


def _block_rows(sys: StackedSystem, block: int) -> list:
    return [r for r in range(sys.L) if sys.row_block[r] == block]


def _spanning_rows(sys: StackedSystem) -> list:
    return [r for r in range(sys.L) if sys.row_block[r] in (1, 2)]


def maxmin_fixed(sys: StackedSystem, sigma: float, cfg: MaxMinConfig,
                 delta1_fixed: dict) -> PrecodeSolution:
    """Balancing with the first displacement coordinate pinned per boundary
    user; maximizes the common floor of the second coordinates."""
    _require_balancing(sys)
    rows1 = _block_rows(sys, 1)
    rows2 = _block_rows(sys, 2)
    fixed = {}
    for r in rows1:
        k = int(sys.row_user[r])
        if k not in delta1_fixed:
            raise PrecoderError(f"missing pinned value for user {k}")
        v = float(delta1_fixed[k])
        if v < 0:
            raise PrecoderError("pinned displacement must be nonnegative")
        fixed[r] = v
    status, u, delta, lam = _solve_balance(sys, sigma, cfg.p_max, rows2, fixed)
    if status != "optimal":
        return PrecodeSolution(np.zeros(2 * sys.N), np.zeros(sys.L),
                               float("nan"), status)
    return PrecodeSolution(u, delta, lam, "optimal",
                           min_sinr_achieved=sys.min_sinr(u, sigma),
                           info={"lambda": lam})


def maxmin_exhaustive(sys: StackedSystem, sigma: float,
                      cfg: MaxMinConfig) -> PrecodeSolution:
    """Grid search over the pinned coordinate of every boundary user,
    keeping the best post-hoc minimum SINR (ties: lexicographically
    smallest grid point)."""
    _require_balancing(sys)
    rows1 = _block_rows(sys, 1)
    grid_users = sorted({int(sys.row_user[r]) for r in rows1})
    n_combos = cfg.n_delta ** len(grid_users)
    if n_combos > 10**5:
        raise PrecoderError(
            f"{n_combos} grid combinations exceed the exhaustive-search guard"
        )
    grid = cfg.grid
    best = None
    best_point = None
    from itertools import product

    for combo in product(range(cfg.n_delta), repeat=len(grid_users)):
        pin = {k: float(grid[g]) for k, g in zip(grid_users, combo)}
        sol = maxmin_fixed(sys, sigma, cfg, pin)
        if sol.status != "optimal":
            continue
        if best is None or sol.min_sinr_achieved > best.min_sinr_achieved + 1e-12:
            best = sol
            best_point = pin
    if best is None:
        return PrecodeSolution(np.zeros(2 * sys.N), np.zeros(sys.L),
                               float("nan"), "infeasible")
    info = dict(best.info)
    info["grid_point"] = best_point
    return PrecodeSolution(best.u_real, best.delta, best.objective, "optimal",
                           min_sinr_achieved=best.min_sinr_achieved, info=info)


def maxmin_relaxed(sys: StackedSystem, sigma: float,
                   cfg: MaxMinConfig) -> PrecodeSolution:
    """Convex relaxation: jointly lower-bound both displacement
    coordinates of every boundary user by the maximized floor."""
    _require_balancing(sys)
    lam_rows = _spanning_rows(sys)
    status, u, delta, lam = _solve_balance(sys, sigma, cfg.p_max, lam_rows, {})
    if status != "optimal":
        return PrecodeSolution(np.zeros(2 * sys.N), np.zeros(sys.L),
                               float("nan"), status)
    return PrecodeSolution(u, delta, lam, "optimal",
                           min_sinr_achieved=sys.min_sinr(u, sigma),
                           info={"lambda": lam})


def maxmin_bcd(sys: StackedSystem, sigma: float, cfg: MaxMinConfig,
               warm_start: bool = False) -> PrecodeSolution:
    """Alternating maximization over the two displacement blocks.

    Odd iterations fix the second block and raise the floor of the first,
    even iterations the reverse.  The trace records, per iteration, the
    smallest displacement over both blocks; it is nondecreasing because
    the previous iterate stays feasible for each subproblem.  The returned
    solution is the iterate with the best post-hoc minimum SINR (the
    warm start seeds, and therefore never loses to, the relaxed solution).
    """
    _require_balancing(sys)
    rows1 = _block_rows(sys, 1)
    rows2 = _block_rows(sys, 2)
    span = rows1 + rows2
    if not span:
        raise PrecoderError("no spanning displacement rows; nothing to balance")

    delta = np.zeros(sys.L)
    candidates = []
    prev_metric = None
    if warm_start:
        rel = maxmin_relaxed(sys, sigma, cfg)
        if rel.status != "optimal":
            return rel
        delta = rel.delta.copy()
        candidates.append((rel.min_sinr_achieved, rel.u_real, rel.delta))
        prev_metric = float(np.min(delta[span]))

    trace = []
    status = "max_iter"
    n_iter = 0
    for n in range(1, cfg.max_iter + 1):
        n_iter = n
        if n % 2 == 1:
            lam_rows, fixed_rows = rows1, rows2
        else:
            lam_rows, fixed_rows = rows2, rows1
        if not lam_rows:
            lam_rows, fixed_rows = fixed_rows, lam_rows
        fixed = {r: delta[r] for r in fixed_rows}
        st, u, new_delta, _lam = _solve_balance(sys, sigma, cfg.p_max,
                                                lam_rows, fixed,
                                                lam_floor=prev_metric)
        if st != "optimal":
            if not candidates:
                return PrecodeSolution(np.zeros(2 * sys.N), np.zeros(sys.L),
                                       float("nan"), st)
            status = st
            break
        delta = new_delta
        candidates.append((sys.min_sinr(u, sigma), u, delta.copy()))
        metric = float(np.min(delta[span]))
        trace.append(metric)
        if prev_metric is not None and abs(metric - prev_metric) <= cfg.epsilon:
            status = "optimal"
            break
        prev_metric = metric

    best = max(candidates, key=lambda t: t[0])
    return PrecodeSolution(best[1], best[2], trace[-1] if trace else float("nan"),
                           status,
                           min_sinr_achieved=best[0],
                           trace=tuple(trace),
                           info={"iterations": n_iter, "warm_start": warm_start})


def maxmin_bisection(sys: StackedSystem, sigma: float,
                     cfg: MaxMinConfig) -> PrecodeSolution:
    """Balance SINR through the power-minimization connection: bisect a
    common threshold until the minimum power meets the budget.  Only valid
    when every symbol is a boundary point of a constant-envelope set."""
    _require_balancing(sys)
    pts = sys.constellation.points
    radii = np.linalg.norm(pts, axis=1)
    if radii.max() - radii.min() > 1e-9:
        raise PrecoderError(
            "bisection balancing needs a constant-envelope constellation"
        )
    if len(sys.boundary_users) != sys.K:
        raise PrecoderError("bisection balancing needs all symbols on the hull")

    P = cfg.p_max
    s_pow = radii[sys.assignment.indices] ** 2
    gain = np.array([np.linalg.norm(row) ** 2 for row in sys.channels.rows])
    hi = P * float(np.max(gain / (sigma**2 * s_pow)))
    lo = 0.0

    def pmin(gamma: float):
        target = sigma * np.sqrt(gamma) * sys.offsets
        return _solve_power(sys, target, peak=False)

    best = None
    gamma_star = lo
    n_iter = 0
    for n_iter in range(1, 101):
        mid = 0.5 * (lo + hi)
        sol = pmin(mid)
        if sol.status != "optimal":
            hi = mid
            continue
        if sol.objective <= P:
            lo, gamma_star, best = mid, mid, sol
            if P - sol.objective <= 1e-7 * P:
                break
        else:
            hi = mid
        if hi - lo <= 1e-7 * max(1.0, hi):
            break
    if best is None:
        return PrecodeSolution(np.zeros(2 * sys.N), np.zeros(sys.L),
                               float("nan"), "numerical")
    u = best.u_real
    return PrecodeSolution(u, best.delta, float(u @ u), "optimal",
                           min_sinr_achieved=sys.min_sinr(u, sigma),
                           info={"gamma_star": gamma_star,
                                 "iterations": n_iter})


def zf_maxmin_baseline(sys: StackedSystem, sigma: float, P: float) -> PrecodeSolution:
    """Zero-forcing fairness baseline: scale the unit-threshold ZF point to
    exhaust the power budget."""
    u0 = zf_transmit(sys, target=sys.balance_target(sigma))
    p0 = float(u0 @ u0)
    if p0 <= 0:
        raise PrecoderError("zero-forcing point has zero power")
    u = u0 * np.sqrt(P / p0)
    return PrecodeSolution(u, np.zeros(sys.L), float(u @ u), "optimal",
                           min_sinr_achieved=sys.min_sinr(u, sigma))


# ---------------------------------------------------------------------------
# solution certification

def membership_violation(sys: StackedSystem, u_real: np.ndarray,
                         scales: np.ndarray) -> float:
    """Worst violation of the scaled-DPCIR membership of each user's
    noise-free received point (0 when every constraint holds)."""
    worst = 0.0
    for k in range(sys.K):
        y = sys.h_real[k] @ u_real
        d = sys.dpcirs[k]
        lhs = d.A @ y
        rhs = float(scales[k]) * (d.b + d.c)
        worst = max(worst, float(np.max(rhs - lhs, initial=0.0)))
    return worst


def power_membership_violation(sys: StackedSystem, u_real: np.ndarray) -> float:
    a = sys.assignment
    return membership_violation(sys, u_real, a.sigma * np.sqrt(a.gamma))


def balance_membership_violation(sys: StackedSystem, u_real: np.ndarray,
                                 sigma: float) -> float:
    return membership_violation(sys, u_real, np.full(sys.K, float(sigma)))
