"""Dense Phase-I simplex for linear feasibility problems.

Solves "find x with A_eq x = b_eq and G x <= h" by minimizing the sum of
artificial variables with Bland's pivoting rule (finite termination). The
problems fed to it here are small contact-force systems, so a dense tableau
is the right tool.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import LpValidationError

DEFAULT_TOL = 1e-7
MAX_ITERATIONS = 10_000


class LpStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class LinearProgram:
    """Feasibility problem: A_eq x = b_eq, G x <= h.

    Variables are free by default; ``nonneg`` restricts the domain to x >= 0
    (handled natively, without extra constraint rows).
    """

    n: int
    a_eq: np.ndarray
    b_eq: np.ndarray
    g_ub: np.ndarray
    h_ub: np.ndarray
    nonneg: bool = False

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_eq, dtype=np.float64)).reshape(-1, self.n or 0)
        g = np.atleast_2d(np.asarray(self.g_ub, dtype=np.float64)).reshape(-1, self.n or 0)
        b = np.asarray(self.b_eq, dtype=np.float64).reshape(-1)
        h = np.asarray(self.h_ub, dtype=np.float64).reshape(-1)
        if self.n < 1:
            raise LpValidationError("linear program needs at least one variable")
        if a.shape[0] != b.shape[0] or g.shape[0] != h.shape[0]:
            raise LpValidationError(
                f"constraint row mismatch: A {a.shape} vs b {b.shape}, G {g.shape} vs h {h.shape}"
            )
        for arr, name in ((a, "A_eq"), (b, "b_eq"), (g, "G"), (h, "h")):
            if arr.size and not np.isfinite(arr).all():
                raise LpValidationError(f"{name} contains non-finite coefficients")
        for arr, name in ((a, "a_eq"), (b, "b_eq"), (g, "g_ub"), (h, "h_ub")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def describe(self) -> str:
        """Plain-text dump of the system, for debugging."""
        lines = [f"LinearProgram n={self.n} eq={self.a_eq.shape[0]} ub={self.g_ub.shape[0]}"]
        for row, rhs in zip(self.a_eq, self.b_eq):
            lines.append("  " + " ".join(f"{v:+.6g}" for v in row) + f" = {rhs:+.6g}")
        for row, rhs in zip(self.g_ub, self.h_ub):
            lines.append("  " + " ".join(f"{v:+.6g}" for v in row) + f" <= {rhs:+.6g}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    phase1_objective: float = float("nan")
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.FEASIBLE


def solve_feasibility(
    lp: LinearProgram, tol: float = DEFAULT_TOL, max_iterations: int = MAX_ITERATIONS
) -> LpResult:
    """Phase-I simplex feasibility search.

    FEASIBLE results carry a certificate x verified against the constraints
    to ``tol``; INFEASIBLE means the Phase-I optimum stayed above ``tol``;
    INDETERMINATE is reserved for iteration-limit or numerical breakdown.
    """
    n = lp.n
    m_eq = lp.a_eq.shape[0]
    m_ub = lp.g_ub.shape[0]
    rows = m_eq + m_ub

    if rows == 0:
        return LpResult(LpStatus.FEASIBLE, np.zeros(n), 0.0, 0)

    # Free variables become x = xp - xn with xp, xn >= 0 (skipped for nonneg
    # problems); inequalities gain a slack each. Rows are scaled and flipped
    # so every RHS is non-negative.
    body = np.vstack([lp.a_eq, lp.g_ub]) if m_eq and m_ub else (lp.a_eq if m_eq else lp.g_ub)
    rhs = np.concatenate([lp.b_eq, lp.h_ub])
    scale = np.abs(body).max(axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    body = body / scale[:, None]
    rhs = rhs / scale

    slack = np.zeros((rows, m_ub))
    slack[m_eq:, :] = np.eye(m_ub)
    neg = rhs < 0
    if lp.nonneg:
        full = np.hstack([body, slack])
    else:
        full = np.hstack([body, -body, slack])
    full[neg] *= -1.0
    rhs = np.where(neg, -rhs, rhs)

    # Inequality rows with positive slack sign start with the slack basic;
    # every other row gets an artificial variable.
    n_free = n if lp.nonneg else 2 * n
    needs_artificial = np.ones(rows, dtype=bool)
    basis = np.full(rows, -1, dtype=np.int64)
    slack_cols = n_free + np.arange(m_ub)
    for r in range(m_eq, rows):
        if not neg[r]:
            needs_artificial[r] = False
            basis[r] = slack_cols[r - m_eq]
    art_rows = np.flatnonzero(needs_artificial)
    n_art = art_rows.size
    art = np.zeros((rows, n_art))
    art[art_rows, np.arange(n_art)] = 1.0
    tableau = np.hstack([full, art, rhs[:, None]])
    basis[art_rows] = full.shape[1] + np.arange(n_art)

    ncols = tableau.shape[1] - 1
    full_cols = full.shape[1]
    c_vec = np.zeros(ncols + 1)
    c_vec[full_cols : full_cols + n_art] = 1.0

    def exact_cost_row() -> np.ndarray:
        # reduced costs recomputed from the basis; the incremental update
        # drifts over long degenerate runs
        basic_art = basis >= full_cols
        if basic_art.any():
            return c_vec - tableau[basic_art].sum(axis=0)
        return c_vec.copy()

    def exact_objective() -> float:
        basic_art = basis >= full_cols
        return float(tableau[basic_art, -1].sum()) if basic_art.any() else 0.0

    cost = exact_cost_row()
    iterations = 0
    stale = 0
    # Dantzig pivoting is fast on these heavily degenerate systems; Bland's
    # rule takes over after a stall to guarantee no cycling.
    blands = False
    stall = 0
    last_objective = exact_objective()
    while True:
        if -cost[-1] <= tol / 10 and exact_objective() <= tol / 10:
            break  # artificials already driven to ~0
        entering = -1
        if blands:
            for j in range(ncols):  # Bland: first improving column
                if cost[j] < -1e-12:
                    entering = j
                    break
        else:
            j = int(np.argmin(cost[:-1]))
            if cost[j] < -1e-12:
                entering = j
        if entering < 0:
            if stale == 0:
                cost = exact_cost_row()
                stale = 1
                continue
            break  # optimal under exact reduced costs
        col = tableau[:, entering]
        eligible = np.flatnonzero(col > 1e-9)
        if eligible.size == 0:
            # Phase-I is bounded below by 0, so an apparent ray means the
            # cost row degraded; retry once with exact reduced costs.
            if stale == 0:
                cost = exact_cost_row()
                stale = 1
                continue
            return LpResult(LpStatus.INDETERMINATE, None, exact_objective(), iterations)
        ratios = tableau[eligible, -1] / col[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best]  # exact minimum only
        leaving = int(ties[np.argmin(basis[ties])])  # Bland: lowest basic index
        pivot = tableau[leaving, entering]
        tableau[leaving] /= pivot
        factors = tableau[:, entering].copy()
        factors[leaving] = 0.0
        tableau -= factors[:, None] * tableau[leaving][None, :]
        cost = cost - cost[entering] * tableau[leaving]
        basis[leaving] = entering
        iterations += 1
        stale = 0
        # degenerate pivots leave float dust on the RHS; clamp it before it
        # can amplify through later small pivots
        rhs_col = tableau[:, -1]
        if (rhs_col < -1e-7).any():
            return LpResult(LpStatus.INDETERMINATE, None, exact_objective(), iterations)
        np.clip(rhs_col, 0.0, None, out=rhs_col)
        if iterations % 32 == 0:
            cost = exact_cost_row()
        if not blands:
            obj = exact_objective()
            if obj < last_objective - 1e-12:
                last_objective = obj
                stall = 0
            else:
                stall += 1
                if stall > 64:
                    blands = True
        if iterations >= max_iterations:
            return LpResult(LpStatus.INDETERMINATE, None, exact_objective(), iterations)

    objective = exact_objective()
    if objective > tol:
        return LpResult(LpStatus.INFEASIBLE, None, objective, iterations)

    solution = np.zeros(ncols)
    solution[basis] = tableau[:, -1]
    x = solution[:n] if lp.nonneg else solution[:n] - solution[n : 2 * n]

    # verify the certificate by substitution before reporting feasibility
    if m_eq and np.abs(lp.a_eq @ x - lp.b_eq).max() > tol * 10:
        return LpResult(LpStatus.INDETERMINATE, None, objective, iterations)
    if m_ub and (lp.g_ub @ x - lp.h_ub).max() > tol * 10:
        return LpResult(LpStatus.INDETERMINATE, None, objective, iterations)
    return LpResult(LpStatus.FEASIBLE, x, objective, iterations)
