"""Small dense linear programs: two-phase revised simplex.

Problems here have at most a few hundred variables, so dense linear algebra
in double precision is enough. Rows and columns are equilibrated before
solving, and the reported point is re-checked against the unscaled data; a
point that fails that check raises LpNumericalError instead of being returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
MAX_ITER = 50_000
RESIDUAL_TOL = 1e-8
GAP_TOL = 1e-7
HARRIS_TOL = 1e-10
STALL_LIMIT = 50
REL_PIVOT = 1e-6

RELATIONS = ("<=", "=", ">=")


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """maximize objective . x subject to relation-typed rows and variable bounds.

    ``constraints`` is a list of ``(row, relation, rhs)`` with relation one of
    ``"<="``, ``"="``, ``">="``. ``lower`` defaults to 0 and ``upper`` to +inf.
    """

    num_vars: int
    objective: np.ndarray
    constraints: list = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.num_vars)
        self.num_vars = n
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (n,):
            raise ValueError(f"objective has shape {self.objective.shape}, expected ({n},)")
        rows = []
        for row, rel, rhs in self.constraints:
            row = np.asarray(row, dtype=float)
            if row.shape != (n,):
                raise ValueError(f"constraint row has shape {row.shape}, expected ({n},)")
            if rel not in RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            if not math.isfinite(rhs):
                raise ValueError("constraint right-hand sides must be finite")
            rows.append((row, rel, float(rhs)))
        self.constraints = rows
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def add_constraint(self, row, relation, rhs):
        self.constraints.append((np.asarray(row, dtype=float), relation, float(rhs)))
        self.__post_init__()


@dataclass
class LpSolution:
    status: LpStatus
    objective_value: float
    primal: np.ndarray
    max_primal_residual: float = math.nan
    duality_gap_estimate: float = math.nan
    iterations: int = 0
    dual: np.ndarray | None = None  # d objective / d rhs, one per constraint


@dataclass
class ResidualReport:
    constraint_violation: float
    bound_violation: float
    objective_delta: float

    @property
    def passed(self) -> bool:
        return max(self.constraint_violation, self.bound_violation,
                   self.objective_delta) <= 1e-8


def check_solution(lp: LinearProgram, sol: LpSolution) -> ResidualReport:
    """Re-evaluate a primal point directly against the program data."""
    x = np.asarray(sol.primal, dtype=float)
    worst = 0.0
    for row, rel, rhs in lp.constraints:
        lhs = float(row @ x)
        if rel == "<=":
            v = lhs - rhs
        elif rel == ">=":
            v = rhs - lhs
        else:
            v = abs(lhs - rhs)
        worst = max(worst, v)
    with np.errstate(invalid="ignore"):
        below = np.where(np.isfinite(lp.lower), lp.lower - x, 0.0)
        above = np.where(np.isfinite(lp.upper), x - lp.upper, 0.0)
    bound = float(max(0.0, below.max(initial=0.0), above.max(initial=0.0)))
    delta = abs(float(lp.objective @ x) - sol.objective_value)
    return ResidualReport(max(worst, 0.0), bound, delta)


class _Unbounded(Exception):
    pass


class LpNumericalError(RuntimeError):
    """The simplex finished but its point fails the residual checks."""


def _harris(rows, xr, wr):
    bound = ((xr + HARRIS_TOL) / wr).min()
    ok = xr / wr <= bound
    return rows[ok & (wr >= wr[ok].max())]


def _revised_simplex(A, b, cost, basis, allowed, counter):
    """Minimise cost . z over A z = b, z >= 0 from a feasible ``basis``.

    The entering column is always the lowest-index improving one (Bland).
    The leaving row comes from a two-pass Harris ratio test, which prefers
    large pivots while keeping infeasibility below HARRIS_TOL. After
    STALL_LIMIT consecutive degenerate pivots the textbook Bland ratio test
    takes over until progress resumes, so cycling is impossible. Basic values
    and duals are recomputed from A every iteration, so no error accumulates.
    Returns (basis, basic values, duals).
    """
    m = A.shape[0]
    cand_cols = np.flatnonzero(allowed)
    stall = 0
    while True:
        if counter[0] > MAX_ITER:
            raise RuntimeError("simplex iteration limit reached")
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cost[basis])
        if m == 0:
            return basis, xb, y
        red = cost[cand_cols] - y @ A[:, cand_cols]
        red[np.isin(cand_cols, basis)] = 0.0
        neg = np.flatnonzero(red < -PIVOT_TOL)
        if neg.size == 0:
            return basis, xb, y
        j = cand_cols[neg[0]]
        w = np.linalg.solve(B, A[:, j])
        rows = np.flatnonzero(w > PIVOT_TOL)
        if rows.size == 0:
            raise _Unbounded
        xr = np.maximum(xb[rows], 0.0)
        wr = w[rows]
        ratios = xr / wr
        if stall < STALL_LIMIT:
            tied = None
            # skip tiny pivots when the rows they guard stay nearly feasible
            big = wr >= REL_PIVOT * wr.max()
            if not big.all():
                tied = _harris(rows[big], xr[big], wr[big])
                theta = ratios[np.isin(rows, tied)].max()
                if np.any(xr[~big] - theta * wr[~big] < -FEAS_TOL):
                    tied = None
            if tied is None:
                tied = _harris(rows, xr, wr)
        else:
            best = ratios.min()
            tied = rows[ratios <= best]
        r = min(tied, key=lambda i: basis[i])
        stall = stall + 1 if xr[rows == r][0] <= HARRIS_TOL else 0
        basis = list(basis)
        basis[r] = j
        counter[0] += 1


def _equilibrate(A):
    """Row then column scale factors putting every peak magnitude at one."""
    A = np.abs(A)
    rs = A.max(axis=1)
    rs[rs == 0] = 1.0
    A = A / rs[:, None]
    cs = A.max(axis=0)
    cs[cs == 0] = 1.0
    return 1.0 / rs, 1.0 / cs


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` to optimality, or report infeasibility / unboundedness."""
    n = lp.num_vars
    # x = shift + S z with z >= 0
    shift = np.zeros(n)
    cols = []  # (var index, sign)
    extra_rows = []  # (z column, upper limit) for finite ranges
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if math.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    S = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s

    rows, rels, rhs = [], [], []
    for row, rel, b in lp.constraints:
        rows.append(row @ S)
        rels.append(rel)
        rhs.append(b - row @ shift)
    for k, lim in extra_rows:
        r = np.zeros(nz)
        r[k] = 1.0
        rows.append(r)
        rels.append("<=")
        rhs.append(lim)
    m = len(rows)
    A0 = np.array(rows).reshape(m, nz)
    b0 = np.array(rhs, dtype=float)
    cost0 = -(lp.objective @ S)  # minimise
    const = float(lp.objective @ shift)

    if m == 0:
        if np.any(cost0 < -PIVOT_TOL):
            return LpSolution(LpStatus.UNBOUNDED, math.inf, np.full(n, math.nan))
        x = shift.copy()
        return LpSolution(LpStatus.OPTIMAL, const, x, 0.0, 0.0, dual=np.zeros(0))

    row_scale, col_scale = _equilibrate(A0) if nz else (np.ones(m), np.ones(0))
    A = A0 * row_scale[:, None] * col_scale[None, :]
    b = b0 * row_scale
    cost = cost0 * col_scale
    sign = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            sign[i] = -1.0
            A[i] = -A[i]
            b[i] = -b[i]
            rels[i] = {"<=": ">=", ">=": "<=", "=": "="}[rels[i]]

    # slack/surplus then artificial columns
    slack_cols, art_rows = [], []
    for i, rel in enumerate(rels):
        if rel == "<=":
            slack_cols.append((i, 1.0))
        elif rel == ">=":
            slack_cols.append((i, -1.0))
            art_rows.append(i)
        else:
            art_rows.append(i)
    ns, na = len(slack_cols), len(art_rows)
    N = nz + ns + na
    Afull = np.zeros((m, N))
    Afull[:, :nz] = A
    basis = [-1] * m
    for k, (i, s) in enumerate(slack_cols):
        Afull[i, nz + k] = s
        if s > 0:
            basis[i] = nz + k
    for k, i in enumerate(art_rows):
        Afull[i, nz + ns + k] = 1.0
        basis[i] = nz + ns + k
    is_art = np.zeros(N, dtype=bool)
    is_art[nz + ns:] = True
    counter = [0]
    rows_kept = np.arange(m)

    if na:
        c1 = np.zeros(N)
        c1[is_art] = 1.0
        basis, xb, _ = _revised_simplex(Afull, b, c1, basis, np.ones(N, dtype=bool), counter)
        if float(c1[basis] @ xb) > FEAS_TOL * max(1.0, np.abs(b).max()):
            return LpSolution(LpStatus.INFEASIBLE, math.nan, np.full(n, math.nan),
                              iterations=counter[0])
        # swap zero-level artificials for structural columns; a row where
        # that is impossible is redundant and is dropped
        r = 0
        while r < len(basis):
            j = basis[r]
            if is_art[j]:
                sub = Afull[rows_kept]
                e = np.zeros(len(basis))
                e[r] = 1.0
                row = np.linalg.solve(sub[:, basis].T, e) @ sub
                row[is_art] = 0.0
                row[basis] = 0.0
                jj = int(np.argmax(np.abs(row)))
                if abs(row[jj]) > PIVOT_TOL:
                    basis[r] = jj
                else:
                    owner = art_rows[j - nz - ns]
                    rows_kept = rows_kept[rows_kept != owner]
                    del basis[r]
                    continue
            r += 1

    A2 = Afull[rows_kept]
    b2 = b[rows_kept]
    c2 = np.zeros(N)
    c2[:nz] = cost
    allowed = ~is_art
    try:
        basis, xb, y = _revised_simplex(A2, b2, c2, basis, allowed, counter)
    except _Unbounded:
        return LpSolution(LpStatus.UNBOUNDED, math.inf, np.full(n, math.nan),
                          iterations=counter[0])

    zs = np.zeros(N)
    zs[basis] = np.maximum(xb, 0.0)
    z = zs[:nz] * col_scale
    x = shift + S @ z
    obj = float(lp.objective @ x)

    dual_infeas = max(0.0, -float((c2[allowed] - y @ A2[:, allowed]).min(initial=0.0)))
    gap = abs(float(c2 @ zs) - float(b2 @ y)) + dual_infeas
    dual = np.zeros(m)
    dual[rows_kept] = -np.asarray(y) * sign[rows_kept] * row_scale[rows_kept]
    sol = LpSolution(LpStatus.OPTIMAL, obj, x, iterations=counter[0],
                     duality_gap_estimate=gap, dual=dual[:len(lp.constraints)])
    rep = check_solution(lp, sol)
    sol.max_primal_residual = max(rep.constraint_violation, rep.bound_violation)
    if sol.max_primal_residual > RESIDUAL_TOL or gap > GAP_TOL:
        raise LpNumericalError(
            f"solution fails certification: residual {sol.max_primal_residual:.3g}, "
            f"gap {gap:.3g}")
    return sol


def type2_error_program(rho, sigma, eps: float) -> LinearProgram:
    """minimise sum sigma_i l_i s.t. sum rho_i l_i >= 1 - eps, 0 <= l <= 1,
    written as a maximisation of -sum sigma_i l_i."""
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if rho.shape != sigma.shape or rho.ndim != 1:
        raise ValueError("rho and sigma must be vectors of equal length")
    m = len(rho)
    return LinearProgram(m, -sigma, [(rho, ">=", 1.0 - eps)], np.zeros(m), np.ones(m))


def min_type2_error(rho, sigma, eps: float) -> float:
    """Optimal type-II error computed by the simplex instead of the greedy test."""
    sol = solve_lp(type2_error_program(rho, sigma, eps))
    if sol.status is not LpStatus.OPTIMAL:
        raise LpNumericalError(f"hypothesis-test program: {sol.status.value}")
    return -sol.objective_value
