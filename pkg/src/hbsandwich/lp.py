"""Dense two-phase simplex with Bland's rule.

Problems here are tiny (tens of variables), so the solver favours
determinism and clear failure modes over speed:

* ``Infeasible`` is decided by phase 1 alone and ``Unbounded`` by phase 2 alone.
* A returned optimum is re-checked against the original constraints; a
  violation triggers one retry on a row-equilibrated copy and then
  :class:`LPNumericalError` (never a silent ``Infeasible``).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
WITNESS_TOL = 1e-7


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LPNumericalError(RuntimeError):
    """Numerical breakdown: the tableau could not produce a trustworthy answer."""


@dataclass(frozen=True, eq=False)
class LPProblem:
    """minimize <objective, z> s.t. a_ub z <= b_ub, a_eq z = b_eq, lo <= z <= hi.

    ``bounds`` is one ``(lo, hi)`` pair per variable, ``None`` meaning
    unbounded on that side; the default is ``(0, None)`` for every variable.
    """

    objective: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: Sequence[tuple[float | None, float | None]] | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.shape[0]
        if n == 0:
            raise ValueError("an LP needs at least one variable")
        object.__setattr__(self, "objective", c)
        for a_name, b_name in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            a, b = getattr(self, a_name), getattr(self, b_name)
            if a is None or np.size(a) == 0:
                a, b = np.zeros((0, n)), np.zeros(0)
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).reshape(-1)
            if a.shape != (b.shape[0], n):
                raise ValueError(f"{a_name} has shape {a.shape}, expected ({b.shape[0]}, {n})")
            object.__setattr__(self, a_name, a)
            object.__setattr__(self, b_name, b)
        bounds = self.bounds if self.bounds is not None else [(0.0, None)] * n
        if len(bounds) != n:
            raise ValueError("one (lo, hi) pair per variable is required")
        object.__setattr__(self, "bounds", tuple((lo, hi) for lo, hi in bounds))

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LPOutcome:
    status: LPStatus
    value: float | None = None
    witness: np.ndarray | None = None
    certificate: dict | None = None
    pivots: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL

    @property
    def feasible(self) -> bool:
        return self.status is not LPStatus.INFEASIBLE


class _Unbounded(Exception):
    pass


class _Tableau:
    """Standard-form tableau: rows [A | I_or_art | rhs], last row reduced costs."""

    def __init__(self, a: np.ndarray, b: np.ndarray, n_ineq: int, verbose: bool):
        m, nw = a.shape
        self.verbose = verbose
        self.pivots: list[tuple[int, int]] = []
        sign = np.where(b < 0, -1.0, 1.0)
        slack = np.zeros((m, n_ineq))
        slack[np.arange(n_ineq), np.arange(n_ineq)] = 1.0
        body = np.hstack([a, slack]) * sign[:, None]
        rhs = b * sign
        need_art = [i for i in range(m) if i >= n_ineq or sign[i] < 0]
        art = np.zeros((m, len(need_art)))
        for k, i in enumerate(need_art):
            art[i, k] = 1.0
        self.n_struct = nw + n_ineq
        self.n_cols = self.n_struct + len(need_art)
        self.sign = sign
        self.tab = np.zeros((m + 1, self.n_cols + 1))
        self.tab[:m, : self.n_struct] = body
        self.tab[:m, self.n_struct : self.n_cols] = art
        self.tab[:m, -1] = rhs
        self.basis = [0] * m
        self.identity_col = [0] * m
        for i in range(m):
            if i < n_ineq and sign[i] > 0:
                self.basis[i] = nw + i
        for k, i in enumerate(need_art):
            self.basis[i] = self.n_struct + k
        self.identity_col = list(self.basis)

    @property
    def m(self) -> int:
        return self.tab.shape[0] - 1

    def set_costs(self, costs: np.ndarray) -> None:
        row = np.zeros(self.n_cols + 1)
        row[: costs.shape[0]] = costs
        for i, j in enumerate(self.basis):
            if row[j] != 0.0:
                row -= row[j] * self.tab[i]
        self.tab[-1] = row
        self._costs = np.zeros(self.n_cols)
        self._costs[: costs.shape[0]] = costs

    def pivot(self, r: int, j: int) -> None:
        t = self.tab
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        self.basis[r] = j
        self.pivots.append((r, j))
        if self.verbose:
            log.debug("pivot row %d col %d\n%s", r, j, np.array2string(t, precision=4, suppress_small=True))

    def run(self, allowed: int, max_iter: int) -> None:
        t = self.tab
        for _ in range(max_iter):
            rc = t[-1, :allowed]
            entering = np.flatnonzero(rc < -PIVOT_TOL)
            if entering.size == 0:
                return
            j = int(entering[0])
            col = t[:-1, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                raise _Unbounded(j)
            ratios = t[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)
        raise LPNumericalError("simplex iteration limit reached")

    def phase1_duals(self) -> np.ndarray:
        rc = self.tab[-1, : self.n_cols]
        return np.array([self._costs[c] - rc[c] for c in self.identity_col])

    def drop_artificials(self) -> None:
        t = self.tab
        for i in range(self.m - 1, -1, -1):
            if self.basis[i] < self.n_struct:
                continue
            row = t[i, : self.n_struct]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cand.size:
                self.pivot(i, int(cand[0]))
            else:
                t = np.delete(t, i, axis=0)
                del self.basis[i]
                self.tab = t
        self.tab = np.delete(self.tab, np.s_[self.n_struct : self.n_cols], axis=1)
        self.n_cols = self.n_struct

    def solution(self) -> np.ndarray:
        w = np.zeros(self.n_cols)
        for i, j in enumerate(self.basis):
            w[j] = self.tab[i, -1]
        return w


def _standardize(p: LPProblem):
    """Rewrite in nonnegative variables w with z = offset + M w."""
    n = p.num_vars
    cols: list[np.ndarray] = []
    offset = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []
    for j, (lo, hi) in enumerate(p.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if lo is not None and np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if hi is not None and np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None and np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    mmap = np.array(cols).T  # n x nw
    nw = mmap.shape[1]
    a_ub = p.a_ub @ mmap
    b_ub = p.b_ub - p.a_ub @ offset
    bound_rows = np.zeros((len(extra_rows), nw))
    bound_rhs = np.zeros(len(extra_rows))
    for k, (col, cap) in enumerate(extra_rows):
        bound_rows[k, col] = 1.0
        bound_rhs[k] = cap
    a_eq = p.a_eq @ mmap
    b_eq = p.b_eq - p.a_eq @ offset
    a = np.vstack([a_ub, bound_rows, a_eq])
    b = np.concatenate([b_ub, bound_rhs, b_eq])
    n_ineq = a_ub.shape[0] + bound_rows.shape[0]
    return a, b, n_ineq, mmap, offset


def _constraint_violation(p: LPProblem, z: np.ndarray) -> float:
    worst = 0.0
    if p.b_ub.size:
        worst = max(worst, float(np.max((p.a_ub @ z - p.b_ub) / np.maximum(1.0, np.abs(p.b_ub)))))
    if p.b_eq.size:
        worst = max(worst, float(np.max(np.abs(p.a_eq @ z - p.b_eq) / np.maximum(1.0, np.abs(p.b_eq)))))
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None:
            worst = max(worst, (lo - z[j]) / max(1.0, abs(lo)))
        if hi is not None:
            worst = max(worst, (z[j] - hi) / max(1.0, abs(hi)))
    return worst


def _solve_once(p: LPProblem, equilibrate: bool, verbose: bool) -> LPOutcome:
    a, b, n_ineq, mmap, offset = _standardize(p)
    scale = np.ones(a.shape[0])
    if equilibrate and a.size:
        scale = np.max(np.abs(a), axis=1)
        scale[scale == 0.0] = 1.0
        a, b = a / scale[:, None], b / scale
    m, nw = a.shape
    c = p.objective @ mmap
    const = float(p.objective @ offset)
    max_iter = 50 * (m + nw + n_ineq) + 100

    if m == 0:
        if np.any(c < -PIVOT_TOL):
            return LPOutcome(LPStatus.UNBOUNDED)
        z = offset.copy()
        return LPOutcome(LPStatus.OPTIMAL, const, z)

    tab = _Tableau(a, b, n_ineq, verbose)
    phase1 = np.zeros(tab.n_cols)
    phase1[tab.n_struct :] = 1.0
    tab.set_costs(phase1)
    try:
        tab.run(tab.n_cols, max_iter)
    except _Unbounded:
        raise LPNumericalError("phase 1 reported unbounded") from None
    infeas = -tab.tab[-1, -1]
    if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max())):
        y = tab.phase1_duals() * tab.sign
        mult = -y / scale
        k_ub = p.a_ub.shape[0]
        cert = {
            "ineq": mult[:k_ub].tolist(),
            "bounds": mult[k_ub:n_ineq].tolist(),
            "eq": mult[n_ineq:].tolist(),
            "phase1_value": float(infeas),
        }
        return LPOutcome(LPStatus.INFEASIBLE, certificate=cert, pivots=tuple(tab.pivots))

    tab.drop_artificials()
    tab.set_costs(np.concatenate([c, np.zeros(n_ineq)]))
    try:
        tab.run(tab.n_cols, max_iter)
    except _Unbounded as exc:
        return LPOutcome(LPStatus.UNBOUNDED, pivots=tuple(tab.pivots), details={"entering": exc.args[0]})
    w = tab.solution()[:nw]
    z = offset + mmap @ w
    return LPOutcome(LPStatus.OPTIMAL, float(p.objective @ z), z, pivots=tuple(tab.pivots))


def solve(problem: LPProblem, verbose: bool = False) -> LPOutcome:
    """Solve ``problem``; see the module docstring for the status semantics."""
    first_error: Exception | None = None
    for equilibrate in (False, True):
        try:
            out = _solve_once(problem, equilibrate, verbose)
        except LPNumericalError as exc:
            first_error = first_error or exc
            continue
        if out.optimal and _constraint_violation(problem, out.witness) > WITNESS_TOL:
            first_error = first_error or LPNumericalError(
                f"optimal witness violates constraints by {_constraint_violation(problem, out.witness):.3e}"
            )
            continue
        return out
    raise LPNumericalError(f"numerical breakdown after equilibrated retry: {first_error}")


def convex_hull_membership(points, a_eq=None, b_eq=None, target=None, objective=None) -> LPOutcome:
    """Find barycentric weights lam >= 0, sum(lam) = 1, with the combined
    point ``q = sum(lam_i p_i)`` meeting ``a_eq q = b_eq`` (or ``q = target``).

    The witness is ``lam``; ``details["point"]`` holds ``q``.  An optional
    ``objective`` (a vector in point space) is minimized over ``q``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    n = pts.shape[1]
    if target is not None:
        a_eq, b_eq = np.eye(n), np.asarray(target, dtype=float)
    if a_eq is None:
        a_eq, b_eq = np.zeros((0, n)), np.zeros(0)
    a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
    k = pts.shape[0]
    rows = np.vstack([a_eq @ pts.T, np.ones((1, k))])
    rhs = np.concatenate([np.asarray(b_eq, dtype=float).reshape(-1), [1.0]])
    obj = np.zeros(k) if objective is None else pts @ np.asarray(objective, dtype=float)
    out = solve(LPProblem(obj, a_eq=rows, b_eq=rhs, bounds=[(0.0, None)] * k))
    if out.optimal:
        out.details["point"] = (out.witness @ pts).tolist()
    return out
