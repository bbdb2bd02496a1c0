"""Exact LP formulations for max-linear / min-linear pairs.

With S(x) = max_i <g_i, x> and P(x) = min_j <h_j, x>, a linear form <c, .>
lies below S iff c is in conv(g) and above P iff c is in conv(h).  The
infimal convolution T_Y(x) = inf_{y in Y} S(x+y) - P(y) is the support
function of

    C_Y = { c_S in conv(g) : some c_P in conv(h) has c_S - c_P orthogonal to Y },

which is empty exactly when T_Y is identically -inf.  Every routine below is
either a direct epigraph LP of a sup/inf over y or an LP over the barycentric
weights of C_Y; the two families are checked against each other in the tests.

Arguments: ``G`` and ``H`` are generator matrices (rows), ``QY`` an
orthonormal basis of Y (rows), ``B`` a basis of M (rows) and ``f`` the values
of f0 on the rows of ``B``.
"""

from __future__ import annotations

import numpy as np

from .lp import LPProblem, LPStatus, solve

FREE = (None, None)


def _hull_rows(G, H, QY):
    ms, mp = G.shape[0], H.shape[0]
    rows = [np.concatenate([np.ones(ms), np.zeros(mp)]), np.concatenate([np.zeros(ms), np.ones(mp)])]
    rhs = [1.0, 1.0]
    if QY.shape[0]:
        link = np.hstack([QY @ G.T, -(QY @ H.T)])
        rows.extend(link)
        rhs.extend([0.0] * QY.shape[0])
    return np.array(rows), np.array(rhs)


def intersection_lp(G, H, QY, B=None, f=None, objective=None, sense=1.0):
    """LP over (lam, mu) describing C_Y, optionally pinned on M by ``B c = f``.

    ``objective`` is a direction in R^n; the LP minimizes ``sense * <c_S, objective>``.
    Returns the raw :class:`LPOutcome`; its witness splits as ``(lam, mu)``.
    """
    a_eq, b_eq = _hull_rows(G, H, QY)
    ms, mp = G.shape[0], H.shape[0]
    if B is not None and B.shape[0]:
        pin = np.hstack([B @ G.T, np.zeros((B.shape[0], mp))])
        a_eq = np.vstack([a_eq, pin])
        b_eq = np.concatenate([b_eq, np.asarray(f, dtype=float)])
    obj = np.zeros(ms + mp)
    if objective is not None:
        obj[:ms] = sense * (G @ np.asarray(objective, dtype=float))
    return solve(LPProblem(obj, a_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * (ms + mp)))


def hull_point(G, out) -> np.ndarray:
    return out.witness[: G.shape[0]] @ G


def t_support(G, H, x, QY) -> tuple[float, np.ndarray | None]:
    """T_Y(x) as the support function of C_Y; ``-inf`` when C_Y is empty."""
    out = intersection_lp(G, H, QY, objective=x, sense=-1.0)
    if out.status is LPStatus.INFEASIBLE:
        return -np.inf, None
    return -out.value, hull_point(G, out)


def t_primal(G, H, x, QY) -> tuple[float, np.ndarray | None]:
    """T_Y(x) from the epigraph LP over y = z QY; returns the minimizing y."""
    d = QY.shape[0]
    ms, mp = G.shape[0], H.shape[0]
    nv = d + 2
    a = np.zeros((ms + mp, nv))
    a[:ms, :d] = G @ QY.T
    a[:ms, d] = -1.0
    a[ms:, :d] = -(H @ QY.T)
    a[ms:, d + 1] = -1.0
    b = np.concatenate([-(G @ x), np.zeros(mp)])
    obj = np.zeros(nv)
    obj[d] = obj[d + 1] = 1.0
    out = solve(LPProblem(obj, a_ub=a, b_ub=b, bounds=[FREE] * nv))
    if out.status is LPStatus.UNBOUNDED:
        return -np.inf, None
    return out.value, out.witness[:d] @ QY


def worst_41_on_box(G, H, QY, B, f):
    """min over t in [-1,1]^k, y in Y of S(tB + y) - P(y) - f.t.

    This is the most negative margin T_Y(x) - f0(x) over the coordinate box of
    M.  Returns ``(margin, x, y)``; the margin is ``-inf`` when T_Y(0) = -inf.
    """
    k, d = B.shape[0], QY.shape[0]
    ms, mp = G.shape[0], H.shape[0]
    nv = k + d + 2
    a = np.zeros((ms + mp, nv))
    a[:ms, :k] = G @ B.T
    a[:ms, k : k + d] = G @ QY.T
    a[:ms, k + d] = -1.0
    a[ms:, k : k + d] = -(H @ QY.T)
    a[ms:, k + d + 1] = 1.0
    obj = np.zeros(nv)
    obj[:k] = -np.asarray(f, dtype=float)
    obj[k + d] = 1.0
    obj[k + d + 1] = -1.0
    bounds = [(-1.0, 1.0)] * k + [FREE] * (d + 2)
    out = solve(LPProblem(obj, a_ub=a, b_ub=np.zeros(ms + mp), bounds=bounds))
    n = G.shape[1]
    if out.status is LPStatus.UNBOUNDED:
        return -np.inf, np.zeros(n), None
    t, z = out.witness[:k], out.witness[k : k + d]
    return out.value, t @ B if k else np.zeros(n), z @ QY


def worst_gap_on_box(G, H):
    """min over x in [-1,1]^n of S(x) - P(x); returns ``(margin, x)``."""
    n = G.shape[1]
    ms, mp = G.shape[0], H.shape[0]
    a = np.zeros((ms + mp, n + 2))
    a[:ms, :n] = G
    a[:ms, n] = -1.0
    a[ms:, :n] = -H
    a[ms:, n + 1] = 1.0
    obj = np.zeros(n + 2)
    obj[n], obj[n + 1] = 1.0, -1.0
    out = solve(LPProblem(obj, a_ub=a, b_ub=np.zeros(ms + mp), bounds=[(-1.0, 1.0)] * n + [FREE, FREE]))
    return out.value, out.witness[:n]


def in_projection(G, B, f) -> bool:
    """Is f0 (values on the rows of B) the restriction of some c in conv(G)?"""
    m = G.shape[0]
    a_eq = np.vstack([np.ones((1, m)), B @ G.T]) if B.shape[0] else np.ones((1, m))
    b_eq = np.concatenate([[1.0], np.asarray(f, dtype=float)])
    out = solve(LPProblem(np.zeros(m), a_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * m))
    return out.status is LPStatus.OPTIMAL


def worst_side_on_box(G, B, f, upper: bool):
    """Most negative S - f0 (``upper``; G from S) or f0 - P (G from P) over t in [-1,1]^k."""
    k = B.shape[0]
    m = G.shape[0]
    f = np.asarray(f, dtype=float)
    a = np.zeros((m, k + 1))
    a[:, :k] = G @ B.T if upper else -(G @ B.T)
    a[:, k] = -1.0 if upper else 1.0
    obj = np.zeros(k + 1)
    obj[:k] = -f if upper else f
    obj[k] = 1.0 if upper else -1.0
    out = solve(LPProblem(obj, a_ub=a, b_ub=np.zeros(m), bounds=[(-1.0, 1.0)] * k + [FREE]))
    return out.value, out.witness[:k] @ B if k else np.zeros(G.shape[1])


def _endpoint(G, B, f, rhs, f_sign, s_sign):
    """min f_sign * f.t + s_sign * s  s.t.  s_sign-epigraph rows of G against rhs."""
    k = B.shape[0]
    m = G.shape[0]
    a = np.zeros((m, k + 1))
    if s_sign > 0:
        # s >= <g, tB> - rhs_g  <=>  <g, tB> - s <= rhs_g
        a[:, :k] = G @ B.T
        a[:, k] = -1.0
    else:
        # s <= <g, tB> + rhs_g  <=>  -<g, tB> + s <= rhs_g
        a[:, :k] = -(G @ B.T)
        a[:, k] = 1.0
    obj = np.zeros(k + 1)
    obj[:k] = f_sign * np.asarray(f, dtype=float)
    obj[k] = s_sign
    out = solve(LPProblem(obj, a_ub=a, b_ub=rhs, bounds=[FREE] * (k + 1)))
    if out.status is LPStatus.UNBOUNDED:
        return -np.inf, None
    return out.value, out.witness[:k]


def interval_endpoints(G, H, B, f, x0):
    """The four extension bounds by direct epigraph LPs over M-coordinates.

    a = sup f(y) - S(y - x0),  b = inf -f(y) + S(y + x0),
    c = inf f(y) - P(y - x0),  d = sup -f(y) + P(y + x0).
    Returns ``({"a":..,"b":..,"c":..,"d":..}, {name: argmax/argmin coords})``.
    """
    gx, hx = G @ x0, H @ x0
    # a: min -f.t + s, s >= S(tB - x0)
    va, ta = _endpoint(G, B, f, gx, -1.0, 1.0)
    # b: min -f.t + s, s >= S(tB + x0)
    vb, tb = _endpoint(G, B, f, -gx, -1.0, 1.0)
    # c: min f.t + s, s >= -P(tB - x0) = max_j <h_j, x0 - tB>
    vc, tc = _endpoint(-H, B, -np.asarray(f, dtype=float), -hx, -1.0, 1.0)
    # d: min f.t - r, r <= P(tB + x0)
    vd, td = _endpoint(H, B, f, hx, 1.0, -1.0)
    values = {"a": -va, "b": vb, "c": vc, "d": -vd}
    return values, {"a": ta, "b": tb, "c": tc, "d": td}
