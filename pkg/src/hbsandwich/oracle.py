"""Brute-force reference implementations and a random instance generator.

The grid oracle shares no code with the LP or descent paths: it evaluates the
objective on dense lattices over growing boxes and zooms around the best
lattice point.  It is slow and only meant for small dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functionals import (
    FunctionalSpec,
    PartialLinearFunctional,
    Subspace,
    as_vector,
    evaluate_batch,
)

MAX_T_DIM = 4
MAX_BOUNDS_DIM = 3


class OracleDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    radii: tuple = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5)
    points: int = 201
    coarse_points: int = 51
    refinements: int = 4
    zoom: float = 10.0
    max_points: int = 2_000_000
    divergence: float = 1e-3
    max_moves: int = 200

    def __post_init__(self):
        if self.points % 2 == 0 or self.coarse_points % 2 == 0:
            raise ValueError("points per axis must be odd so that 0 is a grid point")
        if list(self.radii) != sorted(self.radii) or min(self.radii) <= 0:
            raise ValueError("radius schedule must be positive and increasing")

    def per_axis(self, wanted: int, dim: int) -> int:
        cap = int(np.floor(self.max_points ** (1.0 / dim))) if dim else 1
        p = max(3, min(wanted, cap))
        return p if p % 2 else p - 1


@dataclass
class GridResult:
    value: float
    point: np.ndarray
    on_boundary: bool
    minus_infinity: bool
    history: list = field(default_factory=list)


def _lattice_min(f, center: np.ndarray, half: float, p: int, bound: float, chunk: int = 200_000):
    """Best point of a p^d lattice of half-width ``half`` around ``center``, clipped to [-bound, bound]^d."""
    d = center.shape[0]
    axis = np.linspace(-half, half, p)
    best_v, best_z = np.inf, center
    total = p**d
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coords = np.empty((idx.size, d))
        rem = idx
        for j in range(d - 1, -1, -1):
            coords[:, j] = axis[rem % p]
            rem = rem // p
        pts = np.clip(center + coords, -bound, bound)
        vals = f(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_v, best_z = float(vals[i]), pts[i].copy()
    return best_v, best_z


def _ray_min(f, z, u, p, bound, reach: float = 100.0):
    """Best point of z + t u for t on a p-point lattice of [0, reach]."""
    ts = np.linspace(0.0, reach, p)
    pts = np.clip(z + ts[:, None] * u, -bound, bound)
    vals = f(pts)
    i = int(np.argmin(vals))
    return float(vals[i]), pts[i].copy()


def grid_minimize(f, dim: int, grid: GridSpec) -> GridResult:
    """Minimize ``f`` (batch callable) by lattice search.

    A coarse lattice covers each box of the radius schedule; the best coarse
    point overall is then refined by lattices around the incumbent.  The
    window shrinks by ``zoom`` once the incumbent is interior and doubles
    when an improvement lands on its edge, so narrow valleys get followed.
    """
    if dim == 0:
        v = float(f(np.zeros((1, 0)))[0])
        return GridResult(v, np.zeros(0), False, False, [(0.0, v)])
    coarse = grid.per_axis(grid.coarse_points, dim)
    fine = grid.per_axis(grid.points, dim)
    best_v = np.inf
    history, cands = [], []
    for R in grid.radii:
        v, z = _lattice_min(f, np.zeros(dim), R, coarse, R)
        cands.append((v, z, R))
        best_v = min(best_v, v)
        history.append((float(R), best_v))
    diverging = len(history) >= 2 and history[-2][1] - history[-1][1] > grid.divergence
    bound = grid.radii[-1]
    # a coarse incumbent of a larger box can sit next to the minimizer while
    # scoring worse than a finer lattice; give each one window pass
    seen, polished = set(), []
    for v, z, R in cands:
        key = tuple(np.round(z, 12))
        if key in seen:
            continue
        seen.add(key)
        h = R * 2.0 / (coarse - 1)
        v2, z2 = _lattice_min(f, z, h, fine, bound)
        polished.append((v2, z2, h) if v2 < v else (v, z, h))
    v, z, half = min(polished, key=lambda t: t[0])
    shrinks = passes = 0
    while shrinks < grid.refinements and passes < grid.max_moves:
        passes += 1
        v2, z2 = _lattice_min(f, z, half, fine, bound)
        edge = np.max(np.abs(z2 - z)) >= half * (1.0 - 1e-9)
        improved = v2 < v
        if improved:
            # follow the displacement on a 1-d lattice; valleys of max-type
            # objectives run diagonally and can be too thin for the window lattice
            v3, z3 = _ray_min(f, z, z2 - z, grid.points, bound)
            if v3 < v2:
                edge = edge or np.max(np.abs(z3 - z)) > half
                v2, z2 = v3, z3
            v, z = v2, z2
        if improved and edge:
            # the minimum may lie outside the window: widen it and recentre
            half = min(2.0 * half, bound)
        else:
            half /= grid.zoom
            shrinks += 1
    history.append(("refined", v))
    r_max = grid.radii[-1]
    on_boundary = bool(np.max(np.abs(z)) >= r_max * (1.0 - 1e-9))
    return GridResult(v, z, on_boundary, diverging, history)


def brute_force_T(S: FunctionalSpec, P: FunctionalSpec, x, grid: GridSpec | None = None, restriction: Subspace | None = None):
    """T(x) by direct lattice minimization over y (or over y in ``restriction``)."""
    from .infconv import Attainment, Method, TValue

    grid = grid or GridSpec()
    x = as_vector(x, S.dim)
    Q = np.eye(S.dim) if restriction is None else restriction.orthonormal
    d = Q.shape[0]
    if d > MAX_T_DIM:
        raise OracleDimensionError(f"grid search over {d} dimensions is too large (max {MAX_T_DIM})")

    def f(Z):
        Y = Z @ Q
        return evaluate_batch(S, Y + x) - evaluate_batch(P, Y)

    res = grid_minimize(f, d, grid)
    evidence = {"box_minima": [[r, v] for r, v in res.history], "grid": "lattice"}
    if res.minus_infinity:
        return TValue(-np.inf, Method.GRID, Attainment.UNKNOWN, None, restriction, evidence)
    att = Attainment.LIMIT_ONLY if res.on_boundary else Attainment.ATTAINED
    return TValue(res.value, Method.GRID, att, res.point @ Q, restriction, evidence)


def brute_force_bounds(f0: PartialLinearFunctional, x0, S: FunctionalSpec, P: FunctionalSpec, grid: GridSpec | None = None):
    """The four extension bounds by lattice search over M-coordinates."""
    from .extension import ExtensionInterval

    grid = grid or GridSpec()
    x0 = as_vector(x0, S.dim)
    M = f0.subspace
    k = M.dim
    if k > MAX_BOUNDS_DIM:
        raise OracleDimensionError(f"grid search over {k} dimensions is too large (max {MAX_BOUNDS_DIM})")
    if k == 0:
        return ExtensionInterval(-S(-x0), S(x0), -P(-x0), P(x0), x0.copy(), method="grid", evidence={"closed_form": True})
    B, fv = M.basis, f0.values
    objectives = {
        "a": lambda T: evaluate_batch(S, T @ B - x0) - T @ fv,
        "b": lambda T: evaluate_batch(S, T @ B + x0) - T @ fv,
        "c": lambda T: T @ fv - evaluate_batch(P, T @ B - x0),
        "d": lambda T: T @ fv - evaluate_batch(P, T @ B + x0),
    }
    sign = {"a": -1.0, "b": 1.0, "c": 1.0, "d": -1.0}
    vals, evidence = {}, {}
    for name, obj in objectives.items():
        res = grid_minimize(obj, k, grid)
        if res.minus_infinity:
            vals[name] = -sign[name] * np.inf
        else:
            vals[name] = sign[name] * res.value
        evidence[name] = {"limit_only": res.on_boundary and not res.minus_infinity,
                          "box_minima": [[r, v] for r, v in res.history]}
    return ExtensionInterval(vals["a"], vals["b"], vals["c"], vals["d"], x0.copy(), method="grid", evidence=evidence)


INFEASIBLE_MODES = ("disjoint_hulls", "f0_outside", "sandwich_gap")


@dataclass(frozen=True, eq=False)
class RandomInstance:
    dim: int
    S: FunctionalSpec
    P: FunctionalSpec
    M: Subspace
    f0: PartialLinearFunctional
    seed: int
    feasible: bool
    note: str
    witness: np.ndarray | None = None

    def to_problem(self) -> dict:
        return {
            "dim": self.dim,
            "S": self.S.to_dict(),
            "P": self.P.to_dict(),
            "M": self.M.to_dict(),
            "f0": self.f0.values.tolist(),
        }


def _cloud(rng, center, count, scale):
    u = rng.normal(scale=scale, size=(count, center.shape[0]))
    return center + u - u.mean(axis=0)


def _random_subspace(rng, n, low=1):
    k = int(rng.integers(low, n)) if n > low else min(low, n - 1)
    k = max(k, 0)
    if k == 0:
        return Subspace.zero(n)
    return Subspace(rng.normal(size=(k, n)))


def generate_instance(dim: int, feasible: bool, seed: int, mode: str | None = None) -> RandomInstance:
    """A seeded random polyhedral instance with known extendability.

    Feasible instances centre both generator clouds on a point c*, which is
    then a common point of the hulls, and pin f0 = c* on M, so c* itself is
    a sandwiched extension.  Infeasible instances use one of three
    constructions (cycled by seed unless ``mode`` is given): hulls separated
    by a hyperplane, f0 prescribing a value no hull point attains on M, or
    f0 compatible with each hull separately but not with their intersection
    (conditions 4.2 and 4.3 hold while 4.1 fails).
    """
    from . import polyhedral as poly

    if not 1 <= dim <= 6:
        raise ValueError("dimension must be between 1 and 6")
    rng = np.random.default_rng(seed)
    n = dim
    c_star = rng.normal(size=n)
    G = _cloud(rng, c_star, n + 2, 1.0)
    H = _cloud(rng, c_star, n + 2, 1.0)
    M = _random_subspace(rng, n)
    if feasible:
        S, P = FunctionalSpec.max_linear(G), FunctionalSpec.min_linear(H)
        f0 = PartialLinearFunctional(M, M.basis @ c_star)
        return RandomInstance(n, S, P, M, f0, seed, True, "hulls share c*; f0 = <c*, .> on M", c_star)

    mode = mode or INFEASIBLE_MODES[seed % len(INFEASIBLE_MODES)]
    if mode != "disjoint_hulls" and M.dim == 0:
        mode = "disjoint_hulls"
    if mode == "sandwich_gap":
        inst = _sandwich_gap(rng, n, seed, poly)
        if inst is not None:
            return inst
        mode = "f0_outside"
    if mode == "disjoint_hulls":
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        shift = np.max((G - c_star) @ u) - np.min((H - c_star) @ u) + 1.0
        H = H + shift * u
        S, P = FunctionalSpec.max_linear(G), FunctionalSpec.min_linear(H)
        f0 = PartialLinearFunctional(M, M.basis @ c_star)
        return RandomInstance(n, S, P, M, f0, seed, False, f"disjoint_hulls: P generators shifted by {shift:.3g} along a separating normal")
    if mode == "f0_outside":
        u = M.project(rng.normal(size=n))
        u /= np.linalg.norm(u)
        reach = max(np.max(np.abs(G @ u)), np.max(np.abs(H @ u)))
        c_bad = c_star + (reach + 1.0 - c_star @ u) * u
        S, P = FunctionalSpec.max_linear(G), FunctionalSpec.min_linear(H)
        f0 = PartialLinearFunctional(M, M.basis @ c_bad)
        return RandomInstance(n, S, P, M, f0, seed, False, "f0_outside: f0 exceeds every hull point along a direction of M")
    raise ValueError(f"unknown infeasible mode {mode!r}")


def _sandwich_gap(rng, n, seed, poly, tries: int = 200):
    # rejection sampling: f0 reachable from each hull alone but not from their intersection
    for _ in range(tries):
        c_star = rng.normal(size=n)
        G = _cloud(rng, c_star, n + 2, 1.0)
        H = _cloud(rng, c_star + rng.normal(scale=0.8, size=n), n + 2, 1.0)
        M = _random_subspace(rng, n)
        if M.dim == 0:
            continue
        lam = rng.dirichlet(np.ones(G.shape[0]))
        f = M.basis @ (lam @ G)
        if not poly.in_projection(H, M.basis, f):
            continue
        if not poly.intersection_lp(G, H, np.eye(n)).optimal:
            continue
        if poly.intersection_lp(G, H, np.eye(n), M.basis, f).optimal:
            continue
        S, P = FunctionalSpec.max_linear(G), FunctionalSpec.min_linear(H)
        f0 = PartialLinearFunctional(M, f)
        return RandomInstance(n, S, P, M, f0, seed, False, "sandwich_gap: f0 fits each hull on M but not their intersection")
    return None
