"""Derivative-free minimization of convex objectives over growing boxes.

The objective is passed as a batch callable ``f(Z) -> values`` on an
``(N, k)`` array.  All restarts of one box run in lockstep so that each
objective call evaluates every restart at once.

Each sweep line-searches along the coordinate axes, ``k`` random unit
directions and the per-restart pattern direction (last sweep's displacement).
The extra directions let the descent slide along ridges of max-type
objectives where pure coordinate moves stall.

The best point of each box is then polished by gradient sampling:
finite-difference gradients at random points near the incumbent, the
minimum-norm element of their convex hull as the descent direction, and a
shrinking sampling radius.  At a kink where several affine pieces are
active this direction still descends, which pattern moves do not promise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
DEFAULT_RADII = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5)


@dataclass(frozen=True)
class DescentSettings:
    radii: tuple = DEFAULT_RADII
    restarts: int = 16
    max_sweeps: int = 40
    golden_iters: int = 16
    grid_points: int = 17
    stall_tol: float = 1e-12
    poll_directions: int = 16
    poll_scales: tuple = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6)
    seed: int = 0
    divergence: float = 1e-3
    stop_when_interior: bool = True
    polish: bool = True
    polish_levels: int = 9
    polish_iters: int = 40
    polish_samples: int = 8


@dataclass
class Escalation:
    """Outcome of a box-escalated minimization."""

    value: float
    point: np.ndarray
    minus_infinity: bool
    on_boundary: bool
    history: list = field(default_factory=list)

    @property
    def limit_only(self) -> bool:
        return self.on_boundary and not self.minus_infinity

    def evidence(self) -> dict:
        return {"box_minima": [[r, v] for r, v in self.history]}


def _line_search(f, z, fz, d, lo_box, hi_box, h, settings):
    """Line search of t -> f(z + t d) per row on [-h, h] clipped to the box.

    A uniform grid brackets the best cell in one batched call; golden-section
    iterations then refine inside the bracket.
    """
    n = z.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi_box = np.where(d > 0, (hi_box - z) / d, np.where(d < 0, (lo_box - z) / d, np.inf))
        t_lo_box = np.where(d > 0, (lo_box - z) / d, np.where(d < 0, (hi_box - z) / d, -np.inf))
    lo = np.minimum(np.maximum(-h, t_lo_box.max(axis=1)), 0.0)
    hi = np.maximum(np.minimum(h, t_hi_box.min(axis=1)), 0.0)
    g = settings.grid_points
    frac = np.linspace(0.0, 1.0, g)
    ts = lo[:, None] + frac[None, :] * (hi - lo)[:, None]
    pts = (z[:, None, :] + ts[:, :, None] * d[:, None, :]).reshape(n * g, -1)
    vals = f(pts).reshape(n, g)
    j = np.argmin(vals, axis=1)
    rows = np.arange(n)
    t_best = ts[rows, j]
    f_best = vals[rows, j]
    step = (hi - lo) / (g - 1)
    lo = np.maximum(t_best - step, lo)
    hi = np.minimum(t_best + step, hi)
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    both = f(np.vstack([z + x1[:, None] * d, z + x2[:, None] * d]))
    f1, f2 = both[:n], both[n:]
    for _ in range(settings.golden_iters):
        left = f1 < f2
        new_lo = np.where(left, lo, x1)
        new_hi = np.where(left, x2, hi)
        nx1 = np.where(left, new_hi - GOLDEN * (new_hi - new_lo), x2)
        nx2 = np.where(left, x1, new_lo + GOLDEN * (new_hi - new_lo))
        fp = f(z + np.where(left, nx1, nx2)[:, None] * d)
        f1, f2 = np.where(left, fp, f2), np.where(left, f1, fp)
        lo, hi, x1, x2 = new_lo, new_hi, nx1, nx2
    t = np.where(f1 < f2, x1, x2)
    ft = np.minimum(f1, f2)
    t = np.where(f_best < ft, t_best, t)
    ft = np.minimum(ft, f_best)
    improve = ft < fz
    t = np.where(improve, t, 0.0)
    return z + t[:, None] * d, np.where(improve, ft, fz), np.abs(t)


def local_descent(f, starts: np.ndarray, radius: float, rng: np.random.Generator, settings: DescentSettings):
    """Run the lockstep descent from every row of ``starts`` inside ``[-radius, radius]^k``."""
    z = np.clip(np.array(starts, dtype=float), -radius, radius)
    n, k = z.shape
    fz = f(z)
    if k == 0:
        return z, fz
    lo_box = np.full(k, -radius)
    hi_box = np.full(k, radius)
    h = np.full(n, radius)
    floor = 1e-14 * max(1.0, radius)
    prev = z.copy()
    eye = np.eye(k)
    stalls = 0
    for _ in range(settings.max_sweeps):
        f_start = fz.copy()
        moved = np.zeros(n)
        rand = rng.normal(size=(k, k))
        rand /= np.linalg.norm(rand, axis=1, keepdims=True)
        dirs = [np.broadcast_to(e, (n, k)) for e in eye] + [np.broadcast_to(r, (n, k)) for r in rand]
        pat = z - prev
        pn = np.linalg.norm(pat, axis=1, keepdims=True)
        if np.any(pn > 0):
            dirs.append(np.where(pn > 0, pat / np.where(pn > 0, pn, 1.0), eye[0]))
        prev = z.copy()
        for d in dirs:
            z, fz, step = _line_search(f, z, fz, d, lo_box, hi_box, h, settings)
            moved = np.maximum(moved, step)
        h = np.where(moved > 0.25 * h, np.minimum(2.0 * h, 2.0 * radius), np.maximum(np.maximum(4.0 * moved, 0.25 * h), floor))
        gain = f_start - fz
        if np.all(gain <= settings.stall_tol * (1.0 + np.abs(fz))):
            z, fz, found = _poll(f, z, fz, lo_box, hi_box, h, rng, settings)
            if found:
                stalls = 0
                continue
            stalls += 1
            if stalls >= 2:
                break
        else:
            stalls = 0
    return z, fz


def _poll(f, z, fz, lo_box, hi_box, h, rng, settings):
    """Try many random directions at several scales in one batched call.

    Pattern moves can stall at a kink of a max-type objective where no swept
    direction descends; a dense random poll finds the narrow descent cone.
    """
    n, k = z.shape
    D = settings.poll_directions * k
    dirs = rng.normal(size=(D, k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    scales = np.asarray(settings.poll_scales)
    steps = (h[:, None] * scales[None, :])  # (n, s)
    cand = z[:, None, None, :] + steps[:, None, :, None] * dirs[None, :, None, :]
    cand = np.clip(cand, lo_box, hi_box).reshape(n, -1, k)
    vals = f(cand.reshape(-1, k)).reshape(n, -1)
    j = np.argmin(vals, axis=1)
    rows = np.arange(n)
    best = vals[rows, j]
    found = best < fz - settings.stall_tol * (1.0 + np.abs(fz))
    if not np.any(found):
        return z, fz, False
    z = np.where(found[:, None], cand[rows, j], z)
    fz = np.where(found, best, fz)
    return z, fz, True


def _affine_minimizer(Q: np.ndarray) -> np.ndarray:
    # weights summing to one that minimize |alpha @ Q| over the affine hull
    s = Q.shape[0]
    kkt = np.zeros((s + 1, s + 1))
    kkt[:s, :s] = Q @ Q.T
    kkt[:s, s] = kkt[s, :s] = 1.0
    rhs = np.zeros(s + 1)
    rhs[s] = 1.0
    return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:s]


def min_norm_hull_point(G: np.ndarray, tol: float = 1e-12, max_iter: int = 500) -> np.ndarray:
    """Minimum-norm point of conv(rows of G) by Wolfe's algorithm."""
    G = np.unique(np.asarray(G, dtype=float), axis=0)
    scale = max(1.0, float(np.max(np.sum(G * G, axis=1))))
    S = [int(np.argmin(np.sum(G * G, axis=1)))]
    lam = np.array([1.0])
    x = G[S[0]].copy()
    for _ in range(max_iter):
        j = int(np.argmin(G @ x))
        if float(x @ x - G[j] @ x) <= tol * scale or j in S:
            return x
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(G[S])
            if np.all(alpha > tol):
                lam = alpha
                break
            neg = alpha <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > tol
            S = [i for i, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam /= lam.sum()
        x = lam @ G[S]
    return x


def _ray_search(f, z, fz, d, lo_box, hi_box, settings, halvings: int = 50):
    """Minimize t -> f(z + t d) for t > 0 up to the box boundary, at every scale.

    Steps t_max 2^-j are tried in one batched call, then golden-section
    refines between the neighbours of the best one.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        lim = np.where(d > 0, (hi_box - z) / d, np.where(d < 0, (lo_box - z) / d, np.inf))
    t_max = float(np.min(lim))
    if not np.isfinite(t_max) or t_max <= 0.0:
        return z, fz
    ts = t_max * 0.5 ** np.arange(halvings + 1)
    vals = f(z[None, :] + ts[:, None] * d[None, :])
    j = int(np.argmin(vals))
    if vals[j] >= fz:
        return z, fz
    lo, hi = ts[min(j + 1, halvings)], ts[max(j - 1, 0)]
    best_t, best_f = ts[j], float(vals[j])
    for _ in range(settings.golden_iters):
        x1 = hi - GOLDEN * (hi - lo)
        x2 = lo + GOLDEN * (hi - lo)
        f1, f2 = f(np.vstack([z + x1 * d, z + x2 * d]))
        if f1 < f2:
            hi = x2
            if f1 < best_f:
                best_t, best_f = x1, float(f1)
        else:
            lo = x1
            if f2 < best_f:
                best_t, best_f = x2, float(f2)
    return z + best_t * d, best_f


def polish(f, z: np.ndarray, fz: float, radius: float, rng: np.random.Generator, settings: DescentSettings):
    """Gradient-sampling refinement of one point inside ``[-radius, radius]^k``.

    If 0 lies in the hull of the gradients sampled within eps of z, then by
    convexity f(z) exceeds the minimum by at most about 2 eps times the
    Lipschitz constant; the radius eps is then shrunk.
    """
    k = z.shape[0]
    lo_box, hi_box = np.full(k, -radius), np.full(k, radius)
    eye = np.eye(k)
    m = settings.polish_samples * k
    eps = 1e-2 * max(1.0, float(np.max(np.abs(z))))
    for _ in range(settings.polish_levels):
        for _ in range(settings.polish_iters):
            # z itself is skipped: at a kink its difference quotients mix pieces
            pts = np.clip(z + eps * rng.uniform(-1.0, 1.0, size=(m, k)), lo_box, hi_box)
            delta = 1e-4 * eps
            probe = np.vstack([pts, (pts[:, None, :] + delta * eye[None, :, :]).reshape(-1, k)])
            vals = f(probe)
            grads = (vals[m:].reshape(m, k) - vals[:m, None]) / delta
            g = min_norm_hull_point(grads)
            gn = float(np.linalg.norm(g))
            if gn <= 1e-12 * (1.0 + float(np.max(np.abs(grads)))):
                break
            z_new, f_new = _ray_search(f, z, fz, -g / gn, lo_box, hi_box, settings)
            if f_new >= fz:
                break
            z, fz = z_new, f_new
        eps *= 0.1
    return z, fz


def minimize_in_box(f, dim: int, radius: float, rng: np.random.Generator, settings: DescentSettings, extra_starts=None):
    starts = rng.uniform(-radius, radius, size=(settings.restarts, dim))
    if extra_starts is not None and len(extra_starts):
        starts = np.vstack([np.asarray(extra_starts, dtype=float).reshape(-1, dim), starts])
    z, fz = local_descent(f, starts, radius, rng, settings)
    i = int(np.argmin(fz))
    if settings.polish:
        zi, fi = polish(f, z[i].copy(), float(fz[i]), radius, rng, settings)
        return fi, zi
    return float(fz[i]), z[i].copy()


def escalate(f, dim: int, settings: DescentSettings = DescentSettings()) -> Escalation:
    """Minimize ``f`` over boxes of increasing radius and classify the result.

    The running minimum falling by more than ``settings.divergence`` between
    the two largest boxes is read as unboundedness below.  A minimizer
    strictly inside a box is global (the objective is convex), so the
    escalation stops there when ``stop_when_interior`` is set.
    """
    rng = np.random.default_rng(settings.seed)
    if dim == 0:
        v = float(f(np.zeros((1, 0)))[0])
        return Escalation(v, np.zeros(0), False, False, [(0.0, v)])
    best_v, best_z = np.inf, None
    history = []
    radii = list(settings.radii)
    for idx, radius in enumerate(radii):
        extra = None if best_z is None else best_z[None, :]
        v, z = minimize_in_box(f, dim, radius, rng, settings, extra)
        if v < best_v:
            best_v, best_z = v, z
        history.append((float(radius), float(best_v)))
        interior = np.max(np.abs(best_z)) <= 0.5 * radius
        if settings.stop_when_interior and interior:
            return Escalation(best_v, best_z, False, False, history)
    on_boundary = bool(np.max(np.abs(best_z)) >= (1.0 - 1e-6) * radii[-1])
    diverging = len(history) >= 2 and history[-2][1] - history[-1][1] > settings.divergence
    return Escalation(best_v, best_z, diverging, on_boundary, history)
