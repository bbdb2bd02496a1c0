"""Vectors, subspaces and the four closed-form functional kinds on R^n.

Sublinear functionals are represented either as a maximum of finitely many
linear forms or as a linear form plus a Euclidean seminorm ``||G x||``;
superlinear functionals are the mirror images (minimum of linear forms,
linear form minus a seminorm).  Everything here is immutable and pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

MEMBERSHIP_TOL = 1e-9
PROPERTY_TOL = 1e-9


class DimensionError(ValueError):
    pass


class MembershipError(ValueError):
    """A vector expected to lie in a subspace does not."""

    def __init__(self, residual: float):
        super().__init__(f"vector is not in the subspace (projection residual {residual:.3e})")
        self.residual = residual


class Kind(str, enum.Enum):
    MAX_LINEAR = "max_linear"
    MIN_LINEAR = "min_linear"
    NORM_PLUS_LINEAR = "norm_plus_linear"
    LINEAR_MINUS_NORM = "linear_minus_norm"

    @property
    def natural_class(self) -> str:
        if self in (Kind.MAX_LINEAR, Kind.NORM_PLUS_LINEAR):
            return "sublinear"
        return "superlinear"

    @property
    def polyhedral(self) -> bool:
        return self in (Kind.MAX_LINEAR, Kind.MIN_LINEAR)


def _frozen(a: Any, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def as_vector(x: Any, dim: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"vector has length {v.shape[0]}, expected {dim}")
    return v


@dataclass(frozen=True)
class AmbientSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("ambient dimension must be >= 1")

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim)


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    """Declarative description of a sublinear or superlinear functional.

    Polyhedral kinds carry ``generators`` (one row per linear form).  Norm
    kinds carry ``linear`` (v) and ``matrix`` (G) and evaluate to
    ``<v, x> +/- ||G x||``.  ``declared`` is the class tag; it defaults to the
    kind's natural class and only differs for deliberately mislabeled specs.
    """

    kind: Kind
    generators: np.ndarray | None = None
    linear: np.ndarray | None = None
    matrix: np.ndarray | None = None
    declared: str = ""

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind.polyhedral:
            if self.generators is None:
                raise ValueError(f"{kind.value} needs generators")
            gens = _frozen(self.generators, 2)
            if gens.shape[0] == 0 or gens.shape[1] == 0:
                raise ValueError("generator list must be nonempty")
            object.__setattr__(self, "generators", gens)
        else:
            if self.linear is None or self.matrix is None:
                raise ValueError(f"{kind.value} needs a linear part and a matrix part")
            v = _frozen(self.linear, 1)
            g = _frozen(self.matrix, 2)
            if g.shape[1] != v.shape[0]:
                raise DimensionError("matrix part and linear part disagree on dimension")
            object.__setattr__(self, "linear", v)
            object.__setattr__(self, "matrix", g)
        if not self.declared:
            object.__setattr__(self, "declared", kind.natural_class)
        if self.declared not in ("sublinear", "superlinear"):
            raise ValueError(f"unknown class tag {self.declared!r}")

    @classmethod
    def max_linear(cls, generators) -> FunctionalSpec:
        return cls(Kind.MAX_LINEAR, generators=generators)

    @classmethod
    def min_linear(cls, generators) -> FunctionalSpec:
        return cls(Kind.MIN_LINEAR, generators=generators)

    @classmethod
    def norm_plus_linear(cls, linear, matrix) -> FunctionalSpec:
        return cls(Kind.NORM_PLUS_LINEAR, linear=linear, matrix=matrix)

    @classmethod
    def linear_minus_norm(cls, linear, matrix) -> FunctionalSpec:
        return cls(Kind.LINEAR_MINUS_NORM, linear=linear, matrix=matrix)

    @classmethod
    def euclidean_norm(cls, dim: int) -> FunctionalSpec:
        return cls.norm_plus_linear(np.zeros(dim), np.eye(dim))

    @property
    def dim(self) -> int:
        if self.kind.polyhedral:
            return self.generators.shape[1]
        return self.linear.shape[0]

    @property
    def polyhedral(self) -> bool:
        return self.kind.polyhedral

    @property
    def consistent(self) -> bool:
        return self.declared == self.kind.natural_class

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.polyhedral:
            out["generators"] = self.generators.tolist()
        else:
            out["linear"] = self.linear.tolist()
            out["matrix"] = self.matrix.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> FunctionalSpec:
        kind = Kind(data["kind"])
        if kind.polyhedral:
            return cls(kind, generators=data["generators"])
        return cls(kind, linear=data["linear"], matrix=data["matrix"])


def evaluate(spec: FunctionalSpec, x) -> float:
    x = as_vector(x, spec.dim)
    k = spec.kind
    if k is Kind.MAX_LINEAR:
        return float(np.max(spec.generators @ x))
    if k is Kind.MIN_LINEAR:
        return float(np.min(spec.generators @ x))
    norm = float(np.linalg.norm(spec.matrix @ x))
    lin = float(spec.linear @ x)
    return lin + norm if k is Kind.NORM_PLUS_LINEAR else lin - norm


def evaluate_batch(spec: FunctionalSpec, xs) -> np.ndarray:
    """Row-wise evaluation of ``spec`` on an ``(N, n)`` array."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.dim:
        raise DimensionError(f"expected shape (N, {spec.dim}), got {xs.shape}")
    k = spec.kind
    if k is Kind.MAX_LINEAR:
        return np.max(xs @ spec.generators.T, axis=1)
    if k is Kind.MIN_LINEAR:
        return np.min(xs @ spec.generators.T, axis=1)
    norm = np.linalg.norm(xs @ spec.matrix.T, axis=1)
    lin = xs @ spec.linear
    return lin + norm if k is Kind.NORM_PLUS_LINEAR else lin - norm


def batch_kernel(spec: FunctionalSpec):
    """Unchecked row-wise evaluator for hot loops (no shape validation)."""
    k = spec.kind
    if k is Kind.MAX_LINEAR:
        gt = np.ascontiguousarray(spec.generators.T)
        return lambda xs: (xs @ gt).max(axis=1)
    if k is Kind.MIN_LINEAR:
        gt = np.ascontiguousarray(spec.generators.T)
        return lambda xs: (xs @ gt).min(axis=1)
    # stacking v with G gives the linear part and the norm argument in one product
    m = np.ascontiguousarray(np.vstack([spec.linear[None, :], spec.matrix]).T)
    sign = 1.0 if k is Kind.NORM_PLUS_LINEAR else -1.0

    def kernel(xs):
        w = xs @ m
        lin = w[:, 0]
        r = w[:, 1:]
        return lin + sign * np.sqrt(np.einsum("ij,ij->i", r, r))

    return kernel


def dual_negate(spec: FunctionalSpec) -> FunctionalSpec:
    """Spec of ``x -> -spec(-x)``.

    -max_i <g_i, -x> = min_i <g_i, x>, so the generators are kept as they are.
    """
    swap = {
        Kind.MAX_LINEAR: Kind.MIN_LINEAR,
        Kind.MIN_LINEAR: Kind.MAX_LINEAR,
        Kind.NORM_PLUS_LINEAR: Kind.LINEAR_MINUS_NORM,
        Kind.LINEAR_MINUS_NORM: Kind.NORM_PLUS_LINEAR,
    }
    declared = "superlinear" if spec.declared == "sublinear" else "sublinear"
    return FunctionalSpec(
        swap[spec.kind],
        generators=spec.generators,
        linear=spec.linear,
        matrix=spec.matrix,
        declared=declared,
    )


class VectorSampler:
    """Seeded source of test vectors.

    Coordinates are uniform on ``[-radius, radius]``; every ``1/special_fraction``-th
    draw is replaced by a special vector (signed axis vector of length
    ``radius`` or a sparse vector) so that kinks of max/min/norm functionals
    get exercised.
    """

    def __init__(self, dim: int, seed: int = 0, radius: float = 10.0, special_fraction: float = 0.1):
        if dim < 0:
            raise DimensionError("sampler dimension must be >= 0")
        self.dim = dim
        self.seed = seed
        self.radius = float(radius)
        self.special_every = max(1, int(round(1.0 / special_fraction))) if special_fraction > 0 else 0
        self.rng = np.random.default_rng(seed)
        self._drawn = 0

    def vectors(self, count: int) -> np.ndarray:
        out = self.rng.uniform(-self.radius, self.radius, size=(count, self.dim))
        if self.dim == 0 or not self.special_every:
            self._drawn += count
            return out
        for i in range(count):
            j = self._drawn + i
            if j % self.special_every:
                continue
            slot = j // self.special_every
            mode = slot % 3
            if mode == 2:
                keep = self.rng.random(self.dim) < 0.5
                out[i] = np.where(keep, out[i], 0.0)
            else:
                axis = (slot // 3) % self.dim
                out[i] = 0.0
                out[i, axis] = self.radius if mode == 0 else -self.radius
        self._drawn += count
        return out

    def scales(self, count: int) -> np.ndarray:
        """Positive scalars spread log-uniformly over [e^-3, e^3]."""
        return np.exp(self.rng.uniform(-3.0, 3.0, size=count))


@dataclass(frozen=True)
class PropertyReport:
    property: str
    samples: int
    worst_margin: float
    witness: dict = field(default_factory=dict)
    tolerance: float = PROPERTY_TOL
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "samples": self.samples,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "witness": self.witness,
            "details": self.details,
        }


def check_axioms(spec: FunctionalSpec, sampler: VectorSampler, count: int, tol: float = PROPERTY_TOL) -> PropertyReport:
    """Sampled check of subadditivity (or superadditivity) and positive homogeneity.

    Margins are signed slacks: negative means the declared inequality is
    violated by that amount.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if sampler.dim != spec.dim:
        raise DimensionError("sampler and spec dimensions differ")
    xs = sampler.vectors(count)
    ys = sampler.vectors(count)
    alphas = sampler.scales(count)
    fx, fy = evaluate_batch(spec, xs), evaluate_batch(spec, ys)
    fxy = evaluate_batch(spec, xs + ys)
    sign = 1.0 if spec.declared == "sublinear" else -1.0
    additive = sign * (fx + fy - fxy)
    homogeneous = -np.abs(evaluate_batch(spec, alphas[:, None] * xs) - alphas * fx)

    i_add, i_hom = int(np.argmin(additive)), int(np.argmin(homogeneous))
    if additive[i_add] <= homogeneous[i_hom]:
        worst = float(additive[i_add])
        witness = {"axiom": "superadditivity" if sign < 0 else "subadditivity",
                   "x": xs[i_add].tolist(), "y": ys[i_add].tolist()}
    else:
        worst = float(homogeneous[i_hom])
        witness = {"axiom": "positive homogeneity", "x": xs[i_hom].tolist(), "alpha": float(alphas[i_hom])}
    return PropertyReport(
        property=spec.declared,
        samples=count,
        worst_margin=worst,
        witness=witness,
        tolerance=tol,
        details={"additivity": float(additive[i_add]), "homogeneity": float(homogeneous[i_hom])},
    )


def _orthonormalize(basis: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass."""
    q = []
    for b in basis:
        w = b.astype(float).copy()
        scale = np.linalg.norm(w)
        for _ in range(2):
            for u in q:
                w -= (u @ w) * u
        nw = np.linalg.norm(w)
        if scale == 0.0 or nw <= 1e-10 * scale:
            raise ValueError("subspace basis vectors are linearly dependent")
        q.append(w / nw)
    if not q:
        return np.zeros((0, basis.shape[1]))
    return np.array(q)


class Subspace:
    """A subspace of R^n given by a basis (rows of ``basis``).

    The user basis is kept for reporting and for coordinates of partial
    functionals; ``orthonormal`` spans the same space and is used for
    projections and membership tests.
    """

    def __init__(self, basis, ambient_dim: int | None = None):
        b = np.array(basis, dtype=float)
        if b.size == 0:
            if ambient_dim is None:
                raise DimensionError("the zero subspace needs an explicit ambient dimension")
            b = np.zeros((0, ambient_dim))
        if b.ndim != 2:
            raise DimensionError(f"basis must be a list of vectors, got shape {b.shape}")
        if ambient_dim is not None and b.shape[1] != ambient_dim:
            raise DimensionError(f"basis vectors have length {b.shape[1]}, expected {ambient_dim}")
        if b.shape[0] > b.shape[1]:
            raise ValueError("more basis vectors than the ambient dimension")
        self.basis = b
        self.basis.setflags(write=False)
        self.orthonormal = _orthonormalize(b)
        self.orthonormal.setflags(write=False)
        # basis = R @ orthonormal, R lower triangular
        self._r = b @ self.orthonormal.T
        self._check_copy()

    def _check_copy(self):
        if self.dim == 0:
            return
        q = self.orthonormal
        res_b = np.abs(self.basis - (self.basis @ q.T) @ q).max() / max(1.0, np.abs(self.basis).max())
        res_q = np.abs(q - q @ np.linalg.pinv(self.basis) @ self.basis).max()
        if max(res_b, res_q) >= 1e-9:
            raise ValueError("orthonormalized basis does not span the given basis")

    @classmethod
    def zero(cls, ambient_dim: int) -> Subspace:
        return cls(np.zeros((0, ambient_dim)), ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> Subspace:
        return cls(np.eye(ambient_dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.ambient_dim)
        q = self.orthonormal
        return q.T @ (q @ x)

    def membership(self, x, tol: float = MEMBERSHIP_TOL) -> tuple[bool, float]:
        x = as_vector(x, self.ambient_dim)
        residual = float(np.linalg.norm(x - self.project(x)))
        return residual < tol * max(1.0, float(np.linalg.norm(x))), residual

    def coordinates(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        """Coordinates of ``x`` with respect to the user basis."""
        inside, residual = self.membership(x, tol)
        if not inside:
            raise MembershipError(residual)
        if self.dim == 0:
            return np.zeros(0)
        return np.linalg.solve(self._r.T, self.orthonormal @ as_vector(x))

    def from_coordinates(self, t) -> np.ndarray:
        return np.asarray(t, dtype=float) @ self.basis

    def contains(self, other: Subspace, tol: float = MEMBERSHIP_TOL) -> bool:
        return all(self.membership(b, tol)[0] for b in other.basis)

    def extended(self, x0) -> Subspace:
        """span(self, x0) with ``x0`` appended to the user basis."""
        return Subspace(np.vstack([self.basis, as_vector(x0, self.ambient_dim)[None, :]]))

    def to_dict(self) -> dict:
        return {"basis": self.basis.tolist()}

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def subspace_membership(space: Subspace, x) -> tuple[bool, float]:
    return space.membership(x)


@dataclass(frozen=True, eq=False)
class PartialLinearFunctional:
    """f0 on a subspace, given by its values on the user basis."""

    subspace: Subspace
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(np.asarray(self.values, dtype=float).reshape(-1), 1)
        if vals.shape[0] != self.subspace.dim:
            raise DimensionError(f"{vals.shape[0]} values for a {self.subspace.dim}-dimensional subspace")
        object.__setattr__(self, "values", vals)

    def __call__(self, x) -> float:
        return evaluate_partial(self, x)

    def on_coordinates(self, t) -> np.ndarray:
        return np.asarray(t, dtype=float) @ self.values

    def coefficients(self) -> np.ndarray:
        """The coefficient vector c in span(M) with <c, b_k> = f0(b_k)."""
        m = self.subspace
        if m.dim == 0:
            return np.zeros(m.ambient_dim)
        w = np.linalg.solve(m._r, self.values)
        return w @ m.orthonormal


def evaluate_partial(f0: PartialLinearFunctional, x) -> float:
    t = f0.subspace.coordinates(x)
    return float(t @ f0.values)


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, 1))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, x) -> float:
        return float(self.coeffs @ as_vector(x, self.dim))

    def batch(self, xs) -> np.ndarray:
        return np.asarray(xs, dtype=float) @ self.coeffs

    def as_spec(self, declared: str = "sublinear") -> FunctionalSpec:
        kind = Kind.MAX_LINEAR if declared == "sublinear" else Kind.MIN_LINEAR
        return FunctionalSpec(kind, generators=self.coeffs[None, :])
