"""Clifford algebra Cl_n arithmetic and monogenic linear maps.

Conventions: generators e_1..e_n satisfy e_i^2 = -1 and anticommute
(negative-definite signature, the usual choice in Clifford analysis).
Multivector coefficients are stored in graded-lexicographic blade order,
e.g. for n=3: 1, e1, e2, e3, e12, e13, e23, e123; that ordering is part of
the serialization contract.  Internally blades are bitmasks and the product
runs off a per-dimension sign table (the product blade mask is the XOR of
the factor masks).

A real-linear map L(x) = sum_i x_i c_i with multivector columns c_i is left
monogenic when sum_i e_i c_i = 0 and right monogenic when sum_i c_i e_i = 0.
Since e_n is invertible, either condition lets the column over the normal
direction be recovered from the columns over a hyperplane, which is the
uniqueness phenomenon exercised here.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import AlgebraError, BuildError
from .fields import ScalarField, require_same_sample
from .geometry import SCHEMA_VERSION, SetSample

DIM_CAP = 6


def _mask_bits(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _blade_sign(a: int, b: int) -> int:
    """Sign of (blade a) * (blade b) under e_i^2 = -1, anticommuting."""
    sign = 1
    res = a
    for j in _mask_bits(b):
        if (res >> (j + 1)).bit_count() % 2:
            sign = -sign
        if res >> j & 1:
            sign = -sign
            res &= ~(1 << j)
        else:
            res |= 1 << j
    return sign


@lru_cache(maxsize=None)
def _tables(dim: int):
    """(glex mask order, mask -> glex index, sign table in mask space)."""
    size = 1 << dim
    order = sorted(range(size), key=lambda m: (m.bit_count(), _mask_bits(m)))
    order_arr = np.array(order, dtype=int)
    inv = np.empty(size, dtype=int)
    inv[order_arr] = np.arange(size)
    sign = np.empty((size, size), dtype=np.int8)
    for a in range(size):
        for b in range(size):
            sign[a, b] = _blade_sign(a, b)
    return order_arr, inv, sign


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if not 1 <= dim <= DIM_CAP:
        raise AlgebraError(f"dimension {dim} outside supported range 1..{DIM_CAP}")
    return dim


def blade_order(dim: int) -> tuple[tuple[int, ...], ...]:
    """Blades in coefficient order, as tuples of 1-based generator indices."""
    order, _, _ = _tables(_check_dim(dim))
    return tuple(tuple(i + 1 for i in _mask_bits(int(m))) for m in order)


@dataclass(frozen=True, eq=False)
class Multivector:
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        dim = _check_dim(self.dim)
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.shape != (1 << dim,):
            raise AlgebraError(
                f"expected {1 << dim} coefficients for dim {dim}, got shape {arr.shape}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, dim: int) -> "Multivector":
        return cls(dim, np.zeros(1 << _check_dim(dim)))

    @classmethod
    def scalar(cls, dim: int, value: float) -> "Multivector":
        c = np.zeros(1 << _check_dim(dim))
        c[0] = value
        return cls(dim, c)

    @classmethod
    def basis_vector(cls, dim: int, i: int) -> "Multivector":
        return cls.blade(dim, (i,))

    @classmethod
    def blade(cls, dim: int, indices: Sequence[int]) -> "Multivector":
        """Basis blade e_{i1} ... e_{ik} for strictly increasing 1-based indices."""
        dim = _check_dim(dim)
        idx = tuple(int(i) for i in indices)
        if any(not 1 <= i <= dim for i in idx) or list(idx) != sorted(set(idx)):
            raise AlgebraError(f"blade indices {idx} must be strictly increasing in 1..{dim}")
        mask = 0
        for i in idx:
            mask |= 1 << (i - 1)
        _, inv, _ = _tables(dim)
        c = np.zeros(1 << dim)
        c[inv[mask]] = 1.0
        return cls(dim, c)

    def coefficient(self, indices: Sequence[int]) -> float:
        mask = 0
        for i in indices:
            mask |= 1 << (int(i) - 1)
        _, inv, _ = _tables(self.dim)
        return float(self.coeffs[inv[mask]])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "Multivector") -> "Multivector":
        if self.dim != other.dim:
            raise AlgebraError("dimension mismatch")
        return Multivector(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "Multivector") -> "Multivector":
        if self.dim != other.dim:
            raise AlgebraError("dimension mismatch")
        return Multivector(self.dim, self.coeffs - other.coeffs)

    def __neg__(self) -> "Multivector":
        return Multivector(self.dim, -self.coeffs)

    def __rmul__(self, scalar: float) -> "Multivector":
        if isinstance(scalar, Multivector):
            return NotImplemented
        return Multivector(self.dim, float(scalar) * self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return Multivector(self.dim, self.coeffs * float(other))

    def as_dict(self) -> dict:
        return {"dim": self.dim, "coeffs": [float(c) for c in self.coeffs]}


def multivector_from_dict(doc: dict, source: str = "<dict>") -> Multivector:
    if not isinstance(doc, dict) or "dim" not in doc or "coeffs" not in doc:
        raise AlgebraError(f"{source}: expected an object with 'dim' and 'coeffs'")
    return Multivector(doc["dim"], np.asarray(doc["coeffs"], dtype=float))


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product under e_i^2 = -1 with anticommuting generators."""
    if a.dim != b.dim:
        raise AlgebraError(f"dimension mismatch ({a.dim} vs {b.dim})")
    order, inv, sign = _tables(a.dim)
    size = 1 << a.dim
    am = np.empty(size)
    bm = np.empty(size)
    am[order] = a.coeffs
    bm[order] = b.coeffs
    out = np.zeros(size)
    masks = np.arange(size)
    for m in np.nonzero(am)[0]:
        out[m ^ masks] += am[m] * sign[m, :] * bm
    return Multivector(a.dim, out[order])


@dataclass(frozen=True, eq=False)
class LinearCliffordMap:
    """Real-linear map R^n -> Cl_n given by its columns L(e_i) = c_i."""

    dim: int
    columns: tuple[Multivector, ...]

    def __post_init__(self):
        dim = _check_dim(self.dim)
        cols = tuple(self.columns)
        if len(cols) != dim or any(c.dim != dim for c in cols):
            raise AlgebraError(f"need exactly {dim} columns of dimension {dim}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "columns", cols)

    def apply(self, x: Sequence[float]) -> Multivector:
        if len(x) != self.dim:
            raise AlgebraError(f"argument must have {self.dim} components")
        out = Multivector.zero(self.dim)
        for xi, col in zip(x, self.columns):
            out = out + float(xi) * col
        return out

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "columns": [[float(c) for c in col.coeffs] for col in self.columns],
        }


def map_from_dict(doc: dict, source: str = "<dict>") -> LinearCliffordMap:
    if not isinstance(doc, dict) or "dim" not in doc or "columns" not in doc:
        raise AlgebraError(f"{source}: expected an object with 'dim' and 'columns'")
    dim = doc["dim"]
    cols = tuple(Multivector(dim, np.asarray(c, dtype=float)) for c in doc["columns"])
    return LinearCliffordMap(dim, cols)


@dataclass(frozen=True)
class MonogenicReport:
    side: str
    defect: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "side": self.side,
            "defect": self.defect,
            "tol": self.tol,
            "passed": self.passed,
        }


def _dirac_sum(columns: Sequence[Multivector], side: str) -> Multivector:
    dim = columns[0].dim
    total = Multivector.zero(dim)
    for i, col in enumerate(columns, start=1):
        e_i = Multivector.basis_vector(dim, i)
        total = total + (e_i * col if side == "left" else col * e_i)
    return total


def is_left_monogenic(L: LinearCliffordMap, tol: float = 1e-12) -> MonogenicReport:
    """Defect norm of the left Dirac condition sum_i e_i c_i = 0."""
    defect = _dirac_sum(L.columns, "left").norm()
    return MonogenicReport("left", defect, tol, defect <= tol)


def is_right_monogenic(L: LinearCliffordMap, tol: float = 1e-12) -> MonogenicReport:
    """Defect norm of the right Dirac condition sum_i c_i e_i = 0."""
    defect = _dirac_sum(L.columns, "right").norm()
    return MonogenicReport("right", defect, tol, defect <= tol)


def _vector_multivector(dim: int, v: np.ndarray) -> Multivector:
    out = Multivector.zero(dim)
    for i, c in enumerate(v, start=1):
        out = out + float(c) * Multivector.basis_vector(dim, i)
    return out


def complete_from_hyperplane(
    partial: Sequence[Multivector],
    side: str = "left",
    frame: np.ndarray | None = None,
) -> LinearCliffordMap:
    """Recover the missing column of a monogenic map from a hyperplane.

    ``partial`` gives the columns over the first n-1 directions of ``frame``
    (an orthogonal matrix whose last column is the hyperplane normal;
    identity by default, i.e. the hyperplane x_n = 0).  The completion is
    the unique column making the map monogenic on the requested side: with
    unit normal nu, nu^2 = -1 gives nu^{-1} = -nu, so for the left case
    c_nu = nu * sum_{i<n} nu_i c_i.  Columns are returned in the standard
    basis.
    """
    if side not in ("left", "right"):
        raise AlgebraError(f"side must be 'left' or 'right', got {side!r}")
    if not partial:
        raise AlgebraError("need at least one partial column")
    dim = partial[0].dim
    if dim < 2:
        raise AlgebraError("hyperplane completion needs dimension at least 2")
    if len(partial) != dim - 1 or any(c.dim != dim for c in partial):
        raise AlgebraError(f"expected {dim - 1} columns of dimension {dim}")
    if frame is None:
        frame = np.eye(dim)
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (dim, dim) or not np.allclose(frame.T @ frame, np.eye(dim), atol=1e-9):
        raise AlgebraError("frame must be an orthogonal matrix of shape (dim, dim)")
    directions = [_vector_multivector(dim, frame[:, i]) for i in range(dim)]
    acc = Multivector.zero(dim)
    for eps, col in zip(directions[:-1], partial):
        acc = acc + (eps * col if side == "left" else col * eps)
    nu = directions[-1]
    # nu^{-1} = -nu; c_nu = -nu^{-1} acc (left) resp. -acc nu^{-1} (right)
    c_nu = nu * acc if side == "left" else acc * nu
    cols_std = []
    for j in range(dim):
        col = Multivector.zero(dim)
        for i in range(dim - 1):
            col = col + float(frame[j, i]) * partial[i]
        col = col + float(frame[j, dim - 1]) * c_nu
        cols_std.append(col)
    return LinearCliffordMap(dim, tuple(cols_std))


def dirac_constraint_matrix(dim: int, side: str = "left") -> np.ndarray:
    """Matrix of (c_1..c_n) -> sum_i e_i c_i (or c_i e_i), in glex coordinates.

    Shape (2^n, n 2^n); the kernel is the space of monogenic linear maps.
    """
    dim = _check_dim(dim)
    if dim < 2:
        raise AlgebraError("constraint matrix needs dimension at least 2")
    if side not in ("left", "right"):
        raise AlgebraError(f"side must be 'left' or 'right', got {side!r}")
    order, inv, sign = _tables(dim)
    size = 1 << dim
    blocks = []
    for i in range(dim):
        ei = 1 << i
        block = np.zeros((size, size))
        for g in range(size):
            mask = order[g]
            target = ei ^ mask
            s = sign[ei, mask] if side == "left" else sign[mask, ei]
            block[inv[target], g] = s
        blocks.append(block)
    return np.hstack(blocks)


def monogenic_space_dimension(n: int, side: str = "left") -> int:
    """Real dimension of the space of monogenic linear maps, by rank.

    The Dirac constraint removes exactly one column's worth of freedom, so
    the result equals (n-1) 2^n.
    """
    if not 2 <= n <= DIM_CAP:
        raise AlgebraError(f"n must be in 2..{DIM_CAP}, got {n}")
    K = dirac_constraint_matrix(n, side)
    rank = int(np.linalg.matrix_rank(K))
    return n * (1 << n) - rank


# ---------------------------------------------------------------------------
# complex specialization (n = 2)


def complex_to_even(z: complex) -> Multivector:
    """Embed C into the even part of Cl_2 by 1 -> 1, i -> e2 e1 = -e12."""
    out = Multivector.zero(2)
    c = out.coeffs.copy()
    c.setflags(write=True)
    c[0] = z.real
    c[3] = -z.imag
    return Multivector(2, c)


@dataclass(frozen=True)
class ComplexLinearMap:
    """The complex-linear map on R^2 = C sending z to on_one * z."""

    on_one: complex

    @property
    def on_i(self) -> complex:
        return 1j * self.on_one

    def apply(self, z: complex) -> complex:
        return self.on_one * z

    def as_real_matrix(self) -> np.ndarray:
        a, b = self.on_one.real, self.on_one.imag
        return np.array([[a, -b], [b, a]])

    def clifford_columns(self) -> tuple[Multivector, Multivector]:
        return complex_to_even(self.on_one), complex_to_even(self.on_i)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "on_one": [self.on_one.real, self.on_one.imag],
            "on_i": [self.on_i.real, self.on_i.imag],
        }


def complex_complete(a_on_reals: complex) -> ComplexLinearMap:
    """Unique complex-linear extension of x -> a x from the real axis to C.

    Under the documented embedding (i -> e2 e1) this agrees with the left
    Clifford completion from the hyperplane x_2 = 0.
    """
    return ComplexLinearMap(complex(a_on_reals))


# ---------------------------------------------------------------------------
# tangential derivative on Lipschitz graphs


@dataclass(frozen=True)
class GraphDerivativeReport:
    node_count: int
    grid_step: float
    residuals: tuple[float, ...]
    max_residual: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "node_count": self.node_count,
            "grid_step": self.grid_step,
            "max_residual": self.max_residual,
            "threshold": self.threshold,
            "passed": self.passed,
            "phi_prime_convention": "centered secant slope at interior nodes",
        }


def _require_graph_chain(sample: SetSample) -> None:
    if sample.ambient_dim != 2:
        raise BuildError("graph samples live in the plane")
    expected = {(i, i + 1) for i in range(sample.vertex_count - 1)}
    got = {(min(i, j), max(i, j)) for i, j, _ in sample.edges}
    if got != expected:
        raise BuildError("sample is not a chained graph built over a grid")
    xs = [p[0] for p in sample.points]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise BuildError("graph sample must have strictly increasing x coordinates")


def tangential_derivative_on_graph(
    f: ScalarField,
    deriv: ScalarField,
    c_quad: float = 1.0,
    tol: float = 1e-9,
) -> GraphDerivativeReport:
    """Check complex derivative samples against the tangential difference quotient.

    On the graph of phi, parameterized by x, a holomorphic-type derivative
    a(z) must satisfy d/dx f(x + i phi(x)) = a(z) (1 + i phi'(x)); this is
    the perturbation of d/dx carried by the graph.  Both sides are evaluated
    at interior grid nodes with centered differences (phi' is the centered
    secant slope, which equals the edge slope on linear pieces).  Complex
    linearity of the differential is built into the representation: the
    value a acts on a planar direction (dx, dy) as a (dx + i dy).

    Passes when the worst residual is at most c_quad * h^2 + tol for the
    grid step h.
    """
    sample = require_same_sample(f, deriv)
    _require_graph_chain(sample)
    pts = sample.points_array
    xs = pts[:, 0]
    zs = xs + 1j * pts[:, 1]
    fv = f.values.astype(np.complex128)
    av = deriv.values.astype(np.complex128)
    h = float(np.max(np.diff(xs)))
    residuals = []
    for j in range(1, sample.vertex_count - 1):
        dx = xs[j + 1] - xs[j - 1]
        lhs = (fv[j + 1] - fv[j - 1]) / dx
        rhs = av[j] * (zs[j + 1] - zs[j - 1]) / dx
        residuals.append(float(abs(lhs - rhs)))
    max_res = max(residuals) if residuals else 0.0
    threshold = c_quad * h * h + tol
    return GraphDerivativeReport(
        node_count=sample.vertex_count,
        grid_step=h,
        residuals=tuple(residuals),
        max_residual=max_res,
        threshold=float(threshold),
        passed=max_res <= threshold,
    )
