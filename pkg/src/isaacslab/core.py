"""Shared primitives: symmetric matrices, jets, parabolic cylinders, lattices.

Conventions used throughout the package:

* symmetric matrices are plain ndarrays of shape (d, d), d in {1, 2, 3},
  made exactly symmetric on construction;
* parabolic cylinders hang upward in time from their vertex: the cylinder
  with vertex (t0, x0) and radius R spans t in [t0, t0 + R^2], |x - x0| <= R;
* space-time lattices are uniform, with the time axis listed first in
  value arrays (shape (nt + 1, nx1[, nx2])).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "sym_matrix",
    "frobenius_norm",
    "Spectrum",
    "spectral_decompose",
    "Jet",
    "Box",
    "Ball",
    "dist_to_boundary",
    "ParabolicCylinder",
    "SpaceTimeGrid",
    "GridFunction",
    "cylinder_nodes",
    "discrete_derivatives",
    "gradient_field",
]

_EIGVEC_TOL = 1e-9


def sym_matrix(entries) -> np.ndarray:
    """Build an exactly symmetric (d, d) float matrix, d in {1, 2, 3}.

    Accepts anything array-like, including a bare scalar for d = 1.
    Symmetry is enforced as (A + A.T)/2, which is exact in floating
    point for each entry pair.
    """
    a = np.asarray(entries, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] not in (1, 2, 3):
        raise ValueError(f"supported dimensions are 1..3, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return (a + a.T) / 2.0


def frobenius_norm(a: np.ndarray) -> float | np.ndarray:
    """Frobenius norm, batched over leading axes of (..., d, d)."""
    a = np.asarray(a, dtype=float)
    return np.sqrt(np.sum(a * a, axis=(-2, -1)))


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with a deterministic ordering convention.

    eigenvalues are sorted descending; each eigenvector column has its
    first component of magnitude > 1e-9 made positive.  Batched inputs
    produce batched fields with matching leading axes.
    """

    eigenvalues: np.ndarray   # (..., d), descending
    eigenvectors: np.ndarray  # (..., d, d), columns


def spectral_decompose(a: np.ndarray) -> Spectrum:
    """Symmetric eigendecomposition with fixed ordering and sign.

    Parameters
    ----------
    a : ndarray, shape (..., d, d)
        Symmetric matrix or stack of symmetric matrices.

    Returns
    -------
    Spectrum
        Eigenvalues descending; eigenvector signs fixed so the first
        component exceeding 1e-9 in magnitude is positive.  Output is a
        deterministic function of the input bits.
    """
    a = np.asarray(a, dtype=float)
    w, q = np.linalg.eigh(a)
    # eigh returns ascending order; flip to descending.
    w = w[..., ::-1]
    q = q[..., ::-1]
    # Sign fix per eigenvector column.
    absq = np.abs(q)
    big = absq > _EIGVEC_TOL
    # Index of the first "nonzero" component in each column; argmax picks
    # the first True.  Columns are unit vectors so one always exists.
    first = np.argmax(big, axis=-2)
    picked = np.take_along_axis(q, first[..., None, :], axis=-2)[..., 0, :]
    sign = np.where(picked < 0.0, -1.0, 1.0)
    q = q * sign[..., None, :]
    w = np.ascontiguousarray(w)
    q = np.ascontiguousarray(q)
    w.setflags(write=False)
    q.setflags(write=False)
    return Spectrum(eigenvalues=w, eigenvectors=q)


@dataclass(frozen=True)
class Jet:
    """Second-order jet (value, gradient, hessian) at a space-time point."""

    value: float
    gradient: np.ndarray  # (d,)
    hessian: np.ndarray   # (d, d), symmetric

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        h = sym_matrix(self.hessian)
        if g.shape != (h.shape[0],):
            raise ValueError("gradient/hessian dimension mismatch")
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", h)


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed box [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True)
class Ball:
    """Closed euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


def dist_to_boundary(x, domain) -> float:
    """Distance from an interior point to the boundary of a box or ball.

    Returns a nonpositive number when x lies outside the closed domain.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(domain, Box):
        return float(np.min(np.minimum(x - domain.lo, domain.hi - x)))
    if isinstance(domain, Ball):
        return float(domain.radius - np.linalg.norm(x - domain.center))
    raise TypeError(f"unsupported domain type {type(domain)!r}")


@dataclass(frozen=True)
class ParabolicCylinder:
    """Parabolic cylinder with bottom vertex (t0, x0) and radius R.

    The closure spans t in [t0, t0 + R^2] and |x - x0| <= R; boundary
    data for the backward-in-time equation lives on everything except
    the open bottom slice, so marching proceeds from t0 + R^2 downward.
    """

    t0: float
    x0: np.ndarray
    R: float

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        if not self.R > 0:
            raise ValueError("cylinder radius must be positive")

    @property
    def d(self) -> int:
        return self.x0.shape[0]

    @property
    def t1(self) -> float:
        return self.t0 + self.R * self.R

    def contains(self, t, x, slack: float = 1e-12) -> bool | np.ndarray:
        """Closure membership, with a tiny relative slack for lattice floats."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        eps = slack * max(1.0, self.R)
        r = np.sqrt(np.sum((x - self.x0) ** 2, axis=-1))
        return (
            (t >= self.t0 - slack * max(1.0, abs(self.t0) + self.R ** 2))
            & (t <= self.t1 + slack * max(1.0, abs(self.t1)))
            & (r <= self.R + eps)
        )


def _axis_count(length: float, step: float, name: str) -> int:
    n = length / step
    n_round = int(round(n))
    if abs(n - n_round) > 1e-8 * max(1.0, abs(n)):
        raise ValueError(f"{name} step {step} does not tile length {length}")
    if n_round < 2:
        raise ValueError(f"{name} axis needs at least 3 nodes")
    return n_round


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform lattice over [t0, t1] x box with spatial step h, time step dt."""

    box: Box
    h: float
    t0: float
    t1: float
    dt: float
    nx: tuple = field(init=False)
    nt: int = field(init=False)

    def __post_init__(self):
        if not (self.h > 0 and self.dt > 0 and self.t1 > self.t0):
            raise ValueError("grid needs h > 0, dt > 0, t1 > t0")
        nx = tuple(
            _axis_count(self.box.hi[i] - self.box.lo[i], self.h, f"space[{i}]") + 1
            for i in range(self.box.d)
        )
        nt = _axis_count(self.t1 - self.t0, self.dt, "time")
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "nt", nt)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt + 1)

    def axis(self, i: int) -> np.ndarray:
        return self.box.lo[i] + self.h * np.arange(self.nx[i])

    def coords(self) -> np.ndarray:
        """Spatial node coordinates, shape (*nx, d)."""
        axes = [self.axis(i) for i in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def shape(self) -> tuple:
        return (self.nt + 1, *self.nx)


class GridFunction:
    """Real values on a space-time lattice; values are read-only."""

    def __init__(self, grid: SpaceTimeGrid, values: np.ndarray):
        values = np.ascontiguousarray(np.asarray(values, dtype=float))
        if values.shape != grid.shape():
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape()}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: SpaceTimeGrid, fn) -> "GridFunction":
        """Sample fn(t, X) slice by slice; X has shape (*nx, d)."""
        X = grid.coords()
        vals = np.empty(grid.shape())
        for j, t in enumerate(grid.times):
            vals[j] = np.asarray(fn(t, X), dtype=float).reshape(grid.nx)
        return cls(grid, vals)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)


def cylinder_nodes(grid: SpaceTimeGrid, cyl: ParabolicCylinder) -> np.ndarray:
    """Boolean mask of lattice nodes in the closure of a cylinder.

    Membership is vertex-relative: t in [t0, t0 + R^2], |x - x0| <= R,
    evaluated with a 1e-12-relative slack so nodes sitting exactly on
    the boundary are kept regardless of float representation.
    """
    if cyl.d != grid.d:
        raise ValueError("cylinder/grid dimension mismatch")
    tmask = cylinder_time_mask(grid, cyl)
    X = grid.coords()
    r = np.sqrt(np.sum((X - cyl.x0) ** 2, axis=-1))
    smask = r <= cyl.R * (1 + 1e-12) + 1e-14
    return tmask[(...,) + (None,) * grid.d] & smask[None, ...]


def cylinder_time_mask(grid: SpaceTimeGrid, cyl: ParabolicCylinder) -> np.ndarray:
    times = grid.times
    slack = 1e-12 * max(1.0, abs(cyl.t0) + cyl.R ** 2)
    return (times >= cyl.t0 - slack) & (times <= cyl.t1 + slack)


def _second_diff(v, idx, axis_idx, h):
    # Standard three-point second difference along one axis; callers
    # guarantee an interior index.
    up = list(idx)
    dn = list(idx)
    up[axis_idx] += 1
    dn[axis_idx] -= 1
    return (v[tuple(up)] - 2.0 * v[tuple(idx)] + v[tuple(dn)]) / (h * h)


def discrete_derivatives(v: GridFunction, node, one_sided_gradient: bool = True):
    """Spatial gradient and hessian of a grid function at one node.

    Parameters
    ----------
    v : GridFunction
    node : tuple
        Lattice index (it, i1[, i2]).
    one_sided_gradient : bool
        Fall back to first-order one-sided differences for gradient
        components at spatial-boundary nodes.  Hessian entries require
        interior nodes and raise otherwise.

    Returns
    -------
    (gradient, hessian)
        Central differences interior; the mixed entry uses the
        four-point cross difference.  Both are exact on quadratics.
    """
    grid = v.grid
    d = grid.d
    it = node[0]
    ix = tuple(node[1:])
    vals = v.values
    h = grid.h
    grad = np.empty(d)
    interior = [0 < ix[i] < grid.nx[i] - 1 for i in range(d)]
    for i in range(d):
        if interior[i]:
            up = list(node)
            dn = list(node)
            up[1 + i] += 1
            dn[1 + i] -= 1
            grad[i] = (vals[tuple(up)] - vals[tuple(dn)]) / (2.0 * h)
        elif one_sided_gradient:
            sgn = 1 if ix[i] == 0 else -1
            here = list(node)
            there = list(node)
            there[1 + i] += sgn
            grad[i] = sgn * (vals[tuple(there)] - vals[tuple(here)]) / h
        else:
            raise ValueError(f"gradient needs interior node along axis {i}")
    hess = np.empty((d, d))
    if not all(interior):
        raise ValueError("hessian needs a spatially interior node")
    for i in range(d):
        hess[i, i] = _second_diff(vals, list(node), 1 + i, h)
    if d == 2:
        i0, i1 = ix
        pp = vals[it, i0 + 1, i1 + 1]
        mm = vals[it, i0 - 1, i1 - 1]
        pm = vals[it, i0 + 1, i1 - 1]
        mp = vals[it, i0 - 1, i1 + 1]
        hess[0, 1] = hess[1, 0] = (pp + mm - pm - mp) / (4.0 * h * h)
    return grad, sym_matrix(hess)


def gradient_field(values_slice: np.ndarray, h: float) -> np.ndarray:
    """Gradient of one spatial slice at every node, shape (*nx, d).

    Central differences interior, first-order one-sided on faces; the
    same stencil the solver and the high-exponent seminorms use.
    """
    v = np.asarray(values_slice, dtype=float)
    d = v.ndim
    out = np.empty(v.shape + (d,))
    for i in range(d):
        g = np.empty_like(v)
        sl_up = [slice(None)] * d
        sl_dn = [slice(None)] * d
        sl_in = [slice(None)] * d
        sl_up[i] = slice(2, None)
        sl_dn[i] = slice(None, -2)
        sl_in[i] = slice(1, -1)
        g[tuple(sl_in)] = (v[tuple(sl_up)] - v[tuple(sl_dn)]) / (2.0 * h)
        first = [slice(None)] * d
        second = [slice(None)] * d
        first[i] = 0
        second[i] = 1
        g[tuple(first)] = (v[tuple(second)] - v[tuple(first)]) / h
        last = [slice(None)] * d
        prev = [slice(None)] * d
        last[i] = -1
        prev[i] = -2
        g[tuple(last)] = (v[tuple(last)] - v[tuple(prev)]) / h
        out[..., i] = g
    return out
