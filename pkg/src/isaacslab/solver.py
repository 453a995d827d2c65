"""Explicit monotone time marching for the truncated parabolic problem.

The marcher integrates dv/dt + max(H[v], P[v] - K) = 0 backward from a
terminal slice, with data imposed on the spatial boundary at every step.
H is an operator tree over second differences plus an optional
lower-order term; P is the band extremal realized axis-aligned, which
keeps every branch of the update a positively weighted average.

Stencils
--------
1D linear leaves use the three-point second difference.  2D leaves use
the sign-adapted nine-point form: with s = |a12|,

    (a11 - s) Dxx + (a22 - s) Dyy + s * (diagonal pair difference)

where the pair difference runs over (+,+)/(-,-) corners when a12 >= 0
and (+,-)/(-,+) corners otherwise.  It is exact on quadratics and
monotone exactly when min(a11, a22) >= |a12|, which the marcher checks
on every evaluated coefficient field.

Stability
---------
The explicit step is monotone under dt <= safety * h^2 / (4 d Lambda)
with Lambda = max(2/delta, 1/delta_hat); gradient terms additionally
need h * L <= 2 * (smallest axis-neighbor weight), checked per step
whenever a gradient Lipschitz constant is declared.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

from .core import Box, GridFunction, SpaceTimeGrid
from .operators import (
    CutoffSpec,
    FullOperator,
    HomogOperator,
    LinearOp,
    MaxOp,
    MinOp,
    PucciOp,
)

__all__ = [
    "ProblemSpec",
    "SchemeParams",
    "Solution",
    "spatial_only",
    "cfl_dt",
    "solve",
    "solve_frozen",
    "comparison_check",
    "KSatReport",
    "k_saturation",
    "write_grid_dump",
    "read_grid_dump",
    "export_solution_csv",
]


def spatial_only(fn):
    """Mark a coefficient callable as time-independent so the marcher
    evaluates it once instead of every step."""
    fn.time_independent = True
    return fn


@dataclass(frozen=True)
class ProblemSpec:
    """Terminal-boundary value problem for the truncated operator on a box.

    boundary(t, X) supplies the data: the terminal slice at t0 + T and
    the spatial boundary at all times.  Marching runs over [t0, t0 + T].
    """

    box: Box
    T: float
    operator: FullOperator
    cutoff: CutoffSpec
    boundary: object
    t0: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        delta = self.operator.F.delta
        if not self.cutoff.delta_hat < delta / 4.0:
            raise ValueError(
                f"cutoff floor {self.cutoff.delta_hat} must sit below delta/4 = {delta / 4.0}"
            )


@dataclass(frozen=True)
class SchemeParams:
    """Mesh widths and storage policy.

    dt = None derives the step from the parabolic stability bound with
    the given safety factor; an explicit dt must satisfy the bound and
    tile [0, T].  Stored time slices are subsampled at a uniform stride
    so at most max_stored survive; marching always runs at full rate.
    """

    h: float
    dt: float = None
    cfl_safety: float = 0.9
    max_stored: int = 257

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.max_stored < 2:
            raise ValueError("max_stored must be at least 2")


@dataclass(frozen=True)
class Solution:
    """Marched solution on the stride-subsampled storage lattice."""

    v: GridFunction
    problem: ProblemSpec
    h: float
    march_dt: float
    stride: int
    n_steps: int


def cfl_dt(problem: ProblemSpec, scheme: SchemeParams) -> float:
    """Largest stable step: safety * h^2 / (4 d Lambda)."""
    d = problem.box.lo.shape[0]
    lam = max(2.0 / problem.operator.F.delta, 1.0 / problem.cutoff.delta_hat)
    return scheme.cfl_safety * scheme.h ** 2 / (4.0 * d * lam)


def _smallest_divisor_at_least(n: int, target: int) -> int:
    for m in range(max(1, target), n + 1):
        if n % m == 0:
            return m
    return n


def _march_counts(problem: ProblemSpec, scheme: SchemeParams):
    """(nt, dt, stride) with stride | nt and nt/stride + 1 <= max_stored."""
    if scheme.dt is not None:
        d = problem.box.lo.shape[0]
        lam = max(2.0 / problem.operator.F.delta, 1.0 / problem.cutoff.delta_hat)
        if scheme.dt * 4.0 * d * lam > scheme.h ** 2 * (1.0 + 1e-9):
            raise ValueError("explicit dt violates the parabolic stability bound")
        nt = round(problem.T / scheme.dt)
        if nt < 1 or abs(nt * scheme.dt - problem.T) > 1e-9 * problem.T:
            raise ValueError("explicit dt must tile [0, T]")
        stride = _smallest_divisor_at_least(
            nt, -(-nt // (scheme.max_stored - 1))
        )
        return nt, scheme.dt, stride
    dt_max = cfl_dt(problem, scheme)
    nt = max(2, int(np.ceil(problem.T / dt_max * (1.0 - 1e-12))))
    stride = -(-nt // (scheme.max_stored - 1))
    nt = stride * (-(-nt // stride))
    return nt, problem.T / nt, stride


# ---------------------------------------------------------------------------
# Tree compilation.


def _flatten(node):
    if isinstance(node, LinearOp):
        return ("lin", node.coef)
    if isinstance(node, PucciOp):
        return ("pucci", node.band.lo, node.band.hi)
    if isinstance(node, MaxOp):
        return ("max", [_flatten(c) for c in node.children])
    if isinstance(node, MinOp):
        return ("min", [_flatten(c) for c in node.children])
    raise TypeError(f"unsupported operator node {type(node).__name__}")


class _Stepper:
    """Per-problem compiled state: interior views, coefficient caches,
    and the field evaluator for one backward step."""

    def __init__(self, problem: ProblemSpec, grid_shape, h, X, t0):
        self.problem = problem
        self.h = h
        self.h2 = h * h
        self.d = X.shape[-1]
        if self.d not in (1, 2):
            raise ValueError("marching supports d in {1, 2}")
        core = (slice(1, -1),) * self.d
        self.core = core
        self.Xint = X[core]
        bmask = np.zeros(grid_shape, dtype=bool)
        for i in range(self.d):
            for face in (0, -1):
                sl = [slice(None)] * self.d
                sl[i] = face
                bmask[tuple(sl)] = True
        self.bmask = bmask
        self.Xb = X[bmask]
        op = problem.operator
        if op.game is not None:
            self.mode = "game"
            self.rows = [
                [(self._coef_cache(c, t0), low) for c, low in row] for row in op.game
            ]
            self.sup_outer = op.game_order == "supinf"
        else:
            self.mode = "tree"
            self.tree = self._cache_tree(_flatten(op.F.root), t0)
        self.G = op.G
        self.gradL = op.grad_lipschitz
        self.plo = problem.cutoff.delta_hat
        self.phi = 1.0 / problem.cutoff.delta_hat
        self.K = problem.cutoff.K

    # -- coefficient caching ------------------------------------------------

    def _coef_cache(self, coef, t0):
        """Return fn(t) -> weight tuple for one linear leaf."""
        if callable(coef) and not getattr(coef, "time_independent", False):
            return lambda t: self._weights(np.asarray(coef(t, self.Xint), float))
        if callable(coef):
            w = self._weights(np.asarray(coef(t0, self.Xint), float))
        else:
            w = self._weights(np.asarray(coef, float))
        return lambda t: w

    def _cache_tree(self, flat, t0):
        kind = flat[0]
        if kind == "lin":
            return ("lin", self._coef_cache(flat[1], t0))
        if kind == "pucci":
            return flat
        return (kind, [self._cache_tree(c, t0) for c in flat[1]])

    def _weights(self, a):
        """Stencil weights of one coefficient field; validates dominance."""
        if self.d == 1:
            w = a[..., 0, 0]
            lo = float(np.min(w))
            if lo < -1e-12:
                raise ValueError("diffusion coefficient must be nonnegative")
            return ("w1", w, lo)
        a11 = a[..., 0, 0]
        a22 = a[..., 1, 1]
        a12 = a[..., 0, 1]
        s = np.abs(a12)
        w11 = a11 - s
        w22 = a22 - s
        lo = float(min(np.min(w11), np.min(w22)))
        if lo < -1e-12:
            raise ValueError(
                "coefficient violates stencil dominance: need min(a11, a22) >= |a12|"
            )
        return ("w2", w11, w22, np.maximum(a12, 0.0), np.maximum(-a12, 0.0), lo)

    # -- per-step fields ----------------------------------------------------

    def _diffs(self, v):
        h2 = self.h2
        if self.d == 1:
            D0 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
            return {"axis": (D0,)}
        c = v[1:-1, 1:-1]
        Dxx = (v[2:, 1:-1] - 2.0 * c + v[:-2, 1:-1]) / h2
        Dyy = (v[1:-1, 2:] - 2.0 * c + v[1:-1, :-2]) / h2
        Cd = (v[2:, 2:] + v[:-2, :-2] - 2.0 * c) / h2
        Ca = (v[2:, :-2] + v[:-2, 2:] - 2.0 * c) / h2
        return {"axis": (Dxx, Dyy), "cd": Cd, "ca": Ca}

    def _grad(self, v):
        h = self.h
        if self.d == 1:
            return ((v[2:] - v[:-2]) / (2.0 * h))[..., None]
        gx = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * h)
        gy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * h)
        return np.stack([gx, gy], axis=-1)

    def _lin_field(self, w, diffs):
        if w[0] == "w1":
            return w[1] * diffs["axis"][0], w[2]
        _, w11, w22, wd, wa, lo = w
        Dxx, Dyy = diffs["axis"]
        out = w11 * Dxx + w22 * Dyy
        if np.any(wd):
            out = out + wd * diffs["cd"]
        if np.any(wa):
            out = out + wa * diffs["ca"]
        return out, lo

    def _pucci_field(self, lo, hi, diffs):
        out = 0.0
        for D in diffs["axis"]:
            out = out + hi * np.maximum(D, 0.0) + lo * np.minimum(D, 0.0)
        return out, lo

    def _tree_field(self, node, t, diffs):
        kind = node[0]
        if kind == "lin":
            return self._lin_field(node[1](t), diffs)
        if kind == "pucci":
            return self._pucci_field(node[1], node[2], diffs)
        fields = []
        lo = np.inf
        for c in node[1]:
            f, l = self._tree_field(c, t, diffs)
            fields.append(f)
            lo = min(lo, l)
        fold = np.maximum.reduce if kind == "max" else np.minimum.reduce
        return fold(fields), lo

    def h_field(self, v, t, diffs):
        """Interior values of H[v] at time t plus the margin bookkeeping."""
        need_grad = self.gradL > 0 or self.G is not None or (
            self.mode == "game"
            and any(low is not None for row in self.rows for _, low in row)
        )
        grad = self._grad(v) if need_grad else None
        u0 = v[self.core]
        if self.mode == "tree":
            field, lo = self._tree_field(self.tree, t, diffs)
            if self.G is not None:
                field = field + np.asarray(self.G(u0, grad, t, self.Xint), float)
        else:
            lo = np.inf
            outer = None
            for row in self.rows:
                inner = None
                for wfn, low in row:
                    f, l = self._lin_field(wfn(t), diffs)
                    lo = min(lo, l)
                    if low is not None:
                        f = f + np.asarray(low(u0, grad, t, self.Xint), float)
                    if inner is None:
                        inner = f
                    else:
                        inner = (
                            np.minimum(inner, f) if self.sup_outer else np.maximum(inner, f)
                        )
                if outer is None:
                    outer = inner
                else:
                    outer = (
                        np.maximum(outer, inner) if self.sup_outer else np.minimum(outer, inner)
                    )
            field = outer
        if self.gradL > 0 and self.h * self.gradL > 2.0 * lo + 1e-12:
            raise ValueError(
                f"gradient term too steep for the mesh: h * L = {self.h * self.gradL:.3e} "
                f"exceeds twice the smallest axis weight {lo:.3e}"
            )
        return field

    def step(self, v, t, dt):
        """One backward step: slice at t -> slice at t - dt."""
        diffs = self._diffs(v)
        H = self.h_field(v, t, diffs)
        P, _ = self._pucci_field(self.plo, self.phi, diffs)
        full = np.maximum(H, P - self.K)
        out = np.empty_like(v)
        out[self.core] = v[self.core] + dt * full
        out[self.bmask] = np.asarray(
            self.problem.boundary(t - dt, self.Xb), float
        )
        return out


def solve(problem: ProblemSpec, scheme: SchemeParams) -> Solution:
    """March the truncated equation backward from the terminal slice.

    Returns the solution on the storage lattice: every stride-th marching
    slice, terminal and initial slices always included.
    """
    nt, dt, stride = _march_counts(problem, scheme)
    d = problem.box.lo.shape[0]
    store_grid = SpaceTimeGrid(
        box=problem.box,
        h=scheme.h,
        t0=problem.t0,
        t1=problem.t0 + problem.T,
        dt=dt * stride,
    )
    X = store_grid.coords()
    stepper = _Stepper(problem, tuple(store_grid.nx), scheme.h, X, problem.t0)
    t_top = problem.t0 + problem.T
    v = np.asarray(problem.boundary(t_top, X), float)
    if v.shape != tuple(store_grid.nx):
        raise ValueError("boundary data shape mismatch on the terminal slice")
    stored = np.empty((nt // stride + 1,) + tuple(store_grid.nx))
    stored[-1] = v
    for j in range(nt, 0, -1):
        t = problem.t0 + j * dt
        v = stepper.step(v, t, dt)
        if (j - 1) % stride == 0:
            stored[(j - 1) // stride] = v
    gf = GridFunction(grid=store_grid, values=stored)
    return Solution(
        v=gf, problem=problem, h=scheme.h, march_dt=dt, stride=stride, n_steps=nt
    )


# ---------------------------------------------------------------------------
# Frozen-coefficient solves.


def _ball_points(center, R, n_per_axis):
    center = np.atleast_1d(np.asarray(center, float))
    d = center.shape[0]
    w = 2.0 * R / n_per_axis
    axes = [center[i] - R + w * (np.arange(n_per_axis) + 0.5) for i in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return pts[np.sum((pts - center) ** 2, axis=1) <= R * R * (1 + 1e-12)]


def _freeze_coef(coef, pts):
    if not callable(coef):
        return np.asarray(coef, float)
    if getattr(coef, "time_independent", False):
        return np.mean(np.asarray(coef(0.0, pts), float), axis=0)

    def frozen(t, X):
        abar = np.mean(np.asarray(coef(t, pts), float), axis=0)
        return np.broadcast_to(abar, np.shape(X)[:-1] + abar.shape)

    return frozen


def _freeze_tree(node, pts):
    if isinstance(node, LinearOp):
        return LinearOp(coef=_freeze_coef(node.coef, pts))
    if isinstance(node, PucciOp):
        return node
    if isinstance(node, MaxOp):
        return MaxOp(children=tuple(_freeze_tree(c, pts) for c in node.children))
    if isinstance(node, MinOp):
        return MinOp(children=tuple(_freeze_tree(c, pts) for c in node.children))
    raise TypeError(f"unsupported operator node {type(node).__name__}")


def solve_frozen(
    problem: ProblemSpec,
    R: float,
    scheme: SchemeParams,
    center=None,
    n_avg: int = None,
) -> Solution:
    """Solve with every diffusion coefficient replaced by its spatial
    ball average over B_R(center), leaf by leaf; the extremal branches
    and lower-order term are already x-free and pass through.  Same
    lattice and cutoff as the rough problem, so the two solutions
    compare node by node."""
    if center is None:
        center = (problem.box.lo + problem.box.hi) / 2.0
    if n_avg is None:
        n_avg = max(8, int(round(2.0 * R / scheme.h)))
    pts = _ball_points(center, R, n_avg)
    op = problem.operator
    froot = _freeze_tree(op.F.root, pts)
    game = None
    if op.game is not None:
        game = tuple(
            tuple((_freeze_coef(c, pts), low) for c, low in row) for row in op.game
        )
    frozen_op = replace(
        op, F=HomogOperator(root=froot, delta=op.F.delta), game=game
    )
    return solve(replace(problem, operator=frozen_op), scheme)


# ---------------------------------------------------------------------------
# Order and saturation checks.


def comparison_check(lower: Solution, upper: Solution, tol: float = 1e-12):
    """Discrete comparison: lower.v <= upper.v + tol on the shared lattice.

    Returns (ok, worst_violation).  Requires identical lattices.
    """
    ga, gb = lower.v.grid, upper.v.grid
    same = (
        np.allclose(ga.box.lo, gb.box.lo)
        and np.allclose(ga.box.hi, gb.box.hi)
        and ga.h == gb.h
        and ga.dt == gb.dt
        and ga.t0 == gb.t0
        and ga.nt == gb.nt
    )
    if not same:
        raise ValueError("comparison needs solutions on the same lattice")
    viol = float(np.max(lower.v.values - upper.v.values))
    return viol <= tol, viol


@dataclass(frozen=True)
class KSatReport:
    """Truncation-level sweep: per-level solutions and successive gaps."""

    K_values: tuple
    sup_gaps: tuple
    saturated: bool
    solutions: tuple


def k_saturation(
    problem: ProblemSpec, scheme: SchemeParams, K_values, tol: float = 1e-10
) -> KSatReport:
    """Solve across increasing truncation levels plus a final doubled
    level; saturated means the last gap is at or below tol."""
    Ks = sorted(float(K) for K in K_values)
    if not Ks:
        raise ValueError("need at least one truncation level")
    Ks.append(2.0 * Ks[-1] if Ks[-1] > 0 else 1.0)
    sols = []
    for K in Ks:
        cut = CutoffSpec(delta_hat=problem.cutoff.delta_hat, K=K)
        sols.append(solve(replace(problem, cutoff=cut), scheme))
    gaps = tuple(
        float(np.max(np.abs(sols[i].v.values - sols[i + 1].v.values)))
        for i in range(len(sols) - 1)
    )
    return KSatReport(
        K_values=tuple(Ks),
        sup_gaps=gaps,
        saturated=gaps[-1] <= tol,
        solutions=tuple(sols),
    )


# ---------------------------------------------------------------------------
# Serialization.


def write_grid_dump(sol: Solution, path):
    """Raw binary dump, little-endian.

    Header: uint32 d, uint32 nx[d], uint32 stored time slices, then
    float64 h, stored dt, T.  Body: stored values, time-major row-major
    float64.
    """
    grid = sol.v.grid
    with open(path, "wb") as f:
        f.write(struct.pack("<I", grid.d))
        for n in grid.nx:
            f.write(struct.pack("<I", int(n)))
        f.write(struct.pack("<I", grid.nt + 1))
        f.write(struct.pack("<3d", grid.h, grid.dt, sol.problem.T))
        f.write(np.ascontiguousarray(sol.v.values, dtype="<f8").tobytes())


def read_grid_dump(path):
    """Inverse of write_grid_dump: (values, meta) with meta carrying
    d, nx, h, dt, T."""
    with open(path, "rb") as f:
        (d,) = struct.unpack("<I", f.read(4))
        nx = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(d))
        (nts,) = struct.unpack("<I", f.read(4))
        h, dt, T = struct.unpack("<3d", f.read(24))
        body = f.read()
    values = np.frombuffer(body, dtype="<f8").reshape((nts,) + nx).copy()
    return values, {"d": d, "nx": nx, "h": h, "dt": dt, "T": T}


def export_solution_csv(sol: Solution, path):
    """Plain-text export: one node per row, t, x coordinates, value."""
    grid = sol.v.grid
    X = grid.coords().reshape(-1, grid.d)
    npts = X.shape[0]
    nts = grid.nt + 1
    tcol = np.repeat(grid.times, npts)[:, None]
    xcols = np.tile(X, (nts, 1))
    vcol = sol.v.values.reshape(-1)[:, None]
    table = np.hstack([tcol, xcols, vcol])
    cols = ["t"] + [f"x{i + 1}" for i in range(grid.d)] + ["v"]
    header = "isaacslab-solution v1\n" + ",".join(cols)
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header=header)
