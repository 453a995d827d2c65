"""Boundary-data extension and mollification with measured certificates.

Data given on a space-time lattice is extended past the lattice edges by
reflection (even across the time faces, odd point reflection across the
space faces, so affine-in-x data extends to itself exactly), then
convolved with a compactly supported bump, space half-width eps and time
half-width eps^2.  The returned certificates are lattice measurements:

* n1: sup |g - g_eps| / eps^kappa,
* n2: (sup |dt g_eps| + sup |D^2 g_eps|) / eps^(kappa - 2),

plus third-order quantities reported for inspection but never gated.
A kappa-Holder datum keeps both bounded as eps sweeps, which is what the
smoothing experiment checks.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import convolve1d

from .core import GridFunction, ParabolicCylinder, SpaceTimeGrid, cylinder_nodes

__all__ = [
    "MollifierSpec",
    "bump_kernel",
    "extend_data",
    "SmoothResult",
    "smooth",
    "BarrierReport",
    "barrier_check",
    "resample",
]


@dataclass(frozen=True)
class MollifierSpec:
    """Smoothing scale eps and the Holder order kappa it certifies."""

    eps: float
    kappa: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not (0.0 < self.kappa <= 2.0):
            raise ValueError("kappa must lie in (0, 2]")


def bump_kernel(step: float, scale: float) -> np.ndarray:
    """Normalized lattice bump exp(-1/(1 - s^2)) with support |s| < 1,
    s = offset / scale.  Needs scale >= 2 * step so the kernel has at
    least three nodes; below that the scale is unresolved."""
    if scale < 2.0 * step * (1.0 - 1e-12):
        raise ValueError(
            f"mollifier scale {scale} under-resolved by lattice step {step}"
        )
    m = int(np.ceil(scale / step)) - 1
    s = np.arange(-m, m + 1) * step / scale
    w = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return w / np.sum(w)


def extend_data(g: GridFunction, eps: float, space_mode: str = "odd"):
    """Reflect lattice data past every face, wide enough for an
    eps-kernel pass.

    Time faces always reflect evenly (values mirror across the face
    node, the periodic even extension).  Space faces reflect oddly by
    default, a point reflection through each face value: affine data is
    reproduced exactly, so mollification commutes with affine
    subtraction.  space_mode="even" mirrors values instead, which keeps
    the extension's range and ordering but bends affine data.

    Returns (extended GridFunction, (pad_t, pad_x)).
    """
    if space_mode not in ("odd", "even"):
        raise ValueError("space_mode must be 'odd' or 'even'")
    grid = g.grid
    pad_t = int(np.ceil(eps * eps / grid.dt)) + 1
    pad_x = int(np.ceil(eps / grid.h)) + 1
    # time axis: even reflection
    spec = [(pad_t, pad_t)] + [(0, 0)] * grid.d
    ext = np.pad(g.values, spec, mode="reflect")
    # space axes: chosen reflection
    spec = [(0, 0)] + [(pad_x, pad_x)] * grid.d
    if space_mode == "odd":
        ext = np.pad(ext, spec, mode="reflect", reflect_type="odd")
    else:
        ext = np.pad(ext, spec, mode="reflect")
    big = SpaceTimeGrid(
        box=type(grid.box)(
            lo=grid.box.lo - pad_x * grid.h, hi=grid.box.hi + pad_x * grid.h
        ),
        h=grid.h,
        t0=grid.t0 - pad_t * grid.dt,
        t1=grid.t0 + (grid.nt + pad_t) * grid.dt,
        dt=grid.dt,
    )
    return GridFunction(big, ext), (pad_t, pad_x)


@dataclass(frozen=True)
class SmoothResult:
    """Mollified data plus its measured seminorm certificates."""

    smoothed: GridFunction
    eps: float
    kappa: float
    n1: float
    n2: float
    sup_diff: float
    sup_dt: float
    sup_hess: float
    third_order: float


def _interior_time_derivative(vals, dt):
    return (vals[2:] - vals[:-2]) / (2.0 * dt)


def _hessian_entries(vals, h, d):
    """Second-difference fields on the spatially interior block of every
    slice; returns a list of arrays (diagonal entries, then the mixed
    entry for d = 2)."""
    out = []
    if d == 1:
        out.append((vals[:, 2:] - 2.0 * vals[:, 1:-1] + vals[:, :-2]) / (h * h))
        return out
    c = vals[:, 1:-1, 1:-1]
    out.append((vals[:, 2:, 1:-1] - 2.0 * c + vals[:, :-2, 1:-1]) / (h * h))
    out.append((vals[:, 1:-1, 2:] - 2.0 * c + vals[:, 1:-1, :-2]) / (h * h))
    out.append(
        (vals[:, 2:, 2:] + vals[:, :-2, :-2] - vals[:, 2:, :-2] - vals[:, :-2, 2:])
        / (4.0 * h * h)
    )
    return out


def smooth(g: GridFunction, spec: MollifierSpec, space_mode: str = "odd") -> SmoothResult:
    """Mollify lattice data at scale eps and measure the certificates.

    Convolves the reflected extension with the separable bump (time
    half-width eps^2, space half-width eps), crops back to the original
    lattice, and measures n1, n2 and the ungated third-order report
    eps * (sup |D^3| + sup |D dt|) / eps^(kappa - 2).
    """
    grid = g.grid
    eps, kappa = spec.eps, spec.kappa
    kt = bump_kernel(grid.dt, eps * eps)
    kx = bump_kernel(grid.h, eps)
    ext, (pad_t, pad_x) = extend_data(g, eps, space_mode=space_mode)
    sm = convolve1d(ext.values, kt, axis=0, mode="nearest")
    for ax in range(1, grid.d + 1):
        sm = convolve1d(sm, kx, axis=ax, mode="nearest")
    crop = tuple(
        [slice(pad_t, pad_t + grid.nt + 1)]
        + [slice(pad_x, pad_x + grid.nx[i]) for i in range(grid.d)]
    )
    vals = sm[crop]
    smoothed = GridFunction(grid, vals)
    sup_diff = float(np.max(np.abs(vals - g.values)))
    dtf = _interior_time_derivative(vals, grid.dt)
    sup_dt = float(np.max(np.abs(dtf))) if dtf.size else 0.0
    hessf = _hessian_entries(vals, grid.h, grid.d)
    sup_hess = max(float(np.max(np.abs(e))) for e in hessf)
    # third-order report: one more spatial difference of the measured fields
    extras = []
    for e in hessf + [dtf]:
        for ax in range(1, e.ndim):
            if e.shape[ax] > 2:
                up = [slice(None)] * e.ndim
                dn = [slice(None)] * e.ndim
                up[ax] = slice(2, None)
                dn[ax] = slice(None, -2)
                extras.append(
                    float(np.max(np.abs(e[tuple(up)] - e[tuple(dn)]) / (2.0 * grid.h)))
                )
    third = max(extras) if extras else 0.0
    scale2 = eps ** (kappa - 2.0)
    return SmoothResult(
        smoothed=smoothed,
        eps=eps,
        kappa=kappa,
        n1=sup_diff / eps ** kappa,
        n2=(sup_dt + sup_hess) / scale2,
        sup_diff=sup_diff,
        sup_dt=sup_dt,
        sup_hess=sup_hess,
        third_order=eps * third / scale2,
    )


@dataclass(frozen=True)
class BarrierReport:
    """Distance-weighted closeness of a solution to mollified data."""

    N: float
    eps: float
    kappa: float
    witness: tuple


def barrier_check(
    u: GridFunction, g_eps: GridFunction, cyl: ParabolicCylinder, spec: MollifierSpec
) -> BarrierReport:
    """Smallest N with |u - g_eps| <= N * (eps^(kappa-2) rho^(kappa/2) + eps^kappa)
    over the cylinder's lattice nodes, rho = 1 - |x - x0|^2 / R^2.

    u and g_eps must live on the same lattice.  The weight degenerates
    only on the lateral shell, where the eps^kappa floor takes over.
    """
    if u.grid is not g_eps.grid and u.grid.shape() != g_eps.grid.shape():
        raise ValueError("solution and data must share a lattice")
    grid = u.grid
    mask = cylinder_nodes(grid, cyl)
    if not mask.any():
        raise ValueError("cylinder captures no lattice nodes")
    X = grid.coords()
    rho = 1.0 - np.sum((X - cyl.x0) ** 2, axis=-1) / (cyl.R * cyl.R)
    rho = np.maximum(rho, 0.0)
    eps, kappa = spec.eps, spec.kappa
    weight = eps ** (kappa - 2.0) * rho ** (kappa / 2.0) + eps ** kappa
    diff = np.abs(u.values - g_eps.values)
    ratio = np.where(mask, diff / weight[None, ...], 0.0)
    k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    t_w = float(grid.times[k[0]])
    x_w = tuple(float(grid.axis(i)[k[1 + i]]) for i in range(grid.d))
    return BarrierReport(
        N=float(ratio[k]), eps=eps, kappa=kappa, witness=(t_w, x_w)
    )


def resample(gf: GridFunction, target: SpaceTimeGrid) -> GridFunction:
    """Linear interpolation of a lattice function onto another lattice.

    Separable linear interpolation in (t, x); target nodes a hair
    outside the source span (float slack) extrapolate linearly.
    """
    src = gf.grid
    axes = (src.times,) + tuple(src.axis(i) for i in range(src.d))
    itp = RegularGridInterpolator(
        axes, gf.values, method="linear", bounds_error=False, fill_value=None
    )
    X = target.coords()
    nt1 = target.nt + 1
    npts = int(np.prod(target.nx))
    flatX = X.reshape(-1, target.d)
    pts = np.empty((nt1 * npts, 1 + target.d))
    pts[:, 0] = np.repeat(target.times, npts)
    pts[:, 1:] = np.tile(flatX, (nt1, 1))
    vals = itp(pts).reshape((nt1,) + tuple(target.nx))
    return GridFunction(target, vals)
