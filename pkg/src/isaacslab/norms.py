"""Parabolic Holder seminorms, oscillations, affine fits, and the
scale-invariant forcing norm, all measured on lattice functions.

Exponent conventions (kappa is the parabolic Holder order):

* kappa in (0, 1]: single quotient |v(t,x) - v(s,y)| over
  |t - s|^(kappa/2) + |x - y|^kappa;
* kappa in (1, 2]: a pure-time quotient at fixed x with power kappa/2
  plus a spatial quotient of the discrete gradient with power kappa - 1.

Measurements are exact maxima over node pairs for regions up to 10^4
nodes; larger regions switch to a recorded subsampling policy (all
pairs within a fixed index-offset window plus seeded random pairs).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve as nd_convolve
from scipy.optimize import linprog

from .core import GridFunction, ParabolicCylinder, cylinder_nodes, gradient_field

__all__ = [
    "HolderReport",
    "AffineFit",
    "holder_low",
    "holder_high",
    "oscillation",
    "f_kappa_norm",
    "best_affine",
    "affine_decay_seminorm",
    "interpolation_check",
]

EXACT_PAIR_LIMIT = 10_000
WINDOW_OFFSET = 64
N_RANDOM_PAIRS = 100_000
PAIR_SEED = 20260822


@dataclass(frozen=True)
class HolderReport:
    """One seminorm measurement: value, witnesses, and sampling policy."""

    kappa: float
    value: float
    arg_pair: tuple
    n_nodes: int
    policy: str
    time_part: float = None
    grad_part: float = None


def _region_nodes(v: GridFunction, region):
    """Times, coordinates and values of the nodes in a region.

    region is a ParabolicCylinder, a boolean mask over the grid shape,
    or None for the whole lattice.
    """
    grid = v.grid
    if region is None:
        mask = np.ones(grid.shape(), dtype=bool)
    elif isinstance(region, ParabolicCylinder):
        mask = cylinder_nodes(grid, region)
    else:
        mask = np.asarray(region, dtype=bool)
        if mask.shape != grid.shape():
            raise ValueError("region mask shape mismatch")
    if not mask.any():
        raise ValueError("region contains no lattice nodes")
    idx = np.argwhere(mask)
    times = grid.times[idx[:, 0]]
    X = grid.coords()
    coords = X[tuple(idx[:, 1 + i] for i in range(grid.d))]
    vals = v.values[mask]
    return mask, idx, times, coords, vals


def _max_ratio(times, coords, vals, kappa, pairs_i, pairs_j):
    dt = np.abs(times[pairs_i] - times[pairs_j]) ** (kappa / 2.0)
    dx = np.linalg.norm(coords[pairs_i] - coords[pairs_j], axis=-1) ** kappa
    den = dt + dx
    num = np.abs(vals[pairs_i] - vals[pairs_j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    k = int(np.argmax(ratio))
    return float(ratio[k]), int(pairs_i[k]), int(pairs_j[k])


def _pair_batches(n: int):
    """Index pair batches per the sampling policy; yields (i, j) arrays."""
    if n <= EXACT_PAIR_LIMIT:
        chunk = max(1, 2_000_000 // max(n, 1))
        for start in range(0, n, chunk):
            rows = np.arange(start, min(start + chunk, n))
            i, j = np.meshgrid(rows, np.arange(n), indexing="ij")
            keep = i < j
            yield i[keep], j[keep]
        return
    # window pairs: offsets 1..WINDOW_OFFSET in flattened node order
    for off in range(1, WINDOW_OFFSET + 1):
        i = np.arange(0, n - off)
        yield i, i + off
    rng = np.random.default_rng(PAIR_SEED)
    i = rng.integers(0, n, size=N_RANDOM_PAIRS)
    j = rng.integers(0, n, size=N_RANDOM_PAIRS)
    keep = i != j
    yield i[keep], j[keep]


def holder_low(v: GridFunction, kappa: float, region=None) -> HolderReport:
    """Parabolic Holder seminorm for kappa in (0, 1] over a region.

    Exact over all node pairs up to 10^4 nodes; beyond that, all pairs
    within a fixed index-offset window plus 10^5 seeded random pairs
    (the policy string in the report says which ran).
    """
    if not (0.0 < kappa <= 1.0):
        raise ValueError("holder_low needs kappa in (0, 1]")
    _, idx, times, coords, vals = _region_nodes(v, region)
    n = len(vals)
    best = 0.0
    arg = (0, 0)
    for pi, pj in _pair_batches(n):
        val, i, j = _max_ratio(times, coords, vals, kappa, pi, pj)
        if val > best:
            best, arg = val, (i, j)
    policy = "exact" if n <= EXACT_PAIR_LIMIT else (
        f"window{WINDOW_OFFSET}+random{N_RANDOM_PAIRS}@seed{PAIR_SEED}"
    )
    wit = (
        (float(times[arg[0]]), tuple(coords[arg[0]])),
        (float(times[arg[1]]), tuple(coords[arg[1]])),
    )
    return HolderReport(kappa=kappa, value=best, arg_pair=wit, n_nodes=n, policy=policy)


def holder_high(v: GridFunction, kappa: float, region=None) -> HolderReport:
    """Parabolic Holder seminorm for kappa in (1, 2].

    Sum of the pure-time quotient sup |v(t,x)-v(s,x)| / |t-s|^(kappa/2)
    over region times at shared x, and the gradient quotient
    sup |Dv(t,x)-Dv(t,y)| / |x-y|^(kappa-1) at shared t.  The gradient
    uses the marcher's stencil: central differences inside, one-sided on
    grid faces.
    """
    if not (1.0 < kappa <= 2.0):
        raise ValueError("holder_high needs kappa in (1, 2]")
    grid = v.grid
    mask, idx, times, coords, vals = _region_nodes(v, region)
    n_nodes = len(vals)
    # Pure-time part: group nodes by spatial index.
    tpow = kappa / 2.0
    t_all = grid.times
    best_t = 0.0
    space_ids = np.ravel_multi_index(
        tuple(idx[:, 1 + i] for i in range(grid.d)), grid.nx
    )
    order = np.argsort(space_ids, kind="stable")
    sorted_ids = space_ids[order]
    boundaries = np.flatnonzero(np.diff(sorted_ids)) + 1
    groups = np.split(order, boundaries)
    for g in groups:
        if len(g) < 2:
            continue
        ts = times[g]
        vv = vals[g]
        dt = np.abs(ts[:, None] - ts[None, :]) ** tpow
        num = np.abs(vv[:, None] - vv[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dt > 0.0, num / np.where(dt > 0.0, dt, 1.0), 0.0)
        best_t = max(best_t, float(np.max(ratio)))
    # Gradient part: per stored slice, pairs among region nodes.
    gpow = kappa - 1.0
    best_g = 0.0
    X = grid.coords()
    for it in range(grid.nt + 1):
        m = mask[it]
        if m.sum() < 2:
            continue
        gf = gradient_field(v.values[it], grid.h)
        gsel = gf[m]
        xsel = X[m]
        k = len(gsel)
        if k > 3000:
            rng = np.random.default_rng(PAIR_SEED + it)
            ii = rng.integers(0, k, size=50_000)
            jj = rng.integers(0, k, size=50_000)
            keep = ii != jj
            ii, jj = ii[keep], jj[keep]
        else:
            ii, jj = np.triu_indices(k, 1)
        dnum = np.linalg.norm(gsel[ii] - gsel[jj], axis=-1)
        dden = np.linalg.norm(xsel[ii] - xsel[jj], axis=-1) ** gpow
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dden > 0.0, dnum / np.where(dden > 0.0, dden, 1.0), 0.0)
        if len(ratio):
            best_g = max(best_g, float(np.max(ratio)))
    policy = "exact" if n_nodes <= EXACT_PAIR_LIMIT else "per-slice subsample"
    return HolderReport(
        kappa=kappa,
        value=best_t + best_g,
        arg_pair=None,
        n_nodes=n_nodes,
        policy=policy,
        time_part=best_t,
        grad_part=best_g,
    )


def oscillation(v: GridFunction, region=None) -> float:
    """max - min over the region's nodes."""
    _, _, _, _, vals = _region_nodes(v, region)
    return float(np.max(vals) - np.min(vals))


def _disc_kernel(m: int):
    ii, jj = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1), indexing="ij")
    return (ii * ii + jj * jj <= m * m * (1 + 1e-12)).astype(float)


def f_kappa_norm(f: GridFunction, kappa: float, R0: float) -> float:
    """Scale-weighted forcing norm on the lattice.

    sup over dyadic R in {R0, R0/2, ...} down to 4h and over all lattice
    vertices of
        R^(2 - kappa) * (cylinder average of |f|^(d+1))^(1/(d+1)),
    cylinders clipped to the lattice cover.  Constant |f| = c returns
    c * R0^(2 - kappa) exactly.
    """
    grid = f.grid
    d = grid.d
    p = d + 1
    power = np.abs(f.values) ** p
    # prefix sums over time for the upward window [t, t + R^2]
    csum = np.cumsum(power, axis=0)
    csum = np.concatenate([np.zeros((1,) + power.shape[1:]), csum], axis=0)
    best = 0.0
    R = R0
    while R >= 4.0 * grid.h * (1.0 - 1e-12):
        m = int(np.floor(R / grid.h * (1 + 1e-12)))
        mt = int(np.floor(R * R / grid.dt * (1 + 1e-12)))
        # spatial window sums per slice
        if d == 1:
            k = np.ones(2 * m + 1)
            cnt1 = np.convolve(np.ones(grid.nx[0]), k, mode="same")
            sp_sum = np.apply_along_axis(
                lambda row: np.convolve(row, k, mode="same"), 1, power
            )
            sp_cnt = np.broadcast_to(cnt1, power.shape)
        else:
            k2 = _disc_kernel(m)
            sp_sum = np.empty_like(power)
            for it in range(power.shape[0]):
                sp_sum[it] = nd_convolve(power[it], k2, mode="constant", cval=0.0)
            cnt1 = nd_convolve(np.ones(grid.nx), k2, mode="constant", cval=0.0)
            sp_cnt = np.broadcast_to(cnt1, power.shape)
        # time window via prefix sums of the spatially-summed fields
        tsum = np.cumsum(sp_sum, axis=0)
        tsum = np.concatenate([np.zeros((1,) + sp_sum.shape[1:]), tsum], axis=0)
        tcnt = np.cumsum(sp_cnt, axis=0)
        tcnt = np.concatenate([np.zeros((1,) + sp_cnt.shape[1:]), tcnt], axis=0)
        nt1 = power.shape[0]
        for j0 in range(nt1):
            j1 = min(j0 + mt, nt1 - 1)
            s = tsum[j1 + 1] - tsum[j0]
            c = tcnt[j1 + 1] - tcnt[j0]
            avg = s / c
            best = max(best, R ** (2.0 - kappa) * float(np.max(avg)) ** (1.0 / p))
        R /= 2.0
    return best


@dataclass(frozen=True)
class AffineFit:
    """Best uniform affine-in-x fit over a region's nodes."""

    offset: float
    slope: np.ndarray
    error: float
    vertex_jet_error: float = None
    n_nodes: int = 0


def best_affine(v: GridFunction, region=None, vertex=None) -> AffineFit:
    """Chebyshev (minimax) affine-in-x fit over the region's nodes.

    Solves the linear program minimizing sup |v - c - <b, x>|; the fit
    ignores t, matching the role of spatial affine profiles in decay
    measurements.  When the region is a cylinder (or a vertex is given)
    the error of the first-order jet at the nearest vertex node is also
    reported; the optimum never exceeds it.
    """
    grid = v.grid
    _, idx, times, coords, vals = _region_nodes(v, region)
    n = len(vals)
    d = grid.d
    centered = coords - coords.mean(axis=0)
    if n < d + 1 or np.linalg.matrix_rank(centered, tol=1e-12) < d:
        raise ValueError("region is affinely degenerate for an affine fit")
    # variables: (c, b_1..b_d, e); minimize e
    A = np.zeros((2 * n, d + 2))
    rhs = np.zeros(2 * n)
    A[:n, 0] = 1.0
    A[:n, 1 : 1 + d] = coords
    A[:n, -1] = -1.0
    rhs[:n] = vals
    A[n:, 0] = -1.0
    A[n:, 1 : 1 + d] = -coords
    A[n:, -1] = -1.0
    rhs[n:] = -vals
    cost = np.zeros(d + 2)
    cost[-1] = 1.0
    bounds = [(None, None)] * (d + 1) + [(0.0, None)]
    res = linprog(cost, A_ub=A, b_ub=rhs, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"affine fit LP failed: {res.message}")
    offset = float(res.x[0])
    slope = np.asarray(res.x[1 : 1 + d])
    error = float(res.x[-1])
    vertex_err = None
    if vertex is None and isinstance(region, ParabolicCylinder):
        vertex = (region.t0, region.x0)
    if vertex is not None:
        t0v, x0v = vertex
        x0v = np.atleast_1d(np.asarray(x0v, float))
        it = int(np.clip(round((t0v - grid.t0) / grid.dt), 0, grid.nt))
        ix = tuple(
            int(np.clip(round((x0v[i] - grid.box.lo[i]) / grid.h), 0, grid.nx[i] - 1))
            for i in range(d)
        )
        node = (it, *ix)
        g0 = gradient_field(v.values[it], grid.h)[ix]
        xnode = np.array([grid.axis(i)[ix[i]] for i in range(d)])
        jet_vals = v.values[node] + (coords - xnode) @ g0
        vertex_err = float(np.max(np.abs(vals - jet_vals)))
    return AffineFit(
        offset=offset, slope=slope, error=error, vertex_jet_error=vertex_err, n_nodes=n
    )


def affine_decay_seminorm(v: GridFunction, vertex, radii, kappa: float) -> float:
    """max over the radii ladder of best-affine error on the vertex
    cylinder divided by r^kappa.  A uniform bound N0 on the ladder
    certifies a kappa-Holder seminorm bound up to a fixed factor."""
    t0, x0 = vertex
    worst = 0.0
    for r in radii:
        cyl = ParabolicCylinder(t0=t0, x0=np.atleast_1d(np.asarray(x0, float)), R=r)
        fit = best_affine(v, region=cyl)
        worst = max(worst, fit.error / r ** kappa)
    return worst


def interpolation_check(v: GridFunction, r1: float, r2: float, gamma: float, eps: float):
    """Gradient interpolation inequality on concentric balls, 5% slack.

    Per time slice, checks

        sup_{|x-c| <= r1} |Dv|_inf
            <= eps^gamma (r2-r1)^gamma [Dv]_gamma(outer)
             + eps^-1 (r2-r1)^-1 osc(v, outer)

    where outer is the r2-ball about the domain center, the gradient
    seminorm uses euclidean gradient distances, and the slack multiplies
    the right side by 1.05.  Returns (ok, margin) with margin the worst
    value of 1.05 * rhs - lhs over slices.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    if not (0.0 < r1 < r2):
        raise ValueError("need 0 < r1 < r2")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    grid = v.grid
    X = grid.coords()
    center = (grid.box.lo + grid.box.hi) / 2.0
    rr = np.linalg.norm(X - center, axis=-1)
    inner = rr <= r1 * (1 + 1e-12)
    outer = rr <= r2 * (1 + 1e-12)
    if not inner.any() or outer.sum() < 2:
        raise ValueError("balls capture too few nodes at this resolution")
    margin = np.inf
    ok = True
    L = eps * (r2 - r1)
    for it in range(grid.nt + 1):
        sl = v.values[it]
        gf = gradient_field(sl, grid.h)
        lhs = float(np.max(np.abs(gf[inner])))
        go = gf[outer]
        xo = X[outer]
        ii, jj = np.triu_indices(len(go), 1)
        dnum = np.linalg.norm(go[ii] - go[jj], axis=-1)
        dden = np.linalg.norm(xo[ii] - xo[jj], axis=-1) ** gamma
        semi = float(np.max(dnum / dden))
        osc = float(sl[outer].max() - sl[outer].min())
        rhs = L ** gamma * semi + osc / L
        m = 1.05 * rhs - lhs
        margin = min(margin, m)
        if m < 0:
            ok = False
    return ok, float(margin)
