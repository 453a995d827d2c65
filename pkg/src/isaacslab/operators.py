"""Uniformly elliptic operator trees, the cutoff operator, and
coefficient-oscillation quadratures.

Operators act on second-order jets at space-time points.  The pure
second-order part is a tree built from four node kinds:

* linear: <a(t, x), u''> for a constant or space-time coefficient matrix;
* band extremal: the closed-form spectral sup over a coefficient band;
* max / min of subtrees;
* sup-inf over finite index families (a max of mins).

The cutoff operator wraps any such tree together with a lower-order term
into max(H, extremal - K), which is what the time marcher integrates.
"""

from dataclasses import dataclass

import numpy as np

from .core import Jet, sym_matrix

__all__ = [
    "EllipticityBand",
    "pucci_max",
    "LinearOp",
    "PucciOp",
    "MaxOp",
    "MinOp",
    "linear_op",
    "pucci_op",
    "max_op",
    "min_op",
    "supinf_op",
    "HomogOperator",
    "FullOperator",
    "CutoffSpec",
    "default_cutoff",
    "IsaacsSpec",
    "build_isaacs",
    "game_split",
    "eval_H",
    "eval_cutoff",
    "HomogReport",
    "validate_homogeneous",
    "validate_growth",
    "ball_average",
    "theta_oscillation",
    "mu_oscillation",
    "unit_hessian_net",
]


@dataclass(frozen=True)
class EllipticityBand:
    """Closed eigenvalue band [lo, hi], 0 < lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 < self.lo <= self.hi):
            raise ValueError("band needs 0 < lo <= hi")


def pucci_max(alpha: np.ndarray, band: EllipticityBand) -> np.ndarray:
    """Extremal sup of <a, alpha> over symmetric a with eigenvalues in the
    band: hi * sum(ev+) + lo * sum(ev-).  Batched over leading axes."""
    w = np.linalg.eigvalsh(np.asarray(alpha, float))
    return band.hi * np.sum(np.maximum(w, 0.0), axis=-1) + band.lo * np.sum(
        np.minimum(w, 0.0), axis=-1
    )


def _coef_at(coef, t, X) -> np.ndarray:
    """Evaluate a coefficient (constant matrix or callable) at points X."""
    X = np.asarray(X, float)
    if callable(coef):
        return np.asarray(coef(t, X), float)
    a = np.asarray(coef, float)
    return np.broadcast_to(a, X.shape[:-1] + a.shape)


@dataclass(frozen=True)
class LinearOp:
    """<a(t, x), u''> with a constant or callable coefficient."""

    coef: object

    def eval(self, u2, t, x):
        a = _coef_at(self.coef, t, x)
        return np.sum(a * np.asarray(u2, float), axis=(-2, -1))

    def eval_at_probe(self, alpha, t, X):
        a = _coef_at(self.coef, t, X)
        return np.sum(a * np.asarray(alpha, float), axis=(-2, -1))


@dataclass(frozen=True)
class PucciOp:
    """Band extremal operator; x-independent."""

    band: EllipticityBand

    def eval(self, u2, t, x):
        return pucci_max(u2, self.band)

    def eval_at_probe(self, alpha, t, X):
        X = np.asarray(X, float)
        val = float(pucci_max(alpha, self.band))
        return np.full(X.shape[:-1], val)


@dataclass(frozen=True)
class MaxOp:
    children: tuple

    def eval(self, u2, t, x):
        return np.maximum.reduce([c.eval(u2, t, x) for c in self.children])

    def eval_at_probe(self, alpha, t, X):
        return np.maximum.reduce([c.eval_at_probe(alpha, t, X) for c in self.children])


@dataclass(frozen=True)
class MinOp:
    children: tuple

    def eval(self, u2, t, x):
        return np.minimum.reduce([c.eval(u2, t, x) for c in self.children])

    def eval_at_probe(self, alpha, t, X):
        return np.minimum.reduce([c.eval_at_probe(alpha, t, X) for c in self.children])


def linear_op(coef) -> LinearOp:
    if not callable(coef):
        coef = sym_matrix(coef)
    return LinearOp(coef=coef)


def pucci_op(lo: float, hi: float) -> PucciOp:
    return PucciOp(band=EllipticityBand(lo, hi))


def max_op(*children) -> MaxOp:
    if not children:
        raise ValueError("max node needs at least one child")
    return MaxOp(children=tuple(children))


def min_op(*children) -> MinOp:
    if not children:
        raise ValueError("min node needs at least one child")
    return MinOp(children=tuple(children))


def supinf_op(rows) -> MaxOp:
    """Sup over rows of inf within each row."""
    rows = [list(r) for r in rows]
    if not rows or any(not r for r in rows):
        raise ValueError("sup-inf needs nonempty rows")
    return MaxOp(children=tuple(MinOp(children=tuple(r)) for r in rows))


@dataclass(frozen=True)
class HomogOperator:
    """Degree-one homogeneous second-order operator with a declared
    ellipticity constant delta (gradient eigenvalues in [delta, 1/delta])."""

    root: object
    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")

    def eval(self, u2, t=0.0, x=None):
        if x is None:
            x = np.zeros(np.asarray(u2, float).shape[-1])
        return self.root.eval(u2, t, x)

    def eval_at_probe(self, alpha, t, X):
        """Values of the operator at a fixed probe matrix over points X."""
        return self.root.eval_at_probe(alpha, t, X)


# ---------------------------------------------------------------------------
# Full operators (second-order tree + lower-order term) and the cutoff.


@dataclass(frozen=True)
class FullOperator:
    """H(u, t, x) = F(u'', t, x) + G(u, u', t, x).

    G takes (value, gradient, t, x) and is bounded by K0 * |u'| + Hbar(t, x);
    omega is carried as metadata (a modulus-of-continuity descriptor, never
    consumed numerically).  grad_lipschitz, when positive, declares a
    Lipschitz constant of G in the gradient slot that the monotone marcher
    validates against its mesh.  Operators built from a game carry their
    per-index rows so marching and pointwise evaluation can use the
    sup-inf structure directly.
    """

    F: HomogOperator
    G: object = None
    K0: float = 0.0
    Hbar: object = None
    omega: str = "unspecified"
    grad_lipschitz: float = 0.0
    game: tuple = None  # rows of (coef, lower) pairs, or None
    # outer fold over game rows: "supinf" takes max of row minima,
    # "infsup" min of row maxima (rows are pre-transposed by the builder)
    game_order: str = "supinf"

    def lower_value(self, u0, grad, t, x):
        if self.G is None:
            return np.zeros(np.shape(u0))
        return np.asarray(self.G(u0, grad, t, x), float)


@dataclass(frozen=True)
class CutoffSpec:
    """Cutoff band floor delta_hat and truncation level K.

    delta_hat must sit strictly below a quarter of the operator's
    ellipticity constant; checked against each problem at solve time."""

    delta_hat: float
    K: float

    def __post_init__(self):
        if not self.delta_hat > 0:
            raise ValueError("delta_hat must be positive")
        if self.K < 0:
            raise ValueError("K must be nonnegative")

    @property
    def band(self) -> EllipticityBand:
        return EllipticityBand(self.delta_hat, 1.0 / self.delta_hat)


def default_cutoff(delta: float, K: float) -> CutoffSpec:
    """Default cutoff floor: delta / 8 (inside the required (0, delta/4))."""
    return CutoffSpec(delta_hat=delta / 8.0, K=K)


def eval_H(full: FullOperator, jet: Jet, t: float, x) -> float:
    """Pointwise H(jet, t, x); game-built operators use their rows."""
    x = np.atleast_1d(np.asarray(x, float))
    if full.game is not None:
        sup_outer = full.game_order == "supinf"
        best = -np.inf if sup_outer else np.inf
        for row in full.game:
            worst = np.inf if sup_outer else -np.inf
            for coef, lower in row:
                val = float(np.sum(_coef_at(coef, t, x) * jet.hessian))
                if lower is not None:
                    val += float(lower(jet.value, jet.gradient, t, x))
                worst = min(worst, val) if sup_outer else max(worst, val)
            best = max(best, worst) if sup_outer else min(best, worst)
        return best
    val = float(full.F.eval(jet.hessian, t, x))
    if full.G is not None:
        val += float(full.G(jet.value, jet.gradient, t, x))
    return val


def eval_cutoff(full: FullOperator, cutoff: CutoffSpec, jet: Jet, t: float, x) -> float:
    """max(H, extremal(u'') - K): the operator the marcher integrates."""
    h = eval_H(full, jet, t, x)
    p = float(pucci_max(jet.hessian, cutoff.band))
    return max(h, p - cutoff.K)


# ---------------------------------------------------------------------------
# Isaacs games.


@dataclass(frozen=True)
class IsaacsSpec:
    """Finite two-player game data.

    diffusions[i][j] is the coefficient (matrix or callable) for control
    pair (i, j); lower_order[i][j] an optional callable
    (value, gradient, t, x).  delta declares the shared ellipticity of
    all diffusion matrices.
    """

    diffusions: tuple
    delta: float
    lower_order: tuple = None
    K0: float = 0.0
    Hbar: object = None
    omega: str = "unspecified"
    grad_lipschitz: float = 0.0


def build_isaacs(spec: IsaacsSpec, order: str = "supinf") -> FullOperator:
    """Assemble the two-player operator of a finite game.

    order "supinf" gives the lower-value fold max_i min_j, "infsup" the
    upper-value fold min_j max_i over the same control grid.  F is the
    matching pure second-order fold over the diffusion family.
    """
    if order not in ("supinf", "infsup"):
        raise ValueError("order must be 'supinf' or 'infsup'")
    rows = [list(r) for r in spec.diffusions]
    if not rows or any(not r for r in rows):
        raise ValueError("game needs nonempty control sets on both sides")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("diffusion rows must be rectangular")
    low = spec.lower_order
    if low is not None:
        low = [list(r) for r in low]
        if len(low) != len(rows) or any(len(r) != width for r in low):
            raise ValueError("lower-order rows must match the diffusion shape")
    pair = lambda i, j: (rows[i][j], None if low is None else low[i][j])
    if order == "supinf":
        froot = supinf_op([[linear_op(c) for c in r] for r in rows])
        game = tuple(
            tuple(pair(i, j) for j in range(width)) for i in range(len(rows))
        )
    else:
        froot = MinOp(
            children=tuple(
                MaxOp(children=tuple(linear_op(rows[i][j]) for i in range(len(rows))))
                for j in range(width)
            )
        )
        game = tuple(
            tuple(pair(i, j) for i in range(len(rows))) for j in range(width)
        )
    F = HomogOperator(root=froot, delta=spec.delta)
    # The lower-order remainder of a game needs the full jet (it is the
    # game value minus F at the same hessian), so G stays None here and
    # game_split exposes the decomposition at any jet.
    return FullOperator(
        F=F,
        G=None,
        K0=spec.K0,
        Hbar=spec.Hbar,
        omega=spec.omega,
        grad_lipschitz=spec.grad_lipschitz,
        game=game,
        game_order=order,
    )


def game_split(full: FullOperator, jet: Jet, t: float, x):
    """(F(u''), G(u)) split of a game operator at a jet: the second-order
    sup-inf and the remainder of the full game value."""
    if full.game is None:
        raise ValueError("not a game operator")
    fval = float(full.F.eval(jet.hessian, t, np.atleast_1d(np.asarray(x, float))))
    return fval, eval_H(full, jet, t, x) - fval


# ---------------------------------------------------------------------------
# Validators.


@dataclass(frozen=True)
class HomogReport:
    max_homog_residual: float
    grad_eig_min: float
    grad_eig_max: float
    n_samples: int
    fd_step: float
    ok: bool


def _fd_gradient(opr: HomogOperator, u2: np.ndarray, t, x, step: float) -> np.ndarray:
    d = u2.shape[-1]
    g = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0
            up = float(opr.eval(u2 + step * e, t, x))
            dn = float(opr.eval(u2 - step * e, t, x))
            der = (up - dn) / (2.0 * step)
            # directional derivative along the symmetrized basis matrix is
            # 2*g_ij off the diagonal
            g[i, j] = g[j, i] = der if i == j else der / 2.0
    return g


def validate_homogeneous(
    opr: HomogOperator,
    box=None,
    t_range=(0.0, 1.0),
    n: int = 100,
    seed: int = 0,
    fd_step: float = 1e-5,
    homog_tol: float = 1e-8,
) -> HomogReport:
    """Sampled admissibility check of a homogeneous operator tree.

    Verifies degree-one positive homogeneity to homog_tol (relative) and
    that finite-difference gradients with respect to u'' have eigenvalues
    inside [delta - tol, 1/delta + tol] with tol = 10 * fd_step, at
    random jets and space-time points.
    """
    rng = np.random.default_rng(seed)
    tol = 10.0 * fd_step
    d = None
    # Probe the tree for its dimension via a 1x1 then 2x2 try is fragile;
    # require callers to pass a box, else default to d inferred from a
    # constant leaf.  Simplest robust route: accept box=None as d=1.
    if box is None:
        d = 1
        lo = np.array([-1.0])
        hi = np.array([1.0])
    else:
        lo = np.asarray(box.lo, float)
        hi = np.asarray(box.hi, float)
        d = lo.shape[0]
    worst_h = 0.0
    ev_min = np.inf
    ev_max = -np.inf
    for _ in range(n):
        a = rng.normal(size=(d, d))
        u2 = sym_matrix(a + a.T)
        t = rng.uniform(*t_range)
        x = rng.uniform(lo, hi)
        s = rng.uniform(0.1, 10.0)
        base = float(opr.eval(u2, t, x))
        scaled = float(opr.eval(s * u2, t, x))
        worst_h = max(worst_h, abs(scaled - s * base) / (1.0 + abs(s * base)))
        g = _fd_gradient(opr, u2, t, x, fd_step)
        w = np.linalg.eigvalsh(g)
        ev_min = min(ev_min, float(w[0]))
        ev_max = max(ev_max, float(w[-1]))
    ok = (
        worst_h <= homog_tol
        and ev_min >= opr.delta - tol
        and ev_max <= 1.0 / opr.delta + tol
    )
    return HomogReport(
        max_homog_residual=worst_h,
        grad_eig_min=ev_min,
        grad_eig_max=ev_max,
        n_samples=n,
        fd_step=fd_step,
        ok=ok,
    )


def validate_growth(full: FullOperator, box, t_range=(0.0, 1.0), n: int = 200, seed: int = 1) -> bool:
    """Sampled check of |G| <= K0 * |u'| + Hbar(t, x)."""
    if full.G is None or full.game is not None:
        return True
    rng = np.random.default_rng(seed)
    lo = np.asarray(box.lo, float)
    hi = np.asarray(box.hi, float)
    d = lo.shape[0]
    for _ in range(n):
        u0 = rng.normal() * 2.0
        grad = rng.normal(size=d) * 3.0
        t = rng.uniform(*t_range)
        x = rng.uniform(lo, hi)
        g = abs(float(full.G(u0, grad, t, x)))
        envelope = full.K0 * float(np.linalg.norm(grad))
        if full.Hbar is not None:
            envelope += abs(float(full.Hbar(t, x)))
        if g > envelope + 1e-9 * (1.0 + envelope):
            return False
    return True


# ---------------------------------------------------------------------------
# Ball averages and oscillation quadratures.


def _ball_mesh(x0, R: float, n_per_axis: int):
    x0 = np.atleast_1d(np.asarray(x0, float))
    d = x0.shape[0]
    w = 2.0 * R / n_per_axis
    axes = [x0[i] - R + w * (np.arange(n_per_axis) + 0.5) for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, d)
    keep = np.sum((pts - x0) ** 2, axis=1) <= R * R * (1 + 1e-12)
    return pts[keep]


def ball_average(opr: HomogOperator, alpha, s: float, x0, R: float, n_per_axis: int = 16) -> float:
    """Midpoint-rule average of the operator at a fixed probe over the
    ball B_R(x0) at time s.  Exact for x-independent operators."""
    pts = _ball_mesh(x0, R, n_per_axis)
    vals = np.asarray(opr.eval_at_probe(sym_matrix(alpha), s, pts), float)
    return float(np.mean(vals))


def _osc_fields(opr, cyl, net, n_time, n_space):
    """|F(alpha, s, y) - avg_y F(alpha, s, .)| sampled on the quadrature,
    one row per net matrix: shape (n_net, n_time, n_pts)."""
    pts = _ball_mesh(cyl.x0, cyl.R, n_space)
    dt_cell = (cyl.t1 - cyl.t0) / n_time
    t_mids = cyl.t0 + dt_cell * (np.arange(n_time) + 0.5)
    rows = []
    for alpha in net:
        per_t = []
        for s in t_mids:
            vals = np.asarray(opr.eval_at_probe(alpha, s, pts), float)
            per_t.append(np.abs(vals - np.mean(vals)))
        rows.append(per_t)
    return np.asarray(rows)


def theta_oscillation(opr: HomogOperator, cyl, net, n_time: int = 8, n_space: int = 16) -> float:
    """Largest per-probe mean oscillation of the operator's spatial
    dependence over a cylinder: max over unit probes of the cylinder
    average of |F(alpha, s, y) - (ball mean at s)|.

    Vanishes identically for x-independent operators.
    """
    dev = _osc_fields(opr, cyl, net, n_time, n_space)
    return float(np.max(np.mean(dev, axis=(1, 2))))


def mu_oscillation(opr: HomogOperator, cyl, net, n_time: int = 8, n_space: int = 16) -> float:
    """Cylinder average of the worst-probe normalized oscillation: the
    pointwise sup over the unit-probe net moves inside the average, so
    the result always dominates theta_oscillation on the same net."""
    dev = _osc_fields(opr, cyl, net, n_time, n_space)
    return float(np.mean(np.max(dev, axis=0)))


def unit_hessian_net(d: int, n: int = 32, seed: int = 20260822) -> np.ndarray:
    """Deterministic net of unit-Frobenius-norm symmetric probes.

    d = 1 returns {+1, -1}; d >= 2 returns n seeded random directions,
    fixed across runs so reports are reproducible.
    """
    if d == 1:
        return np.array([[[1.0]], [[-1.0]]])
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(n):
        a = rng.normal(size=(d, d))
        m = (a + a.T) / 2.0
        mats.append(m / np.sqrt(np.sum(m * m)))
    return np.asarray(mats)
