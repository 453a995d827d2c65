"""Sup-inf affine representation of uniformly elliptic homogeneous operators.

A degree-one positively homogeneous operator H acting on symmetric
matrices, squeezed between the lower support envelope of a base slope
class and the support function of a strictly larger convex slope set,
can be written exactly as

    H(u) = sup_alpha inf_beta [ offset(alpha, beta) + <slope(alpha, beta), u> ]

where each (offset, slope) pair is a convex mix of the probe slope beta
and the majorant's gradient at alpha, mixed by a weight in [0, 1] that
measures how far H sits below the majorant at alpha.  This module builds
those pairs, evaluates the representation on finite index nets, measures
its stability under perturbations of H, and assembles the induced
coefficient fields for operators with space-time dependence.

Matrices are plain (d, d) ndarrays; every function broadcasts over
leading axes of the alpha argument.
"""

from dataclasses import dataclass

import numpy as np

from .core import frobenius_norm, spectral_decompose, sym_matrix

__all__ = [
    "Envelope",
    "AffinePair",
    "ReprPair",
    "StabilityReport",
    "frob_inner",
    "majorant",
    "majorant_grad",
    "base_sup",
    "base_inf",
    "margin",
    "check_admissible",
    "mixing_weight",
    "repr_pair",
    "supinf_eval",
    "stability_gap",
    "sample_base_slopes",
    "CoefficientField",
    "coeff_field",
    "coeff_distance",
]


def frob_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius inner product, batched over leading axes."""
    return np.sum(np.asarray(a, float) * np.asarray(b, float), axis=(-2, -1))


@dataclass(frozen=True)
class Envelope:
    """Ellipticity data for the representation.

    delta fixes the base slope class (symmetric matrices with eigenvalues
    in [delta, 1/delta]); the enlarged slope set doubles the band to
    [delta/2, 2/delta], whose support function is the majorant below.
    """

    delta: float
    d: int

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        if self.d not in (1, 2, 3):
            raise ValueError("matrix dimension must be 1, 2, or 3")

    @property
    def band_lo(self) -> float:
        return self.delta / 2.0

    @property
    def band_hi(self) -> float:
        return 2.0 / self.delta


@dataclass(frozen=True)
class AffinePair:
    """Affine function u -> offset + <slope, u> on symmetric matrices."""

    offset: float
    slope: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slope", sym_matrix(self.slope))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.offset + frob_inner(self.slope, u)


def _pucci(a: np.ndarray, lo: float, hi: float) -> np.ndarray:
    w = np.linalg.eigvalsh(np.asarray(a, float))
    return hi * np.sum(np.maximum(w, 0.0), axis=-1) + lo * np.sum(
        np.minimum(w, 0.0), axis=-1
    )


def majorant(env: Envelope, alpha: np.ndarray) -> np.ndarray:
    """Support function of the enlarged slope set: the widened-band
    extremal operator hi*sum(ev+) + lo*sum(ev-)."""
    return _pucci(alpha, env.band_lo, env.band_hi)


def majorant_grad(env: Envelope, alpha: np.ndarray) -> np.ndarray:
    """Gradient of the majorant: same eigenvectors as alpha, eigenvalue i
    mapped to band_hi when positive or zero, band_lo when negative.

    Zero eigenvalues break toward band_hi so the choice is deterministic.
    Satisfies the degree-one Euler identity <alpha, grad> = majorant(alpha).
    """
    spec = spectral_decompose(alpha)
    c = np.where(spec.eigenvalues >= 0.0, env.band_hi, env.band_lo)
    q = spec.eigenvectors
    return np.einsum("...ik,...k,...jk->...ij", q, c, q)


def base_sup(env: Envelope, alpha: np.ndarray) -> np.ndarray:
    """Support function of the base slope class (band [delta, 1/delta])."""
    return _pucci(alpha, env.delta, 1.0 / env.delta)


def base_inf(env: Envelope, alpha: np.ndarray) -> np.ndarray:
    """Lower support envelope of the base slope class."""
    return -_pucci(-np.asarray(alpha, float), env.delta, 1.0 / env.delta)


def margin(env: Envelope, alpha: np.ndarray) -> np.ndarray:
    """Gap between the majorant and the base support function.

    Strictly positive away from zero: margin >= (delta/2) * |alpha|_F.
    """
    return majorant(env, alpha) - base_sup(env, alpha)


def check_admissible(env: Envelope, H, samples: np.ndarray, tol: float = 1e-8):
    """Raise unless base_inf <= H <= majorant on the sampled matrices."""
    vals = np.asarray(H(samples), float)
    up = majorant(env, samples)
    dn = base_inf(env, samples)
    scale = 1.0 + np.abs(up)
    if np.any(vals > up + tol * scale):
        raise ValueError("operator exceeds the majorant; not representable")
    if np.any(vals < dn - tol * scale):
        raise ValueError("operator falls below the base envelope; not representable")


def mixing_weight(env: Envelope, H, alpha: np.ndarray, beta: AffinePair) -> np.ndarray:
    """Convex mixing weight for index (alpha, beta).

    weight = min(1, (majorant(alpha) - H(alpha)) / (majorant(alpha) - beta(alpha)))
    with the 0/0 state (alpha = 0) defined as 1.  Requires H <= majorant.
    """
    alpha = np.asarray(alpha, float)
    up = majorant(env, alpha)
    hval = np.asarray(H(alpha), float)
    if np.any(hval > up + 1e-9 * (1.0 + np.abs(up))):
        raise ValueError("operator exceeds the majorant at a probe matrix")
    denom = up - beta(alpha)
    num = up - hval
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0.0, num / np.where(denom > 0.0, denom, 1.0), 1.0)
    return np.minimum(1.0, ratio)


@dataclass(frozen=True)
class ReprPair:
    """One representation pair: weight, affine offset, affine slope.

    Fields broadcast with the alpha batch they were built from.
    """

    weight: np.ndarray
    offset: np.ndarray
    slope: np.ndarray

    def value(self, u: np.ndarray) -> np.ndarray:
        return self.offset + frob_inner(self.slope, u)


def repr_pair(env: Envelope, H, alpha: np.ndarray, beta: AffinePair) -> ReprPair:
    """Build the affine pair for index (alpha, beta).

    offset = w * beta.offset + (1 - w) * (majorant(alpha) - <alpha, grad>)
    slope  = w * beta.slope  + (1 - w) * grad

    The pair stays inside the enlarged slope set, its affine value at
    alpha itself dominates H(alpha), with equality whenever w < 1, and it
    is untouched (w = 1) whenever beta(alpha) >= H(alpha).
    """
    alpha = np.asarray(alpha, float)
    w = mixing_weight(env, H, alpha, beta)
    grad = majorant_grad(env, alpha)
    euler_defect = majorant(env, alpha) - frob_inner(alpha, grad)
    offset = w * beta.offset + (1.0 - w) * euler_defect
    wb = w[..., None, None]
    slope = wb * beta.slope + (1.0 - wb) * grad
    return ReprPair(weight=w, offset=offset, slope=slope)


def supinf_eval(env: Envelope, H, u: np.ndarray, alpha_net: np.ndarray, betas) -> float:
    """Evaluate the sup-inf representation of H at u over finite nets.

    The probe net must contain u itself (it is appended when missing, so
    the sup term at alpha = u is always available); the result then
    dominates H(u) for any finite beta net, attains it as the beta net
    refines, and reproduces it exactly when H is a finite max of affine
    maps whose slopes all appear among the betas.
    """
    u = sym_matrix(u)
    alphas = np.asarray(alpha_net, float)
    if alphas.ndim != 3:
        raise ValueError("alpha_net must have shape (n, d, d)")
    if not np.any(np.all(np.abs(alphas - u) <= 1e-12, axis=(1, 2))):
        alphas = np.concatenate([alphas, u[None]], axis=0)
    inf_vals = None
    for beta in betas:
        pair = repr_pair(env, H, alphas, beta)
        vals = pair.value(u)
        inf_vals = vals if inf_vals is None else np.minimum(inf_vals, vals)
    if inf_vals is None:
        raise ValueError("beta net must be nonempty")
    return float(np.max(inf_vals))


@dataclass(frozen=True)
class StabilityReport:
    """Measured pair distance between two operators at one index, with
    the guaranteed a-priori bounds."""

    offset_gap: float
    slope_gap: float
    offset_bound: float
    slope_bound: float
    weight_gap: float


def stability_gap(env: Envelope, H, F, alpha: np.ndarray, beta: AffinePair) -> StabilityReport:
    """Compare the (alpha, beta) pairs of two admissible operators.

    The gaps obey

        offset_gap <= |H(a) - F(a)| / margin(a) * |beta.offset + <a, grad> - majorant(a)|
        slope_gap  <= |H(a) - F(a)| / margin(a) * |beta.slope - grad|_F

    with 0/0 read as 0 (margin vanishes only at a = 0 where both
    operators vanish).  Both gaps factor exactly through the weight
    difference, which the report also carries.
    """
    alpha = sym_matrix(alpha)
    ph = repr_pair(env, H, alpha, beta)
    pf = repr_pair(env, F, alpha, beta)
    offset_gap = float(np.abs(ph.offset - pf.offset))
    slope_gap = float(frobenius_norm(ph.slope - pf.slope))
    gap = float(np.abs(np.asarray(H(alpha), float) - np.asarray(F(alpha), float)))
    m = float(margin(env, alpha))
    factor = 0.0 if gap == 0.0 else gap / m
    grad = majorant_grad(env, alpha)
    offset_lever = float(
        np.abs(beta.offset + frob_inner(alpha, grad) - majorant(env, alpha))
    )
    slope_lever = float(frobenius_norm(beta.slope - grad))
    return StabilityReport(
        offset_gap=offset_gap,
        slope_gap=slope_gap,
        offset_bound=factor * offset_lever,
        slope_bound=factor * slope_lever,
        weight_gap=float(np.abs(ph.weight - pf.weight)),
    )


def sample_base_slopes(env: Envelope, rng: np.random.Generator, n: int) -> np.ndarray:
    """Random matrices in the base slope class: uniform eigenvalues in
    [delta, 1/delta] conjugated by Haar-ish rotations."""
    d = env.d
    lam = rng.uniform(env.delta, 1.0 / env.delta, size=(n, d))
    if d == 1:
        return lam[:, :, None]
    g = rng.normal(size=(n, d, d))
    q, _ = np.linalg.qr(g)
    return np.einsum("nik,nk,njk->nij", q, lam, q)


# ---------------------------------------------------------------------------
# Coefficient fields induced by the representation.


@dataclass(frozen=True)
class CoefficientField:
    """Diffusion coefficients and forcing offsets induced by the sup-inf
    representation of a space-time dependent operator, augmented with the
    cutoff operator's own coefficient net.

    Index layout: primary probes (unit Frobenius norm) come first, then
    the cutoff-band matrices; for the latter the diffusion is the net
    matrix itself and the forcing offset is -K.
    """

    env: Envelope
    alpha_primary: np.ndarray   # (n1, d, d), unit Frobenius norm
    alpha_cutoff: np.ndarray    # (n2, d, d), eigenvalues inside the cutoff band
    betas: tuple                # AffinePair probes with slopes in the base class
    K: float
    F_eval: object              # callable (alpha, t, X) -> values over X

    @property
    def n_primary(self) -> int:
        return self.alpha_primary.shape[0]

    @property
    def n_total(self) -> int:
        return self.n_primary + self.alpha_cutoff.shape[0]

    def forcing(self, i: int) -> float:
        """Constant forcing offset of row i: 0 on primary rows, -K on
        cutoff rows."""
        return 0.0 if i < self.n_primary else -self.K

    def diffusion(self, i: int, j: int, t, X) -> np.ndarray:
        """Diffusion matrices a(t, x) for index (i, j) at spatial points X
        (shape (..., d)); returns shape (..., d, d).

        Primary rows mix the probe slope with the majorant gradient by
        the local weight; cutoff rows are constant in (t, x) and ignore j.
        """
        X = np.asarray(X, float)
        lead = X.shape[:-1]
        if i >= self.n_primary:
            a = self.alpha_cutoff[i - self.n_primary]
            return np.broadcast_to(a, lead + a.shape).copy()
        alpha = self.alpha_primary[i]
        beta = self.betas[j]
        up = float(majorant(self.env, alpha))
        denom = up - float(beta(alpha))
        fvals = np.asarray(self.F_eval(alpha, t, X), float)
        if denom <= 0.0:
            w = np.ones(lead)
        else:
            w = np.minimum(1.0, (up - fvals) / denom)
        grad = majorant_grad(self.env, alpha)
        wb = w[..., None, None]
        return wb * beta.slope + (1.0 - wb) * grad


def coeff_field(
    env: Envelope,
    F_eval,
    alpha_primary: np.ndarray,
    betas,
    cutoff_band: tuple,
    alpha_cutoff: np.ndarray,
    K: float,
) -> CoefficientField:
    """Assemble the coefficient field for a space-time operator.

    Parameters
    ----------
    F_eval : callable (alpha, t, X) -> values
        Pointwise operator evaluation at a fixed probe matrix over
        spatial points; must stay below the majorant (checked on the
        probe net at sampled points by the caller's validator).
    alpha_primary : (n1, d, d)
        Probe matrices, normalized here to unit Frobenius norm.
    cutoff_band : (lo, hi)
        Eigenvalue band of the cutoff operator; every row of
        alpha_cutoff must have eigenvalues inside it.
    """
    alphas = np.asarray(alpha_primary, float)
    norms = frobenius_norm(alphas)
    if np.any(norms <= 0):
        raise ValueError("primary probes must be nonzero")
    alphas = alphas / norms[:, None, None]
    cut = np.asarray(alpha_cutoff, float)
    lo, hi = cutoff_band
    if cut.size:
        ev = np.linalg.eigvalsh(cut)
        if np.any(ev < lo - 1e-10) or np.any(ev > hi + 1e-10):
            raise ValueError("cutoff net matrix outside the cutoff band")
    for b in betas:
        ev = np.linalg.eigvalsh(b.slope)
        if np.any(ev < env.delta - 1e-10) or np.any(ev > 1.0 / env.delta + 1e-10):
            raise ValueError("probe slope outside the base class")
    return CoefficientField(
        env=env,
        alpha_primary=alphas,
        alpha_cutoff=cut,
        betas=tuple(betas),
        K=float(K),
        F_eval=F_eval,
    )


def _ball_midpoints(x0: np.ndarray, R: float, n_per_axis: int):
    """Midpoint cells of the bounding box, masked to the ball; returns
    (points (m, d), cell volume)."""
    x0 = np.atleast_1d(np.asarray(x0, float))
    d = x0.shape[0]
    w = 2.0 * R / n_per_axis
    centers_1d = [x0[i] - R + w * (np.arange(n_per_axis) + 0.5) for i in range(d)]
    mesh = np.meshgrid(*centers_1d, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, d)
    keep = np.sum((pts - x0) ** 2, axis=1) <= R * R * (1 + 1e-12)
    return pts[keep], w ** d


def coeff_distance(
    field_a: CoefficientField,
    field_b: CoefficientField,
    cylinder,
    n_time: int = 8,
    n_space: int = 16,
) -> float:
    """Integrated worst-index coefficient distance over a cylinder.

    Midpoint quadrature in time and space of

        sup_{i,j} ( |forcing_a(i) - forcing_b(i)| + |a_ij(t,x) - b_ij(t,x)|_F )

    Both fields must share index nets; the result is the integral (not
    the average) over the sampled cylinder.
    """
    if (
        field_a.n_total != field_b.n_total
        or field_a.alpha_primary.shape != field_b.alpha_primary.shape
        or len(field_a.betas) != len(field_b.betas)
    ):
        raise ValueError("coefficient fields must share index nets")
    pts, cell_vol = _ball_midpoints(cylinder.x0, cylinder.R, n_space)
    dt_cell = (cylinder.t1 - cylinder.t0) / n_time
    t_mids = cylinder.t0 + dt_cell * (np.arange(n_time) + 0.5)
    total = 0.0
    for t in t_mids:
        worst = np.zeros(len(pts))
        for i in range(field_a.n_total):
            df = abs(field_a.forcing(i) - field_b.forcing(i))
            if i >= field_a.n_primary:
                da = field_a.diffusion(i, 0, t, pts)
                db = field_b.diffusion(i, 0, t, pts)
                worst = np.maximum(worst, df + frobenius_norm(da - db))
                continue
            for j in range(len(field_a.betas)):
                da = field_a.diffusion(i, j, t, pts)
                db = field_b.diffusion(i, j, t, pts)
                worst = np.maximum(worst, df + frobenius_norm(da - db))
        total += np.sum(worst) * cell_vol * dt_cell
    return float(total)
