"""Parabolic seminorms, scaled forcing norms, and affine fits.

Closed-form oracles:

  sqrt(t), kappa = 1:
    |sqrt(t) - sqrt(s)| / sqrt(t - s) = sqrt(t - s) / (sqrt(t) + sqrt(s))
    <= 1 with equality iff s = 0, so the lattice sup equals 1 exactly
    whenever t = 0 is a node.

  |x|^{3/2} gradient quotient, kappa = 3/2:
    Dv = 1.5 sign(x) sqrt(|x|); for the pair (a, -a) the quotient is
    3 sqrt(a) / sqrt(2 a) = 3 / sqrt(2) = 2.1213...; same-sign pairs
    stay below 1.5, and (x, y) -> 1.5 (sqrt(x) + sqrt(y)) / sqrt(x + y)
    is maximized at x = y.  Continuum sup = 3 / sqrt(2).

  x^2 on [-r, r] best affine fit: equioscillation at {-r, 0, r} forces
    b = 0, c = r^2 / 2, sup error r^2 / 2.
"""

import numpy as np
import pytest

from isaacslab.core import Box, GridFunction, ParabolicCylinder, SpaceTimeGrid
from isaacslab.norms import (
    affine_decay_seminorm,
    best_affine,
    f_kappa_norm,
    holder_high,
    holder_low,
    interpolation_check,
    oscillation,
)


def _grid1(h=1.0 / 16, dt=1.0 / 64, box=(-1.0, 1.0), t1=1.0):
    return SpaceTimeGrid(
        box=Box(lo=[box[0]], hi=[box[1]]), h=h, t0=0.0, t1=t1, dt=dt
    )


def test_holder_low_constant_kernel():
    gf = GridFunction.from_callable(_grid1(), lambda t, X: 0.0 * X[..., 0] + 3.0)
    assert holder_low(gf, 0.7).value == 0.0


def test_holder_low_linear_slope():
    gf = GridFunction.from_callable(_grid1(), lambda t, X: X[..., 0])
    rep = holder_low(gf, 1.0)
    assert rep.value == pytest.approx(1.0, abs=1e-12)


def test_holder_low_sqrt_time():
    grid = _grid1(h=1.0 / 64, dt=1.0 / 64)
    gf = GridFunction.from_callable(grid, lambda t, X: np.sqrt(t) + 0.0 * X[..., 0])
    rep = holder_low(gf, 1.0)
    assert rep.value == pytest.approx(1.0, abs=1e-12)


def test_holder_low_homogeneity():
    grid = _grid1()
    gf = GridFunction.from_callable(grid, lambda t, X: np.sin(3.0 * X[..., 0]) + t)
    rep = holder_low(gf, 0.8)
    scaled = holder_low(gf.with_values(-2.5 * gf.values), 0.8)
    assert scaled.value == pytest.approx(2.5 * rep.value, abs=1e-12)


def test_holder_high_kernel_affine():
    gf = GridFunction.from_callable(_grid1(), lambda t, X: 2.0 * X[..., 0] - 0.3)
    rep = holder_high(gf, 1.5)
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_holder_high_power_gradient_part():
    grid = _grid1(h=1.0 / 128, dt=1.0 / 4, t1=1.0)
    gf = GridFunction.from_callable(grid, lambda t, X: np.abs(X[..., 0]) ** 1.5)
    rep = holder_high(gf, 1.5)
    target = 3.0 / np.sqrt(2.0)
    assert rep.time_part == pytest.approx(0.0, abs=1e-12)
    assert abs(rep.grad_part - target) <= 0.1 * target


def test_holder_high_quadratic_kappa2():
    grid = _grid1(h=1.0 / 32, dt=1.0 / 4)
    gf = GridFunction.from_callable(grid, lambda t, X: X[..., 0] ** 2 / 2.0)
    rep = holder_high(gf, 2.0)
    assert rep.grad_part == pytest.approx(1.0, abs=1e-10)


def test_parabolic_rescaling_exact():
    # v_s(t, x) = v(s^2 t, s x) on the matching coarse lattice shares
    # every value pair with v, so the quotients match after s^kappa
    s = 0.5
    grid_f = SpaceTimeGrid(
        box=Box(lo=[-0.5], hi=[0.5]), h=1.0 / 32, t0=0.0, t1=0.25, dt=1.0 / 64
    )
    grid_c = SpaceTimeGrid(
        box=Box(lo=[-1.0], hi=[1.0]), h=1.0 / 16, t0=0.0, t1=1.0, dt=1.0 / 16
    )
    fn = lambda t, X: np.abs(X[..., 0]) ** 1.5 + t * X[..., 0]
    v = GridFunction.from_callable(grid_f, fn)
    vs = GridFunction.from_callable(
        grid_c, lambda t, X: fn(s * s * t, s * X)
    )
    kappa = 0.9
    a = holder_low(v, kappa)
    b = holder_low(vs, kappa)
    assert b.value == pytest.approx(s ** kappa * a.value, rel=1e-12)
    # the gradient-quotient range rescales the same way: discrete
    # gradients of the dilated samples are s times the original ones
    kappa = 1.3
    a2 = holder_high(v, kappa)
    b2 = holder_high(vs, kappa)
    assert b2.value == pytest.approx(s ** kappa * a2.value, rel=1e-12)


def test_holder_region_restriction():
    grid = _grid1(h=1.0 / 16, dt=1.0 / 16)
    gf = GridFunction.from_callable(
        grid, lambda t, X: np.where(X[..., 0] > 0.75, 5.0, 0.0)
    )
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=0.5)
    rep = holder_low(gf, 1.0, region=cyl)
    assert rep.value == 0.0
    assert rep.n_nodes > 0


def test_oscillation_values():
    grid = _grid1(h=1.0 / 64, dt=1.0 / 4)
    c = GridFunction.from_callable(grid, lambda t, X: 0.0 * X[..., 0] + 4.2)
    assert oscillation(c) == 0.0
    lin = GridFunction.from_callable(grid, lambda t, X: X[..., 0])
    assert oscillation(lin) == pytest.approx(2.0)
    sine = GridFunction.from_callable(grid, lambda t, X: np.sin(np.pi * X[..., 0]))
    assert oscillation(sine) == pytest.approx(2.0, abs=1e-3)


def test_f_kappa_norm_constant():
    grid = _grid1(h=1.0 / 32, dt=1.0 / 64)
    c = GridFunction.from_callable(grid, lambda t, X: 0.0 * X[..., 0] + 1.5)
    for kappa in (1.0, 1.4):
        got = f_kappa_norm(c, kappa, R0=0.5)
        assert got == pytest.approx(1.5 * 0.5 ** (2.0 - kappa), rel=1e-12)
    assert f_kappa_norm(c, 2.0, R0=0.5) == pytest.approx(1.5, rel=1e-12)


def test_f_kappa_norm_homogeneity():
    grid = _grid1(h=1.0 / 32, dt=1.0 / 64)
    f = GridFunction.from_callable(grid, lambda t, X: np.sin(2.0 * X[..., 0]) + t)
    a = f_kappa_norm(f, 1.4, R0=0.5)
    b = f_kappa_norm(f.with_values(-3.0 * f.values), 1.4, R0=0.5)
    assert b == pytest.approx(3.0 * a, rel=1e-12)


def test_f_kappa_norm_spike_monotone_in_kappa():
    # a narrow spike is weighted through its covering radius, so the
    # value grows with kappa
    grid = _grid1(h=1.0 / 32, dt=1.0 / 64)

    def spike(t, X):
        return np.where(
            (np.abs(X[..., 0]) < 0.1) & (t > 0.4) & (t < 0.5), 1.0, 0.0
        )

    f = GridFunction.from_callable(grid, spike)
    vals = [f_kappa_norm(f, k, R0=0.5) for k in (1.0, 1.5, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_best_affine_on_affine_data():
    grid = _grid1(h=1.0 / 16, dt=1.0 / 4)
    gf = GridFunction.from_callable(grid, lambda t, X: 1.0 - 2.0 * X[..., 0])
    fit = best_affine(gf)
    assert fit.error == pytest.approx(0.0, abs=1e-10)
    assert fit.offset == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(fit.slope, [-2.0], atol=1e-9)


def test_best_affine_quadratic():
    r = 0.5
    grid = SpaceTimeGrid(
        box=Box(lo=[-r], hi=[r]), h=r / 8, t0=0.0, t1=0.25, dt=1.0 / 8
    )
    gf = GridFunction.from_callable(grid, lambda t, X: X[..., 0] ** 2)
    fit = best_affine(gf)
    assert fit.error == pytest.approx(r * r / 2.0, rel=1e-9)
    assert abs(fit.slope[0]) <= 1e-9
    assert fit.offset == pytest.approx(r * r / 2.0, rel=1e-9)


def test_best_affine_symmetry_kills_slope():
    grid = _grid1(h=1.0 / 16, dt=1.0 / 4)
    gf = GridFunction.from_callable(grid, lambda t, X: np.abs(X[..., 0]))
    fit = best_affine(gf)
    assert abs(fit.slope[0]) <= 1e-9


def test_best_affine_vertex_jet_dominates():
    grid = _grid1(h=1.0 / 32, dt=1.0 / 8)
    gf = GridFunction.from_callable(
        grid, lambda t, X: np.cos(2.0 * X[..., 0]) + 0.1 * t
    )
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=0.5)
    fit = best_affine(gf, region=cyl, vertex=(0.0, [0.0]))
    # the Chebyshev fit can never lose to the one-jet affine candidate
    assert fit.error <= fit.vertex_jet_error + 1e-12


def test_best_affine_degenerate_raises():
    grid = _grid1(h=1.0 / 16, dt=1.0 / 4)
    gf = GridFunction.from_callable(grid, lambda t, X: X[..., 0])
    # single spatial node cannot pin a slope
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=1e-6)
    with pytest.raises(ValueError):
        best_affine(gf, region=cyl)


def test_affine_decay_profiles():
    grid = _grid1(h=1.0 / 128, dt=1.0 / 8)
    flat = GridFunction.from_callable(grid, lambda t, X: 0.3 * X[..., 0] - 1.0)
    radii = [0.25, 0.125, 0.0625]
    assert affine_decay_seminorm(flat, (1.0, [0.0]), radii, 1.5) == pytest.approx(
        0.0, abs=1e-10
    )
    quad = GridFunction.from_callable(grid, lambda t, X: X[..., 0] ** 2)
    # error(r)/r^1.5 = sqrt(r)/2: the max sits at the largest radius
    got = affine_decay_seminorm(quad, (1.0, [0.0]), radii, 1.5)
    assert got == pytest.approx(np.sqrt(0.25) / 2.0, rel=1e-6)


def test_affine_decay_scale_invariant_profile():
    grid = _grid1(h=1.0 / 256, dt=1.0 / 8)
    power = GridFunction.from_callable(grid, lambda t, X: np.abs(X[..., 0]) ** 1.5)
    ratios = []
    for r in (0.25, 0.125, 0.0625):
        ratios.append(
            affine_decay_seminorm(power, (1.0, [0.0]), [r], 1.5)
        )
    spread = max(ratios) / min(ratios)
    assert spread <= 1.25


def test_interpolation_check_cases():
    grid = _grid1(h=1.0 / 64, dt=1.0 / 8)
    const = GridFunction.from_callable(grid, lambda t, X: 0.0 * X[..., 0] + 2.0)
    ok, _ = interpolation_check(const, 0.25, 0.5, gamma=0.5, eps=0.5)
    assert ok
    aff = GridFunction.from_callable(grid, lambda t, X: 0.7 * X[..., 0])
    ok, _ = interpolation_check(aff, 0.25, 0.5, gamma=0.5, eps=0.5)
    assert ok
    wavy = GridFunction.from_callable(grid, lambda t, X: np.sin(8.0 * X[..., 0]))
    for eps in np.linspace(0.1, 0.9, 9):
        ok, margin = interpolation_check(wavy, 0.25, 0.5, gamma=0.5, eps=float(eps))
        assert ok, f"eps={eps} margin={margin}"


def test_holder_subadditive_sampled():
    grid = _grid1(h=1.0 / 16, dt=1.0 / 16)
    rng = np.random.default_rng(13)
    for _ in range(5):
        a = rng.normal(size=grid.shape())
        b = rng.normal(size=grid.shape())
        fa = GridFunction(grid, a)
        fb = GridFunction(grid, b)
        fab = GridFunction(grid, a + b)
        assert (
            holder_low(fab, 0.9).value
            <= holder_low(fa, 0.9).value + holder_low(fb, 0.9).value + 1e-12
        )
