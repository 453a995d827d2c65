"""Grid, geometry, and jet primitives."""

import numpy as np
import pytest

from isaacslab.core import (
    Ball,
    Box,
    GridFunction,
    Jet,
    ParabolicCylinder,
    SpaceTimeGrid,
    cylinder_nodes,
    discrete_derivatives,
    dist_to_boundary,
    gradient_field,
    spectral_decompose,
    sym_matrix,
)


def test_sym_matrix_symmetrizes():
    a = sym_matrix([[1.0, 2.0], [0.0, 3.0]])
    assert np.allclose(a, a.T)
    assert a[0, 1] == 1.0


def test_sym_matrix_scalar():
    a = sym_matrix(2.5)
    assert a.shape == (1, 1) and a[0, 0] == 2.5


def test_spectral_decompose_reconstructs():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = rng.normal(size=(3, 3))
        a = sym_matrix(g + g.T)
        spec = spectral_decompose(a)
        back = (spec.eigenvectors * spec.eigenvalues) @ spec.eigenvectors.T
        assert np.allclose(back, a, atol=1e-12)
        assert np.all(np.diff(spec.eigenvalues) <= 0)
        # deterministic sign convention on the columns
        for col in spec.eigenvectors.T:
            lead = col[np.abs(col) > 1e-9][0]
            assert lead > 0


def test_jet_validates_shapes():
    j = Jet(value=1.0, gradient=[1.0, 2.0], hessian=[[1.0, 0.0], [0.0, 2.0]])
    assert j.gradient.shape == (2,)
    with pytest.raises(ValueError):
        Jet(value=0.0, gradient=[1.0], hessian=np.eye(2))


def test_box_and_ball_validation():
    b = Box(lo=[-1.0, 0.0], hi=[1.0, 2.0])
    assert b.d == 2
    with pytest.raises(ValueError):
        Box(lo=[0.0], hi=[0.0])
    with pytest.raises(ValueError):
        Ball(center=[0.0], radius=0.0)


def test_dist_to_boundary():
    box = Box(lo=[-1.0, -2.0], hi=[1.0, 2.0])
    assert dist_to_boundary([0.5, 0.0], box) == pytest.approx(0.5)
    assert dist_to_boundary([1.5, 0.0], box) < 0
    ball = Ball(center=[0.0], radius=2.0)
    assert dist_to_boundary([1.0], ball) == pytest.approx(1.0)


def test_cylinder_geometry():
    cyl = ParabolicCylinder(t0=0.5, x0=[0.0, 0.0], R=0.5)
    assert cyl.t1 == pytest.approx(0.75)
    assert cyl.contains(0.6, [0.3, 0.3])
    assert not cyl.contains(0.9, [0.0, 0.0])
    assert not cyl.contains(0.6, [0.5, 0.5])
    # closure membership tolerates lattice rounding on the shell
    assert cyl.contains(0.75, [0.5 - 1e-15, 0.0])


def test_grid_counts_and_axes():
    grid = SpaceTimeGrid(
        box=Box(lo=[-1.0], hi=[1.0]), h=0.25, t0=0.0, t1=1.0, dt=0.125
    )
    assert grid.nx == (9,)
    # nt counts steps; the lattice carries nt + 1 time slices
    assert grid.nt == 8
    assert grid.times[0] == 0.0 and grid.times[-1] == pytest.approx(1.0)
    ax = grid.axis(0)
    assert ax[0] == -1.0 and ax[-1] == 1.0
    assert grid.shape() == (9, 9)


def test_grid_rejects_bad_steps():
    box = Box(lo=[0.0], hi=[1.0])
    with pytest.raises(ValueError):
        SpaceTimeGrid(box=box, h=0.3, t0=0.0, t1=1.0, dt=0.5)
    with pytest.raises(ValueError):
        SpaceTimeGrid(box=box, h=1.0, t0=0.0, t1=1.0, dt=0.5)


def test_grid_function_from_callable():
    grid = SpaceTimeGrid(
        box=Box(lo=[0.0], hi=[1.0]), h=0.5, t0=0.0, t1=1.0, dt=0.5
    )
    gf = GridFunction.from_callable(grid, lambda t, X: t + X[..., 0])
    assert gf.values.shape == (3, 3)
    assert gf.values[1, 2] == pytest.approx(0.5 + 1.0)
    with pytest.raises(ValueError):
        gf.values[0, 0] = 5.0


def test_grid_function_rejects_nonfinite():
    grid = SpaceTimeGrid(
        box=Box(lo=[0.0], hi=[1.0]), h=0.5, t0=0.0, t1=1.0, dt=0.5
    )
    bad = np.zeros((3, 3))
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        GridFunction(grid=grid, values=bad)


def test_cylinder_nodes_matches_predicate():
    grid = SpaceTimeGrid(
        box=Box(lo=[-1.0], hi=[1.0]), h=0.125, t0=0.0, t1=1.0, dt=0.25
    )
    cyl = ParabolicCylinder(t0=0.25, x0=[0.0], R=0.5)
    mask = cylinder_nodes(grid, cyl)
    x = grid.axis(0)
    direct = np.zeros(grid.shape(), dtype=bool)
    for j, t in enumerate(grid.times):
        direct[j] = (t >= 0.25) & (t <= 0.5) & (np.abs(x) <= 0.5)
    assert np.array_equal(mask, direct)
    assert mask.sum() > 0


def test_discrete_derivatives_quadratic():
    grid = SpaceTimeGrid(
        box=Box(lo=[-1.0, -1.0], hi=[1.0, 1.0]), h=0.25, t0=0.0, t1=1.0, dt=0.25
    )
    gf = GridFunction.from_callable(
        grid,
        lambda t, X: 2.0 * t
        + X[..., 0] ** 2
        + 0.5 * X[..., 1] ** 2
        + X[..., 0] * X[..., 1],
    )
    grad, hess = discrete_derivatives(gf, (2, 4, 4))
    assert np.allclose(grad, [0.0, 0.0], atol=1e-10)
    assert np.allclose(hess, [[2.0, 1.0], [1.0, 1.0]], atol=1e-9)
    # off-center node: gradient = (2x + y, x + y) at (x, y) = (0.25, -0.25)
    grad2, _ = discrete_derivatives(gf, (0, 5, 3))
    assert np.allclose(grad2, [0.25, 0.0], atol=1e-10)


def test_discrete_derivatives_needs_interior():
    grid = SpaceTimeGrid(
        box=Box(lo=[-1.0], hi=[1.0]), h=0.25, t0=0.0, t1=1.0, dt=0.25
    )
    gf = GridFunction.from_callable(grid, lambda t, X: X[..., 0] ** 2)
    with pytest.raises(ValueError):
        discrete_derivatives(gf, (1, 0))


def test_gradient_field_linear_exact():
    # one-sided stencils at the faces still reproduce affine data
    h = 0.25
    x = np.arange(-1.0, 1.0 + h / 2, h)
    vals = 3.0 * x - 1.0
    g = gradient_field(vals, h)
    assert np.allclose(g[..., 0], 3.0, atol=1e-12)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    g2 = gradient_field(2.0 * xx - 0.5 * yy, h)
    assert np.allclose(g2[..., 0], 2.0, atol=1e-12)
    assert np.allclose(g2[..., 1], -0.5, atol=1e-12)
