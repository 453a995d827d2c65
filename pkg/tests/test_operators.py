"""Operator trees, games, cutoff, and validators."""

import numpy as np
import pytest

from isaacslab.core import Box, Jet, ParabolicCylinder
from isaacslab.operators import (
    CutoffSpec,
    EllipticityBand,
    FullOperator,
    HomogOperator,
    IsaacsSpec,
    build_isaacs,
    default_cutoff,
    eval_H,
    eval_cutoff,
    game_split,
    linear_op,
    max_op,
    min_op,
    mu_oscillation,
    pucci_max,
    pucci_op,
    supinf_op,
    theta_oscillation,
    unit_hessian_net,
    validate_growth,
    validate_homogeneous,
)


def test_pucci_max_hand_values():
    band = EllipticityBand(lo=0.0625, hi=16.0)
    assert pucci_max(np.array([[1.0]]), band) == pytest.approx(16.0)
    assert pucci_max(np.array([[-1.0]]), band) == pytest.approx(-0.0625)
    a = np.diag([1.0, -1.0])
    assert pucci_max(a, band) == pytest.approx(16.0 - 0.0625)


def test_band_validation():
    with pytest.raises(ValueError):
        EllipticityBand(lo=2.0, hi=1.0)
    with pytest.raises(ValueError):
        EllipticityBand(lo=-1.0, hi=1.0)


def test_tree_eval_matches_leaves():
    u2 = np.array([[0.7]])
    lin = linear_op([[2.0]])
    assert lin.eval(u2, 0.0, np.zeros(1)) == pytest.approx(1.4)
    tree = max_op(linear_op([[0.5]]), min_op(linear_op([[2.0]]), linear_op([[3.0]])))
    assert tree.eval(u2, 0.0, np.zeros(1)) == pytest.approx(max(0.35, min(1.4, 2.1)))


def test_supinf_op_fold_order():
    # rows fold min-inside, max-outside
    rows = [[linear_op([[1.0]]), linear_op([[3.0]])],
            [linear_op([[2.0]]), linear_op([[2.5]])]]
    op = supinf_op(rows)
    u2 = np.array([[1.0]])
    assert op.eval(u2, 0.0, np.zeros(1)) == pytest.approx(max(min(1, 3), min(2, 2.5)))


def test_homog_operator_scales():
    op = HomogOperator(root=max_op(linear_op([[0.6]]), linear_op([[1.4]])), delta=0.5)
    u2 = np.array([[-2.0]])
    v = op.eval(u2)
    assert op.eval(3.0 * u2) == pytest.approx(3.0 * v)


def test_cutoff_spec_band():
    cut = default_cutoff(delta=0.5, K=10.0)
    assert cut.delta_hat == pytest.approx(0.0625)
    band = cut.band
    assert band.lo == pytest.approx(0.0625)
    assert band.hi == pytest.approx(16.0)
    with pytest.raises(ValueError):
        CutoffSpec(delta_hat=0.0, K=1.0)


def test_eval_cutoff_branch_switch():
    # big curvature activates the extremal branch once K is small
    F = HomogOperator(root=linear_op([[1.0]]), delta=0.5)
    full = FullOperator(F=F)
    cut = CutoffSpec(delta_hat=0.0625, K=1.0)
    jet = Jet(value=0.0, gradient=[0.0], hessian=[[10.0]])
    # H = 10, extremal = 160 - 1 = 159
    assert eval_cutoff(full, cut, jet, 0.0, [0.0]) == pytest.approx(159.0)
    jet2 = Jet(value=0.0, gradient=[0.0], hessian=[[0.1]])
    assert eval_cutoff(full, cut, jet2, 0.0, [0.0]) == pytest.approx(0.6)


def test_build_isaacs_validation():
    with pytest.raises(ValueError):
        build_isaacs(IsaacsSpec(diffusions=(), delta=0.5))
    ragged = ((np.eye(1), np.eye(1)), (np.eye(1),))
    with pytest.raises(ValueError):
        build_isaacs(IsaacsSpec(diffusions=ragged, delta=0.5))
    square = (([[1.0]], [[1.0]]), ([[1.0]], [[1.0]]))
    with pytest.raises(ValueError):
        build_isaacs(IsaacsSpec(diffusions=square, delta=0.5), order="minimax")


def test_game_fold_orders_cross():
    # crossing game: entry (i, j) = u'' + s_ij * u', s = [[+1,-1],[-1,+1]];
    # at u''=1, u'=1: maxmin = 0, minmax = 2, strict gap
    c = (([[1.0]], [[1.0]]), ([[1.0]], [[1.0]]))
    low = lambda s: lambda u0, g, t, x: s * g[..., 0]
    lows = ((low(1.0), low(-1.0)), (low(-1.0), low(1.0)))
    spec = IsaacsSpec(diffusions=c, delta=0.5, lower_order=lows, K0=1.0, grad_lipschitz=1.0)
    lo = build_isaacs(spec, order="supinf")
    hi = build_isaacs(spec, order="infsup")
    jet = Jet(value=0.0, gradient=[1.0], hessian=[[1.0]])
    vlo = eval_H(lo, jet, 0.0, [0.0])
    vhi = eval_H(hi, jet, 0.0, [0.0])
    assert vlo == pytest.approx(0.0)
    assert vhi == pytest.approx(2.0)
    # duality holds at random jets as well
    rng = np.random.default_rng(5)
    for _ in range(100):
        j = Jet(value=0.0, gradient=[rng.normal()], hessian=[[rng.normal()]])
        assert eval_H(lo, j, 0.0, [0.0]) <= eval_H(hi, j, 0.0, [0.0]) + 1e-14


def test_game_split_consistency():
    c = (([[0.9]], [[1.1]]), ([[1.2]], [[0.8]]))
    low = lambda s: lambda u0, g, t, x: s * 0.1 * g[..., 0]
    lows = ((low(1.0), low(-1.0)), (low(-1.0), low(1.0)))
    spec = IsaacsSpec(diffusions=c, delta=0.5, lower_order=lows, K0=0.1, grad_lipschitz=0.1)
    op = build_isaacs(spec)
    jet = Jet(value=0.3, gradient=[0.7], hessian=[[1.3]])
    fval, gval = game_split(op, jet, 0.2, [0.1])
    assert fval + gval == pytest.approx(eval_H(op, jet, 0.2, [0.1]), abs=1e-14)
    # pure second-order part only sees the hessian
    jet2 = Jet(value=-2.0, gradient=[5.0], hessian=[[1.3]])
    fval2, _ = game_split(op, jet2, 0.2, [0.1])
    assert fval2 == pytest.approx(fval, abs=1e-14)


def test_validate_homogeneous_accepts_and_rejects():
    good = HomogOperator(root=max_op(linear_op([[0.6]]), linear_op([[1.5]])), delta=0.5)
    rep = validate_homogeneous(good, n=50, seed=2)
    assert rep.ok
    assert rep.grad_eig_min >= 0.5 - 1e-3
    assert rep.grad_eig_max <= 2.0 + 1e-3
    # slope 3.0 exceeds the declared band [0.5, 2]
    bad = HomogOperator(root=linear_op([[3.0]]), delta=0.5)
    assert not validate_homogeneous(bad, n=20, seed=2).ok


def test_validate_growth():
    psi = lambda t, x: 0.5 + 0.0 * np.asarray(x, float)[..., 0]
    G = lambda u0, g, t, x: 0.2 * g[..., 0] + 0.4 * np.sin(3.0 * t)
    full = FullOperator(
        F=HomogOperator(root=linear_op([[1.0]]), delta=0.5),
        G=G,
        K0=0.2,
        Hbar=psi,
    )
    assert validate_growth(full, Box(lo=[-1.0], hi=[1.0]))
    hungry = FullOperator(
        F=HomogOperator(root=linear_op([[1.0]]), delta=0.5),
        G=lambda u0, g, t, x: g[..., 0] ** 2,
        K0=0.2,
        Hbar=psi,
    )
    assert not validate_growth(hungry, Box(lo=[-1.0], hi=[1.0]))


def test_oscillation_measures():
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=0.5)
    net = unit_hessian_net(1)
    flat = HomogOperator(root=linear_op([[1.2]]), delta=0.5)
    assert theta_oscillation(flat, cyl, net) == pytest.approx(0.0, abs=1e-14)

    def striped(t, X):
        return (1.0 + 0.4 * np.sign(np.sin(8.0 * np.pi * np.asarray(X, float)[..., 0])))[
            ..., None, None
        ]

    wavy = HomogOperator(root=linear_op(striped), delta=0.5)
    th = theta_oscillation(wavy, cyl, net)
    mu = mu_oscillation(wavy, cyl, net)
    assert th > 0.0
    assert mu >= th - 1e-14


def test_unit_hessian_net_d1():
    net = unit_hessian_net(1)
    assert np.array_equal(net, np.array([[[1.0]], [[-1.0]]]))
    net2 = unit_hessian_net(2, n=8)
    assert net2.shape == (8, 2, 2)
    norms = np.sqrt(np.sum(net2 * net2, axis=(1, 2)))
    assert np.allclose(norms, 1.0, atol=1e-12)
    # seeded: identical across calls
    assert np.array_equal(net2, unit_hessian_net(2, n=8))


def test_pucci_op_leaf():
    op = pucci_op(0.25, 4.0)
    assert op.eval(np.array([[2.0]]), 0.0, np.zeros(1)) == pytest.approx(8.0)
    assert op.eval(np.diag([1.0, -1.0]), 0.0, np.zeros(2)) == pytest.approx(3.75)
