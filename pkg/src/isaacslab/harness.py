"""Configured numerical experiments over the whole stack.

Each experiment builds its instances from a validated config, runs the
relevant machinery, and returns an ExperimentReport whose rows land in a
CSV with a versioned header comment.  Experiments gate themselves (the
`passed` flag) on the quantitative checks described in their docstrings;
the CLI turns a failed gate into exit code 3.

Config resolution order: built-in defaults, then an optional TOML file,
then ISAACSLAB_<SECTION>_<KEY> environment overrides, then CLI flags for
seed / threads / output directory.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:
    import tomli as _toml

from .core import (
    Box,
    GridFunction,
    Jet,
    ParabolicCylinder,
    SpaceTimeGrid,
    cylinder_nodes,
    frobenius_norm,
)
from .mollify import MollifierSpec, barrier_check, resample, smooth
from .norms import best_affine, f_kappa_norm, holder_high
from .operators import (
    CutoffSpec,
    FullOperator,
    HomogOperator,
    IsaacsSpec,
    build_isaacs,
    eval_H,
    linear_op,
    max_op,
    mu_oscillation,
    theta_oscillation,
    unit_hessian_net,
    validate_growth,
    validate_homogeneous,
)
from .representation import (
    AffinePair,
    Envelope,
    base_inf,
    check_admissible,
    coeff_distance,
    coeff_field,
    frob_inner,
    majorant,
    majorant_grad,
    margin,
    mixing_weight,
    repr_pair,
    sample_base_slopes,
    stability_gap,
    supinf_eval,
)
from .solver import (
    ProblemSpec,
    SchemeParams,
    comparison_check,
    export_solution_csv,
    k_saturation,
    read_grid_dump,
    solve,
    solve_frozen,
    spatial_only,
    write_grid_dump,
)

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "load_config",
    "ExperimentReport",
    "EXPERIMENTS",
    "run_experiments",
]


class ConfigError(ValueError):
    """Invalid or unknown configuration; the CLI maps this to exit 2."""


DEFAULTS = {
    "global": {
        "seed": 20260822,
        "threads": 1,
        "out": "reports",
        "delta": 0.5,
        "kappa0": 1.4,
    },
    "represent": {
        "deltas": [0.25, 0.5, 0.9],
        "n_alpha": 64,
        "n_beta": 32,
        "n_recon": 100,
        "n_stability": 64,
    },
    "freeze": {
        "amplitudes": [0.5, 0.25, 0.125, 0.0625],
        "h": 1.0 / 32.0,
        "T": 0.25,
        "kappa": 1.2,
        "K": 50.0,
    },
    "affine": {
        "h": 1.0 / 64.0,
        "T": 0.26,
        "kappa": 1.2,
        "radii": [0.5, 0.25, 0.125, 0.0625],
    },
    "holder": {
        "kappa": 1.2,
        "h1": 1.0 / 32.0,
        "T1": 0.2,
        "R1": 0.4,
        "r1": 0.2,
        "h2": 1.0 / 20.0,
        "T2": 0.1,
        "R2": 0.3,
        "r2": 0.15,
    },
    "ksat": {
        "h": 1.0 / 16.0,
        "T": 0.1,
        "K_values": [0.0, 1.0, 10.0, 200.0],
    },
    "isaacs": {
        "h": 1.0 / 16.0,
        "T": 0.1,
        "drift": 0.05,
    },
    "moll": {
        "eps_values": [0.25, 0.125, 0.0625, 0.03125, 0.015625],
        "barrier_h": 1.0 / 32.0,
        "barrier_K": 30.0,
    },
    "solve": {
        "problem": "heat",
        "h": 1.0 / 32.0,
        "T": 0.2,
        "K": 100.0,
        "dump": "solution.bin",
        "csv": "solution.csv",
    },
}


def _coerce_env(raw: str):
    try:
        return _toml.loads(f"v = {raw}")["v"]
    except Exception:
        return raw


def load_config(path=None, env=None, overrides=None) -> dict:
    """Resolve the layered configuration.

    Unknown sections or keys, in the file or the environment, raise
    ConfigError; so do out-of-range values.
    """
    cfg = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is not None:
        try:
            with open(path, "rb") as f:
                user = _toml.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}")
        except _toml.TOMLDecodeError as e:
            raise ConfigError(f"malformed config file: {e}")
        for sec, kv in user.items():
            if sec not in cfg:
                raise ConfigError(f"unknown config section [{sec}]")
            if not isinstance(kv, dict):
                raise ConfigError(f"top-level key {sec!r} must be a section")
            for k, v in kv.items():
                if k not in cfg[sec]:
                    raise ConfigError(f"unknown config key {sec}.{k}")
                cfg[sec][k] = v
    env = os.environ if env is None else env
    for name, raw in env.items():
        if not name.startswith("ISAACSLAB_"):
            continue
        body = name[len("ISAACSLAB_"):].lower()
        sec, _, key = body.partition("_")
        # section names are single words; the remainder is the key,
        # matched case-insensitively (config keys may carry capitals)
        canon = {k.lower(): k for k in cfg.get(sec, {})}
        if sec not in cfg or key not in canon:
            raise ConfigError(f"environment override {name} matches no config key")
        cfg[sec][canon[key]] = _coerce_env(raw)
    if overrides:
        for (sec, key), v in overrides.items():
            cfg[sec][key] = v
    _validate(cfg)
    return cfg


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _validate(cfg):
    g = cfg["global"]
    _require(isinstance(g["seed"], int) and g["seed"] >= 0, "global.seed must be a nonnegative integer")
    _require(isinstance(g["threads"], int) and 1 <= g["threads"] <= 64, "global.threads must be in [1, 64]")
    _require(0.0 < g["delta"] < 1.0, "global.delta must lie in (0, 1)")
    _require(1.0 < g["kappa0"] < 2.0, "global.kappa0 must lie in (1, 2)")
    kappa1 = (1.0 + g["kappa0"]) / 2.0
    for sec in ("freeze", "affine", "holder"):
        k = cfg[sec]["kappa"]
        _require(1.0 < k <= kappa1 + 1e-12, f"{sec}.kappa must lie in (1, (1 + kappa0)/2]")
    _require(
        all(0.0 < d <= 1.0 for d in cfg["represent"]["deltas"]),
        "represent.deltas must lie in (0, 1]",
    )
    for key in ("n_alpha", "n_beta", "n_recon", "n_stability"):
        _require(int(cfg["represent"][key]) > 0, f"represent.{key} must be positive")
    amps = cfg["freeze"]["amplitudes"]
    _require(
        all(0.0 < a <= 0.5 for a in amps) and list(amps) == sorted(amps, reverse=True),
        "freeze.amplitudes must be descending values in (0, 0.5]",
    )
    radii = cfg["affine"]["radii"]
    _require(
        all(0.0 < r <= 0.5 for r in radii) and list(radii) == sorted(radii, reverse=True),
        "affine.radii must be descending values in (0, 0.5]",
    )
    _require(
        cfg["affine"]["T"] > max(radii) ** 2,
        "affine.T must exceed the largest cylinder height",
    )
    ks = cfg["ksat"]["K_values"]
    _require(
        all(k >= 0 for k in ks) and list(ks) == sorted(ks),
        "ksat.K_values must be nondecreasing and nonnegative",
    )
    eps = cfg["moll"]["eps_values"]
    _require(
        all(0.0 < e <= 0.5 for e in eps) and list(eps) == sorted(eps, reverse=True),
        "moll.eps_values must be descending values in (0, 0.5]",
    )
    _require(0.0 < cfg["isaacs"]["drift"] <= 0.2, "isaacs.drift must lie in (0, 0.2]")
    _require(cfg["solve"]["problem"] in _SOLVE_CATALOG, f"solve.problem must be one of {sorted(_SOLVE_CATALOG)}")
    for sec, key in (
        ("freeze", "h"),
        ("affine", "h"),
        ("holder", "h1"),
        ("holder", "h2"),
        ("ksat", "h"),
        ("isaacs", "h"),
        ("moll", "barrier_h"),
    ):
        _require(0.0 < cfg[sec][key] <= 0.25, f"{sec}.{key} must lie in (0, 0.25]")


@dataclass
class ExperimentReport:
    """Outcome of one experiment: gate flag, table rows, summary notes."""

    name: str
    passed: bool
    rows: list
    notes: dict

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("# isaacslab-report v1\n")
            f.write(f"# experiment: {self.name}\n")
            f.write(f"# passed: {str(self.passed).lower()}\n")
            for k in sorted(self.notes):
                f.write(f"# {k}: {self.notes[k]}\n")
            if not self.rows:
                return
            cols = list(self.rows[0].keys())
            f.write(",".join(cols) + "\n")
            for row in self.rows:
                f.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Representation experiment.


def _max_linear(slopes):
    slopes = np.asarray(slopes, float)

    def H(alpha):
        vals = np.einsum("mij,...ij->m...", slopes, np.asarray(alpha, float))
        return np.max(vals, axis=0)

    return H


def exp_representation(cfg) -> ExperimentReport:
    """Invariants of the sup-inf representation across deltas and dims.

    Gates: weights in [0, 1]; pair values minorize the operator with
    equality at the build point whenever the weight is below one; pair
    slopes stay inside the enlarged band; the degree-one identity of the
    majorant holds to 1e-10; the majorant-support margin dominates
    (delta/2) |alpha|_F; finite max-linear operators are reproduced
    exactly by their finite nets; pair distances between two operators
    factor exactly through the weight gap and respect the a-priori
    stability bounds; induced coefficient fields keep every row inside
    its band with the right forcing offsets.
    """
    sec = cfg["represent"]
    rng = np.random.default_rng(cfg["global"]["seed"])
    rows = []
    all_ok = True
    for delta in sec["deltas"]:
        for d in (1, 2):
            env = Envelope(delta=float(delta), d=d)
            n_a = int(sec["n_alpha"])
            raw = rng.normal(size=(n_a, d, d))
            alphas = (raw + np.swapaxes(raw, -1, -2)) / 2.0
            alphas *= rng.uniform(0.3, 3.0, size=(n_a, 1, 1))
            slopes = sample_base_slopes(env, rng, 6)
            H = _max_linear(slopes)
            check_admissible(env, H, alphas)
            betas = [
                AffinePair(offset=float(rng.uniform(-1.0, 1.0)), slope=s)
                for s in sample_base_slopes(env, rng, int(sec["n_beta"]))
            ]
            w_viol = minor_viol = eq_viol = band_viol = 0.0
            hvals = H(alphas)
            for beta in betas:
                w = mixing_weight(env, H, alphas, beta)
                w_viol = max(w_viol, float(np.max(np.maximum(-w, w - 1.0))))
                pair = repr_pair(env, H, alphas, beta)
                vals = pair.value(alphas)
                minor_viol = max(minor_viol, float(np.max(hvals - vals)))
                active = w < 1.0 - 1e-12
                if np.any(active):
                    eq_viol = max(
                        eq_viol, float(np.max(np.abs((vals - hvals)[active])))
                    )
                ev = np.linalg.eigvalsh(pair.slope)
                band_viol = max(
                    band_viol,
                    float(np.max(env.band_lo - ev)),
                    float(np.max(ev - env.band_hi)),
                )
            grad = majorant_grad(env, alphas)
            up = majorant(env, alphas)
            euler = float(np.max(np.abs(frob_inner(alphas, grad) - up) / (1.0 + np.abs(up))))
            margin_def = float(
                np.max(env.delta / 2.0 * frobenius_norm(alphas) - margin(env, alphas))
            )
            # exact reconstruction of a finite max-linear operator
            rslopes = sample_base_slopes(env, rng, 5)
            Hr = _max_linear(rslopes)
            rbetas = [AffinePair(offset=0.0, slope=s) for s in rslopes]
            recon = 0.0
            for _ in range(int(sec["n_recon"])):
                u = rng.normal(size=(d, d))
                u = (u + u.T) / 2.0 * rng.uniform(0.2, 2.0)
                got = supinf_eval(env, Hr, u, rslopes, rbetas)
                want = float(Hr(u))
                recon = max(recon, abs(got - want) / (1.0 + abs(want)))
            # stability: bounds and the exact weight factoring
            fslopes = sample_base_slopes(env, rng, 6)
            F = _max_linear(fslopes)
            stab_viol = factor_viol = 0.0
            for _ in range(int(sec["n_stability"])):
                a = rng.normal(size=(d, d))
                a = (a + a.T) / 2.0 * rng.uniform(0.3, 2.0)
                beta = betas[rng.integers(0, len(betas))]
                rep = stability_gap(env, H, F, a, beta)
                stab_viol = max(
                    stab_viol,
                    rep.offset_gap - rep.offset_bound - 1e-10,
                    rep.slope_gap - rep.slope_bound - 1e-10,
                )
                g0 = majorant_grad(env, a)
                lever_off = abs(beta.offset + float(frob_inner(a, g0)) - float(majorant(env, a)))
                lever_slope = float(frobenius_norm(beta.slope - g0))
                factor_viol = max(
                    factor_viol,
                    abs(rep.offset_gap - rep.weight_gap * lever_off),
                    abs(rep.slope_gap - rep.weight_gap * lever_slope),
                )
            # induced coefficient field row invariants
            field_viol = _coeff_field_check(env, H, rng)
            row_ok = (
                w_viol <= 1e-12
                and minor_viol <= 1e-9
                and eq_viol <= 1e-9
                and band_viol <= 1e-9
                and euler <= 1e-10
                and margin_def <= 1e-10
                and recon <= 1e-9
                and stab_viol <= 0.0
                and factor_viol <= 1e-10
                and field_viol <= 1e-9
            )
            all_ok = all_ok and row_ok
            rows.append(
                dict(
                    delta=float(delta),
                    d=d,
                    weight_violation=w_viol,
                    minorant_defect=minor_viol,
                    equality_defect=eq_viol,
                    slope_band_defect=band_viol,
                    euler_defect=euler,
                    margin_defect=margin_def,
                    reconstruction_err=recon,
                    stability_violation=stab_viol,
                    factoring_defect=factor_viol,
                    field_defect=field_viol,
                    ok=row_ok,
                )
            )
    return ExperimentReport(
        name="represent",
        passed=all_ok,
        rows=rows,
        notes={"cases": len(rows)},
    )


def _coeff_field_check(env, H, rng) -> float:
    """Worst violation of the induced-field row invariants."""
    d = env.d
    raw = rng.normal(size=(6, d, d))
    primary = (raw + np.swapaxes(raw, -1, -2)) / 2.0
    betas = [AffinePair(offset=0.0, slope=s) for s in sample_base_slopes(env, rng, 4)]
    delta_hat = env.delta / 8.0
    mid = 0.5 * (delta_hat + 1.0 / delta_hat)
    cut_net = np.stack([np.eye(d) * delta_hat, np.eye(d) * mid])
    K = 7.5

    def F_eval(alpha, t, X):
        base = float(np.asarray(H(alpha), float))
        s = 0.25 * (1.0 + np.sin(np.asarray(X, float)[..., 0] + t))
        lo = float(base_inf(env, alpha))
        return (1.0 - s) * base + s * lo

    field = coeff_field(
        env,
        F_eval,
        primary,
        betas,
        (delta_hat, 1.0 / delta_hat),
        cut_net,
        K,
    )
    pts = rng.uniform(-1.0, 1.0, size=(20, d))
    worst = 0.0
    for i in range(field.n_total):
        want_force = 0.0 if i < field.n_primary else -K
        worst = max(worst, abs(field.forcing(i) - want_force))
        lo, hi = (delta_hat, 1.0 / delta_hat) if i >= field.n_primary else (
            env.band_lo,
            env.band_hi,
        )
        for j in range(len(betas) if i < field.n_primary else 1):
            a = field.diffusion(i, j, 0.3, pts)
            ev = np.linalg.eigvalsh(a)
            worst = max(
                worst, float(np.max(lo - ev, initial=0.0)), float(np.max(ev - hi, initial=0.0))
            )
    cyl = ParabolicCylinder(t0=0.0, x0=np.zeros(d), R=0.5)
    worst = max(worst, abs(coeff_distance(field, field, cyl, n_time=4, n_space=8)))
    return worst


# ---------------------------------------------------------------------------
# Freezing experiment.


def _freeze_instance(A):
    def coef(t, X):
        s = np.sign(np.sin(8.0 * np.pi * np.asarray(X, float)[..., 0]))
        return (1.25 + A * s)[..., None, None]

    return spatial_only(coef)


def exp_freezing(cfg) -> ExperimentReport:
    """Distance to the frozen-coefficient solution as the oscillation shrinks.

    A family of striped 1D coefficients with exactly computable
    oscillation mu1 = amplitude is solved rough and frozen on a shared
    lattice; the gate demands E = sup |u - u_frozen| to decrease
    strictly, shrink by at least half across the sweep, and fit a
    log-log slope no flatter than the guaranteed kappa/12 - 0.05.
    """
    sec = cfg["freeze"]
    delta = cfg["global"]["delta"]
    kappa = float(sec["kappa"])
    R = 0.5
    box = Box(lo=[-R], hi=[R])
    cut = CutoffSpec(delta_hat=delta / 8.0, K=float(sec["K"]))
    scheme = SchemeParams(h=float(sec["h"]))
    g = lambda t, X: np.sin(np.pi * X[..., 0]) * (1.0 + 0.5 * t)
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=R)
    net = unit_hessian_net(1)

    def one(A):
        coef = _freeze_instance(A)
        F = HomogOperator(root=linear_op(coef), delta=delta)
        prob = ProblemSpec(
            box=box, T=float(sec["T"]), operator=FullOperator(F=F), cutoff=cut, boundary=g
        )
        rough = solve(prob, scheme)
        frozen = solve_frozen(prob, R, scheme)
        E = float(np.max(np.abs(rough.v.values - frozen.v.values)))
        mu = mu_oscillation(F, cyl, net)
        th = theta_oscillation(F, cyl, net)
        return dict(amplitude=A, mu1=mu, theta1=th, E=E)

    rows = _pmap(one, [float(a) for a in sec["amplitudes"]], cfg["global"]["threads"])
    Es = np.array([r["E"] for r in rows])
    mus = np.array([r["mu1"] for r in rows])
    decreasing = bool(np.all(np.diff(Es) < 0.0))
    halved = bool(Es[-1] <= 0.5 * Es[0])
    slope = float(np.polyfit(np.log(mus), np.log(Es), 1)[0])
    rate = kappa / 12.0
    ok = decreasing and halved and slope >= rate - 0.05
    for r in rows:
        r["ok"] = ok
    return ExperimentReport(
        name="freeze",
        passed=ok,
        rows=rows,
        notes={
            "slope": f"{slope:.6g}",
            "required_rate": f"{rate - 0.05:.6g}",
            "decreasing": decreasing,
            "halved": halved,
        },
    )


# ---------------------------------------------------------------------------
# Affine-decay experiment.


def exp_affine_approx(cfg) -> ExperimentReport:
    """Best-affine error on shrinking vertex cylinders.

    The datum |x|^kappa with a top-slice vertex makes the exact decay
    rate kappa; the gate requires e(r) / r^kappa to stay within a factor
    2 across the radius ladder, and doubling the datum to double every
    e(r) to 5%.
    """
    sec = cfg["affine"]
    delta = cfg["global"]["delta"]
    kappa = float(sec["kappa"])
    T = float(sec["T"])
    box = Box(lo=[-1.0], hi=[1.0])
    F = HomogOperator(root=linear_op([[1.0]]), delta=delta)
    cut = CutoffSpec(delta_hat=delta / 8.0, K=1e6)
    scheme = SchemeParams(h=float(sec["h"]))

    def datum(scale):
        return lambda t, X: scale * np.abs(X[..., 0]) ** kappa

    def solve_for(scale):
        prob = ProblemSpec(
            box=box,
            T=T,
            operator=FullOperator(F=F),
            cutoff=cut,
            boundary=datum(scale),
        )
        return solve(prob, scheme)

    sols = _pmap(solve_for, [1.0, 2.0], cfg["global"]["threads"])
    sol, sol2 = sols
    rows = []
    ratios = []
    split_ok = True
    for r in [float(r) for r in sec["radii"]]:
        cyl = ParabolicCylinder(t0=T - r * r, x0=[0.0], R=r)
        fit = best_affine(sol.v, region=cyl)
        fit2 = best_affine(sol2.v, region=cyl)
        ratio = fit.error / r ** kappa
        ratios.append(ratio)
        doubling = fit2.error / fit.error if fit.error > 0 else np.nan
        split_ok = split_ok and abs(doubling - 2.0) <= 0.05
        jet_ok = fit.vertex_jet_error is None or fit.error <= fit.vertex_jet_error + 1e-12
        split_ok = split_ok and jet_ok
        rows.append(
            dict(
                r=r,
                error=fit.error,
                ratio=ratio,
                vertex_jet_error=fit.vertex_jet_error,
                doubling=doubling,
            )
        )
    spread = max(ratios) / min(ratios)
    ok = spread <= 2.0 and split_ok
    for row in rows:
        row["ok"] = ok
    return ExperimentReport(
        name="affine",
        passed=ok,
        rows=rows,
        notes={"ratio_spread": f"{spread:.6g}", "doubling_ok": split_ok},
    )


# ---------------------------------------------------------------------------
# Interior regularity experiment.


def _psi(t, X):
    X = np.asarray(X, float)
    out = 0.4 * np.cos(2.0 * X[..., 0]) * (1.0 + 0.5 * np.sin(3.0 * t))
    if X.shape[-1] == 2:
        out = out * np.cos(X[..., 1])
    return out


def _psi_bound(t, X):
    return np.abs(_psi(t, X))


def _forcing_G(u0, grad, t, X):
    return _psi(t, X)


def _holder_problems(cfg):
    delta = cfg["global"]["delta"]
    sec = cfg["holder"]
    d1 = dict(
        d=1,
        box=Box(lo=[-1.0], hi=[1.0]),
        T=float(sec["T1"]),
        h=float(sec["h1"]),
        R=float(sec["R1"]),
        r=float(sec["r1"]),
        vertex_t=0.02,
    )
    probs = []

    def add(name, base, opfn, g):
        p = dict(base)
        p["name"] = name
        p["op"] = opfn
        p["g"] = g
        probs.append(p)

    heat = lambda: HomogOperator(root=linear_op([[1.0]]), delta=delta)
    add(
        "heat",
        d1,
        lambda: FullOperator(F=heat(), G=_forcing_G, Hbar=_psi_bound),
        lambda t, X: np.sin(np.pi * X[..., 0]) * (1.0 + 0.3 * t),
    )

    def varc(t, X):
        return (1.0 + 0.3 * np.sin(3.0 * X[..., 0]))[..., None, None]

    add(
        "varcoef",
        d1,
        lambda: FullOperator(
            F=HomogOperator(root=linear_op(spatial_only(varc)), delta=delta),
            G=_forcing_G,
            Hbar=_psi_bound,
        ),
        lambda t, X: np.abs(X[..., 0] + 0.11) ** 1.3,
    )

    def tcoef(t, X):
        a = 0.8 if np.sin(20.0 * t) > 0 else 1.2
        X = np.asarray(X, float)
        return np.broadcast_to(np.array([[a]]), X.shape[:-1] + (1, 1))

    add(
        "t-measurable",
        d1,
        lambda: FullOperator(
            F=HomogOperator(root=linear_op(tcoef), delta=delta),
            G=_forcing_G,
            Hbar=_psi_bound,
        ),
        lambda t, X: np.cos(2.0 * X[..., 0]) + 0.2 * X[..., 0],
    )
    add(
        "bellman",
        d1,
        lambda: FullOperator(
            F=HomogOperator(
                root=max_op(linear_op([[0.8]]), linear_op([[1.2]])), delta=delta
            ),
            G=_forcing_G,
            Hbar=_psi_bound,
        ),
        lambda t, X: np.abs(X[..., 0] - 0.07) ** 1.3 - 0.5 * X[..., 0],
    )

    def isaacs_op():
        drift = 0.1

        def low(s):
            return lambda u0, grad, t, X: s * drift * grad[..., 0] + _psi(t, X)

        spec = IsaacsSpec(
            diffusions=(([[0.8]], [[1.05]]), ([[0.95]], [[1.2]])),
            delta=delta,
            lower_order=((low(1.0), low(-1.0)), (low(-1.0), low(1.0))),
            K0=drift,
            Hbar=_psi_bound,
            grad_lipschitz=drift,
        )
        return build_isaacs(spec)

    add(
        "isaacs",
        d1,
        isaacs_op,
        lambda t, X: np.sin(2.0 * X[..., 0]) * (1.0 + 0.2 * t),
    )

    d2 = dict(
        d=2,
        box=Box(lo=[-0.6, -0.6], hi=[0.6, 0.6]),
        T=float(sec["T2"]),
        h=float(sec["h2"]),
        R=float(sec["R2"]),
        r=float(sec["r2"]),
        vertex_t=0.005,
    )
    add(
        "heat-2d",
        d2,
        lambda: FullOperator(
            F=HomogOperator(root=linear_op([[1.0, 0.2], [0.2, 0.9]]), delta=delta),
            G=_forcing_G,
            Hbar=_psi_bound,
        ),
        lambda t, X: np.sin(np.pi * X[..., 0]) * np.cos(2.0 * X[..., 1]) * (1.0 + 0.3 * t),
    )
    return probs


def _q_value(sol, kappa, cyl_r, cyl_R, fnorm):
    seminorm = holder_high(sol.v, kappa, region=cyl_r)
    mask = cylinder_nodes(sol.v.grid, cyl_R)
    supv = float(np.max(np.abs(sol.v.values[mask])))
    denom = (cyl_R.R - cyl_r.R) ** (-kappa) * supv + fnorm
    return seminorm.value / denom, seminorm.value, supv


def exp_interior_holder(cfg) -> ExperimentReport:
    """Normalized interior seminorm across a family of operators.

    For each instance, Q = (kappa seminorm on the inner cylinder)
    divided by ((R - r)^-kappa sup over the outer cylinder + forcing
    norm); the gate demands Q stable within a factor 2 both under mesh
    refinement h -> h/2 and under shrinking the inner radius r -> r/2.
    """
    sec = cfg["holder"]
    delta = cfg["global"]["delta"]
    kappa = float(sec["kappa"])
    probs = _holder_problems(cfg)

    def one(p):
        cut = CutoffSpec(delta_hat=delta / 8.0, K=200.0)
        op = p["op"]()
        prob = ProblemSpec(
            box=p["box"], T=p["T"], operator=op, cutoff=cut, boundary=p["g"]
        )
        x0 = np.zeros(p["d"])
        cyl_R = ParabolicCylinder(t0=p["vertex_t"], x0=x0, R=p["R"])
        cyl_r = ParabolicCylinder(t0=p["vertex_t"], x0=x0, R=p["r"])
        cyl_r2 = ParabolicCylinder(t0=p["vertex_t"], x0=x0, R=p["r"] / 2.0)
        # forcing norm on the outer cylinder's own lattice
        fgrid = SpaceTimeGrid(
            box=Box(lo=x0 - p["R"], hi=x0 + p["R"]),
            h=p["R"] / 16.0,
            t0=cyl_R.t0,
            t1=cyl_R.t1,
            dt=p["R"] ** 2 / 32.0,
        )
        if op.Hbar is not None:
            fgf = GridFunction.from_callable(fgrid, op.Hbar)
            fnorm = f_kappa_norm(fgf, kappa, R0=p["R"] / 2.0)
        else:
            fnorm = 0.0
        coarse = solve(prob, SchemeParams(h=p["h"]))
        fine = solve(prob, SchemeParams(h=p["h"] / 2.0))
        q_c, semi_c, sup_c = _q_value(coarse, kappa, cyl_r, cyl_R, fnorm)
        q_f, _, _ = _q_value(fine, kappa, cyl_r, cyl_R, fnorm)
        q_half, _, _ = _q_value(coarse, kappa, cyl_r2, cyl_R, fnorm)
        return dict(
            name=p["name"],
            d=p["d"],
            Q_coarse=q_c,
            Q_fine=q_f,
            Q_half_radius=q_half,
            refine_ratio=q_f / q_c,
            radius_ratio=q_half / q_c,
            seminorm=semi_c,
            sup_outer=sup_c,
            f_norm=fnorm,
        )

    rows = _pmap(one, probs, cfg["global"]["threads"])
    # the bound is uniform over the operator class, so the gate tracks the
    # family-wide worst case, not each instance separately
    max_c = max(r["Q_coarse"] for r in rows)
    max_f = max(r["Q_fine"] for r in rows)
    max_half = max(r["Q_half_radius"] for r in rows)
    ref_ratio = max_f / max_c
    rad_ratio = max_half / max_c
    ok = 0.5 <= ref_ratio <= 2.0 and 0.5 <= rad_ratio <= 2.0
    return ExperimentReport(
        name="holder",
        passed=ok,
        rows=rows,
        notes={
            "instances": len(rows),
            "family_max_Q": f"{max_c:.5g}",
            "family_refine_ratio": f"{ref_ratio:.5g}",
            "family_radius_ratio": f"{rad_ratio:.5g}",
        },
    )


# ---------------------------------------------------------------------------
# Truncation saturation experiment.


def exp_k_saturation(cfg) -> ExperimentReport:
    """Truncation-level sweep on three instances.

    The gate requires the final gap (largest configured level against
    its double) to vanish to 1e-10 and the solutions to decrease
    monotonically in K.
    """
    sec = cfg["ksat"]
    delta = cfg["global"]["delta"]
    box = Box(lo=[-1.0], hi=[1.0])
    heatF = HomogOperator(root=linear_op([[1.0]]), delta=delta)

    def varc(t, X):
        return (1.0 + 0.3 * np.sin(3.0 * np.asarray(X, float)[..., 0]))[..., None, None]

    instances = [
        ("heat", FullOperator(F=heatF), lambda t, X: np.sin(np.pi * X[..., 0])),
        (
            "varcoef",
            FullOperator(F=HomogOperator(root=linear_op(spatial_only(varc)), delta=delta)),
            lambda t, X: np.cos(np.pi * X[..., 0]) + 0.3 * X[..., 0],
        ),
        (
            "bellman",
            FullOperator(
                F=HomogOperator(
                    root=max_op(linear_op([[0.8]]), linear_op([[1.2]])), delta=delta
                )
            ),
            # curvature stays near pi^2 so the largest configured level
            # clears the extremal branch with margin
            lambda t, X: np.sin(np.pi * X[..., 0]) - 0.2 * X[..., 0],
        ),
    ]
    scheme = SchemeParams(h=float(sec["h"]))
    Ks = [float(k) for k in sec["K_values"]]

    def one(item):
        name, op, g = item
        prob = ProblemSpec(
            box=box,
            T=float(sec["T"]),
            operator=op,
            cutoff=CutoffSpec(delta_hat=delta / 8.0, K=Ks[-1]),
            boundary=g,
        )
        rep = k_saturation(prob, scheme, Ks)
        mono_ok = True
        for a, b in zip(rep.solutions[1:], rep.solutions[:-1]):
            okc, _ = comparison_check(a, b, tol=1e-12)
            mono_ok = mono_ok and okc
        return name, rep, mono_ok

    results = _pmap(one, instances, cfg["global"]["threads"])
    rows = []
    ok = True
    for name, rep, mono_ok in results:
        ok = ok and rep.saturated and mono_ok
        for K, gap in zip(rep.K_values[:-1], rep.sup_gaps):
            rows.append(
                dict(
                    instance=name,
                    K=K,
                    gap_to_next=gap,
                    saturated=rep.saturated,
                    monotone_in_K=mono_ok,
                )
            )
    return ExperimentReport(
        name="ksat", passed=ok, rows=rows, notes={"tolerance": 1e-10}
    )


# ---------------------------------------------------------------------------
# Two-player demonstration.


def exp_isaacs_demo(cfg) -> ExperimentReport:
    """Order relations of a 2x2 two-player family.

    Checks pointwise fold duality on sampled jets, the solution-level
    inequality between the two fold orders, the sandwich by frozen-row
    and frozen-column solves, and that a 1x1 game reproduces the direct
    linear solve bit for bit.
    """
    sec = cfg["isaacs"]
    delta = cfg["global"]["delta"]
    drift = float(sec["drift"])
    rng = np.random.default_rng(cfg["global"]["seed"] + 5)
    box = Box(lo=[-1.0], hi=[1.0])
    T = float(sec["T"])
    # crossing pattern: no pure saddle at generic jets, so the two fold
    # orders genuinely differ and the order checks are not vacuous
    cmat = [[0.9, 1.1], [1.1, 0.9]]
    smat = [[1.0, -1.0], [-1.0, 1.0]]

    def low(s):
        return lambda u0, grad, t, X: s * drift * grad[..., 0]

    diff = tuple(tuple([[cmat[i][j]]] for j in range(2)) for i in range(2))
    lows = tuple(tuple(low(smat[i][j]) for j in range(2)) for i in range(2))
    spec = IsaacsSpec(
        diffusions=diff,
        delta=delta,
        lower_order=lows,
        K0=drift,
        grad_lipschitz=drift,
    )
    op_lo = build_isaacs(spec, order="supinf")
    op_hi = build_isaacs(spec, order="infsup")
    g = lambda t, X: np.sin(np.pi * X[..., 0]) + 0.2 * X[..., 0]
    cut = CutoffSpec(delta_hat=delta / 8.0, K=150.0)
    scheme = SchemeParams(h=float(sec["h"]))

    def prob(op):
        return ProblemSpec(box=box, T=T, operator=op, cutoff=cut, boundary=g)

    # pointwise duality on sampled jets
    dual_viol = 0.0
    for _ in range(200):
        jet = Jet(
            value=float(rng.normal()),
            gradient=rng.normal(size=1),
            hessian=[[float(rng.normal(scale=2.0))]],
        )
        t = float(rng.uniform(0.0, T))
        x = rng.uniform(-1.0, 1.0, size=1)
        dual_viol = max(dual_viol, eval_H(op_lo, jet, t, x) - eval_H(op_hi, jet, t, x))

    sol_lo = solve(prob(op_lo), scheme)
    sol_hi = solve(prob(op_hi), scheme)
    order_ok, order_viol = comparison_check(sol_lo, sol_hi, tol=1e-10)
    strict_gap = float(np.max(sol_hi.v.values - sol_lo.v.values))

    # sandwich: frozen-row solves stay below, frozen-column above
    sandwich_viol = 0.0
    for i in range(2):
        rspec = IsaacsSpec(
            diffusions=(diff[i],),
            delta=delta,
            lower_order=(lows[i],),
            K0=drift,
            grad_lipschitz=drift,
        )
        sol_row = solve(prob(build_isaacs(rspec)), scheme)
        okr, violr = comparison_check(sol_row, sol_lo, tol=1e-10)
        sandwich_viol = max(sandwich_viol, violr)
    for j in range(2):
        cspec = IsaacsSpec(
            diffusions=tuple((diff[i][j],) for i in range(2)),
            delta=delta,
            lower_order=tuple((lows[i][j],) for i in range(2)),
            K0=drift,
            grad_lipschitz=drift,
        )
        sol_col = solve(prob(build_isaacs(cspec)), scheme)
        okc, violc = comparison_check(sol_lo, sol_col, tol=1e-10)
        sandwich_viol = max(sandwich_viol, violc)

    # singleton game == direct linear solve, bitwise
    sspec = IsaacsSpec(diffusions=((diff[0][0],),), delta=delta)
    sol_game = solve(prob(build_isaacs(sspec)), scheme)
    op_direct = FullOperator(
        F=HomogOperator(root=linear_op(diff[0][0]), delta=delta)
    )
    sol_direct = solve(prob(op_direct), scheme)
    singleton_gap = float(np.max(np.abs(sol_game.v.values - sol_direct.v.values)))

    ok = (
        dual_viol <= 1e-12
        and order_ok
        and sandwich_viol <= 1e-10
        and singleton_gap == 0.0
    )
    rows = [
        dict(check="pointwise_duality", value=dual_viol, bound=1e-12),
        dict(check="fold_order_gap", value=order_viol, bound=1e-10),
        dict(check="largest_strict_gap", value=strict_gap, bound=np.inf),
        dict(check="sandwich", value=sandwich_viol, bound=1e-10),
        dict(check="singleton_bitwise", value=singleton_gap, bound=0.0),
    ]
    return ExperimentReport(
        name="isaacs",
        passed=ok,
        rows=rows,
        notes={"controls": "2x2", "drift": drift},
    )


# ---------------------------------------------------------------------------
# Mollification experiment.


def exp_mollify(cfg) -> ExperimentReport:
    """Certificate stability across the smoothing-scale sweep.

    For each rough datum the lattice certificates n1, n2 must stay
    within a factor 2 across the eps ladder.  The barrier constant is
    gated after dividing out eps^(2-kappa): the raw minimal constant
    decays at exactly that rate, because the comparison weight at the
    cylinder core grows like eps^(kappa-2) while the distance between
    the marched solution and the datum is a fixed function of the
    datum alone.  The eps-stable quantity is the prefactor.
    """
    sec = cfg["moll"]
    delta = cfg["global"]["delta"]
    eps_values = [float(e) for e in sec["eps_values"]]
    data = [
        ("kink", 1.0, lambda t, X: np.abs(X[..., 0])),
        ("power15", 1.5, lambda t, X: np.abs(X[..., 0]) ** 1.5),
    ]
    box = Box(lo=[-1.0], hi=[1.0])
    cut = CutoffSpec(delta_hat=delta / 8.0, K=float(sec["barrier_K"]))
    F = HomogOperator(root=linear_op([[1.0]]), delta=delta)
    scheme = SchemeParams(h=float(sec["barrier_h"]))
    cyl = ParabolicCylinder(t0=0.0, x0=[0.0], R=1.0)

    rows = []
    ok = True
    for name, kappa, fn in data:
        prob = ProblemSpec(
            box=box, T=1.0, operator=FullOperator(F=F), cutoff=cut, boundary=fn
        )
        sol = solve(prob, scheme)

        def one(eps):
            # resolution proportional to eps keeps every certificate
            # scale-invariant; the floor only guards abusive configs
            h_eps = max(eps / 8.0, 1.0 / 512.0)
            n = int(round(2.0 / h_eps))
            h_eps = 2.0 / n
            dt_eps = eps * eps / 4.0
            nt = int(round(1.0 / dt_eps))
            grid = SpaceTimeGrid(box=box, h=h_eps, t0=0.0, t1=1.0, dt=1.0 / nt)
            gf = GridFunction.from_callable(grid, fn)
            res = smooth(gf, MollifierSpec(eps=eps, kappa=kappa))
            geps = resample(res.smoothed, sol.v.grid)
            bar = barrier_check(sol.v, geps, cyl, MollifierSpec(eps=eps, kappa=kappa))
            return eps, res, bar

        results = _pmap(one, eps_values, cfg["global"]["threads"])
        n1s = np.array([r.n1 for _, r, _ in results])
        n2s = np.array([r.n2 for _, r, _ in results])
        Ns = np.array(
            [b.N / eps ** (2.0 - kappa) for eps, _, b in results]
        )
        spread1 = float(n1s.max() / n1s.min())
        spread2 = float(n2s.max() / n2s.min())
        spreadN = float(Ns.max() / Ns.min())
        datum_ok = spread1 <= 2.0 and spread2 <= 2.0 and spreadN <= 2.0
        ok = ok and datum_ok
        for (eps, res, bar), scaled in zip(results, Ns):
            rows.append(
                dict(
                    datum=name,
                    kappa=kappa,
                    eps=eps,
                    n1=res.n1,
                    n2=res.n2,
                    third_order=res.third_order,
                    barrier_N=bar.N,
                    barrier_N_scaled=float(scaled),
                    ok=datum_ok,
                )
            )
    return ExperimentReport(
        name="moll",
        passed=ok,
        rows=rows,
        notes={"eps_count": len(eps_values)},
    )


# ---------------------------------------------------------------------------
# Plain solve (artifact-producing subcommand).


def _catalog_heat(delta):
    return FullOperator(F=HomogOperator(root=linear_op([[1.0]]), delta=delta))


def _catalog_bellman(delta):
    return FullOperator(
        F=HomogOperator(
            root=max_op(linear_op([[0.8]]), linear_op([[1.2]])), delta=delta
        )
    )


def _catalog_varcoef(delta):
    def varc(t, X):
        return (1.0 + 0.3 * np.sin(3.0 * np.asarray(X, float)[..., 0]))[..., None, None]

    return FullOperator(
        F=HomogOperator(root=linear_op(spatial_only(varc)), delta=delta)
    )


def _catalog_isaacs(delta):
    spec = IsaacsSpec(
        diffusions=(([[0.8]], [[1.05]]), ([[0.95]], [[1.2]])), delta=delta
    )
    return build_isaacs(spec)


_SOLVE_CATALOG = {
    "heat": _catalog_heat,
    "bellman": _catalog_bellman,
    "varcoef": _catalog_varcoef,
    "isaacs": _catalog_isaacs,
}


def exp_solve(cfg) -> ExperimentReport:
    """Solve one catalog problem and write the dump and CSV artifacts.

    Gate: operator admissibility validators pass, the boundary identity
    holds exactly on the stored lattice, and the dump round-trips.
    """
    sec = cfg["solve"]
    gsec = cfg["global"]
    delta = gsec["delta"]
    op = _SOLVE_CATALOG[sec["problem"]](delta)
    box = Box(lo=[-1.0], hi=[1.0])
    g = lambda t, X: np.sin(np.pi * X[..., 0]) + 0.1 * X[..., 0]
    prob = ProblemSpec(
        box=box,
        T=float(sec["T"]),
        operator=op,
        cutoff=CutoffSpec(delta_hat=delta / 8.0, K=float(sec["K"])),
        boundary=g,
    )
    hom = validate_homogeneous(op.F, box=box, n=50, seed=gsec["seed"])
    grow = validate_growth(op, box)
    sol = solve(prob, SchemeParams(h=float(sec["h"])))
    grid = sol.v.grid
    X = grid.coords()
    bvals = np.stack([np.asarray(g(t, X), float) for t in grid.times])
    bmask = np.zeros(grid.nx, bool)
    bmask[0] = bmask[-1] = True
    bident = float(np.max(np.abs((sol.v.values - bvals)[:, bmask])))
    out_dir = gsec["out"]
    os.makedirs(out_dir, exist_ok=True)
    dump_path = os.path.join(out_dir, sec["dump"])
    csv_path = os.path.join(out_dir, sec["csv"])
    write_grid_dump(sol, dump_path)
    vals, _meta = read_grid_dump(dump_path)
    round_ok = bool(np.array_equal(vals, sol.v.values))
    export_solution_csv(sol, csv_path)
    ok = hom.ok and grow and bident == 0.0 and round_ok
    rows = [
        dict(
            problem=sec["problem"],
            steps=sol.n_steps,
            stride=sol.stride,
            stored_slices=grid.nt + 1,
            homogeneity_ok=hom.ok,
            growth_ok=grow,
            boundary_identity=bident,
            dump_roundtrip=round_ok,
            sup_abs=float(np.max(np.abs(sol.v.values))),
            ok=ok,
        )
    ]
    return ExperimentReport(
        name="solve",
        passed=ok,
        rows=rows,
        notes={"dump": dump_path, "csv": csv_path},
    )


EXPERIMENTS = {
    "represent": exp_representation,
    "freeze": exp_freezing,
    "affine": exp_affine_approx,
    "holder": exp_interior_holder,
    "ksat": exp_k_saturation,
    "isaacs": exp_isaacs_demo,
    "moll": exp_mollify,
    "solve": exp_solve,
}


def run_experiments(names, cfg):
    """Run the named experiments, write their CSVs, return the reports."""
    out_dir = cfg["global"]["out"]
    os.makedirs(out_dir, exist_ok=True)
    reports = []
    for name in names:
        rep = EXPERIMENTS[name](cfg)
        rep.to_csv(os.path.join(out_dir, f"{name}.csv"))
        reports.append(rep)
    return reports
