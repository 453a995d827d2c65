"""Config resolution, report format, CLI exit codes, dilation invariance.

The dilation tests exercise the scale structure end to end: shrinking a
problem by s = 2 (x -> x/2, t -> t/4, K -> 4K, h -> h/2) reproduces the
marching arithmetic bit for bit because every rescaling is a power of
two, so the normalized interior quotient Q and the freezing distance E
must come back unchanged up to floating-point noise in the final power
evaluations.
"""

import numpy as np
import pytest

from isaacslab.cli import main as cli_main
from isaacslab.core import Box, ParabolicCylinder, cylinder_nodes
from isaacslab.harness import (
    DEFAULTS,
    ConfigError,
    ExperimentReport,
    exp_representation,
    load_config,
)
from isaacslab.norms import holder_high
from isaacslab.operators import CutoffSpec, FullOperator, HomogOperator, linear_op
from isaacslab.solver import (
    ProblemSpec,
    SchemeParams,
    solve,
    solve_frozen,
    spatial_only,
)


def test_defaults_and_isolation():
    cfg = load_config(env={})
    assert cfg["global"]["delta"] == 0.5
    assert cfg["solve"]["problem"] == "heat"
    cfg["global"]["delta"] = 0.9
    assert DEFAULTS["global"]["delta"] == 0.5


def test_toml_file_layering(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text("[ksat]\nK_values = [1.0, 2.0, 4.0]\n\n[global]\nseed = 7\n")
    cfg = load_config(str(p), env={})
    assert cfg["ksat"]["K_values"] == [1.0, 2.0, 4.0]
    assert cfg["global"]["seed"] == 7
    # untouched sections keep their defaults
    assert cfg["solve"]["h"] == DEFAULTS["solve"]["h"]


def test_toml_file_rejections(tmp_path):
    cases = {
        "bad_section.toml": "[bogus]\nx = 1\n",
        "bad_key.toml": "[global]\nbogus = 1\n",
        "top_level.toml": "x = 1\n",
        "malformed.toml": "not toml [",
    }
    for name, text in cases.items():
        p = tmp_path / name
        p.write_text(text)
        with pytest.raises(ConfigError):
            load_config(str(p), env={})
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"), env={})


def test_env_overrides_typed_and_case_insensitive():
    cfg = load_config(
        env={
            "ISAACSLAB_GLOBAL_SEED": "7",
            "ISAACSLAB_KSAT_K_VALUES": "[1.0, 2.0]",
            "PATH": "ignored",
        }
    )
    assert cfg["global"]["seed"] == 7
    assert cfg["ksat"]["K_values"] == [1.0, 2.0]
    with pytest.raises(ConfigError):
        load_config(env={"ISAACSLAB_GLOBAL_NOPE": "1"})
    with pytest.raises(ConfigError):
        load_config(env={"ISAACSLAB_BOGUS_KEY": "1"})


def test_value_validation():
    bad = [
        {"ISAACSLAB_GLOBAL_DELTA": "1.5"},
        {"ISAACSLAB_GLOBAL_THREADS": "0"},
        {"ISAACSLAB_FREEZE_AMPLITUDES": "[0.1, 0.2]"},
        {"ISAACSLAB_HOLDER_KAPPA": "1.9"},
        {"ISAACSLAB_SOLVE_PROBLEM": "'bogus'"},
    ]
    for env in bad:
        with pytest.raises(ConfigError):
            load_config(env=env)


def test_report_csv_format(tmp_path):
    rep = ExperimentReport(
        name="demo", passed=True, rows=[dict(a=1, b=0.5)], notes={"k": "v"}
    )
    path = tmp_path / "demo.csv"
    rep.to_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "# isaacslab-report v1"
    assert lines[1] == "# experiment: demo"
    assert lines[2] == "# passed: true"
    assert lines[3] == "# k: v"
    assert lines[4] == "a,b"
    assert lines[5] == "1,0.5"


def _small_represent_cfg():
    cfg = load_config(env={})
    cfg["represent"].update(
        deltas=[0.5], n_alpha=16, n_beta=8, n_recon=10, n_stability=8
    )
    return cfg


def test_representation_small_and_deterministic():
    cfg = _small_represent_cfg()
    r1 = exp_representation(cfg)
    r2 = exp_representation(cfg)
    assert r1.passed
    assert r1.notes == {"cases": 2}
    assert r1.rows == r2.rows


def _shrink_represent(monkeypatch):
    monkeypatch.setenv("ISAACSLAB_REPRESENT_DELTAS", "[0.5]")
    monkeypatch.setenv("ISAACSLAB_REPRESENT_N_ALPHA", "16")
    monkeypatch.setenv("ISAACSLAB_REPRESENT_N_BETA", "8")
    monkeypatch.setenv("ISAACSLAB_REPRESENT_N_RECON", "10")
    monkeypatch.setenv("ISAACSLAB_REPRESENT_N_STABILITY", "8")


def test_cli_pass_writes_report(tmp_path, monkeypatch, capsys):
    _shrink_represent(monkeypatch)
    rc = cli_main(["represent", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("PASS represent")
    report = (tmp_path / "represent.csv").read_text().splitlines()
    assert report[0] == "# isaacslab-report v1"


def test_cli_config_error_exit_2(tmp_path, monkeypatch, capsys):
    rc = cli_main(["represent", "--config", str(tmp_path / "nope.toml")])
    assert rc == 2
    assert "config error" in capsys.readouterr().err
    monkeypatch.setenv("ISAACSLAB_BOGUS_KEY", "1")
    assert cli_main(["represent", "--out", str(tmp_path)]) == 2


def test_cli_gate_failure_exit_3(tmp_path, monkeypatch, capsys):
    # levels far below saturation leave a visible truncation gap
    monkeypatch.setenv("ISAACSLAB_KSAT_K_VALUES", "[0.0, 1.0]")
    rc = cli_main(["ksat", "--out", str(tmp_path)])
    assert rc == 3
    assert "FAIL ksat" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# Parabolic dilation invariance of the measured quantities.


def _q(sol, kappa, cyl_r, cyl_R):
    semi = holder_high(sol.v, kappa, region=cyl_r)
    mask = cylinder_nodes(sol.v.grid, cyl_R)
    supv = float(np.max(np.abs(sol.v.values[mask])))
    return semi.value / ((cyl_R.R - cyl_r.R) ** (-kappa) * supv)


def test_interior_quotient_dilation_invariant():
    delta, kappa = 0.5, 1.2
    K, T, h = 200.0, 0.2, 1.0 / 16
    cut = CutoffSpec(delta_hat=delta / 8.0, K=K)
    F = HomogOperator(root=linear_op([[1.0]]), delta=delta)

    def g(t, X):
        return np.cos(2.0 * X[..., 0]) * (1.0 + 0.25 * t)

    prob = ProblemSpec(
        box=Box(lo=[-0.75], hi=[0.75]), T=T, operator=FullOperator(F=F),
        cutoff=cut, boundary=g,
    )
    sol = solve(prob, SchemeParams(h=h))
    q = _q(
        sol, kappa,
        ParabolicCylinder(t0=0.01, x0=[0.0], R=0.2),
        ParabolicCylinder(t0=0.01, x0=[0.0], R=0.4),
    )

    # shrink by s = 2: the truncation level scales like a Hessian, s^2 K
    cut2 = CutoffSpec(delta_hat=delta / 8.0, K=4.0 * K)
    prob2 = ProblemSpec(
        box=Box(lo=[-0.375], hi=[0.375]), T=T / 4.0, operator=FullOperator(F=F),
        cutoff=cut2, boundary=lambda t, X: g(4.0 * t, 2.0 * X),
    )
    sol2 = solve(prob2, SchemeParams(h=h / 2.0))
    q2 = _q(
        sol2, kappa,
        ParabolicCylinder(t0=0.0025, x0=[0.0], R=0.1),
        ParabolicCylinder(t0=0.0025, x0=[0.0], R=0.2),
    )
    assert sol2.n_steps == sol.n_steps
    assert q > 0
    assert abs(q2 - q) <= 1e-8 * max(1.0, q)


def test_freezing_distance_dilation_invariant():
    delta = 0.5

    def striped(t, X):
        s = np.sign(np.sin(8.0 * np.pi * np.asarray(X, float)[..., 0]))
        return (1.25 + 0.5 * s)[..., None, None]

    def make(box, T, K, coef, g, h):
        F = HomogOperator(root=linear_op(spatial_only(coef)), delta=delta)
        prob = ProblemSpec(
            box=box, T=T, operator=FullOperator(F=F),
            cutoff=CutoffSpec(delta_hat=delta / 8.0, K=K), boundary=g,
        )
        scheme = SchemeParams(h=h)
        rough = solve(prob, scheme)
        frozen = solve_frozen(prob, R=(box.hi[0] - box.lo[0]) / 2.0, scheme=scheme)
        return float(np.max(np.abs(rough.v.values - frozen.v.values)))

    g = lambda t, X: np.sin(np.pi * X[..., 0]) * (1.0 + 0.5 * t)
    E = make(Box(lo=[-0.5], hi=[0.5]), 0.25, 50.0, striped, g, 1.0 / 16)
    E2 = make(
        Box(lo=[-0.25], hi=[0.25]), 0.0625, 200.0,
        lambda t, X: striped(4.0 * t, 2.0 * np.asarray(X, float)),
        lambda t, X: g(4.0 * t, 2.0 * X),
        1.0 / 32,
    )
    assert E > 1e-4
    assert abs(E - E2) <= 1e-8
