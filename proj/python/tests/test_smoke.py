import math
import os
import subprocess

import numpy as np
import pytest

import rotstar


def small_config(**kw):
    c = rotstar.parse_config(
        "gamma = 1.5\nomega2 = rz_gaussian\ns0 = gaussian\nnu = 40\nntheta = 21\nlmax = 10\n"
    )
    for k, v in kw.items():
        setattr(c, k, v)
    return c


def test_lane_emden_closed_form():
    sol = rotstar.solve_lane_emden(1.0)
    assert abs(sol.R0 - math.sqrt(math.pi) / 2) < 1e-9
    k = math.sqrt(4 * math.pi)
    u = 0.3 * sol.R0
    assert sol(u)[0] == pytest.approx(math.sin(k * u) / (k * u), abs=1e-8)


def test_mass_identity():
    lhs, rhs = rotstar.mass_derivative_identity(rotstar.solve_lane_emden(2.0))
    assert lhs == pytest.approx(rhs, rel=1e-5)


def test_config_round_trip_and_mass_critical():
    c = small_config()
    assert rotstar.parse_config(rotstar.serialize_config(c)) == c
    c.gamma = 4.0 / 3.0
    with pytest.raises(rotstar.DomainError, match="mass-critical"):
        rotstar.validate_config(c)
    with pytest.raises(ValueError):
        rotstar.parse_config("colour = blue")


def test_solve_and_diagnostics():
    star = rotstar.Star(small_config())
    r = star.solve(1e-3, 1e-3)
    V, S = r["V"], r["S"]
    assert V.shape == (40, 21)
    assert r["steps"] <= 15
    assert abs(r["mass"] - star.M) <= 1e-8 * star.M
    assert S.min() > 0
    assert r["residuals"]["mass_err"] <= 1e-8 * star.M
    again = star.residuals(V, S, r["alpha"], 1e-3, 1e-3)
    assert again == r["residuals"]
    assert star.poincare_wavre_defect(V, S, 1e-3, 0.0) > 0
    assert star.holder_norm(S - 1.0, k=1.0) > 0
    assert min(star.sigma_min()) > 0

    zero = star.solve(0.0, 0.0)
    assert zero["steps"] == 1
    assert np.all(zero["S"] == 1.0)


def test_bound_is_enforced():
    star = rotstar.Star(small_config())
    with pytest.raises(rotstar.DomainError):
        star.solve(0.5, 0.0)


def test_cli_round_trip(tmp_path):
    out = tmp_path / "run"
    cfg = tmp_path / "star.cfg"
    cfg.write_text(rotstar.serialize_config(small_config()))
    code, stdout, _ = rotstar.run_cli(
        ["solve", "--config", str(cfg), "--kappa", "1e-3", "--mu", "0", "--out", str(out)]
    )
    assert code == 0
    assert '"mass_err"' in stdout
    V = rotstar.load_field(out / "V.csv")
    assert V.shape == (40, 21)
    code, stdout, _ = rotstar.run_cli(["verify", str(out)])
    assert code == 0 and '"pass": true' in stdout
    assert rotstar.run_cli(["solve", "--gamma", "1.3333333"])[0] == 2
    assert rotstar.run_cli(["twirl"])[0] == 2


@pytest.mark.skipif("ROTSTAR_CLI" not in os.environ, reason="executable path not provided")
def test_executable():
    p = subprocess.run(
        [os.environ["ROTSTAR_CLI"], "lane-emden", "--gamma", "1.5"], capture_output=True, text=True
    )
    assert p.returncode == 0
    assert p.stdout.splitlines()[0] == "u,V0,dV0"
