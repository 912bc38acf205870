import io
import json
from fractions import Fraction

import numpy as np
import pytest

from abelprop.cli import (EXIT_CONFIG, EXIT_DIAGNOSTIC, EXIT_OK, EXIT_PIPELINE, main,
                          parse_config, read_csv, roots_report)
from abelprop.exceptions import ConfigError
from abelprop.model import ModelParams
from abelprop.reduction import CubicData
from abelprop.solution import fit_constants

from conftest import DATA

TRIG = str(DATA / "trig.cfg")


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def write_cfg(tmp_path, text, name="s.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def trig_text(**overrides):
    lines = []
    for line in (DATA / "trig.cfg").read_text().splitlines():
        key = line.split("=")[0].strip()
        if key in overrides:
            continue
        lines.append(line)
    lines += [f"{k} = {v}" for k, v in overrides.items() if v is not None]
    return "\n".join(lines) + "\n"


def test_parse_defaults():
    cfg = parse_config(trig_text())
    assert cfg["N"] == 1.0 and cfg["t0"] == 0.0 and cfg["branch"] is None
    assert cfg["tol_hard"] == 1e-6


def test_parse_rational():
    cfg = parse_config(trig_text(x1_0="1/100"), exact=True)
    assert cfg["x1_0"] == Fraction(1, 100)


def test_parse_errors_name_the_key():
    with pytest.raises(ConfigError, match="k1"):
        parse_config("\n".join(l for l in trig_text().splitlines() if not l.startswith("k1")))
    with pytest.raises(ConfigError, match="colour"):
        parse_config(trig_text() + "colour = 3\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(trig_text() + "d1 = 2\n")
    with pytest.raises(ConfigError, match="branch"):
        parse_config(trig_text(branch="x"))


def test_exit_missing_key(tmp_path):
    cfg = write_cfg(tmp_path, "\n".join(l for l in trig_text().splitlines()
                                        if not l.startswith("k1")))
    assert run("solve", "--config", cfg, "--trig")[0] == EXIT_CONFIG


def test_exit_unknown_key(tmp_path):
    cfg = write_cfg(tmp_path, trig_text() + "speed = 1\n")
    assert run("solve", "--config", cfg)[0] == EXIT_CONFIG


def test_exit_missing_file(tmp_path):
    assert run("solve", "--config", str(tmp_path / "nope.cfg"))[0] == EXIT_CONFIG


def test_exit_bad_command():
    assert run("explode", "--config", TRIG)[0] == EXIT_CONFIG


def test_exit_negative_parameter(tmp_path):
    cfg = write_cfg(tmp_path, trig_text(d1=-1))
    assert run("solve", "--config", cfg)[0] == EXIT_CONFIG


def test_roots_without_trig_fails_with_delta1(capsys):
    code, _ = run("roots", "--config", TRIG)
    assert code == EXIT_PIPELINE
    assert "delta1" in capsys.readouterr().err


def test_roots_with_trig(tmp_path):
    code, text = run("roots", "--config", TRIG, "--trig")
    assert code == EXIT_OK
    assert "method = trigonometric" in text and "theta3" in text


def _zero_shift_x2():
    def G(x2):
        p = ModelParams(1, 1, 1, 1, 1, 1, 1, N=0.6 + x2)
        return fit_constants(p, (0.5, x2, 0.1)).G
    lo, hi = 1.7, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (G(mid) > 0) == (G(hi) > 0):
            hi = mid
        else:
            lo = mid
    return lo


def test_exit_zero_shift(tmp_path):
    x2 = _zero_shift_x2()
    text = "\n".join(f"{k} = 1" for k in ("d1", "d2", "d3", "b1", "b2", "k1", "k2"))
    text += f"\nx1_0 = 0.5\nx2_0 = {x2!r}\nx3_0 = 0.1\n"
    cfg = write_cfg(tmp_path, text)
    assert run("solve", "--config", cfg, "--trig", "--out", str(tmp_path))[0] == EXIT_PIPELINE


def test_validate_exit_codes(tmp_path):
    out = str(tmp_path / "v")
    code, text = run("validate", "--config", TRIG, "--trig", "--out", out)
    assert code == EXIT_DIAGNOSTIC
    report = json.loads((tmp_path / "v" / "validate.json").read_text())
    assert {"system", "lienard", "abel", "drift", "deviation"} <= set(report["families"])
    cfg = write_cfg(tmp_path, trig_text(tol_diag="inf"))
    assert run("validate", "--config", cfg, "--trig", "--out", out)[0] == EXIT_OK


def test_solve_outputs(tmp_path):
    code, _ = run("solve", "--config", TRIG, "--trig", "--out", str(tmp_path))
    assert code == EXIT_OK
    header, coef = read_csv(tmp_path / "coefficients.csv")
    assert header == ["n", "x1", "x2", "x3"] and len(coef) == 24
    header, series = read_csv(tmp_path / "series.csv")
    assert header == ["t", "x1", "x2", "x3"] and len(series) == 11
    assert series[0, 1] == pytest.approx(0.002, rel=1e-10)


def test_solve_is_byte_identical(tmp_path):
    run("solve", "--config", TRIG, "--trig", "--out", str(tmp_path / "a"))
    run("solve", "--config", TRIG, "--trig", "--out", str(tmp_path / "b"))
    for name in ("coefficients.csv", "series.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_round_trip(tmp_path):
    run("solve", "--config", TRIG, "--trig", "--out", str(tmp_path))
    _, coef = read_csv(tmp_path / "coefficients.csv")
    from abelprop.solution import solve_series
    from conftest import TRIG_PARAMS, TRIG_STATE
    sol = solve_series(ModelParams(**TRIG_PARAMS), TRIG_STATE, trig_fallback=True)
    assert tuple(coef[:, 1]) == sol.x1_coeffs[:-1]


def test_reference_equilibrium(tmp_path):
    cfg = write_cfg(tmp_path, "\n".join(f"{k} = 1" for k in
                                        ("d1", "d2", "d3", "b1", "b2", "k1", "k2"))
                    + "\nx1_0 = 0\nx2_0 = 0\nx3_0 = 0\nN = 1\nhorizon = 0.1\nstep = 0.01\n")
    assert run("reference", "--config", cfg, "--out", str(tmp_path))[0] == EXIT_OK
    header, rows = read_csv(tmp_path / "reference.csv")
    assert header == ["t", "x1", "x2", "x3", "drift"]
    assert np.all(rows[:, 1:4] == 0) and np.all(rows[:, 4] == -1)


def test_reference_halved_step(tmp_path):
    a = write_cfg(tmp_path, trig_text(step="0.001"), "a.cfg")
    b = write_cfg(tmp_path, trig_text(step="0.0005"), "b.cfg")
    run("reference", "--config", a, "--out", str(tmp_path / "a"))
    run("reference", "--config", b, "--out", str(tmp_path / "b"))
    na = len(read_csv(tmp_path / "a" / "reference.csv")[1])
    nb = len(read_csv(tmp_path / "b" / "reference.csv")[1])
    assert nb - 1 == 2 * (na - 1)


def test_roots_report_double_root():
    lines = roots_report(CubicData(1.0, 0.0, -3.0, 2.0))  # (x-1)^2 (x+2)
    text = "\n".join(lines)
    assert "repeated root: 2-fold" in text
    vals = dict(l.split(" = ")[:2] for l in lines if " = " in l)
    assert abs(float(vals["vieta_sum"].split()[0])) < 1e-12


def test_rational_mode_prints_fractions(tmp_path, monkeypatch):
    monkeypatch.setenv("ABELPROP_RATIONAL", "1")
    code, text = run("roots", "--config", TRIG, "--trig")
    assert code == EXIT_OK
    assert "D = 1/3" in text


def test_compare_file(tmp_path):
    code, text = run("compare", "--config", TRIG, "--trig", "--out", str(tmp_path))
    assert code == EXIT_OK
    header, rows = read_csv(tmp_path / "compare.csv")
    assert header[-1] == "deviation" and len(rows) == 11
    assert "max deviation inside radius" in text


def test_all_ones_rates_leave_the_series_domain(tmp_path, capsys):
    """With every rate 1, E < 0 forces a positive root of P, so some theta_k < 0."""
    text = "\n".join(f"{k} = 1" for k in ("d1", "d2", "d3", "b1", "b2", "k1", "k2"))
    cfg = write_cfg(tmp_path, text + "\nx1_0 = 0.2\nx2_0 = 0.4\nx3_0 = 0.4\n")
    code, _ = run("solve", "--config", cfg, "--trig", "--out", str(tmp_path))
    assert code == EXIT_PIPELINE
    assert "[series]" in capsys.readouterr().err
