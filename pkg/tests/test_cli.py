"""Config parsing, CSV emission, exit codes, determinism."""

import math
import random

import numpy as np
import pytest

from photongun import ConfigError, RAD_NS_PER_MHZ, canonical_text, parse_config
from photongun.cli import main

ENTANGLER = """
[model]
kind = four-level
g_mhz = 45
kappa_mhz = 45
gamma_mhz = 4.5

[pulse]
shape = sin2
omega0_mhz = 45
t0_ns = 210
"""

RAMAN = """
[model]
kind = three-level-raman
g_mhz = 63.2455532034
kappa_mhz = 20
gamma_mhz = 20
delta_over_gamma = 50
delta_raman_over_gamma = -0.3

[pulse]
shape = constant
omega0_mhz = 200
t0_ns = inf

[integration]
t_final_ns = 60
"""


# ------------------------------------------------------------- parse_config


def test_parse_reference_config():
    run = parse_config(ENTANGLER)
    model = run.model
    assert model.kind == "four-level"
    assert model.g == pytest.approx(45.0 * RAD_NS_PER_MHZ, rel=1e-15)
    assert model.kappa == pytest.approx(45.0 * RAD_NS_PER_MHZ, rel=1e-15)
    assert model.gamma == pytest.approx(4.5 * RAD_NS_PER_MHZ, rel=1e-15)
    assert model.pulse.shape == "sin2"
    assert model.pulse.omega0 == pytest.approx(45.0 * RAD_NS_PER_MHZ, rel=1e-15)
    assert model.pulse.t0 == 210.0
    # defaults
    assert model.beta == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    assert model.n_max == 1
    assert run.integration.t_final == pytest.approx(630.0)
    assert run.integration.dt <= 0.05 / model.max_rate()


def test_parse_raman_config():
    run = parse_config(RAMAN)
    assert run.model.delta == pytest.approx(50.0 * run.model.gamma)
    assert run.model.delta_raman == pytest.approx(-0.3 * run.model.gamma)
    assert math.isinf(run.model.pulse.t0)
    assert run.integration.t_final == 60.0


def test_missing_section_is_named():
    with pytest.raises(ConfigError, match=r"\[pulse\]"):
        parse_config("[model]\nkind = four-level\ng_mhz = 1\nkappa_mhz = 1\ngamma_mhz = 1\n")


def test_negative_rate_rejected_with_line():
    bad = ENTANGLER.replace("gamma_mhz = 4.5", "gamma_mhz = -1")
    with pytest.raises(ConfigError, match="gamma_mhz"):
        parse_config(bad)


def test_unknown_key_rejected_with_line():
    bad = ENTANGLER + "\n[integration]\ndt_nss = 0.1\n"
    with pytest.raises(ConfigError, match="dt_nss"):
        parse_config(bad)


def test_duplicate_key_rejected():
    bad = ENTANGLER + "\n[integration]\ndt_ns = 0.1\ndt_ns = 0.2\n"
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(bad)


def test_untruncated_drive_needs_t_final():
    bad = RAMAN.replace("t_final_ns = 60", "")
    with pytest.raises(ConfigError, match="t_final_ns"):
        parse_config(bad)


def test_key_mutation_fuzz_all_rejected():
    """Any misspelled key must fail parsing, never be silently ignored."""
    rng = random.Random(99)
    lines = [ln for ln in ENTANGLER.strip().splitlines()]
    key_lines = [i for i, ln in enumerate(lines) if "=" in ln]
    rejected = 0
    for _ in range(100):
        mutated = list(lines)
        i = rng.choice(key_lines)
        key, _, value = mutated[i].partition("=")
        key = key.strip()
        pos = rng.randrange(len(key))
        replacement = rng.choice("abcdefghijklmnopqrstuvwxyz_")
        new_key = key[:pos] + replacement + key[pos + 1 :]
        if new_key == key:
            new_key = key + "x"
        mutated[i] = f"{new_key} ={value}"
        try:
            parse_config("\n".join(mutated))
        except ConfigError:
            rejected += 1
    assert rejected == 100


def test_round_trip_canonical_text():
    run = parse_config(RAMAN, command="simulate")
    text = canonical_text(run)
    again = parse_config(text, command="simulate")
    assert again.model == run.model
    assert again.integration == run.integration
    assert again.task == run.task


def test_task_section_requires_command():
    doc = ENTANGLER + "\n[task]\nsolver = master\n"
    with pytest.raises(ConfigError):
        parse_config(doc)
    run = parse_config(doc, command="simulate")
    assert run.task["solver"] == "master"
    with pytest.raises(ConfigError):
        parse_config(doc, command="regime")  # solver is not a regime key


# ---------------------------------------------------------------- CLI proper


@pytest.fixture()
def entangler_file(tmp_path):
    path = tmp_path / "entangler.ini"
    path.write_text(ENTANGLER)
    return path


def test_simulate_exit_zero_and_summary(entangler_file, tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["simulate", "--config", str(entangler_file), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert "P_L = 0.4849" in captured.out
    assert out.exists()


def test_simulate_csv_byte_identical(entangler_file, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["simulate", "--config", str(entangler_file), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(entangler_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_csv_final_row_symmetric(entangler_file, tmp_path):
    out = tmp_path / "run.csv"
    main(["simulate", "--config", str(entangler_file), "--out", str(out)])
    header, *rows = out.read_text().strip().splitlines()
    columns = header.split(",")
    last = rows[-1].split(",")
    p_l = float(last[columns.index("P_L")])
    p_r = float(last[columns.index("P_R")])
    assert p_l == pytest.approx(p_r, abs=1e-12)
    assert p_l == pytest.approx(0.49, abs=0.03)


def test_simulate_master_solver(entangler_file, capsys):
    code = main(["simulate", "--config", str(entangler_file), "--solver", "master"])
    captured = capsys.readouterr()
    assert code == 0
    assert "solver: master" in captured.out


def test_simulate_quiet_drive_all_zero_columns(tmp_path):
    quiet = ENTANGLER.replace("omega0_mhz = 45", "omega0_mhz = 0")
    path = tmp_path / "quiet.ini"
    path.write_text(quiet)
    out = tmp_path / "quiet.csv"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    header, *rows = out.read_text().strip().splitlines()
    columns = header.split(",")
    for name in ("P_L", "P_R", "P_spont"):
        idx = columns.index(name)
        assert all(float(row.split(",")[idx]) == 0.0 for row in rows)


def test_bundled_config_resolution(capsys):
    code = main(["regime", "--config", "entangler_default"])
    captured = capsys.readouterr()
    assert code == 0
    assert "cooperativity C = 10" in captured.out


def test_config_error_exit_two(tmp_path, capsys):
    path = tmp_path / "broken.ini"
    path.write_text(ENTANGLER.replace("gamma_mhz = 4.5", "gamma_mhz = -1"))
    assert main(["simulate", "--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_two(capsys):
    assert main(["simulate", "--config", "no-such-config"]) == 2


def test_unknown_subcommand_usage_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", "x"])
    assert exc.value.code == 2


def test_unreliable_run_exit_one(tmp_path, capsys):
    coarse = ENTANGLER + "\n[integration]\ndt_ns = 10\nallow_coarse_dt = true\n"
    path = tmp_path / "coarse.ini"
    path.write_text(coarse)
    code = main(["simulate", "--config", str(path)])
    assert code == 1


def test_sweep_csv_with_hole_exit_one(tmp_path, capsys):
    doc = RAMAN + (
        "\n[task]\nparameters = omega_over_delta\ngrids = 0.0000001,0.3\n"
        "objective = success_rate\n"
    )
    path = tmp_path / "sweep.ini"
    path.write_text(doc)
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", str(path), "--out", str(out)])
    assert code == 1
    text = out.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "omega_over_delta,objective,flag"
    assert len(lines) == 3  # header + both grid points, hole included
    assert "NA" in lines[1]
    assert "UnreliableResultError" in lines[1]
    assert "NA" not in lines[2]


def test_regime_window_report(tmp_path, capsys):
    path = tmp_path / "raman.ini"
    path.write_text(RAMAN)
    assert main(["regime", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "bad_cavity_ok" in out
    assert "Omega0/Delta" in out


def test_optimize_cli(tmp_path, capsys):
    doc = RAMAN + (
        "\n[task]\nfree = omega_over_delta\nbounds = 0.3:0.9\n"
        "objective = success_rate\n"
    )
    path = tmp_path / "opt.ini"
    path.write_text(doc)
    out = tmp_path / "opt.csv"
    code = main(["optimize", "--config", str(path), "--out", str(out)])
    assert code == 0
    header, row = out.read_text().strip().splitlines()
    assert header == "omega_over_delta,objective,evaluations,cycles,converged"
    cells = row.split(",")
    assert 0.3 <= float(cells[0]) <= 0.9
    assert cells[-1] == "true"
