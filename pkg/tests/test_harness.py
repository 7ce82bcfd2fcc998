import csv
import json
import struct

import numpy as np
import pytest

from hyperlc import snapshot
from hyperlc.cli import EXIT_CONFIG, EXIT_OK, main
from hyperlc.config import ConfigError, parse_config
from hyperlc.multipliers import Coefficients
from hyperlc.spectral import Grid3
from hyperlc.verification import three_point_order
from hyperlc.timestepper import InitialDataSpec, SchemeConfig, generate_initial_data, run

MINIMAL = """\
[grid]
points_per_axis = 16

[coefficients]
nu1 = 0.7
nu4 = 1.0
nu5 = 0.4

[scheme]
t_end = 0.3
"""


def with_coefficients(nu1, nu4, nu5):
    return MINIMAL.replace("nu1 = 0.7", f"nu1 = {nu1}").replace("nu4 = 1.0", f"nu4 = {nu4}").replace(
        "nu5 = 0.4", f"nu5 = {nu5}")


# -- configuration --------------------------------------------------------------------


def test_minimal_config_fills_defaults_and_echoes_canonically():
    cfg = parse_config(MINIMAL)
    assert cfg.grid.box_length == 1.0
    assert cfg.scheme.dt == pytest.approx(0.5 * cfg.grid.spacing)
    assert cfg.initial.epsilon0 == 1e-3
    echo = cfg.to_toml()
    again = parse_config(echo)
    assert again.to_toml() == echo
    assert "[cross_check]" in echo and "dealias_fraction" in echo


def test_negative_nu4_names_the_violation():
    with pytest.raises(ConfigError, match="ν4>0") as info:
        parse_config(with_coefficients(0.7, -1.0, 0.4))
    assert info.value.line == 6
    assert "ν1>-2(ν4+ν5)" in str(info.value) and "ν5>-ν4" in str(info.value)


def test_boundary_nu1_is_rejected():
    with pytest.raises(ConfigError, match=r"ν1>-2\(ν4\+ν5\) violated") as info:
        parse_config(with_coefficients(-2.8, 1.0, 0.4))
    assert info.value.line == 5


@pytest.mark.parametrize("text, line, token", [
    (MINIMAL + "bogus = 1\n", 11, "scheme.bogus"),
    (MINIMAL.replace("[grid]", "[grid]\nspacing = 2"), 2, "grid.spacing"),
    (MINIMAL + "\n[extras]\nx = 1\n", 12, "extras"),
    (MINIMAL.replace("t_end = 0.3", "t_end = 0.3\ndt = 5.0"), 11, "cfl"),
    (MINIMAL.replace("points_per_axis = 16", "points_per_axis = 15"), 2, "grid"),
    (MINIMAL.replace("points_per_axis = 16", 'points_per_axis = "16"'), 2, "integer"),
    (MINIMAL + "scheme = \"RK4\"\n", 11, "scheme"),
    (MINIMAL.replace("nu1 = 0.7\n", ""), 4, "nu1"),
    ("[grid\n", 1, "malformed"),
])
def test_errors_point_at_the_offending_line(text, line, token):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert token in str(info.value)


def test_three_point_order_removes_a_constant_floor():
    h = np.array([0.1, 0.05, 0.025])
    assert three_point_order(3.0 * h**2 + 4e-4) == pytest.approx(2.0, abs=1e-12)
    assert three_point_order(h**1.5 + 1.0, ratio=2.0) == pytest.approx(1.5, abs=1e-12)
    assert three_point_order([1.0, 2.0, 1.5]) is None


# -- snapshots ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def evolved():
    g = Grid3(16, 1.0)
    c = Coefficients(0.7, 1.0, 0.4)
    s0 = generate_initial_data(InitialDataSpec(1e-2, seed=12), g)
    return run(s0, SchemeConfig(dt=0.1, t_end=0.3), c)[0], c


def test_snapshot_roundtrip_is_bitwise(tmp_path, evolved):
    state, c = evolved
    path = snapshot.save(tmp_path / "s.bin", state, c)
    back, c2 = snapshot.load(path)
    assert c2 == c and back.t == state.t and back.seed == state.seed and back.mean_phi == state.mean_phi
    assert back.grid == state.grid
    for x, y in zip(state.arrays(), back.arrays()):
        assert x.tobytes() == y.tobytes()
    assert snapshot.encode(back, c2) == snapshot.encode(state, c)


def test_snapshot_rejects_bad_input(evolved):
    state, c = evolved
    data = snapshot.encode(state, c)
    assert data.startswith(snapshot.MAGIC)
    bumped = data[:8] + struct.pack("<I", snapshot.VERSION + 1) + data[12:]
    with pytest.raises(snapshot.SnapshotError, match="version"):
        snapshot.decode(bumped)
    with pytest.raises(snapshot.SnapshotError, match="magic"):
        snapshot.decode(b"NOTASNAP" + data[8:])
    with pytest.raises(snapshot.SnapshotError):
        snapshot.decode(data[:-16])


# -- command line ---------------------------------------------------------------------


def write_config(tmp_path, text=MINIMAL):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_cli_bad_config_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, with_coefficients(0.7, -1.0, 0.4))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "ν4>0" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG


def test_cli_verify_operators(tmp_path):
    out = tmp_path / "ops"
    assert main(["verify-operators", "--config", str(write_config(tmp_path)), "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"]
    with open(out / "operators.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["verdict"] == "pass" for r in rows)
    assert parse_config((out / "config.toml").read_text()).coefficients == Coefficients(0.7, 1.0, 0.4)


def test_cli_simulate_writes_artifacts(tmp_path):
    text = MINIMAL.replace("t_end = 0.3", "t_end = 0.3\ndt = 0.1") + "\n[diagnostics]\ncadence = 1\nsnapshot_every = 3\n"
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(write_config(tmp_path, text)), "--out", str(out), "--seed", "4"]) == 0
    for name in ("series.csv", "summary.json", "final.bin", "energy.png", "shells.png", "config.toml"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert all(v["pass"] for v in summary["verdicts"].values())
    assert summary["config"]["initial_data"]["seed"] == 4
    with open(out / "series.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and float(rows[-1]["time"]) == pytest.approx(0.3)
    snaps = sorted(out.glob("snapshot_t*.bin"))
    assert len(snaps) == 2
    final, _ = snapshot.load(out / "final.bin")
    last, _ = snapshot.load(snaps[-1])
    assert np.array_equal(final.flow.v.coeffs, last.flow.v.coeffs)


def test_cli_reruns_are_bitwise_identical(tmp_path):
    text = MINIMAL.replace("t_end = 0.3", "t_end = 0.2\ndt = 0.1") + "\n[diagnostics]\nfigures = false\n"
    cfg = write_config(tmp_path, text)
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for name in ("series.csv", "final.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    # the summaries record their own output directory and must agree everywhere else
    a, b = (json.loads((tmp_path / n / "summary.json").read_text()) for n in ("a", "b"))
    assert a["config"].pop("output") != b["config"].pop("output")
    assert a == b
