import json

import pytest

from lambdasim import cli, config, presets
from lambdasim.initial_states import ConfigurationError

SMALL = """\
[run]
scenario = evolve
name = small
[probe]
kind = coherent
mean = 1  ; weak probe
[coupling]
kind = coherent
mean = 0.5
[truncation]
k_max = 5
m_max = 5
[losses]
r13 = 0.1
r23 = 0.1
[grid]
t_end = 2
dt = 0.01
record_every = 10
[observables]
probes = populations, means, bipartite
snapshots = 1
"""


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def test_preset_list(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig3a_cpt", "fig6_transfer", "fig9_eit", "fig13_losses", "validate_small"):
        assert name in out


@pytest.mark.parametrize("name", presets.names())
def test_every_preset_resolves(name):
    cfg = presets.load(name)
    assert cfg.name == name
    assert config.from_sections(config.read_sections_text(config.to_ini(presets.sections(name)))) == cfg


def test_cpt_preset_losses():
    loss = presets.load("fig3a_cpt").losses
    assert (loss.r13, loss.r23, loss.r12, loss.kappa1, loss.kappa2) == (0.05, 0.05, 0.0, 0.0, 0.0)


def test_eit_preset_grid():
    cfg = presets.load("fig9_eit")
    assert len(cfg.sweep.deltas) == 51 and min(cfg.sweep.deltas) == -10 and max(cfg.sweep.deltas) == 10


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        presets.load("nope")
    assert cli.main(["run", "--preset", "nope"]) == cli.EXIT_CONFIG


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL.replace("r23 = 0.1", "r23 = 0.1\nr99 = 1"))
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG
    assert "r99" in capsys.readouterr().err


def test_missing_required(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL.replace("t_end = 2\n", ""))
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG


def test_missing_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.ini")]) == cli.EXIT_CONFIG


def test_config_and_preset_exclusive(small_ini):
    assert cli.main(["run", str(small_ini), "--preset", "fig12_bipartite"]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("text", ["0:1:0", "1:x:2", "1, 1"])
def test_bad_detunings(text):
    with pytest.raises(ConfigurationError):
        config._deltas(text)


def test_detuning_ranges():
    assert config._deltas("-1:1:0.5, 3") == (-1.0, -0.5, 0.0, 0.5, 1.0, 3.0)


def test_run_writes_files(small_ini, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(small_ini), "-o", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "OK" and not manifest["unreliable"]
    for key in ("version", "config", "diagnostics", "summary", "warnings", "wall_time_s", "files"):
        assert key in manifest
    names = {f["name"] for f in manifest["files"]}
    assert names == {"series.csv", "wkm_t1.csv", "statistics_final.csv"}
    header = (out / "series.csv").read_text().splitlines()[0]
    assert header == "t,trace,O1,O2,O3,N_P,N_C"
    assert not list(out.glob(".*"))


def test_run_is_deterministic(small_ini, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", str(small_ini), "-o", str(a)])
    cli.main(["run", str(small_ini), "-o", str(b)])
    for name in ("series.csv", "wkm_t1.csv", "statistics_final.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_boundary_population_flagged(tmp_path):
    path = tmp_path / "tight.ini"
    path.write_text(SMALL.replace("mean = 1  ; weak probe", "mean = 3")
                    .replace("k_max = 5", "k_max = 3")
                    .replace("[truncation]", "[truncation]\nmax_tail = 0.9"))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "-o", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "UNRELIABLE" and manifest["reasons"]
    assert manifest["warnings"]


def test_validate_command(tmp_path):
    out = tmp_path / "val"
    assert cli.main(["validate", "-o", str(out)]) == 0
    rows = (out / "validation.csv").read_text().splitlines()
    assert len(rows) == 6 and all(r.endswith(",1") for r in rows[1:])


def test_validate_reports_failure(tmp_path):
    sections = presets.sections("validate_small")
    sections["validate"]["channels"] = "dephasing_halved"
    sections["validate"]["tolerance"] = 1e-12
    manifest = cli.execute(config.from_sections(sections), tmp_path)
    assert manifest["status"] == "FAILED"
