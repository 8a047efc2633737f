import csv
import json
from types import SimpleNamespace

import pytest

from degencft import cli


def test_parse_config_text():
    text = """
    # surface
    cutoff = 3.5
    germ = exp:0.2   # trailing comment
    w = -0.6 + 0.1j
    schedule = 2, 1.5, 1
    csv = yes
    """
    vals = cli.parse_config_text(text)
    assert vals == {"cutoff": 3.5, "germ": "exp:0.2", "w": complex(-0.6, 0.1),
                    "schedule": (2.0, 1.5, 1.0), "csv": True}


@pytest.mark.parametrize("text,fragment", [
    ("cutoff = 4\nbogus = 1\n", "cfg:2: unknown field 'bogus'"),
    ("\n\nband 16\n", "cfg:3: expected 'key = value'"),
    ("band = sixteen\n", "cfg:1: field 'band'"),
])
def test_config_errors_name_line_and_field(text, fragment):
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config_text(text, "cfg")
    assert fragment in str(err.value)


@pytest.mark.parametrize("kw,field", [
    ({"cutoff": 2.3}, "cutoff"),
    ({"cutoff": 4, "band": 6}, "band"),
    ({"schedule": (2.0, 1.5)}, "schedule"),
    ({"schedule": (1.5, 2.0, 1.0)}, "schedule"),
    ({"jobs": 0}, "jobs"),
])
def test_validate(kw, field):
    with pytest.raises(cli.ConfigError, match=field):
        cli.ExperimentConfig(**kw).validate()


def test_digest_ignores_output_plumbing():
    a = cli.ExperimentConfig()
    b = cli.ExperimentConfig(out="elsewhere", jobs=4, csv=True)
    c = cli.ExperimentConfig(cutoff=3.0)
    assert a.digest() == b.digest() != c.digest()
    assert len(a.digest()) == 40


def test_command_line_overrides_config_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("cutoff = 3\nt = 0.7\n")
    args = SimpleNamespace(config=str(cfg_file), cutoff=2.5, t=None)
    cfg = cli.build_config(args)
    assert cfg.cutoff == 2.5 and cfg.t == 0.7


def test_record_pass_logic():
    assert cli.Record("x", "a", 1e-12, 1e-10, None).passed is True
    assert cli.Record("x", "a", [1e-12, 1e-3], 1e-10, None).passed is False
    assert cli.Record("x", "a", 5.0, None, None).passed is None


def _run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path)])


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path / "cache"))
    assert _run(tmp_path / "a", "verify-car", "--cutoff", "2", "--band", "4") == 0
    assert _run(tmp_path / "b", "verify-car", "--cutoff", "2", "--band", "4") == 0
    ra = (tmp_path / "a" / "verify-car.json").read_bytes()
    assert ra == (tmp_path / "b" / "verify-car.json").read_bytes()
    body = json.loads(ra)
    assert body["schema"] == cli.SCHEMA and body["verdict"] == "pass"
    assert all("wall" not in r for r in body["records"])
    assert (tmp_path / "a" / "verify-car.timing.json").exists()


def test_csv_tables(tmp_path):
    assert _run(tmp_path, "qei", "--cutoff", "2", "--band", "4", "--csv") == 0
    with open(tmp_path / "qei_spectrum.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["cutoff", "min_eigenvalue", "vacuum_overlap"]
    assert len(rows) > 1


def test_pants_uses_cache(tmp_path, monkeypatch):
    cache = tmp_path / "cache"
    monkeypatch.setenv(cli.CACHE_ENV, str(cache))
    argv = ("pants", "--cutoff", "3", "--band", "8", "--w", "-0.7")
    assert _run(tmp_path / "r1", *argv) == 0
    stored = sorted(p.name for p in cache.iterdir())
    assert stored
    assert _run(tmp_path / "r2", *argv) == 0
    assert sorted(p.name for p in cache.iterdir()) == stored
    assert (tmp_path / "r1" / "pants.json").read_bytes() == (tmp_path / "r2" / "pants.json").read_bytes()


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("cutoff = 4\nnoise\n")
    assert cli.main(["verify-car", "--config", str(bad)]) == 2
    assert "bad.cfg:2" in capsys.readouterr().err


def test_exit_code_capacity(tmp_path, capsys):
    assert _run(tmp_path, "verify-car", "--cutoff", "60", "--band", "120") == 3
    assert "capacity" in capsys.readouterr().err
