import json

import pytest

from dnmaps.cli import main
from dnmaps.errors import InvalidConfig
from dnmaps.experiments import (load_config, parse_config, render_report, resolve_threads,
                                run_experiment, write_report)

SMALL_DOUBLE = {"experiment": "double-symmetry", "n_boundary": 64, "seed": 3,
                "surfaces": [{"kind": "disk"}, {"kind": "torus", "resolution": 24}],
                "green_pairs": 2}
SMALL_SWEEP = {"experiment": "instability", "n_boundary": 128, "base": {"kind": "disk"},
               "handle": {"site_a": [-0.45, 0], "site_b": [0.45, 0], "cyl_len": 0.5},
               "eps": [0.2, 0.1]}


def _write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


@pytest.mark.parametrize("doc, fragment", [
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "genus"}, "surfaces"),
    ({"experiment": "genus", "surfaces": [{"kind": "disk"}], "n_boundary": 100}, "power of two"),
    ({**SMALL_SWEEP, "eps": [0.1, 0.2]}, "strictly decreasing"),
    ({**SMALL_SWEEP, "handle": {"site_a": [0, 0], "site_b": [1, 0]}}, "cyl_len"),
    ({"experiment": "genus", "surfaces": [{"kind": "disk"}], "extra": 1}, "extra"),
    ({"experiment": "genus", "surfaces": [{"kind": "disk"}],
      "tolerances": {"gap_factor": 0.5}}, "gap_factor"),
])
def test_schema_diagnostics(doc, fragment):
    with pytest.raises(InvalidConfig, match=fragment):
        parse_config(doc)


def test_shipped_configs_parse():
    for name in ("genus", "instability", "double_symmetry"):
        cfg = load_config(f"configs/{name}.json")
        assert cfg.n_boundary == 256


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("DNMAPS_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("DNMAPS_THREADS", "3")
    assert resolve_threads(None) == 3 and resolve_threads(2) == 2
    with pytest.raises(InvalidConfig):
        resolve_threads(0)


def test_double_symmetry_small(tmp_path):
    report = run_experiment(parse_config(SMALL_DOUBLE), 1)
    assert report.passed, render_report(json.loads(report.to_json()))
    paths = write_report(report, tmp_path)
    assert paths["json"].exists() and paths["csv"].exists()


def test_report_independent_of_thread_count():
    cfg = parse_config(SMALL_DOUBLE)
    a = run_experiment(cfg, 1).to_json().replace('"threads": 1', "")
    b = run_experiment(cfg, 2).to_json().replace('"threads": 2', "")
    assert a == b


def test_instability_small():
    report = run_experiment(parse_config(SMALL_SWEEP), 1)
    assert report.passed
    d = [r["d_eps"] for r in report.rows]
    assert d[0] > d[1]


# -- command line -------------------------------------------------------------

def test_cli_help_and_usage_errors(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 2
    assert main(["experiment", "run"]) == 2


def test_cli_missing_and_invalid_config(tmp_path, capsys):
    assert main(["experiment", "run", str(tmp_path / "missing.json")]) == 2
    bad = _write(tmp_path, {**SMALL_SWEEP, "eps": [0.1, -1]})
    assert main(["experiment", "run", str(bad)]) == 2
    assert "eps" in capsys.readouterr().err


def test_cli_experiment_and_render(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_DOUBLE)
    out = tmp_path / "out"
    assert main(["experiment", "run", str(cfg), "--out", str(out), "--threads", "1"]) == 0
    first = (out / "double-symmetry.json").read_text()
    assert main(["experiment", "run", str(cfg), "--out", str(out)]) == 0
    assert (out / "double-symmetry.json").read_text() == first
    assert main(["report", "render", str(out / "double-symmetry.json")]) == 0
    assert "result: PASS" in capsys.readouterr().out
    assert main(["report", "render", str(tmp_path / "none.json")]) == 2


def test_cli_seed_override_changes_sources(tmp_path):
    cfg = _write(tmp_path, SMALL_DOUBLE)
    main(["--seed", "1", "experiment", "run", str(cfg), "--out", str(tmp_path / "a")])
    main(["experiment", "run", str(cfg), "--seed", "2", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "double-symmetry.json").read_text())
    b = json.loads((tmp_path / "b" / "double-symmetry.json").read_text())
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2


def test_cli_mesh_dn_genus_pipeline(tmp_path, capsys):
    mesh = tmp_path / "h.surf"
    assert main(["mesh", "build", "--n-boundary", "128", "--handle=-0.45,0,0.45,0,0.1,0.5",
                 "--out", str(mesh)]) == 0
    assert "genus 1" in capsys.readouterr().out
    assert main(["dn", "compute", str(mesh), "--out", str(tmp_path / "h.csv")]) == 0
    assert (tmp_path / "h.csv").read_text().startswith("N=128")
    assert main(["genus", str(mesh), "--out", str(tmp_path / "p.csv")]) == 0
    assert "estimated genus 1" in capsys.readouterr().out
    assert main(["mesh", "build", "--handle", "1,2"]) == 2
    dbl = tmp_path / "d.surf"
    assert main(["mesh", "build", "--n-boundary", "64", "--double", "--out", str(dbl)]) == 0
    assert main(["dn", "compute", str(dbl)]) == 2
