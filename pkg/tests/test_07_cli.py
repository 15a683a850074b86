import json

import pytest

import main


@pytest.fixture
def cli(monkeypatch, config_file):
    """
    Runs main.main against the test settings and returns (code, stdout).
    """
    monkeypatch.setattr(main, "CONFIG_PATH", str(config_file))

    def run(capsys, *argv):
        code = main.main(list(argv))
        return code, capsys.readouterr().out

    return run


def test_invariants_trefoil(cli, capsys):
    code, out = cli(capsys, "invariants", "trefoil")
    assert code == 0
    payload = json.loads(out)
    assert payload["provenance"]["input"] == "trefoil"
    entry = payload["classes"][0]
    assert entry["tau"] == "1"
    assert entry["d"] == "0"
    assert entry["upsilon"] == [["0", "0"], ["1", "-1"], ["2", "0"]]


def test_invariants_rp3_all_classes(cli, capsys):
    code, out = cli(capsys, "invariants", "rp3")
    assert code == 0
    classes = json.loads(out)["classes"]
    assert [c["d"] for c in classes] == ["1/4", "-1/4"]
    # -k stays in its own class here, so the t <-> 2 - t symmetry is only observed, not assumed
    assert [c["conjugate_class"] for c in classes] == [0, 1]
    assert not any(c["conjugation_symmetric"] for c in classes)


def test_invariants_to_file(cli, capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, out = cli(capsys, "invariants", "unknot", "--out", str(out_path))
    assert code == 0
    assert out == ""
    assert json.loads(out_path.read_text(encoding="utf-8"))["classes"][0]["tau"] == "0"


@pytest.mark.parametrize("argv", [
    ("invariants", "notatree"),
    ("invariants", "rp3", "--spinc", "5"),
    ("invariants", "no-such-fixture"),
    ("homology", "unknot", "--t", "5"),
    ("verify", "rp3", "--vertex", "v", "--t", "0"),
    ("plot", "rp3", "--format", "png"),
])
def test_usage_errors_exit_two(cli, capsys, argv):
    code, out = cli(capsys, *argv)
    assert code == 2
    assert out == ""


def test_homology_unknot(cli, capsys):
    """
    One infinite bar born at 0 and no torsion.
    """
    code, out = cli(capsys, "homology", "unknot", "--t", "0")
    assert code == 0
    result = json.loads(out)["classes"][0]
    assert result["upsilon"] == "0"
    assert result["barcode"] == {"0": [{"birth": "0", "length": "inf"}]}
    assert result["reduced"] == {}


def test_verify_chain(cli, capsys):
    code, out = cli(capsys, "verify", "chain22", "--vertex", "v", "--t", "2/3", "--window", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["vertex"] == "v"
    assert payload["t"] == "2/3"
    assert all(check["pass"] for check in payload["checks"])
    assert payload["escapes"] == 0
    uncovered = [label for entry in payload["relations"] for _, label in entry["uncovered"]]
    # only c is adjacent to the knot
    assert uncovered and set(uncovered) == {"c"}


def test_plot_csv(cli, capsys):
    code, out = cli(capsys, "plot", "trefoil", "--t-grid", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,upsilon,class,t_exact,upsilon_exact"
    assert lines[2] == "0.5,-0.5,0,1/2,-1/2"
    assert len(lines) == 6


def test_plot_png(cli, capsys, tmp_path):
    path = tmp_path / "curves.png"
    code, _ = cli(capsys, "plot", "rp3", "--format", "png", "--out", str(path))
    assert code == 0
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_fixtures_list_and_show(cli, capsys):
    code, out = cli(capsys, "fixtures", "list")
    assert code == 0
    names = [line.split("\t")[0] for line in out.splitlines()]
    assert "trefoil" in names and "notatree" in names
    code, out = cli(capsys, "fixtures", "show", "rp3")
    assert code == 0
    assert "v -2" in out


def test_bad_override_rejected(cli, capsys):
    code, _ = cli(capsys, "verify", "chain22", "--vertex", "v", "--t", "0", "--window", "0")
    assert code == 2
