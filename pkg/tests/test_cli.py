import json

import pytest

from netslice import io as nsio
from netslice.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_LIMIT, EXIT_OK, main
from netslice.generator import fig1_fixture


@pytest.fixture
def example_files(tmp_path):
    assert main(["generate", "--preset", "fig1-s1", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["generate", "--preset", "fig1-s2", "--out", str(tmp_path)]) == EXIT_OK
    return tmp_path / "fig1-s1.json", tmp_path / "fig1-s2.json"


def test_generate_random(tmp_path, capsys):
    assert main(["generate", "--preset", "sec5a", "--services", "1-2", "--seeds", "2",
                 "--out", str(tmp_path)]) == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["sec5a-k1-s0.json", "sec5a-k1-s1.json", "sec5a-k2-s0.json", "sec5a-k2-s1.json"]
    doc = json.loads((tmp_path / "sec5a-k2-s1.json").read_text())
    assert doc["meta"] == {"preset": "sec5a", "services": 2, "seed": 1}


def test_solve_and_validate(example_files, tmp_path, capsys):
    s1, s2 = example_files
    out = tmp_path / "sol.json"
    assert main(["solve", str(s1), "--gap", "0", "--out", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "optimal"
    assert summary["objective"] == pytest.approx(1.005)
    assert summary["e2e_delay"] == {"1": 5.0}
    assert main(["validate", str(s1), str(out)]) == EXIT_OK
    assert main(["solve", str(s1), "-P", "1"]) == EXIT_INFEASIBLE
    # a P=2 solution breaks the single-path limit
    assert main(["validate", str(s1), str(out), "-P", "1"]) == EXIT_INFEASIBLE


def test_solve_without_latency_reports_violation(example_files, capsys):
    _, s2 = example_files
    assert main(["solve", str(s2), "--no-latency", "--gap", "0"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["objective"] == pytest.approx(1.009)
    assert summary["latency_violations"] == ["e2e-latency[k=2]"]


def test_time_limit_exit_code(tmp_path):
    path = tmp_path / "hard.json"
    from netslice.generator import preset_instance
    nsio.write_instance(path, preset_instance("sec5a", 3, 1))
    assert main(["solve", str(path), "--time-limit", "0.5"]) == EXIT_LIMIT


def test_invalid_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == EXIT_INVALID
    doc = nsio.instance_to_dict(fig1_fixture(1))
    doc["services"][0]["source"] = "C"
    (tmp_path / "cloudsrc.json").write_text(json.dumps(doc))
    assert main(["solve", str(tmp_path / "cloudsrc.json")]) == EXIT_INVALID
    assert "source-in-cloud" in capsys.readouterr().err
    good = tmp_path / "good.json"
    nsio.write_instance(good, fig1_fixture(1))
    assert main(["solve", str(good), "-P", "0"]) == EXIT_INVALID


def test_build_writes_lp(example_files, tmp_path, capsys):
    s1, _ = example_files
    lp = tmp_path / "m.lp"
    assert main(["build", str(s1), "--formulation", "ns2", "--out", str(lp)]) == EXIT_OK
    text = lp.read_text()
    assert text.startswith("\\ model ns2") and text.rstrip().endswith("End")
    assert "165 variables, 265 constraints" in capsys.readouterr().err


def test_compare_csv_is_deterministic(example_files, tmp_path):
    s1, s2 = example_files
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["compare", str(s1), str(s2), "--out", str(a)]) == EXIT_OK
    assert main(["compare", str(s1), str(s2), "--out", str(b), "--workers", "2"]) == EXIT_OK

    def strip_times(path):
        rows = [line.split(",") for line in path.read_text().splitlines()]
        keep = [i for i, c in enumerate(rows[0]) if not c.endswith("_time")]
        return [[r[i] for i in keep] for r in rows]

    assert strip_times(a) == strip_times(b)
    rows = strip_times(a)
    assert rows[1][:6] == ["fig1-s1", "optimal", "optimal", "1.005", "1.005", "yes"]
    assert rows[-1][0] == "mean"
    assert b"\r\n" not in a.read_bytes()


def test_experiment_summary(tmp_path, capsys):
    out, inst = tmp_path / "points.csv", tmp_path / "inst.csv"
    assert main(["experiment", "--preset", "sec5a", "--services", "1", "--seeds", "2",
                 "--paths", "1,2", "--latency", "both", "--time-limit", "20",
                 "--out", str(out), "--instances-out", str(inst)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("preset,services,paths,latency,instances")
    assert len(lines) == 1 + 4
    assert len(inst.read_text().splitlines()) == 1 + 8
