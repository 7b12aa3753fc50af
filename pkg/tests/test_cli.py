import importlib.resources
import json
import shutil

import pytest

from setdecomp.cli import main
from setdecomp.intervals import RangeMap
from setdecomp.requirements import FunctionalRequirement, save_fr

CRUISE = str(importlib.resources.files("setdecomp") / "data" / "cruise.json")

FAST = ["--step", "0.05", "--horizon", "30", "--grid", "2"]


def _fr(name, **roles):
    maps = {role: RangeMap.of(**entries) for role, entries in roles.items()}
    return FunctionalRequirement(name, **maps)


@pytest.fixture
def chain_files(tmp_path):
    """a -> b contracts plus a top contract their composite refines."""
    a = _fr("a", inputs={"x": (0, 1)}, outputs={"y": (2.0, 3.0)})
    b = _fr("b", inputs={"y": (1.0, 4.0)}, outputs={"z": (0.0, 9.0)})
    top = _fr("top", inputs={"x": (0.2, 0.8)}, outputs={"z": (-1.0, 10.0)})
    paths = {}
    for fr in (a, b, top):
        p = tmp_path / f"{fr.name}.json"
        save_fr(fr, p)
        paths[fr.name] = str(p)
    return paths


class TestDecompose:
    def test_json_report_and_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["decompose", CRUISE, *FAST, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["law_checks"]["refinement"]["ok"] is True
        assert set(report["spaces"]["fps_star"]) == {"F", "Fa", "Fr", "T",
                                                     "omega", "u", "v", "vdot"}

    def test_two_runs_are_byte_identical(self, tmp_path):
        outs = []
        for k in range(2):
            out = tmp_path / f"r{k}.json"
            assert main(["decompose", CRUISE, *FAST, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_markdown_and_csv_renderings(self, tmp_path, capsys):
        assert main(["decompose", CRUISE, *FAST, "--emit", "md"]) == 0
        md = capsys.readouterr().out
        assert "|" in md and "omega_m" in md
        assert main(["decompose", CRUISE, *FAST, "--emit", "csv"]) == 0
        csv_text = capsys.readouterr().out
        assert csv_text.splitlines()[0].startswith("section,variable")

    def test_compare_against_own_golden_reports_zero_delta(self, tmp_path, capsys):
        golden = tmp_path / "golden.json"
        assert main(["decompose", CRUISE, *FAST, "--out", str(golden)]) == 0
        out = tmp_path / "again.json"
        assert main(["decompose", CRUISE, *FAST, "--compare", str(golden),
                     "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["deltas"]["max"]["delta"] == 0.0

    def test_missing_file_is_validation_error(self, capsys):
        assert main(["decompose", "/nonexistent.json"]) == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_json_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["decompose", str(bad)]) == 2

    def test_infeasible_pinning_exits_three(self, tmp_path, capsys):
        doc = json.loads(open(CRUISE).read())
        # demand more headroom than any sub-function admits
        doc["top"]["inputs"]["v_0"] = {"lo": -500.0, "hi": 500.0, "unit": "m/s"}
        p = tmp_path / "wild.json"
        p.write_text(json.dumps(doc))
        rc = main(["decompose", str(p), *FAST])
        assert rc in (2, 3)
        assert rc != 0


class TestCheckLaws:
    def test_passing_chain(self, chain_files, capsys):
        rc = main(["check-laws", chain_files["a"], chain_files["b"],
                   chain_files["top"]])
        out = capsys.readouterr().out
        assert rc == 0
        assert "pass composable a -> b" in out
        assert "pass refines" in out

    def test_single_part_refinement(self, chain_files, tmp_path, capsys):
        wide = _fr("wide", inputs={"x": (-5, 5)}, outputs={"y": (2.2, 2.8)})
        p = tmp_path / "wide.json"
        save_fr(wide, p)
        assert main(["check-laws", str(p), chain_files["a"]]) == 0

    def test_refinement_violation_exits_four(self, chain_files, tmp_path, capsys):
        narrow_in = _fr("narrow", inputs={"x": (0.4, 0.6)},
                        outputs={"y": (2.0, 3.0)})
        p = tmp_path / "narrow.json"
        save_fr(narrow_in, p)
        rc = main(["check-laws", str(p), chain_files["a"]])
        assert rc == 4
        assert "FAIL refines" in capsys.readouterr().out

    def test_composability_violation_reported(self, chain_files, tmp_path, capsys):
        loose = _fr("loose", inputs={"x": (0, 1)}, outputs={"y": (0.0, 9.0)})
        p = tmp_path / "loose.json"
        save_fr(loose, p)
        rc = main(["check-laws", str(p), chain_files["b"], chain_files["top"]])
        assert rc == 4
        assert "FAIL composable loose -> b" in capsys.readouterr().out

    def test_one_file_is_usage_error(self, chain_files, capsys):
        assert main(["check-laws", chain_files["a"]]) == 2


class TestSimulate:
    def test_csv_header_and_override(self, capsys):
        rc = main(["simulate", CRUISE, "v_r=35", "--step", "0.1",
                   "--horizon", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        header = lines[0].split(",")
        assert header[0] == "t"
        assert "v" in header
        assert len(lines) == 12  # t = 0.0 .. 1.0 inclusive

    def test_bad_override_shape(self, capsys):
        assert main(["simulate", CRUISE, "v_r:35"]) == 2
        assert "expected name=value" in capsys.readouterr().err

    def test_unknown_variable(self, capsys):
        assert main(["simulate", CRUISE, "bogus=1"]) == 2
        assert "unknown design variable" in capsys.readouterr().err

    def test_out_file(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["simulate", CRUISE, "--step", "0.5", "--horizon", "2",
                     "--out", str(out)]) == 0
        assert out.read_text().startswith("t,")
