import json
from pathlib import Path

import pytest

from zrhydro.harness import (ComparisonEntry, ExperimentSpec,
                             SuiteParseError, compare, parse_suite,
                             run_suite, worker_count, write_density_csv,
                             write_report_json)


class TestExperimentSpec:
    def test_defaults_valid(self):
        spec = ExperimentSpec(name="smoke")
        assert spec.model_params(50).N == 50

    def test_unknown_target(self):
        with pytest.raises(ValueError):
            ExperimentSpec(name="x", target="magic")

    def test_oracle_needs_linear(self):
        with pytest.raises(ValueError):
            ExperimentSpec(name="x", rate="indicator", target="oracle")

    def test_bad_rate_rejected_early(self):
        with pytest.raises(Exception):
            ExperimentSpec(name="x", rate="mystery", target="none")

    def test_exclusions(self):
        spec = ExperimentSpec(name="x", p=0.75, delta=0.1)
        (a, b), (c, d) = spec.exclusions(1.0)
        assert (a, b) == (-0.1, 0.1)
        assert c == pytest.approx(0.4) and d == pytest.approx(0.6)
        spec2 = ExperimentSpec(name="y", exclude_singular=False)
        assert spec2.exclusions(1.0) == ()


class TestWorkerCount:
    def test_default_serial(self, monkeypatch):
        monkeypatch.delenv("ZRH_THREADS", raising=False)
        assert worker_count() == 1

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("ZRH_THREADS", "4")
        assert worker_count() == 4

    def test_garbage_env(self, monkeypatch):
        monkeypatch.setenv("ZRH_THREADS", "many")
        assert worker_count() == 1


@pytest.fixture(scope="module")
def tiny_report():
    spec = ExperimentSpec(name="tiny", N=(40,), times=(0.2,), replicas=3,
                          tolerance=0.5, seed=11)
    return compare(spec)


class TestCompare:
    def test_tiny_oracle_run(self, tiny_report):
        assert len(tiny_report.entries) == 1
        e = tiny_report.entries[0]
        assert e.N == 40 and e.t == 0.2
        assert 0.0 <= e.distance <= 0.5
        assert tiny_report.passed

    def test_target_none_distance_zero(self):
        spec = ExperimentSpec(name="none", N=(30,), times=(0.1,),
                              replicas=2, target="none", seed=1)
        rep = compare(spec)
        assert rep.entries[0].distance == 0.0 and rep.passed

    def test_forced_failure(self):
        spec = ExperimentSpec(name="fail", N=(30,), times=(0.2,),
                              replicas=2, tolerance=1e-9, seed=2)
        rep = compare(spec)
        assert not rep.passed
        assert "FAIL" in rep.summary_lines()[0]

    def test_entry_pass_rule(self):
        e = ComparisonEntry(N=1, t=0.0, distance=0.2, se=0.0,
                            tolerance=0.2, wall_time=0.0)
        assert e.passed
        e.distance = 0.2000001
        assert not e.passed


class TestOutputs:
    def test_csv_layout_and_determinism(self, tmp_path, tiny_report):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_density_csv(a, tiny_report)
        write_density_csv(b, tiny_report)
        text = a.read_text()
        assert text.splitlines()[0] == "N,t,u,density"
        assert text == b.read_text()

    def test_rerun_byte_identical(self, tmp_path, tiny_report):
        spec = ExperimentSpec(name="tiny", N=(40,), times=(0.2,),
                              replicas=3, tolerance=0.5, seed=11)
        again = compare(spec)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_density_csv(a, tiny_report)
        write_density_csv(b, again)
        assert a.read_bytes() == b.read_bytes()

    def test_json_sidecar(self, tmp_path, tiny_report):
        path = tmp_path / "r.json"
        write_report_json(path, tiny_report)
        doc = json.loads(path.read_text())
        assert doc["passed"] is True
        assert doc["spec"]["name"] == "tiny"
        assert doc["entries"][0]["N"] == 40

    def test_parallel_matches_serial(self, tiny_report, monkeypatch):
        monkeypatch.setenv("ZRH_THREADS", "2")
        spec = ExperimentSpec(name="tiny", N=(40,), times=(0.2,),
                              replicas=3, tolerance=0.5, seed=11)
        rep = compare(spec)
        assert rep.entries[0].distance == tiny_report.entries[0].distance


SUITE_OK = """\
# two small experiments
name = one
N = 30
times = 0.1
replicas = 2
tolerance = 0.5

name = two
target = none
N = 30
times = 0.1
replicas = 2
"""


class TestSuiteFiles:
    def test_parse_two_blocks(self, tmp_path):
        f = tmp_path / "s.suite"
        f.write_text(SUITE_OK)
        specs = parse_suite(f)
        assert [s.name for s in specs] == ["one", "two"]
        assert specs[0].N == (30,)
        assert specs[1].target == "none"

    def test_missing_name_line_reported(self, tmp_path):
        f = tmp_path / "s.suite"
        f.write_text("\n\nreplicas = 2\n")
        with pytest.raises(SuiteParseError, match="line 3"):
            parse_suite(f)

    def test_bad_number_reported(self, tmp_path):
        f = tmp_path / "s.suite"
        f.write_text("name = x\np = fast\n")
        with pytest.raises(SuiteParseError, match="line 2"):
            parse_suite(f)

    def test_missing_equals(self, tmp_path):
        f = tmp_path / "s.suite"
        f.write_text("name = x\njust words\n")
        with pytest.raises(SuiteParseError, match="line 2"):
            parse_suite(f)

    def test_empty_suite_passes(self, tmp_path, capsys):
        f = tmp_path / "s.suite"
        f.write_text("# nothing here\n")
        assert run_suite(f) == 0
        assert "empty suite" in capsys.readouterr().out

    def test_suite_exit_codes_and_outputs(self, tmp_path):
        f = tmp_path / "s.suite"
        f.write_text(SUITE_OK)
        out = tmp_path / "out"
        assert run_suite(f, out_dir=out) == 0
        assert (out / "one.csv").exists()
        assert (out / "two.json").exists()
        bad = tmp_path / "bad.suite"
        bad.write_text("name = doomed\nN = 30\ntimes = 0.1\n"
                       "replicas = 2\ntolerance = 1e-9\n")
        assert run_suite(bad) == 1

    def test_shipped_suite_passes(self):
        shipped = Path(__file__).resolve().parent.parent / "suites" \
            / "acceptance.suite"
        assert run_suite(shipped) == 0
