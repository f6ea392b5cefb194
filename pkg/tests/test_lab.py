import json
import subprocess
import sys

import pytest

from varifoldlab.lab import ScenarioSpec, run_scenario, spearman_rank
from varifoldlab.quasimin import GaugeFunction
from varifoldlab.scenarios import segment_set
from varifoldlab.sets import save_set
from varifoldlab.varifold import save_varifold, var_of_set


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "varifoldlab", *args],
                          capture_output=True, text=True)


class TestSpearman:
    def test_identical_order(self):
        assert spearman_rank([4, 3, 2, 1], [40, 30, 20, 10]) == pytest.approx(1.0)

    def test_reversed_order(self):
        assert spearman_rank([1, 2, 3], [30, 20, 10]) == pytest.approx(-1.0)


class TestScenarioSpec:
    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            ScenarioSpec(family="zigzag", k_schedule=(4, 2))
        with pytest.raises(ValueError):
            ScenarioSpec(family="zigzag", k_schedule=())

    def test_dict_roundtrip(self):
        spec = ScenarioSpec(family="zigzag", k_schedule=(1, 2, 4), m_factor=2.0,
                            gauge=GaugeFunction(h0=0.1), seed=7, atoms=128)
        back = ScenarioSpec.from_dict(spec.to_dict())
        assert back == spec

    def test_json_roundtrip(self, tmp_path):
        spec = ScenarioSpec(family="graph_decay", k_schedule=(1, 2))
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec.to_dict()))
        assert ScenarioSpec.from_json(path) == spec

    def test_schema_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec.from_dict({"schema": 9, "family": "zigzag"})


class TestRunScenario:
    def test_graph_decay_small(self):
        spec = ScenarioSpec(family="graph_decay", k_schedule=(1, 2, 4, 8, 16),
                            atoms=64, samples=64)
        rep = run_scenario(spec)
        assert rep.flags["hausdorff"] and rep.flags["mass"]
        assert rep.flags["conclusion"]
        assert rep.filling_verdict == "HOLDS"
        assert rep.spearman_d_vs_bl == pytest.approx(1.0)
        assert len(rep.rows) == 5
        assert all(row["atoms"] >= 64 for row in rep.rows)

    def test_zigzag_small(self):
        # the hausdorff flag needs the full schedule to converge at the
        # smallest radius; atoms kept low to keep the LPs cheap
        spec = ScenarioSpec(family="zigzag", k_schedule=(1, 2, 4, 8, 16, 32, 64),
                            atoms=64, samples=64)
        rep = run_scenario(spec)
        assert rep.flags["hausdorff"]
        assert not rep.flags["mass"]
        assert not rep.flags["conclusion"]
        assert all(row["bl_dictionary"] >= 0.25 for row in rep.rows)

    def test_escape_flags(self):
        spec = ScenarioSpec(family="escape", k_schedule=(1, 2), atoms=32, samples=32)
        rep = run_scenario(spec)
        assert not rep.flags["hausdorff"]
        assert rep.filling_verdict == "FAILS"

    def test_unknown_family_config_error(self):
        from varifoldlab.scenarios import UnknownFamilyError
        with pytest.raises(UnknownFamilyError):
            run_scenario(ScenarioSpec(family="wormhole"))

    def test_unknown_integrand_config_error(self):
        with pytest.raises(KeyError):
            run_scenario(ScenarioSpec(family="segment", k_schedule=(1, 2),
                                      integrand="bogus", atoms=16, samples=16))

    def test_deterministic_bytes(self):
        spec = ScenarioSpec(family="shrinking_bump", k_schedule=(1, 2, 4),
                            atoms=32, samples=32)
        a = run_scenario(spec).to_json_bytes()
        b = run_scenario(spec).to_json_bytes()
        assert a == b

    def test_csv_columns(self, tmp_path):
        spec = ScenarioSpec(family="segment", k_schedule=(1, 2), atoms=16, samples=16)
        rep = run_scenario(spec)
        path = tmp_path / "rows.csv"
        rep.save_csv(path)
        header = path.read_text().splitlines()[0].split(",")
        assert header[0] == "k"
        assert header[-4:] == ["measure", "energy", "bl", "bl_dictionary"]

    def test_threads_env_respected(self, monkeypatch):
        monkeypatch.setenv("VARIFOLD_LAB_THREADS", "1")
        spec = ScenarioSpec(family="segment", k_schedule=(1, 2), atoms=16, samples=16)
        rep = run_scenario(spec)
        assert len(rep.rows) == 2


class TestCLI:
    def test_hausdorff_identical_files(self, tmp_path):
        path = tmp_path / "seg.json"
        save_set(segment_set(16), path)
        res = run_cli("distance", "--kind", "hausdorff", str(path), str(path),
                      "--center", "0.5,0", "--radius", "0.4")
        assert res.returncode == 0
        assert json.loads(res.stdout)["value"] == 0.0

    def test_bl_identical_files(self, tmp_path):
        path = tmp_path / "v.json"
        save_varifold(var_of_set(segment_set(8), 1), path)
        res = run_cli("distance", "--kind", "bl", str(path), str(path))
        assert res.returncode == 0
        assert json.loads(res.stdout)["value"] < 1e-9

    def test_run_scenario_report(self, tmp_path):
        spec = ScenarioSpec(family="zigzag", k_schedule=(1, 2, 4), atoms=32,
                            samples=32)
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec.to_dict()))
        out_path = tmp_path / "report.json"
        csv_path = tmp_path / "rows.csv"
        res = run_cli("run", str(spec_path), "--output", str(out_path),
                      "--csv", str(csv_path))
        assert res.returncode == 0
        doc = json.loads(out_path.read_text())
        assert doc["flags"]["mass"] is False
        assert csv_path.exists()

    def test_projected_mass_cli(self, tmp_path):
        path = tmp_path / "seg.json"
        save_set(segment_set(16), path)
        res = run_cli("projected-mass", str(path), "--center", "0.5,0",
                      "--radius", "0.25", "--plane-angle", "0")
        assert res.returncode == 0
        assert json.loads(res.stdout)["value"] == pytest.approx(2.0)

    def test_audit_qm_cli(self, tmp_path):
        path = tmp_path / "seg.json"
        save_set(segment_set(32), path)
        res = run_cli("audit-qm", str(path), "--M", "1")
        assert res.returncode == 0
        assert json.loads(res.stdout)["min_gap"] >= -1e-9

    def test_audit_ellipticity_cli(self):
        res = run_cli("audit-ellipticity", "aniso_nonelliptic", "--x", "0,0",
                      "--plane-angle", "0", "--scan-haar", "4")
        assert res.returncode == 0
        assert json.loads(res.stdout)["certificates"]

    def test_audit_ellipticity_competitor_filter(self):
        res = run_cli("audit-ellipticity", "area", "--x", "0,0",
                      "--plane-angle", "0", "--scan-haar", "0",
                      "--competitors", "detour_h0.5,flat")
        assert res.returncode == 0
        doc = json.loads(res.stdout)
        supplied = [r for r in doc["rows"] if r["plane"] == "supplied"]
        assert {r["competitor"] for r in supplied} == {"detour_h0.5", "flat"}
        res_bad = run_cli("audit-ellipticity", "area", "--plane-angle", "0",
                          "--competitors", "nonexistent")
        assert res_bad.returncode == 2

    def test_density_cli(self, tmp_path):
        path = tmp_path / "v.json"
        save_varifold(var_of_set(segment_set(256), 1), path)
        res = run_cli("density", str(path), "--center", "0.5,0",
                      "--radii", "0.25,0.125")
        assert res.returncode == 0
        doc = json.loads(res.stdout)
        assert doc["ratios"] == pytest.approx([1.0, 1.0], abs=0.02)

    def test_config_error_exit_2(self, tmp_path):
        res = run_cli("run", str(tmp_path / "missing.json"))
        assert res.returncode == 2
        assert "error" in res.stderr

    def test_bad_family_exit_2(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({"schema": 1, "family": "wormhole",
                                         "k_schedule": [1]}))
        res = run_cli("run", str(spec_path))
        assert res.returncode == 2

    def test_strict_promotes_warning_exit_3(self, tmp_path):
        path = tmp_path / "v.json"
        save_varifold(var_of_set(segment_set(4), 1), path)  # too few atoms
        res = run_cli("--strict", "density", str(path), "--center", "0.5,0",
                      "--radii", "0.25,0.01")
        assert res.returncode == 3

    def test_run_strict_resolution_warning(self, tmp_path):
        # escape never converges: its bl floor warning is promoted by --strict
        spec = ScenarioSpec(family="escape", k_schedule=(1, 2), atoms=16, samples=16)
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec.to_dict()))
        res = run_cli("--strict", "run", str(spec_path),
                      "--output", str(tmp_path / "rep.json"))
        assert res.returncode == 3
        assert "warning" in res.stderr

    def test_spec_output_paths_honored(self, tmp_path):
        out_json = tmp_path / "report.json"
        out_csv = tmp_path / "rows.csv"
        spec = ScenarioSpec(family="segment", k_schedule=(1, 2), atoms=16,
                            samples=16, output_json=str(out_json),
                            output_csv=str(out_csv))
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec.to_dict()))
        res = run_cli("run", str(spec_path))
        assert res.returncode == 0
        assert out_json.exists() and out_csv.exists()

    def test_audit_qm_registry_and_params(self, tmp_path):
        set_path = tmp_path / "seg.json"
        save_set(segment_set(32), set_path)
        params_path = tmp_path / "params.json"
        params_path.write_text(json.dumps({"vertex_snap": {"frac": 0.125}}))
        res = run_cli("audit-qm", str(set_path), "--M", "1",
                      "--registry", "identity,vertex_snap",
                      "--params", str(params_path))
        assert res.returncode == 0
        doc = json.loads(res.stdout)
        names = {row["deformation"] for row in doc["rows"]}
        assert names == {"identity", "vertex_snap"}
        assert doc["min_gap"] >= -1e-9
