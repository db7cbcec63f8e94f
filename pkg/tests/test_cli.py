import json
import subprocess
import sys

import numpy as np
import pytest

from oddaxis import cli
from oddaxis import degree as dg
from oddaxis import spectra as sp
from oddaxis import sphere
from oddaxis.bundles import quaternion_family
from oddaxis.errors import NonConvergentDegreeError


def run(argv, tmp_path, name="report.json"):
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return code, report


def write_matrices(path, mats):
    mats = [np.asarray(m) for m in mats]
    entries = []
    for m in mats:
        if np.iscomplexobj(m):
            entries.append({"re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()})
        else:
            entries.append(m.ravel().tolist())
    path.write_text(json.dumps({"q": mats[0].shape[0], "matrices": entries}))
    return str(path)


# ---------------------------------------------------------------- degree

@pytest.mark.parametrize("spec,expected", [("identity", 1), ("antipodal", -1),
                                           ("suspension:k=3", 3), ("circle-power:k=-3", -3)])
def test_degree_builtin(tmp_path, spec, expected):
    code, rep = run(["degree", "--map", spec], tmp_path)
    assert code == 0
    res = rep["results"]
    assert res["degree"] == expected
    assert res["agree"] and rep["pass"]
    assert res["primary"]["residual"] < res["primary"]["tol"]
    assert res["cross_check"]["value"] == expected


def test_degree_unknown_family(tmp_path):
    code, rep = run(["degree", "--map", "bogus"], tmp_path)
    assert code == 2 and rep is None


def test_degree_from_sample_file(tmp_path):
    mesh = sphere.icosphere(3)
    f = tmp_path / "samples.json"
    f.write_text(json.dumps({"dimension": 2, "mesh_level": 3,
                             "values": (-mesh.vertices).tolist()}))
    code, rep = run(["degree", "--map", str(f)], tmp_path)
    assert code == 0
    assert rep["results"]["degree"] == -1


def test_degree_nonconvergent_exit(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise NonConvergentDegreeError("stuck", report=None)
    monkeypatch.setattr(dg, "brouwer_degree", fail)
    code, rep = run(["degree", "--map", "identity"], tmp_path)
    assert code == 4
    assert rep["error"]["type"] == "NonConvergentDegreeError"
    assert rep["pass"] is False


def test_degree_csv(tmp_path):
    code, _ = run(["degree", "--map", "identity", "--mesh-level", "2", "--emit-csv"], tmp_path)
    assert code == 0
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "cx,cy,cz,density,area"
    assert len(lines) == 1 + 320


# ---------------------------------------------------------------- swtable and rh

def test_swtable_highlights_and_csv(tmp_path):
    code, rep = run(["swtable", "--K", "8", "--N", "2", "--emit-csv"], tmp_path)
    assert code == 0
    rows = {r["k"]: r["trivial_for_n"] for r in rep["results"]["table"]}
    assert 2 in rows[4] and 2 not in rows[2] and 2 not in rows[6]
    assert all(h["match"] for h in rep["results"]["highlights"])
    csv = (tmp_path / "report.csv").read_text().splitlines()
    assert csv[0] == "k,n=1,n=2"
    assert csv[4] == "4,trivial,trivial"


def test_swtable_small(tmp_path):
    _, rep = run(["swtable", "--K", "1", "--N", "1"], tmp_path)
    assert rep["results"]["table"] == [{"k": 1, "trivial_for_n": []}]
    _, rep = run(["swtable", "--K", "8", "--N", "1"], tmp_path)
    assert [bool(r["trivial_for_n"]) for r in rep["results"]["table"]] == [
        k % 2 == 0 for k in range(1, 9)]


def test_rh(tmp_path):
    code, rep = run(["rh", "16"], tmp_path)
    assert code == 0
    res = rep["results"]
    assert (res["rho"], res["b"], res["c"], res["d"]) == (9, 4, 0, 1)


# ---------------------------------------------------------------- eigen

def test_eigen_diagonal(tmp_path):
    f = write_matrices(tmp_path / "t.json", [np.diag([1j, 2, 1 + 1j])])
    code, rep = run(["eigen", f], tmp_path)
    assert code == 0
    cert = rep["results"]["certificate"]
    assert cert["residual"] < 1e-10
    assert cert["witness"]["sigma_min"] <= cert["witness"]["sigma_tol"]


def test_eigen_quintic_companion(tmp_path):
    T = sp.companion_matrix(np.array([-1, -1, 0, 0, 0], dtype=complex))
    code, rep = run(["eigen", write_matrices(tmp_path / "t.json", [T])], tmp_path)
    assert code == 0
    c = rep["results"]["certificate"]
    v = np.array(c["eigenvector"]["re"]) + 1j * np.array(c["eigenvector"]["im"])
    mu = complex(c["eigenvalue"]["re"], c["eigenvalue"]["im"])
    assert np.linalg.norm(T @ v - mu * v) <= c["residual_tol"]


def test_eigen_even_is_usage_error(tmp_path, capsys):
    code, rep = run(["eigen", write_matrices(tmp_path / "t.json", [np.eye(4)])], tmp_path)
    assert code == 2 and rep is None
    assert "odd sizes only" in capsys.readouterr().err


def test_eigen_input_errors(tmp_path):
    two = write_matrices(tmp_path / "two.json", [np.eye(3), np.eye(3)])
    assert run(["eigen", two], tmp_path)[0] == 2
    assert run(["eigen", str(tmp_path / "missing.json")], tmp_path)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["eigen", str(bad)], tmp_path)[0] == 2


def test_eigen_search_failure_exit(tmp_path, monkeypatch):
    from oddaxis import search
    monkeypatch.setattr(sp._search, "minimize_sigma", lambda *a, **k: search.SphereMinimum(
        0.4, np.array([1.0, 0.0, 0.0]), 6, "nonsingular", 0.4))
    code, rep = run(["eigen", write_matrices(tmp_path / "t.json", [np.eye(3)])], tmp_path)
    assert code == 3
    assert rep["error"]["type"] == "SearchFailureError"


# ---------------------------------------------------------------- span

def test_span_random_6(tmp_path, rng):
    code, rep = run(["span", write_matrices(tmp_path / "s.json", rng.standard_normal((3, 6, 6)))],
                    tmp_path)
    assert code == 0
    res = rep["results"]
    assert res["theorem_applies"]
    assert res["sigma_min"]["value"] < res["sigma_min"]["tol"]
    # the pass flag follows from the serialized numbers alone
    assert rep["checks"]["singular_when_required"] == (
        res["sigma_min"]["value"] < res["sigma_min"]["tol"] or not res["theorem_applies"])


def test_span_quaternion_control(tmp_path):
    code, rep = run(["span", write_matrices(tmp_path / "q.json", quaternion_family().matrices)],
                    tmp_path)
    assert code == 0
    res = rep["results"]
    assert abs(res["sigma_min"]["value"] - 1.0) < 1e-10
    assert res["status"] == "no singularity (q = 0 mod 4)"


def test_span_degenerate_triple(tmp_path, rng):
    A = rng.standard_normal((3, 6, 6))
    A[1] = A[0]
    code, rep = run(["span", write_matrices(tmp_path / "d.json", A)], tmp_path)
    assert code == 0
    assert rep["results"]["sigma_min"]["method"] == "immediate"


def test_span_needs_three(tmp_path, rng):
    f = write_matrices(tmp_path / "s.json", rng.standard_normal((2, 6, 6)))
    assert run(["span", f], tmp_path)[0] == 2


# ---------------------------------------------------------------- bundle

def test_bundle_four_gamma(tmp_path):
    code, rep = run(["bundle", "four-gamma-rp2"], tmp_path)
    assert code == 0
    assert rep["results"]["det_defect"]["value"] < 1e-12


def test_bundle_two_gamma(tmp_path):
    code, rep = run(["bundle", "two-gamma-rp1"], tmp_path)
    assert code == 0 and rep["pass"]


def test_bundle_gamma_eps_rp1(tmp_path):
    code, rep = run(["bundle", "gamma-eps-rp1", "--seed", "5", "--emit-csv"], tmp_path)
    assert code == 0
    res = rep["results"]
    assert res["exact_sign_flip"]
    assert res["bracket_width"]["value"] <= res["bracket_width"]["tol"]
    assert (tmp_path / "report.csv").read_text().startswith("theta,det\n")


def test_bundle_two_gamma_eps_rp2(tmp_path):
    code, rep = run(["bundle", "two-gamma-eps-rp2", "--seed", "1"], tmp_path)
    assert code == 0
    res = rep["results"]
    assert res["sigma_min"]["value"] < 1e-5
    tr = res["rho_trace"]
    assert tr["short_circuit"] or (tr["both_odd"] and tr["equal"])


def test_bundle_unknown_case(tmp_path):
    assert run(["bundle", "three-gamma"], tmp_path)[0] == 2


# ---------------------------------------------------------------- plumbing

def test_reports_byte_identical(tmp_path, rng):
    f = write_matrices(tmp_path / "s.json", rng.standard_normal((3, 6, 6)))
    for argv in (["span", f], ["bundle", "gamma-eps-rp1", "--seed", "9"],
                 ["degree", "--map", "linear:seed=3"]):
        cli.main(argv + ["--out", str(tmp_path / "a.json")])
        cli.main(argv + ["--out", str(tmp_path / "b.json")])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_report_key_order_and_digest(tmp_path):
    _, a = run(["bundle", "gamma-eps-rp1", "--seed", "1"], tmp_path)
    _, b = run(["bundle", "gamma-eps-rp1", "--seed", "2"], tmp_path)
    assert list(a) == ["tool", "version", "command", "config", "inputs_digest", "results",
                       "checks", "pass", "exit_code"]
    assert len(a["inputs_digest"]) == 64
    assert a["inputs_digest"] != b["inputs_digest"]
    assert a["config"]["seed"] == 1


def test_digest_covers_file_contents(tmp_path):
    f = tmp_path / "t.json"
    write_matrices(f, [np.diag([1.0, 2.0, 3.0])])
    _, a = run(["eigen", str(f)], tmp_path)
    write_matrices(f, [np.diag([1.0, 2.0, 4.0])])
    _, b = run(["eigen", str(f)], tmp_path)
    assert a["inputs_digest"] != b["inputs_digest"]


def test_tolerance_overrides(tmp_path):
    code, rep = run(["degree", "--map", "identity", "--tol", "residual=0.1"], tmp_path)
    assert code == 0
    assert rep["config"]["tolerances"] == {"residual": 0.1}
    assert rep["results"]["primary"]["tol"] == 0.1
    assert run(["degree", "--map", "identity", "--tol", "sigma=1"], tmp_path)[0] == 2
    assert run(["degree", "--map", "identity", "--tol", "residual=-1"], tmp_path)[0] == 2
    assert run(["degree", "--map", "identity", "--tol", "residual"], tmp_path)[0] == 2


@pytest.mark.parametrize("argv", [["rh", "5", "--mesh-level", "9"], ["rh", "5", "--seed", "-1"],
                                  ["rh", "0"], ["rh", "5", "--threads", "0"], []])
def test_usage_errors(argv):
    assert cli.main(argv) == 2


def test_emit_csv_requires_out(capsys):
    assert cli.main(["rh", "5", "--emit-csv"]) == 2


def test_stdout_report(capsys):
    assert cli.main(["rh", "6"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["results"]["rho"] == 2


def test_export_mesh(tmp_path):
    path = tmp_path / "m.off"
    assert cli.main(["rh", "3", "--mesh-level", "1", "--export-mesh", str(path)]) == 0
    assert path.read_text().splitlines()[1] == "42 80 0"


def test_module_entry_point_and_logging(tmp_path):
    env = {"ODDAXIS_LOG": "info", "PATH": ""}
    proc = subprocess.run([sys.executable, "-m", "oddaxis", "rh", "12"], capture_output=True,
                          text=True, env=env, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["rho"] == 4
    assert "rh finished" in proc.stderr
    quiet = subprocess.run([sys.executable, "-m", "oddaxis", "rh", "12"], capture_output=True,
                           text=True, env={"ODDAXIS_LOG": "quiet", "PATH": ""}, check=False)
    assert quiet.stderr == ""
