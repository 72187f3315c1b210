import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hadronvqe.cli import main
from hadronvqe.config import RunConfig, bundled_configs
from hadronvqe.pauli import PauliOperator


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def write_cfg(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_every_bundled_config_validates():
    names = bundled_configs()
    assert {"ssvqe_11_sv", "vqe_11_shots_spsa", "ssvqe_41_sv", "ssvqe_11_noisy_mitigated"} <= set(names)
    for n in names:
        RunConfig.load(n)


def test_encode_compact_golden(tmp_path, capsys):
    code, out, _ = run(capsys, "encode", "--config", "vqe_11_sv_compact", "--output", str(tmp_path))
    assert code == 0 and json.loads(out)["status"] == "ok"
    op = PauliOperator.from_text((tmp_path / "operator_compact.txt").read_text())
    golden = {"II": 1134731, "IZ": -566245, "XI": 4831, "XZ": 20598}
    assert set(op.labels()) == set(golden)
    for k, v in golden.items():
        assert abs(op.labels()[k].real - v) <= 1
    assert (tmp_path / "config_snapshot.yaml").exists()


def test_encode_direct_against_reversed_strings(tmp_path, capsys):
    run(capsys, "encode", "--config", "vqe_11_sv_direct", "--output", str(tmp_path))
    op = PauliOperator.from_text((tmp_path / "operator_direct.txt").read_text())
    printed = {"IIII": 2269462, "ZIII": -284243, "IIZI": -284243, "IZII": -850488, "IIIZ": -850488,
               "XZXI": 12714, "YZYI": 12714, "IXZX": -7883, "IYZY": -7883}
    got = {k[::-1]: v.real for k, v in op.labels().items()}
    assert set(got) == set(printed)
    for k, v in printed.items():
        assert abs(got[k] - v) <= 1


def test_encode_41_term_count(tmp_path, capsys):
    run(capsys, "encode", "--config", "ssvqe_41_sv", "--output", str(tmp_path))
    op = PauliOperator.from_text((tmp_path / "operator_compact.txt").read_text())
    assert op.n_qubits == 4 and len(op) == 56


def test_exact_11(tmp_path, capsys):
    assert run(capsys, "exact", "--config", "exact_11", "--output", str(tmp_path))[0] == 0
    d = json.loads((tmp_path / "exact.json").read_text())
    assert [round(m) for m in d["masses_MeV"]] == [737, 771, 1298, 1310]
    f = {(e["state"], e["channel"]): e["f_MeV"] for e in d["observables"]["decay"]}
    assert f[0, "pseudoscalar"] == pytest.approx(178.18, abs=0.01)
    assert (tmp_path / "pdf_state0.csv").read_text().startswith("x,q,std_error\n")


def test_exact_external_diagonal(tmp_path, capsys):
    (tmp_path / "h.txt").write_text("dim 4 units MeV2\n" + "\n".join(
        " ".join(str(7.0 * (i == j)) for j in range(4)) for i in range(4)) + "\n")
    cfg = write_cfg(tmp_path, "name: diag\nhamiltonian: {external: h.txt}\n")
    assert run(capsys, "exact", "--config", cfg, "--output", str(tmp_path / "o"))[0] == 0
    d = json.loads((tmp_path / "o" / "exact.json").read_text())
    assert d["energies_MeV2"] == pytest.approx([7, 7, 7, 7])


def test_solve_ssvqe_11_sv(tmp_path, capsys):
    assert run(capsys, "solve", "--config", "ssvqe_11_sv", "--output", str(tmp_path))[0] == 0
    d = json.loads((tmp_path / "result.json").read_text())
    e = [s["energy_MeV2"] for s in d["states"]]
    np.testing.assert_allclose(e, [543059, 593915, 1685209, 1716743], atol=1)
    assert d["config"]["name"] == "ssvqe_11_sv"
    assert [s["bitstring"] for s in d["states"]] == ["00", "01", "10", "11"]
    rho = json.loads((tmp_path / "density_state0.json").read_text())
    m = np.array(rho["real"]) + 1j * np.array(rho["imag"])
    assert abs(np.trace(m @ m) - 1) < 1e-10
    for i in range(4):
        assert (tmp_path / f"trace_ref{i}.csv").read_text().startswith("iteration,E_i,std_error\n")


def test_solve_not_below_exact(tmp_path, capsys):
    run(capsys, "exact", "--config", "exact_11", "--output", str(tmp_path / "x"))
    run(capsys, "solve", "--config", "ssvqe_11_sv", "--output", str(tmp_path / "s"))
    exact = json.loads((tmp_path / "x" / "exact.json").read_text())["energies_MeV2"]
    solved = [s["energy_MeV2"] for s in json.loads((tmp_path / "s" / "result.json").read_text())["states"]]
    assert all(s >= e * (1 - 1e-6) for s, e in zip(solved, exact))


def test_shot_solve_bitwise_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(capsys, "solve", "--config", "vqe_11_shots_spsa", "--output", str(tmp_path / d))[0] == 0
    for f in ("trace.csv", "trace_ref0.csv", "result.json"):
        a = (tmp_path / "a" / f).read_text().replace(str(tmp_path / "a"), "")
        b = (tmp_path / "b" / f).read_text().replace(str(tmp_path / "b"), "")
        assert a == b
    r = json.loads((tmp_path / "a" / "result.json").read_text())
    assert abs(r["states"][0]["energy_MeV2"] - 543059) < 300


def test_seed_override_changes_trace(tmp_path, capsys):
    run(capsys, "solve", "--config", "vqe_11_shots_spsa", "--output", str(tmp_path / "a"))
    run(capsys, "solve", "--config", "vqe_11_shots_spsa", "--seed", "9", "--output", str(tmp_path / "b"))
    assert (tmp_path / "a" / "trace.csv").read_text() != (tmp_path / "b" / "trace.csv").read_text()
    assert json.loads((tmp_path / "b" / "result.json").read_text())["config"]["seed"] == 9


def test_snapshot_rerun_reproduces(tmp_path, capsys):
    run(capsys, "solve", "--config", "vqe_11_shots_spsa", "--output", str(tmp_path / "a"))
    snap = json.loads((tmp_path / "a" / "result.json").read_text())["config"]
    cfg = write_cfg(tmp_path, yaml.safe_dump(snap))
    run(capsys, "solve", "--config", cfg, "--output", str(tmp_path / "b"))
    assert (tmp_path / "a" / "trace.csv").read_text() == (tmp_path / "b" / "trace.csv").read_text()


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "name: x\nhamiltonian: builtin_1_1\noptimizer:\n  kind: SPSA\n  maxiter: 3\n")
    code, _, err = run(capsys, "solve", "--config", cfg, "--output", str(tmp_path / "o"))
    assert code == 2
    e = json.loads(err)["error"]
    assert "maxiter" in e["message"] and e["location"].endswith(":5")
    assert json.loads((tmp_path / "o" / "error.json").read_text())["status"] == "error"


@pytest.mark.parametrize("body", [
    "encoding: direct\nansatz: {kind: HEA}\n",
    "encoding: compact\nansatz: {kind: UCC_single}\n",
    "hamiltonian: builtin_4_1\nencoding: direct\nansatz: {kind: UCC_single}\n",
    "tier: noisy\n",
    "tier: shots\nmitigation: true\n",
    "ssvqe: {reference_states: [0, 1], weights: [0.5, 1.0]}\nmethod: ssvqe\n",
    "tier: turbo\n",
    "shots: -4\n",
])
def test_invariant_violations_exit_2(tmp_path, capsys, body):
    cfg = write_cfg(tmp_path, "name: bad\n" + body)
    code, _, err = run(capsys, "solve", "--config", cfg, "--output", str(tmp_path / "o"))
    assert code == 2
    assert json.loads(err)["error"]["type"]


def test_yaml_syntax_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "name: [unclosed\n")
    code, _, err = run(capsys, "exact", "--config", cfg, "--output", str(tmp_path / "o"))
    assert code == 2 and json.loads(err)["status"] == "error"


def test_runtime_error_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "name: ext\nhamiltonian: {external: missing.txt}\n")
    code, _, err = run(capsys, "exact", "--config", cfg, "--output", str(tmp_path / "o"))
    assert code == 1 and json.loads(err)["error"]["type"] == "FileNotFoundError"


def test_pdf_scan_from_result(tmp_path, capsys):
    run(capsys, "solve", "--config", "ssvqe_11_sv", "--output", str(tmp_path / "s"))
    code, _, _ = run(capsys, "pdf-scan", "--config", "ssvqe_11_sv", "--result", str(tmp_path / "s" / "result.json"),
                     "--output", str(tmp_path / "p"))
    assert code == 0
    d = json.loads((tmp_path / "p" / "pdf.json").read_text())
    assert d["source"].endswith("result.json") and len(d["pdf"]) == 2
    for entry in d["pdf"]:
        assert entry["integral"] == pytest.approx(1, abs=1e-2)
        assert len((tmp_path / "p" / entry["file"]).read_text().splitlines()) == 20


def test_calibrate(tmp_path, capsys):
    assert run(capsys, "calibrate", "--config", "ssvqe_11_noisy_mitigated", "--output", str(tmp_path))[0] == 0
    d = json.loads((tmp_path / "calibration.json").read_text())
    cal = np.array(d["readout_calibration"]["matrix"])
    np.testing.assert_allclose(cal.sum(axis=0), 1)
    np.testing.assert_allclose(cal, np.array(d["readout_calibration"]["ideal"]), atol=0.01)
    assert d["decay_prefactor_K_MeV"] == pytest.approx(125.995, abs=1e-3)


def test_thread_cap_validation(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HADRONVQE_THREADS", "zero")
    code, _, err = run(capsys, "exact", "--config", "exact_11", "--output", str(tmp_path))
    assert code != 0 and "HADRONVQE_THREADS" in err


def test_console_script_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hadronvqe.cli", "exact", "--config", "exact_11", "--output",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "exact"
