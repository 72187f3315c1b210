"""Acceptance suite.

Each test carries its criterion line as the first docstring line; the conftest
hook prints one PASS/FAIL line per test with the measured value.  Expensive runs
go through the command-line entry point once per module and are shared.
"""
import itertools
import json

import numpy as np
import pytest

from hadronvqe.ansatz import AnsatzSpec
from hadronvqe.blfq import (PARAMS_1_1, PARAMS_4_1, builtin_catalog, builtin_hamiltonian, builtin_operator_4_1,
                            exact_eigensolve, masses)
from hadronvqe.circuit import (NoiseSpec, QuantumState, apply_circuit, density_matrix, DensityMatrixSimulator)
from hadronvqe.cli import main
from hadronvqe.config import RunConfig
from hadronvqe.engine import EnergyEvaluator
from hadronvqe.observables import classical_pdf, default_grid, integrate_pdf, measure_decay_constant, pdf_operator, \
    pdf_scan
from hadronvqe.optimizers import parameter_shift_gradient
from hadronvqe.pauli import compact_encode, jw_encode_one_body, jw_lower, jw_raise, reconstruct_matrix

H11 = builtin_hamiltonian("builtin_1_1").matrix
EXACT_11 = [543059, 593915, 1685209, 1716743]
EXACT_41 = [369016, 575707, 737759, 976608]
SV_41 = [369256, 576234, 739282, 981089]
CAT11, CAT41 = builtin_catalog((1, 1)), builtin_catalog((4, 1))
PRINTED_DIRECT = {"IIII": 2269462, "ZIII": -284243, "IIZI": -284243, "IZII": -850488, "IIIZ": -850488,
                  "XZXI": 12714, "YZYI": 12714, "IXZX": -7883, "IYZY": -7883}
PRINTED_PDF = {
    "D1": ((1, 1), 0.5, {"II": 1.30, "IX": -1.29, "IZ": -0.18}),
    "D2": ((1, 1), 0.25, {"II": 0.78, "IZ": 0.78}),
    "D3": ((4, 1), 0.5, {"IIII": 0.39, "IIIZ": 0.39, "ZZII": -0.39, "ZZIZ": -0.39}),
    "D4": ((4, 1), 0.25, {"IIII": 0.65, "IIIX": -0.65, "ZZII": -0.65, "ZZIX": 0.65, "ZZIZ": 0.09, "IIIZ": -0.09}),
}


def solve(tmp_path_factory, config, seed=None):
    out = tmp_path_factory.mktemp(config)
    argv = ["solve", "--config", config, "--output", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    assert main(argv) == 0
    return json.loads((out / "result.json").read_text())


def final_states(result):
    cfg = RunConfig.from_dict(result["config"], "result.json")
    circuit = cfg.ansatz_spec(result["n_qubits"]).build()
    params = np.array(result["params"])
    return circuit, params, [apply_circuit(circuit, params, s["reference"]) for s in result["states"]]


def max_coeff_deviation(got: dict, want: dict) -> float:
    keys = set(got) | set(want)
    return max(abs(got.get(k, 0).real - want.get(k, 0)) for k in keys)


@pytest.fixture(scope="module")
def shots_11(tmp_path_factory):
    return solve(tmp_path_factory, "ssvqe_11_shots")


@pytest.fixture(scope="module")
def sv_41(tmp_path_factory):
    return solve(tmp_path_factory, "ssvqe_41_sv")


# --- 1: encodings ------------------------------------------------------------------

def test_ac1_compact_coefficients(record_property):
    """AC1 compact encoding of the (1,1) matrix matches the printed four coefficients within 1"""
    got = compact_encode(H11).labels()
    dev = max_coeff_deviation(got, {"II": 1134731, "IZ": -566245, "XI": 4831, "XZ": 20598})
    record_property("measured", f"max deviation {dev:.2f}")
    assert dev <= 1


def test_ac1_direct_terms_literal(record_property):
    """AC1 direct encoding matches the printed direct-operator strings within 1 as printed"""
    got = jw_encode_one_body(H11, 4).labels()
    dev = max_coeff_deviation(got, PRINTED_DIRECT)
    record_property("measured", f"{len(got)} distinct strings, max deviation {dev:.1f}")
    assert dev <= 1


def test_ac1_direct_terms_reversed_qubit_order(record_property):
    """AC1 direct encoding matches the printed strings within 1 after reversing qubit order"""
    got = {k[::-1]: v for k, v in jw_encode_one_body(H11, 4).labels().items()}
    dev = max_coeff_deviation(got, PRINTED_DIRECT)
    record_property("measured", f"max deviation {dev:.2f}")
    assert dev <= 1


def test_ac1_large_operator_hermitian(record_property):
    """AC1 reconstructed 16x16 operator is Hermitian to 1e-9 relative"""
    m = reconstruct_matrix(builtin_operator_4_1())
    rel = np.abs(m - m.conj().T).max() / np.abs(m).max()
    record_property("measured", f"relative asymmetry {rel:.1e}")
    assert rel <= 1e-9


# --- 2: exact spectroscopy ---------------------------------------------------------

def test_ac2_exact_11(record_property):
    """AC2 (1,1) eigenvalues within 1 and masses round to 737/771/1298/1310"""
    vals, _ = exact_eigensolve(H11)
    record_property("measured", " ".join(f"{v:.1f}" for v in vals))
    np.testing.assert_allclose(vals, EXACT_11, atol=1)
    assert [round(m) for m in masses(vals)] == [737, 771, 1298, 1310]


def test_ac2_exact_41(record_property):
    """AC2 (4,1) lowest four eigenvalues within 2"""
    vals, _ = exact_eigensolve(builtin_hamiltonian("builtin_4_1").matrix)
    record_property("measured", " ".join(f"{v:.1f}" for v in vals[:4]))
    np.testing.assert_allclose(vals[:4], EXACT_41, atol=2)


# --- 3: statevector VQE / SSVQE ----------------------------------------------------

def test_ac3_vqe_both_encodings(tmp_path_factory, record_property):
    """AC3 (1,1) statevector VQE ground energy within 1 for compact and direct encodings"""
    e = [solve(tmp_path_factory, c)["states"][0]["energy_MeV2"] for c in ("vqe_11_sv_compact", "vqe_11_sv_direct")]
    record_property("measured", f"compact {e[0]:.2f}, direct {e[1]:.2f}")
    np.testing.assert_allclose(e, EXACT_11[0], atol=1)


def test_ac3_ssvqe_11(tmp_path_factory, record_property):
    """AC3 (1,1) statevector SSVQE energies within 1 of exact"""
    e = [s["energy_MeV2"] for s in solve(tmp_path_factory, "ssvqe_11_sv")["states"]]
    record_property("measured", " ".join(f"{v:.2f}" for v in e))
    np.testing.assert_allclose(e, EXACT_11, atol=1)


@pytest.mark.slow
def test_ac3_ssvqe_41(sv_41, record_property):
    """AC3 (4,1) statevector SSVQE energies within 0.5% of the ansatz-limited reference values"""
    e = np.array([s["energy_MeV2"] for s in sv_41["states"]])
    rel = np.abs(e / SV_41 - 1)
    record_property("measured", " ".join(f"{v:.0f}" for v in e) + f", max rel {rel.max():.2%}")
    assert np.all(rel <= 5e-3)


# --- 4: shot statistics ------------------------------------------------------------

@pytest.mark.slow
def test_ac4_shot_energies_within_four_sigma(shots_11, record_property):
    """AC4 20000-shot (1,1) SSVQE energies each within 4 sigma of exact"""
    z = [(s["energy_MeV2"] - e) / s["std_error"] for s, e in zip(shots_11["states"], EXACT_11)]
    record_property("measured", "z = " + " ".join(f"{v:+.2f}" for v in z))
    assert all(abs(v) <= 4 for v in z)


@pytest.mark.slow
def test_ac4_sigma_range(shots_11, record_property):
    """AC4 20000-shot sigma lies in [20, 100] MeV^2 for every state"""
    sig = [s["std_error"] for s in shots_11["states"]]
    record_property("measured", "sigma " + " ".join(f"{v:.2f}" for v in sig))
    assert all(20 <= v <= 100 for v in sig)


@pytest.mark.slow
def test_ac4_sigma_scaling(shots_11, record_property):
    """AC4 sigma ratio between N and 4N shots is 2 within 20%"""
    circuit, params, _ = final_states(shots_11)
    op = compact_encode(H11)
    sig = [EnergyEvaluator(op, circuit, "SHOTS", n).measured(params, range(4), 11)[1] for n in (5000, 20000)]
    ratio = sig[0] / sig[1]
    record_property("measured", "ratios " + " ".join(f"{v:.3f}" for v in ratio))
    assert np.all(np.abs(ratio / 2 - 1) <= 0.2)


# --- 5: decay constants ------------------------------------------------------------

def test_ac5_sv_decay_11(record_property):
    """AC5 (1,1) statevector f_pi = f_rho = 178.18 within 0.01 MeV"""
    _, vecs = exact_eigensolve(H11)
    f = [measure_decay_constant(QuantumState.from_vector(vecs[:, i]), ch, CAT11, PARAMS_1_1).f_MeV
         for i, ch in ((0, "pseudoscalar"), (1, "vector"))]
    record_property("measured", f"f_pi {f[0]:.4f}, f_rho {f[1]:.4f}")
    np.testing.assert_allclose(f, 178.18, atol=0.01)


@pytest.mark.slow
def test_ac5_sv_fpi_41(sv_41, record_property):
    """AC5 (4,1) statevector SSVQE f_pi in [199, 201] MeV"""
    f = {(e["state"], e["channel"]): e["f_MeV"] for e in sv_41["observables"]["decay"]}[0, "pseudoscalar"]
    record_property("measured", f"f_pi {f:.3f}")
    assert 199 <= f <= 201


@pytest.mark.slow
def test_ac5_sv_frho_41(sv_41, record_property):
    """AC5 (4,1) statevector SSVQE f_rho in [228, 231] MeV"""
    f = {(e["state"], e["channel"]): e["f_MeV"] for e in sv_41["observables"]["decay"]}[1, "vector"]
    _, vecs = exact_eigensolve(builtin_hamiltonian("builtin_4_1").matrix)
    ex = measure_decay_constant(QuantumState.from_vector(vecs[:, 1]), "vector", CAT41, PARAMS_4_1).f_MeV
    record_property("measured", f"f_rho {f:.3f} (exact eigenvector {ex:.3f})")
    assert 228 <= f <= 231


@pytest.mark.slow
def test_ac5_shot_decay_within_three_sigma(shots_11, record_property):
    """AC5 shot-tier decay constants within 3 sigma of the statevector value of the same state"""
    _, _, states = final_states(shots_11)
    shot = {(e["state"], e["channel"]): e for e in shots_11["observables"]["decay"]}
    z = []
    for i, ch in ((0, "pseudoscalar"), (1, "vector")):
        sv = measure_decay_constant(states[i], ch, CAT11, PARAMS_1_1).f_MeV
        e = shot[i, ch]
        z.append((e["f_MeV"] - sv) / max(e["std_error"], 1e-12))
    record_property("measured", "z = " + " ".join(f"{v:+.2f}" for v in z))
    assert all(abs(v) <= 3 for v in z)


@pytest.mark.slow
def test_ac5_shot_decay_sigma_range(shots_11, record_property):
    """AC5 shot-tier decay-constant sigma in [5, 12] MeV"""
    shot = {(e["state"], e["channel"]): e["std_error"] for e in shots_11["observables"]["decay"]}
    sig = [shot[0, "pseudoscalar"], shot[1, "vector"]]
    record_property("measured", "sigma " + " ".join(f"{v:.3f}" for v in sig))
    assert all(5 <= v <= 12 for v in sig)


# --- 6: PDFs -----------------------------------------------------------------------

@pytest.mark.parametrize("which", list(PRINTED_PDF))
def test_ac6_pdf_operator_literal(which, record_property):
    """AC6 pdf operator coefficients match the printed operator within 0.01 at its printed x"""
    trunc, x, want = PRINTED_PDF[which]
    cat, params = (CAT11, PARAMS_1_1) if trunc == (1, 1) else (CAT41, PARAMS_4_1)
    dev = max_coeff_deviation(pdf_operator(x, cat, params).labels(), want)
    record_property("measured", f"{which} at x={x}: max deviation {dev:.3f}")
    assert dev <= 0.01


@pytest.mark.parametrize("which,x", [("D1", 0.25), ("D2", 0.5)])
def test_ac6_pdf_operator_swapped_x(which, x, record_property):
    """AC6 (1,1) pdf operators match the printed ones within 0.01 with the two x labels exchanged"""
    dev = max_coeff_deviation(pdf_operator(x, CAT11, PARAMS_1_1).labels(), PRINTED_PDF[which][2])
    record_property("measured", f"{which} at x={x}: max deviation {dev:.3f}")
    assert dev <= 0.01


def test_ac6_scan_matches_classical(record_property):
    """AC6 statevector pdf scan on the exact (1,1) ground state matches the classical sum to 1e-6 at 19 points"""
    _, vecs = exact_eigensolve(H11)
    scan = pdf_scan(QuantumState.from_vector(vecs[:, 0]), CAT11, PARAMS_1_1)
    dev = max(abs(q - classical_pdf(vecs[:, 0], CAT11, PARAMS_1_1, x)) for x, q, _ in scan)
    record_property("measured", f"{len(scan)} points, max deviation {dev:.1e}")
    assert len(scan) == 19 and dev <= 1e-6


def test_ac6_integral_and_symmetry(record_property):
    """AC6 (1,1) ground-state pdf integrates to 1 within 1e-2 and satisfies q(x) = q(1-x) to 1e-6"""
    _, vecs = exact_eigensolve(H11)
    xs = default_grid()
    qs = np.array([q for _, q, _ in pdf_scan(QuantumState.from_vector(vecs[:, 0]), CAT11, PARAMS_1_1, xs)])
    integral, asym = integrate_pdf(xs, qs), np.abs(qs - qs[::-1]).max()
    record_property("measured", f"integral {integral:.5f}, asymmetry {asym:.1e}")
    assert abs(integral - 1) <= 1e-2 and asym <= 1e-6


# --- 7: properties -----------------------------------------------------------------

def test_ac7_jw_anticommutation(record_property):
    """AC7 fermionic anticommutation relations hold exhaustively for n <= 4"""
    worst = 0.0
    for n in range(1, 5):
        a = [reconstruct_matrix(jw_lower(j, n)) for j in range(n)]
        ad = [reconstruct_matrix(jw_raise(j, n)) for j in range(n)]
        for i, j in itertools.product(range(n), repeat=2):
            worst = max(worst, np.abs(a[i] @ a[j] + a[j] @ a[i]).max(),
                        np.abs(a[i] @ ad[j] + ad[j] @ a[i] - np.eye(1 << n) * (i == j)).max())
    record_property("measured", f"max violation {worst:.1e}")
    assert worst <= 1e-12


def test_ac7_excitation_identity(record_property):
    """AC7 single-excitation generator equals its Z-chain Pauli form for every pair with n <= 4"""
    from hadronvqe.pauli import PauliString
    worst = 0.0
    for n in range(2, 5):
        for j, i in itertools.combinations(range(n), 2):
            lhs = reconstruct_matrix(jw_raise(i, n) * jw_lower(j, n) - jw_raise(j, n) * jw_lower(i, n))
            f = {q: "Z" for q in range(j + 1, i)}

            def dense(fj, fi):
                g = {**f, j: fj, i: fi}
                return PauliString.from_label("".join(g.get(q, "I") for q in reversed(range(n)))).to_matrix()

            worst = max(worst, np.abs(lhs - 0.5j * (dense("Y", "X") - dense("X", "Y"))).max())
    record_property("measured", f"max deviation {worst:.1e}")
    assert worst <= 1e-12


def test_ac7_compact_round_trip(record_property):
    """AC7 compact encoding round-trips random Hermitian matrices for n <= 5"""
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in range(1, 6):
        for _ in range(5):
            a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
            h = a + a.conj().T
            worst = max(worst, np.abs(reconstruct_matrix(compact_encode(h)) - h).max() / np.abs(h).max())
    record_property("measured", f"max relative error {worst:.1e}")
    assert worst <= 1e-12


def test_ac7_ssvqe_orthogonality(record_property):
    """AC7 evolved reference states are orthonormal to 1e-10 at random parameters"""
    rng = np.random.default_rng(3)
    worst = 0.0
    for n, reps in ((2, 2), (4, 6)):
        c = AnsatzSpec("HEA", n, reps).build()
        for _ in range(5):
            x = rng.uniform(-np.pi, np.pi, c.n_parameters)
            s = np.array([apply_circuit(c, x, r).amplitudes for r in range(4)])
            worst = max(worst, np.abs(s.conj() @ s.T - np.eye(4)).max())
    record_property("measured", f"max |<i|j> - delta| {worst:.1e}")
    assert worst <= 1e-10


def test_ac7_parameter_shift_vs_finite_difference(record_property):
    """AC7 parameter-shift gradients agree with finite differences to 1e-5"""
    rng = np.random.default_rng(5)
    worst = 0.0
    for spec, ref in ((AnsatzSpec("HEA", 2, 2), 0), (AnsatzSpec("UCC_single", 4, occupied_mode=0), 1)):
        c = spec.build()
        op = compact_encode(H11 / 1e6) if c.n_qubits == 2 else jw_encode_one_body(H11 / 1e6, 4)
        ev = EnergyEvaluator(op, c, "SV")
        fn = lambda p: ev.exact(p, [ref])[0]
        angle_fn = lambda a: ev.exact_from_angles(a, [ref])[0]
        for _ in range(3):
            x = rng.uniform(-np.pi, np.pi, c.n_parameters)
            g = parameter_shift_gradient(fn, x, c, angle_fn)
            h = 1e-6
            fd = np.array([(fn(x + h * e) - fn(x - h * e)) / (2 * h) for e in np.eye(x.size)])
            worst = max(worst, np.abs(g - fd).max())
    record_property("measured", f"max deviation {worst:.1e}")
    assert worst <= 1e-5


def test_ac7_density_matrix_purity(record_property):
    """AC7 density matrices of simulated pure states have purity 1 within 1e-10"""
    rng = np.random.default_rng(9)
    c = AnsatzSpec("HEA", 4, 6).build()
    sim = DensityMatrixSimulator(4, NoiseSpec())
    worst = 0.0
    for _ in range(5):
        x = rng.uniform(-np.pi, np.pi, c.n_parameters)
        for rho in (density_matrix(apply_circuit(c, x, 2)), sim.evolve(c, c.angles(x), sim.initial(2))):
            worst = max(worst, abs(np.trace(rho @ rho).real - 1))
    record_property("measured", f"max |Tr rho^2 - 1| {worst:.1e}")
    assert worst <= 1e-10


# --- 8: noisy tier -----------------------------------------------------------------

@pytest.fixture(scope="module")
def noisy_study(tmp_path_factory):
    out = {}
    for cfg in ("ssvqe_11_noisy", "ssvqe_11_noisy_mitigated"):
        e0 = [solve(tmp_path_factory, cfg, seed)["states"][0]["energy_MeV2"] for seed in range(10)]
        out[cfg] = np.array(e0)
    return out


def _bias(e0):
    return e0.mean() - EXACT_11[0], e0.std(ddof=1) / np.sqrt(e0.size)


@pytest.mark.slow
def test_ac8_noisy_ground_biased_upward(noisy_study, record_property):
    """AC8 noisy-tier ground energy is biased above exact by more than 3 sigma over 10 seeds"""
    b, se = _bias(noisy_study["ssvqe_11_noisy"])
    record_property("measured", f"bias {b:.0f} +- {se:.0f}")
    assert b > 3 * se


@pytest.mark.slow
def test_ac8_mitigation_reduces_bias(noisy_study, record_property):
    """AC8 readout mitigation reduces the noisy-tier ground-energy bias"""
    raw, _ = _bias(noisy_study["ssvqe_11_noisy"])
    mit, se = _bias(noisy_study["ssvqe_11_noisy_mitigated"])
    record_property("measured", f"raw {raw:.0f}, mitigated {mit:.0f} +- {se:.0f}")
    assert abs(mit) < abs(raw)
