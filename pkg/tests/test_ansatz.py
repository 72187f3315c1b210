import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import minimize

from hadronvqe.ansatz import AnsatzSpec, build_hea, build_ucc_single, pauli_exponential
from hadronvqe.circuit import Circuit, apply_circuit


def lowering(j, n):
    # dense Jordan-Wigner a_j: Z on qubits below j, (X + iY)/2 on j; qubit 0 is the lowest bit
    dim = 1 << n
    m = np.zeros((dim, dim))
    for b in range(dim):
        if (b >> j) & 1:
            m[b ^ (1 << j), b] = (-1) ** bin(b & ((1 << j) - 1)).count("1")
    return m


def ucc_exact(n, r, thetas):
    gen = np.zeros((1 << n, 1 << n))
    for k, p in enumerate(q for q in range(n) if q != r):
        ap, ar = lowering(p, n), lowering(r, n)
        gen += thetas[k] * (ap.T @ ar - ar.T @ ap)
    return expm(gen)


@pytest.mark.parametrize("n,reps,count", [(2, 1, 8), (4, 6, 56), (5, 5, 60)])
def test_hea_parameter_counts(n, reps, count):
    c = build_hea(n, reps)
    assert c.n_parameters == count == AnsatzSpec("HEA", n, reps).n_parameters
    assert sum(g.kind == "CX" for g in c.gates) == reps * (n - 1)


def test_hea_layer_order():
    lines = build_hea(2, 1).dump().splitlines()
    assert lines[:4] == ["RY 0 p0", "RY 1 p1", "RZ 0 p2", "RZ 1 p3"]
    assert lines[4] == "CX 1 0"


def test_hea_rejects_bad_sizes():
    with pytest.raises(ValueError):
        build_hea(0, 1)
    with pytest.raises(ValueError):
        build_hea(2, -1)


def test_ucc_counts_and_subcircuits():
    c = build_ucc_single(4, 0, 1)
    assert c.n_parameters == 3 == AnsatzSpec("UCC_single", 4).n_parameters
    assert sum(g.param is not None for g in c.gates) == 6


def test_ucc_zero_angles_is_identity_on_reference():
    out = apply_circuit(build_ucc_single(4, 0), np.zeros(3), 0b0001).amplitudes
    assert abs(out[0b0001]) == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("t", [0.3, -1.1, 2.0])
def test_ucc_two_mode_rotation(t):
    out = apply_circuit(build_ucc_single(2, 0), [t], 0b01).amplitudes
    target = np.array([0, np.cos(t), np.sin(t), 0])
    assert abs(np.vdot(target, out)) ** 2 >= 1 - 1e-10


@settings(max_examples=20)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1))), st.integers(0, 2 ** 31))
def test_ucc_single_theta_matches_matrix_exponential(nr, seed):
    n, r = nr
    rng = np.random.default_rng(seed)
    k = int(rng.integers(n - 1))
    thetas = np.zeros(n - 1)
    thetas[k] = rng.uniform(-np.pi, np.pi)
    out = apply_circuit(build_ucc_single(n, r), thetas, 1 << r).amplitudes
    exact = ucc_exact(n, r, thetas)[:, 1 << r]
    assert abs(np.vdot(exact, out)) ** 2 >= 1 - 1e-10


@settings(max_examples=20)
@given(st.integers(2, 5), st.integers(0, 2 ** 31))
def test_ucc_preserves_particle_number(n, seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(n))
    c = build_ucc_single(n, r, int(rng.integers(1, 3)))
    thetas = rng.uniform(-np.pi, np.pi, n - 1)
    for init in (1 << q for q in range(n)):
        out = apply_circuit(c, thetas, init).amplitudes
        off = [i for i in range(1 << n) if bin(i).count("1") != 1]
        assert np.max(np.abs(out[off])) <= 1e-10


def test_ucc_trotter_converges_to_exponential():
    thetas = np.array([0.7, -0.4, 0.9])
    exact = ucc_exact(4, 0, thetas)[:, 1]
    infid = [1 - abs(np.vdot(exact, apply_circuit(build_ucc_single(4, 0, rho), thetas, 1).amplitudes)) ** 2
             for rho in (1, 4, 16)]
    assert infid[2] < infid[1] < infid[0]
    assert infid[2] < 1e-3


def test_ucc_errors():
    with pytest.raises(IndexError):
        build_ucc_single(4, 4)
    with pytest.raises(ValueError):
        build_ucc_single(4, 0, 0)
    with pytest.raises(ValueError):
        AnsatzSpec("ALT", 2)


@pytest.mark.parametrize("label", ["XY", "YZ", "ZXY", "YIY"])
def test_pauli_exponential_matches_expm(label):
    n = len(label)
    factors = {n - 1 - i: ch for i, ch in enumerate(label) if ch != "I"}
    c = Circuit(n, pauli_exponential(n, factors, 0, 1.0), 1)
    P = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
    dense = reduce(np.kron, [P[ch] for ch in label])
    u = expm(-0.5j * 0.83 * dense)
    for init in range(1 << n):
        out = apply_circuit(c, [0.83], init).amplitudes
        np.testing.assert_allclose(out, u[:, init], atol=1e-12)


@pytest.mark.parametrize("target", range(4))
def test_hea_reaches_every_basis_state(target):
    c = build_hea(2, 1)

    def infidelity(x):
        return 1 - abs(apply_circuit(c, x).amplitudes[target]) ** 2

    best = min((minimize(infidelity, x0, method="BFGS")
                for x0 in np.random.default_rng(target).uniform(-np.pi, np.pi, (5, 8))), key=lambda r: r.fun)
    assert best.fun <= 1e-6


def test_hea_unitarity_keeps_references_orthogonal():
    c = build_hea(3, 2)
    x = np.random.default_rng(0).uniform(-np.pi, np.pi, c.n_parameters)
    states = [apply_circuit(c, x, r).amplitudes for r in range(8)]
    for i, j in itertools.combinations(range(8), 2):
        assert abs(np.vdot(states[i], states[j])) <= 1e-12
