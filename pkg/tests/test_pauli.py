import numpy as np
import pytest
from scipy.linalg import expm

from qnslab.pauli import (
    AXES, LABELS, MATRICES, OperatorCoeffs, density_matrix, exp_pauli,
    exp_su2_batch, hs_project, pauli_mul, pauli_word, toggling_sign,
)


def test_basis_orthonormal_hermitian_selfinverse():
    for a in LABELS:
        m = MATRICES[a]
        assert np.allclose(m, m.conj().T)
        assert np.allclose(m @ m, np.eye(2))
        for b in LABELS:
            tr = np.trace(MATRICES[a].conj().T @ MATRICES[b])
            assert np.isclose(tr, 2.0 if a == b else 0.0)


@pytest.mark.parametrize("a,b,phase,c", [
    ("x", "y", 1j, "z"),
    ("1", "x", 1, "x"),
    ("z", "z", 1, "1"),
    ("y", "x", -1j, "z"),
    ("z", "x", 1j, "y"),
])
def test_pauli_mul_table(a, b, phase, c):
    ph, lab = pauli_mul(a, b)
    assert lab == c and ph == phase


def test_pauli_mul_matches_matrices_and_associativity():
    for a in LABELS:
        for b in LABELS:
            ph, c = pauli_mul(a, b)
            assert np.allclose(MATRICES[a] @ MATRICES[b], ph * MATRICES[c])
            assert pauli_mul(a, a) == (1, "1")
            for d in LABELS:
                ph1, e1 = pauli_word([a, b, d])
                ph_ab, ab = pauli_mul(a, b)
                ph2, e2 = pauli_mul(ab, d)
                assert e1 == e2 and np.isclose(ph1, ph_ab * ph2)


@pytest.mark.parametrize("a,alpha,s", [
    ("z", "z", 1), ("x", "z", 0), ("1", "y", 1), ("x", "x", 1), ("y", "x", 0),
])
def test_toggling_sign(a, alpha, s):
    assert toggling_sign(a, alpha) == s
    # Conjugation rule as explicit 2x2 products.
    lhs = MATRICES[alpha] @ MATRICES[a] @ MATRICES[alpha]
    assert np.allclose(lhs, (-1) ** (1 - s) * MATRICES[a])


def test_conjugation_rule_all_pairs():
    for a in LABELS:
        for alpha in LABELS:
            s = toggling_sign(a, alpha)
            lhs = MATRICES[alpha] @ MATRICES[a] @ MATRICES[alpha]
            assert np.allclose(lhs, (-1) ** (1 - s) * MATRICES[a])


def test_hs_project_trivial_cases():
    assert np.allclose(hs_project(np.eye(2)).as_array(), [1, 0, 0, 0])
    assert np.allclose(hs_project(MATRICES["x"]).as_array(), [0, 1, 0, 0])
    v = (MATRICES["x"] + MATRICES["z"]) / np.sqrt(2)
    assert np.allclose(hs_project(v).as_array(),
                       [0, 1 / np.sqrt(2), 0, 1 / np.sqrt(2)])


def test_hs_roundtrip_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        back = hs_project(op).reconstruct()
        assert np.max(np.abs(back - op)) < 1e-13


def test_exp_pauli_zero_and_pi_pulse():
    assert np.allclose(exp_pauli(OperatorCoeffs(0, 0, 0, 0)), np.eye(2))
    # exp(-i pi/2 X) = -i X
    u = exp_pauli(OperatorCoeffs(0, -1j * np.pi / 2, 0, 0))
    assert np.allclose(u, -1j * MATRICES["x"], atol=1e-14)


def test_exp_pauli_vs_taylor_series():
    c = OperatorCoeffs(-0.3, 0, 0, -0.7j)
    m = (c.c1 * np.eye(2) + c.cz * MATRICES["z"]).astype(complex)
    acc = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for n in range(1, 20):
        term = term @ m / n
        acc = acc + term
    assert np.max(np.abs(exp_pauli(c) - acc)) < 1e-12


def test_exp_pauli_vs_expm_random():
    rng = np.random.default_rng(1)
    for _ in range(50):
        vals = rng.normal(size=4) + 1j * rng.normal(size=4)
        vals[0] = vals[0].real
        c = OperatorCoeffs(*vals)
        m = c.reconstruct()
        assert np.max(np.abs(exp_pauli(c) - expm(m))) < 1e-12


def test_exp_pauli_inverse_property():
    rng = np.random.default_rng(2)
    for _ in range(200):
        # anti-Hermitian exponents (propagator case): absolute 1e-12
        v = 1j * rng.normal(size=3)
        v *= 5.0 / max(1.0, np.linalg.norm(v))
        u = exp_pauli(OperatorCoeffs(0, *v))
        w = exp_pauli(OperatorCoeffs(0, *(-v)))
        assert np.max(np.abs(u @ w - np.eye(2))) < 1e-12
        # generic complex exponents: relative to the product of norms
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v *= 5.0 / max(1.0, np.linalg.norm(v))
        u = exp_pauli(OperatorCoeffs(0, *v))
        w = exp_pauli(OperatorCoeffs(0, *(-v)))
        scale = np.linalg.norm(u) * np.linalg.norm(w)
        assert np.max(np.abs(u @ w - np.eye(2))) < 1e-12 * max(1.0, scale)


def test_exp_su2_batch_matches_scalar():
    rng = np.random.default_rng(3)
    cx, cy, cz = (rng.normal(size=17) + 1j * rng.normal(size=17) for _ in range(3))
    batch = exp_su2_batch(cx, cy, cz)
    for i in range(17):
        ref = exp_pauli(OperatorCoeffs(0, cx[i], cy[i], cz[i]))
        assert np.max(np.abs(batch[i] - ref)) < 1e-12


def test_density_matrices_valid():
    for xi in ("1",) + AXES:
        rho = density_matrix(xi)
        assert np.isclose(np.trace(rho), 1.0)
        assert np.allclose(rho, rho.conj().T)
        assert np.min(np.linalg.eigvalsh(rho)) > -1e-15
