import numpy as np
import pytest

from qnslab.noise import (
    CumulantOracle, QuantumBathModel, SpectrumComponent, SpectrumModel,
    autocovariance, classical_cumulant_oracle, psd, psd_hilbert,
    quantum_cumulant_oracle, sample_trajectories, unordered_spectrum,
)

OMEGA_H = 2 * np.pi / 960.0


def lorentzian_model(amp=1.0, width=1.0, center=0.0, omega_max=40.0):
    return SpectrumModel((SpectrumComponent("lorentzian", amp, center, width),),
                         omega_max=omega_max)


def test_psd_constant_and_lorentzian_values():
    m = SpectrumModel((SpectrumComponent("constant", 0.7),), omega_max=1.0)
    assert psd(m, 123.0) == pytest.approx(0.7)
    L = lorentzian_model(amp=1.0, width=1.0)
    assert psd(L, 0.0) == pytest.approx(1.0)
    assert psd(L, 1.0) == pytest.approx(0.5)
    assert np.all(psd(L, np.linspace(-5, 5, 101)) >= 0)


def test_psd_symmetry_and_peak_location():
    m = SpectrumModel(
        (SpectrumComponent("lorentzian", 1.0, 0.0, 1.5 * OMEGA_H),
         SpectrumComponent("gaussian_peak", 2.0, 3.5 * OMEGA_H, 0.2 * OMEGA_H)),
        omega_max=16 * OMEGA_H)
    w = np.linspace(-10 * OMEGA_H, 10 * OMEGA_H, 401)
    s = psd(m, w)
    assert np.allclose(s, s[::-1], atol=1e-15)
    peak_w = w[np.argmax(s * (w > 2 * OMEGA_H) * (w < 5 * OMEGA_H))]
    assert 3 * OMEGA_H < peak_w < 4 * OMEGA_H


def test_autocovariance_closed_forms():
    L = lorentzian_model(amp=2.0, width=0.8)
    tau = np.linspace(-30, 30, 401)
    assert np.allclose(autocovariance(L, tau), (2.0 * 0.8 / 2) * np.exp(-0.8 * np.abs(tau)))
    # tau = 0 equals (1/2pi) Int S for a numerically integrated check
    w = np.linspace(-4000, 4000, 2_000_001)
    val = np.trapezoid(psd(L, w), w) / (2 * np.pi)
    assert autocovariance(L, 0.0) == pytest.approx(val, rel=1e-3)


def test_autocovariance_quadrature_oracle_mixed_model():
    from scipy.integrate import quad
    m = SpectrumModel(
        (SpectrumComponent("lorentzian", 1.3, 5 * OMEGA_H, OMEGA_H),
         SpectrumComponent("gaussian_peak", 0.7, 3.5 * OMEGA_H, 0.2 * OMEGA_H)),
        omega_max=16 * OMEGA_H)
    for tau in (0.0, 55.0, 203.0, 977.0):
        if tau == 0.0:
            num = quad(lambda w: psd(m, w), 0, np.inf, limit=400)[0] / np.pi
        else:
            num = quad(lambda w: psd(m, w), 0, 200.0, weight="cos", wvar=tau,
                       limit=2000)[0] / np.pi
        assert autocovariance(m, tau) == pytest.approx(num, rel=1e-6, abs=1e-12)


def test_autocovariance_rejects_white_noise():
    m = SpectrumModel((SpectrumComponent("constant", 1.0),), omega_max=1.0)
    with pytest.raises(ValueError):
        autocovariance(m, 0.0)


def test_psd_hilbert_against_pv_quadrature():
    m = SpectrumModel(
        (SpectrumComponent("lorentzian", 1.0, 0.0, 2 * OMEGA_H),
         SpectrumComponent("gaussian_peak", 0.8, 3.5 * OMEGA_H, 0.4 * OMEGA_H)),
        omega_max=16 * OMEGA_H)
    h = 4e-6
    n = 1_200_000
    for w0 in (0.7 * OMEGA_H, 3.2 * OMEGA_H, 9.0 * OMEGA_H):
        # grid centred on the singularity: the symmetric hole realises the
        # principal value with O(h^2) error
        nu = w0 + h * np.arange(-n, n + 1)
        kern = np.zeros_like(nu)
        mask = nu != w0
        kern[mask] = 1.0 / (w0 - nu[mask])
        val = np.trapezoid(psd(m, nu) * kern, nu) / np.pi
        assert psd_hilbert(m, w0) == pytest.approx(val, rel=2e-3, abs=1e-7)


def test_trajectories_zero_model_and_determinism():
    zero = SpectrumModel((SpectrumComponent("lorentzian", 0.0, 0.0, 1.0),),
                         omega_max=10.0)
    b = sample_trajectories(zero, 1.0, 100.0, 3, seed=1)
    assert np.all(b == 0.0)
    m = lorentzian_model(amp=0.5, width=0.02, omega_max=0.5)
    b1 = sample_trajectories(m, 2.0, 400.0, 4, seed=42)
    b2 = sample_trajectories(m, 2.0, 400.0, 4, seed=42)
    assert np.array_equal(b1, b2)
    assert not np.array_equal(b1, sample_trajectories(m, 2.0, 400.0, 4, seed=43))


def test_trajectories_duration_check():
    with pytest.raises(ValueError):
        sample_trajectories(lorentzian_model(), 1.0, 0.0, 1, seed=0)


def test_trajectory_covariance_matches_autocovariance():
    m = SpectrumModel((SpectrumComponent("lorentzian", 0.004, 0.0, 0.01),),
                      omega_max=0.4)
    dt, duration, n = 2.0, 2400.0, 10_000
    b = sample_trajectories(m, dt, duration, n, seed=9)
    t = (np.arange(b.shape[1]) + 0.5) * dt
    i0 = 200
    for lag_ns in (0.0, 50.0, 200.0):
        j = i0 + int(round(lag_ns / dt))
        prod = b[:, i0] * b[:, j]
        est, se = prod.mean(), prod.std(ddof=1) / np.sqrt(n)
        assert abs(est - autocovariance(m, lag_ns)) < 3 * se + 1e-12
    assert abs(b.mean()) < 3 * np.sqrt(autocovariance(m, 0.0) / n)


# ------------------------------------------------------------------ oracles
def test_classical_oracles_values():
    m = lorentzian_model(amp=1.0, width=0.05, omega_max=2.0)
    g = lambda tau: autocovariance(m, tau)
    beta3 = classical_cumulant_oracle(m, "beta", 3, None)
    assert beta3(10.0, 20.0) == 0.0
    c2 = classical_cumulant_oracle(m, "beta_squared", 2, None)
    assert c2(0.0) == pytest.approx(2 * g(0.0) ** 2)
    assert c2(37.0) == pytest.approx(2 * g(37.0) ** 2)
    c3 = classical_cumulant_oracle(m, "beta_squared", 3, None)
    assert c3(100.0, 50.0) == pytest.approx(8 * g(100.0) * g(50.0) * g(150.0))
    for word in ("-",):
        assert classical_cumulant_oracle(m, "beta", 2, word)(5.0) == 0.0
    for word in ("+-", "-+", "--"):
        assert classical_cumulant_oracle(m, "beta_squared", 3, word)(5.0, 2.0) == 0.0
    # "+" brackets double per bracket level
    b2 = classical_cumulant_oracle(m, "beta_squared", 2, "+")
    assert b2(12.0) == pytest.approx(2 * c2(12.0))
    b3 = classical_cumulant_oracle(m, "beta_squared", 3, "++")
    assert b3(12.0, 30.0) == pytest.approx(4 * c3(12.0, 30.0))


def test_classical_oracle_validation():
    m = lorentzian_model()
    with pytest.raises(ValueError):
        classical_cumulant_oracle(m, "beta", 4, None)
    with pytest.raises(ValueError):
        classical_cumulant_oracle(m, "gamma", 2, None)
    with pytest.raises(ValueError):
        classical_cumulant_oracle(m, "beta", 2, "++")


def test_beta_squared_third_cumulant_vs_monte_carlo():
    m = SpectrumModel((SpectrumComponent("lorentzian", 0.004, 0.0, 0.01),),
                      omega_max=0.4)
    dt, duration, n = 2.0, 1600.0, 20_000
    b = sample_trajectories(m, dt, duration, n, seed=31)
    g0 = autocovariance(m, 0.0)
    x = b**2 - g0
    c3 = classical_cumulant_oracle(m, "beta_squared", 3, None)
    i0 = 100
    for (l1, l2) in ((0.0, 0.0), (100.0, 50.0)):
        j1 = i0 + int(round((l1 + l2) / dt))
        j2 = i0 + int(round(l2 / dt))
        prod = x[:, j1] * x[:, j2] * x[:, i0]
        est, se = prod.mean(), prod.std(ddof=1) / np.sqrt(n)
        assert abs(est - c3(l1, l2)) < 3.5 * se


def test_quantum_oracle_k2_closed_form():
    m = lorentzian_model(amp=0.01, width=0.01, omega_max=0.3)
    q = QuantumBathModel(base=m, omega_b=2 * OMEGA_H)
    g = lambda tau: autocovariance(m, tau)
    tau = np.linspace(-400, 400, 81)
    plus = quantum_cumulant_oracle(q, 2, "+")(tau)
    minus = quantum_cumulant_oracle(q, 2, "-")(tau)
    assert np.allclose(plus, 4 * g(tau) ** 2 * (1 + np.cos(2 * OMEGA_H * tau)), atol=1e-15)
    assert np.allclose(minus, 4j * g(tau) ** 2 * np.sin(2 * OMEGA_H * tau), atol=1e-15)
    # parity: anticommutator real even; commutator imaginary odd
    assert np.allclose(plus, plus[::-1])
    assert np.allclose(minus, -minus[::-1])
    assert np.allclose(plus.imag, 0) and np.allclose(minus.real, 0)


def test_quantum_oracle_maximally_mixed_commutator_vanishes():
    m = lorentzian_model(amp=0.01, width=0.01, omega_max=0.3)
    q = QuantumBathModel(base=m, omega_b=2 * OMEGA_H,
                         rho_b=np.eye(2, dtype=complex) / 2)
    tau = np.linspace(-200, 200, 41)
    assert np.allclose(quantum_cumulant_oracle(q, 2, "-")(tau), 0.0, atol=1e-16)


def test_quantum_oracle_zero_splitting_commutators_vanish():
    m = lorentzian_model(amp=0.01, width=0.01, omega_max=0.3)
    q = QuantumBathModel(base=m, omega_b=0.0)
    tau = np.linspace(-200, 200, 41)
    assert np.allclose(quantum_cumulant_oracle(q, 2, "-")(tau), 0.0, atol=1e-16)
    t2 = np.linspace(-150, 150, 31)
    for word in ("+-", "-+", "--"):
        vals = quantum_cumulant_oracle(q, 3, word)(tau[:, None], t2[None, :])
        assert np.allclose(vals, 0.0, atol=1e-16)


def test_quantum_bath_validation():
    m = lorentzian_model()
    bad_rho = np.array([[0.6, 0.2], [0.2, 0.4]], dtype=complex)
    with pytest.raises(ValueError):
        QuantumBathModel(base=m, omega_b=1.0, rho_b=bad_rho)


def test_quantum_oracle_k3_matches_brute_trace():
    from qnslab.pauli import MATRICES
    m = lorentzian_model(amp=0.01, width=0.008, omega_max=0.3)
    wb = 1.7 * OMEGA_H
    q = QuantumBathModel(base=m, omega_b=wb)
    g = lambda x: autocovariance(m, x)

    def a_op(t):
        th = wb * t
        return (MATRICES["z"] + np.cos(th) * MATRICES["x"]
                - np.sin(th) * MATRICES["y"])

    rho = q.rho_b

    def slot(t1, t2, t3):
        cl = 8 * g(t1 - t2) * g(t2 - t3) * g(t1 - t3)
        return cl * np.trace(rho @ a_op(t1) @ a_op(t2) @ a_op(t3))

    tau1, tau2 = 80.0, 35.0
    t1, t2, t3 = tau1 + tau2, tau2, 0.0
    for word in ("++", "+-", "-+", "--"):
        w1 = 1 if word[0] == "+" else -1
        w2 = 1 if word[1] == "+" else -1
        want = (slot(t1, t2, t3) + w1 * slot(t2, t1, t3)
                + w2 * slot(t3, t1, t2) + w1 * w2 * slot(t3, t2, t1))
        got = quantum_cumulant_oracle(q, 3, word)(tau1, tau2)
        assert np.allclose(got, want, rtol=1e-12)


# ------------------------------------------------------ unordered transform
def test_unordered_spectrum_lorentzian_closed_form():
    m = lorentzian_model(amp=1.0, width=0.02, omega_max=1.0)
    g_or = CumulantOracle(2, None, lambda tau: autocovariance(m, tau))
    grid = np.linspace(-0.2, 0.2, 161)
    s = unordered_spectrum(g_or, grid)
    ref = psd(m, grid)
    inner = np.abs(grid) < 0.15
    assert np.max(np.abs(s.real - ref)[inner]) < 1e-3 * ref.max()
    assert np.max(np.abs(s.imag)) < 1e-9 * ref.max()


def test_unordered_spectrum_commutator_parity():
    m = lorentzian_model(amp=0.05, width=0.01, omega_max=0.5)
    q = QuantumBathModel(base=m, omega_b=2 * OMEGA_H)
    grid = np.linspace(-16 * OMEGA_H, 16 * OMEGA_H, 513)
    s = unordered_spectrum(quantum_cumulant_oracle(q, 2, "-"), grid)
    # FT of imaginary odd function: real and odd
    assert np.max(np.abs(s.imag)) < 1e-10 * np.max(np.abs(s.real))
    assert np.max(np.abs(s.real + s.real[::-1])) < 1e-9 * np.max(np.abs(s.real))


def test_unordered_spectrum_zero_oracle():
    z = CumulantOracle(2, None, lambda tau: np.zeros_like(tau))
    s = unordered_spectrum(z, np.linspace(-1, 1, 33))
    assert np.allclose(s, 0.0)


def test_unordered_spectrum_rejects_nondecaying():
    c = CumulantOracle(2, None, lambda tau: np.ones_like(tau))
    with pytest.raises(ValueError):
        unordered_spectrum(c, np.linspace(-1, 1, 33))
