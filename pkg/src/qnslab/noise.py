"""Noise environments: spectra, trajectories, and bracket-cumulant oracles.

Spectral densities are symmetric functions S(omega) >= 0 in rad/ns units
with the transform pair

    g(tau) = (1/2 pi) Int S(omega) e^{i omega tau} d omega,

so g(0) is the process variance.  Classical trajectories beta(t) are
synthesised by harmonic superposition on a uniform frequency grid.

Cumulant oracles return the bracket cumulants G^w of the bath coupling
operator B(t): at k=2, G^+/- (tau) = <B(t+tau) B(t)>_C +/- <B(t) B(t+tau)>_C;
at k=3 the left-nested double brackets over the orderings (123), (213),
(312), (321) in successive-difference lags (tau1, tau2) = (s1-s2, s2-s3).
Passing word=None gives the plain slot-ordered cumulant.  Classically all
orderings coincide, so every word containing "-" vanishes.

The auxiliary-qubit quantum model couples B(t) = (beta^2(t) - g(0)) A(t)
with A(t) = e^{i H_B t} (X + Z) e^{-i H_B t}, H_B = (omega_B/2) Z, which
keeps the bath state rho_B = |0><0| stationary and makes all bracket
cumulants closed-form products of a classical part and a Pauli trace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import dawsn

from .pauli import MATRICES


@dataclass(frozen=True)
class SpectrumComponent:
    kind: str          # "lorentzian" | "gaussian_peak" | "constant"
    amplitude: float   # peak scale of S (rad/ns units of S)
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lorentzian", "gaussian_peak", "constant"):
            raise ValueError(f"unknown component kind {self.kind!r}")
        if self.kind != "constant" and self.width <= 0:
            raise ValueError("width must be positive")


@dataclass(frozen=True)
class SpectrumModel:
    components: tuple[SpectrumComponent, ...]
    omega_max: float   # synthesis cutoff (rad/ns)

    @property
    def has_constant(self) -> bool:
        return any(c.kind == "constant" for c in self.components)

    def scaled(self, factor: float) -> "SpectrumModel":
        comps = tuple(SpectrumComponent(c.kind, c.amplitude * factor, c.center,
                                        c.width) for c in self.components)
        return SpectrumModel(comps, self.omega_max)


def psd(model: SpectrumModel, omega) -> np.ndarray:
    """S(omega): symmetric sum of component profiles.

    lorentzian: (A/2) [w^2/(w^2+(o-c)^2) + w^2/(w^2+(o+c)^2)]
    gaussian_peak: (A/2) [exp(-(o-c)^2/2w^2) + exp(-(o+c)^2/2w^2)]
    constant: A
    """
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    for c in model.components:
        if c.kind == "constant":
            out = out + c.amplitude
        elif c.kind == "lorentzian":
            out = out + (c.amplitude / 2) * (
                c.width**2 / (c.width**2 + (omega - c.center) ** 2)
                + c.width**2 / (c.width**2 + (omega + c.center) ** 2))
        else:
            out = out + (c.amplitude / 2) * (
                np.exp(-((omega - c.center) ** 2) / (2 * c.width**2))
                + np.exp(-((omega + c.center) ** 2) / (2 * c.width**2)))
    return out


def psd_hilbert(model: SpectrumModel, omega) -> np.ndarray:
    """Closed-form Hilbert transform H[S](omega), kernel 1/(pi (omega - nu)).

    Used as the independent oracle for Im parts of ordered spectra:
    H[w^2/(w^2+x^2)] = w x/(w^2+x^2) and H[exp(-x^2/2w^2)] =
    (2/sqrt(pi)) dawsn(x/(w sqrt(2))).  Constants transform to zero.
    """
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    for c in model.components:
        if c.kind == "constant":
            continue
        for s in (+1.0, -1.0):
            x = omega - s * c.center
            if c.kind == "lorentzian":
                out = out + (c.amplitude / 2) * c.width * x / (c.width**2 + x**2)
            else:
                out = out + (c.amplitude / 2) * (2 / np.sqrt(np.pi)) * dawsn(
                    x / (c.width * np.sqrt(2)))
    return out


def autocovariance(model: SpectrumModel, tau) -> np.ndarray:
    """g(tau) = (1/2 pi) Int S e^{i omega tau}, componentwise closed form."""
    if model.has_constant:
        raise ValueError("white-noise components have no lag-domain form")
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    for c in model.components:
        if c.kind == "lorentzian":
            out = out + (c.amplitude * c.width / 2) * np.exp(-c.width * np.abs(tau)) \
                * np.cos(c.center * tau)
        else:
            out = out + c.amplitude * c.width / np.sqrt(2 * np.pi) \
                * np.exp(-(c.width**2) * tau**2 / 2) * np.cos(c.center * tau)
    return out


def sample_trajectories(model: SpectrumModel, dt: float, duration: float,
                        n_traj: int, seed: int,
                        t_grid: np.ndarray | None = None) -> np.ndarray:
    """Harmonic-superposition synthesis of beta(t), shape (n_traj, n_steps).

    beta(t) = sum_n sqrt(S(w_n) dw / pi) [a_n cos w_n t + b_n sin w_n t]
    on the half-grid w_n = (n + 1/2) dw up to omega_max, a_n, b_n iid
    standard normal.  Ensemble covariance converges to g(tau) as dw -> 0.
    Deterministic for fixed seed.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if model.has_constant:
        raise ValueError("white-noise components cannot be synthesised")
    if t_grid is None:
        t_grid = (np.arange(int(round(duration / dt))) + 0.5) * dt
    # Frequency resolution well below 1/duration so finite-grid covariance
    # error stays under the Monte-Carlo noise floor.
    dw = 2 * np.pi / (8 * duration)
    n_comp = int(np.ceil(model.omega_max / dw))
    w = (np.arange(n_comp) + 0.5) * dw
    amp = np.sqrt(psd(model, w) * dw / np.pi)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_traj, n_comp))
    b = rng.standard_normal((n_traj, n_comp))
    cos_t = np.cos(np.outer(w, t_grid))
    sin_t = np.sin(np.outer(w, t_grid))
    return (a * amp) @ cos_t + (b * amp) @ sin_t


@dataclass(frozen=True)
class QuantumBathModel:
    """Auxiliary bath qubit driven by the centred squared process."""

    base: SpectrumModel
    omega_b: float                      # bath splitting (rad/ns)
    rho_b: np.ndarray = field(default_factory=lambda: np.array(
        [[1.0, 0.0], [0.0, 0.0]], dtype=complex))

    def __post_init__(self):
        h_b = (self.omega_b / 2) * MATRICES["z"]
        if np.max(np.abs(self.rho_b @ h_b - h_b @ self.rho_b)) > 1e-12:
            raise ValueError("rho_B must commute with H_B (stationary bath)")
        if abs(np.trace(self.rho_b) - 1) > 1e-12:
            raise ValueError("rho_B must have unit trace")

    def pauli_weights(self) -> tuple[float, float, float, float]:
        """(r1, rx, ry, rz) with Tr[rho_B P] = r; used by the trace factors."""
        return tuple(np.trace(self.rho_b @ MATRICES[lab]).real
                     for lab in ("1", "x", "y", "z"))


def _bath_axis_op(theta):
    """A(theta) = Z + cos(theta) X - sin(theta) Y as a (..., 2, 2) stack."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = -1.0
    out[..., 0, 1] = c + 1j * s
    out[..., 1, 0] = c - 1j * s
    return out


class CumulantOracle:
    """Bracket cumulant G^w (or plain slot cumulant for word=None).

    Call with successive-difference lags: ``oracle(tau)`` at k=2 and
    ``oracle(tau1, tau2)`` at k=3, vectorised over numpy arrays.  Slot
    times are (t, 0) resp. (t1, t2, 0) with t = tau, t1 = tau1 + tau2,
    t2 = tau2; any real lags are admitted.
    """

    def __init__(self, order: int, word, fn, label: str = ""):
        self.order = order
        self.word = word
        self._fn = fn
        self.label = label

    def __call__(self, *lags):
        if len(lags) != self.order - 1:
            raise ValueError(f"expected {self.order - 1} lag arguments")
        return self._fn(*np.broadcast_arrays(*(np.asarray(x, float) for x in lags)))


def _zero_oracle(order, word):
    def fn(*lags):
        return np.zeros(np.broadcast(*lags).shape if lags else ())
    return CumulantOracle(order, word, fn, label="zero")


_WORDS2 = (None, "+", "-")
_WORDS3 = (None, "++", "+-", "-+", "--")


def classical_cumulant_oracle(model: SpectrumModel, process: str, order: int,
                              word) -> CumulantOracle:
    """Cumulants of beta (Gaussian) or of the centred square beta^2 - g(0).

    Plain cumulants: beta: C2 = g(tau), C3 = 0; centred square:
    C2 = 2 g(tau)^2, C3(t1, t2, t3) = 8 g(t1-t2) g(t2-t3) g(t1-t3).
    Brackets of a classical process: every word containing "-" is zero and
    each "+" doubles the plain cumulant.
    """
    if process not in ("beta", "beta_squared"):
        raise ValueError("process must be 'beta' or 'beta_squared'")
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    if word not in (_WORDS2 if order == 2 else _WORDS3):
        raise ValueError(f"bad bracket word {word!r} for order {order}")
    if word is not None and "-" in word:
        return _zero_oracle(order, word)
    mult = 1.0 if word is None else 2.0 ** (order - 1)

    if order == 2:
        if process == "beta":
            fn = lambda tau: mult * autocovariance(model, tau)
        else:
            fn = lambda tau: mult * 2.0 * autocovariance(model, tau) ** 2
        return CumulantOracle(2, word, fn, label=f"{process}-C2")
    if process == "beta":
        return _zero_oracle(3, word)

    def fn3(tau1, tau2):
        g = lambda x: autocovariance(model, x)
        return mult * 8.0 * g(tau1) * g(tau2) * g(tau1 + tau2)

    return CumulantOracle(3, word, fn3, label="beta_squared-C3")


def quantum_cumulant_oracle(qmodel: QuantumBathModel, order: int,
                            word) -> CumulantOracle:
    """Bracket cumulants of B(t) = (beta^2(t) - g(0)) A(t).

    Factorises into the classical centred-square cumulant and the bath
    trace Q(t_i, t_j, ...) = Tr[rho_B A(t_i) A(t_j) ...], evaluated through
    the Pauli representation of A(t).  Stationary because [rho_B, H_B] = 0.
    """
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    if word not in (_WORDS2 if order == 2 else _WORDS3):
        raise ValueError(f"bad bracket word {word!r} for order {order}")
    base = qmodel.base
    wb = qmodel.omega_b
    rho = qmodel.rho_b

    def q_trace(times):
        """Tr[rho_B A(t_1) ... A(t_n)] for stacked time arrays."""
        ops = _bath_axis_op(wb * times[0])
        for t in times[1:]:
            ops = ops @ _bath_axis_op(wb * t)
        return np.einsum("...ab,ba->...", ops, rho)

    if order == 2:
        def c_slot(t1, t2):
            g = autocovariance(base, t1 - t2)
            return 2.0 * g**2 * q_trace((t1, t2))

        if word is None:
            fn = lambda tau: c_slot(tau, np.zeros_like(tau))
        else:
            sgn = 1.0 if word == "+" else -1.0

            def fn(tau):
                z = np.zeros_like(tau)
                return c_slot(tau, z) + sgn * c_slot(z, tau)

        return CumulantOracle(2, word, fn, label="quantum-C2")

    def c_slot3(t1, t2, t3):
        g = lambda x: autocovariance(base, x)
        cl = 8.0 * g(t1 - t2) * g(t2 - t3) * g(t1 - t3)
        return cl * q_trace((t1, t2, t3))

    if word is None:
        fn3 = lambda tau1, tau2: c_slot3(tau1 + tau2, tau2, np.zeros_like(tau1))
    else:
        w1 = 1.0 if word[0] == "+" else -1.0
        w2 = 1.0 if word[1] == "+" else -1.0

        def fn3(tau1, tau2):
            z = np.zeros_like(tau1)
            a, b = tau1 + tau2, tau2
            return (c_slot3(a, b, z) + w1 * c_slot3(b, a, z)
                    + w2 * c_slot3(z, a, b) + w1 * w2 * c_slot3(z, b, a))

    return CumulantOracle(3, word, fn3, label="quantum-C3")


def unordered_spectrum(oracle: CumulantOracle, grid: np.ndarray,
                       tail_tol: float = 1e-3) -> np.ndarray:
    """Plain Fourier transform of the lag-domain cumulant on `grid`.

    k=2: S(omega) = Int G(tau) e^{-i omega tau} d tau; k=3 the 2-d analogue
    over successive-difference lags (grid is then the 1-d axis of a square
    grid and the result a 2-d array).  Uses a lag window wide enough for
    the oracle to decay; raises if the tail has not decayed below
    `tail_tol` of the peak.
    """
    grid = np.asarray(grid, dtype=float)
    domega = np.abs(np.diff(grid)).min()
    tau_max = np.pi / domega
    # Oversample in lag so aliased spectral weight sits far outside the grid.
    oversample = 8 if oracle.order == 2 else 4

    def transform(ov):
        dtau = np.pi / np.abs(grid).max() / ov
        m = int(2 ** np.ceil(np.log2(2 * tau_max / dtau)))
        tau = (np.arange(m) - m // 2) * dtau
        pw = _ft_matrix(grid, tau)
        if oracle.order == 2:
            vals = oracle(tau)
            edge = max(np.abs(vals[0]), np.abs(vals[-1]))
            if edge > tail_tol * np.abs(vals).max():
                raise ValueError("cumulant has not decayed within the lag window")
            return pw @ vals
        vals = oracle(tau[:, None], tau[None, :])
        edge = max(np.abs(vals[0, :]).max(), np.abs(vals[:, 0]).max(),
                   np.abs(vals[-1, :]).max(), np.abs(vals[:, -1]).max())
        if edge > tail_tol * np.abs(vals).max():
            raise ValueError("cumulant has not decayed within the lag window")
        return pw @ vals @ pw.T

    # Richardson in the lag step: the cumulant kink at tau = 0 makes the
    # plain trapezoid O(dtau^2)
    return (4.0 * transform(2 * oversample) - transform(oversample)) / 3.0


def _ft_matrix(omegas, tau) -> np.ndarray:
    """Trapezoid DFT matrix: (PW)[i, a] = e^{-i omega_i tau_a} w_a."""
    dtau = tau[1] - tau[0]
    w = np.full_like(tau, dtau)
    w[0] = w[-1] = dtau / 2
    return np.exp(-1j * np.outer(omegas, tau)) * w
