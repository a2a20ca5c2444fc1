"""Trajectory simulation and direct evaluation of overlap integrals.

Two independent evaluation routes for the channel coefficients:

* `oracle_overlaps` integrates each symbolic term in the frequency domain
  against the time-ordered spectra, with the M-fold repetition handled
  exactly through Dirichlet phase sums (no comb approximation).
* `simplex_overlaps_m1` performs the direct time-ordered simplex
  quadrature of Y * G over one base cycle; it shares nothing with the
  frequency route past the symbolic expression and serves as its oracle.

The Monte-Carlo engine evolves the toggling-frame propagator per sampled
noise trajectory with a midpoint product integrator (one closed-form su(2)
exponential per step; the joint system-bath case block-diagonalises in the
instantaneous control frame), and reduces the twelve tomography
expectation values with standard errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cumulants import derive_overlap_expression, real_channel_value
from .filters import dirichlet_factor, sequence_ff_table
from .noise import (CumulantOracle, QuantumBathModel, SpectrumModel,
                    autocovariance, classical_cumulant_oracle, psd,
                    quantum_cumulant_oracle, sample_trajectories)
from .pauli import MATRICES, density_matrix
from .sequences import PulseSequence, phase
from .spectra import OrderedSpectrum, ordered_from_oracle

AXES3 = ("x", "y", "z")
PREPS = ("1", "x", "y", "z")


# --------------------------------------------------------------- oracle sets
class OverlapOracleSet:
    """Bracket-cumulant oracles and cached ordered spectra for one model."""

    def __init__(self, kind: str, model, k3_extent: float = 24.0,
                 k3_spacing: float = 0.125, k2_extent: float = 32.0,
                 k2_spacing: float = 0.03125):
        if kind not in ("beta", "beta_squared", "quantum"):
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.model = model
        from .fixtures import OMEGA_H
        self._wh = OMEGA_H
        self._grids = {
            2: OMEGA_H * k2_spacing * np.arange(-int(k2_extent / k2_spacing),
                                                int(k2_extent / k2_spacing) + 1),
            3: OMEGA_H * k3_spacing * np.arange(-int(k3_extent / k3_spacing),
                                                int(k3_extent / k3_spacing) + 1),
        }
        self._ordered: dict[str, OrderedSpectrum] = {}

    def lag_oracle(self, word) -> CumulantOracle:
        k = 2 if word is None or len(word) == 1 else len(word) + 1
        if self.kind == "quantum":
            return quantum_cumulant_oracle(self.model, k, word)
        return classical_cumulant_oracle(self.model, self.kind, k, word)

    def ordered(self, word: str) -> OrderedSpectrum:
        if word not in self._ordered:
            k = len(word) + 1
            self._ordered[word] = ordered_from_oracle(self.lag_oracle(word),
                                                      self._grids[k])
        return self._ordered[word]


class WhiteNoiseOracleSet:
    """Flat classical power spectrum: Stilde^+ = pi S0 exactly, no k=3."""

    kind = "white"

    def __init__(self, level: float, k2_extent: float = 192.0,
                 k2_spacing: float = 0.03125):
        from .fixtures import OMEGA_H
        self.level = level
        n = int(k2_extent / k2_spacing)
        grid = OMEGA_H * k2_spacing * np.arange(-n, n + 1)
        # bracket spectrum S+ = FT[2 C]/pi = 2 S0/pi; ordered Re = 2 S0
        vals = np.full(grid.size, 2.0 * level, dtype=complex)
        self._spec = OrderedSpectrum(order=2, bracket="+", grid=grid, values=vals)

    def ordered(self, word: str) -> OrderedSpectrum:
        if word == "+":
            return self._spec
        if word == "-":
            return OrderedSpectrum(order=2, bracket="-", grid=self._spec.grid,
                                   values=np.zeros_like(self._spec.values))
        raise ValueError("white-noise oracle provides k = 2 brackets only")


def _filon_weights(grid: np.ndarray, rate: float) -> np.ndarray:
    """Weights w with sum(w * A) = Int A(x) e^{i rate x} dx for linear A.

    Exact per-interval integration of the linear interpolant times the
    oscillatory phase; reduces to the trapezoid rule at rate = 0.
    """
    x = np.asarray(grid, dtype=float)
    h = np.diff(x)
    w = np.zeros(x.size, dtype=complex)
    r = rate
    if abs(r) * h.max() < 1e-8:
        w[:-1] += h / 2
        w[1:] += h / 2
        return w * np.exp(1j * r * x)
    e0 = np.exp(1j * r * x[:-1])
    irh = 1j * r * h
    eh = np.exp(irh)
    # Int_0^h (u/h) e^{iru} du and its complement of Int_0^h e^{iru} du
    i_right = h * (eh / irh - (eh - 1.0) / irh**2)
    i_left = (eh - 1.0) / (1j * r) - i_right
    w[:-1] += e0 * i_left
    w[1:] += e0 * i_right
    return w


def _repetition_pairs(reps: int):
    """(lag multiple, weight) pairs of |D_M|^2 = sum (M - |m|) e^{i w m tau}."""
    return [(m, reps - abs(m)) for m in range(-(reps - 1), reps)]


def oracle_overlaps(seq: PulseSequence, oracles, alpha: str, k_values=(2, 3),
                    axes=("x", "z")) -> dict:
    """Channel values I^{V0}_{alpha, gamma} by frequency-domain integration.

    Exact in the repetition count: the repeated filter product is expanded
    in Dirichlet phase sums and each oscillatory integral is evaluated with
    Filon weights on the ordered-spectrum grid.  Returns
    {(k, gamma): real value}.
    """
    fun = sequence_ff_table(seq)
    out = {}
    for k in k_values:
        if getattr(oracles, "kind", None) == "white" and k != 2:
            continue
        for gamma in PREPS:
            expr = derive_overlap_expression(k, alpha, gamma, axes)
            if not expr.terms:
                continue
            k_val = 0j
            for term in expr.terms:
                spec = oracles.ordered(term.brackets)
                grid = spec.grid
                if k == 2:
                    f_word = (fun[term.filters[0]](grid)
                              * fun[term.filters[1]](-grid))
                    a_vals = f_word * spec.values
                    total = 0j
                    for m, wgt in _repetition_pairs(seq.reps):
                        w = _filon_weights(grid, m * seq.tau_c)
                        total += wgt * np.sum(w * a_vals)
                    k_val += term.coefficient() * total
                else:
                    f1 = fun[term.filters[0]](grid)
                    f2 = fun[term.filters[1]](grid)
                    sum_grid = np.add.outer(grid, grid)
                    f3 = fun[term.filters[2]](-sum_grid.ravel()).reshape(sum_grid.shape)
                    a_vals = np.outer(f1, f2) * f3 * spec.values
                    total = 0j
                    for m1, w1 in _repetition_pairs(seq.reps):
                        wv1 = _filon_weights(grid, m1 * seq.tau_c)
                        for m2, w2 in _repetition_pairs(seq.reps):
                            wv2 = _filon_weights(grid, m2 * seq.tau_c)
                            total += w1 * w2 * (wv1 @ a_vals @ wv2)
                    k_val += term.coefficient() * total
            out[(k, gamma)] = real_channel_value(k_val, alpha, gamma, tol=5e-2)
    return out


# ----------------------------------------------------- time-domain quadrature
_GL_N = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)


def _axis_values(seq: PulseSequence, t: np.ndarray, axis: str) -> np.ndarray:
    ph = phase(seq, t)
    return np.cos(ph) if axis == "z" else -np.sin(ph)


def simplex_overlaps_m1(seq: PulseSequence, oracles, alpha: str, k: int,
                        gamma: str, axes=("x", "z"), tau_cut: float | None = None):
    """I^{V0}_{alpha, gamma} by direct simplex quadrature over one cycle.

    Cells follow the pulse-edge segmentation on every time axis, with
    Gauss-Legendre nodes per cell; cells entirely beyond the cumulant
    correlation window are pruned.  Only M = 1 is supported: this is the
    reference side of the dual-domain equivalence check.
    """
    if seq.reps != 1:
        raise ValueError("simplex quadrature supports single-cycle sequences")
    expr = derive_overlap_expression(k, alpha, gamma, axes)
    if not expr.terms:
        return 0.0
    edges = seq.segment_edges()
    # subdivide long segments so the oracle variation per cell stays small
    max_len = seq.tau_c / 24
    fine = [edges[0]]
    for e in edges[1:]:
        seg = e - fine[-1]
        n_sub = max(1, int(np.ceil(seg / max_len)))
        fine.extend(fine[-1] + seg * (np.arange(n_sub) + 1) / n_sub)
    edges = np.array(fine)
    k_val = 0j
    for coeff, word, brack in expr.time_domain_terms():
        oracle = oracles.lag_oracle(brack)
        if k == 2:
            k_val += coeff * _triangle_quad(seq, word, oracle, edges, tau_cut)
        else:
            k_val += coeff * _simplex3_quad(seq, word, oracle, edges, tau_cut)
    return real_channel_value(k_val, alpha, gamma, tol=5e-2)


def _cell_nodes(a, b):
    mid, half = (a + b) / 2, (b - a) / 2
    return mid + half * _GL_X, half * _GL_W


def _triangle_quad(seq, word, oracle, edges, tau_cut):
    total = 0j
    n = len(edges) - 1
    y_cache = {}

    def axis_vals(axis, i):
        if (axis, i) not in y_cache:
            t, w = _cell_nodes(edges[i], edges[i + 1])
            y_cache[(axis, i)] = (_axis_values(seq, t, axis), t, w)
        return y_cache[(axis, i)]

    for i1 in range(n):          # s1 cell (later time)
        for i2 in range(i1 + 1):  # s2 cell
            if tau_cut is not None and edges[i2 + 1] < edges[i1] - tau_cut:
                continue
            y1, t1, w1 = axis_vals(word[0], i1)
            y2, t2, w2 = axis_vals(word[1], i2)
            if i2 < i1:
                g = oracle(t1[:, None] - t2[None, :])
                total += np.einsum("i,j,ij->", y1 * w1, y2 * w2, g)
            else:
                # diagonal cell: integrate the ordered triangle s1 >= s2
                a, b = edges[i1], edges[i1 + 1]
                for u, wu in zip(*_cell_nodes(a, b)):
                    tt, wt = _cell_nodes(a, u)
                    yv1 = _axis_values(seq, np.array([u]), word[0])[0]
                    yv2 = _axis_values(seq, tt, word[1])
                    total += wu * yv1 * np.sum(wt * yv2 * oracle(u - tt))
    return total


def _simplex3_quad(seq, word, oracle, edges, tau_cut):
    total = 0j
    n = len(edges) - 1
    cell_data = {}

    def axis_vals(axis, i):
        if (axis, i) not in cell_data:
            t, w = _cell_nodes(edges[i], edges[i + 1])
            cell_data[(axis, i)] = (_axis_values(seq, t, axis), t, w)
        return cell_data[(axis, i)]

    for i1 in range(n):
        for i2 in range(i1 + 1):
            if tau_cut is not None and edges[i2 + 1] < edges[i1] - tau_cut:
                continue
            for i3 in range(i2 + 1):
                if tau_cut is not None and edges[i3 + 1] < edges[i2] - tau_cut:
                    continue
                if i1 == i2 or i2 == i3:
                    total += _simplex3_boundary(seq, word, oracle, edges,
                                                (i1, i2, i3))
                    continue
                y1, t1, w1 = axis_vals(word[0], i1)
                y2, t2, w2 = axis_vals(word[1], i2)
                y3, t3, w3 = axis_vals(word[2], i3)
                g = oracle((t1[:, None, None] - t2[None, :, None]),
                           (t2[None, :, None] - t3[None, None, :]))
                total += np.einsum("i,j,k,ijk->", y1 * w1, y2 * w2, y3 * w3, g)
    return total


def _simplex3_boundary(seq, word, oracle, edges, cells):
    """Cells with coincident indices: iterate the ordering constraints."""
    i1, i2, i3 = cells
    total = 0j
    t1n, w1n = _cell_nodes(edges[i1], edges[i1 + 1])
    for u1, wu1 in zip(t1n, w1n):
        b2 = min(edges[i2 + 1], u1)
        if b2 <= edges[i2]:
            continue
        t2n, w2n = _cell_nodes(edges[i2], b2)
        y1 = _axis_values(seq, np.array([u1]), word[0])[0]
        for u2, wu2 in zip(t2n, w2n):
            b3 = min(edges[i3 + 1], u2)
            if b3 <= edges[i3]:
                continue
            t3n, w3n = _cell_nodes(edges[i3], b3)
            y2 = _axis_values(seq, np.array([u2]), word[1])[0]
            y3 = _axis_values(seq, t3n, word[2])
            g = oracle(np.full(t3n.shape, u1 - u2), u2 - t3n)
            total += wu1 * wu2 * y1 * y2 * np.sum(w3n * y3 * g)
    return total


# ------------------------------------------------------------- Monte Carlo
@dataclass(frozen=True)
class SimulationConfig:
    sequence: PulseSequence
    kind: str                   # "beta" | "beta_squared" | "quantum"
    model: object               # SpectrumModel or QuantumBathModel
    dt: float = 0.5
    n_traj: int = 5000
    seed: int = 1234

    def __post_init__(self):
        from .sequences import OMEGA_MIN
        if self.dt > OMEGA_MIN / 20:
            raise ValueError(f"dt must resolve the pulses: dt <= {OMEGA_MIN / 20}")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.kind not in ("beta", "beta_squared", "quantum"):
            raise ValueError(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class TomographyRecord:
    """Means and standard errors of <P_alpha>_xi for all twelve channels."""

    means: dict
    stderrs: dict
    n_traj: int

    def value(self, alpha: str, xi: str):
        return self.means[(alpha, xi)], self.stderrs[(alpha, xi)]


def evolve_propagators(seq: PulseSequence, betas: np.ndarray, dt: float,
                       kind: str, model) -> np.ndarray:
    """Toggling-frame propagators per trajectory.

    Classical kinds return (n, 2, 2); the quantum kind returns (n, 4, 4)
    joint propagators including the static bath splitting (the bath-frame
    factor cancels inside the conjugated propagator product).  Midpoint
    rule: one exponential per step evaluated at the step centre.
    """
    n_traj, n_steps = betas.shape
    t_mid = (np.arange(n_steps) + 0.5) * dt
    if abs(n_steps * dt - seq.duration) > dt:
        raise ValueError("trajectory length does not match sequence duration")
    ph = phase(seq, t_mid)
    yz, yx = np.cos(ph), -np.sin(ph)
    if kind in ("beta", "beta_squared"):
        coup = betas if kind == "beta" else betas**2 - autocovariance(model, 0.0)
        u = np.tile(np.eye(2, dtype=complex), (n_traj, 1, 1))
        for j in range(n_steps):
            theta = dt * coup[:, j]
            c, s = np.cos(theta), np.sin(theta)
            az, ax = yz[j], yx[j]
            m00 = c - 1j * s * az
            m01 = -1j * s * ax
            m11 = c + 1j * s * az
            u00 = m00[:, None] * u[:, 0, :] + m01[:, None] * u[:, 1, :]
            u11 = m01[:, None] * u[:, 0, :] + m11[:, None] * u[:, 1, :]
            u[:, 0, :], u[:, 1, :] = u00, u11
        return u
    # quantum: H = c(t) (yz Z + yx X) (x) (X + Z) + 1 (x) (wb/2) Z
    qm: QuantumBathModel = model
    g0 = autocovariance(qm.base, 0.0)
    coup = betas**2 - g0
    wb = qm.omega_b
    w_bath = MATRICES["x"] + MATRICES["z"]
    v_bath = (wb / 2) * MATRICES["z"]
    u = np.tile(np.eye(4, dtype=complex), (n_traj, 1, 1))
    eye2 = np.eye(2, dtype=complex)
    for j in range(n_steps):
        az, ax = yz[j], yx[j]
        # system control axis n.sigma has eigenvalues +-1; rotate with
        # P = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]-style real
        # rotation about y mapping n.sigma -> Z
        # n = (ax, 0, az): angle chi with cos chi = az, sin chi = ax
        chi = np.arctan2(ax, az)
        cc, ss = np.cos(chi / 2), np.sin(chi / 2)
        p_sys = np.array([[cc, -ss], [ss, cc]], dtype=complex)
        c_vals = dt * coup[:, j]
        blocks = []
        for sign in (+1.0, -1.0):
            h_b = sign * c_vals[:, None, None] * w_bath + dt * v_bath
            blocks.append(_expm_su2_batch_h(h_b))
        step = np.zeros((n_traj, 4, 4), dtype=complex)
        step[:, 0:2, 0:2] = blocks[0]
        step[:, 2:4, 2:4] = blocks[1]
        rot = np.kron(p_sys, eye2)
        step = rot @ step @ rot.conj().T
        u = step @ u
    return u


def _expm_su2_batch_h(h: np.ndarray) -> np.ndarray:
    """exp(-i h) for a batch of 2x2 Hermitian h (h includes the dt)."""
    a = (h[:, 0, 0] + h[:, 1, 1]).real / 2
    bx = h[:, 0, 1].real
    by = -h[:, 0, 1].imag
    bz = (h[:, 0, 0] - h[:, 1, 1]).real / 2
    theta = np.sqrt(bx**2 + by**2 + bz**2)
    small = theta < 1e-30
    safe = np.where(small, 1.0, theta)
    c = np.cos(theta)
    snc = np.where(small, 1.0, np.sin(safe) / safe)
    out = np.empty_like(h)
    out[:, 0, 0] = c - 1j * snc * bz
    out[:, 0, 1] = -1j * snc * (bx - 1j * by)
    out[:, 1, 0] = -1j * snc * (bx + 1j * by)
    out[:, 1, 1] = c + 1j * snc * bz
    return out * np.exp(-1j * a)[:, None, None]


def _v_operators(seq: PulseSequence, u: np.ndarray, kind: str,
                 model) -> dict:
    """Per-trajectory V_alpha = P_alpha U^dag P_alpha U (bath traced)."""
    out = {}
    phi = seq.phi_global
    r = np.array([[np.cos(phi / 2), -np.sin(phi / 2)],
                  [np.sin(phi / 2), np.cos(phi / 2)]], dtype=complex)
    for alpha in AXES3:
        pa = MATRICES[alpha]
        if u.shape[-1] == 2:
            ur = r @ u @ r
            v = pa @ ur.conj().transpose(0, 2, 1) @ pa @ ur
        else:
            rj = np.kron(r, np.eye(2))
            ur = rj @ u @ rj
            paj = np.kron(pa, np.eye(2))
            m = paj @ ur.conj().transpose(0, 2, 1) @ paj @ ur
            rho_b = model.rho_b
            m4 = m.reshape(-1, 2, 2, 2, 2)
            v = np.einsum("nabcd,db->nac", m4, rho_b)
        out[alpha] = v
    return out


def tomography_run(config: SimulationConfig) -> TomographyRecord:
    """Monte-Carlo estimate of the twelve tomography expectations."""
    seq = config.sequence
    base = config.model.base if config.kind == "quantum" else config.model
    betas = sample_trajectories(base, config.dt, seq.duration,
                                config.n_traj, config.seed)
    u = evolve_propagators(seq, betas, config.dt, config.kind, config.model)
    v_ops = _v_operators(seq, u, config.kind, config.model)
    means, errs = {}, {}
    for alpha in AXES3:
        v = v_ops[alpha]
        pa = MATRICES[alpha]
        for xi in PREPS:
            rho = density_matrix(xi)
            vals = np.einsum("nab,bc,ca->n", v, rho, pa).real
            means[(alpha, xi)] = float(vals.mean())
            errs[(alpha, xi)] = float(vals.std(ddof=1) / np.sqrt(config.n_traj))
    return TomographyRecord(means=means, stderrs=errs, n_traj=config.n_traj)


def propagator_unitarity_defect(u: np.ndarray) -> float:
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(u.conj().transpose(0, 2, 1) @ u - eye)))
