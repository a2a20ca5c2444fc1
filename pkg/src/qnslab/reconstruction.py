"""Linear inversion of overlap channels into time-ordered spectra.

Comb sampling turns each channel into a real linear system over
orbit-averaged spectral values on a harmonic lattice.  With the lattice
multiplicity m(s) and the filter split F = ReF + i ImF, every channel
reduces to

    sum_nu F(nu) Stilde(nu) = sum_s m(s) [ReF(s) R(s) - ImF(s) Q(s)],

where R is the orbit average of Re[Stilde] and Q the half-orbit average
of Im[Stilde] consistent with the representative.  The pipelines:

* k=2 real:      channel (x,1), word zz  -> R = Re[Stilde^+] at 0..N w_h
* k=2 imaginary: channel (x,y), word zx  -> Q = Im[Stilde^+] at 1..N w_h,
                 after subtracting the known ReF * R contribution
* k=2 quantum:   channel (y,y), Im[F_xz] -> Re[Stilde^-] (odd), with
                 Im[Stilde^-] supplied by the Kramers-Kronig completion
* k=3 bispectra: phase 1 solves the permutation-symmetric projection of
                 Stilde^{++} through zzz words on the full-symmetry wedge
                 (mirrored sequences isolate Re, generic ones Im); phase 2
                 switches to (z,x) and xzz words on the larger
                 transpose-symmetric wedge (antimirrored for Re, wide
                 mirrored for Im), subtracting the xxx-word background.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .filters import GMatrix, HarmonicLattice, assemble_G, build_lattice
from .sequences import PulseSequence
from .spectra import hilbert_with_leakage

_KAPPA_WARN = 1e6
_KAPPA_ERROR = 1e10


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Spectral values on a symmetry-reduced harmonic lattice."""

    lattice: HarmonicLattice
    values: np.ndarray
    provenance: str = ""
    condition_number: float = np.nan
    residual: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.lattice.points):
            raise ValueError("value/lattice length mismatch")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite reconstruction values")

    def value_at(self, point) -> float:
        return float(self.values[self.lattice.points.index(tuple(point))])


def solve_spectrum(matrix: np.ndarray, rhs: np.ndarray, lam_rel: float = 1e-8,
                   allow_dc_dominance: bool = False,
                   lattice: HarmonicLattice | None = None):
    """Tikhonov solution of the real system matrix @ x = rhs.

    lam_rel regularises relative to the largest singular value.  Reports
    (solution, condition number, residual norm).  Raises on a condition
    number above the hard threshold and on a dominant zero-harmonic column
    (unless explicitly allowed): a DC-heavy filter set biases the
    reconstruction and couples to higher cumulant orders.
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] < matrix.shape[1]:
        raise ValueError("underdetermined system: need rows >= columns")
    if lattice is not None and not allow_dc_dominance:
        try:
            dc = lattice.points.index((0,) * (lattice.order - 1))
        except ValueError:
            dc = None
        if dc is not None:
            col = np.abs(matrix[:, dc]).max()
            rest = np.abs(np.delete(matrix, dc, axis=1)).max()
            if col > 10 * rest:
                raise ValueError(
                    f"zero-harmonic filter weight {col:.3g} exceeds 10x the "
                    f"largest other column ({rest:.3g}); override explicitly")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s[-1] <= 0 or s[0] / s[-1] > _KAPPA_ERROR:
        raise ValueError(f"system condition number above {_KAPPA_ERROR:g}")
    lam = lam_rel * s[0]
    filt = s / (s**2 + lam**2)
    x = vt.T @ (filt * (u.T @ rhs))
    resid = float(np.linalg.norm(matrix @ x - rhs))
    return x, float(s[0] / s[-1]), resid


@dataclass(frozen=True)
class ReconstructionPlan:
    """Sequences and lattice for one channel solve."""

    sequences: tuple[PulseSequence, ...]
    lattice: HarmonicLattice
    word: str
    channel: tuple[str, str]      # (alpha, gamma)
    lam_rel: float = 1e-8

    def __post_init__(self):
        tau = {s.tau_c for s in self.sequences}
        if len(tau) != 1:
            raise ValueError("sequences in one plan must share tau_c")


def _channel_matrices(plan: ReconstructionPlan):
    g = assemble_G(plan.sequences, plan.lattice, plan.word)
    return g, g.values.real, g.values.imag


def reconstruct_k2_real(plan: ReconstructionPlan, i_values) -> HarmonicSpectrum:
    """Re[Stilde^+] from the uniform-attenuation channel (x, 1).

    I_{x,1} = -(M/tau_c) sum_nu F_zz Stilde^+ with F_zz = |F_z|^2 real and
    even, so only R = Re[Stilde^+] couples: solve G_zz R = -I.
    """
    if plan.channel != ("x", "1") or plan.word != "zz":
        raise ValueError("k2 real pipeline uses channel (x,1) and word zz")
    g, gre, _ = _channel_matrices(plan)
    x, cond, resid = solve_spectrum(gre, -np.asarray(i_values, dtype=float),
                                    plan.lam_rel, lattice=plan.lattice)
    diags = {"kappa": cond, "dc_ratio": g.dc_ratio,
             "leakage": g.leakage_fraction}
    return HarmonicSpectrum(lattice=plan.lattice, values=x,
                            provenance="k2-real (x,1)/zz",
                            condition_number=cond, residual=resid,
                            diagnostics=diags)


def reconstruct_k2_imag(plan: ReconstructionPlan, i_values,
                        known_real: HarmonicSpectrum) -> HarmonicSpectrum:
    """Im[Stilde^+] from the transverse channel (x, y) after subtraction.

    I_{x,y} = (M/tau_c) sum_s m [ReF_zx R - ImF_zx Q]: the known real part
    is removed exactly and Q is solved against Im[G_zx].  The sequence set
    should suppress |Re G_zx| against |Im G_zx|; the achieved ratio is
    reported and a bias bound attached when it exceeds 0.1.
    """
    if plan.channel != ("x", "y") or plan.word != "zx":
        raise ValueError("k2 imag pipeline uses channel (x,y) and word zx")
    g, gre, gim = _channel_matrices(plan)
    r_on_lattice = _map_values(known_real, plan.lattice)
    rhs = gre @ r_on_lattice - np.asarray(i_values, dtype=float)
    x, cond, resid = solve_spectrum(gim, rhs, plan.lam_rel, lattice=plan.lattice)
    ratio = float(np.abs(gre).max() / max(np.abs(gim).max(), 1e-300))
    diags = {"kappa": cond, "re_im_ratio": ratio,
             "leakage": g.leakage_fraction}
    if ratio > 0.1:
        # first-order bias bound from a relative error dR on the real part
        diags["bias_bound"] = float(
            np.abs(np.linalg.pinv(gim) @ gre).sum(axis=1).max())
        diags["warning"] = ("real-part suppression ratio above 0.1; "
                            "subtraction errors propagate")
    return HarmonicSpectrum(lattice=plan.lattice, values=x,
                            provenance="k2-imag (x,y)/zx",
                            condition_number=cond, residual=resid,
                            diagnostics=diags)


def reconstruct_quantum_k2(plan: ReconstructionPlan, q_values) -> HarmonicSpectrum:
    """Re[Stilde^-] (odd) from the parallel-axis channel (y, y).

    q_y = -2 (M/tau_c) sum_s m Im[F_xz] Re[Stilde^-]: solve against
    -2 Im[G_xz] on the positive harmonics.
    """
    if plan.channel != ("y", "y") or plan.word != "xz":
        raise ValueError("quantum k2 pipeline uses channel (y,y) and word xz")
    g, _, gim = _channel_matrices(plan)
    x, cond, resid = solve_spectrum(-2.0 * gim, np.asarray(q_values, float),
                                    plan.lam_rel, lattice=plan.lattice)
    diags = {"kappa": cond, "leakage": g.leakage_fraction}
    return HarmonicSpectrum(lattice=plan.lattice, values=x,
                            provenance="quantum-k2 (y,y)/xz",
                            condition_number=cond, residual=resid,
                            diagnostics=diags)


def _map_values(spec: HarmonicSpectrum, lattice: HarmonicLattice) -> np.ndarray:
    """Values of `spec` at the points of `lattice` (spline off-lattice).

    k = 2 only: maps between the DC-inclusive and DC-free lattices and the
    doubled-cycle half-harmonic grids.
    """
    pts_src = np.array([p[0] for p in spec.lattice.points], dtype=float) \
        * spec.lattice.omega_h
    pts_dst = np.array([p[0] for p in lattice.points], dtype=float) \
        * lattice.omega_h
    if set(np.round(pts_dst, 12)) <= set(np.round(pts_src, 12)):
        lookup = {round(p, 12): v for p, v in zip(pts_src, spec.values)}
        return np.array([lookup[round(p, 12)] for p in pts_dst])
    spline = _even_spline(spec)
    return spline(pts_dst)


def _even_spline(spec: HarmonicSpectrum, odd: bool = False):
    """Symmetric extension spline of a k=2 harmonic spectrum."""
    w = np.array([p[0] for p in spec.lattice.points], dtype=float) \
        * spec.lattice.omega_h
    v = np.asarray(spec.values, dtype=float)
    if w[0] > 0:
        w = np.concatenate([[0.0], w])
        v = np.concatenate([[0.0 if odd else v[0]], v])
    sign = -1.0 if odd else 1.0
    w_full = np.concatenate([-w[:0:-1], w])
    v_full = np.concatenate([sign * v[:0:-1], v])
    return CubicSpline(w_full, v_full)


def kk_complete(real_part: HarmonicSpectrum, odd_real: bool = False,
                eval_lattice: HarmonicLattice | None = None) -> HarmonicSpectrum:
    """Im prediction -H[Re] at the lattice harmonics with tail correction.

    `odd_real` selects the commutator parity (Re odd, Im even); the real
    samples are symmetry-extended, splined, tail-extended and transformed.
    """
    if len(real_part.values) < 4:
        raise ValueError("need at least 4 harmonics for the completion")
    lattice = eval_lattice or real_part.lattice
    w_eval = np.array([p[0] for p in lattice.points], dtype=float) \
        * lattice.omega_h
    w = np.array([p[0] for p in real_part.lattice.points], dtype=float) \
        * real_part.lattice.omega_h
    v = np.asarray(real_part.values, dtype=float)
    if w[0] > 0:
        w = np.concatenate([[0.0], w])
        v = np.concatenate([[0.0 if odd_real else v[0]], v])
    sign = -1.0 if odd_real else 1.0
    w_full = np.concatenate([-w[:0:-1], w])
    v_full = np.concatenate([sign * v[:0:-1], v])
    im_pred = -hilbert_with_leakage(v_full, w_full, w_eval)
    return HarmonicSpectrum(lattice=lattice, values=im_pred,
                            provenance=f"kk-completion of {real_part.provenance}",
                            diagnostics={"odd_real": odd_real})


@dataclass(frozen=True)
class RefinementDirective:
    band: tuple[int, int]        # harmonic indices bounding the band
    score: float
    threshold: float


def adaptive_refine(real_recon: HarmonicSpectrum, imag_recon: HarmonicSpectrum,
                    imag_kk: HarmonicSpectrum, threshold: float = 0.15):
    """Flag inter-harmonic bands where measured and KK-predicted Im diverge.

    Band score: L2 of the difference of the two splined imaginary
    estimates across the open band, relative to the L2 norm of the real
    reconstruction over the sampled domain.  Returns a list of directives
    for bands whose score exceeds the threshold.
    """
    sp_meas = _even_spline(imag_recon, odd=True)
    sp_kk = _even_spline(imag_kk, odd=True)
    w_re = np.array([p[0] for p in real_recon.lattice.points], dtype=float) \
        * real_recon.lattice.omega_h
    norm = float(np.sqrt(np.mean(np.asarray(real_recon.values) ** 2)))
    wh = real_recon.lattice.omega_h
    n_max = max(p[0] for p in imag_recon.lattice.points)
    out = []
    for n in range(0, n_max):
        band = np.linspace((n + 0.05) * wh, (n + 0.95) * wh, 41)
        diff = sp_meas(band) - sp_kk(band)
        score = float(np.sqrt(np.mean(diff**2)) / max(norm, 1e-300))
        if score > threshold:
            out.append(RefinementDirective(band=(n, n + 1), score=score,
                                           threshold=threshold))
    return sorted(out, key=lambda d: -d.score)


def refine_half_harmonic(real_recon: HarmonicSpectrum, band: tuple[int, int],
                         doubled_seq: PulseSequence, i_value: float,
                         lam_rel: float = 1e-8):
    """Insert the half-harmonic sample of a doubled-cycle measurement.

    The 2 tau_c sequence samples at multiples of omega_h / 2.  Samples in
    well-approximated regions are taken from the spline of the original
    reconstruction; the single unknown at the flagged band centre is
    solved from the measured channel value:

        I = -(M / tau_c') sum_s m(s) F'_zz(s) Re[Stilde^+](s).
    """
    wh2 = 2 * np.pi / doubled_seq.tau_c
    cutoff = 2 * max(p[0] for p in real_recon.lattice.points)
    lattice2 = build_lattice(2, "conjugation_only", cutoff, wh2)
    g = assemble_G([doubled_seq], lattice2, "zz")
    row = g.values.real[0]
    spline = _even_spline(real_recon)
    target = band[0] * 2 + 1           # half-harmonic index on the fine comb
    known = np.array([spline(p[0] * wh2) for p in lattice2.points])
    idx = lattice2.points.index((target,))
    resid = -float(i_value) - (row @ known - row[idx] * known[idx])
    if abs(row[idx]) < 1e-300:
        raise ValueError("doubled-cycle filter has no weight at the target")
    refined = resid / row[idx]
    values = known.copy()
    values[idx] = refined
    spec = HarmonicSpectrum(lattice=lattice2, values=values,
                            provenance="2tau_c refinement",
                            diagnostics={"refined_point": (target,),
                                         "refined_value": refined})
    return refined, spec


# ---------------------------------------------------------------- bispectrum
@dataclass(frozen=True)
class BispectrumPhasePlan:
    sequences_real: tuple[PulseSequence, ...]
    sequences_imag: tuple[PulseSequence, ...]
    lattice: HarmonicLattice
    lam_rel: float = 1e-8


def _k3_system(sequences, lattice, words_weights):
    """Real/imag stacked matrices for sum of weighted k=3 words."""
    gre = 0.0
    gim = 0.0
    gs = []
    for word, weight in words_weights:
        g = assemble_G(sequences, lattice, word)
        gre = gre + weight * g.values.real
        gim = gim + weight * g.values.imag
        gs.append(g)
    return gre, gim, gs


def reconstruct_bispectrum(phase1: BispectrumPhasePlan,
                           phase2: BispectrumPhasePlan,
                           i_phase1_real, i_phase1_imag,
                           i_phase2_real, i_phase2_imag):
    """Two-phase estimation of the ordered bispectrum projections.

    Channel values are the tomography-scale numbers: for (x, z) and (z, x)
    the comb relation is v = -(1/2) (M/tau_c^2) sum_nu (F_w1 + F_w2) Stilde,
    with words (zxx, zzz) resp. (xxx, xzz).  Cross-word contamination is
    monitored through |G| ratios; phase 2 subtracts both the xxx-word
    background (from phase 1) and, for the imaginary solve, the known real
    part.  Returns {(projection, part): HarmonicSpectrum} plus diagnostics.
    """
    out = {}
    # ---- phase 1: permutation-symmetric projection via (x, z)
    lat1 = phase1.lattice
    a_re, b_re, gs = _k3_system(phase1.sequences_real, lat1, [("zzz", 1.0)])
    g_zxx_re = assemble_G(phase1.sequences_real, lat1, "zxx")
    ratio1 = float(np.abs(g_zxx_re.values).max() /
                   max(np.abs(gs[0].values).max(), 1e-300))
    rhs = -2.0 * np.asarray(i_phase1_real, dtype=float)
    r1, cond, resid = solve_spectrum(a_re, rhs, phase1.lam_rel)
    diag1 = {"kappa": cond, "zxx_over_zzz": ratio1}
    if ratio1 > 0.1:
        diag1["warning"] = "multi-axis leakage ratio above 0.1"
        diag1["bias_bound"] = ratio1 * float(np.abs(r1).max())
    out[("zzz", "re")] = HarmonicSpectrum(
        lattice=lat1, values=r1, provenance="bispectrum zzz Re",
        condition_number=cond, residual=resid, diagnostics=diag1)

    a_im, b_im, _ = _k3_system(phase1.sequences_imag, lat1, [("zzz", 1.0)])
    rhs_im = a_im @ r1 + 2.0 * np.asarray(i_phase1_imag, dtype=float)
    q1, cond_i, resid_i = solve_spectrum(b_im, rhs_im, phase1.lam_rel)
    out[("zzz", "im")] = HarmonicSpectrum(
        lattice=lat1, values=q1, provenance="bispectrum zzz Im",
        condition_number=cond_i, residual=resid_i, diagnostics={})

    # ---- phase 2: transpose-symmetric projection via (z, x)
    lat2 = phase2.lattice
    a2_re, b2_re, _ = _k3_system(phase2.sequences_real, lat2, [("xzz", 1.0)])
    # xxx-word background carries the permutation-symmetric projection
    bg_re = _xxx_background(phase2.sequences_real, lat1, r1, q1)
    rhs2 = -2.0 * np.asarray(i_phase2_real, dtype=float) - bg_re
    r2, cond2, resid2 = solve_spectrum(a2_re, rhs2, phase2.lam_rel)
    out[("xzz", "re")] = HarmonicSpectrum(
        lattice=lat2, values=r2, provenance="bispectrum xzz Re",
        condition_number=cond2, residual=resid2, diagnostics={})

    a2_im, b2_im, _ = _k3_system(phase2.sequences_imag, lat2, [("xzz", 1.0)])
    bg_im = _xxx_background(phase2.sequences_imag, lat1, r1, q1)
    rhs2_im = a2_im @ r2 + 2.0 * np.asarray(i_phase2_imag, dtype=float) + bg_im
    q2, cond2i, resid2i = solve_spectrum(b2_im, rhs2_im, phase2.lam_rel)
    out[("xzz", "im")] = HarmonicSpectrum(
        lattice=lat2, values=q2, provenance="bispectrum xzz Im",
        condition_number=cond2i, residual=resid2i, diagnostics={})
    return out


def _xxx_background(sequences, lattice_sym, r_sym, q_sym) -> np.ndarray:
    """sum_s m [ReF_xxx R - ImF_xxx Q] per sequence (fully symmetric word)."""
    g = assemble_G(sequences, lattice_sym, "xxx")
    return g.values.real @ r_sym - g.values.imag @ q_sym
