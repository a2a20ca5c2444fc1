"""Filter functions, comb sampling, harmonic lattices, and the G matrix.

Fundamental filter function of one base cycle (M = 1):

    F_a(omega) = Int_0^tau_c y_a(t) e^{i omega t} dt,

with the axis word composite at stationarity-reduced frequencies

    F_{a1 a2}(w)        = F_a1(w)  F_a2(-w)                    (k = 2)
    F_{a1 a2 a3}(w1,w2) = F_a1(w1) F_a2(w2) F_a3(-w1 - w2)     (k = 3),

the first letter attaching to the latest time argument.  M repetitions
multiply each frequency factor by the Dirichlet sum D_M; their product is
the comb function whose peaks enable discrete harmonic sampling with the
matrix elements [G]_{j,i} = (M / tau_c^{k-1}) m(s_i) F^{(j)}(s_i).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sequences import PulseSequence, phase

_GAUSS_N = 32
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_GAUSS_N)


def _switching_axis(seq: PulseSequence, t: np.ndarray, axis: str) -> np.ndarray:
    ph = phase(seq, t)
    if axis == "z":
        return np.cos(ph)
    if axis == "x":
        return -np.sin(ph)
    raise ValueError("axis must be 'x' or 'z' for a y-rotation control frame")


def fundamental_ff(seq: PulseSequence, axis: str, omegas) -> np.ndarray:
    """F_axis(omega) over one base cycle, vectorised over omega.

    Between pulse edges the switching functions are constant and the
    integral is analytic; pulse-covered segments use composite 32-point
    Gauss panels, subdivided so each panel spans at most 8 radians of
    phase at the largest requested frequency.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    edges = seq.segment_edges()
    w_max = np.abs(omegas).max()
    out = np.zeros(omegas.shape, dtype=complex)
    covered = np.zeros(len(edges) - 1, dtype=bool)
    for p in seq.pulses:
        lo = np.searchsorted(edges, p.t0 - 1e-12)
        hi = np.searchsorted(edges, p.t0 + p.width - 1e-12)
        covered[lo:hi] = True
    nz = omegas != 0.0
    for i in range(len(edges) - 1):
        a, b = edges[i], edges[i + 1]
        if b - a <= 1e-12:
            continue
        if not covered[i]:
            y = _switching_axis(seq, np.array([(a + b) / 2]), axis)[0]
            if abs(y) < 1e-300:
                continue
            seg = np.empty_like(out)
            seg[nz] = (np.exp(1j * omegas[nz] * b)
                       - np.exp(1j * omegas[nz] * a)) / (1j * omegas[nz])
            seg[~nz] = b - a
            out += y * seg
        else:
            n_panel = max(1, int(np.ceil((b - a) * w_max / 8.0)))
            bounds = np.linspace(a, b, n_panel + 1)
            mids = (bounds[1:] + bounds[:-1]) / 2
            half = (bounds[1:] - bounds[:-1]) / 2
            t_nodes = (mids[:, None] + half[:, None] * _NODES).ravel()
            w_nodes = (half[:, None] * _WEIGHTS).ravel()
            y_nodes = _switching_axis(seq, t_nodes, axis)
            out += np.exp(1j * np.outer(omegas, t_nodes)) @ (y_nodes * w_nodes)
    return out


def dirichlet_factor(omega, reps: int, tau_c: float) -> np.ndarray:
    """D_M(omega) = sum_{m<M} e^{i omega m tau_c}; equals M at harmonics."""
    omega = np.asarray(omega, dtype=float)
    x = omega * tau_c / 2
    num = np.sin(reps * x)
    den = np.sin(x)
    safe = np.abs(den) > 1e-12
    mag = np.empty_like(x)
    mag[safe] = num[safe] / den[safe]
    # at x = n pi: limit M cos(M n pi)/cos(n pi)
    n_round = np.round(x[~safe] / np.pi)
    mag[~safe] = reps * (-1.0) ** ((reps - 1) * n_round)
    return mag * np.exp(1j * (reps - 1) * x)


def repeated_ff(seq: PulseSequence, axis: str, omegas) -> np.ndarray:
    """Filter function of the M-fold repeated sequence."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    return dirichlet_factor(omegas, seq.reps, seq.tau_c) * \
        fundamental_ff(seq, axis, omegas)


def comb_value(k: int, omega_vec, reps: int, tau_c: float):
    """Universal comb function: |w| sine-ratio times the per-axis ratios.

    omega_vec holds the k-1 reduced frequencies; the closing factor is
    evaluated at their sum.  Removable singularities at harmonics take the
    limit value +/- M per factor.
    """
    omega_vec = np.atleast_1d(np.asarray(omega_vec, dtype=float))
    if omega_vec.shape[-1] != k - 1:
        raise ValueError("omega_vec must hold k-1 frequencies")

    def ratio(w):
        x = w * tau_c / 2
        num, den = np.sin(reps * x), np.sin(x)
        if abs(den) > 1e-12:
            return num / den
        n_round = round(x / np.pi)
        return reps * (-1.0) ** ((reps - 1) * n_round)

    total = ratio(np.sum(omega_vec))
    for w in omega_vec:
        total *= ratio(w)
    return total


def multi_ff(fundamentals: dict, word: str, nu_vec) -> complex:
    """Axis-word filter from tabulated fundamentals.

    `fundamentals` maps axis -> callable(omega array) -> complex array.
    nu_vec is the k-1 reduced frequency vector (rad/ns).
    """
    nu_vec = np.atleast_1d(np.asarray(nu_vec, dtype=float))
    k = len(word)
    if nu_vec.size != k - 1:
        raise ValueError("frequency vector length must be len(word) - 1")
    args = list(nu_vec) + [-np.sum(nu_vec)]
    out = 1.0 + 0j
    for axis, w in zip(word, args):
        out *= complex(fundamentals[axis](np.array([w]))[0])
    return out


# ------------------------------------------------------------------ lattices
_SYMMETRIES = ("full_sym", "transpose_last2", "conjugation_only")


def _group_elements(k: int, symmetry: str):
    """Integer matrices acting on the reduced frequency vector."""
    if symmetry not in _SYMMETRIES:
        raise ValueError(f"unknown symmetry {symmetry!r}; have {_SYMMETRIES}")
    eye = np.eye(k - 1, dtype=int)
    if k == 2:
        return [eye, -eye]
    if symmetry == "conjugation_only":
        base = [eye]
    elif symmetry == "transpose_last2":
        # swap of the last two arguments of (w1, w2, w3 = -w1-w2)
        base = [eye, np.array([[1, 0], [-1, -1]])]
    else:
        # all permutations of (w1, w2, w3); reduced 2x2 integer matrices
        base = [
            np.array([[1, 0], [0, 1]]),     # (1 2 3)
            np.array([[0, 1], [1, 0]]),     # swap w1 w2
            np.array([[1, 0], [-1, -1]]),   # swap w2 w3
            np.array([[-1, -1], [0, 1]]),   # swap w1 w3
            np.array([[0, 1], [-1, -1]]),   # cycle
            np.array([[-1, -1], [1, 0]]),   # cycle
        ]
    return [s * m for m in base for s in (1, -1)]


@dataclass(frozen=True)
class HarmonicLattice:
    """Symmetry-reduced integer harmonic lattice with orbit multiplicities."""

    order: int
    symmetry: str
    points: tuple[tuple[int, ...], ...]
    multiplicities: tuple[int, ...]
    omega_h: float
    cutoff: int

    def frequencies(self) -> np.ndarray:
        return self.omega_h * np.asarray(self.points, dtype=float)

    def orbit(self, point) -> set[tuple[int, ...]]:
        elems = _group_elements(self.order, self.symmetry)
        v = np.asarray(point, dtype=int)
        return {tuple(int(x) for x in (g @ v)) for g in elems}


def build_lattice(k: int, symmetry: str, cutoff: int, omega_h: float,
                  include_dc: bool = True) -> HarmonicLattice:
    """Enumerate canonical harmonic points within the symmetric cutoff box.

    Points related by a symmetry-group element are merged onto a canonical
    (lexicographically largest) representative; the multiplicity counts the
    orbit members inside the box, so multiplicity sums reproduce the box
    point count.  Orbit members leaving the box are not counted.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    elems = _group_elements(k, symmetry)
    dim = k - 1
    if dim == 1:
        box = [(n,) for n in range(-cutoff, cutoff + 1)]
    else:
        box = [(a, b) for a in range(-cutoff, cutoff + 1)
               for b in range(-cutoff, cutoff + 1)]
    box_set = set(box)
    seen: set = set()
    points, mults = [], []
    for p in sorted(box, reverse=True):
        if p in seen:
            continue
        v = np.asarray(p, dtype=int)
        orbit = {tuple(int(x) for x in (g @ v)) for g in elems}
        in_box = orbit & box_set
        rep = max(in_box)
        seen |= in_box
        if not include_dc and all(c == 0 for c in rep):
            continue
        points.append(rep)
        mults.append(len(in_box))
    order = np.lexsort(np.asarray(points, dtype=int).T[::-1])
    points = tuple(points[i] for i in order)
    mults = tuple(mults[i] for i in order)
    return HarmonicLattice(order=k, symmetry=symmetry, points=points,
                           multiplicities=mults, omega_h=omega_h, cutoff=cutoff)


# ------------------------------------------------------------------ G matrix
@dataclass(frozen=True)
class GMatrix:
    """Comb-sampled filter matrix with conditioning diagnostics.

    `diag_dominance` is the mean over rows of (second largest / largest)
    entry magnitude: 0 for perfectly selective rows, near 1 for flat ones.
    `leakage_fraction` estimates per row how much |m F| weight falls on
    harmonics beyond the cutoff (band-limit criterion); `dc_ratio`
    compares the zero-harmonic column against the others.
    """

    values: np.ndarray             # (N_s, N_h) complex
    lattice: HarmonicLattice
    word: str
    sequences: tuple[PulseSequence, ...]
    condition_number: float
    diag_dominance: float
    leakage_fraction: tuple[float, ...]
    dc_ratio: float


def sequence_ff_table(seq: PulseSequence, axes: str = "xz"):
    """Cached per-axis fundamental evaluators for one sequence."""
    tables = {}
    for ax in axes:
        cache: dict[float, complex] = {}

        def fn(omegas, ax=ax, cache=cache):
            arr = np.atleast_1d(np.asarray(omegas, dtype=float))
            need = [w for w in arr if w not in cache]
            if need:
                vals = fundamental_ff(seq, ax, np.array(need))
                for w, v in zip(need, vals):
                    cache[float(w)] = complex(v)
            return np.array([cache[float(w)] for w in arr])

        tables[ax] = fn
    return tables


def assemble_G(sequences, lattice: HarmonicLattice, word: str,
               leakage_span: int = 2) -> GMatrix:
    """[G]_{j,i} = (M / tau_c^(k-1)) m(s_i) F^{(j)}_word(s_i omega_h).

    Also estimates each row's band-limit leakage: the fraction of |m F|
    weight on harmonics between the cutoff and `leakage_span` times the
    cutoff, relative to the total.
    """
    sequences = tuple(sequences)
    if not lattice.points:
        raise ValueError("empty lattice")
    k = lattice.order
    ext = build_lattice(k, lattice.symmetry, leakage_span * lattice.cutoff,
                        lattice.omega_h)
    ext_only = [(p, m) for p, m in zip(ext.points, ext.multiplicities)
                if max(abs(c) for c in p) > lattice.cutoff]
    rows, leakage = [], []
    for seq in sequences:
        fun = sequence_ff_table(seq)
        scale = seq.reps / seq.tau_c ** (k - 1)
        row = np.array([scale * m * multi_ff(fun, word, np.asarray(p) * lattice.omega_h)
                        for p, m in zip(lattice.points, lattice.multiplicities)])
        rows.append(row)
        inband = np.abs(row).sum()
        out = sum(abs(m * multi_ff(fun, word, np.asarray(p) * lattice.omega_h)) * scale
                  for p, m in ext_only)
        leakage.append(float(out / max(inband + out, 1e-300)))
    values = np.array(rows)
    sv = np.linalg.svd(values, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    mags = np.abs(values)
    dom = []
    for row in mags:
        if row.max() <= 0 or row.size < 2:
            dom.append(1.0 if row.size < 2 else 0.0)
            continue
        top = np.sort(row)[::-1]
        dom.append(float(top[1] / top[0]))
    try:
        dc_col = lattice.points.index(tuple([0] * (k - 1)))
        other = np.delete(mags, dc_col, axis=1)
        dc_ratio = float(mags[:, dc_col].max() / max(other.max(), 1e-300))
    except ValueError:
        dc_ratio = 0.0
    return GMatrix(values=values, lattice=lattice, word=word,
                   sequences=sequences, condition_number=cond,
                   diag_dominance=float(np.mean(dom)),
                   leakage_fraction=tuple(leakage), dc_ratio=dc_ratio)
