import numpy as np
import pytest
from scipy.integrate import quad

from qnslab.filters import (
    GMatrix, HarmonicLattice, assemble_G, build_lattice, comb_value,
    dirichlet_factor, fundamental_ff, multi_ff, repeated_ff, sequence_ff_table,
)
from qnslab.sequences import (
    TAU_C, Pulse, PulseSequence, load_sequence_table, switching, symmetrize,
)

OMEGA_H = 2 * np.pi / TAU_C


def free_seq(reps=1):
    return PulseSequence((), tau_c=TAU_C, reps=reps)


def test_free_evolution_closed_forms():
    seq = free_seq()
    assert fundamental_ff(seq, "z", 0.0)[0] == pytest.approx(TAU_C)
    w = 3.7 * OMEGA_H
    ref = (np.exp(1j * w * TAU_C) - 1) / (1j * w)
    assert fundamental_ff(seq, "z", w)[0] == pytest.approx(ref, rel=1e-12)
    assert fundamental_ff(seq, "x", w)[0] == pytest.approx(0.0, abs=1e-14)


def test_spin_echo_filter_vs_brute_quadrature():
    # narrow pi pulse at the cycle midpoint approximates the ideal-pulse
    # two-segment +-1 echo profile
    width = 11.0
    seq = PulseSequence((Pulse(TAU_C / 2 - width / 2, np.pi, width),), tau_c=TAU_C)
    w = np.linspace(0.5 * OMEGA_H, 8 * OMEGA_H, 31)
    got = fundamental_ff(seq, "z", w)
    ref = np.array([
        quad(lambda t: switching(seq, t)[0] * np.cos(wi * t), 0, TAU_C,
             limit=800, epsabs=1e-12)[0]
        + 1j * quad(lambda t: switching(seq, t)[0] * np.sin(wi * t), 0, TAU_C,
                    limit=800, epsabs=1e-12)[0]
        for wi in w])
    assert np.max(np.abs(got - ref)) < 1e-9 * np.abs(ref).max()
    # ideal-limit comparison on |F|^2
    ideal = np.array([(np.exp(1j * wi * TAU_C / 2) - 1) / (1j * wi)
                      - (np.exp(1j * wi * TAU_C) - np.exp(1j * wi * TAU_C / 2)) / (1j * wi)
                      for wi in w])
    rel = np.abs(np.abs(got) ** 2 - np.abs(ideal) ** 2) / np.abs(ideal).max() ** 2
    assert np.median(rel) < 0.05  # finite 11 ns width, qualitative match


def test_quadrature_against_doubled_resolution():
    seq = load_sequence_table("s5", reps=1)
    w = np.linspace(-16 * OMEGA_H, 16 * OMEGA_H, 41)
    base = fundamental_ff(seq, "z", w)
    # brute composite Simpson at very fine resolution
    t = np.linspace(0, TAU_C, 200_001)
    y = switching(seq, t)[0]
    ref = np.array([np.trapezoid(y * np.exp(1j * wi * t), t) for wi in w])
    assert np.max(np.abs(base - ref)) < 5e-9 * max(1.0, np.abs(ref).max())


def test_conjugation_symmetry():
    for sid in ("s1", "s5", "s7"):
        seq = load_sequence_table(sid, reps=1)
        w = np.linspace(0.3, 9.7, 23) * OMEGA_H
        for ax in "xz":
            fp = fundamental_ff(seq, ax, w)
            fm = fundamental_ff(seq, ax, -w)
            assert np.max(np.abs(fm - fp.conj())) < 1e-12 * np.abs(fp).max()


def test_harmonic_factorisation():
    seq1 = load_sequence_table("s3", reps=1)
    seq10 = load_sequence_table("s3", reps=10)
    for m in (1, 2, 5, 7):
        w = m * OMEGA_H
        f1 = fundamental_ff(seq1, "z", w)[0]
        f10 = repeated_ff(seq10, "z", w)[0]
        assert abs(f10 - 10 * f1) < 1e-10 * max(1.0, abs(f1) * 10)


def test_dirichlet_factor_values():
    assert dirichlet_factor(0.0, 10, TAU_C) == pytest.approx(10.0)
    w = np.array([OMEGA_H, 2 * OMEGA_H, 0.5 * OMEGA_H])
    d = dirichlet_factor(w, 10, TAU_C)
    assert d[0] == pytest.approx(10.0, rel=1e-9)
    assert d[1] == pytest.approx(10.0, rel=1e-9)
    # geometric-sum reference off harmonics
    ref = sum(np.exp(1j * w[2] * m * TAU_C) for m in range(10))
    assert d[2] == pytest.approx(ref, rel=1e-12)


def test_centered_filter_parity_mirror_antimirror():
    half = PulseSequence((Pulse(80.0, np.pi, 24.0), Pulse(300.0, np.pi, 40.0)),
                         tau_c=TAU_C)
    w = np.linspace(-8, 8, 33) * OMEGA_H
    mir = symmetrize(half, "mirror")       # total angle 4 pi -> even y_z, odd y_x
    fz = fundamental_ff(mir, "z", w) * np.exp(-1j * w * TAU_C / 2)
    fx = fundamental_ff(mir, "x", w) * np.exp(-1j * w * TAU_C / 2)
    assert np.max(np.abs(fz.imag)) < 1e-9 * np.abs(fz).max()
    assert np.max(np.abs(fx.real)) < 1e-9 * max(np.abs(fx).max(), 1e-30)
    anti = symmetrize(half, "antimirror")  # both switching functions even
    fz = fundamental_ff(anti, "z", w) * np.exp(-1j * w * TAU_C / 2)
    fx = fundamental_ff(anti, "x", w) * np.exp(-1j * w * TAU_C / 2)
    assert np.max(np.abs(fz.imag)) < 1e-9 * np.abs(fz).max()
    assert np.max(np.abs(fx.imag)) < 1e-9 * max(np.abs(fx).max(), 1e-30)


def test_comb_values():
    # k=2 at DC: both factors reach M
    assert comb_value(2, [0.0], 10, TAU_C) == pytest.approx(100.0)
    # harmonics: magnitude M^2 with the sign of the limit
    for m in (1, 2, 3):
        v = comb_value(2, [m * OMEGA_H], 10, TAU_C)
        assert abs(v) == pytest.approx(100.0, rel=1e-9)
    # off-harmonic bound from unit numerator
    v = comb_value(2, [OMEGA_H / 2], 10, TAU_C)
    assert abs(v) <= 1.0 / np.sin(np.pi / 4) ** 2 + 1e-9
    # k=3 closing-frequency factor
    v = comb_value(3, [OMEGA_H, -OMEGA_H], 10, TAU_C)
    assert abs(v) == pytest.approx(1000.0, rel=1e-9)
    with pytest.raises(ValueError):
        comb_value(3, [OMEGA_H], 10, TAU_C)


def test_multi_ff_k2_is_squared_modulus():
    seq = load_sequence_table("s2", reps=1)
    fun = sequence_ff_table(seq)
    for m in (1, 3, 6):
        w = m * OMEGA_H
        val = multi_ff(fun, "zz", [w])
        assert val.imag == pytest.approx(0.0, abs=1e-10 * abs(val))
        assert val.real == pytest.approx(abs(fun["z"](w)[0]) ** 2, rel=1e-12)
    assert multi_ff(fun, "zx", [0.77 * OMEGA_H]) != 0
    zero_fun = {"z": lambda w: np.zeros(np.atleast_1d(w).shape, dtype=complex),
                "x": fun["x"]}
    assert multi_ff(zero_fun, "zx", [OMEGA_H]) == 0


def test_multi_ff_k3_matches_product():
    seq = load_sequence_table("s4", reps=1)
    fun = sequence_ff_table(seq)
    w1, w2 = 2 * OMEGA_H, -5 * OMEGA_H
    val = multi_ff(fun, "xzz", [w1, w2])
    ref = (fun["x"](w1)[0] * fun["z"](w2)[0] * fun["z"](-w1 - w2)[0])
    assert val == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        multi_ff(fun, "xzz", [w1])


# ------------------------------------------------------------------ lattices
def test_lattice_k2_conjugation():
    lat = build_lattice(2, "conjugation_only", 7, OMEGA_H)
    assert lat.points == tuple((n,) for n in range(8))
    assert lat.multiplicities == (1,) + (2,) * 7
    assert sum(lat.multiplicities) == 15  # box {-7..7}


def test_lattice_k3_full_sym_generic_orbit():
    lat = build_lattice(3, "full_sym", 7, OMEGA_H)
    generic = next(p for p in lat.points
                   if len({abs(p[0]), abs(p[1]), abs(p[0] + p[1])}) == 3
                   and 0 not in p and p[0] + p[1] != 0
                   and max(abs(p[0]), abs(p[1]), abs(p[0] + p[1])) <= 7)
    i = lat.points.index(generic)
    assert lat.multiplicities[i] == 12
    assert len(lat.orbit(generic)) == 12


def test_lattice_k3_containment_and_counts():
    full = build_lattice(3, "full_sym", 3, OMEGA_H)
    t2 = build_lattice(3, "transpose_last2", 3, OMEGA_H)
    assert set(full.points) < set(t2.points)
    for lat in (full, t2):
        assert sum(lat.multiplicities) == 49  # 7 x 7 box
    # canonicalisation idempotent: representative of a representative is itself
    for p in t2.points:
        assert max(lat_orbit_in_box(t2, p)) == p


def lat_orbit_in_box(lat, p):
    box = {q for q in lat.orbit(p) if max(abs(c) for c in q) <= lat.cutoff}
    return box


def test_lattice_validation():
    with pytest.raises(ValueError):
        build_lattice(3, "bogus", 3, OMEGA_H)
    with pytest.raises(ValueError):
        build_lattice(2, "conjugation_only", 0, OMEGA_H)


# ------------------------------------------------------------------ G matrix
def test_assemble_G_free_evolution_dc_dominance():
    lat = build_lattice(2, "conjugation_only", 7, OMEGA_H)
    g = assemble_G([free_seq(reps=10)], lat, "zz")
    row = np.abs(g.values[0])
    dc = lat.points.index((0,))
    assert np.argmax(row) == dc
    assert g.values[0, dc] == pytest.approx(10.0 / TAU_C * 1 * TAU_C**2, rel=1e-9)
    assert g.dc_ratio > 10


def test_assemble_G_s_sequences_wellconditioned():
    lat = build_lattice(2, "conjugation_only", 7, OMEGA_H)
    seqs = [load_sequence_table(f"s{i}") for i in range(1, 9)]
    g = assemble_G(seqs, lat, "zz")
    gre = g.values.real
    # approximately diagonal after reordering: each sequence peaks at a
    # distinct harmonic
    peaks = [int(np.argmax(np.abs(gre[j]))) for j in range(8)]
    assert len(set(peaks)) == 8
    cond = np.linalg.cond(gre)
    assert cond < 1e2
    # s2..s8 are band-limited; s1 (the dense pi train serving the DC row)
    # responds mostly above the band by construction
    assert all(l < 0.1 for l in g.leakage_fraction[1:])


def test_assemble_G_duplicate_rows_flagged():
    lat = build_lattice(2, "conjugation_only", 3, OMEGA_H)
    s = load_sequence_table("s2")
    g = assemble_G([s, s, s, s], lat, "zz")
    assert g.condition_number > 1e10


def test_assemble_G_empty_lattice():
    lat = HarmonicLattice(order=2, symmetry="conjugation_only", points=(),
                          multiplicities=(), omega_h=OMEGA_H, cutoff=1)
    with pytest.raises(ValueError):
        assemble_G([free_seq()], lat, "zz")
