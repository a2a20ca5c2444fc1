"""Pulse trains, phase accumulation and switching functions.

A control cycle is a train of cosine-envelope pulses on [0, tau_c],
repeated M times, with an optional global R_y(phi) rotation applied
immediately before and after the controlled evolution.  The envelope of
pulse j is

    f_j(t) = (A_j / W_j) [cos(pi + 2 pi (t - t_j) / W_j) + 1]

on [t_j, t_j + W_j] and zero outside, so each pulse integrates to exactly
A_j.  Envelopes of overlapping pulses superpose (the published sequence
tables contain overlapping entries), and the accumulated phase

    phi(t) = sum_j A_j [u_j/W_j - sin(2 pi u_j/W_j)/(2 pi)],
    u_j = clip(t - t_j, 0, W_j)

stays in closed form.  The toggling-frame switching functions are
y_zz = cos(phi), y_xz = -sin(phi).

All times in ns, angles in radians (table I/O uses units of pi).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OMEGA_MIN = 11.0  # ns, minimum pulse width of the hardware model
TAU_C = 960.0     # ns, base cycle time
M_REPS = 10       # default repetition count


@dataclass(frozen=True)
class Pulse:
    t0: float      # start time (ns)
    angle: float   # total rotation angle (rad)
    width: float   # duration (ns)

    def __post_init__(self):
        if self.width < OMEGA_MIN - 1e-9:
            raise ValueError(f"pulse width {self.width} ns below {OMEGA_MIN} ns")


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple[Pulse, ...]
    tau_c: float = TAU_C
    reps: int = M_REPS
    phi_global: float = 0.0
    symmetry: str | None = None   # None | "mirror" | "antimirror"
    label: str = ""

    def __post_init__(self):
        for p in self.pulses:
            if p.t0 < -1e-9 or p.t0 + p.width > self.tau_c + 1e-9:
                raise ValueError(f"pulse [{p.t0}, {p.t0 + p.width}] outside cycle")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    @property
    def duration(self) -> float:
        return self.reps * self.tau_c

    def segment_edges(self) -> np.ndarray:
        """Sorted unique pulse edges within one cycle, including 0 and tau_c.

        Between consecutive edges the accumulated phase is either constant
        or a fixed superposition of active envelopes (smooth), which is what
        the filter-function quadrature needs.
        """
        edges = {0.0, self.tau_c}
        for p in self.pulses:
            edges.add(p.t0)
            edges.add(p.t0 + p.width)
        return np.array(sorted(edges))

    def total_angle(self) -> float:
        return sum(p.angle for p in self.pulses)


def envelope(seq: PulseSequence, t) -> np.ndarray:
    """Drive envelope f(t) (rad/ns) within one cycle, t taken mod tau_c."""
    t = np.asarray(t, dtype=float) % seq.tau_c
    out = np.zeros_like(t)
    for p in seq.pulses:
        u = t - p.t0
        mask = (u >= 0) & (u <= p.width)
        out = out + np.where(
            mask, (p.angle / p.width) * (np.cos(np.pi + 2 * np.pi * u / p.width) + 1), 0.0)
    return out


def phase(seq: PulseSequence, t) -> np.ndarray:
    """Accumulated control phase phi(t) = int_0^t f, exact piecewise form.

    Valid for t in [0, M tau_c]; completed cycles contribute the full cycle
    angle.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-9) or np.any(t > seq.duration + 1e-9):
        raise ValueError("time outside [0, M tau_c]")
    n_cycle = np.floor(t / seq.tau_c)
    n_cycle = np.minimum(n_cycle, seq.reps - 1)
    tc = t - n_cycle * seq.tau_c
    acc = n_cycle * seq.total_angle()
    for p in seq.pulses:
        u = np.clip(tc - p.t0, 0.0, p.width)
        acc = acc + p.angle * (u / p.width - np.sin(2 * np.pi * u / p.width) / (2 * np.pi))
    return acc


def switching(seq: PulseSequence, t):
    """Switching functions (y_zz, y_xz) = (cos phi, -sin phi) at time t."""
    ph = phase(seq, t)
    return np.cos(ph), -np.sin(ph)


def symmetrize(seq: PulseSequence, mode: str) -> PulseSequence:
    """Mirror or anti-mirror completion of a half-cycle sequence.

    Every source pulse must lie in [0, tau_c/2]; its reflection is placed at
    t' = tau_c - t0 - width with the same angle (mirror) or the negated
    angle (antimirror).
    """
    if mode not in ("mirror", "antimirror"):
        raise ValueError("mode must be 'mirror' or 'antimirror'")
    for p in seq.pulses:
        if p.t0 + p.width > seq.tau_c / 2 + 1e-9:
            raise ValueError("source pulses must fit within [0, tau_c/2]")
    sign = 1.0 if mode == "mirror" else -1.0
    reflected = [Pulse(seq.tau_c - p.t0 - p.width, sign * p.angle, p.width)
                 for p in seq.pulses]
    pulses = tuple(sorted(list(seq.pulses) + reflected, key=lambda p: p.t0))
    return PulseSequence(pulses=pulses, tau_c=seq.tau_c, reps=seq.reps,
                         phi_global=seq.phi_global, symmetry=mode,
                         label=seq.label + f"_{mode}" if seq.label else mode)


# ---------------------------------------------------------------------------
# Published table of second-order sequences: tuples (t_j ns, A_j/pi, W_j ns).
# Sequences s1..s8 use tau_c = 960 ns; the adaptive sequence uses 1920 ns.
_TABLE = {
    "s1": [(10, 1, 60), (40, 1, 60), (105, 1, 60), (135, 1, 60), (200, 1, 60),
           (230, 1, 60), (295, 1, 60), (325, 1, 60), (390, 1, 60), (420, 1, 60),
           (485, 1, 60), (515, 1, 60), (580, 1, 60), (610, 1, 60), (675, 1, 60),
           (705, 1, 60), (770, 1, 60), (800, 1, 60), (865, 1, 60), (895, 1, 60)],
    "s2": [(146, 1, 150), (226, 1, 84), (244, 1, 11), (267, 1, 84), (281, 1, 150),
           (283, 1, 11), (323, 1, 11), (626, 1, 150), (706, 1, 84), (724, 1, 11),
           (747, 1, 84), (761, 1, 150), (763, 1, 11), (803, 1, 11)],
    "s3": [(8, 1, 150), (224, 1, 150), (235, 1, 45), (260, 1, 11), (292, 1, 83),
           (298, 1, 150), (311, 1, 11), (348, 1, 11), (507, 1, 67), (512, 1, 150),
           (548, 1, 11), (734, 1, 44), (735, 1, 150), (760, 1, 11)],
    "s4": [(10, 1, 150), (183, 1, 150), (185, 1, 58), (221, 1, 11), (322, 1, 150),
           (490, 1, 150), (618, 1, 150), (680, 1, 150), (689, 1, 73), (703, 1, 11),
           (735, 1, 11), (807, 1, 150)],
    "s5": [(54, 1, 16), (150, 0.76, 26), (244, 0.82, 25), (290, 0.92, 144),
           (416, 1, 93), (434, 1, 60), (449, 1, 18), (534, 1, 148), (577, 1, 58),
           (601, 1, 15), (667, 1, 123), (894, -0.5, 66)],
    "s6": [(4, 1, 150), (101, 1, 150), (198, 1, 150), (293, 1, 150), (391, 1, 150),
           (485, 1, 150), (582, 1, 150), (677, 1, 150), (828, 1, 32), (928, 1, 32)],
    "s7": [(8, 1, 45), (91, 1, 23), (134, 1, 114), (216, 1, 111), (305, 1, 92),
           (364, 1, 134), (466, 1, 88), (513, 1, 150), (602, 1, 137), (695, 1, 94),
           (700, 1, 122), (746, 1, 11), (771, 1, 119), (862, 1, 98)],
    "s8": [(47, 1, 138), (108, 1, 150), (178, 1, 150), (247, 1, 150), (313, 1, 150),
           (384, 1, 150), (420, 1, 11), (420, 1, 11), (452, 1, 150), (521, 1, 150),
           (589, 1, 150), (657, 1, 150), (727, 1, 150), (799, 1, 140)],
    "adaptive_2tc": [(35, 1, 60), (170, 1, 60), (310, 1, 60), (445, 1, 60),
                     (585, 1, 60), (720, 1, 60), (860, 1, 60), (995, 1, 60),
                     (1135, 1, 60), (1270, 1, 60), (1410, 1, 60), (1545, 1, 60),
                     (1685, 1, 60), (1820, 1, 60)],
}

SEQUENCE_IDS = tuple(sorted(_TABLE))


def load_sequence_table(seq_id: str, reps: int = M_REPS) -> PulseSequence:
    """One of the published second-order sequences (s1..s8, adaptive_2tc)."""
    if seq_id not in _TABLE:
        raise KeyError(f"unknown sequence id {seq_id!r}; have {SEQUENCE_IDS}")
    tau_c = 2 * TAU_C if seq_id == "adaptive_2tc" else TAU_C
    pulses = tuple(Pulse(t0, a * np.pi, w) for t0, a, w in _TABLE[seq_id])
    return PulseSequence(pulses=pulses, tau_c=tau_c, reps=reps,
                         phi_global=0.0, label=seq_id)


def save_sequence(seq: PulseSequence, stem: Path) -> tuple[Path, Path]:
    """Persist as <stem>.csv (t_ns, A_over_pi, Omega_ns) + <stem>.json sidecar."""
    stem = Path(stem)
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ns", "A_over_pi", "Omega_ns"])
        for p in seq.pulses:
            w.writerow([repr(p.t0), repr(p.angle / np.pi), repr(p.width)])
    with open(json_path, "w") as fh:
        json.dump({"tau_c_ns": seq.tau_c, "M": seq.reps,
                   "phi_over_pi": seq.phi_global / np.pi,
                   "symmetry": seq.symmetry, "label": seq.label}, fh, indent=2)
    return csv_path, json_path


def load_sequence(stem: Path) -> PulseSequence:
    """Inverse of :func:`save_sequence`."""
    stem = Path(stem)
    with open(stem.with_suffix(".json")) as fh:
        meta = json.load(fh)
    pulses = []
    with open(stem.with_suffix(".csv")) as fh:
        for row in csv.DictReader(fh):
            pulses.append(Pulse(float(row["t_ns"]),
                                float(row["A_over_pi"]) * np.pi,
                                float(row["Omega_ns"])))
    return PulseSequence(pulses=tuple(pulses), tau_c=meta["tau_c_ns"],
                         reps=meta["M"], phi_global=meta["phi_over_pi"] * np.pi,
                         symmetry=meta.get("symmetry"), label=meta.get("label", ""))
