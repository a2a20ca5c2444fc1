"""Default noise fixtures and reference sequences used across the suite.

The classical fixture is a broad Lorentzian at DC plus a weaker one at the
fifth harmonic and a sharp sub-harmonic Gaussian peak between the third
and fourth comb teeth; the amplitude scale is calibrated so the leading
k = 2 attenuation exponent of the dense pi-train sequence at M = 10 is
about 0.3 (measurable but within the low-order cumulant regime).  The
quantum fixture drives the auxiliary bath qubit with the centred square of
the same process without the sharp feature.

All frequencies in rad/ns; omega_h = 2 pi / 960 ns.
"""
from __future__ import annotations

import numpy as np

from .noise import QuantumBathModel, SpectrumComponent, SpectrumModel
from .sequences import TAU_C, Pulse, PulseSequence

OMEGA_H = 2 * np.pi / TAU_C
GRID_SPACING = OMEGA_H / 16
GRID_EXTENT = 16 * OMEGA_H

# k = 2 exponent of sequence s1 at M = 10 is approximately -0.3 with this
# scale (see test_fixture_coupling_scale)
CLASSICAL_AMPLITUDE = 1.104e-4

# coupling scale of the squared process: keeps both the k = 2 and k = 3
# quantum exponents of order 1e-1 .. 1e-3 at M = 10
QUANTUM_AMPLITUDE = 0.10


def classical_model(with_feature: bool = True,
                    amplitude: float = CLASSICAL_AMPLITUDE) -> SpectrumModel:
    comps = [
        SpectrumComponent("lorentzian", amplitude, 0.0, 1.2 * OMEGA_H),
        SpectrumComponent("lorentzian", 0.4 * amplitude, 5.0 * OMEGA_H,
                          0.8 * OMEGA_H),
    ]
    if with_feature:
        comps.append(SpectrumComponent("gaussian_peak", 1.2 * amplitude,
                                       3.5 * OMEGA_H, 0.2 * OMEGA_H))
    return SpectrumModel(tuple(comps), omega_max=GRID_EXTENT)


def quantum_model(amplitude: float = QUANTUM_AMPLITUDE) -> QuantumBathModel:
    base = classical_model(with_feature=False, amplitude=amplitude)
    return QuantumBathModel(base=base, omega_b=2 * OMEGA_H)


def white_noise_model(level: float = 1e-4) -> SpectrumModel:
    return SpectrumModel((SpectrumComponent("constant", level),),
                         omega_max=GRID_EXTENT)


def default_grid(extent: float = GRID_EXTENT,
                 spacing: float = GRID_SPACING) -> np.ndarray:
    n = int(round(extent / spacing))
    return spacing * np.arange(-n, n + 1)


def three_pulse_sequence() -> PulseSequence:
    """Small asymmetric sequence for the dual-domain equivalence checks."""
    return PulseSequence(
        (Pulse(90.0, np.pi, 40.0), Pulse(350.0, 0.7 * np.pi, 24.0),
         Pulse(640.0, np.pi, 60.0)),
        tau_c=TAU_C, reps=1, label="dual_domain_3p")
