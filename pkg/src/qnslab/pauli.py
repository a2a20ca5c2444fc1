"""Exact algebra over the single-qubit Pauli basis {1, x, y, z}.

The basis is orthonormal under the Hilbert-Schmidt inner product with
Tr[P_a P_b] = 2 delta_ab; every element is Hermitian, unitary and
self-inverse.  Products close on the basis up to a phase in {1, i, -1, -i},
which lets the symbolic layers track coefficients exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LABELS = ("1", "x", "y", "z")
AXES = ("x", "y", "z")

MATRICES = {
    "1": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Structure constants: sigma_a sigma_b = phase * sigma_c with the phase an
# exact fourth root of unity.  Built once from the 2x2 matrices.
_MUL: dict[tuple[str, str], tuple[complex, str]] = {}


def _build_mul_table():
    phases = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
    for a in LABELS:
        for b in LABELS:
            prod = MATRICES[a] @ MATRICES[b]
            for c in LABELS:
                for ph in phases:
                    if np.allclose(prod, ph * MATRICES[c]):
                        _MUL[(a, b)] = (ph, c)
                        break
                if (a, b) in _MUL:
                    break


_build_mul_table()


def pauli_mul(a: str, b: str) -> tuple[complex, str]:
    """Product P_a P_b = phase * P_c; returns (phase, c)."""
    return _MUL[(a, b)]


def pauli_word(labels) -> tuple[complex, str]:
    """Reduce an ordered product of basis labels to (phase, label)."""
    phase = 1.0 + 0j
    acc = "1"
    for lab in labels:
        ph, acc = pauli_mul(acc, lab)
        phase *= ph
    return phase, acc


def toggling_sign(a: str, alpha: str) -> int:
    """Commutation indicator s(a, alpha): 1 if P_a commutes with P_alpha.

    The conjugation rule P_alpha^-1 P_a P_alpha = (-1)^(1 - s) P_a holds
    with the returned value.  Equals delta_{a,alpha} + delta_{a,1} away from
    the identity edge cases, with the result clamped to {0, 1} so that the
    identity always commutes.
    """
    return 1 if (a == alpha or a == "1" or alpha == "1") else 0


@dataclass(frozen=True)
class OperatorCoeffs:
    """Hilbert-Schmidt coefficients of a 2x2 operator over {1, x, y, z}."""

    c1: complex
    cx: complex
    cy: complex
    cz: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.cx, self.cy, self.cz])

    def reconstruct(self) -> np.ndarray:
        """O = sum_a c_a P_a."""
        return (self.c1 * MATRICES["1"] + self.cx * MATRICES["x"]
                + self.cy * MATRICES["y"] + self.cz * MATRICES["z"])


def hs_project(op: np.ndarray) -> OperatorCoeffs:
    """Project a 2x2 operator onto the basis: c_a = Tr[P_a O] / 2."""
    op = np.asarray(op, dtype=complex)
    return OperatorCoeffs(
        c1=np.trace(op) / 2.0,
        cx=np.trace(MATRICES["x"] @ op) / 2.0,
        cy=np.trace(MATRICES["y"] @ op) / 2.0,
        cz=np.trace(MATRICES["z"] @ op) / 2.0,
    )


def exp_pauli(coeffs: OperatorCoeffs) -> np.ndarray:
    """exp(c1*1 + cx*X + cy*Y + cz*Z) in closed form.

    Uses M^2 = theta^2 * 1 with theta = sqrt(cx^2 + cy^2 + cz^2) (principal
    complex square root), so exp(M) = cosh(theta) 1 + sinhc(theta) M.  The
    series form of sinhc is used near theta = 0.
    """
    theta2 = coeffs.cx**2 + coeffs.cy**2 + coeffs.cz**2
    theta = np.sqrt(complex(theta2))
    if abs(theta) < 1e-8:
        ch = 1.0 + theta2 / 2.0
        shc = 1.0 + theta2 / 6.0
    else:
        ch = np.cosh(theta)
        shc = np.sinh(theta) / theta
    m = (coeffs.cx * MATRICES["x"] + coeffs.cy * MATRICES["y"]
         + coeffs.cz * MATRICES["z"])
    return np.exp(coeffs.c1) * (ch * MATRICES["1"] + shc * m)


def exp_su2_batch(cx, cy, cz) -> np.ndarray:
    """Batched exp(cx*X + cy*Y + cz*Z) for complex coefficient arrays.

    Inputs broadcast to a common shape (...); returns an array of shape
    (..., 2, 2).  Same closed form as :func:`exp_pauli`, vectorised for the
    per-step propagators of the trajectory simulator.
    """
    cx, cy, cz = np.broadcast_arrays(
        np.asarray(cx, dtype=complex), np.asarray(cy, dtype=complex),
        np.asarray(cz, dtype=complex))
    theta2 = cx**2 + cy**2 + cz**2
    theta = np.sqrt(theta2)
    small = np.abs(theta) < 1e-8
    safe = np.where(small, 1.0, theta)
    ch = np.where(small, 1.0 + theta2 / 2.0, np.cosh(safe))
    shc = np.where(small, 1.0 + theta2 / 6.0, np.sinh(safe) / safe)
    out = np.empty(cx.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ch + shc * cz
    out[..., 0, 1] = shc * (cx - 1j * cy)
    out[..., 1, 0] = shc * (cx + 1j * cy)
    out[..., 1, 1] = ch - shc * cz
    return out


def density_matrix(xi: str) -> np.ndarray:
    """Preparation state rho_xi = (P_xi + 1) / Tr[P_xi + 1].

    xi = "1" gives the maximally mixed state.
    """
    if xi == "1":
        return MATRICES["1"] / 2.0
    return (MATRICES[xi] + MATRICES["1"]) / 2.0
