"""Closed-form inversion of tomography records into overlap channels.

The effective bath propagator for measurement axis alpha is parametrised

    V = exp( I1 * 1 + q * P_alpha - i * sum_{j != alpha} I_j * P_j ),

with four real numbers: the uniform attenuation I1, the two coherent
rotation channels I_j, and the commutator-channel amplitude q (the
gamma = alpha projection, nonzero only for quantum environments).  With
Ibar^2 = sum_j I_j^2 - q^2 (either sign) the four preparation states give

    <P_alpha>_1    = e^{I1} sinc(Ibar) q
    <P_alpha>_xi   = <P_alpha>_1 + e^{I1} [ cos(Ibar) delta_{alpha,xi}
                     + sinc(Ibar) sum_j eps_{j,xi,alpha} I_j ],

where cos and sinc are even functions of Ibar, so only w = Ibar^2 enters.
Inversion uses the log identity e^{2 I1} = -m_1^2 + sum_xi (m_xi - m_1)^2
and the signed tan^2 expression for w, restricted to the principal branch
|Re Ibar| < pi/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import MATRICES, OperatorCoeffs, density_matrix, exp_pauli

AXES3 = ("x", "y", "z")
PREPS = ("1", "x", "y", "z")

_EPS = {}
for _i, _a in enumerate(AXES3):
    for _j, _b in enumerate(AXES3):
        for _k, _c in enumerate(AXES3):
            _EPS[(_a, _b, _c)] = int(np.sign((_j - _i) * (_k - _j) * (_k - _i)))


class NonPositiveLogArgument(ValueError):
    """Decoherence too strong or inconsistent record: log argument <= 0."""


class BranchWindowExceeded(ValueError):
    """Recovered rotation magnitude left the principal branch [0, pi/2)."""


@dataclass(frozen=True)
class OverlapChannels:
    """The four real channel values for one measurement axis."""

    alpha: str
    i_unit: float     # I1, uniform attenuation exponent
    i_x: float
    i_y: float
    i_z: float

    def vector(self):
        return np.array([self.i_x, self.i_y, self.i_z])

    def channel(self, gamma: str) -> float:
        return {"1": self.i_unit, "x": self.i_x, "y": self.i_y,
                "z": self.i_z}[gamma]

    def w_value(self) -> float:
        """Ibar^2 with the commutator channel entering negatively."""
        q = self.channel(self.alpha)
        return float(sum(self.vector() ** 2) - 2 * q**2)


def _cos_sinc(w: float):
    """cos(sqrt(w)) and sinc(sqrt(w)) as even analytic functions of w."""
    if abs(w) < 1e-12:
        return 1.0 - w / 2.0, 1.0 - w / 6.0
    if w > 0:
        r = np.sqrt(w)
        return float(np.cos(r)), float(np.sin(r) / r)
    r = np.sqrt(-w)
    return float(np.cosh(r)), float(np.sinh(r) / r)


def forward_expectations(channels: OverlapChannels) -> dict:
    """<P_alpha>_xi for the four preparations, from the closed form."""
    alpha = channels.alpha
    q = channels.channel(alpha)
    w = channels.w_value()
    cosb, sincb = _cos_sinc(w)
    e1 = np.exp(channels.i_unit)
    out = {"1": e1 * sincb * q}
    for xi in AXES3:
        val = out["1"]
        if xi == alpha:
            val = val + e1 * cosb
        else:
            for j in AXES3:
                if j != alpha:
                    val = val + e1 * sincb * _EPS[(j, xi, alpha)] * channels.channel(j)
        out[xi] = float(val)
    out["1"] = float(out["1"])
    return out


def forward_expectations_matrix(channels: OverlapChannels) -> dict:
    """Same expectations through an explicit 2x2 exponential and trace.

    Independent matrix-level oracle for :func:`forward_expectations`.
    """
    alpha = channels.alpha
    coeffs = [0j, 0j, 0j]
    for idx, j in enumerate(AXES3):
        if j == alpha:
            coeffs[idx] = complex(channels.channel(j))
        else:
            coeffs[idx] = -1j * channels.channel(j)
    v = exp_pauli(OperatorCoeffs(channels.i_unit, *coeffs))
    out = {}
    for xi in PREPS:
        rho = density_matrix(xi)
        out[xi] = float(np.trace(v @ rho @ MATRICES[alpha]).real)
    return out


def extract_channels(means: dict, alpha: str,
                     branch_limit: float = np.pi / 2) -> OverlapChannels:
    """Invert the four expectations into (I1, q, I_j) on the principal branch.

    Raises NonPositiveLogArgument when the attenuation identity fails and
    BranchWindowExceeded when the recovered |Ibar| reaches `branch_limit`.
    """
    m1 = means["1"]
    d = {xi: means[xi] - m1 for xi in AXES3}
    log_arg = -m1**2 + sum(d[xi] ** 2 for xi in AXES3)
    if log_arg <= 0:
        raise NonPositiveLogArgument(
            f"log argument {log_arg:.3e} <= 0 for alpha={alpha}: record "
            "inconsistent or decoherence too strong")
    i_unit = 0.5 * np.log(log_arg)
    e1 = np.exp(i_unit)
    # signed tan^2: numerator excludes the alpha channel
    num = -m1**2 + sum(d[xi] ** 2 for xi in AXES3 if xi != alpha)
    den = np.sign(d[alpha]) * d[alpha] ** 2
    if den == 0:
        raise BranchWindowExceeded(
            f"cos term vanished for alpha={alpha}: |Ibar| at pi/2")
    t2 = num / den
    # tan^2 = t2 with w = Ibar^2: w > 0 <-> t2 > 0
    if t2 >= 0:
        ibar = np.arctan(np.sqrt(t2))
        if d[alpha] < 0:
            ibar = np.pi - ibar   # cos < 0 branch, outside the window
        w = ibar**2
        if ibar >= branch_limit:
            raise BranchWindowExceeded(
                f"|Ibar| = {ibar:.3f} outside [0, {branch_limit:.3f})")
    else:
        if d[alpha] < 0:
            raise BranchWindowExceeded(
                "negative cos with hyperbolic channel: outside the branch")
        w = -np.arctanh(np.sqrt(-t2)) ** 2 if -t2 < 1 else None
        if w is None:
            raise BranchWindowExceeded("tanh magnitude >= 1: inconsistent record")
    cosb, sincb = _cos_sinc(w)
    q = m1 / (e1 * sincb)
    vals = {alpha: q}
    others = [j for j in AXES3 if j != alpha]
    # d_xi = e1 sinc sum_j eps(j, xi, alpha) I_j for xi != alpha picks the
    # single remaining axis per equation
    for xi in others:
        j = next(a for a in AXES3 if a != xi and a != alpha)
        vals[j] = d[xi] / (e1 * sincb * _EPS[(j, xi, alpha)])
    return OverlapChannels(alpha=alpha, i_unit=float(i_unit),
                           i_x=float(vals["x"]), i_y=float(vals["y"]),
                           i_z=float(vals["z"]))


def forward_jacobian(channels: OverlapChannels) -> np.ndarray:
    """d <P_alpha>_xi / d (I1, I_x, I_y, I_z), analytic.

    Rows ordered (1, x, y, z); columns (I1, I_x, I_y, I_z) with the alpha
    column differentiating the commutator channel q.
    """
    alpha = channels.alpha
    q = channels.channel(alpha)
    w = channels.w_value()
    cosb, sincb = _cos_sinc(w)
    e1 = np.exp(channels.i_unit)
    # derivatives of cos(sqrt(w)) and sinc(sqrt(w)) with respect to w
    if abs(w) > 1e-8:
        dcos = (-0.5) * sincb
        dsinc = (cosb - sincb) / (2 * w)
    else:
        dcos = -0.5 + w / 12.0
        dsinc = -1.0 / 6.0 + w / 60.0
    base = forward_expectations(channels)

    def dw_d(j):
        v = channels.channel(j)
        return 2 * v if j != alpha else -2 * v

    jac = np.zeros((4, 4))
    cols = ["1"] + list(AXES3)
    for r, xi in enumerate(PREPS):
        jac[r, 0] = base[xi]      # d/dI1: overall e^{I1} factor
        for c, j in enumerate(AXES3, start=1):
            dwj = dw_d(j)
            val = e1 * (dsinc * dwj) * q
            if j == alpha:
                val += e1 * sincb
            if xi == alpha:
                val += e1 * dcos * dwj
            elif xi != "1":
                for jj in AXES3:
                    if jj != alpha:
                        term = e1 * (dsinc * dwj) * _EPS[(jj, xi, alpha)] * \
                            channels.channel(jj)
                        if jj == j:
                            term += e1 * sincb * _EPS[(jj, xi, alpha)]
                        val += term
            jac[r, c] = val
    return jac


def propagate_errors(channels: OverlapChannels, stderrs: dict) -> np.ndarray:
    """First-order standard errors of (I1, I_x, I_y, I_z).

    Delta method through the inverse of the analytic forward Jacobian.
    """
    jac = forward_jacobian(channels)
    jinv = np.linalg.inv(jac)
    sig = np.array([stderrs[xi] for xi in PREPS])
    cov = jinv @ np.diag(sig**2) @ jinv.T
    return np.sqrt(np.diag(cov))
