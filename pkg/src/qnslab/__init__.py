"""qnslab: qubit noise spectroscopy workbench.

Simulates a controlled qubit probe coupled to classical and quantum
dephasing environments, derives the control/cumulant overlap integrals
symbolically, and reconstructs time-ordered polyspectra from comb-based
harmonic sampling with Kramers-Kronig diagnostics.
"""

__version__ = "0.1.0"
