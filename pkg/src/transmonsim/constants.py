"""Fundamental constants (2019 SI exact values) used by the circuit models."""

ELECTRON_CHARGE = 1.602176634e-19  # C
PLANCK_H = 6.62607015e-34  # J s
FLUX_QUANTUM = PLANCK_H / (2.0 * ELECTRON_CHARGE)  # Wb
