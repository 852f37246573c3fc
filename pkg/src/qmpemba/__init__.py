"""Quantum Mpemba relaxation in charge-conserving spin chains."""
