"""Long-range XY chain with a linear longitudinal field, built sector by sector.

    H = sum_{i<j} J/|i-j| (X_i X_j + Y_i Y_j) + h sum_i (i - L/2) Z_i

Open boundaries.  ``X X + Y Y`` exchanges an antiparallel pair with matrix
element 2, so hopping amplitudes are ``2 J / |i - j|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .basis import ChargeSector, Geometry, all_sectors, enumerate_sector
from .errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    L: int
    J: float = 1.0
    h: float = 0.2

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ParameterError(f"L must be an integer >= 2, got {self.L}")
        if not (math.isfinite(self.J) and math.isfinite(self.h)):
            raise ParameterError("J and h must be finite")


@dataclass(frozen=True, eq=False)
class SectorHamiltonian:
    """Dense real symmetric block of H on one charge sector.

    ``sites`` lists the physical (1-indexed) site carried by each bit of the
    sector's words: the whole chain, or the bath sites for a bath block.
    """

    sector: ChargeSector
    matrix: np.ndarray
    sites: tuple[int, ...]


def _block(p: ModelParams, s: ChargeSector, sites) -> np.ndarray:
    pos = np.asarray(sites, dtype=np.int64)
    states = s.states
    # field: h * sum_k (site_k - L/2) * sz_k, sz = 2*bit - 1
    bits = (states[:, None] >> np.arange(len(pos))[None, :]) & 1
    diag = p.h * ((2.0 * bits - 1.0) @ (pos - p.L / 2.0))
    H = np.zeros((s.dimension, s.dimension))
    H[np.arange(s.dimension), np.arange(s.dimension)] = diag
    rows, cols, vals = kernels.hopping_elements(states, pos, p.J)
    H[rows, cols] = vals
    return H


def build_sector_hamiltonian(p: ModelParams, s: ChargeSector) -> SectorHamiltonian:
    if s.L != p.L:
        raise ParameterError(f"sector has L={s.L}, model has L={p.L}")
    sites = tuple(range(1, p.L + 1))
    return SectorHamiltonian(s, _block(p, s, sites), sites)


def build_bath_hamiltonian(p: ModelParams, g: Geometry, s: ChargeSector) -> SectorHamiltonian:
    """Bath-only block.  Couplings and field use the original chain coordinates."""
    if g.L != p.L:
        raise ParameterError(f"geometry has L={g.L}, model has L={p.L}")
    if s.L != g.L_b:
        raise ParameterError(f"bath sector has L={s.L}, bath has {g.L_b} sites")
    return SectorHamiltonian(s, _block(p, s, g.bath), g.bath)


def sector_hamiltonians(p: ModelParams) -> dict[int, SectorHamiltonian]:
    return {s.n_up: build_sector_hamiltonian(p, s) for s in all_sectors(p.L)}


def bath_hamiltonians(p: ModelParams, g: Geometry) -> dict[int, SectorHamiltonian]:
    return {n: build_bath_hamiltonian(p, g, enumerate_sector(g.L_b, n)) for n in range(g.L_b + 1)}


def assemble_dense(blocks) -> np.ndarray:
    """Full ``2**L x 2**L`` matrix in the computational basis from sector blocks."""
    blocks = list(blocks.values()) if isinstance(blocks, dict) else list(blocks)
    L = blocks[0].sector.L
    H = np.zeros((1 << L, 1 << L))
    for b in blocks:
        idx = b.sector.states
        H[np.ix_(idx, idx)] = b.matrix
    return H
