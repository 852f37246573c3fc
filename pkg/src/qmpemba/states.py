"""Initial-state preparation and charge statistics of pure states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Geometry, all_sectors, charge_of, embed_table, enumerate_sector
from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class PureState:
    """State of ``n_sites`` spins stored per charge sector.

    ``blocks[n_up]`` holds the amplitudes of ``enumerate_sector(n_sites, n_up)``
    in the sector's ascending order.  Every sector is present.
    """

    n_sites: int
    blocks: dict[int, np.ndarray]

    @classmethod
    def from_dense(cls, psi, n_sites: int | None = None) -> PureState:
        psi = np.asarray(psi, dtype=np.complex128)
        if n_sites is None:
            n_sites = int(round(np.log2(len(psi))))
        if len(psi) != 1 << n_sites:
            raise ParameterError(f"vector of length {len(psi)} is not over {n_sites} sites")
        return cls(n_sites, {s.n_up: psi[s.states].copy() for s in all_sectors(n_sites)})

    def to_dense(self) -> np.ndarray:
        out = np.zeros(1 << self.n_sites, dtype=np.complex128)
        for n, v in self.blocks.items():
            out[enumerate_sector(self.n_sites, n).states] = v
        return out

    def norm(self) -> float:
        return float(np.sqrt(sum(np.vdot(v, v).real for v in self.blocks.values())))


def qtb_pair_state(theta_b: float) -> PureState:
    """``sin(θ/2)/√2 (↑↑ + ↓↓) + cos(θ/2)/√2 (↑↓ + ↓↑)`` on two sites."""
    s = np.sin(theta_b / 2) / np.sqrt(2)
    c = np.cos(theta_b / 2) / np.sqrt(2)
    # words: 0 = ↓↓, 1 = ↑↓, 2 = ↓↑, 3 = ↑↑
    return PureState.from_dense(np.array([s, c, c, s]), 2)


def qtb_initial_state(theta_b: float, L_b: int) -> PureState:
    """Product of identical pair states on bath site pairs (1,2), (3,4), ..."""
    if L_b < 2 or L_b % 2:
        raise ParameterError(f"bath size must be a positive even number, got {L_b}")
    pair = qtb_pair_state(theta_b).to_dense()
    psi = np.ones(1, dtype=np.complex128)
    # later pairs occupy higher bits, hence go on the left of the Kronecker product
    for _ in range(L_b // 2):
        psi = np.kron(pair, psi)
    return PureState.from_dense(psi, L_b)


def qos_initial_state(theta_s: float, L_s: int) -> PureState:
    """``exp(-i θ/2 Σ σ^y) |↓...↓⟩``; each site is ``cos(θ/2)|↓⟩ - sin(θ/2)|↑⟩``."""
    if L_s < 1:
        raise ParameterError(f"L_s must be positive, got {L_s}")
    site = np.array([np.cos(theta_s / 2), -np.sin(theta_s / 2)])
    psi = np.ones(1, dtype=np.complex128)
    for _ in range(L_s):
        psi = np.kron(site, psi)
    return PureState.from_dense(psi, L_s)


def compose_full_state(qos: PureState, qtb: PureState, g: Geometry) -> PureState:
    if qos.n_sites != g.L_s or qtb.n_sites != g.L_b:
        raise ParameterError(
            f"factor sizes ({qos.n_sites}, {qtb.n_sites}) do not match geometry ({g.L_s}, {g.L_b})")
    a, b = qos.to_dense(), qtb.to_dense()
    psi = np.zeros(1 << g.L, dtype=np.complex128)
    psi[embed_table(g)] = a[:, None] * b[None, :]
    return PureState.from_dense(psi, g.L)


def sector_occupations(psi: PureState) -> dict[int, float]:
    """``{n_up: ||Π ψ||²}`` over all sectors."""
    return {n: float(np.vdot(v, v).real) for n, v in sorted(psi.blocks.items())}


def charge_variance(psi: PureState) -> float:
    """Variance of the magnetization ``Σ σ^z`` (not of ``n_up``)."""
    occ = sector_occupations(psi)
    q = np.array([2 * n - psi.n_sites for n in occ], dtype=float)
    p = np.array(list(occ.values()))
    mean = p @ q
    return float(p @ (q - mean) ** 2)


def mean_charge(psi: PureState) -> float:
    occ = sector_occupations(psi)
    return float(sum(p * (2 * n - psi.n_sites) for n, p in occ.items()))


def state_asymmetry(psi: PureState) -> float:
    """Entanglement asymmetry of ``|ψ⟩⟨ψ|`` with respect to its own total charge."""
    from .asymmetry import pure_state_asymmetry

    return pure_state_asymmetry(list(sector_occupations(psi).values()))


def charges(n_sites: int) -> np.ndarray:
    """Magnetization of every computational basis word, indexed by word."""
    return charge_of(np.arange(1 << n_sites), n_sites)
