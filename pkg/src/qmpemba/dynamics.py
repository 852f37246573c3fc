"""Exact evolution in sector eigenbases, bath pre-thermalization, partial trace
and the Δt-ensemble average of QOS reduced density matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import Geometry, embed_table
from .errors import ParameterError
from .model import ModelParams, bath_hamiltonians, sector_hamiltonians
from .spectra import SectorSpectrum, diagonalize_all
from .states import PureState, compose_full_state, qos_initial_state, qtb_initial_state

DEFAULT_DT_RANGE = (50.0, 150.0)
DEFAULT_SAMPLES = 100


@dataclass(frozen=True)
class EnsembleSpec:
    n_samples: int = DEFAULT_SAMPLES
    dt_min: float = DEFAULT_DT_RANGE[0]
    dt_max: float = DEFAULT_DT_RANGE[1]
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        if not 0 <= self.dt_min <= self.dt_max:
            raise ParameterError(f"need 0 <= dt_min <= dt_max, got [{self.dt_min}, {self.dt_max}]")

    def dt(self, k: int) -> float:
        """Thermalization time of sample ``k``, a pure function of ``(seed, k)``."""
        if not 0 <= k < self.n_samples:
            raise ParameterError(f"sample index {k} outside [0, {self.n_samples})")
        if self.dt_min == self.dt_max:
            return float(self.dt_min)
        rng = np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, k])
        return float(rng.uniform(self.dt_min, self.dt_max))


class EvolutionEngine:
    """Sector spectra of the full chain and of the bath, computed on first use."""

    def __init__(self, params: ModelParams, geometry: Geometry, n_jobs: int = 1):
        if geometry.L != params.L:
            raise ParameterError(f"geometry L={geometry.L} != model L={params.L}")
        self.params = params
        self.geometry = geometry
        self.n_jobs = n_jobs

    @cached_property
    def spectra(self) -> dict[int, SectorSpectrum]:
        return diagonalize_all(sector_hamiltonians(self.params), self.n_jobs)

    @cached_property
    def bath_spectra(self) -> dict[int, SectorSpectrum]:
        return diagonalize_all(bath_hamiltonians(self.params, self.geometry), self.n_jobs)

    @cached_property
    def qos_table(self) -> np.ndarray:
        return embed_table(self.geometry)

    def spectra_for(self, n_sites: int) -> dict[int, SectorSpectrum]:
        if n_sites == self.params.L:
            return self.spectra
        if n_sites == self.geometry.L_b:
            return self.bath_spectra
        raise ParameterError(f"state on {n_sites} sites matches neither chain nor bath")


def _evolve_blocks(spectra, psi: PureState, times) -> dict[int, np.ndarray]:
    """Per-sector amplitudes at every time, shape ``(len(times), dim)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = {}
    for n, v in psi.blocks.items():
        sp = spectra[n]
        coef = sp.eigenvectors.T @ v
        phases = np.exp(-1j * np.outer(times, sp.eigenvalues))
        out[n] = (phases * coef[None, :]) @ sp.eigenvectors.T
    return out


def evolve(engine: EvolutionEngine, psi: PureState, t: float) -> PureState:
    """``exp(-iHt) ψ`` with H the chain or bath Hamiltonian, by state size."""
    spectra = engine.spectra_for(psi.n_sites)
    blocks = _evolve_blocks(spectra, psi, [t])
    return PureState(psi.n_sites, {n: b[0] for n, b in blocks.items()})


def evolve_dense(engine: EvolutionEngine, psi: PureState, times) -> np.ndarray:
    """Full computational-basis amplitudes at each time, shape ``(T, 2**n)``."""
    spectra = engine.spectra_for(psi.n_sites)
    blocks = _evolve_blocks(spectra, psi, times)
    out = np.zeros((len(np.atleast_1d(times)), 1 << psi.n_sites), dtype=np.complex128)
    for n, b in blocks.items():
        out[:, spectra[n].sector.states] = b
    return out


def pre_thermalize(engine: EvolutionEngine, qtb: PureState, e: EnsembleSpec, k: int) -> PureState:
    """Evolve the bath alone for the sample's thermalization time."""
    if qtb.n_sites != engine.geometry.L_b:
        raise ParameterError(f"bath state has {qtb.n_sites} sites, geometry bath has {engine.geometry.L_b}")
    return evolve(engine, qtb, e.dt(k))


def reduced_density_matrix(psi, g: Geometry, table=None) -> np.ndarray:
    """QOS reduced density matrix.

    ``psi`` is a :class:`PureState` or dense amplitudes of shape ``(2**L,)``
    or ``(T, 2**L)``; a stack returns ``(T, 2**L_s, 2**L_s)``.
    """
    if isinstance(psi, PureState):
        if psi.n_sites != g.L:
            raise ParameterError(f"state on {psi.n_sites} sites, geometry has L={g.L}")
        psi = psi.to_dense()
    if table is None:
        table = embed_table(g)
    M = np.asarray(psi)[..., table]
    return M @ np.swapaxes(M.conj(), -1, -2)


def _sample_reduced(engine, qos, qtb0, e, k, times):
    bath = pre_thermalize(engine, qtb0, e, k)
    full = compose_full_state(qos, bath, engine.geometry)
    amps = evolve_dense(engine, full, times)
    return reduced_density_matrix(amps, engine.geometry, engine.qos_table)


def ensemble_reduced(engine: EvolutionEngine, theta_s: float, theta_b: float, e: EnsembleSpec,
                     times, n_jobs: int = 1) -> np.ndarray:
    """Δt-averaged QOS density matrices, shape ``(len(times), 2**L_s, 2**L_s)``.

    Samples are summed in index order whatever ``n_jobs`` is, so the result
    does not depend on the parallel schedule.
    """
    g = engine.geometry
    times = np.asarray(times, dtype=float)
    qos = qos_initial_state(theta_s, g.L_s)
    qtb0 = qtb_initial_state(theta_b, g.L_b)
    # force the spectra before any fan-out so workers share them
    engine.spectra, engine.bath_spectra
    if n_jobs == 1:
        parts = (_sample_reduced(engine, qos, qtb0, e, k, times) for k in range(e.n_samples))
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_sample_reduced)(engine, qos, qtb0, e, k, times) for k in range(e.n_samples))
    acc = np.zeros((len(times), 1 << g.L_s, 1 << g.L_s), dtype=np.complex128)
    for r in parts:
        acc += r
    return acc / e.n_samples
