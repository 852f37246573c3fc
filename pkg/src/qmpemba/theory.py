"""Spectral prediction of QOS coherences from sector eigendata.

The bath is replaced by its dephased form ``Σ_m (p_m / D_m) I_m`` and only
the charge-preserving (q' = 0) terms are kept.  Each bath sector ``m`` then
contributes an independent curve

    T_m(t) = p_m / D_m  Σ_{n1, n2}  W_m[n1, n2] exp(-i (E^{q1+m}_{n1} - E^{q2+m}_{n2}) t)

with ``W_m[n1, n2] = <n2| (|a2><a1| ⊗ I_m) |n1> <n1| (|φ1><φ2| ⊗ I_m) |n2>``,
``φ1, φ2`` the initial QOS state projected onto charges ``q1, q2``.  The sum
over ``m`` is the predicted ``<a1| ρ_S(t) |a2>``.  The phase sign follows
from evolving states with ``exp(-iHt)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .asymmetry import DEFAULT_FIT_FLOOR, fit_gaussian_decay
from .basis import Geometry, embed, enumerate_sector, popcount
from .errors import ParameterError
from .spectra import SectorSpectrum
from .states import PureState, sector_occupations

# bath sectors below this weight are treated as empty (float residue of cos(pi/2))
NEGLIGIBLE_OCCUPATION = 1e-14


@dataclass(frozen=True)
class DephasedBath:
    """Block-diagonal bath state ``Σ_m (p_m / D_m) I_m`` over bath up-spin sectors."""

    L_b: int
    occupations: dict[int, float]

    @property
    def dimensions(self) -> dict[int, int]:
        return {m: comb(self.L_b, m) for m in self.occupations}

    def to_dense(self) -> np.ndarray:
        diag = np.zeros(1 << self.L_b)
        for m, p in self.occupations.items():
            s = enumerate_sector(self.L_b, m)
            diag[s.states] = p / s.dimension
        return np.diag(diag)


def dephased_bath(psi_b: PureState) -> DephasedBath:
    return DephasedBath(psi_b.n_sites, sector_occupations(psi_b))


@dataclass
class OffdiagPrediction:
    element: tuple[int, int]
    times: np.ndarray
    per_m: dict[int, np.ndarray]
    truncated_weight: dict[int, float] = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        out = np.zeros(len(self.times), dtype=np.complex128)
        for m in sorted(self.per_m):
            out += self.per_m[m]
        return out


def _ranks(spectra, M, words):
    return spectra[M].sector.rank(words)


def transition_matrix(spectra, g: Geometry, ket: int, bra: int, m: int) -> np.ndarray:
    """``<n2| (|ket><bra| ⊗ I_m) |n1>``, rows over sector ``q(ket)+m``, columns over ``q(bra)+m``."""
    bath = enumerate_sector(g.L_b, m).states
    M2, M1 = int(popcount(ket)) + m, int(popcount(bra)) + m
    V2 = spectra[M2].eigenvectors[_ranks(spectra, M2, embed(np.full(len(bath), ket), bath, g))]
    V1 = spectra[M1].eigenvectors[_ranks(spectra, M1, embed(np.full(len(bath), bra), bath, g))]
    return V2.T @ V1


def _projected_rows(spectra, g, coeffs, q, M, bath):
    """``X[b, n] = Σ_{a in q} coeffs[a] <a, b | n>`` for sector ``M``."""
    V = spectra[M].eigenvectors
    X = np.zeros((len(bath), V.shape[1]), dtype=np.complex128)
    for a in enumerate_sector(g.L_s, q).states:
        if coeffs[a] != 0:
            X += coeffs[a] * V[_ranks(spectra, M, embed(np.full(len(bath), a), bath, g))]
    return X


def pair_weights(spectra, g: Geometry, coeffs, a1: int, a2: int, m: int) -> np.ndarray:
    """``W_m[n1, n2]`` for element ``<a1|ρ|a2>`` (see module docstring)."""
    q1, q2 = int(popcount(a1)), int(popcount(a2))
    bath = enumerate_sector(g.L_b, m).states
    A = transition_matrix(spectra, g, a2, a1, m)  # (d2, d1)
    X1 = _projected_rows(spectra, g, coeffs, q1, q1 + m, bath)
    X2 = _projected_rows(spectra, g, np.conj(coeffs), q2, q2 + m, bath)
    B = X1.T @ X2  # (d1, d2)
    return A.T * B


def _window_mask(omega, w, tol):
    """Smallest symmetric window around the weighted mean gap keeping all but ``tol`` of ``Σ|w|``."""
    aw = np.abs(w)
    total = aw.sum()
    if total == 0:
        return np.zeros(omega.shape, dtype=bool)
    center = (aw * omega).sum() / total
    dist = np.abs(omega - center)
    order = np.argsort(dist, axis=None)
    kept = np.cumsum(aw.ravel()[order])
    k = int(np.searchsorted(kept, (1 - tol) * total))
    radius = dist.ravel()[order[min(k, len(order) - 1)]]
    return dist <= radius


def predict_offdiagonal(spectra: dict[int, SectorSpectrum], g: Geometry, qos, bath: DephasedBath,
                        element: tuple[int, int], times, truncation_tol: float | None = None,
                        chunk: int = 1 << 20) -> OffdiagPrediction:
    """Predicted ``<a1| ρ_S(t) |a2>`` split into bath-sector contributions.

    ``qos`` is the initial QOS state (PureState or dense amplitudes).
    ``element = (a1, a2)`` are QOS words.  With ``truncation_tol`` set, each
    sector's pair sum is restricted to an energy-gap window holding all but
    that fraction of the total ``|W|``; the dropped fraction is recorded.
    """
    coeffs = qos.to_dense() if isinstance(qos, PureState) else np.asarray(qos, dtype=np.complex128)
    if len(coeffs) != 1 << g.L_s:
        raise ParameterError(f"QOS state has {len(coeffs)} amplitudes, geometry needs {1 << g.L_s}")
    if bath.L_b != g.L_b:
        raise ParameterError(f"bath over {bath.L_b} sites, geometry has {g.L_b}")
    a1, a2 = (int(x) for x in element)
    q1, q2 = int(popcount(a1)), int(popcount(a2))
    times = np.asarray(times, dtype=float)
    per_m, dropped = {}, {}
    for m, p in sorted(bath.occupations.items()):
        if p <= NEGLIGIBLE_OCCUPATION or q1 + m not in spectra or q2 + m not in spectra:
            continue
        W = pair_weights(spectra, g, coeffs, a1, a2, m)
        E1 = spectra[q1 + m].eigenvalues
        E2 = spectra[q2 + m].eigenvalues
        scale = p / comb(g.L_b, m)
        if truncation_tol is None:
            P1 = np.exp(-1j * np.outer(times, E1))
            P2 = np.exp(1j * np.outer(times, E2))
            per_m[m] = scale * np.einsum("tj,tj->t", P1 @ W, P2)
            continue
        omega = E2[None, :] - E1[:, None]
        keep = _window_mask(omega, W, truncation_tol)
        w_k, om_k = W[keep], omega[keep]
        aw = np.abs(W).sum()
        dropped[m] = float(np.abs(W[~keep]).sum() / aw) if aw else 0.0
        acc = np.zeros(len(times), dtype=np.complex128)
        for s in range(0, len(w_k), max(1, chunk // max(len(times), 1))):
            e = slice(s, s + max(1, chunk // max(len(times), 1)))
            acc += np.exp(1j * np.outer(times, om_k[e])) @ w_k[e]
        per_m[m] = scale * acc
    return OffdiagPrediction((a1, a2), times, per_m, dropped)


def per_m_timescale(pred: OffdiagPrediction, floor: float = DEFAULT_FIT_FLOOR) -> dict[int, float | None]:
    """Gaussian time scale of ``|T_m(t)|`` per bath sector; None where the fit is excluded."""
    out = {}
    for m, curve in sorted(pred.per_m.items()):
        f = fit_gaussian_decay(np.abs(curve), floor=floor, times=pred.times)
        out[m] = f.t0 if f.ok else None
    return out
