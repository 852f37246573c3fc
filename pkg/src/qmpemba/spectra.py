"""Sector eigendecomposition and spectral statistics.

Energy variances, the gap-pair density N(omega) between two sectors, the
binned matrix-element profile M(omega), and a density-of-states entropy.
All variances are population variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ChargeSector
from .errors import NumericalError, ParameterError
from .model import SectorHamiltonian

DEFAULT_BINS = 200


@dataclass(frozen=True, eq=False)
class SectorSpectrum:
    sector: ChargeSector
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)


def diagonalize_sector(h: SectorHamiltonian) -> SectorSpectrum:
    try:
        w, v = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:
        s = h.sector
        raise NumericalError(f"eigensolver failed on sector L={s.L}, n_up={s.n_up}: {exc}") from exc
    w.setflags(write=False)
    v.setflags(write=False)
    return SectorSpectrum(h.sector, w, v)


def diagonalize_all(blocks: dict[int, SectorHamiltonian], n_jobs: int = 1) -> dict[int, SectorSpectrum]:
    """Diagonalize every block; keys preserved."""
    keys = sorted(blocks)
    if n_jobs == 1:
        return {k: diagonalize_sector(blocks[k]) for k in keys}
    from joblib import Parallel, delayed

    out = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(diagonalize_sector)(blocks[k]) for k in keys)
    return dict(zip(keys, out))


def sector_energy_variance(sp: SectorSpectrum) -> float:
    return float(np.var(sp.eigenvalues))


def gap_variance(a: SectorSpectrum, b: SectorSpectrum) -> float:
    """Variance of the all-pairs gap multiset ``{E_b - E_a}``.

    For a full cross product the two level sets are independent by
    construction, so this is exactly ``Var(a) + Var(b)``.
    """
    if a.dimension == 0 or b.dimension == 0:
        raise ParameterError("empty spectrum")
    return sector_energy_variance(a) + sector_energy_variance(b)


def _levels(x):
    return x.eigenvalues if isinstance(x, SectorSpectrum) else np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class GapHistogram:
    """Binned gaps ``omega = E_b[n2] - E_a[n1]`` over all ordered pairs.

    ``n_tilde`` is ``counts / dim_m``; ``normalization`` records which
    ``dim_m`` was used: ``"pairs"`` (dim_a * dim_b) or ``"sector"`` (dim_a).
    ``m_avg`` and ``nm_product`` are None when no weights were given;
    ``m_avg`` is NaN in empty bins.
    """

    delta_omega: float
    centers: np.ndarray
    counts: np.ndarray
    n_tilde: np.ndarray
    m_avg: np.ndarray | None
    nm_product: np.ndarray | None
    dim_a: int
    dim_b: int
    dim_m: int
    normalization: str


def default_bin_width(a, b, bins: int = DEFAULT_BINS) -> float:
    ea, eb = _levels(a), _levels(b)
    span = (eb.max() - ea.min()) - (eb.min() - ea.max())
    return span / bins if span > 0 else 1.0


def gap_histogram(a, b, delta_omega: float | None = None, weights=None,
                  normalization: str = "pairs") -> GapHistogram:
    """Histogram of all pair gaps between two spectra.

    Bins are centred on integer multiples of ``delta_omega``.  ``weights``,
    if given, has shape ``(dim_a, dim_b)`` and is averaged per bin.
    """
    ea, eb = _levels(a), _levels(b)
    if delta_omega is None:
        delta_omega = default_bin_width(ea, eb)
    if not delta_omega > 0:
        raise ParameterError(f"delta_omega must be positive, got {delta_omega}")
    if normalization not in ("pairs", "sector"):
        raise ParameterError(f"unknown normalization {normalization!r}")
    gaps = (eb[None, :] - ea[:, None]).ravel()
    k = np.floor(gaps / delta_omega + 0.5).astype(np.int64)
    k0 = k.min()
    nbins = int(k.max() - k0 + 1)
    counts = np.bincount(k - k0, minlength=nbins)
    centers = (np.arange(nbins) + k0) * delta_omega
    dim_m = len(ea) * len(eb) if normalization == "pairs" else len(ea)
    m_avg = nm = None
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(ea), len(eb)):
            raise ParameterError(f"weights shape {w.shape} != {(len(ea), len(eb))}")
        nm = np.bincount(k - k0, weights=w.ravel(), minlength=nbins)
        with np.errstate(invalid="ignore", divide="ignore"):
            m_avg = np.where(counts > 0, nm / np.maximum(counts, 1), np.nan)
    return GapHistogram(float(delta_omega), centers, counts, counts / dim_m, m_avg, nm,
                        len(ea), len(eb), dim_m, normalization)


def dos_entropy(sp, window) -> float | None:
    """``ln`` of the number of levels in ``[lo, hi)``; None when the window is empty of levels."""
    lo, hi = window
    if not hi > lo:
        raise ParameterError(f"empty window {window}")
    e = _levels(sp)
    n = int(np.count_nonzero((e >= lo) & (e < hi)))
    return math.log(n) if n else None
