"""Entanglement asymmetry, Gaussian decay fits and Mpemba crossover detection.

Entropies are in nats.  The asymmetry of ``rho`` with respect to a charge is
computed as ``S(rho_Q) - S(rho)`` where ``rho_Q`` is the block-diagonal
pinching of ``rho``; for a pinching this equals the relative entropy
``tr[rho (log rho - log rho_Q)]`` and avoids logarithms of singular matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import charge_of
from .errors import InvalidDensityError, ParameterError

ZERO_EIG = 1e-12
NEG_EIG = 1e-8
MPEMBA_MARGIN = 1e-9
DEFAULT_FIT_FLOOR = 1e-3
MIN_FIT_POINTS = 5


def basis_charges(dim: int) -> np.ndarray:
    """Magnetization of each computational basis state of a ``dim = 2**n`` space."""
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ParameterError(f"dimension {dim} is not a power of two")
    return charge_of(np.arange(dim), n)


def symmetrize(rho, charges=None) -> np.ndarray:
    """``Σ_q Π_q ρ Π_q`` for the charge label of each basis state."""
    rho = np.asarray(rho)
    if charges is None:
        charges = basis_charges(rho.shape[-1])
    charges = np.asarray(charges)
    return np.where(charges[:, None] == charges[None, :], rho, 0)


def von_neumann_entropy(rho) -> float:
    lam = np.linalg.eigvalsh(np.asarray(rho))
    if lam.min() < -NEG_EIG:
        raise InvalidDensityError(f"negative eigenvalue {lam.min():.3e}")
    lam = lam[lam > ZERO_EIG]
    return float(-(lam * np.log(lam)).sum())


def entanglement_asymmetry(rho, charges=None) -> float:
    rho = np.asarray(rho)
    return von_neumann_entropy(symmetrize(rho, charges)) - von_neumann_entropy(rho)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > ZERO_EIG]
    return float(-(p * np.log(p)).sum())


def pure_state_asymmetry(occupations) -> float:
    """Asymmetry of a pure state: ``S(ρ) = 0``, and ``ρ_Q`` has spectrum ``{p_q}``
    plus zeros, so the asymmetry is the Shannon entropy of the occupations."""
    return shannon_entropy(occupations)


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-10) -> None:
    rho = np.asarray(rho)
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise InvalidDensityError("not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise InvalidDensityError(f"trace {np.trace(rho).real:.15g} != 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise InvalidDensityError("not positive semidefinite")


@dataclass
class AsymmetryCurve:
    times: np.ndarray
    values: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ParameterError("times and values differ in length")

    def clamped(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)


def asymmetry_curve(rhos, times, label=None, charges=None) -> AsymmetryCurve:
    """ΔS(t) for a stack of density matrices ``rhos[t_index]``."""
    vals = [entanglement_asymmetry(r, charges) for r in rhos]
    return AsymmetryCurve(times, vals, dict(label or {}))


@dataclass
class GaussianFit:
    """Result of fitting ``y = A exp(-t²/t0²)``.

    ``ok`` is False when the curve was excluded (too few points above the
    floor, or not decaying); ``A`` and ``t0`` are then None.
    """

    ok: bool
    A: float | None = None
    t0: float | None = None
    residual: float | None = None
    window: tuple[int, int] | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"A": self.A, "t0": self.t0, "residual": self.residual,
                "window": list(self.window) if self.window else None,
                "excluded": not self.ok, "reason": self.reason}


def fit_gaussian_decay(curve, floor: float = DEFAULT_FIT_FLOOR, times=None) -> GaussianFit:
    """Weighted least squares of ``ln y`` against ``t²``.

    The window is the leading run of samples with ``y > floor * y(0)``.
    Each point is weighted by ``y`` so that the low-signal tail, where
    finite-size fluctuations dominate, counts less than the main decay.
    ``curve`` is an :class:`AsymmetryCurve` or a value array with ``times``.
    """
    if isinstance(curve, AsymmetryCurve):
        t, y = curve.times, curve.values
    else:
        t, y = np.asarray(times, dtype=float), np.asarray(curve, dtype=float)
    if len(y) == 0 or not y[0] > 0:
        return GaussianFit(False, reason="nonpositive initial value")
    above = y > floor * y[0]
    end = len(y) if above.all() else int(np.argmin(above))
    if end < MIN_FIT_POINTS:
        return GaussianFit(False, window=(0, end), reason="too few points above floor")
    tw, yw = t[:end], y[:end]
    X = np.column_stack([np.ones(end), tw**2])
    sw = np.sqrt(yw)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], np.log(yw) * sw, rcond=None)
    intercept, slope = coef
    if not slope < 0:
        return GaussianFit(False, window=(0, end), reason="not decaying")
    resid = np.log(yw) - X @ coef
    return GaussianFit(True, math.exp(intercept), math.sqrt(-1.0 / slope),
                       float(np.sqrt(np.mean(resid**2))), (0, end))


@dataclass
class MpembaVerdict:
    occurs: bool
    t_M: float | None
    margin: float | None
    initially_larger: int | None

    def to_dict(self) -> dict:
        return {"occurs": self.occurs, "t_M": self.t_M, "margin": self.margin,
                "initially_larger": self.initially_larger}


def detect_mpemba(c1: AsymmetryCurve, c2: AsymmetryCurve, margin: float = MPEMBA_MARGIN) -> MpembaVerdict:
    """Does the initially more asymmetric curve end up permanently below the other?

    ``t_M`` is the earliest grid time after which the initially larger curve
    is below the other by more than ``margin`` at every later sample.
    ``initially_larger`` is 1 or 2 (None when the starting values tie).
    """
    if c1.times.shape != c2.times.shape or not np.allclose(c1.times, c2.times, rtol=0, atol=1e-12):
        raise ParameterError("curves are sampled on different time grids")
    d0 = c1.values[0] - c2.values[0]
    if abs(d0) <= margin:
        return MpembaVerdict(False, None, None, None)
    hi, lo, which = (c1, c2, 1) if d0 > 0 else (c2, c1, 2)
    below = hi.values < lo.values - margin
    failing = np.flatnonzero(~below)
    k = failing[-1]
    if k == len(below) - 1:
        return MpembaVerdict(False, None, None, which)
    gap = np.abs(hi.values[k + 1:] - lo.values[k + 1:]).min()
    return MpembaVerdict(True, float(hi.times[k]), float(gap), which)
