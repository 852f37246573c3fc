"""Operator-space Lanczos for the Liouvillian ``L = [H, ·]`` and Krylov
reconstruction of infinite-temperature correlation functions

    C(t) = Tr[ e^{iHt} S1 e^{-iHt} S2 ] / 2^L.

Operators are handled through a small representation interface so the same
Lanczos code runs on dense matrices (any small H) or on the sector-eigenbasis
representation of the chain model, where ``L`` is diagonal.

Writing ``S1(t) = ||S1|| Σ_n ψ_n(t) S_n`` with ``ψ_n = i^n φ_n``, the
amplitudes obey ``dφ_n/dt = i a_n φ_n + b_n φ_{n-1} - b_{n+1} φ_{n+1}``.
Matrix-unit seeds generally have nonzero ``a_n = (S_n, L S_n)``; they are
kept unless ``paper_recursion=True``.  Overlaps are ``c_n = (S2†, S_n)`` so
that ``C(t) = ||S1|| Σ_n i^n c_n φ_n(t)`` reproduces the trace above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .basis import Geometry, embed, enumerate_sector, parse_spins, popcount
from .errors import NumericalError, ParameterError
from .model import ModelParams, sector_hamiltonians
from .spectra import SectorSpectrum, diagonalize_all

BREAKDOWN_TOL = 1e-9
OVERLAP_TOL = 1e-10
NORM_TOL = 1e-8

# S1 and the q'-dependent S2 as (ket, bra) spin strings on a 3-site QOS
APPENDIX_S1 = ("↓↓↓", "↑↓↓")
APPENDIX_S2 = {0: ("↑↓↓", "↓↓↓"), 1: ("↑↑↓", "↑↓↓"), 2: ("↑↑↑", "↑↑↓")}


def hs_inner(o1, o2) -> complex:
    """``Tr[O1† O2] / Tr[I]`` for square matrices."""
    o1, o2 = np.asarray(o1), np.asarray(o2)
    if o1.shape != o2.shape or o1.ndim != 2 or o1.shape[0] != o1.shape[1]:
        raise ParameterError(f"operator shapes {o1.shape} and {o2.shape} are incompatible")
    return complex(np.vdot(o1, o2) / o1.shape[0])


class DenseLiouvillian:
    """``[H, ·]`` on dense ``N x N`` operators."""

    def __init__(self, H):
        self.H = np.asarray(H)
        self.dim = self.H.shape[0]

    def apply(self, x):
        return self.H @ x - x @ self.H

    def inner(self, x, y) -> complex:
        return complex(np.vdot(x, y) / self.dim)

    def correlation(self, s1, s2, times) -> np.ndarray:
        E, V = np.linalg.eigh(self.H)
        a = V.conj().T @ s1 @ V
        b = V.conj().T @ s2 @ V
        w = (a * b.T).ravel()
        omega = (E[:, None] - E[None, :]).ravel()
        return np.exp(1j * np.outer(times, omega)) @ w / self.dim


class SectorLiouvillian:
    """``[H, ·]`` on operators mapping sector ``M + shift`` to sector ``M``.

    Such an operator is stored as the concatenation, over ``M``, of its
    blocks in the sector eigenbases, ``V_M^T X V_{M+shift}``.  There ``L`` acts
    by multiplication with ``E_M[i] - E_{M+shift}[j]``.
    """

    def __init__(self, spectra: dict[int, SectorSpectrum], L: int, shift: int):
        self.spectra = spectra
        self.L = L
        self.shift = shift
        self.dim = 1 << L
        self.pairs = [(M, M + shift) for M in sorted(spectra) if M + shift in spectra]
        omegas, self.slices, start = [], {}, 0
        for M2, M1 in self.pairs:
            om = spectra[M2].eigenvalues[:, None] - spectra[M1].eigenvalues[None, :]
            omegas.append(om.ravel())
            self.slices[M2] = slice(start, start + om.size)
            start += om.size
        self.omega = np.concatenate(omegas) if omegas else np.zeros(0)

    def apply(self, x):
        return self.omega * x

    def inner(self, x, y) -> complex:
        return complex(np.vdot(x, y) / self.dim)

    def encode(self, X) -> np.ndarray:
        """Representation of a dense ``2**L`` operator (its other blocks are dropped)."""
        out = np.zeros(len(self.omega), dtype=np.complex128)
        for M2, M1 in self.pairs:
            s2, s1 = self.spectra[M2], self.spectra[M1]
            blk = X[np.ix_(s2.sector.states, s1.sector.states)]
            out[self.slices[M2]] = (s2.eigenvectors.T @ blk @ s1.eigenvectors).ravel()
        return out

    def decode(self, x) -> np.ndarray:
        X = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for M2, M1 in self.pairs:
            s2, s1 = self.spectra[M2], self.spectra[M1]
            blk = x[self.slices[M2]].reshape(s2.dimension, s1.dimension)
            X[np.ix_(s2.sector.states, s1.sector.states)] = s2.eigenvectors @ blk @ s1.eigenvectors.T
        return X

    def encode_unit(self, g: Geometry, ket: int, bra: int) -> np.ndarray:
        """Representation of ``|ket><bra| ⊗ I_B`` for QOS words ``ket``, ``bra``."""
        if int(popcount(bra)) - int(popcount(ket)) != self.shift:
            raise ParameterError("matrix unit does not match the representation's charge shift")
        out = np.zeros(len(self.omega), dtype=np.complex128)
        qk = int(popcount(ket))
        for M2, M1 in self.pairs:
            m = M2 - qk
            if not 0 <= m <= g.L_b:
                continue
            bath = enumerate_sector(g.L_b, m).states
            s2, s1 = self.spectra[M2], self.spectra[M1]
            r2 = s2.sector.rank(embed(np.full(len(bath), ket), bath, g))
            r1 = s1.sector.rank(embed(np.full(len(bath), bra), bath, g))
            out[self.slices[M2]] = (s2.eigenvectors[r2].T @ s1.eigenvectors[r1]).ravel()
        return out

    def correlation(self, x1, probe, times) -> np.ndarray:
        """``(probe, e^{iLt} x1)``; with ``probe`` = encoded S2† this is C(t)."""
        w = np.conj(probe) * x1
        nz = np.flatnonzero(w)
        return np.exp(1j * np.outer(times, self.omega[nz])) @ w[nz] / self.dim


def _as_liouvillian(op):
    if isinstance(op, (DenseLiouvillian, SectorLiouvillian)):
        return op
    return DenseLiouvillian(op)


@dataclass
class KrylovChain:
    """Lanczos data.  ``b[k]`` couples ``S_k`` and ``S_{k+1}`` (the b_{k+1} of
    the usual 1-based labelling); ``len(b) == depth - 1``."""

    a: np.ndarray
    b: np.ndarray
    overlaps: np.ndarray | None
    seed_norm: float
    basis: np.ndarray | None = None
    paper_recursion: bool = False

    @property
    def depth(self) -> int:
        return len(self.a)

    def min_overlap_depth(self, tol: float = OVERLAP_TOL) -> int | None:
        """Smallest ``n`` with ``|c_n| > tol``; None if all overlaps vanish."""
        nz = np.flatnonzero(np.abs(self.overlaps) > tol)
        return int(nz[0]) if len(nz) else None


def lanczos_chain(liouvillian, seed, probe=None, max_depth: int = 200, tol: float = BREAKDOWN_TOL,
                  paper_recursion: bool = False, keep_basis: bool = False) -> KrylovChain:
    """Lanczos chain of the seed operator with full reorthogonalization.

    ``liouvillian`` is a dense Hamiltonian or a Liouvillian representation;
    ``seed`` and ``probe`` are operators in that representation.  Overlaps
    ``c_n = (probe, S_n)`` are recorded when ``probe`` is given.

    With ``paper_recursion`` the plain two-term recursion
    ``A_n = L S_{n-1} - b_{n-1} S_{n-2}`` is used: no diagonal coefficients and
    no reorthogonalization.
    """
    lv = _as_liouvillian(liouvillian)
    seed = np.asarray(seed, dtype=np.complex128)
    norm = np.sqrt(lv.inner(seed, seed).real)
    if not norm > 0:
        raise ParameterError("zero seed operator")
    shape = seed.shape
    flat = seed.ravel() / norm
    basis = np.zeros((min(max_depth, 64), flat.size), dtype=np.complex128)
    basis[0] = flat
    a, b = [], []
    for n in range(max_depth):
        Ls = lv.apply(basis[n].reshape(shape)).ravel()
        an = 0.0 if paper_recursion else lv.inner(basis[n], Ls).real
        a.append(an)
        if n + 1 == max_depth:
            break
        A = Ls - an * basis[n]
        if n > 0:
            A -= b[-1] * basis[n - 1]
        if not paper_recursion:
            for _ in range(2):
                proj = basis[: n + 1].conj() @ A / lv.dim
                A -= proj @ basis[: n + 1]
        bn = np.sqrt(lv.inner(A, A).real)
        if bn <= tol:
            break
        b.append(bn)
        if n + 1 >= len(basis):
            basis = np.vstack([basis, np.zeros_like(basis)])
        basis[n + 1] = A / bn
    depth = len(a)
    basis = basis[:depth]
    overlaps = None
    if probe is not None:
        p = np.asarray(probe, dtype=np.complex128).ravel()
        overlaps = basis.conj() @ p
        overlaps = np.conj(overlaps) / lv.dim
    return KrylovChain(np.array(a), np.array(b), overlaps, float(norm),
                       basis.reshape((depth,) + shape) if keep_basis else None, paper_recursion)


def phi_evolve(chain: KrylovChain, times, max_step: float | None = None, refinements: int = 4) -> np.ndarray:
    """Krylov amplitudes ``φ_n(t)``, shape ``(len(times), depth)``, from ``φ_n(0) = δ_{n0}``.

    Fixed-step RK4.  The step starts at ``0.02 / ||T||`` and is halved until
    ``Σ|φ_n|²`` stays within ``1e-8`` of one at every sample.  Complex in
    general; real when all ``a_n`` vanish.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ParameterError("times must be nondecreasing and nonnegative")
    D = chain.depth
    psi0 = np.zeros(D, dtype=np.complex128)
    psi0[0] = 1.0
    if D == 1 and chain.a[0] == 0:
        return np.ones((len(times), 1), dtype=np.complex128)
    bound = np.abs(chain.a).max() + 2 * (np.abs(chain.b).max() if len(chain.b) else 0.0)
    if max_step is None:
        max_step = 0.02 / bound if bound > 0 else 1.0
    diag = 1j * chain.a
    for _ in range(refinements + 1):
        phi = kernels.rk4_tridiagonal(diag, chain.b, psi0, times, max_step)
        drift = np.abs((np.abs(phi) ** 2).sum(axis=1) - 1.0)
        if drift.max() < NORM_TOL:
            return phi
        max_step /= 2
    raise NumericalError(f"amplitude norm drift {drift.max():.2e} after {refinements} step refinements")


def correlation_krylov(chain: KrylovChain, phi) -> np.ndarray:
    n = np.arange(chain.depth)
    return chain.seed_norm * (np.asarray(phi) @ ((1j ** n) * chain.overlaps))


def correlation_direct(liouvillian, s1, s2_or_probe, times) -> np.ndarray:
    """Exact ``C(t)`` by eigen-decomposition.

    For a dense H pass ``S1`` and ``S2`` as matrices.  For a
    :class:`SectorLiouvillian` pass encoded ``S1`` and encoded ``S2†``.
    """
    lv = _as_liouvillian(liouvillian)
    times = np.asarray(times, dtype=float)
    return lv.correlation(np.asarray(s1), np.asarray(s2_or_probe), times)


def model_liouvillian(params: ModelParams, shift: int, spectra=None) -> SectorLiouvillian:
    if spectra is None:
        spectra = diagonalize_all(sector_hamiltonians(params))
    return SectorLiouvillian(spectra, params.L, shift)


def appendix_pair(qprime: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """QOS words ``((ket1, bra1), (ket2, bra2))`` of the 3-site operator pair for ``q'``."""
    if qprime not in APPENDIX_S2:
        raise ParameterError(f"q' must be one of {sorted(APPENDIX_S2)}, got {qprime}")
    s1 = tuple(parse_spins(s) for s in APPENDIX_S1)
    s2 = tuple(parse_spins(s) for s in APPENDIX_S2[qprime])
    return s1, s2


@dataclass
class SuppressionEntry:
    qprime: int
    max_abs_c: float
    t_at_max: float
    min_depth: int | None
    c0: complex
    chain: KrylovChain
    direct: np.ndarray
    krylov: np.ndarray

    def to_dict(self) -> dict:
        return {"qprime": self.qprime, "max_abs_c": self.max_abs_c, "t_at_max": self.t_at_max,
                "min_depth": self.min_depth, "c0_re": self.c0.real, "c0_im": self.c0.imag,
                "depth": self.chain.depth}


def suppression_study(params: ModelParams, g: Geometry, qprimes=(0, 1, 2), times=None,
                      max_depth: int = 200, spectra=None) -> dict[int, SuppressionEntry]:
    """``max_t |C(t)|`` and the first nonzero-overlap depth for each ``q'``.

    Uses the 3-site operator pairs ``APPENDIX_S1`` / ``APPENDIX_S2``; requires
    ``g.L_s == 3``.
    """
    if g.L_s != 3:
        raise ParameterError("the operator table is defined for a 3-site QOS")
    if times is None:
        times = np.linspace(0.0, 5.0, 201)
    times = np.asarray(times, dtype=float)
    if spectra is None:
        spectra = diagonalize_all(sector_hamiltonians(params))
    out = {}
    for qp in qprimes:
        (k1, b1), (k2, b2) = appendix_pair(qp)
        shift = int(popcount(b1)) - int(popcount(k1))
        lv = SectorLiouvillian(spectra, params.L, shift)
        seed = lv.encode_unit(g, k1, b1)
        probe = lv.encode_unit(g, b2, k2)  # S2 dagger
        chain = lanczos_chain(lv, seed, probe, max_depth=max_depth)
        direct = correlation_direct(lv, seed, probe, times)
        krylov = correlation_krylov(chain, phi_evolve(chain, times))
        i = int(np.argmax(np.abs(direct)))
        out[qp] = SuppressionEntry(qp, float(np.abs(direct[i])), float(times[i]),
                                   chain.min_overlap_depth(), complex(chain.overlaps[0]),
                                   chain, direct, krylov)
    return out
