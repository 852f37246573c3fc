import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qmpemba.basis import enumerate_sector
from qmpemba.errors import NumericalError, ParameterError
from qmpemba.model import ModelParams, SectorHamiltonian, build_sector_hamiltonian, sector_hamiltonians
from qmpemba.spectra import (diagonalize_all, diagonalize_sector, dos_entropy, gap_histogram, gap_variance,
                             sector_energy_variance, SectorSpectrum)


def _spec(levels):
    levels = np.sort(np.asarray(levels, dtype=float))
    return SectorSpectrum(enumerate_sector(1, 0), levels, np.eye(len(levels)))


def test_singleton_block():
    blk = SectorHamiltonian(enumerate_sector(3, 0), np.array([[2.5]]), (1, 2, 3))
    sp = diagonalize_sector(blk)
    assert sp.eigenvalues.tolist() == [2.5]
    assert abs(sp.eigenvectors[0, 0]) == 1


def test_two_site_closed_form():
    J, h = 1.0, 0.2
    sp = diagonalize_sector(build_sector_hamiltonian(ModelParams(2, J, h), enumerate_sector(2, 1)))
    r = math.sqrt(h * h + 4 * J * J)
    assert np.allclose(sp.eigenvalues, [-r, r], atol=1e-14)


@pytest.mark.parametrize("L", [8, 11])
def test_residual_and_orthonormality(L):
    blocks = sector_hamiltonians(ModelParams(L))
    for n, sp in diagonalize_all(blocks).items():
        H, V, E = blocks[n].matrix, sp.eigenvectors, sp.eigenvalues
        scale = max(np.abs(H).max(), 1.0) * sp.dimension
        assert np.abs(H @ V - V * E).max() <= 1e-10 * scale
        assert np.abs(V.T @ V - np.eye(sp.dimension)).max() <= 1e-10
        assert np.all(np.diff(E) >= 0)
        assert abs(np.trace(H) - E.sum()) <= 1e-10 * scale


def test_nonfinite_block_raises_with_label():
    blk = SectorHamiltonian(enumerate_sector(4, 2), np.full((6, 6), np.nan), (1, 2, 3, 4))
    with pytest.raises(NumericalError, match="n_up=2"):
        diagonalize_sector(blk)


def test_variance_examples():
    assert sector_energy_variance(_spec([3.0])) == 0
    assert sector_energy_variance(_spec([0, 1])) == pytest.approx(0.25)
    assert gap_variance(_spec([0, 1]), _spec([0, 2])) == pytest.approx(1.25)
    assert gap_variance(_spec([4.0]), _spec([4.0])) == 0


def test_variance_peaks_at_half_filling():
    # derived from a full L=12 diagonalization: the variance is unimodal in n_up
    spectra = diagonalize_all(sector_hamiltonians(ModelParams(12)))
    v = [sector_energy_variance(spectra[n]) for n in range(13)]
    assert int(np.argmax(v)) == 6
    assert all(v[k] < v[k + 1] for k in range(6))
    assert all(v[k] > v[k + 1] for k in range(6, 12))


def test_gap_variance_grows_toward_half_filling():
    spectra = diagonalize_all(sector_hamiltonians(ModelParams(12)))
    # QOS charges q1=1, q2=2 with bath sectors m = 2, 4, 6 (paper scale element shifted to L=12)
    vals = [gap_variance(spectra[1 + m], spectra[2 + m]) for m in (2, 4)]
    assert vals[0] < vals[1]


def test_histogram_four_pairs():
    hist = gap_histogram(_spec([0, 1]), _spec([0, 2]), 0.5)
    gaps = {c for c, n in zip(hist.centers, hist.counts) if n}
    assert gaps == {-1.0, 0.0, 1.0, 2.0}
    assert hist.counts.sum() == 4 and hist.counts.max() == 1
    assert hist.m_avg is None and hist.nm_product is None


def test_histogram_single_level():
    hist = gap_histogram(_spec([1.3]), _spec([1.3]), 0.1)
    assert hist.counts.tolist() == [1] and hist.centers.tolist() == [0.0]


def test_histogram_weights_and_normalization(rng):
    a, b = _spec(rng.normal(size=7)), _spec(rng.normal(size=5))
    w = rng.random((7, 5))
    h = gap_histogram(a, b, 0.3, w)
    assert h.counts.sum() == 35 and h.dim_m == 35
    assert np.nansum(h.nm_product) == pytest.approx(w.sum())
    filled = h.counts > 0
    assert np.allclose(h.m_avg[filled] * h.counts[filled], h.nm_product[filled])
    assert h.n_tilde.sum() * h.delta_omega == pytest.approx(h.dim_a * h.dim_b * h.delta_omega / h.dim_m)
    hs = gap_histogram(a, b, 0.3, normalization="sector")
    assert hs.dim_m == 7 and np.allclose(hs.n_tilde, hs.counts / 7)


def test_histogram_errors():
    with pytest.raises(ParameterError):
        gap_histogram(_spec([0]), _spec([1]), 0.0)
    with pytest.raises(ParameterError):
        gap_histogram(_spec([0]), _spec([1]), -1.0)
    with pytest.raises(ParameterError):
        gap_histogram(_spec([0]), _spec([1]), 1.0, normalization="other")


def test_default_bins():
    a, b = _spec([0.0, 1.0]), _spec([0.0, 3.0])
    h = gap_histogram(a, b)
    assert h.delta_omega == pytest.approx((3 - (-1)) / 200)


def test_dos_entropy():
    sp = _spec([0.0, 1.0, 2.0])
    assert dos_entropy(sp, (0.5, 1.5)) == 0.0
    assert dos_entropy(sp, (5, 6)) is None
    half = diagonalize_all(sector_hamiltonians(ModelParams(12)))[6]
    assert dos_entropy(half, (-1e9, 1e9)) == pytest.approx(math.log(924))
    with pytest.raises(ParameterError):
        dos_entropy(sp, (1, 1))


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 50), elements=finite), arrays(float, st.integers(1, 50), elements=finite))
def test_gap_variance_identity(a, b):
    gaps = np.array([y - x for x, y in itertools.product(a, b)])
    assert abs(gaps.var() - gap_variance(_spec(a), _spec(b))) <= 1e-10 * max(1.0, gaps.var())
