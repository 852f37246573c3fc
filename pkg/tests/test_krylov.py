import numpy as np
import pytest

from oracles import SX, SY, SZ, site_op, xy_hamiltonian
from qmpemba.basis import Geometry, embed, enumerate_sector
from qmpemba.errors import ParameterError
from qmpemba.krylov import (DenseLiouvillian, SectorLiouvillian, appendix_pair, correlation_direct,
                            correlation_krylov, hs_inner, lanczos_chain, model_liouvillian, phi_evolve)
from qmpemba.model import ModelParams, sector_hamiltonians
from qmpemba.spectra import diagonalize_all


def _unit_dense(g, ket, bra):
    """``|ket><bra| ⊗ I_B`` as a dense 2**L matrix, built by explicit loops."""
    N = 1 << g.L
    X = np.zeros((N, N))
    for b in range(1 << g.L_b):
        X[embed(ket, b, g), embed(bra, b, g)] = 1.0
    return X


def test_hs_inner():
    assert hs_inner(np.eye(4), np.eye(4)) == 1
    assert hs_inner(SX, SY) == 0
    with pytest.raises(ParameterError):
        hs_inner(np.eye(2), np.eye(3))


def test_single_qubit_chain():
    t = np.linspace(0, 4, 81)
    chain = lanczos_chain(SZ, SX, probe=SX)
    assert chain.depth == 2
    assert np.allclose(chain.a, 0, atol=1e-15) and chain.b == pytest.approx([2.0])
    phi = phi_evolve(chain, t)
    assert np.abs(phi[:, 0] - np.cos(2 * t)).max() < 1e-8
    assert np.abs(correlation_krylov(chain, phi) - np.cos(2 * t)).max() < 1e-8
    assert np.abs(correlation_direct(SZ, SX, SX, t) - np.cos(2 * t)).max() < 1e-12


def test_dense_chain_conserves_norm(rng):
    H = xy_hamiltonian(4, 1.0, 0.3)
    S = site_op(SX, 0, 4)
    chain = lanczos_chain(H, S, probe=S)
    # a_n vanishes for a Hermitian seed; deep in the chain roundoff breaks that and the kept a_n absorb it
    assert np.all(chain.b > 0) and np.allclose(chain.a[:40], 0, atol=1e-12)
    t = np.linspace(0, 10, 101)
    phi = phi_evolve(chain, t)
    assert np.abs((np.abs(phi) ** 2).sum(axis=1) - 1).max() < 1e-8
    assert np.abs(correlation_krylov(chain, phi) - correlation_direct(H, S, S, t)).max() < 1e-6
    assert chain.overlaps[0] == pytest.approx(1.0)


def test_orthonormal_basis():
    H = xy_hamiltonian(4, 1.0, 0.3)
    chain = lanczos_chain(H, site_op(SX, 1, 4) @ site_op(SZ, 2, 4), keep_basis=True)
    lv = DenseLiouvillian(H)
    B = chain.basis.reshape(chain.depth, -1)
    G = B.conj() @ B.T / lv.dim
    assert np.abs(G - np.eye(chain.depth)).max() < 1e-10


@pytest.fixture(scope="module")
def six():
    g = Geometry(6, (2, 4))
    params = ModelParams(6, 1.0, 0.2)
    return g, params, diagonalize_all(sector_hamiltonians(params))


def test_sector_encoding_round_trip(six, rng):
    g, params, spectra = six
    lv = SectorLiouvillian(spectra, 6, 1)
    X = _unit_dense(g, 0b000, 0b001)
    assert np.allclose(lv.decode(lv.encode(X)), X, atol=1e-12)
    assert np.allclose(lv.encode_unit(g, 0b000, 0b001), lv.encode(X), atol=1e-12)
    with pytest.raises(ParameterError):
        lv.encode_unit(g, 0b001, 0b000)


def test_sector_liouvillian_matches_dense(six):
    g, params, spectra = six
    H = xy_hamiltonian(6, 1.0, 0.2).real
    lv = SectorLiouvillian(spectra, 6, 1)
    X = _unit_dense(g, 0b010, 0b011)
    assert np.allclose(lv.decode(lv.apply(lv.encode(X))), H @ X - X @ H, atol=1e-12)
    dense = lanczos_chain(H, X, max_depth=30)
    sect = lanczos_chain(lv, lv.encode(X), max_depth=30)
    n = min(dense.depth, sect.depth)
    assert np.allclose(dense.a[:n], sect.a[:n], atol=1e-9)
    assert np.allclose(dense.b[: n - 1], sect.b[: n - 1], atol=1e-9)


def test_reconstruction_l6(six):
    g, params, spectra = six
    t = np.linspace(0, 5, 101)
    for (k1, b1), (k2, b2) in (appendix_pair(0), appendix_pair(1), appendix_pair(2)):
        lv = SectorLiouvillian(spectra, 6, int(bin(b1).count("1")) - int(bin(k1).count("1")))
        seed, probe = lv.encode_unit(g, k1, b1), lv.encode_unit(g, b2, k2)
        chain = lanczos_chain(lv, seed, probe)
        phi = phi_evolve(chain, t)
        assert np.abs((np.abs(phi) ** 2).sum(axis=1) - 1).max() < 1e-8
        direct = correlation_direct(lv, seed, probe, t)
        assert np.abs(correlation_krylov(chain, phi) - direct).max() < 1e-6
        # independent dense trace formula
        H = xy_hamiltonian(6, 1.0, 0.2)
        w, V = np.linalg.eigh(H)
        S1, S2 = _unit_dense(g, k1, b1), _unit_dense(g, k2, b2)
        for ti in (0, 37, 100):
            U = V @ np.diag(np.exp(-1j * w * t[ti])) @ V.conj().T
            ref = np.trace(U.conj().T @ S1 @ U @ S2) / 64
            assert direct[ti] == pytest.approx(ref, abs=1e-10)


def test_c0_one_eighth():
    g = Geometry(8, (4, 6))
    lv = model_liouvillian(ModelParams(8), 1)
    (k1, b1), (k2, b2) = appendix_pair(0)
    chain = lanczos_chain(lv, lv.encode_unit(g, k1, b1), lv.encode_unit(g, b2, k2), max_depth=5)
    assert chain.seed_norm * chain.overlaps[0] == pytest.approx(1 / 8, abs=1e-14)
    (k1, b1), (k2, b2) = appendix_pair(2)
    chain2 = lanczos_chain(lv, lv.encode_unit(g, k1, b1), lv.encode_unit(g, b2, k2), max_depth=5)
    assert abs(chain2.overlaps[0]) < 1e-14 and chain2.min_overlap_depth() >= 1


def test_paper_recursion_flag(six):
    g, params, spectra = six
    lv = SectorLiouvillian(spectra, 6, 1)
    chain = lanczos_chain(lv, lv.encode_unit(g, 0, 1), paper_recursion=True, max_depth=10)
    assert np.all(chain.a == 0) and chain.paper_recursion


def test_phi_evolve_errors():
    chain = lanczos_chain(SZ, SX)
    with pytest.raises(ParameterError):
        phi_evolve(chain, [1.0, 0.5])
    with pytest.raises(ParameterError):
        lanczos_chain(SZ, np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        appendix_pair(3)


def test_breakdown_on_conserved_operator():
    chain = lanczos_chain(SZ, SZ, probe=SZ)
    assert chain.depth == 1
    phi = phi_evolve(chain, [0.0, 1.0])
    assert np.allclose(phi, 1.0)
