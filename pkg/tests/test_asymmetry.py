import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmpemba.asymmetry import (AsymmetryCurve, basis_charges, check_density_matrix, detect_mpemba,
                               entanglement_asymmetry, fit_gaussian_decay, pure_state_asymmetry, symmetrize,
                               von_neumann_entropy)
from qmpemba.basis import parse_spins
from qmpemba.errors import InvalidDensityError, ParameterError
from qmpemba.states import qos_initial_state


def random_density(rng, dim, rank=None):
    rank = rank or dim
    X = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def test_charges():
    assert basis_charges(8).tolist() == [-3, -1, -1, 1, -1, 1, 1, 3]
    with pytest.raises(ParameterError):
        basis_charges(6)


def test_symmetrize_examples(rng):
    dd, ud, du = parse_spins("↓↓↓"), parse_spins("↑↓↓"), parse_spins("↓↑↓")
    rho = np.zeros((8, 8), dtype=complex)
    rho[dd, ud] = rho[ud, dd] = 0.3
    rho[ud, du] = rho[du, ud] = 0.2
    out = symmetrize(rho)
    assert out[dd, ud] == 0 and out[ud, du] == 0.2
    r = random_density(rng, 8)
    s = symmetrize(r)
    assert np.array_equal(symmetrize(s), s)
    assert np.allclose(np.diag(s), np.diag(r))


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0, 0, 0])) == 0
    assert von_neumann_entropy(np.eye(8) / 8) == pytest.approx(math.log(8), abs=1e-14)
    assert von_neumann_entropy(np.diag([0.5, 0.5])) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(InvalidDensityError):
        von_neumann_entropy(np.diag([1.1, -0.1]))


def test_asymmetry_examples():
    v = np.zeros(8)
    v[parse_spins("↓↓↓")] = v[parse_spins("↑↓↓")] = 1 / math.sqrt(2)
    assert entanglement_asymmetry(np.outer(v, v)) == pytest.approx(math.log(2), abs=1e-14)
    psi = qos_initial_state(0.0, 3).to_dense()
    assert entanglement_asymmetry(np.outer(psi, psi.conj())) == pytest.approx(0, abs=1e-15)


def test_tilted_state_equals_binomial_shannon():
    theta = 1.1
    psi = qos_initial_state(theta, 3).to_dense()
    p_up = math.sin(theta / 2) ** 2
    occ = [math.comb(3, k) * p_up**k * (1 - p_up) ** (3 - k) for k in range(4)]
    assert entanglement_asymmetry(np.outer(psi, psi.conj())) == pytest.approx(pure_state_asymmetry(occ), abs=1e-12)


def test_check_density_matrix():
    check_density_matrix(np.eye(4) / 4)
    with pytest.raises(InvalidDensityError):
        check_density_matrix(np.eye(4) / 2)
    with pytest.raises(InvalidDensityError):
        check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InvalidDensityError):
        check_density_matrix(np.diag([1.5, -0.5]))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), rank=st.integers(1, 16))
def test_asymmetry_nonnegative(seed, n, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 1 << n, min(rank, 1 << n))
    assert entanglement_asymmetry(rho) >= -1e-10
    assert entanglement_asymmetry(symmetrize(rho)) == pytest.approx(0, abs=1e-10)
    assert von_neumann_entropy(symmetrize(rho)) >= von_neumann_entropy(rho) - 1e-10


def test_gaussian_fit_exact():
    t = np.linspace(0, 10, 101)
    fit = fit_gaussian_decay(0.7 * np.exp(-t**2 / 25), times=t)
    assert fit.ok
    assert fit.A == pytest.approx(0.7, rel=1e-6) and fit.t0 == pytest.approx(5, rel=1e-6)
    assert fit.residual < 1e-10


def test_gaussian_fit_window():
    t = np.linspace(0, 10, 101)
    fit = fit_gaussian_decay(np.exp(-t**2), times=t, floor=1e-3)
    # y > 1e-3 while t < sqrt(ln 1000) = 2.628
    assert fit.window == (0, 27)


def test_gaussian_fit_noise():
    rng = np.random.default_rng(2024)
    t = np.linspace(0, 10, 101)
    for _ in range(20):
        y = 0.7 * np.exp(-t**2 / 25) * (1 + 0.01 * rng.normal(size=t.size))
        fit = fit_gaussian_decay(y, times=t)
        assert fit.ok and abs(fit.t0 / 5 - 1) < 0.05 and abs(fit.A / 0.7 - 1) < 0.05


def test_gaussian_fit_failures():
    t = np.linspace(0, 10, 101)
    assert not fit_gaussian_decay(np.full(101, 0.4), times=t).ok
    assert not fit_gaussian_decay(np.exp(t / 10), times=t).ok
    short = fit_gaussian_decay(np.exp(-t**2 * 100), times=t)
    assert not short.ok and "few" in short.reason
    assert not fit_gaussian_decay(np.zeros(101), times=t).ok
    assert fit_gaussian_decay(np.zeros(101), times=t).to_dict()["excluded"]


def _curves(f1, f2, t):
    return AsymmetryCurve(t, f1(t)), AsymmetryCurve(t, f2(t))


def test_mpemba_gaussians():
    t = np.linspace(0, 10, 1001)
    c1, c2 = _curves(lambda t: 0.9 * np.exp(-t**2 / 4), lambda t: 0.5 * np.exp(-t**2 / 25), t)
    v = detect_mpemba(c1, c2)
    exact = math.sqrt(math.log(0.9 / 0.5) / (1 / 4 - 1 / 25))
    assert exact == pytest.approx(1.673, abs=5e-4)
    assert v.occurs and v.initially_larger == 1
    assert exact - 0.01 <= v.t_M <= exact
    assert v.margin > 0
    swapped = detect_mpemba(c2, c1)
    assert swapped.occurs and swapped.t_M == v.t_M and swapped.initially_larger == 2


def test_mpemba_negative_cases():
    t = np.linspace(0, 5, 51)
    c = AsymmetryCurve(t, np.exp(-t**2))
    assert not detect_mpemba(c, c).occurs
    hi, lo = _curves(lambda t: 1.0 * np.exp(-t**2 / 4), lambda t: 0.5 * np.exp(-t**2 / 4), t)
    v = detect_mpemba(hi, lo)
    assert not v.occurs and v.t_M is None
    with pytest.raises(ParameterError):
        detect_mpemba(c, AsymmetryCurve(t[:-1], np.ones(50)))


def test_mpemba_recrossing_uses_last_failure():
    t = np.arange(6.0)
    c1 = AsymmetryCurve(t, [1.0, 0.1, 0.6, 0.1, 0.1, 0.1])
    c2 = AsymmetryCurve(t, [0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
    v = detect_mpemba(c1, c2)
    assert v.occurs and v.t_M == 2.0 and v.margin == pytest.approx(0.4)


def test_curve_clamp_and_shape():
    c = AsymmetryCurve([0, 1], [-1e-12, 0.3])
    assert c.clamped().tolist() == [0.0, 0.3]
    with pytest.raises(ParameterError):
        AsymmetryCurve([0, 1, 2], [1, 2])
