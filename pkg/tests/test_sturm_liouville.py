import math

import numpy as np
import pytest
from scipy.integrate import quad

from fixtures import PI
from sinetype import Spectrum, localize_zeros, spectrum_to_zeros, theorem12_experiment, theta_from_u, theta_from_v, zeros_to_spectrum
from sinetype.errors import BranchAmbiguity, ValidationError
from sinetype.sturm_liouville import Lambda, cosine_fixture_spectrum, principal_sqrt, u_from_tail, v_from_tail

POINTS = np.array([0.3, 1.7 + 0.2j, -2.4 + 0.5j, 4.1 - 0.3j, 0.0, 1.0, -3.0, 6.6, 0.9j, 10.2])


def _cquad(f, a, b):
    return quad(lambda x: f(x).real, a, b, limit=200)[0] + 1j * quad(lambda x: f(x).imag, a, b, limit=200)[0]


def test_u_zero_is_unperturbed():
    theta = theta_from_u({})
    spec = zeros_to_spectrum(localize_zeros(theta, 41).zeros)
    assert np.allclose(spec.eigenvalues, np.arange(1, 21) ** 2, atol=1e-10)


def test_u_cosine_tail_matches_quadrature():
    eps = 0.07
    theta = theta_from_u({1: 2 * eps})
    assert theta.tail.mode(1) == theta.tail.mode(-1) == pytest.approx(eps / 2)
    for z in POINTS:
        ref = _cquad(lambda x: 2 * eps * np.cos(x) * np.cos(z * x), 0, PI)
        assert abs(theta.tail(z) - ref) < 1e-10


def test_u_nonzero_mean_rejected():
    with pytest.raises(ValidationError):
        theta_from_u({0: 1.0})


def test_v_zero():
    theta = theta_from_v({})
    assert theta.N == 0 and np.allclose(theta(POINTS), np.sin(PI * POINTS))


def test_v_sine_tail_matches_quadrature():
    theta = theta_from_v({1: 1.0, 3: -0.4})
    assert theta.tail.mode(0) == 0
    for z in POINTS:
        ref = _cquad(lambda x: (np.sin(x) - 0.4 * np.sin(3 * x)) * np.sin(z * x), 0, PI)
        assert abs(theta.tail(z) - ref) < 1e-10


def test_mode_inverse_maps():
    theta = theta_from_u({1: 0.3, 4: -0.1j})
    assert u_from_tail(theta.tail) == pytest.approx({1: 0.3, 2: 0, 3: 0, 4: -0.1j})
    theta = theta_from_v([0.2, 0.0, 0.5])
    assert v_from_tail(theta.tail) == pytest.approx({1: 0.2, 2: 0, 3: 0.5})


def test_spectrum_to_zeros_examples():
    zs = spectrum_to_zeros(Spectrum.unperturbed(3), 1)
    assert list(zs.indices) == [0, 1, 2, 3, 4, 5, 6, 7]
    assert np.allclose(zs.zeros, [0, 0, 1, -1, 2, -2, 3, -3])
    assert np.all(zs.kappa == 0)
    lam = np.array([1.2, 4.0])
    zs = spectrum_to_zeros(Spectrum(lam), 0)
    assert zs.zeros[1] == pytest.approx(math.sqrt(1.2)) and zs.zeros[2] == pytest.approx(-math.sqrt(1.2))


def test_branch_rule():
    assert principal_sqrt(-4.0) == pytest.approx(2j)
    assert principal_sqrt(-4.0 + 0j) == pytest.approx(2j)
    with pytest.raises(BranchAmbiguity):
        principal_sqrt(-4.0 + 1e-12j)


def test_spectrum_round_trip_through_localize():
    theta = theta_from_u({1: 0.3, 2: -0.15, 5: 0.05})
    zs = localize_zeros(theta, 81).zeros
    spec = zeros_to_spectrum(zs)
    back = spectrum_to_zeros(spec, 1)
    sel = zs.indices <= back.n_max
    assert np.max(np.abs(back.zeros[2:] ** 2 - zs.zeros[sel][2:] ** 2)) < 1e-8


def test_experiment_identical_spectra():
    spec = cosine_fixture_spectrum(0.05, 64)
    res = theorem12_experiment(spec, spec, 1, 32)
    assert res.lhs == 0


def test_experiment_cosine_recovers_u_norm():
    eps = 0.05
    res = theorem12_experiment(cosine_fixture_spectrum(eps, 64), Spectrum.unperturbed(64), 1, 32)
    assert abs(res.lhs - eps * math.sqrt(2 * PI)) < 1e-4
    assert res.rhs == pytest.approx(2 * eps)


def test_cosine_fixture_is_exact():
    eps = 0.1
    theta = theta_from_u({1: 2 * eps})
    spec = zeros_to_spectrum(localize_zeros(theta, 41).zeros)
    assert np.allclose(spec.eigenvalues, cosine_fixture_spectrum(eps, 20).eigenvalues, atol=1e-10)


def test_lambda_metric():
    n = np.arange(1, 200_001, dtype=float)
    a = Spectrum(n**2 + 1 / n)
    assert abs(Lambda(a, Spectrum(n**2), 1) - PI**2 / math.sqrt(90)) < 1e-12


def test_metric_consistency_bridge():
    theta = theta_from_u({1: 0.1, 3: -0.05})
    zs = localize_zeros(theta, 81).zeros
    spec = zeros_to_spectrum(zs)
    ref = spectrum_to_zeros(Spectrum.unperturbed(len(spec)), 1)
    z_metric = np.linalg.norm(spectrum_to_zeros(spec, 1).kappa - ref.kappa)
    lam_metric = spec.Lambda(Spectrum.unperturbed(len(spec)), 0)
    assert 1 / 3 <= z_metric / lam_metric <= 3


@pytest.mark.parametrize("profile", [0, 1])
def test_symmetry_preserved_by_round_trip(profile):
    from sinetype import build_moment_system, invert_to_tail

    theta = theta_from_u({1: 0.2, 2: 0.1}) if profile == 1 else theta_from_v({1: 0.2, 2: -0.1})
    spec = zeros_to_spectrum(localize_zeros(theta, 81).zeros)
    zs = spectrum_to_zeros(spec, profile)
    tail, _ = invert_to_tail(build_moment_system(zs, theta.main, 16))
    c = tail.coeffs
    sign = 1 if profile == 1 else -1
    assert np.max(np.abs(c - sign * c[::-1])) < 1e-12
