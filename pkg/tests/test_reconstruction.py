import math

import numpy as np
import pytest
from scipy.integrate import quad

from fixtures import PI, main_part, random_theta
from sinetype import (
    FourierTail,
    MainPart,
    SineTypeBase,
    ThetaFunction,
    ZeroSequence,
    build_moment_system,
    complete_zeros,
    eval_tail,
    frame_bounds_estimate,
    invert_to_tail,
    localize_zeros,
    product_eval_hadamard,
    product_eval_ratio,
    verify_eq13,
)
from sinetype.errors import IllConditioned, InsufficientZeros, NearLatticePole, SlowConvergence, TailBoundExceeded
from sinetype.reconstruction import MomentSystem, moment_rows


def _off_lattice(rng, n, lattice, xr=10.0, yr=2.0, gap=1 / 3):
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-xr, xr), rng.uniform(-yr, yr))
        if np.abs(lattice - z).min() > gap:
            out.append(z)
    return np.array(out)


def test_ratio_identity_on_lattice():
    main = main_part(1)
    zs = ZeroSequence.lattice_of(main, 200)
    z = np.array([0.5, 1.3 + 0.2j, -4.7 - 1j])
    assert np.allclose(product_eval_ratio(main, zs, z), main(z), rtol=1e-14, atol=0)


def test_ratio_single_shift():
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 50)
    z = zs.zeros.copy()
    z[zs.indices == 4] = 2.1  # index 4 carries the lattice point 2
    val = product_eval_ratio(main, zs.with_zeros(z), 0.5, kappa_tail=0.0)
    assert abs(val - (2.1 - 0.5) / (2 - 0.5)) < 1e-14


def test_ratio_matches_direct():
    theta = ThetaFunction(main_part(1), FourierTail.from_modes(PI, {1: 0.05}))
    zs = localize_zeros(theta, 500).zeros
    z = _off_lattice(np.random.default_rng(1), 20, zs.lattice)
    v = product_eval_ratio(theta.main, zs, z, tail_tol=1e-6)
    assert np.max(np.abs(v / theta(z) - 1)) < 1e-6


def test_ratio_errors():
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 50)
    with pytest.raises(NearLatticePole):
        product_eval_ratio(main, zs, 3.0)
    with pytest.raises(TailBoundExceeded):
        product_eval_ratio(main, zs, 0.5, kappa_tail=1.0)


def test_hadamard_examples():
    main = main_part(1)
    zs = ZeroSequence.lattice_of(main, 8000)
    vals = [abs(product_eval_hadamard(main, zs, 0.5, n) - 0.5) for n in (500, 2000, 8000)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-4
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 8000)
    errs = [abs(product_eval_hadamard(main, zs, 0.25, n) - math.sin(PI / 4)) for n in (2000, 8000)]
    # truncation error is about z^2 / n_max
    assert errs[1] < errs[0] / 3 and errs[1] < 2e-5


def test_hadamard_convergence_monitor():
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 400)
    with pytest.raises(SlowConvergence):
        product_eval_hadamard(main, zs, 3.0 + 0.5j, 200, tol=1e-6)
    with pytest.raises(InsufficientZeros):
        product_eval_hadamard(main, zs, 0.1, 300, tol=1e-3)


def test_hadamard_vs_ratio_random_fixture():
    theta = random_theta(7, 1, M=16)
    zs = localize_zeros(theta, 4000).zeros
    rng = np.random.default_rng(2)
    r = 0.5 * np.sqrt(rng.uniform(size=10))
    z = r * np.exp(2j * PI * rng.uniform(size=10))
    ref = product_eval_ratio(theta.main, zs, z)
    had = product_eval_hadamard(theta.main, zs, z, 2000, tol=3e-4)
    assert np.max(np.abs(had / ref - 1)) < 3e-4


def test_moment_rows_lattice_kronecker():
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 21)
    sys_ = build_moment_system(zs, main, 10)
    n = np.rint(zs.zeros.real).astype(int)
    expect = np.zeros((21, 21))
    expect[np.arange(21), -n + 10] = 2 * PI
    assert np.max(np.abs(sys_.matrix - expect)) < 1e-13
    assert np.max(np.abs(sys_.rhs)) < 1e-13
    tail, res = invert_to_tail(sys_)
    assert np.max(np.abs(tail.coeffs)) < 1e-14


def test_moment_entries_match_quadrature():
    main = main_part(1)
    nodes = np.array([0.3 + 0.2j, 2.7 - 0.1j, 2.7 - 0.1j])
    nus = np.array([0, 0, 1])
    A, rhs = moment_rows(main, nodes, nus, 2)
    for r, (zk, nu) in enumerate(zip(nodes, nus)):
        for c, j in enumerate(range(-2, 3)):
            f = lambda x: np.exp(1j * PI * j * x / PI) * (1j * x) ** nu * np.exp(1j * zk * x)
            ref = quad(lambda x: f(x).real, -PI, PI)[0] + 1j * quad(lambda x: f(x).imag, -PI, PI)[0]
            assert abs(A[r, c] - ref) < 1e-8
    assert np.allclose(rhs, -np.array([main(nodes[0]), main(nodes[1]), main(nodes[2], 1)]))


def test_double_zero_gives_derivative_row():
    main = main_part(0)
    zs = ZeroSequence.lattice_of(main, 12)
    z = zs.zeros.copy()
    z[2] = z[1]  # indices 2 and 3 coincide
    sys_ = build_moment_system(zs.with_zeros(z), main, 3)
    assert list(sys_.nus[:4]) == [0, 0, 1, 0]
    assert list(sys_.indices[:4]) == [1, 2, 3, 4]
    assert sys_.K == 12


def test_insufficient_zeros():
    main = main_part(0)
    with pytest.raises(InsufficientZeros):
        build_moment_system(ZeroSequence.lattice_of(main, 10), main, 5)


def test_round_trip_named_modes():
    theta = ThetaFunction(main_part(1), FourierTail.from_modes(PI, {1: 0.05, -2: 0.03 + 0.01j}))
    zs = localize_zeros(theta, 129).zeros
    tail, res = invert_to_tail(build_moment_system(zs, theta.main, 32))
    err = np.abs(tail.coeffs - theta.tail.resized(32).coeffs)
    assert err.max() < 1e-6
    assert res < 1e-8 * np.linalg.norm(build_moment_system(zs, theta.main, 32).rhs)


@pytest.mark.parametrize("seed", range(3))
def test_round_trip_random(seed):
    theta = random_theta(seed, seed % 2, M=16)
    zs = localize_zeros(theta, 130).zeros
    tail, _ = invert_to_tail(build_moment_system(zs, theta.main, 16))
    assert np.max(np.abs(tail.coeffs - theta.tail.coeffs)) < 1e-5


def test_head_independence():
    theta = random_theta(4, 1, M=8)
    zs = localize_zeros(theta, 60).zeros
    z = zs.zeros.copy()
    z[0] += 0.37 - 0.2j
    a, _ = invert_to_tail(build_moment_system(zs, theta.main, 8))
    b, _ = invert_to_tail(build_moment_system(zs.with_zeros(z), theta.main, 8))
    assert np.array_equal(a.coeffs, b.coeffs)


def test_linear_regime():
    main = main_part(1)
    idx, z0, mu = main.lattice(130)
    rng = np.random.default_rng(0)
    kappa = rng.normal(size=idx.size) / np.arange(1, idx.size + 1)
    kappa *= 1e-3 / np.linalg.norm(kappa)
    norms = []
    for s in (1, 2):
        zs = ZeroSequence(idx, z0 + s * kappa / mu, z0, mu, 1)
        norms.append(invert_to_tail(build_moment_system(zs, main, 32))[0].norm())
    assert abs(norms[1] / norms[0] - 2) < 0.1


def test_frame_lattice_and_perturbed():
    main = main_part(1)
    zs = ZeroSequence.lattice_of(main, 65)
    fr = frame_bounds_estimate(build_moment_system(zs, main, 32))
    assert abs(fr.ratio - 1) < 1e-10
    assert abs(fr.m_est - 2 * PI) < 1e-10  # (2 pi)^2 / (2 pi)
    rng = np.random.default_rng(3)
    kappa = rng.uniform(-0.1, 0.1, zs.indices.size)
    fr = frame_bounds_estimate(build_moment_system(zs.with_zeros(zs.lattice + kappa / zs.mu), main, 32))
    assert 0 < fr.m_est <= fr.M_est and fr.ratio >= 0.5


def test_duplicate_node_without_derivative_row_is_flagged():
    main = main_part(0)
    nodes = main.base.lattice(np.arange(1, 66))
    nodes[10] = nodes[9]
    A, rhs = moment_rows(main, nodes, np.zeros(65, dtype=np.int64), 32)
    sys_ = MomentSystem(nodes, np.zeros(65, dtype=np.int64), np.arange(1, 66), A, rhs, PI, 32)
    assert frame_bounds_estimate(sys_).m_est < 1e-12
    with pytest.raises(IllConditioned) as info:
        invert_to_tail(sys_)
    assert info.value.frame.m_est < 1e-12


def test_complete_trivial():
    main = main_part(1)
    partial = ZeroSequence.lattice_of(main, 80).base_part()
    full = complete_zeros(partial, main, 16)
    assert full.indices[0] == 0 and abs(full.zeros[0]) < 1e-10


def test_complete_recovers_generated_head():
    main = MainPart(SineTypeBase.sin_scaled(PI), [-0.3 - 0.2j, 1.0])
    theta = ThetaFunction(main, random_theta(11, 1, M=8, norm=0.6).tail)
    zs = localize_zeros(theta, 100).zeros
    a = complete_zeros(zs.base_part(), main, 8)
    b = complete_zeros(zs.base_part(), main, 8)
    assert abs(a.zeros[0] - zs.zeros[0]) < 1e-6
    assert np.array_equal(a.zeros, b.zeros)


def test_permuted_rows_same_tail():
    theta = random_theta(12, 1, M=8)
    sys_ = build_moment_system(localize_zeros(theta, 60).zeros, theta.main, 8)
    perm = np.random.default_rng(0).permutation(sys_.K)
    alt = MomentSystem(sys_.nodes[perm], sys_.nus[perm], sys_.indices[perm], sys_.matrix[perm],
                       sys_.rhs[perm], sys_.b, sys_.M)
    a, _ = invert_to_tail(sys_)
    b, _ = invert_to_tail(alt)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-10


def test_generalized_form_true_head():
    theta = random_theta(13, 1, M=8, norm=0.5)
    zs = localize_zeros(theta, 120).zeros
    res = verify_eq13(zs.zeros[:1], zs, theta.main, M=8)
    assert np.max(np.abs(res.poly)) < 1e-6
    assert np.max(np.abs(res.tail.coeffs - theta.tail.coeffs)) < 1e-6


def test_generalized_form_shifted_head():
    theta = random_theta(14, 1, M=8, norm=0.5)
    zs = localize_zeros(theta, 120).zeros
    zh = zs.zeros[0]
    a = zh + 0.5
    res = verify_eq13([a], zs, theta.main, M=8)
    # theta_arb = theta (a - z)/(zh - z), so its polynomial correction is zh - a
    assert abs(res.poly[0] - (zh - a)) < 1e-6
    assert abs(res.poly[0]) > 1e-3 and res.fit_residual < 1e-5
    x = np.linspace(-7.3, 7.9, 23)
    arb = theta(x) * (a - x) / (zh - x)
    rest = arb - theta.main(x) - res.poly[0] * np.sin(PI * x)
    assert np.max(np.abs(rest - eval_tail(res.tail, x))) < 1e-5


def test_generalized_form_vacuous_for_N0():
    theta = random_theta(15, 0, M=8)
    zs = localize_zeros(theta, 60).zeros
    res = verify_eq13([], zs, theta.main, M=8)
    assert res.poly.size == 0
