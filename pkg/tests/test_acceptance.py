"""Acceptance criteria; each test prints one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from fixtures import PI, main_part, random_tail, random_theta
from sinetype import (
    BallSpec,
    FourierTail,
    Rect,
    Spectrum,
    ThetaFunction,
    ZeroSequence,
    build_moment_system,
    complete_zeros,
    empirical_lipschitz,
    eval_theta,
    frame_bounds_estimate,
    invert_to_tail,
    lemma1_check,
    line_shift_check,
    localize_zeros,
    parseval_l2,
    product_eval_hadamard,
    product_eval_ratio,
    residuals,
    theorem12_experiment,
    winding_count,
)
from sinetype.sturm_liouville import Lambda, cosine_fixture_spectrum


@pytest.fixture
def detail(request):
    def add(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return add


@pytest.mark.criterion(1, "exact winding counts for sin(pi z), K = 1..20, under 1 s")
def test_counting_exactness(detail):
    f = lambda z: np.sin(PI * z)
    t = time.perf_counter()
    counts = [winding_count(f, Rect.from_bounds(-K - 0.5, K + 0.5, -1, 1)) for K in range(1, 21)]
    elapsed = time.perf_counter() - t
    detail(f"elapsed {elapsed:.3f} s")
    assert counts == [2 * K + 1 for K in range(1, 21)]
    assert all(type(c) is int for c in counts)
    assert elapsed < 1.0


@pytest.mark.criterion(2, "10 random fixtures localize to n_max=400 with tail profile < 5% in < 30 s each")
def test_localization_fixtures(detail):
    worst_share, worst_time = 0.0, 0.0
    for seed in range(10):
        theta = random_theta(1000 + seed, seed % 2, M=16)
        assert theta.tail.norm() <= 1.0
        t = time.perf_counter()
        zs = localize_zeros(theta, 400).zeros
        worst_time = max(worst_time, time.perf_counter() - t)
        kappa, l2, _ = residuals(zs)
        share = np.sum(np.abs(kappa[zs.indices > 200]) ** 2) / (l2 * l2)
        worst_share = max(worst_share, share)
    detail(f"max tail share {worst_share:.2e}, max time {worst_time:.2f} s")
    assert worst_share < 0.05
    assert worst_time < 30


@pytest.mark.criterion(3, "ratio form within 1e-6 at 50 points (n_max=500); Hadamard within 3e-4 (n_max=2000)")
def test_product_forms(detail):
    theta = random_theta(3003, 1, M=16)
    zs = localize_zeros(theta, 4000).zeros
    part = zs.upto(500)
    rng = np.random.default_rng(3)
    pts = []
    while len(pts) < 50:
        z = complex(rng.uniform(-10, 10), rng.uniform(-2, 2))
        if np.abs(part.lattice - z).min() > 1 / 3:
            pts.append(z)
    pts = np.array(pts)
    val, bound = product_eval_ratio(theta.main, part, pts, tail_tol=1e-6, return_bound=True)
    ratio_err = float(np.max(np.abs(val / eval_theta(theta, pts) - 1)))
    # Hadamard truncation error grows like |z|^2 / n_max; test points sit in |z| <= 0.5
    r = 0.5 * np.sqrt(rng.uniform(size=10))
    zh = r * np.exp(2j * PI * rng.uniform(size=10))
    had = product_eval_hadamard(theta.main, zs, zh, 2000, tol=3e-4)
    had_err = float(np.max(np.abs(had / product_eval_ratio(theta.main, zs, zh) - 1)))
    detail(f"ratio err {ratio_err:.2e} (bound {bound.max():.1e}), hadamard err {had_err:.2e}")
    assert ratio_err < 1e-6
    assert had_err < 3e-4


@pytest.mark.criterion(4, "round trip K=129, M=32 mode error < 1e-5; head completion < 1e-6; deterministic")
def test_round_trip(detail):
    rng = np.random.default_rng(4004)
    main = main_part(1, zeros=[0.2 - 0.15j])
    theta = ThetaFunction(main, random_tail(rng, M=32, norm=0.9))
    zs = localize_zeros(theta, 129).zeros
    base = zs.base_part()
    assert len(base) == 129
    tail, _ = invert_to_tail(build_moment_system(base, main, 32))
    mode_err = float(np.max(np.abs(tail.coeffs - theta.tail.coeffs)))
    full = complete_zeros(base, main, 32)
    head_err = float(abs(full.zeros[0] - zs.zeros[0]))
    again = complete_zeros(base, main, 32)
    tail2, _ = invert_to_tail(build_moment_system(base, main, 32))
    same = np.array_equal(full.zeros, again.zeros) and np.array_equal(tail.coeffs, tail2.coeffs)
    detail(f"mode err {mode_err:.2e}, head err {head_err:.2e}, deterministic {same}")
    assert mode_err < 1e-5
    assert head_err < 1e-6
    assert same


@pytest.mark.criterion(5, "lattice frame ratio 1 within 1e-10; perturbed nodes keep m_est > 0.5 M_est")
def test_frame_diagnostic(detail):
    main = main_part(1)
    lat = ZeroSequence.lattice_of(main, 65)
    fr = frame_bounds_estimate(build_moment_system(lat, main, 32))
    worst = math.inf
    for seed in range(200):
        kappa = np.random.default_rng(seed).uniform(-0.1, 0.1, lat.indices.size)
        moved = lat.with_zeros(lat.lattice + kappa / lat.mu)
        worst = min(worst, frame_bounds_estimate(build_moment_system(moved, main, 32)).ratio)
    detail(f"lattice ratio - 1 = {fr.ratio - 1:.1e}, worst perturbed ratio {worst:.3f} over 200 seeds")
    assert abs(fr.ratio - 1) < 1e-10
    assert worst > 0.5


@pytest.mark.criterion(6, "stability ratios finite at r = 0.5, 1, 2 (200 trials); C_r stable under doubling")
def test_stability_harness(detail):
    main = main_part(1)
    t = time.perf_counter()
    lines, ok = [], True
    for r in (0.5, 1.0, 2.0):
        spec = BallSpec(r, 128)
        c200, recs = empirical_lipschitz(spec, 200, 6006, main, 32)
        c400, recs400 = empirical_lipschitz(spec, 400, 6006, main, 32)
        finite = all(math.isfinite(x.ratio) for x in recs + recs400) and len(recs) == 200
        rel = abs(c400 - c200) / c200
        ok &= finite and rel <= 0.25
        lines.append(f"r={r:g}: C={c200:.3g}->{c400:.3g}")
    elapsed = time.perf_counter() - t
    detail(", ".join(lines) + f", {elapsed:.1f} s")
    assert ok
    assert elapsed < 600


@pytest.mark.criterion(7, "Parseval within 1e-4 on 20 tails; shifted-line bound for y = 0.25, 0.5, 1")
def test_parseval_and_line_shift(detail):
    rng = np.random.default_rng(7007)
    worst_parseval, worst_slack = 0.0, 0.0
    for _ in range(20):
        tail = random_tail(rng, M=16)
        lhs, rhs = parseval_l2(tail)
        worst_parseval = max(worst_parseval, abs(lhs - rhs) / rhs)
        for y in (0.25, 0.5, 1.0):
            res = line_shift_check(tail, y)
            worst_slack = max(worst_slack, res.shifted_norm / res.bound)
    detail(f"max Parseval rel err {worst_parseval:.1e}, max shifted/bound {worst_slack:.3f}")
    assert worst_parseval < 1e-4
    assert worst_slack <= 1 + 1e-6


@pytest.mark.criterion(8, "sampled l2 partial sums bounded, nondecreasing, last decile < 5%")
def test_sampled_l2_bound(detail):
    rng = np.random.default_rng(8008)
    n = np.arange(1, 401)
    worst_share, worst_use = 0.0, 0.0
    ok = True
    for k in range(10):
        theta = random_theta(8100 + k, k % 2, M=8)
        shifts = 0.3 * (-1.0) ** n if k % 2 else 0.5 * rng.uniform(-1, 1, 400) + 0.5j * rng.uniform(-1, 1, 400)
        res = lemma1_check(theta, shifts, 400)
        ok &= res.holds and res.nondecreasing
        worst_share = max(worst_share, res.last_decile_share)
        worst_use = max(worst_use, res.partial_sums[-1] / res.bound)
    detail(f"max last-decile share {worst_share:.1e}, max sum/bound {worst_use:.1e}")
    assert ok
    assert worst_share < 0.05


@pytest.mark.criterion(9, "u = 2 eps cos x ratios finite and within factor 2; Lambda_1 unit value within 1e-12")
def test_sturm_liouville_experiment(detail):
    ratios = []
    for eps in (0.01, 0.1):
        res = theorem12_experiment(cosine_fixture_spectrum(eps, 100), Spectrum.unperturbed(100), 1, 32)
        ratios.append(res.ratio)
    nn = np.arange(1, 200_001, dtype=float)
    lam1 = Lambda(Spectrum(nn**2 + 1 / nn), Spectrum(nn**2), 1)
    detail(f"ratios {ratios[0]:.6f}, {ratios[1]:.6f}; Lambda_1 err {abs(lam1 - PI**2 / math.sqrt(90)):.1e}")
    assert all(math.isfinite(r) and r > 0 for r in ratios)
    assert max(ratios) / min(ratios) <= 2
    assert abs(lam1 - PI**2 / math.sqrt(90)) < 1e-12
