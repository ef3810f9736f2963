import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sinetype import FourierTail, Rect, Spectrum, eval_tail, spectrum_to_zeros, winding_count, zeros_to_spectrum
from sinetype.io import fmt

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
coeffs = st.lists(cplx, min_size=1, max_size=7).filter(lambda c: len(c) % 2 == 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=6), finite, finite, st.floats(0.3, 4), st.floats(0.3, 4))
def test_winding_counts_polynomial_roots(roots, x0, y0, w, h):
    rect = Rect.from_bounds(x0, x0 + w, y0, y0 + h)
    r = np.array(roots)
    lo, hi = rect.lo, rect.hi
    gap = np.minimum.reduce([np.abs(r.real - lo.real), np.abs(r.real - hi.real),
                             np.abs(r.imag - lo.imag), np.abs(r.imag - hi.imag)])
    assume(gap.min() > 1e-3)
    f = lambda z: np.prod(z[..., None] - r, axis=-1)
    assert winding_count(f, rect) == int(rect.contains(r).sum())


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, st.floats(0.5, 4), cplx)
def test_tail_transform_is_linear(a, b, bb, z):
    ta, tb = FourierTail(bb, a), FourierTail(bb, b)
    lhs = eval_tail(ta + tb, z)
    rhs = eval_tail(ta, z) + eval_tail(tb, z)
    scale = (np.abs(a).sum() + np.abs(b).sum()) * 2 * bb * math.exp(bb * abs(z.imag))
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5), st.floats(-20, 20))
def test_even_real_tail_is_real_on_axis(half, x):
    c = np.array(half[::-1] + half[1:], dtype=complex)
    assert abs(eval_tail(FourierTail(math.pi, c), x).imag) < 1e-12 * (1 + np.abs(c).sum())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.4, 0.4), min_size=1, max_size=30), st.sampled_from([0, 1]))
def test_spectrum_zero_round_trip(shift, N):
    n = np.arange(1, len(shift) + 1, dtype=float)
    lam = n**2 + np.array(shift)
    back = zeros_to_spectrum(spectrum_to_zeros(Spectrum(lam), N)).eigenvalues
    assert np.allclose(back, lam, rtol=1e-13, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20), st.sampled_from([0, 1]))
def test_lambda_metric_triangle(rows, j):
    a = Spectrum([r[0] for r in rows])
    b = Spectrum([r[1] for r in rows])
    c = Spectrum([r[2] for r in rows])
    assert a.Lambda(b, j) == b.Lambda(a, j)
    assert a.Lambda(c, j) <= a.Lambda(b, j) + b.Lambda(c, j) + 1e-12


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_float_format_is_lossless(x):
    assert float(fmt(x)) == x
