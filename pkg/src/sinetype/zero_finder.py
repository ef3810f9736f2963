"""Zero localisation: argument-principle counts on rectangles, Newton polishing.

Counting tracks the continuous argument of ``f`` along the boundary with
adaptive bisection until every phase increment is below pi/2, so no
derivative of ``f`` is needed on the contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core_model import MainPart, ThetaFunction, ZeroSequence
from .errors import (
    BoundaryTooClose,
    CountMismatch,
    LeftTrustRegion,
    MaxIterations,
    NoConvergence,
    ValidationError,
)

CLEARANCE = 1e-12
DILATION = 0.017
DILATION_RETRIES = 3
CLUSTER_TOL = 1e-7
SPLIT_FRACTIONS = (0.4871, 0.5237, 0.4619, 0.5413, 0.4383, 0.5671)
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Rect:
    lo: complex
    hi: complex

    def __post_init__(self):
        lo, hi = complex(self.lo), complex(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise ValidationError(f"degenerate rectangle {lo} .. {hi}")

    @classmethod
    def from_bounds(cls, x0, x1, y0, y1):
        return cls(complex(x0, y0), complex(x1, y1))

    @classmethod
    def square(cls, center, half):
        center = complex(center)
        return cls(center - half * (1 + 1j), center + half * (1 + 1j))

    @property
    def width(self):
        return self.hi.real - self.lo.real

    @property
    def height(self):
        return self.hi.imag - self.lo.imag

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def half_diagonal(self):
        return 0.5 * abs(self.hi - self.lo)

    def corners(self):
        lo, hi = self.lo, self.hi
        return np.array([lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)])

    def contains(self, z, margin=0.0):
        z = np.asarray(z)
        return ((z.real > self.lo.real + margin) & (z.real < self.hi.real - margin)
                & (z.imag > self.lo.imag + margin) & (z.imag < self.hi.imag - margin))

    def dilated(self, factor):
        c = self.center
        return Rect(c + (self.lo - c) * (1 + factor), c + (self.hi - c) * (1 + factor))

    def split(self, frac):
        if self.width >= self.height:
            xm = self.lo.real + frac * self.width
            return (Rect(self.lo, complex(xm, self.hi.imag)),
                    Rect(complex(xm, self.lo.imag), self.hi))
        ym = self.lo.imag + frac * self.height
        return (Rect(self.lo, complex(self.hi.real, ym)),
                Rect(complex(self.lo.real, ym), self.hi))

    def boundary(self, t):
        """Counter-clockwise boundary parametrised by ``t`` in [0, 4)."""
        c = self.corners()
        e = np.minimum(np.floor(t).astype(np.int64), 3)
        s = t - e
        return c[e] + s * (c[(e + 1) % 4] - c[e])


def _as_evaluator(f):
    if isinstance(f, ThetaFunction):
        return lambda z: f(z, 0)
    return f


def _winding(f, rect, spacing=None, max_rounds=48, max_points=4_000_000):
    """Winding number of ``f`` on ``rect`` and the boundary clearance min|f|/max|f|."""
    if spacing is None:
        spacing = (rect.width + rect.height) / 64
    nw = max(8, int(math.ceil(rect.width / spacing)))
    nh = max(8, int(math.ceil(rect.height / spacing)))
    t = np.concatenate([np.arange(nw) / nw, 1 + np.arange(nh) / nh,
                        2 + np.arange(nw) / nw, 3 + np.arange(nh) / nh])
    v = np.asarray(f(rect.boundary(t)), dtype=np.complex128)
    for _ in range(max_rounds):
        mag = np.abs(v)
        scale = mag.max()
        if not np.all(np.isfinite(v)) or scale == 0:
            raise NoConvergence("non-finite or vanishing values on the contour")
        if mag.min() < CLEARANCE * scale:
            raise BoundaryTooClose(f"zero on or near the boundary of {rect}")
        d = np.angle(np.roll(v, -1) / v)
        bad = np.abs(d) >= 0.5 * math.pi
        if not bad.any():
            total = d.sum() / (2 * math.pi)
            n = int(round(total))
            if abs(total - n) > 1e-3 or n < 0:
                raise NoConvergence(f"non-integral winding {total}")
            return n, float(mag.min() / scale)
        tn = np.roll(t, -1)
        tn[-1] += 4.0
        mid = (0.5 * (t[bad] + tn[bad])) % 4.0
        vm = np.asarray(f(rect.boundary(mid)), dtype=np.complex128)
        t = np.concatenate([t, mid])
        v = np.concatenate([v, vm])
        order = np.argsort(t, kind="stable")
        t, v = t[order], v[order]
        if t.size > max_points:
            break
    raise NoConvergence("phase refinement exceeded its depth limit")


def winding_count(f, rect: Rect, *, spacing=None) -> int:
    """Number of zeros of ``f`` inside ``rect`` counted with multiplicity.

    ``f`` maps complex arrays to complex arrays (a :class:`ThetaFunction`
    also works).  Raises :class:`BoundaryTooClose` when ``|f|`` on the
    sampled boundary drops below ``1e-12`` times its maximum there.
    """
    return _winding(_as_evaluator(f), rect, spacing)[0]


def _count_with_retries(f, rect, spacing=None, retries=DILATION_RETRIES):
    """Winding count, dilating the rectangle by 1.7% on boundary trouble."""
    for attempt in range(retries + 1):
        try:
            n, clear = _winding(f, rect, spacing)
            return n, rect, clear
        except BoundaryTooClose:
            if attempt == retries:
                raise
            rect = rect.dilated(DILATION)


def _call(theta, z, nu):
    return theta(z, nu)


def _newton(fd, z0, radius, maxit=60):
    """Trust-region Newton; returns (z, iterations) or (None, iterations)."""
    z = complex(z0)
    for it in range(maxit):
        fz = complex(fd(z, 0))
        fp = complex(fd(z, 1))
        if fp == 0 or not (np.isfinite(fz) and np.isfinite(fp)):
            return None, it
        converged = abs(fz) < 1e-12 * max(1.0, abs(fp) * radius)
        step = fz / fp
        if abs(step) > 0.5 * radius:
            step *= 0.5 * radius / abs(step)
        z_new = z - step
        if abs(z_new - z0) > radius:
            return None, it + 1
        z = z_new
        if converged or abs(step) <= 8 * _EPS * max(1.0, abs(z)):
            return z, it + 1
    return None, maxit


def refine_zero(theta, z0, trust_radius: float, *, maxit=60) -> complex:
    """Polish the single simple zero inside ``|z - z0| <= trust_radius``.

    Newton steps are clamped to half the trust radius.  When Newton stalls or
    leaves the disk, the circumscribed square is subdivided with winding
    counts and Newton restarts on the piece holding the zero.
    """
    z, _ = _refine(theta, z0, trust_radius, maxit)
    return z


def _refine(theta, z0, radius, maxit=60, spacing=None):
    z, it = _newton(theta, z0, radius, maxit)
    if z is not None:
        return z, it
    square = Rect.square(z0, radius)
    try:
        count, square, _ = _count_with_retries(lambda w: theta(w, 0), square, spacing)
    except NoConvergence as exc:
        raise MaxIterations(f"no convergence near {z0}") from exc
    if count == 0:
        raise LeftTrustRegion(f"no zero within {radius} of {z0}")
    found = _extract(theta, square, count, spacing)
    inside = [w for w in found if abs(w - z0) <= radius * math.sqrt(2)]
    if not inside:
        raise LeftTrustRegion(f"no zero within {radius} of {z0}")
    best = min(inside, key=lambda w: abs(w - z0))
    return best, it + maxit


def _try_multiple(theta, rect, m, spacing):
    c = rect.center
    half = rect.half_diagonal
    if m == 2:
        z, _ = _newton(lambda w, nu: theta(w, nu + 1), c, half)
    else:
        z = c
        for _ in range(80):
            fz, fp = complex(theta(z, 0)), complex(theta(z, 1))
            if fp == 0:
                break
            step = m * fz / fp
            z -= step
            if abs(step) <= 8 * _EPS * max(1.0, abs(z)):
                break
    if z is None or not rect.contains(z):
        return None
    tiny = Rect.square(z, CLUSTER_TOL * max(1.0, abs(z)))
    try:
        n, _ = _winding(lambda w: theta(w, 0), tiny)
    except (BoundaryTooClose, NoConvergence):
        return None
    return z if n == m else None


def _split_counts(theta, rect, m, spacing):
    f = lambda w: theta(w, 0)  # noqa: E731
    for frac in SPLIT_FRACTIONS:
        a, b = rect.split(frac)
        try:
            na, _ = _winding(f, a, spacing)
            nb, _ = _winding(f, b, spacing)
        except BoundaryTooClose:
            continue
        if na + nb == m:
            return [(a, na), (b, nb)]
    raise CountMismatch(f"subdivision of {rect} does not conserve the count {m}")


def _extract(theta, rect, count, spacing=None, max_depth=90):
    """All zeros inside ``rect`` (``count`` of them) by recursive subdivision."""
    out = []
    stack = [(rect, count, 0)]
    while stack:
        r, m, depth = stack.pop()
        if m == 0:
            continue
        if depth > max_depth:
            raise NoConvergence("subdivision depth exceeded")
        if m == 1:
            z, _ = _newton(theta, r.center, r.half_diagonal)
            if z is not None and r.contains(z):
                out.append(z)
                continue
        else:
            z = _try_multiple(theta, r, m, spacing)
            if z is not None:
                out.extend([z] * m)
                continue
        for child, k in _split_counts(theta, r, m, spacing):
            stack.append((child, k, depth + 1))
    return out


# ------------------------------------------------------------------ localisation


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    zeros: ZeroSequence
    head_count: int
    head_rect: Rect
    iterations: np.ndarray
    head_clearance: float
    disk_clearance: float
    global_count: int


def _clear_edges(rect, main: MainPart, clear):
    """Push edges outward until no base lattice point lies within ``clear`` of them."""
    x0, x1, y0, y1 = rect.lo.real, rect.hi.real, rect.lo.imag, rect.hi.imag
    for _ in range(256):
        radius = abs(complex(max(abs(x0), abs(x1)), max(abs(y0), abs(y1)))) + 2 * clear
        _, pts = main.base.points_within(radius)
        xin = (pts.real > x0 - clear) & (pts.real < x1 + clear)
        yin = (pts.imag > y0 - clear) & (pts.imag < y1 + clear)
        moved = False
        if np.any(yin & (np.abs(pts.real - x0) < clear)):
            x0 -= clear / 2
            moved = True
        if np.any(yin & (np.abs(pts.real - x1) < clear)):
            x1 += clear / 2
            moved = True
        if np.any(xin & (np.abs(pts.imag - y0) < clear)):
            y0 -= clear / 2
            moved = True
        if np.any(xin & (np.abs(pts.imag - y1) < clear)):
            y1 += clear / 2
            moved = True
        if not moved:
            return Rect.from_bounds(x0, x1, y0, y1)
    raise NoConvergence("could not place rectangle edges away from the lattice")


def _head_rect(main: MainPart, radius, vpad):
    h = main.base.separation
    _, pts = main.base.points_within(radius)
    pts = np.concatenate([pts, main.poly_zeros, [0j]])
    rect = Rect.from_bounds(pts.real.min() - h / 2, pts.real.max() + h / 2,
                            pts.imag.min() - vpad, pts.imag.max() + vpad)
    return _clear_edges(rect, main, 0.45 * h)


def _lattice_inside(main: MainPart, rect):
    radius = abs(complex(max(abs(rect.lo.real), abs(rect.hi.real)),
                         max(abs(rect.lo.imag), abs(rect.hi.imag))))
    idx, pts = main.base.points_within(radius)
    inside = rect.contains(pts)
    return idx[inside], pts[inside]


def _square_offsets(half, per_side=16):
    s = (np.arange(per_side) / per_side) * 2 - 1
    return half * np.concatenate([s - 1j, 1 + 1j * s, -s + 1j, -1 - 1j * s])


def disk_counts(theta, centers, half, spacing=None):
    """Zero counts in squares of half-side ``half`` around each centre (batched)."""
    centers = np.asarray(centers, dtype=np.complex128)
    counts = np.zeros(centers.size, dtype=np.int64)
    clear = np.ones(centers.size)
    if centers.size == 0:
        return counts, clear
    off = _square_offsets(half)
    v = theta((centers[:, None] + off[None, :]).ravel(), 0).reshape(centers.size, off.size)
    mag = np.abs(v)
    scale = mag.max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.angle(np.roll(v, -1, axis=1) / v)
    good = (np.all(np.abs(d) < 0.5 * math.pi, axis=1) & (mag.min(axis=1) >= CLEARANCE * scale)
            & np.all(np.isfinite(v), axis=1))
    counts[good] = np.rint(d[good].sum(axis=1) / (2 * math.pi)).astype(np.int64)
    clear[good] = mag[good].min(axis=1) / scale[good]
    f = lambda w: theta(w, 0)  # noqa: E731
    for i in np.flatnonzero(~good):
        try:
            counts[i], _, clear[i] = _count_with_retries(f, Rect.square(centers[i], half), spacing)
        except (BoundaryTooClose, NoConvergence):
            counts[i] = -1
            clear[i] = 0.0
    return counts, clear


def batch_newton(theta, centers, half, maxit=60):
    """Newton from every centre at once; returns zeros, iteration counts, failure mask."""
    centers = np.asarray(centers, dtype=np.complex128)
    z = centers.copy()
    iters = np.zeros(centers.size, dtype=np.int64)
    active = np.ones(centers.size, dtype=bool)
    failed = np.zeros(centers.size, dtype=bool)
    radius = half * math.sqrt(2)
    for it in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zz = z[idx]
        fz = theta(zz, 0)
        fp = theta(zz, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = fz / fp
        bad = ~np.isfinite(step)
        conv = np.abs(fz) < 1e-12 * np.maximum(1.0, np.abs(fp) * radius)
        big = np.abs(step) > 0.5 * radius
        step[big] *= 0.5 * radius / np.abs(step[big])
        step[bad] = 0
        znew = zz - step
        tiny = np.abs(step) <= 8 * _EPS * np.maximum(1.0, np.abs(znew))
        z[idx] = znew
        iters[idx] = it + 1
        done = conv | tiny | bad
        failed[idx[bad]] = True
        active[idx[done]] = False
    failed |= active
    failed |= (np.abs((z - centers).real) > half) | (np.abs((z - centers).imag) > half)
    return z, iters, failed


def localize_zeros(theta: ThetaFunction, n_max: int, *, max_growth=400) -> LocalizationReport:
    """Zeros ``z_n``, ``n = 1-N .. n_max``, aligned to the lattice of ``theta.main``.

    A head rectangle around the polynomial zeros is grown until its winding
    count equals the number of lattice points inside and every lattice
    point outside it (up to ``n_max``) holds exactly one zero in its trust
    square of half-side separation/3.  Head zeros come from subdivision,
    tail zeros from batched Newton; head zeros are matched to head lattice
    points by minimal total squared distance.
    """
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    main = theta.main
    N = main.N
    h = main.base.separation
    half = h / 3
    spacing = min(h, math.pi / main.b) / 4

    all_idx = np.arange(1, n_max + 1)
    all_pts = main.base.lattice(all_idx)
    counts, dclear = disk_counts(theta, all_pts, half, spacing)
    bad = counts != 1
    pz = np.abs(main.poly_zeros)
    radius = max(pz.max() if pz.size else 0.0, np.abs(all_pts[bad]).max() if bad.any() else 0.0)
    vpad = h / 2

    for _ in range(max_growth):
        rect = _head_rect(main, radius, vpad)
        head_count, rect, hclear = _count_with_retries(theta, rect, spacing)
        head_idx, head_pts = _lattice_inside(main, rect)
        lattice_count = N + head_idx.size
        if head_count == lattice_count:
            in_head = np.isin(all_idx, head_idx)
            if np.all(counts[~in_head] == 1):
                break
            radius = max(radius, np.abs(all_pts[~in_head & bad]).max())
        radius += h
        vpad += h / 2
    else:
        raise CountMismatch("head winding count never matched the lattice count")

    in_head = np.isin(all_idx, head_idx)
    tail_idx = all_idx[~in_head]
    tail_pts = all_pts[~in_head]
    tz, titer, tfail = batch_newton(theta, tail_pts, half)
    for i in np.flatnonzero(tfail):
        tz[i], titer[i] = _refine(theta, tail_pts[i], half, spacing=spacing)

    gcount = _global_check(theta, main, rect, tail_pts, half, spacing)

    found = _extract(theta, rect, head_count, spacing)
    lattice_head = np.concatenate([main.poly_zeros, head_pts])
    lattice_head_idx = np.concatenate([np.arange(1 - N, 1), head_idx])
    cost = np.abs(np.asarray(found)[:, None] - lattice_head[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    head_zero = np.empty(lattice_head.size, dtype=np.complex128)
    head_zero[cols] = np.asarray(found)[rows]

    idx, z0, m = main.lattice(n_max)
    zeros = np.empty(idx.size, dtype=np.complex128)
    iters = np.zeros(idx.size, dtype=np.int64)
    pos = idx + N - 1
    keep = lattice_head_idx <= n_max
    zeros[pos[lattice_head_idx[keep] + N - 1]] = head_zero[keep]
    zeros[tail_idx + N - 1] = tz
    iters[tail_idx + N - 1] = titer
    seq = ZeroSequence(idx, zeros, z0, m, N)
    return LocalizationReport(seq, head_count, rect, iters, hclear,
                              float(dclear[~in_head].min()) if tail_idx.size else 1.0, gcount)


def _global_check(theta, main, head_rect, tail_pts, half, spacing):
    """Winding count on a rectangle covering the head and all trust squares."""
    h = main.base.separation
    xs = np.concatenate([[head_rect.lo.real, head_rect.hi.real], tail_pts.real - h / 2,
                         tail_pts.real + h / 2])
    ys = np.concatenate([[head_rect.lo.imag, head_rect.hi.imag], tail_pts.imag - h / 2,
                         tail_pts.imag + h / 2])
    big = _clear_edges(Rect.from_bounds(xs.min(), xs.max(), ys.min(), ys.max()), main, 0.45 * h)
    count, big, _ = _count_with_retries(theta, big, spacing)
    inside_idx, _ = _lattice_inside(main, big)
    expected = main.N + inside_idx.size
    if count != expected:
        raise CountMismatch(f"global count {count} differs from lattice count {expected}")
    return count


def residuals(zeros: ZeroSequence):
    """``kappa_n = mu_n^N (z_n - z_n^0)``, its l2 norm and tail sums ``sum_{m > n} |kappa_m|^2``."""
    kappa = zeros.kappa
    sq = np.abs(kappa) ** 2
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]])
    return kappa, float(np.sqrt(sq.sum())), tail
