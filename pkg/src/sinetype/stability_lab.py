"""Empirical stability of tail recovery, Parseval and line-shift checks.

The tail transform of ``w = sum c_k e^{i pi k x / b}`` is

    F(z) = sin(bz) R(z),   R(z) = sum_k d_k / (z + a_k),

with ``d_k = 2 (-1)^k c_k`` and ``a_k = pi k / b``.  On a horizontal line
``|sin(b(x+iy))|^2 = (cosh 2by - cos 2bx) / 2``, so outside a window
``[-Z, Z]`` the non-oscillating part of ``|F|^2`` integrates exactly by
partial fractions and the oscillating part is bounded by
``D^2 / (b (Z - A)^2)``, ``D = sum |d_k|``, ``A = max |a_k|``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core_model import FourierTail, MainPart, ThetaFunction, ZeroSequence, eval_tail
from .errors import QuadratureTailTooLarge, ValidationError
from .reconstruction import build_moment_system, invert_to_tail, moment_rows

DENOMINATOR_FLOOR = 1e-14
SEED_STRIDE = 1_000_003
QUAD_TOL = 1e-6
Z_MAX = 1e6
GL_NODES = 24


def thread_count():
    """Worker cap from ``SINETYPE_THREADS`` (default: CPU count)."""
    raw = os.environ.get("SINETYPE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise ValidationError(f"SINETYPE_THREADS must be an integer, got {raw!r}") from exc
    return os.cpu_count() or 1


# ------------------------------------------------------------------ ball sampling


@dataclass(frozen=True)
class BallSpec:
    r: float
    n_max: int
    decay_exponent: float = 1.0

    def __post_init__(self):
        if self.r < 0:
            raise ValidationError("ball radius must be nonnegative")
        if self.n_max < 1:
            raise ValidationError("n_max must be >= 1")
        if self.decay_exponent < 0.5:
            raise ValidationError("decay exponent must be >= 0.5")


def sample_ball(spec: BallSpec, seed: int, main: MainPart) -> ZeroSequence:
    """Random zero sequence with residual norm ``r u``, ``u`` uniform in (0, 1].

    Residuals get independent uniform phases and moduli uniform under the
    envelope ``(position)^-decay``, position counted from the first head index.
    """
    rng = np.random.default_rng(seed)
    idx, z0, mu = main.lattice(spec.n_max)
    env = np.arange(1, idx.size + 1, dtype=float) ** (-spec.decay_exponent)
    amp = env * rng.uniform(0.0, 1.0, idx.size)
    phase = rng.uniform(0.0, 2 * math.pi, idx.size)
    u = 1.0 - rng.uniform()
    kappa = amp * np.exp(1j * phase)
    norm = np.linalg.norm(kappa)
    if spec.r == 0 or norm == 0:
        kappa = np.zeros_like(kappa)
    else:
        kappa *= spec.r * u / norm
    return ZeroSequence(idx, z0 + kappa / mu**main.N, z0, mu, main.N)


# ------------------------------------------------------------------ stability ratios


@dataclass(frozen=True)
class StabilityRecord:
    r: float
    numerator: float
    denominator: float
    ratio: float
    seed_a: int | None = None
    seed_b: int | None = None


def stability_ratio(zeros_a: ZeroSequence, zeros_b: ZeroSequence, main: MainPart, M: int,
                    seeds=(None, None)) -> StabilityRecord | None:
    """``||w_a - w_b|| / ||mu^N (z_a - z_b)||`` over ``n >= 1-N``.

    ``r`` records the larger residual norm of the two sequences.  Returns
    ``None`` when the denominator is below ``1e-14`` (the record is dropped).
    """
    if not np.array_equal(zeros_a.indices, zeros_b.indices):
        raise ValidationError("zero sequences must cover the same indices")
    r = max(np.linalg.norm(zeros_a.kappa), np.linalg.norm(zeros_b.kappa))
    den = float(np.linalg.norm(zeros_a.mu**main.N * (zeros_a.zeros - zeros_b.zeros)))
    if den < DENOMINATOR_FLOOR:
        return None
    wa, _ = invert_to_tail(build_moment_system(zeros_a, main, M))
    wb, _ = invert_to_tail(build_moment_system(zeros_b, main, M))
    num = (wa - wb).norm()
    return StabilityRecord(float(r), num, den, num / den, seeds[0], seeds[1])


def trial_seeds(seed: int, t: int):
    a = seed * SEED_STRIDE + 2 * t
    return a, a + 1


def empirical_lipschitz(spec: BallSpec, trials: int, seed: int, main: MainPart, M: int,
                        threads: int | None = None):
    """Largest stability ratio over ``trials`` independent pairs; returns (C_r_est, records).

    Pair ``t`` uses seeds ``seed * 1000003 + 2t`` and that plus one, so runs
    with more trials extend runs with fewer.  Dropped records are omitted.
    """
    if trials < 2:
        raise ValidationError("need at least two trials")

    def one(t):
        sa, sb = trial_seeds(seed, t)
        return stability_ratio(sample_ball(spec, sa, main), sample_ball(spec, sb, main), main, M,
                               seeds=(sa, sb))

    workers = min(threads or thread_count(), trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, range(trials)))
    else:
        out = [one(t) for t in range(trials)]
    records = [rec for rec in out if rec is not None]
    c_r = max((rec.ratio for rec in records), default=0.0)
    return c_r, records


def summarize(records):
    """(count, max, mean, population stddev) of the ratios."""
    ratios = np.array([rec.ratio for rec in records], dtype=float)
    if ratios.size == 0:
        return 0, 0.0, 0.0, 0.0
    return int(ratios.size), float(ratios.max()), float(ratios.mean()), float(ratios.std())


# ------------------------------------------------------------------ line integrals


def _pole_data(tail: FourierTail):
    keep = tail.coeffs != 0
    ks = tail.ks[keep]
    d = 2.0 * np.where(ks % 2 == 0, 1.0, -1.0) * tail.coeffs[keep]
    a = ks * (math.pi / tail.b)
    return d, a.astype(float)


def _half_line(Z, p, q):
    """``int_Z^inf dx / ((x + p)(x + q))`` for complex shifts with ``Z + Re p, Z + Re q > 0``."""
    diff = p - q
    base = Z + q
    small = np.abs(diff) < 1e-8 * np.abs(base)
    safe = np.where(small, 1.0, diff)
    val = np.log1p(diff / base) / safe
    approx = 1.0 / base - diff / (2 * base * base)
    return np.where(small, approx, val)


def _outer_mean(tail: FourierTail, Z: float, y: float):
    """Exact ``(1/2) int_{|x| > Z} |R(x + iy)|^2 dx``."""
    d, a = _pole_data(tail)
    if d.size == 0:
        return 0.0
    P = a[:, None] + 1j * y
    Q = a[None, :] - 1j * y
    right = _half_line(Z, P, Q)
    left = _half_line(Z, -P, -Q)
    W = d[:, None] * np.conj(d)[None, :]
    return 0.5 * float(np.real(np.sum(W * (right + left))))


def _osc_bound(tail: FourierTail, Z: float):
    d, a = _pole_data(tail)
    if d.size == 0:
        return 0.0
    D = float(np.abs(d).sum())
    A = float(np.abs(a).max())
    return D * D / (tail.b * (Z - A) ** 2)


def _window(tail: FourierTail, tol: float, y: float = 0.0):
    """Half-width Z making the oscillating remainder bound below ``tol`` times the line energy.

    The energy on ``Im z = y`` comes from the closed form; it only sizes the window.
    """
    d, a = _pole_data(tail)
    energy = shifted_energy_exact(tail, y)
    D = float(np.abs(d).sum())
    A = float(np.abs(a).max()) if a.size else 0.0
    Z = A + 1.0 + D / math.sqrt(tail.b * tol * energy)
    # panel boundaries on half-periods of sin(bx)
    step = math.pi / tail.b
    return min(math.ceil(Z / step) * step, Z_MAX)


def _window_integral(tail: FourierTail, Z: float, y: float, nodes=GL_NODES):
    """Gauss-Legendre panels of width pi/b for ``int_{-Z}^{Z} |F(x + iy)|^2 dx``."""
    step = math.pi / tail.b
    n = int(round(2 * Z / step))
    t, wts = np.polynomial.legendre.leggauss(nodes)
    left = -Z + step * np.arange(n)
    x = (left[:, None] + 0.5 * step * (t[None, :] + 1.0)).ravel()
    vals = np.abs(eval_tail(tail, x + 1j * y)) ** 2
    return float(0.5 * step * np.sum(vals.reshape(n, nodes) * wts[None, :]))


def _line_integral(tail: FourierTail, y: float, tol: float):
    if not tail.modes():
        return 0.0
    Z = _window(tail, tol, y)
    inner = _window_integral(tail, Z, y)
    outer = math.cosh(2 * tail.b * y) * _outer_mean(tail, Z, y)
    total = inner + outer
    rem = _osc_bound(tail, Z)
    if rem > tol * total:
        raise QuadratureTailTooLarge(f"remainder bound {rem:.3g} exceeds {tol:g} of {total:.3g}")
    return total


def parseval_l2(tail_diff: FourierTail, tol: float = QUAD_TOL):
    """(``int_R |F(x)|^2 dx`` by quadrature plus exact outer part, ``2 pi ||w||^2``)."""
    lhs = _line_integral(tail_diff, 0.0, tol)
    rhs = 2 * math.pi * tail_diff.norm() ** 2
    return lhs, rhs


@dataclass(frozen=True)
class LineShiftResult:
    shifted_norm: float
    bound: float

    @property
    def holds(self):
        return self.shifted_norm <= self.bound * (1 + 1e-6)


def line_shift_check(tail_diff: FourierTail, y: float, tol: float = QUAD_TOL) -> LineShiftResult:
    """``int |F(x + iy)|^2 dx`` against ``e^{2b|y|} int |F(x)|^2 dx``."""
    shifted = _line_integral(tail_diff, float(y), tol)
    real = _line_integral(tail_diff, 0.0, tol)
    return LineShiftResult(shifted, math.exp(2 * tail_diff.b * abs(y)) * real)


def shifted_energy_exact(tail: FourierTail, y: float) -> float:
    """``2 pi int |w(t)|^2 e^{-2yt} dt`` from the modes (closed form)."""
    c = tail.coeffs
    a = tail.shifts
    b = tail.b
    rate = 1j * (a[:, None] - a[None, :]) - 2 * y
    with np.errstate(invalid="ignore", divide="ignore"):
        integ = np.where(np.abs(rate) > 0, (np.exp(rate * b) - np.exp(-rate * b)) / rate, 2 * b)
    return float(2 * math.pi * np.real(np.sum(c[:, None] * np.conj(c)[None, :] * integ)))


# ------------------------------------------------------------------ sampled l2 bound


@dataclass(frozen=True, eq=False)
class Lemma1Result:
    partial_sums: np.ndarray
    bound: float
    M_frame: float
    C: float

    @property
    def nondecreasing(self):
        return bool(np.all(np.diff(self.partial_sums) >= 0))

    @property
    def last_decile_share(self):
        s = self.partial_sums
        if s.size == 0 or s[-1] == 0:
            return 0.0
        cut = s[int(math.floor(0.9 * s.size)) - 1] if s.size >= 10 else 0.0
        return float((s[-1] - cut) / s[-1])

    @property
    def holds(self):
        return bool(self.partial_sums.size == 0 or self.partial_sums[-1] <= self.bound)


def lemma1_check(theta: ThetaFunction, shifts, n_max: int) -> Lemma1Result:
    """Cumulative ``sum_{n<=k} |f(z_n^0 + alpha_n)|^2`` with ``f = theta - S``.

    The bound is ``C M_frame e^{b^2} ||w||^2`` with ``C = sup exp(|alpha_n|^2)``
    and ``M_frame`` the upper frame estimate of the lattice moment matrix.
    """
    alpha = np.broadcast_to(np.asarray(shifts, dtype=np.complex128), (n_max,))
    base = theta.main.base
    z0 = base.lattice(np.arange(1, n_max + 1))
    vals = eval_tail(theta.tail, z0 + alpha)
    partial = np.cumsum(np.abs(vals) ** 2)
    M = theta.tail.M
    A, _ = moment_rows(theta.main, z0, np.zeros(n_max, dtype=np.int64), M)
    M_frame = float(np.linalg.norm(A, 2) ** 2 / (2 * theta.b))
    C = float(np.exp(np.max(np.abs(alpha)) ** 2)) if n_max else 1.0
    bound = C * M_frame * math.exp(theta.b**2) * theta.tail.norm() ** 2
    return Lemma1Result(partial, bound, M_frame, C)
