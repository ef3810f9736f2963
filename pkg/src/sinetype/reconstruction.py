"""Rebuilding theta from its zeros and recovering the tail.

Two product forms are provided.  The ratio form

    theta(z) = S(z) prod_n (z_n - z) / (z_n^0 - z)

converges fast because factors differ from 1 only where zeros moved.  The
canonical form alpha e^{beta z} prod_n ((z_n - z)/mu_n) e^{z/mu_n} uses the
leading data of ``S`` and converges like ``|z|^2 / n_max``.

The tail is recovered from the moment equations

    int w(x) (ix)^nu e^{i z_k x} dx = -S^(nu)(z_k)

over distinct zeros ``z_k`` with ``k >= 1`` (``nu`` below the multiplicity),
solved by QR least squares in the mode basis of :class:`FourierTail`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .core_model import FourierTail, MainPart, ThetaFunction, ZeroSequence
from .errors import (
    CountMismatch,
    FitDiverged,
    IllConditioned,
    InsufficientZeros,
    NearLatticePole,
    SlowConvergence,
    TailBoundExceeded,
    ValidationError,
)
from .zero_finder import Rect, _clear_edges, _count_with_retries, _extract, _lattice_inside

CLUSTER_TOL = 1e-7
FRAME_FLOOR = 1e-8
POLE_TOL = 1e-12
TAIL_SUM_TERMS = 100_000


# ------------------------------------------------------------------ products


def _as_points(z):
    arr = np.asarray(z, dtype=np.complex128)
    return arr.ravel(), arr.ndim == 0, arr.shape


def lattice_tail_sum(main: MainPart, n_max: int, z):
    """Upper bound for ``sum_{n > n_max} 1 / |mu_n^N (z_n^0 - z)|^2`` at each ``z``.

    Sums explicitly over the next ``TAIL_SUM_TERMS`` lattice points and
    bounds the rest by an integral, using that the base lattice beyond
    index ``2k`` lies outside radius ``k * separation``.
    """
    pts, scalar, shape = _as_points(z)
    N = main.N
    idx = np.arange(n_max + 1, n_max + TAIL_SUM_TERMS + 1)
    z0 = main.base.lattice(idx)
    mu = np.where(z0 != 0, z0, -1.0)
    w = np.abs(mu) ** (2 * N)
    out = np.empty(pts.size)
    h = main.base.separation
    kk = (idx[-1] // 2) - 1
    for i, p in enumerate(pts):
        d = np.abs(z0 - p)
        out[i] = math.fsum(1.0 / (w * d * d))
        gap = kk * h - abs(p)
        out[i] += 2.0 / (h * (2 * N + 1) * gap ** (2 * N + 1)) if gap > 0 else math.inf
    return out[0] if scalar else out.reshape(shape)


def default_kappa_tail(zeros: ZeroSequence) -> float:
    """Proxy for the l2 norm of the residuals beyond ``n_max``.

    The residuals beyond the last computed index are unknown; the norm over
    the upper half of the available indices is used in their place.
    """
    kappa = zeros.kappa
    return float(np.linalg.norm(kappa[kappa.size // 2:]))


def product_eval_ratio(main: MainPart, zeros: ZeroSequence, z, tail_tol: float = 1e-6,
                       kappa_tail: float | None = None, return_bound: bool = False):
    """``S(z) prod_{n=1-N}^{n_max} (z_n - z)/(z_n^0 - z)`` with a certified truncation bound.

    The bound on the log of the omitted factors is
    ``kappa_tail * sqrt(sum_{n > n_max} |mu_n^N (z_n^0 - z)|^-2)``; the
    returned relative bound is ``expm1`` of that.  Raises
    :class:`TailBoundExceeded` when it is not below ``tail_tol``.
    """
    pts, scalar, shape = _as_points(z)
    if zeros.N != main.N:
        raise ValidationError("zero sequence and main part differ in N")
    d = np.abs(zeros.lattice[None, :] - pts[:, None]) if zeros.lattice.size else np.ones((pts.size, 1))
    if d.min() < POLE_TOL * max(1.0, float(np.abs(pts).max())):
        raise NearLatticePole("evaluation point coincides with a lattice point")
    if kappa_tail is None:
        kappa_tail = default_kappa_tail(zeros)
    bound = np.expm1(kappa_tail * np.sqrt(lattice_tail_sum(main, zeros.n_max, pts)))
    if np.any(bound >= tail_tol):
        raise TailBoundExceeded(f"truncation bound {bound.max():.3g} >= {tail_tol:.3g}; raise n_max")
    logs = _kernels.log_ratio_sum(pts, zeros.zeros, zeros.lattice)
    vals = main(pts) * np.exp(logs)
    vals = vals.reshape(shape)
    bound = bound.reshape(shape)
    if scalar:
        vals, bound = complex(vals), float(bound)
    return (vals, bound) if return_bound else vals


def _hadamard(main, zeros, pts, n_max):
    part = zeros.upto(n_max)
    lead = main.leading
    logs = _kernels.log_hadamard_sum(pts, part.zeros, part.mu)
    return lead.alpha * np.exp(lead.beta * pts + logs)


def product_eval_hadamard(main: MainPart, zeros: ZeroSequence, z, n_max: int | None = None,
                          tol: float | None = None):
    """``alpha e^{beta z} prod_{n=1-N}^{n_max} ((z_n - z)/mu_n) e^{z/mu_n}``.

    With ``tol`` set, the truncation at ``n_max`` is compared with the one at
    ``2 n_max`` (which must be available) and :class:`SlowConvergence` is
    raised when they differ by more than ``tol`` relative to the value.
    """
    pts, scalar, shape = _as_points(z)
    n_max = zeros.n_max if n_max is None else int(n_max)
    if n_max > zeros.n_max:
        raise InsufficientZeros(f"need zeros up to {n_max}, have {zeros.n_max}")
    vals = _hadamard(main, zeros, pts, n_max)
    if tol is not None:
        if 2 * n_max > zeros.n_max:
            raise InsufficientZeros(f"convergence check needs zeros up to {2 * n_max}")
        ref = _hadamard(main, zeros, pts, 2 * n_max)
        diff = np.abs(vals - ref) / np.maximum(np.abs(ref), 1e-300)
        if np.any(diff > tol):
            raise SlowConvergence(f"truncations {n_max} and {2 * n_max} differ by {diff.max():.3g}")
    vals = vals.reshape(shape)
    return complex(vals) if scalar else vals


# ------------------------------------------------------------------ moment system


@dataclass(frozen=True, eq=False)
class MomentSystem:
    nodes: np.ndarray       # one entry per row
    nus: np.ndarray         # derivative order per row
    indices: np.ndarray     # zero index of each row (first index of its cluster + nu)
    matrix: np.ndarray
    rhs: np.ndarray
    b: float
    M: int

    @property
    def K(self):
        return int(self.rhs.size)


@dataclass(frozen=True)
class FrameEstimate:
    m_est: float
    M_est: float

    @property
    def ratio(self):
        return self.m_est / self.M_est if self.M_est > 0 else 0.0


def cluster_nodes(zeros, tol=CLUSTER_TOL):
    """Group consecutive zeros closer than ``tol`` (relative to max(1,|z|)).

    Returns (distinct nodes, multiplicities, first position of each cluster).
    """
    zeros = np.asarray(zeros, dtype=np.complex128)
    nodes = np.empty(zeros.size, dtype=np.complex128)
    mult, first = [], []
    for i, z in enumerate(zeros):
        k = len(mult)
        if k:
            near = np.flatnonzero(np.abs(nodes[:k] - z) <= tol * np.maximum(1.0, np.abs(nodes[:k])))
            if near.size:
                mult[near[0]] += 1
                continue
        nodes[k] = z
        mult.append(1)
        first.append(i)
    nodes = nodes[:len(mult)]
    return nodes, np.array(mult, dtype=np.int64), np.array(first)


def moment_rows(main: MainPart, nodes, nus, M: int):
    """Matrix rows ``g^(nu)(z_k + pi j / b)``, ``j = -M..M``, and right-hand side ``-S^(nu)(z_k)``."""
    nodes = np.asarray(nodes, dtype=np.complex128)
    nus = np.asarray(nus, dtype=np.int64)
    A = _kernels.moment_matrix(nodes, nus, np.arange(-M, M + 1), main.b)
    rhs = np.empty(nodes.size, dtype=np.complex128)
    for nu in np.unique(nus):
        sel = nus == nu
        rhs[sel] = -main(nodes[sel], int(nu))
    return A, rhs


def build_moment_system(zeros: ZeroSequence, main: MainPart, M: int) -> MomentSystem:
    """Moment equations from the zeros with index ``n >= 1``; head zeros are ignored."""
    M = int(M)
    if M < 0:
        raise ValidationError("mode cutoff must be nonnegative")
    base = zeros.base_part()
    if len(base) < 2 * M + 1:
        raise InsufficientZeros(f"{len(base)} zeros with n >= 1 but 2M+1 = {2 * M + 1} needed")
    nodes, mult, first = cluster_nodes(base.zeros)
    row_nodes = np.repeat(nodes, mult)
    row_nus = np.concatenate([np.arange(m) for m in mult])
    row_idx = np.repeat(base.indices[first], mult) + row_nus
    A, rhs = moment_rows(main, row_nodes, row_nus, M)
    for arr in (row_nodes, row_nus, row_idx, A, rhs):
        arr.setflags(write=False)
    return MomentSystem(row_nodes, row_nus, row_idx, A, rhs, main.b, M)


def frame_bounds_estimate(system: MomentSystem) -> FrameEstimate:
    """Extreme squared singular values of the moment matrix divided by ``2b``.

    With ``||w||^2 = 2b sum |c_j|^2`` these are the sampled energy ratios
    ``sum_k |<w, e_k>|^2 / ||w||^2`` at their extremes.
    """
    sv = np.linalg.svd(system.matrix, compute_uv=False)
    scale = 2.0 * system.b
    return FrameEstimate(float(sv.min() ** 2 / scale), float(sv.max() ** 2 / scale))


def invert_to_tail(system: MomentSystem, *, frame_floor: float = FRAME_FLOOR):
    """QR least-squares solution of the moment system; returns (tail, residual_norm)."""
    frame = frame_bounds_estimate(system)
    if not frame.m_est > frame_floor:
        raise IllConditioned(f"lower frame estimate {frame.m_est:.3g} below {frame_floor:g}", frame)
    Q, R = np.linalg.qr(system.matrix, mode="reduced")
    c = solve_triangular(R, Q.conj().T @ system.rhs)
    residual = float(np.linalg.norm(system.matrix @ c - system.rhs))
    return FourierTail(system.b, c), residual


def recover_tail(zeros: ZeroSequence, main: MainPart, M: int):
    return invert_to_tail(build_moment_system(zeros, main, M))


# ------------------------------------------------------------------ completion


def _head_search_rect(main: MainPart, scale: float):
    h = main.base.separation
    pz = main.poly_zeros
    c = 0.5 * (complex(pz.real.min(), pz.imag.min()) + complex(pz.real.max(), pz.imag.max()))
    hw = 0.5 * (pz.real.max() - pz.real.min()) + 2 * h
    hh = 0.5 * (pz.imag.max() - pz.imag.min()) + 2 * h
    rect = Rect(c - complex(hw, hh) * scale, c + complex(hw, hh) * scale)
    return _clear_edges(rect, main, 0.45 * h)


def complete_zeros(partial: ZeroSequence, main: MainPart, M: int, *, retries: int = 5,
                   spacing: float | None = None) -> ZeroSequence:
    """Add the ``N`` head zeros to a sequence known for ``n >= 1``.

    The tail is recovered from ``partial``; the head rectangle around the
    polynomial zeros is enlarged by 50% per retry until its winding count
    equals ``N`` plus the base lattice points inside.  All zeros in it are
    extracted, those matching known entries of ``partial`` are removed and
    the rest are aligned to the polynomial zeros and the unknown base
    lattice points; the ones landing on polynomial zeros form the head.
    """
    known = partial.base_part()
    tail, _ = recover_tail(known, main, M)
    N = main.N
    idx_full, z0_full, mu_full = main.lattice(known.n_max)
    if N == 0:
        return ZeroSequence(idx_full, known.zeros, z0_full, mu_full, 0)
    theta = ThetaFunction(main, tail)
    h = main.base.separation
    spacing = spacing or min(h, math.pi / main.b) / 4
    scale = 1.0
    for _ in range(retries + 1):
        rect = _head_search_rect(main, scale)
        count, rect, _ = _count_with_retries(theta, rect, spacing)
        bidx, bpts = _lattice_inside(main, rect)
        if count == N + bidx.size:
            break
        scale *= 1.5
    else:
        raise CountMismatch("head search rectangle never matched the lattice count")
    found = np.asarray(_extract(theta, rect, count, spacing), dtype=np.complex128)
    have = np.isin(bidx, known.indices)
    kz = known.zeros[np.isin(known.indices, bidx[have])]
    if kz.size:
        r, c = linear_sum_assignment(np.abs(found[:, None] - kz[None, :]) ** 2)
        found = np.delete(found, r)
    targets = np.concatenate([main.poly_zeros, bpts[~have]])
    if found.size != targets.size:
        raise CountMismatch("zeros left after removing known ones do not match the head size")
    r, c = linear_sum_assignment(np.abs(found[:, None] - targets[None, :]) ** 2)
    head = np.empty(targets.size, dtype=np.complex128)
    head[c] = found[r]
    zeros = np.concatenate([head[:N], known.zeros])
    return ZeroSequence(idx_full, zeros, z0_full, mu_full, N)


# ------------------------------------------------------------------ generalised form


@dataclass(frozen=True, eq=False)
class Eq13Result:
    poly: np.ndarray          # ascending, degree < N
    tail: FourierTail
    fit_residual: float
    tail_residual: float


def _g_on_axis(main, zeros, y):
    """``(theta_arb(iy) - S(iy)) / S0(iy) = P_N(iy) expm1(sum log ratio)``."""
    pts = 1j * np.asarray(y, dtype=np.float64)
    logs = _kernels.log_ratio_sum(pts, zeros.zeros, zeros.lattice)
    return main.P(pts) * np.expm1(logs)


def _axis_fit(main, zeros, y0):
    N = main.N
    y = y0 * 2.0 ** np.arange(N + 3)
    g = _g_on_axis(main, zeros, y)
    t = 1j * y
    powers = list(range(N)) + [-1, -2]
    ref = y[-1]
    V = np.stack([(t / ref) ** p for p in powers], axis=1)
    sol, *_ = np.linalg.lstsq(V, g, rcond=None)
    resid = float(np.linalg.norm(V @ sol - g) / max(np.linalg.norm(g), 1e-300))
    coeffs = sol[:N] / ref ** np.arange(N)
    return coeffs, resid


def verify_eq13(arbitrary_head, partial: ZeroSequence, main: MainPart, M: int | None = None,
                *, y0: float = 48.0) -> Eq13Result:
    """Generalised representation for an arbitrary head of ``N`` zeros.

    The function built from ``arbitrary_head`` and the zeros with ``n >= 1``
    equals ``S + P_{N-1} S0 + F`` with ``F`` a tail transform.  ``P_{N-1}``
    is fitted on the imaginary axis at heights ``y0 2^j``, ``j = 0..N+2``,
    together with ``1/(iy)`` and ``1/(iy)^2`` terms that absorb ``F/S0``;
    the fit is repeated at ``4 y0`` and :class:`FitDiverged` is raised when
    the residual grows.  The tail is then recovered by the moment system of
    the main part ``(P_N + P_{N-1}) S0``.
    """
    known = partial.base_part()
    N = main.N
    head = np.asarray(arbitrary_head, dtype=np.complex128).ravel()
    if head.size != N:
        raise ValidationError(f"head must have exactly N = {N} entries")
    M = (len(known) - 1) // 2 if M is None else int(M)
    if N == 0:
        tail, res = recover_tail(known, main, M)
        return Eq13Result(np.zeros(0, dtype=np.complex128), tail, 0.0, res)
    idx, z0, mu = main.lattice(known.n_max)
    seq = ZeroSequence(idx, np.concatenate([head, known.zeros]), z0, mu, N)
    coeffs, r1 = _axis_fit(main, seq, y0)
    coeffs4, r4 = _axis_fit(main, seq, 4 * y0)
    if r4 > 10 * r1 + 1e-12:
        raise FitDiverged(f"polynomial fit residual grows with height: {r1:.3g} -> {r4:.3g}")
    # the higher fit has the smaller decaying remainder
    coeffs, resid = (coeffs4, r4) if r4 <= r1 else (coeffs, r1)
    shifted = np.array(main.poly, dtype=np.complex128)
    shifted[:N] += coeffs
    gen = MainPart(main.base, shifted)
    tail, tres = recover_tail(known, gen, M)
    return Eq13Result(coeffs, tail, resid, tres)
