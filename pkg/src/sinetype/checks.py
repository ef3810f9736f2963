"""Invariant suite run by ``sinetype verify``.

Each check returns a :class:`CheckResult`; numerical failures inside a
check are caught and reported as a failed check naming the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ThetaFunction, eval_tail
from .errors import SineTypeError
from .reconstruction import build_moment_system, invert_to_tail, product_eval_ratio
from .stability_lab import parseval_l2
from .zero_finder import Rect, localize_zeros, residuals, winding_count


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""


def check_derivative(theta: ThetaFunction, rng, n=100, h=1e-6):
    r = 20 * np.sqrt(rng.uniform(0, 1, n))
    z = r * np.exp(1j * rng.uniform(0, 2 * math.pi, n))
    z = z.real + 1j * np.clip(z.imag, -2, 2)
    fd = (theta(z + h) - theta(z - h)) / (2 * h)
    d = theta(z, 1)
    scale = np.maximum(np.abs(d), np.abs(theta(z)))
    err = float(np.max(np.abs(fd - d) / np.maximum(scale, 1e-300)))
    return CheckResult("derivative_vs_central_difference", err < 1e-6, err, 1e-6)


def check_tail_parseval(theta: ThetaFunction):
    tail = theta.tail
    m = 8 * tail.M + 16
    x = -tail.b + 2 * tail.b * np.arange(m) / m
    quad = 2 * tail.b * float(np.mean(np.abs(tail.w(x)) ** 2))
    ref = tail.norm() ** 2
    err = abs(quad - ref) / max(ref, 1e-300) if ref else abs(quad)
    return CheckResult("tail_norm_vs_quadrature", err < 1e-10, err, 1e-10)


def check_removable(theta: ThetaFunction):
    tail = theta.tail
    worst = 0.0
    for k in tail.modes():
        p = -k * math.pi / tail.b
        h1, h2 = 1e-7, 1e-8
        v1, v2 = eval_tail(tail, p + h1), eval_tail(tail, p + h2)
        limit = (h1 * v2 - h2 * v1) / (h1 - h2)
        val = eval_tail(tail, p)
        worst = max(worst, abs(val - limit) / max(abs(val), 1e-300))
    return CheckResult("tail_entire_at_singularities", worst < 1e-8, worst, 1e-8)


def check_zeros(theta: ThetaFunction, n_max: int, rng):
    out = []
    rep = localize_zeros(theta, n_max)
    zs = rep.zeros
    out.append(CheckResult("localize_zeros", True, float(len(zs)), float(n_max + theta.N)))
    vals = np.abs(theta(zs.zeros))
    scale = np.abs(theta(zs.zeros, 1)) * theta.main.base.separation / 3
    bad = int(np.count_nonzero(vals > 1e-8 * np.maximum(1.0, scale)))
    out.append(CheckResult("zero_residuals", bad == 0, float(bad), 0.0))

    h = theta.main.base.separation
    half = h / 3
    reach = 0.4 * h * n_max / 2
    hits = tests = 0
    for _ in range(200):
        if tests == 20:
            break
        x0 = rng.uniform(-reach, reach - 1)
        y0 = rng.uniform(-3, 2)
        rect = Rect.from_bounds(x0, x0 + rng.uniform(0.5, 6), y0, y0 + rng.uniform(0.3, 3))
        if rect.hi.real > reach:
            continue
        c = rect.corners()
        edges = [(c[i], c[(i + 1) % 4]) for i in range(4)]
        dist = np.min([_seg_dist(zs.zeros, a, b) for a, b in edges], axis=0)
        if dist.min() <= half / 2:
            continue
        tests += 1
        hits += int(winding_count(theta, rect) == int(rect.contains(zs.zeros).sum()))
    out.append(CheckResult("rouche_consistency", hits == tests, float(hits), float(tests)))

    poly_real = np.all(theta.main.poly.imag == 0)
    tail_real = np.all(theta.tail.coeffs.imag == 0)
    if poly_real and tail_real:
        z = zs.zeros
        d = np.abs(np.conj(z)[:, None] - z[None, :]).min(axis=1)
        err = float(np.max(d / np.maximum(1.0, np.abs(z))))
        out.append(CheckResult("conjugate_symmetry", err < 1e-10, err, 1e-10))

    kappa, l2, prof = residuals(zs)
    mono = bool(np.all(np.diff(prof) <= 1e-15 * max(l2 * l2, 1e-300)))
    mid = prof[np.searchsorted(zs.indices, n_max // 2)]
    ok = mono and (l2 == 0 or mid < 1e-3 * l2 * l2)
    out.append(CheckResult("tail_profile_decay", ok, float(mid / (l2 * l2)) if l2 else 0.0, 1e-3))
    out.append(CheckResult("head_multiplicity", rep.head_count == int(np.count_nonzero(
        rep.head_rect.contains(zs.zeros))), float(rep.head_count), float(rep.head_count)))
    return out, zs


def _seg_dist(z, a, b):
    ab = b - a
    t = np.clip(np.real((z - a) * np.conj(ab)) / abs(ab) ** 2, 0, 1)
    return np.abs(z - (a + t * ab))


def check_ratio_form(theta: ThetaFunction, zs, rng, n=20):
    z = rng.uniform(-10, 10, n) + 1j * rng.uniform(-2, 2, n)
    lat = zs.lattice
    keep = np.abs(z[:, None] - lat[None, :]).min(axis=1) > theta.main.base.separation / 3
    z = z[keep]
    v = product_eval_ratio(theta.main, zs, z, tail_tol=1e-6)
    ref = theta(z)
    err = float(np.max(np.abs(v - ref) / np.abs(ref)))
    return CheckResult("ratio_product_vs_direct", err < 1e-6, err, 1e-6)


def check_roundtrip(theta: ThetaFunction, zs):
    M = theta.tail.M
    base = zs.base_part()
    if len(base) < 2 * (2 * M + 1):
        return CheckResult("tail_roundtrip", True, 0.0, 1e-5, "skipped: too few zeros")
    tail, _ = invert_to_tail(build_moment_system(base, theta.main, M))
    err = float(np.max(np.abs(tail.coeffs - theta.tail.coeffs))) if M or theta.tail.coeffs.size else 0.0
    return CheckResult("tail_roundtrip", err < 1e-5, err, 1e-5)


def check_parseval(theta: ThetaFunction):
    lhs, rhs = parseval_l2(theta.tail)
    err = abs(lhs - rhs) / rhs if rhs else abs(lhs)
    return CheckResult("parseval_identity", err < 1e-4, err, 1e-4)


def run_checks(theta: ThetaFunction, n_max: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    results = []

    def guard(name, fn):
        try:
            res = fn()
        except SineTypeError as exc:
            return [CheckResult(name, False, math.nan, math.nan, type(exc).__name__ + ": " + str(exc))]
        return res if isinstance(res, list) else [res]

    results += guard("derivative_vs_central_difference", lambda: check_derivative(theta, rng))
    results += guard("tail_norm_vs_quadrature", lambda: check_tail_parseval(theta))
    results += guard("tail_entire_at_singularities", lambda: check_removable(theta))
    holder = {}

    def zeros_step():
        res, zs = check_zeros(theta, n_max, rng)
        holder["zs"] = zs
        return res

    results += guard("localize_zeros", zeros_step)
    if "zs" in holder:
        zs = holder["zs"]
        results += guard("ratio_product_vs_direct", lambda: check_ratio_form(theta, zs, rng))
        results += guard("tail_roundtrip", lambda: check_roundtrip(theta, zs))
    results += guard("parseval_identity", lambda: check_parseval(theta))
    return results
