"""Function-class objects.

The functions handled here are

    theta(z) = P_N(z) S0(z) + int_{-b}^{b} w(x) e^{izx} dx

with ``S0`` a sine-type function of exponential type ``b`` (usually
``sin(bz)``), ``P_N`` a polynomial of degree ``N`` and ``w`` a finite
trigonometric sum on ``(-b, b)``.  Everything is evaluated in closed form.

Conventions
-----------
* Polynomial coefficients are stored in ascending order, ``poly[j]`` is the
  coefficient of ``z**j``.
* The zero lattice of the main part is indexed by ``n >= 1 - N``: indices
  ``1-N..0`` are the polynomial zeros (zeros at the origin first, then by
  modulus and argument), indices ``n >= 1`` are the base zeros.
* For ``sin(bz)`` the base zeros are enumerated as ``z_1 = 0``,
  ``z_{2k} = k pi/b``, ``z_{2k+1} = -k pi/b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, NamedTuple

import numpy as np

from . import _kernels
from .errors import DegenerateMainPart, IndexOutOfRange, UnsupportedDerivative, ValidationError

MAX_BASE_DERIV = 2


def _as_complex(z):
    arr = np.asarray(z, dtype=np.complex128)
    return arr, arr.ndim == 0


def _ret(values, scalar):
    return complex(values.reshape(())) if scalar else values


class SineTypeBase:
    """Sine-type factor ``S0`` with its indexed zero lattice.

    Use :meth:`sin_scaled` for ``sin(bz)``.  Custom bases must provide the
    type ``b``, an evaluator ``f(z, nu)`` returning ``S0^(nu)`` on arrays, a
    lattice function mapping an integer array of indices ``n >= 1`` to
    zeros (ordered by nondecreasing modulus) and the asymptotic separation.
    """

    def __init__(self, b, kind="sin", evaluator=None, lattice=None, separation=None):
        b = float(b)
        if not b > 0:
            raise ValidationError(f"exponential type must be positive, got {b}")
        if kind not in ("sin", "custom"):
            raise ValidationError(f"unknown base kind {kind!r}")
        if kind == "custom" and (evaluator is None or lattice is None or separation is None):
            raise ValidationError("custom base needs evaluator, lattice and separation")
        self.b = b
        self.kind = kind
        self._evaluator = evaluator
        self._lattice = lattice
        self.separation = float(separation) if separation is not None else math.pi / b

    @classmethod
    def sin_scaled(cls, b):
        return cls(b, "sin")

    @classmethod
    def custom(cls, b, evaluator: Callable, lattice: Callable, separation: float):
        return cls(b, "custom", evaluator, lattice, separation)

    def __repr__(self):
        if self.kind == "sin":
            return f"SineTypeBase.sin_scaled({self.b!r})"
        return f"SineTypeBase.custom(b={self.b!r}, separation={self.separation!r})"

    def __call__(self, z, nu=0):
        return eval_base(self, z, nu)

    def lattice(self, n):
        """Zeros ``z_n^0`` for an integer array of indices ``n >= 1``."""
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.min() < 1:
            raise IndexOutOfRange("base lattice indices start at 1")
        if self.kind == "sin":
            k = n // 2
            sign = np.where(n % 2 == 0, 1.0, -1.0)
            return (sign * k * (math.pi / self.b) + 0.0).astype(np.complex128)
        return np.asarray(self._lattice(n), dtype=np.complex128)

    def index_bound(self, radius):
        """An index ``L`` such that every base zero with ``|z| <= radius`` has index ``<= L``."""
        if self.kind == "sin":
            return 2 * int(math.ceil(radius / self.separation)) + 3
        L = 64
        while True:
            pts = self.lattice(np.arange(L // 2, L + 1))
            if np.abs(pts).min() > radius:
                return L
            L *= 2

    def points_within(self, radius):
        idx = np.arange(1, self.index_bound(radius) + 1)
        pts = self.lattice(idx)
        keep = np.abs(pts) <= radius
        return idx[keep], pts[keep]

    @cached_property
    def origin_multiplicity(self):
        return int(np.count_nonzero(self.lattice(np.arange(1, 65)) == 0))

    @cached_property
    def nearest_nonzero(self):
        pts = self.lattice(np.arange(1, 65))
        nz = np.abs(pts[pts != 0])
        return float(nz.min()) if nz.size else self.separation


def eval_base(base: SineTypeBase, z, deriv_order: int = 0):
    """``S0^(nu)(z)`` for ``nu <= 2``; exact for ``sin(bz)``."""
    if deriv_order < 0 or deriv_order > MAX_BASE_DERIV:
        raise UnsupportedDerivative(f"base derivative of order {deriv_order} not supported")
    arr, scalar = _as_complex(z)
    if base.kind == "sin":
        b = base.b
        t = b * arr
        if deriv_order == 0:
            out = np.sin(t)
        elif deriv_order == 1:
            out = b * np.cos(t)
        else:
            out = -b * b * np.sin(t)
    else:
        out = np.asarray(base._evaluator(arr, deriv_order), dtype=np.complex128)
    return _ret(np.asarray(out, dtype=np.complex128), scalar)


class FourierTail:
    """``w(x) = sum_{k=-M}^{M} c_k exp(i pi k x / b)`` on ``(-b, b)``."""

    def __init__(self, b, coeffs):
        coeffs = np.array(coeffs, dtype=np.complex128).ravel()
        if coeffs.size % 2 != 1:
            raise ValidationError("tail coefficient vector must have odd length 2M+1")
        self.b = float(b)
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)

    @classmethod
    def zero(cls, b, M=0):
        return cls(b, np.zeros(2 * M + 1))

    @classmethod
    def from_modes(cls, b, modes: Mapping[int, complex], M=None):
        ks = [int(k) for k in modes]
        need = max((abs(k) for k in ks), default=0)
        M = need if M is None else int(M)
        if need > M:
            raise ValidationError(f"mode {need} exceeds cutoff M={M}")
        c = np.zeros(2 * M + 1, dtype=np.complex128)
        for k, v in modes.items():
            c[int(k) + M] = complex(v)
        return cls(b, c)

    @property
    def M(self):
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self):
        return np.arange(-self.M, self.M + 1)

    @property
    def shifts(self):
        return self.ks * (math.pi / self.b)

    def mode(self, k):
        k = int(k)
        return complex(self.coeffs[k + self.M]) if abs(k) <= self.M else 0j

    def modes(self):
        return {int(k): complex(c) for k, c in zip(self.ks, self.coeffs) if c != 0}

    def resized(self, M):
        """Zero-padded or truncated copy with cutoff ``M``."""
        M = int(M)
        c = np.zeros(2 * M + 1, dtype=np.complex128)
        keep = min(M, self.M)
        c[M - keep:M + keep + 1] = self.coeffs[self.M - keep:self.M + keep + 1]
        return FourierTail(self.b, c)

    def norm(self):
        """``||w||`` in ``L2(-b, b)``."""
        return math.sqrt(2.0 * self.b * float(np.sum(np.abs(self.coeffs) ** 2)))

    def w(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(1j * np.multiply.outer(x, self.shifts)) @ self.coeffs

    def __call__(self, z, nu=0):
        return eval_tail(self, z, nu)

    def _binary(self, other, sign):
        if not math.isclose(self.b, other.b):
            raise ValidationError("tails of different type b")
        M = max(self.M, other.M)
        a = self.resized(M).coeffs
        c = other.resized(M).coeffs
        return FourierTail(self.b, a + sign * c)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def scaled(self, factor):
        return FourierTail(self.b, self.coeffs * factor)

    def __repr__(self):
        return f"FourierTail(b={self.b!r}, M={self.M}, modes={self.modes()!r})"


def eval_tail(tail: FourierTail, z, deriv_order: int = 0):
    """``d^nu/dz^nu int_{-b}^{b} w(x) e^{izx} dx`` in closed form."""
    if deriv_order < 0:
        raise UnsupportedDerivative("negative derivative order")
    arr, scalar = _as_complex(z)
    out = _kernels.tail_eval(arr.ravel(), tail.ks, tail.coeffs, tail.b,
                             int(deriv_order))
    return _ret(out.reshape(arr.shape), scalar)


class LeadingData(NamedTuple):
    s: int
    alpha: complex
    gamma: complex
    beta: complex


@dataclass(frozen=True, eq=False)
class MainPart:
    """``S(z) = P_N(z) S0(z)`` with ascending polynomial coefficients."""

    base: SineTypeBase
    poly: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.poly, dtype=np.complex128)).copy()
        nz = np.flatnonzero(c != 0)
        if nz.size == 0:
            raise ValidationError("polynomial must not vanish identically")
        c = c[: nz[-1] + 1]
        c.setflags(write=False)
        object.__setattr__(self, "poly", c)
        z = self.poly_zeros
        scale = np.polynomial.polynomial.polyval(np.maximum(1.0, np.abs(z)), np.abs(c))
        if np.any(np.abs(self.P(z)) > 1e-8 * scale):
            raise ValidationError("polynomial root finding failed the residual check")

    @property
    def N(self):
        return self.poly.size - 1

    @property
    def b(self):
        return self.base.b

    @cached_property
    def poly_zeros(self):
        c = self.poly
        n0 = int(np.flatnonzero(c != 0)[0])
        rest = np.polynomial.polynomial.polyroots(c[n0:]) if c.size - n0 > 1 else np.array([])
        rest = np.asarray(rest, dtype=np.complex128)
        order = np.lexsort((np.angle(rest), np.abs(rest)))
        return np.concatenate([np.zeros(n0, dtype=np.complex128), rest[order]])

    def P(self, z, nu=0):
        c = np.polynomial.polynomial.polyder(self.poly, nu) if nu else self.poly
        return np.polynomial.polynomial.polyval(z, c)

    def __call__(self, z, nu=0):
        """``S^(nu)(z)`` by the product rule."""
        if nu > MAX_BASE_DERIV:
            raise UnsupportedDerivative(f"derivative of order {nu} not supported")
        arr, scalar = _as_complex(z)
        out = np.zeros(arr.shape, dtype=np.complex128)
        for j in range(nu + 1):
            if j > self.N:
                break
            out = out + math.comb(nu, j) * self.P(arr, j) * eval_base(self.base, arr, nu - j)
        return _ret(out, scalar)

    def lattice(self, n_max):
        """Indices ``1-N..n_max``, lattice points and weights mu_n."""
        idx = np.arange(1 - self.N, n_max + 1)
        z0 = np.concatenate([self.poly_zeros, self.base.lattice(np.arange(1, n_max + 1))])
        return idx, z0, mu_from_lattice(z0)

    def lattice_point(self, n):
        n = int(n)
        if n < 1 - self.N:
            raise IndexOutOfRange(f"index {n} below 1-N = {1 - self.N}")
        if n <= 0:
            return complex(self.poly_zeros[n + self.N - 1])
        return complex(self.base.lattice(np.array([n]))[0])

    @cached_property
    def structural_s(self):
        return int(np.count_nonzero(self.poly_zeros == 0)) + self.base.origin_multiplicity

    @cached_property
    def leading(self):
        return leading_data(self)


def mu_from_lattice(z0):
    z0 = np.asarray(z0, dtype=np.complex128)
    return np.where(z0 != 0, z0, -1.0 + 0j)


def mu(main: MainPart, n: int) -> complex:
    """Weight ``mu_n``: the lattice point itself, or -1 where it is the origin."""
    z0 = main.lattice_point(n)
    return z0 if z0 != 0 else -1.0 + 0j


TAYLOR_NODES = 256
MULTIPLICITY_TOL = 1e-10


def taylor_coefficients(main: MainPart, nodes=TAYLOR_NODES):
    """Scaled Taylor coefficients ``a_j rho^j`` of ``S`` at 0 and the radius rho."""
    nz = np.abs(main.poly_zeros[main.poly_zeros != 0])
    nearest = min([main.base.nearest_nonzero] + list(nz))
    rho = 0.5 * nearest
    theta = 2 * math.pi * np.arange(nodes) / nodes
    vals = main(rho * np.exp(1j * theta))
    return np.fft.fft(vals) / nodes, rho


def leading_data(main: MainPart) -> LeadingData:
    """Multiplicity ``s`` of the zero of S at 0 and the constants alpha, gamma, beta.

    ``alpha = a_s`` and ``gamma = a_{s+1}/a_s`` from contour Taylor
    coefficients.  The multiplicity threshold is applied to the coefficients
    scaled by ``rho^j`` so round-off in high orders cannot dominate.
    """
    scaled, rho = taylor_coefficients(main)
    half = scaled[: TAYLOR_NODES // 2]
    mags = np.abs(half)
    top = mags.max()
    if top == 0 or not np.isfinite(top):
        raise DegenerateMainPart("all Taylor coefficients vanish")
    significant = np.flatnonzero(mags >= MULTIPLICITY_TOL * top)
    s = int(significant[0])
    if s + 1 >= half.size:
        raise DegenerateMainPart("zero at the origin of too high multiplicity")
    alpha = complex(scaled[s] / rho**s)
    a_next = complex(scaled[s + 1] / rho ** (s + 1))
    if abs(scaled[s + 1]) < MULTIPLICITY_TOL * top:
        a_next = 0j
    gamma = a_next / alpha
    return LeadingData(s, alpha, gamma, s + gamma)


class SineTypeBounds(NamedTuple):
    c_est: float
    C_est: float

    @property
    def degenerate(self):
        return not self.c_est > 1e-8


def verify_sine_type(base: SineTypeBase, K_check: float, grid=(-50.0, 50.0, 2001)) -> SineTypeBounds:
    """Sampled min/max of ``|S0(z)| exp(-b |Im z|)`` on ``Im z = +-K_check``."""
    if not K_check > 0:
        raise ValidationError("K_check must be positive")
    x = np.linspace(*grid[:2], int(grid[2]))
    z = np.concatenate([x + 1j * K_check, x - 1j * K_check])
    vals = np.abs(eval_base(base, z)) * math.exp(-base.b * K_check)
    return SineTypeBounds(float(vals.min()), float(vals.max()))


@dataclass(frozen=True, eq=False)
class ThetaFunction:
    main: MainPart
    tail: FourierTail

    def __post_init__(self):
        if not math.isclose(self.main.b, self.tail.b, rel_tol=1e-12):
            raise ValidationError("tail type b must equal the base type b")

    @property
    def N(self):
        return self.main.N

    @property
    def b(self):
        return self.main.b

    def __call__(self, z, nu=0):
        return eval_theta(self, z, nu)

    def with_tail(self, tail):
        return ThetaFunction(self.main, tail)


def eval_theta(theta: ThetaFunction, z, deriv_order: int = 0):
    arr, scalar = _as_complex(z)
    out = theta.main(arr, deriv_order) + eval_tail(theta.tail, arr, deriv_order)
    return _ret(np.asarray(out), scalar)


@dataclass(frozen=True, eq=False)
class ZeroSequence:
    """Zeros ``z_n`` aligned to the lattice, for ``n = 1-N .. n_max``."""

    indices: np.ndarray
    zeros: np.ndarray
    lattice: np.ndarray
    mu: np.ndarray
    N: int

    def __post_init__(self):
        for name in ("indices", "zeros", "lattice", "mu"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.indices.size == self.zeros.size == self.lattice.size == self.mu.size):
            raise ValidationError("zero sequence arrays differ in length")

    @classmethod
    def from_main(cls, main: MainPart, zeros, first: int | None = None):
        """Align ``zeros`` (consecutive indices from ``first``, default ``1-N``)."""
        zeros = np.asarray(zeros, dtype=np.complex128)
        first = 1 - main.N if first is None else int(first)
        if first < 1 - main.N:
            raise IndexOutOfRange("first index below 1-N")
        n_max = first + zeros.size - 1
        idx, z0, m = main.lattice(max(n_max, 0))
        sl = slice(first - (1 - main.N), n_max - (1 - main.N) + 1)
        return cls(idx[sl], zeros, z0[sl], m[sl], main.N)

    @classmethod
    def lattice_of(cls, main: MainPart, n_max: int):
        idx, z0, m = main.lattice(n_max)
        return cls(idx, z0.copy(), z0, m, main.N)

    @property
    def n_max(self):
        return int(self.indices[-1]) if self.indices.size else 0

    @property
    def kappa(self):
        return self.mu**self.N * (self.zeros - self.lattice)

    def with_zeros(self, zeros):
        return ZeroSequence(self.indices, np.asarray(zeros, dtype=np.complex128), self.lattice,
                            self.mu, self.N)

    def select(self, mask):
        return ZeroSequence(self.indices[mask], self.zeros[mask], self.lattice[mask],
                            self.mu[mask], self.N)

    def base_part(self):
        """Entries with ``n >= 1``, the only ones entering the moment system."""
        return self.select(self.indices >= 1)

    def head_part(self):
        return self.select(self.indices <= 0)

    def upto(self, n_max):
        return self.select(self.indices <= n_max)

    def is_aligned(self, separation, head_index=0):
        tail = self.indices > head_index
        return bool(np.all(np.abs(self.zeros[tail] - self.lattice[tail]) < separation / 2))

    def __len__(self):
        return int(self.indices.size)
