"""Hot numerical kernels.

Each kernel exists twice: a loop version compiled with numba and a vectorised
numpy version.  The numba path is used when numba imports and the environment
variable ``SINETYPE_DISABLE_NUMBA`` is unset (or ``0``).  Both paths are kept
importable under explicit names so tests and the benchmark can compare them.

The central primitive is

    ft_deriv(t, b, nu) = d^nu/dt^nu  int_{-b}^{b} e^{itx} dx
                       = int_{-b}^{b} (ix)^nu e^{itx} dx,

i.e. derivatives of ``2 sin(bt)/t`` with the removable singularity at ``t = 0``
handled by a power series.
"""

import math
import os

import numpy as np

try:  # pragma: no cover - import guard
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

_FLAG = os.environ.get("SINETYPE_DISABLE_NUMBA", "0").strip().lower()
USE_NUMBA = _HAVE_NUMBA and _FLAG in ("", "0", "false", "no")

# |b t| below this (plus nu) uses the power series
SERIES_RADIUS = 4.0
_SERIES_TERMS = 90
_CHUNK = 4096


def _njit(func):
    if not _HAVE_NUMBA:
        return func
    return numba.njit(cache=True, fastmath=False)(func)


# ---------------------------------------------------------------- numpy path


def _sin_deriv_np(sn, cs, j):
    r = j % 4
    if r == 0:
        return sn
    if r == 1:
        return cs
    if r == 2:
        return -sn
    return -cs


def _series_np(u, nu):
    acc = np.zeros_like(u)
    term = np.ones_like(u)
    for m in range(_SERIES_TERMS):
        p = nu + m
        if p % 2 == 0:
            sign = 1.0 if (p // 2) % 2 == 0 else -1.0
            acc += sign * 2.0 / (p + 1) * term
        term = term * u / (m + 1)
    return acc


def _closed_np(t, b, nu, sn, cs):
    s = np.zeros_like(t)
    for j in range(nu + 1):
        k = nu - j
        coef = math.comb(nu, j) * b**j * (-1) ** k * math.factorial(k)
        s += coef * _sin_deriv_np(sn, cs, j) / t ** (k + 1)
    return 2.0 * s


def ft_deriv_numpy(t, b, nu, sn=None, cs=None):
    """``nu``-th derivative of ``2 sin(bt)/t``; ``sn, cs`` may supply sin(bt), cos(bt)."""
    t = np.asarray(t, dtype=np.complex128)
    if sn is None:
        sn, cs = np.sin(b * t), np.cos(b * t)
    sn = np.broadcast_to(sn, t.shape)
    cs = np.broadcast_to(cs, t.shape)
    out = np.empty_like(t)
    small = np.abs(b * t) < SERIES_RADIUS + nu
    if small.any():
        out[small] = b ** (nu + 1) * _series_np(b * t[small], nu)
    big = ~small
    if big.any():
        out[big] = _closed_np(t[big], b, nu, sn[big], cs[big])
    return out


def _shifted_trig_np(z, ks, b):
    # sin(b(z + pi k/b)) = (-1)^k sin(bz), likewise cos
    sign = np.where(ks % 2 == 0, 1.0, -1.0)
    sz, cz = np.sin(b * z), np.cos(b * z)
    return sz[:, None] * sign[None, :], cz[:, None] * sign[None, :]


def tail_eval_numpy(z, ks, coeffs, b, nu):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    ks = np.asarray(ks, dtype=np.int64)
    keep = coeffs != 0
    ks = ks[keep]
    coeffs = coeffs[keep]
    out = np.zeros(z.size, dtype=np.complex128)
    if coeffs.size == 0:
        return out
    shifts = ks * (math.pi / b)
    step = max(1, _CHUNK * 16 // max(coeffs.size, 1))
    for start in range(0, z.size, step):
        zz = z[start:start + step]
        sn, cs = _shifted_trig_np(zz, ks, b)
        g = ft_deriv_numpy(zz[:, None] + shifts[None, :], b, nu, sn, cs)
        out[start:start + step] = g @ coeffs
    return out


def moment_matrix_numpy(nodes, nus, ks, b):
    nodes = np.asarray(nodes, dtype=np.complex128)
    nus = np.asarray(nus, dtype=np.int64)
    ks = np.asarray(ks, dtype=np.int64)
    shifts = ks * (math.pi / b)
    A = np.empty((nodes.size, ks.size), dtype=np.complex128)
    for nu in np.unique(nus):
        rows = nus == nu
        zz = nodes[rows]
        sn, cs = _shifted_trig_np(zz, ks, b)
        A[rows] = ft_deriv_numpy(zz[:, None] + shifts[None, :], b, int(nu), sn, cs)
    return A


def _log1p_c_np(x):
    # numpy's complex log1p is log(1 + x) evaluated naively
    u = 1.0 + x
    same = u == 1.0
    d = np.where(same, 1.0, u - 1.0)
    return np.where(same, x, np.log(np.where(same, 1.0, u)) * (x / d))


def log_ratio_sum_numpy(z, zeros, lattice):
    """sum_n log((z_n - z) / (z0_n - z)) for each z, on the perturbed entries only."""
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    moved = zeros != lattice
    dz = (zeros - lattice)[moved]
    z0 = lattice[moved]
    out = np.zeros(z.size, dtype=np.complex128)
    if dz.size == 0:
        return out
    step = max(1, _CHUNK * 16 // dz.size)
    for start in range(0, z.size, step):
        zz = z[start:start + step]
        out[start:start + step] = _log1p_c_np(dz[None, :] / (z0[None, :] - zz[:, None])).sum(axis=1)
    return out


def log_hadamard_sum_numpy(z, zeros, mu):
    """sum_n [log((z_n - z)/mu_n) + z/mu_n] for each z."""
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    out = np.zeros(z.size, dtype=np.complex128)
    step = max(1, _CHUNK * 16 // max(zeros.size, 1))
    for start in range(0, z.size, step):
        zz = z[start:start + step][:, None]
        x = (zeros[None, :] - mu[None, :] - zz) / mu[None, :]
        out[start:start + step] = (_log1p_c_np(x) + zz / mu[None, :]).sum(axis=1)
    return out


# ---------------------------------------------------------------- numba path


@_njit
def _ft_deriv_scalar(t, b, nu, sn, cs):
    u = b * t
    if abs(u) < SERIES_RADIUS + nu:
        acc = 0j
        term = 1.0 + 0j
        for m in range(_SERIES_TERMS):
            p = nu + m
            if p % 2 == 0:
                if (p // 2) % 2 == 0:
                    acc += 2.0 / (p + 1) * term
                else:
                    acc -= 2.0 / (p + 1) * term
            term = term * u / (m + 1)
        return b ** (nu + 1) * acc
    if nu == 0:
        return 2.0 * sn / t
    inv = 1.0 / t
    # walk k = nu - j upward so inv^(k+1), k!, C(nu, j) and b^j update cheaply
    s = 0j
    invp = inv
    fact = 1.0
    binom = 1.0
    bj = b**nu
    for k in range(nu + 1):
        j = nu - k
        r = j % 4
        if r == 0:
            d = sn
        elif r == 1:
            d = cs
        elif r == 2:
            d = -sn
        else:
            d = -cs
        term = binom * bj * fact * d * invp
        if k % 2 == 0:
            s += term
        else:
            s -= term
        invp = invp * inv
        fact *= k + 1
        binom = binom * j / (k + 1)
        bj = bj / b
    return 2.0 * s


@_njit
def _sincos(u):
    # one complex exponential for both
    e = np.exp(1j * u)
    ei = 1.0 / e
    return (e - ei) / 2j, (e + ei) / 2.0


@_njit
def _ft_deriv_array(t, b, nu):
    out = np.empty(t.size, dtype=np.complex128)
    for i in range(t.size):
        sn, cs = _sincos(b * t[i])
        out[i] = _ft_deriv_scalar(t[i], b, nu, sn, cs)
    return out


def ft_deriv_numba(t, b, nu):
    t = np.asarray(t, dtype=np.complex128)
    flat = np.ascontiguousarray(t).ravel()
    return _ft_deriv_array(flat, float(b), int(nu)).reshape(t.shape)


@_njit
def _row(z, ks, coeffs, b, nu, out_row, use_coeffs):
    sz, cz = _sincos(b * z)
    acc = 0j
    step = np.pi / b
    for j in range(ks.size):
        k = ks[j]
        sgn = 1.0 if k % 2 == 0 else -1.0
        g = _ft_deriv_scalar(z + k * step, b, nu, sgn * sz, sgn * cz)
        if use_coeffs:
            acc += coeffs[j] * g
        else:
            out_row[j] = g
    return acc


@_njit
def _tail_eval_loop(z, ks, coeffs, b, nu):
    out = np.zeros(z.size, dtype=np.complex128)
    dummy = np.empty(0, dtype=np.complex128)
    for i in range(z.size):
        out[i] = _row(z[i], ks, coeffs, b, nu, dummy, True)
    return out


def tail_eval_numba(z, ks, coeffs, b, nu):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    ks = np.asarray(ks, dtype=np.int64)
    keep = coeffs != 0
    return _tail_eval_loop(z, np.ascontiguousarray(ks[keep]),
                           np.ascontiguousarray(coeffs[keep], dtype=np.complex128), float(b), int(nu))


@_njit
def _moment_matrix_loop(nodes, nus, ks, b):
    A = np.empty((nodes.size, ks.size), dtype=np.complex128)
    dummy = np.empty(0, dtype=np.complex128)
    for r in range(nodes.size):
        _row(nodes[r], ks, dummy, b, nus[r], A[r], False)
    return A


def moment_matrix_numba(nodes, nus, ks, b):
    return _moment_matrix_loop(np.ascontiguousarray(nodes, dtype=np.complex128),
                               np.ascontiguousarray(nus, dtype=np.int64),
                               np.ascontiguousarray(ks, dtype=np.int64), float(b))


@_njit
def _log1p_c(x):
    # log(1+x) without cancellation: log(u) * x / (u - 1) with u = 1 + x
    u = 1.0 + x
    if u == 1.0:
        return x
    return np.log(u) * (x / (u - 1.0))


@_njit
def _log_ratio_loop(z, dz, z0):
    out = np.zeros(z.size, dtype=np.complex128)
    for i in range(z.size):
        acc = 0j
        for n in range(dz.size):
            acc += _log1p_c(dz[n] / (z0[n] - z[i]))
        out[i] = acc
    return out


def log_ratio_sum_numba(z, zeros, lattice):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    moved = zeros != lattice
    dz = np.ascontiguousarray((zeros - lattice)[moved])
    z0 = np.ascontiguousarray(lattice[moved])
    return _log_ratio_loop(z, dz, z0)


@_njit
def _log_hadamard_loop(z, zeros, mu):
    out = np.zeros(z.size, dtype=np.complex128)
    for i in range(z.size):
        acc = 0j
        for n in range(zeros.size):
            x = (zeros[n] - mu[n] - z[i]) / mu[n]
            acc += _log1p_c(x) + z[i] / mu[n]
        out[i] = acc
    return out


def log_hadamard_sum_numba(z, zeros, mu):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    return _log_hadamard_loop(z, np.ascontiguousarray(zeros, dtype=np.complex128),
                              np.ascontiguousarray(mu, dtype=np.complex128))


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    ft_deriv = ft_deriv_numba
    tail_eval = tail_eval_numba
    moment_matrix = moment_matrix_numba
    log_ratio_sum = log_ratio_sum_numba
    log_hadamard_sum = log_hadamard_sum_numba
else:
    ft_deriv = ft_deriv_numpy
    tail_eval = tail_eval_numpy
    moment_matrix = moment_matrix_numpy
    log_ratio_sum = log_ratio_sum_numpy
    log_hadamard_sum = log_hadamard_sum_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
