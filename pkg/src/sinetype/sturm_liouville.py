"""Dirichlet Sturm-Liouville characteristic functions in the sine-type form.

Two families, both with ``b = pi`` and ``S0 = sin(pi z)``:

* ``z^2 Delta(z^2) = z sin(pi z) + int_0^pi u(x) cos(zx) dx`` with zero-mean
  ``u = sum_k u_k cos(kx)``.  Here ``w(x) = u(|x|)/2``, i.e.
  ``c_k = c_{-k} = u_k / 4`` and ``N = 1``.
* ``z Delta(z^2) = sin(pi z) + int_0^pi v(x) sin(zx) dx`` with
  ``v = sum_k v_k sin(kx)``.  Here ``w`` is the odd extension of ``v``
  divided by ``2i``, i.e. ``c_k = -v_k / 4``, ``c_{-k} = v_k / 4`` and ``N = 0``.

In both cases ``||u||_{L2(0,pi)} = sqrt(2) ||w||_{L2(-pi,pi)}`` (same for v).
Eigenvalues map to zeros by ``z = +-sqrt(lambda)``; the double zero of
``z^2 Delta(z^2)`` at the origin occupies indices 0 and 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core_model import FourierTail, MainPart, SineTypeBase, ThetaFunction, ZeroSequence
from .errors import BranchAmbiguity, ValidationError
from .stability_lab import stability_ratio

BRANCH_TOL = 1e-10
SQRT2 = math.sqrt(2.0)


def _modes(modes):
    if isinstance(modes, Mapping):
        return {int(k): complex(v) for k, v in modes.items()}
    # sequence: entry j is the coefficient of mode j+1
    return {j + 1: complex(v) for j, v in enumerate(modes) if v != 0}


def main_part(N: int) -> MainPart:
    if N not in (0, 1):
        raise ValidationError("profile must be N=0 or N=1")
    return MainPart(SineTypeBase.sin_scaled(math.pi), [0, 1] if N == 1 else [1])


def theta_from_u(u_modes) -> ThetaFunction:
    """``z^2 Delta(z^2)`` for ``u = sum_k u_k cos(kx)``, ``k >= 1``.

    ``u_modes`` is a mapping ``k -> u_k`` or a sequence starting at ``k = 1``.
    A ``k = 0`` entry (nonzero mean) is rejected.
    """
    modes = _modes(u_modes)
    if any(k < 0 for k in modes):
        raise ValidationError("cosine modes are indexed by k >= 0")
    if abs(modes.get(0, 0)) > 0:
        raise ValidationError("u must have zero mean")
    tail_modes = {}
    for k, uk in modes.items():
        if k and uk:
            tail_modes[k] = uk / 4
            tail_modes[-k] = uk / 4
    M = max((k for k in modes), default=0)
    return ThetaFunction(main_part(1), FourierTail.from_modes(math.pi, tail_modes, M))


def theta_from_v(v_modes) -> ThetaFunction:
    """``z Delta(z^2)`` for ``v = sum_k v_k sin(kx)``, ``k >= 1``."""
    modes = _modes(v_modes)
    if any(k < 1 for k, vk in modes.items() if vk):
        raise ValidationError("sine modes are indexed by k >= 1")
    tail_modes = {}
    for k, vk in modes.items():
        if vk:
            tail_modes[k] = -vk / 4
            tail_modes[-k] = vk / 4
    M = max((k for k in modes), default=0)
    return ThetaFunction(main_part(0), FourierTail.from_modes(math.pi, tail_modes, M))


def u_from_tail(tail: FourierTail) -> dict:
    """Cosine coefficients ``u_k = 2 (c_k + c_{-k})`` (exact for even tails)."""
    return {k: 2 * (tail.mode(k) + tail.mode(-k)) for k in range(1, tail.M + 1)}


def v_from_tail(tail: FourierTail) -> dict:
    """Sine coefficients ``v_k = 2 (c_{-k} - c_k)`` (exact for odd tails)."""
    return {k: 2 * (tail.mode(-k) - tail.mode(k)) for k in range(1, tail.M + 1)}


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues ``lambda_n``, ``n = 1..len``."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=np.complex128).ravel()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @classmethod
    def unperturbed(cls, n_max: int):
        return cls(np.arange(1, n_max + 1, dtype=float) ** 2)

    def __len__(self):
        return int(self.eigenvalues.size)

    @property
    def n(self):
        return np.arange(1, len(self) + 1)

    def Lambda(self, other: "Spectrum", j: int) -> float:
        """``||{(lambda_n - other_n) / n^j}||_l2`` over the common index range."""
        k = min(len(self), len(other))
        d = np.abs(self.eigenvalues[:k] - other.eigenvalues[:k]) / self.n[:k].astype(float) ** j
        return math.sqrt(math.fsum(d * d))


def Lambda(spec_a: Spectrum, spec_b: Spectrum, j: int) -> float:
    return spec_a.Lambda(spec_b, j)


def principal_sqrt(lam):
    """Principal square root with points on the negative axis sent to ``+i``.

    Raises :class:`BranchAmbiguity` when ``lambda`` sits off the cut by at
    most ``1e-10 |lambda|``: there the sign of the imaginary part is noise.
    """
    lam = np.asarray(lam, dtype=np.complex128)
    near = (lam.real < 0) & (np.abs(lam.imag) > 0) & (np.abs(lam.imag) <= BRANCH_TOL * np.abs(lam))
    if np.any(near):
        raise BranchAmbiguity("eigenvalue within 1e-10 of the negative real axis")
    on_cut = (lam.real < 0) & (lam.imag == 0)
    root = np.sqrt(lam)
    return np.where(on_cut, 1j * np.sqrt(np.abs(lam.real)), root)


def spectrum_to_zeros(spec: Spectrum, N: int) -> ZeroSequence:
    """Zeros ``(0 [, 0], sqrt(l_1), -sqrt(l_1), sqrt(l_2), ...)`` aligned to the lattice.

    ``+sqrt(lambda_k)`` takes index ``2k`` (lattice point ``k``) and
    ``-sqrt(lambda_k)`` index ``2k+1``; index 1 is the zero at the origin and,
    for ``N = 1``, index 0 is the polynomial zero at the origin.
    """
    main = main_part(N)
    root = principal_sqrt(spec.eigenvalues)
    K = len(spec)
    base = np.empty(2 * K + 1, dtype=np.complex128)
    base[0] = 0.0
    base[1::2] = root
    base[2::2] = -root
    zeros = np.concatenate([np.zeros(N, dtype=np.complex128), base])
    return ZeroSequence.from_main(main, zeros)


def zeros_to_spectrum(zeros: ZeroSequence) -> Spectrum:
    """``lambda_k = z_{2k}^2`` for every ``k`` with index ``2k`` present."""
    idx = zeros.indices
    sel = (idx >= 2) & (idx % 2 == 0)
    return Spectrum(zeros.zeros[sel] ** 2)


@dataclass(frozen=True)
class ExperimentResult:
    lhs: float
    rhs: float
    profile: int

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else math.nan


def theorem12_experiment(spec_a: Spectrum, spec_b: Spectrum, profile: int, M: int) -> ExperimentResult:
    """``||u - u~||`` against ``||lambda - lambda~||`` (N=1) or ``||v - v~||`` against Lambda_1 (N=0).

    Both spectra go to zero sequences, the tails are recovered by the moment
    system with cutoff ``M`` and the L2(0, pi) distance is ``sqrt(2)`` times the
    tail distance.
    """
    if len(spec_a) != len(spec_b):
        raise ValidationError("spectra must have the same length")
    main = main_part(profile)
    za = spectrum_to_zeros(spec_a, profile)
    zb = spectrum_to_zeros(spec_b, profile)
    rhs = spec_a.Lambda(spec_b, 1 - profile)
    rec = stability_ratio(za, zb, main, M)
    lhs = 0.0 if rec is None else SQRT2 * rec.numerator
    return ExperimentResult(float(lhs), float(rhs), profile)


def cosine_fixture_spectrum(eps: float, n_max: int) -> Spectrum:
    """Exact eigenvalues for ``u = 2 eps cos x``: ``lambda_1 = 1 + 2 eps``, ``lambda_n = n^2`` otherwise.

    With ``c_{+-1} = eps/2`` the function factors as
    ``z sin(pi z) (1 - 2 eps / (z^2 - 1))``.
    """
    lam = np.arange(1, n_max + 1, dtype=float) ** 2
    lam[0] = 1 + 2 * eps
    return Spectrum(lam)
