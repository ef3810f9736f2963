"""Random test functions shared by the test modules."""

import math

import numpy as np

from sinetype import FourierTail, MainPart, SineTypeBase, ThetaFunction

PI = math.pi


def main_part(N, b=PI, zeros=None):
    base = SineTypeBase.sin_scaled(b)
    if N == 0:
        return MainPart(base, [1.0])
    roots = zeros if zeros is not None else [0.0] * N
    return MainPart(base, np.polynomial.polynomial.polyfromroots(roots))


def random_tail(rng, b=PI, M=16, norm=None, real=False):
    ks = np.arange(-M, M + 1)
    c = rng.normal(size=ks.size) / (1 + np.abs(ks))
    if not real:
        c = c + 1j * rng.normal(size=ks.size) / (1 + np.abs(ks))
    tail = FourierTail(b, c.astype(np.complex128))
    target = rng.uniform(0.05, 1.0) if norm is None else norm
    return tail.scaled(target / tail.norm())


def random_theta(seed, N, M=16, b=PI, norm=None, real=False):
    rng = np.random.default_rng(seed)
    return ThetaFunction(main_part(N, b), random_tail(rng, b, M, norm, real))
