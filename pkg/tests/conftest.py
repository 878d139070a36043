import cmath

import numpy as np
import pytest

from diracbvp.gridfn import SampledFunction
from diracbvp.ode import DiracSystem
from diracbvp.transformop import potential_diff_norm


def smooth_potential(seed: int, n: int, b1: float = -1.0, b2: float = 1.0, l1_norm: float = 1.0) -> DiracSystem:
    """Random low-order trig-polynomial potential rescaled to ||Q||_1 = l1_norm."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, n + 1)

    def entry():
        vals = np.zeros(n + 1, dtype=complex)
        for m in range(-2, 3):
            cm = (rng.standard_normal() + 1j * rng.standard_normal()) / (1.0 + abs(m)) ** 2
            vals += cm * np.exp(2j * np.pi * m * x)
        return SampledFunction(vals)

    sys = DiracSystem(b1, b2, entry(), entry())
    norm = potential_diff_norm(sys, DiracSystem.zero(b1, b2, n), 1, n)
    scale = l1_norm / norm
    return DiracSystem(b1, b2, sys.q12.scale(scale), sys.q21.scale(scale))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def alpha_quadrature_oracle(quad, b1, b2, lam):
    """Independent alpha_n: explicit eigenvector pairs integrated by
    adaptive quadrature (scipy), no closed-form moments."""
    import scipy.integrate as si

    a, b, c, d = quad
    k = -b2 / b1
    e1 = cmath.exp(1j * b1 * lam)
    e2 = cmath.exp(1j * b2 * lam)

    def f(x):
        return np.array([b * np.exp(1j * b1 * lam * x), -(1 + a * e1) * np.exp(1j * b2 * lam * x)])

    def g_conj(x):
        return np.array([(1 + d / e2) * np.exp(-1j * b1 * lam * x), -k * b * np.exp(-1j * b2 * lam * x)])

    def quad_c(fun):
        re = si.quad(lambda x: fun(x).real, 0, 1, limit=200)[0]
        im = si.quad(lambda x: fun(x).imag, 0, 1, limit=200)[0]
        return re + 1j * im

    f2 = sum(quad_c(lambda x, i=i: abs(f(x)[i]) ** 2 + 0j) for i in range(2)).real
    g2 = sum(quad_c(lambda x, i=i: abs(g_conj(x)[i]) ** 2 + 0j) for i in range(2)).real
    fg = sum(quad_c(lambda x, i=i: f(x)[i] * g_conj(x)[i]) for i in range(2))
    return f2 * g2 / abs(fg) ** 2 - 1.0
