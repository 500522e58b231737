"""Order-1/2 fractional operators on uniform grids.

The lower terminal of every operator is the first grid point.  For
exponentials the terminal leaves a transient: with ``T = t - t0``,

    D^{1/2} e^{bt} = b^{1/2} e^{bt} erf(sqrt(b T))
    I^{1/2} e^{bt} = b^{-1/2} e^{bt} erf(sqrt(b T))

and the eigenvalue rule ``b^{+-1/2}`` is recovered only as ``T`` grows.
The ``exact_*`` helpers return these terminal-aware values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .core import DomainError, PhysicalParams

_GAMMA_HALF = math.sqrt(math.pi)


@dataclass(frozen=True)
class UniformGrid:
    t0: float
    dt: float
    n: int

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError(f"grid spacing must be positive, got {self.dt}")
        if self.n < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.n}")

    @classmethod
    def spanning(cls, t0: float, t1: float, n: int) -> "UniformGrid":
        return cls(t0, (t1 - t0) / (n - 1), n)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def refined(self) -> "UniformGrid":
        """Same span, half the spacing."""
        return UniformGrid(self.t0, self.dt / 2, 2 * self.n - 1)

    def trailing_third(self) -> slice:
        return slice(self.n - self.n // 3 - 1, self.n)


@dataclass(frozen=True)
class SampledSignal:
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, f, grid: UniformGrid) -> "SampledSignal":
        return cls(grid, f(grid.times))


def frac_power(alpha: float, beta: complex) -> complex:
    """``beta**alpha`` on the principal branch, ``arg beta`` in ``(-pi, pi]``."""
    beta = complex(beta)
    if beta == 0:
        if alpha < 0:
            raise DomainError("beta**alpha has a pole at beta = 0 for alpha < 0")
        return 0j if alpha > 0 else 1 + 0j
    r = abs(beta)
    theta = math.atan2(beta.imag, beta.real)
    if beta.imag == 0.0 and beta.real < 0:
        theta = math.pi  # -0.0 imaginary part would otherwise give -pi
    return cmath.rect(r ** alpha, alpha * theta)


def caputo_half(signal: SampledSignal) -> SampledSignal:
    """L1 scheme for the order-1/2 Caputo derivative (first sample set to 0)."""
    g = signal.grid
    if g.n < 3:
        raise DomainError("caputo_half needs n >= 3")
    f = signal.values
    j = np.arange(g.n - 1, dtype=float)
    b = np.sqrt(j + 1) - np.sqrt(j)
    df = np.diff(f)
    # out[k] = sum_{j<k} b_j (f[k-j] - f[k-j-1])
    conv = np.convolve(b, df)[: g.n - 1]
    out = np.empty(g.n, dtype=complex)
    out[0] = 0.0
    out[1:] = conv / (math.sqrt(g.dt) * math.gamma(1.5))
    return SampledSignal(g, out)


def rl_half_integral(signal: SampledSignal) -> SampledSignal:
    """Product-trapezoid rule for the order-1/2 Riemann-Liouville integral."""
    g = signal.grid
    if g.n < 2:
        raise DomainError("rl_half_integral needs n >= 2")
    f = signal.values
    n = g.n
    k = np.arange(n, dtype=float)
    p = k ** 1.5
    # interior weights, indexed by distance d = k - j >= 1
    w = np.zeros(n)
    w[1:-1] = p[2:] - 2 * p[1:-1] + p[:-2]
    conv = np.convolve(w, f)[:n]
    # endpoint weights: j = k gets 1, j = 0 gets (k-1)^{3/2} - (k - 3/2) k^{1/2}
    out = conv + f
    kk = k[1:]
    w0 = (kk - 1) ** 1.5 - (kk - 1.5) * np.sqrt(kk)
    out[1:] += (w0 - w[1:]) * f[0]
    out[0] = 0.0
    return SampledSignal(g, out * g.dt ** 0.5 / math.gamma(2.5))


def exact_exponential_caputo(beta: complex, t: np.ndarray, t0: float) -> np.ndarray:
    """Terminal-``t0`` Caputo half derivative of ``exp(beta t)``."""
    T = np.asarray(t, dtype=float) - t0
    return frac_power(0.5, beta) * np.exp(beta * np.asarray(t)) * erf(np.sqrt(beta * T + 0j))


def exact_exponential_rl(beta: complex, t: np.ndarray, t0: float) -> np.ndarray:
    """Terminal-``t0`` Riemann-Liouville half integral of ``exp(beta t)``."""
    T = np.asarray(t, dtype=float) - t0
    return frac_power(-0.5, beta) * np.exp(beta * np.asarray(t)) * erf(np.sqrt(beta * T + 0j))


def weak_dispersion_momentum(params: PhysicalParams, V0: float, omega: float) -> float:
    """``sqrt(2 m hbar w) (1 - V0 / (2 hbar w))``, the first-order weak-potential momentum."""
    hw = params.hbar * omega
    if not hw > 0:
        raise DomainError(f"need hbar*omega > 0, got {hw}")
    p = math.sqrt(2.0 * params.m * hw) * (1.0 - V0 / (2.0 * hw))
    if not p > 0:
        raise DomainError(f"separation momentum {p} <= 0: V0/(hbar omega) too large")
    return p


def weak_pde_residual(
    params: PhysicalParams,
    V0: float,
    omega: float,
    sign: int,
    grid: UniformGrid,
    mode: str = "analytic",
    x: float = 0.0,
) -> float:
    """Max-norm residual of the weak-potential half-order PDE for a plane wave.

    The ansatz ``exp(-i w t +/- i p x / hbar)`` is plugged into
    ``-i hbar d_x phi = s sqrt(2 m i hbar) D^{1/2} phi - s sqrt(m / 2 i hbar) V0 I^{1/2} phi``.

    ``analytic`` uses the eigenvalue rule on every sample.  ``discrete``
    uses :func:`caputo_half` and :func:`rl_half_integral` and compares with
    the left side times the terminal factor ``erf(sqrt(-i w (t - t0)))``,
    over the trailing third of the grid.
    """
    s = 1 if sign > 0 else -1
    hb, m = params.hbar, params.m
    p = weak_dispersion_momentum(params, V0, omega)
    beta = -1j * omega
    t = grid.times
    phi = np.exp(beta * t + s * 1j * p * x / hb)
    lhs = s * p * phi
    c_der = cmath.sqrt(2.0 * m * 1j * hb)
    c_int = cmath.sqrt(m / (2j * hb))

    if mode == "analytic":
        rhs = s * (c_der * frac_power(0.5, beta) - c_int * V0 * frac_power(-0.5, beta)) * phi
        return float(np.max(np.abs(lhs - rhs)))
    if mode == "discrete":
        sig = SampledSignal(grid, phi)
        rhs = s * (c_der * caputo_half(sig).values - c_int * V0 * rl_half_integral(sig).values)
        target = lhs * erf(np.sqrt(beta * (t - grid.t0) + 0j))
        tail = grid.trailing_third()
        return float(np.max(np.abs(target[tail] - rhs[tail])))
    raise ValueError(f"unknown mode {mode!r}")


def convergence_order(params: PhysicalParams, V0: float, omega: float, grid: UniformGrid, sign: int = +1) -> float:
    """Observed order of the discrete residual under one halving of ``dt``."""
    r1 = weak_pde_residual(params, V0, omega, sign, grid, "discrete")
    r2 = weak_pde_residual(params, V0, omega, sign, grid.refined(), "discrete")
    return math.log2(r1 / r2)
