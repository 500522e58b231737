"""Self-checks run by ``ststunnel verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fractional as frac
from .core import Barrier, PhysicalParams, tau0
from .quadrature import QuadratureSettings
from .solver import (
    classical_energy_avg_time,
    tunneling_time_closed,
    tunneling_time_quadrature,
    tunneling_time_series,
)

STRENGTHS = (math.pi / 10, 3 * math.pi, 30 * math.pi)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def fractional_checks(params: PhysicalParams, grid_n: int = 201) -> list[CheckResult]:
    out = []
    grid = frac.UniformGrid.spanning(0.0, 20.0, max(grid_n, 3))

    worst = 0.0
    for omega, V0 in ((1.0, 0.0), (2.0, 0.5), (5.0, 1.0)):
        for sign in (+1, -1):
            worst = max(worst, frac.weak_pde_residual(params, V0, omega, sign, grid, "analytic"))
    out.append(CheckResult("weak PDE analytic residual", worst <= 1e-12, f"max {worst:.3e} (<= 1e-12)"))

    const = frac.SampledSignal(grid, np.full(grid.n, 3.25 + 0j))
    zero = bool(np.all(frac.caputo_half(const).values == 0))
    out.append(CheckResult("Caputo of constant", zero, "exactly zero" if zero else "non-zero samples"))

    beta = -1j
    errs = []
    g = grid
    for _ in range(2):
        sig = frac.SampledSignal.sample(lambda t: np.exp(beta * t), g)
        ref = frac.exact_exponential_caputo(beta, g.times, g.t0)
        diff = np.abs(frac.caputo_half(sig).values - ref)
        errs.append(float(np.max(diff[g.trailing_third()])))
        g = g.refined()
    q = math.log2(errs[0] / errs[1])
    out.append(CheckResult("Caputo eigenvalue order", q >= 1.2, f"measured {q:.3f} (>= 1.2, theory 1.5)"))

    q = frac.convergence_order(params, 0.0, 1.0, grid)
    out.append(CheckResult("weak PDE discrete order", q >= 1.0, f"measured {q:.3f} (>= 1) at n={grid.n}"))
    return out


def limit_checks(params: PhysicalParams, barrier: Barrier, E_max: float, settings: QuadratureSettings) -> list[CheckResult]:
    out = []
    m, L = params.m, barrier.L

    worst = 0.0
    for k0L in STRENGTHS:
        b = Barrier.from_strength(k0L, params, L)
        ratio = tunneling_time_closed(params, b, 1e-8 * b.V0).imag / tau0(params, b)
        worst = max(worst, abs(ratio - 1.0))
    out.append(CheckResult("low-energy anchor Im(T)/tau0", worst <= 1e-4, f"max |ratio - 1| {worst:.3e} (<= 1e-4)"))

    small = PhysicalParams(params.m, params.hbar * 1e-6)
    T = tunneling_time_closed(small, barrier, E_max)
    pE = math.sqrt(2 * m * (barrier.V0 - E_max))
    rel = abs(T - 1j * m * L / pE) / (m * L / pE)
    out.append(CheckResult("classical limit hbar -> 0", rel <= 1e-4, f"rel {rel:.3e} (<= 1e-4)"))

    devs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        c = tunneling_time_closed(params, barrier, eps * barrier.V0)
        s = tunneling_time_series(params, barrier, eps * barrier.V0)
        devs.append(abs(c - s) / abs(c))
    factors = [devs[0] / devs[1], devs[1] / devs[2]]
    out.append(CheckResult("series remainder order", min(factors) >= 7, f"halving factors {factors[0]:.2f}, {factors[1]:.2f} (>= 7)"))

    eps = 1e-2
    avg = classical_energy_avg_time(params, barrier, eps * barrier.V0)
    first = abs(tunneling_time_series(params, barrier, eps * barrier.V0, order=1))
    rel = abs(avg - first) / first
    out.append(CheckResult("classical energy average", rel <= eps * eps, f"rel {rel:.3e} (<= {eps * eps:.0e})"))

    if 0 < E_max < barrier.V0:
        c = tunneling_time_closed(params, barrier, E_max)
        o = tunneling_time_quadrature(params, barrier, E_max, settings, oracle=True)
        rel = abs(o - c) / abs(c)
        out.append(CheckResult("closed form vs quadrature oracle", rel <= 1e-6, f"rel {rel:.3e} (<= 1e-6)"))
    return out


def run_all(params: PhysicalParams, barrier: Barrier, E_max: float, settings: QuadratureSettings, grid_n: int = 201) -> list[CheckResult]:
    return fractional_checks(params, grid_n) + limit_checks(params, barrier, E_max, settings)
