"""Opaque-barrier comparison times for a rectangular box.

These are the approximate forms valid for ``V0 >> E``; they are not the
exact rectangular-barrier Larmor or dwell expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Barrier, DomainError, PhysicalParams, momentum, wavenumbers


@dataclass(frozen=True)
class TimeFamily:
    tau_phase: float
    tau_dwell: float
    tau_larmor: float
    tau_bl: float
    tau_complex: complex
    tau_stochastic: complex


@dataclass(frozen=True)
class OpaqueLimits:
    """Right-hand column of the comparison table (``V0 >> E``)."""

    tau_phase: float
    tau_dwell: float
    tau_larmor: float
    tau_complex_im: float
    tau_stochastic: complex


def friction_coefficient(params: PhysicalParams, barrier: Barrier, E_max: float) -> complex:
    """Telegrapher-equation coefficient ``a = i m^2 E_max^2 / (12 hbar V0)``."""
    if not barrier.V0 > 0:
        raise DomainError("friction coefficient needs V0 > 0")
    return 1j * params.m ** 2 * E_max ** 2 / (12.0 * params.hbar * barrier.V0)


def table1_times(params: PhysicalParams, barrier: Barrier, E: float, friction: complex | None = None) -> TimeFamily:
    """Phase, dwell, Larmor, Buttiker-Landauer, complex and stochastic times at energy ``E``.

    ``friction`` defaults to :func:`friction_coefficient` evaluated at ``E``.
    The complex time is ``tau_dwell - i tau_larmor``.
    """
    if not 0 < E < barrier.V0:
        raise DomainError(f"table times need 0 < E < V0, got E={E}, V0={barrier.V0}")
    k, k0, kappa_c = wavenumbers(params, barrier, E)
    kappa = kappa_c.real
    if kappa <= 0:
        raise DomainError("kappa vanishes at the barrier top")
    m, hb, L = params.m, params.hbar, barrier.L
    tau_p = 2.0 * m / (hb * k * kappa)
    tau_d = 2.0 * m * k / (hb * kappa * k0 * k0)
    tau_l = m * L / (hb * kappa)
    a = friction_coefficient(params, barrier, E) if friction is None else complex(friction)
    return TimeFamily(
        tau_phase=tau_p,
        tau_dwell=tau_d,
        tau_larmor=tau_l,
        tau_bl=math.hypot(tau_l, tau_d),
        tau_complex=complex(tau_d, -tau_l),
        tau_stochastic=a * tau_l ** 2 + 1j * tau_l,
    )


def opaque_limits(params: PhysicalParams, barrier: Barrier, E: float) -> OpaqueLimits:
    if not 0 < E:
        raise DomainError("opaque limits need E > 0")
    k, k0, _ = wavenumbers(params, barrier, E)
    m, hb, L = params.m, params.hbar, barrier.L
    tl = m * L / (hb * k0)
    return OpaqueLimits(
        tau_phase=2.0 * m / (hb * k * k0),
        tau_dwell=0.0,
        tau_larmor=tl,
        tau_complex_im=-tl,
        tau_stochastic=1j * tl,
    )


def classical_crossing_time(params: PhysicalParams, barrier: Barrier, E: float) -> complex:
    """``m L / p`` with ``p = sqrt(2m(E - V0))``; imaginary below the barrier top."""
    p = momentum(E, barrier.V0, params)
    if p == 0:
        raise DomainError("classical crossing time has a pole at E = V0")
    return params.m * barrier.L / p
