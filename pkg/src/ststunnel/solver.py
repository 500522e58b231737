"""Plane-wave solutions, wave packets and time-operator expectation values
for a rectangular barrier on ``0 < x < L``.

Waves are never normalised.  Every expectation value carries its own
denominator ``sum_r int |C_E^r G^r(E, x)|^2 dE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    Barrier,
    DomainError,
    EnergyWindow,
    PhysicalParams,
    QuadratureError,
    momentum,
    momentum_array,
)
from .quadrature import DEFAULT_SETTINGS, QuadratureSettings, central_difference, integrate_complex

# relative guard band around E = V0 for the strong-potential formulas
BRANCH_GUARD = 1e-9
# <T>(0) is taken at x = X0_FRACTION * L
X0_FRACTION = 1e-8

Geometry = tuple[PhysicalParams, Barrier]


# --------------------------------------------------------------------------
# energy distributions and packets


@dataclass(frozen=True)
class Distribution:
    """Energy distribution ``C_E``: a constant, or linear interpolation of a table."""

    value: complex = 0j
    energies: tuple[float, ...] | None = None
    weights: tuple[complex, ...] | None = None

    def __post_init__(self) -> None:
        if (self.energies is None) != (self.weights is None):
            raise DomainError("tabulated distribution needs both energies and weights")
        if self.energies is not None:
            E = np.asarray(self.energies, dtype=float)
            if len(E) < 2 or len(E) != len(self.weights):
                raise DomainError("tabulated distribution needs >= 2 matching (E, C) pairs")
            if np.any(np.diff(E) <= 0):
                raise DomainError("tabulated energies must be strictly increasing")

    @classmethod
    def constant(cls, value: complex) -> "Distribution":
        return cls(value=complex(value))

    @classmethod
    def tabulated(cls, energies: Sequence[float], weights: Sequence[complex]) -> "Distribution":
        return cls(energies=tuple(float(e) for e in energies), weights=tuple(complex(w) for w in weights))

    @property
    def is_tabulated(self) -> bool:
        return self.energies is not None

    def is_zero(self) -> bool:
        if self.is_tabulated:
            return all(w == 0 for w in self.weights)
        return self.value == 0

    def __call__(self, E) -> np.ndarray:
        E = np.asarray(E, dtype=float)
        if not self.is_tabulated:
            return np.full(E.shape, self.value, dtype=complex)
        xs = np.asarray(self.energies)
        w = np.asarray(self.weights)
        re = np.interp(E, xs, w.real, left=0.0, right=0.0)
        im = np.interp(E, xs, w.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass(frozen=True)
class WavePacketSpec:
    window: EnergyWindow
    dist_plus: Distribution = field(default_factory=lambda: Distribution.constant(1.0))
    dist_minus: Distribution = field(default_factory=lambda: Distribution.constant(0.0))

    def __post_init__(self) -> None:
        if self.dist_plus.is_zero() and self.dist_minus.is_zero():
            raise DomainError("at least one energy distribution must be non-zero")
        for dist in (self.dist_plus, self.dist_minus):
            if dist.is_tabulated:
                lo, hi = dist.energies[0], dist.energies[-1]
                if lo < self.window.E_lo or hi > self.window.E_hi:
                    raise DomainError("tabulated nodes must lie inside the energy window")

    @classmethod
    def right_moving(cls, E_lo: float, E_hi: float, C: complex = 1.0) -> "WavePacketSpec":
        """Constant ``C_E^+ = C`` on ``[E_lo, E_hi]`` and ``C_E^- = 0``."""
        return cls(EnergyWindow(E_lo, E_hi), Distribution.constant(C), Distribution.constant(0.0))

    def components(self):
        for sign, dist in ((+1, self.dist_plus), (-1, self.dist_minus)):
            if not dist.is_zero():
                yield sign, dist

    def breakpoints(self, barrier: Barrier) -> list[float]:
        """Energies where integrands have kinks or integrable singularities."""
        lo, hi = self.window.E_lo, self.window.E_hi
        pts = set()
        for dist in (self.dist_plus, self.dist_minus):
            if dist.is_tabulated:
                pts.update(dist.energies)
        pts.update((0.0, barrier.V0))
        return sorted(p for p in pts if lo < p < hi)


@dataclass(frozen=True)
class EmptyPacket:
    """Both distributions identically zero; only meaningful for densities."""

    window: EnergyWindow

    def components(self):
        return iter(())

    def breakpoints(self, barrier: Barrier) -> list[float]:
        return []


# --------------------------------------------------------------------------
# piecewise plane waves


@dataclass(frozen=True)
class RegionWave:
    p1: complex
    p2: complex
    L: float
    A1p: complex
    A1m: complex
    A2p: complex
    A2m: complex
    A3p: complex
    A3m: complex


def connect_barrier(params: PhysicalParams, barrier: Barrier, E: float, A1p: complex = 1.0, A1m: complex = 0.0) -> RegionWave:
    """Match the three plane-wave regions so ``G`` is continuous at 0 and L."""
    if E < 0:
        raise DomainError(f"connect_barrier needs E >= 0, got {E}")
    p1 = momentum(E, 0.0, params)
    p2 = momentum(E, barrier.V0, params)
    phase = 1j * (p2 - p1) * barrier.L / params.hbar
    A1p, A1m = complex(A1p), complex(A1m)
    return RegionWave(
        p1=p1,
        p2=p2,
        L=barrier.L,
        A1p=A1p,
        A1m=A1m,
        A2p=A1p,
        A2m=A1m,
        A3p=A1p * np.exp(phase),
        A3m=A1m * np.exp(-phase),
    )


def spatial_wave(wave: RegionWave, params: PhysicalParams, x: float, component: int = +1) -> complex:
    """``G^{+/-}(x)``; the points ``x = 0`` and ``x = L`` belong to the barrier region."""
    s = 1 if component > 0 else -1
    if x < 0:
        A, p = (wave.A1p if s > 0 else wave.A1m), wave.p1
    elif x <= wave.L:
        A, p = (wave.A2p if s > 0 else wave.A2m), wave.p2
    else:
        A, p = (wave.A3p if s > 0 else wave.A3m), wave.p1
    return complex(A * np.exp(s * 1j * p * x / params.hbar))


def wkb_spatial(
    params: PhysicalParams,
    V: Callable[[float], float],
    E: float,
    x0: float,
    x: float,
    component: int = +1,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    """Phase-integral amplitude ``exp[+/- (i/hbar) int_x0^x sqrt(2m(E - V)) dx']``."""
    if x == x0:
        return 1.0 + 0j
    lo, hi = (x0, x) if x > x0 else (x, x0)
    orient = 1.0 if x > x0 else -1.0

    def integrand(xs):
        Vx = np.array([V(float(v)) for v in np.ravel(xs)], dtype=float).reshape(np.shape(xs))
        return momentum_array(E - Vx, 0.0, params)

    phase = orient * integrate_complex(integrand, lo, hi, settings).value
    s = 1 if component > 0 else -1
    return complex(np.exp(s * 1j * phase / params.hbar))


def action(E, params: PhysicalParams, barrier: Barrier, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated phase ``S(E, x)`` of ``G^+ = exp(i S / hbar)`` and ``dS/dE``.

    The amplitudes follow from :func:`connect_barrier` with ``A1 = 1``.
    Where a momentum vanishes ``dS/dE`` is infinite; quadrature nodes never
    land there.
    """
    E = np.asarray(E, dtype=float)
    m, L = params.m, barrier.L
    if x < 0:
        p1 = momentum_array(E, 0.0, params)
        with np.errstate(divide="ignore", invalid="ignore"):
            return p1 * x, m * x / p1
    p2 = momentum_array(E, barrier.V0, params)
    if x <= L:
        with np.errstate(divide="ignore", invalid="ignore"):
            return p2 * x, m * x / p2
    p1 = momentum_array(E, 0.0, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        return p2 * L + p1 * (x - L), m * L / p2 + m * (x - L) / p1


def log_scale(packet, geometry: Geometry, x: float) -> float:
    """Largest ``log|G^r(E, x)|`` over a sample of window energies.

    Subtracting it keeps integrands of order one; ratios of integrals are
    unaffected.
    """
    params, barrier = geometry
    win = packet.window
    samples = np.concatenate([np.linspace(win.E_lo, win.E_hi, 33), packet.breakpoints(barrier)])
    S, _ = action(samples, params, barrier, x)
    best = -math.inf
    for sign, _dist in packet.components():
        best = max(best, float(np.max(-sign * S.imag / params.hbar)))
    return best if math.isfinite(best) else 0.0


def component_terms(dist: Distribution, sign: int, params: PhysicalParams, barrier: Barrier, x: float, shift: float = 0.0):
    """Return ``(psi, dpsi)``: scaled ``C G^r`` and its analytic energy derivative."""
    hb = params.hbar

    def wave(E):
        S, dS = action(E, params, barrier, x)
        return np.exp(sign * 1j * S / hb - shift), dS

    def psi(E):
        G, _ = wave(E)
        return dist(E) * G

    def dpsi(E):
        E = np.asarray(E, dtype=float)
        G, dS = wave(E)
        out = dist(E) * (sign * 1j / hb) * dS * G
        if dist.is_tabulated:
            lo, hi = dist.energies[0], dist.energies[-1]
            step = 1e-6 * (hi - lo)
            slope = central_difference(dist, E, step, min(lo, E.min()), max(hi, E.max()), dist.energies)
            out = out + slope * G
        return out

    return psi, dpsi


def expectation_time(packet: WavePacketSpec, geometry: Geometry, x: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> complex:
    """Time-operator expectation value ``<T>(x)`` of a packet.

    ``<T>(x) = i hbar sum_r int C G d/dE[C G]* / sum_r int |C G|^2``.
    The derivative of ``G`` is analytic via ``dp/dE = m/p``.
    """
    params, barrier = geometry
    win = packet.window
    shift = log_scale(packet, geometry, x)
    breaks = packet.breakpoints(barrier)
    num = 0j
    den = 0.0
    for sign, dist in packet.components():
        psi, dpsi = component_terms(dist, sign, params, barrier, x, shift)
        num += integrate_complex(
            lambda E: psi(E) * np.conj(dpsi(E)), win.E_lo, win.E_hi, settings, breaks, singular_ends=True
        ).value
        den += integrate_complex(
            lambda E: np.abs(psi(E)) ** 2 + 0j, win.E_lo, win.E_hi, settings, breaks, singular_ends=True
        ).value.real
    if den == 0.0:
        raise DomainError(f"particle never found at any time at x={x}")
    return _finite(1j * params.hbar * num / den)


def _finite(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise QuadratureError(f"non-finite time {z}")
    return z


# --------------------------------------------------------------------------
# closed forms for the constant right-moving packet on [0, E_max]


def _strong_domain(barrier: Barrier, E_max: float) -> None:
    if not E_max > 0:
        raise DomainError(f"E_max must be positive, got {E_max}")
    if not E_max < barrier.V0 * (1.0 - BRANCH_GUARD):
        raise DomainError(f"need E_max < V0 (strong-potential regime), got E_max={E_max}, V0={barrier.V0}")


def _p0_pE(params: PhysicalParams, barrier: Barrier, E_max: float) -> tuple[float, float]:
    m = params.m
    return math.sqrt(2.0 * m * barrier.V0), math.sqrt(2.0 * m * (barrier.V0 - E_max))


def tunneling_time_closed(params: PhysicalParams, barrier: Barrier, E_max: float) -> complex:
    """``T(0 -> L) = 2imL^2 (1 - g) / (hbar (1 - g) + 2L (p_E - p_0 g))``.

    ``g = exp(-2 (p_0 - p_E) L / hbar)``.  Evaluated in a rearranged form
    that avoids the cancellation in ``p_0 - p_E`` and in the denominator
    when ``E_max / V0`` is small.  The result is purely imaginary.
    """
    _strong_domain(barrier, E_max)
    m, hb, L = params.m, params.hbar, barrier.L
    p0, pE = _p0_pE(params, barrier, E_max)
    d = 2.0 * m * E_max / (p0 + pE)  # p0 - pE
    y = 2.0 * d * L / hb
    one_minus_g = -math.expm1(-y)
    # y - (1 - g) >= 0; its rounding error is harmless next to 2 L p0 (1 - g)
    phi = y - one_minus_g
    den = 2.0 * L * p0 * one_minus_g - hb * phi
    return complex(0.0, 2.0 * m * L * L * one_minus_g / den)


def tunneling_time_series(params: PhysicalParams, barrier: Barrier, E_max: float, order: int = 2) -> complex:
    """Expansion of the closed form in ``E_max / V0``; ``order=1`` keeps the first line."""
    _strong_domain(barrier, E_max)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    m, hb, L = params.m, params.hbar, barrier.L
    p0, _ = _p0_pE(params, barrier, E_max)
    eps = E_max / barrier.V0
    value = m * L / p0 * (1.0 + eps / 4.0)
    if order == 2:
        value += (m * L / (8.0 * p0) + m * L * L / (24.0 * hb)) * eps * eps
    return complex(0.0, value)


def classical_energy_avg_time(params: PhysicalParams, barrier: Barrier, E_max: float) -> float:
    """Energy average of ``m L / sqrt(2m(V0 - E))`` over ``[0, E_max]``.

    Exact value ``L (p_0 - p_E) / E_max``, written as ``2 m L / (p_0 + p_E)``.
    """
    _strong_domain(barrier, E_max)
    p0, pE = _p0_pE(params, barrier, E_max)
    return 2.0 * params.m * barrier.L / (p0 + pE)


def weak_travel_time(params: PhysicalParams, V0: float, L: float, window: EnergyWindow) -> float:
    """Energy average of classical crossing times ``m L / p`` above a weak barrier.

    ``(L / dE) [sqrt(2m(E_f - V0)) - sqrt(2m(E_i - V0))]`` in the
    cancellation-free form ``2 m L / (p_f + p_i)``.
    """
    if V0 < 0 or L <= 0:
        raise DomainError("need V0 >= 0 and L > 0")
    if window.E_lo < V0:
        raise DomainError(f"weak travel time needs E_i >= V0, got E_i={window.E_lo}, V0={V0}")
    m = params.m
    p_i = math.sqrt(2.0 * m * (window.E_lo - V0))
    p_f = math.sqrt(2.0 * m * (window.E_hi - V0))
    return 2.0 * m * L / (p_f + p_i)


def free_to_tunnel_ratio(params: PhysicalParams, barrier: Barrier, E_max: float) -> float:
    """Free travel time over ``[0, E_max]`` divided by ``m L / sqrt(2m(V0 - E_max))``."""
    _strong_domain(barrier, E_max)
    free = weak_travel_time(params, 0.0, barrier.L, EnergyWindow(0.0, E_max))
    _, pE = _p0_pE(params, barrier, E_max)
    return free / (params.m * barrier.L / pE)


def tunneling_time_quadrature(
    params: PhysicalParams,
    barrier: Barrier,
    E_max: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    oracle: bool = False,
) -> complex:
    """``<T>(L) - <T>(eps)`` for the constant right-moving packet on ``[0, E_max]``.

    Valid on both sides of the barrier top.  ``oracle=True`` routes through
    the finite-difference oracle instead of the analytic derivative.
    """
    if not E_max > 0:
        raise DomainError(f"E_max must be positive, got {E_max}")
    if abs(E_max - barrier.V0) <= BRANCH_GUARD * barrier.V0:
        raise DomainError("E_max sits on the branch point E = V0")
    packet = WavePacketSpec.right_moving(0.0, E_max)
    geom = (params, barrier)
    if oracle:
        from .quadrature import oracle_expectation_time as ev
    else:
        ev = expectation_time
    return ev(packet, geom, barrier.L, settings) - ev(packet, geom, X0_FRACTION * barrier.L, settings)


def tunneling_time(params: PhysicalParams, barrier: Barrier, E_max: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> complex:
    """Closed form below the barrier top, quadrature above it."""
    if 0 < E_max < barrier.V0 * (1.0 - BRANCH_GUARD):
        return tunneling_time_closed(params, barrier, E_max)
    return tunneling_time_quadrature(params, barrier, E_max, settings)


# --------------------------------------------------------------------------
# arrival density rho(t|x)


@dataclass(frozen=True)
class DensityValue:
    rho: float
    error: float
    converged: bool


def density_detail(packet, geometry: Geometry, x: float, t: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> DensityValue:
    params, barrier = geometry
    hb = params.hbar
    win = packet.window
    breaks = packet.breakpoints(barrier) if hasattr(packet, "breakpoints") else []
    rho = 0.0
    err = 0.0
    ok = True
    for sign, dist in packet.components():
        def amp(E, sign=sign, dist=dist):
            S, _ = action(E, params, barrier, x)
            return dist(E) * np.exp(-1j * np.asarray(E) * t / hb + sign * 1j * S / hb)

        res = integrate_complex(amp, win.E_lo, win.E_hi, settings, breaks, strict=False)
        a = abs(res.value)
        rho += a * a
        err += 2.0 * a * res.error + res.error ** 2
        ok = ok and res.converged
    return DensityValue(rho, err, ok)


def density_rho(packet, geometry: Geometry, x: float, t: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """``rho(t|x) = |int C^+ e^{-iEt/hbar} G^+|^2 + |int C^- e^{-iEt/hbar} G^-|^2``."""
    return density_detail(packet, geometry, x, t, settings).rho


def grid_axes(x_range: tuple[float, float], t_range: tuple[float, float], nx: int, nt: int) -> tuple[np.ndarray, np.ndarray]:
    if nx < 2 or nt < 2:
        raise DomainError("density grid needs nx, nt >= 2")
    return np.linspace(*x_range, nx), np.linspace(*t_range, nt)


def density_grid_detail(packet, geometry: Geometry, x_range, t_range, nx: int, nt: int, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Return ``(rho, err, ok)`` arrays of shape ``(nt, nx)``."""
    xs, ts = grid_axes(x_range, t_range, nx, nt)
    rho = np.zeros((nt, nx))
    err = np.zeros((nt, nx))
    ok = np.ones((nt, nx), dtype=bool)
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            d = density_detail(packet, geometry, float(x), float(t), settings)
            rho[i, j], err[i, j], ok[i, j] = d.rho, d.error, d.converged
    return rho, err, ok


def density_grid(packet, geometry: Geometry, x_range, t_range, nx: int, nt: int, settings: QuadratureSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Row-major ``rho`` matrix, row ``i`` at ``t_i``, column ``j`` at ``x_j``."""
    return density_grid_detail(packet, geometry, x_range, t_range, nx, nt, settings)[0]
