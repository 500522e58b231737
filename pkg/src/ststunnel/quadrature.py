"""Adaptive complex quadrature over energy.

``integrate_complex`` is a globally adaptive Gauss-Kronrod (10/21 point)
integrator for vectorised complex integrands.  The error estimate is the
raw ``|K21 - G10|`` difference on each panel, which is pessimistic for
smooth integrands; that keeps the reported bound honest.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .core import Barrier, DomainError, PhysicalParams, QuadratureError

_XK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_XK = np.concatenate([_XK, -_XK[-2::-1]])

_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
_WG = np.concatenate([_WG, _WG[::-1]])

_WK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WK = np.concatenate([_WK, _WK[-2::-1]])

# Gauss nodes sit at the odd positions of the Kronrod node list
_GAUSS_IDX = np.arange(1, 21, 2)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


class QuadResult(NamedTuple):
    value: complex
    error: float
    converged: bool = True
    panels: int = 1


def _gk21(f: Callable, a: float, b: float) -> tuple[complex, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _XK), dtype=complex)
    if fx.shape != _XK.shape:
        fx = np.broadcast_to(fx, _XK.shape)
    kron = half * np.dot(_WK, fx)
    gauss = half * np.dot(_WG, fx[_GAUSS_IDX])
    err = abs(kron - gauss)
    # panels whose width is at the rounding floor cannot be refined further
    err = max(err, 50.0 * _EPS * abs(half) * float(np.dot(_WK, np.abs(fx))))
    return complex(kron), float(err)


def integrate_complex(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    points: Iterable[float] | None = None,
    strict: bool = True,
    singular_ends: bool = False,
) -> QuadResult:
    """Integrate a vectorised complex function over ``[a, b]``.

    ``points`` are interior breakpoints (kinks, integrable singularities)
    that become initial panel edges.  With ``singular_ends`` every initial
    panel ``[lo, hi]`` is mapped by ``E = lo + (hi - lo) sin^2(theta)``,
    which turns inverse square-root behaviour at either edge into a smooth
    integrand.  With ``strict=False`` a result that missed the tolerance is
    returned with ``converged=False`` instead of raising
    :class:`QuadratureError`.
    """
    if not a < b:
        raise DomainError(f"integration needs a < b, got [{a}, {b}]")
    edges = [a]
    for p in sorted(set(points or ())):
        if a < p < b:
            edges.append(float(p))
    edges.append(b)
    if singular_ends:
        panels = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            width = hi - lo

            def g(theta, lo=lo, width=width):
                s = np.sin(theta)
                return np.asarray(f(lo + width * s * s), dtype=complex) * (width * np.sin(2.0 * theta))

            panels.append((g, 0.0, 0.5 * math.pi))
    else:
        panels = [(f, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    return _adaptive(panels, settings, strict)


def _adaptive(panels, settings: QuadratureSettings, strict: bool) -> QuadResult:
    """Global adaptive bisection; ``panels`` holds ``(integrand, lo, hi)`` triples."""
    heap: list[tuple[float, int, int, float, float, complex]] = []
    funcs = []
    for idx, (fn, lo, hi) in enumerate(panels):
        funcs.append(fn)
        val, err = _gk21(fn, lo, hi)
        heap.append((-err, idx, idx, lo, hi, val))
    heapq.heapify(heap)
    counter = len(heap)
    total = sum(item[5] for item in heap)
    total_err = -sum(item[0] for item in heap)

    def target() -> float:
        return max(settings.abs_tol, settings.rel_tol * abs(total))

    n_panels = len(heap)
    while total_err > target() and n_panels < settings.max_subdivisions:
        neg_err, _, k, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            heapq.heappush(heap, (neg_err, counter, k, lo, hi, val))
            break
        v1, e1 = _gk21(funcs[k], lo, mid)
        v2, e2 = _gk21(funcs[k], mid, hi)
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, counter + 1, k, lo, mid, v1))
        heapq.heappush(heap, (-e2, counter + 2, k, mid, hi, v2))
        counter += 2
        n_panels += 1
        # running sums drift; recompute from the panels every so often
        if n_panels % 64 == 0:
            total = sum(item[5] for item in heap)
            total_err = -sum(item[0] for item in heap)

    total = sum(item[5] for item in heap)
    total_err = -sum(item[0] for item in heap)
    if not (math.isfinite(total.real) and math.isfinite(total.imag)):
        raise QuadratureError("integrand produced non-finite values", total, math.inf)
    converged = total_err <= target()
    if not converged and strict:
        raise QuadratureError(
            f"no convergence after {n_panels} panels: error {total_err:.3e} > {target():.3e}",
            total,
            total_err,
        )
    return QuadResult(complex(total), float(total_err), converged, n_panels)


def integrate_sqrt_singular(
    h: Callable[[np.ndarray], np.ndarray],
    params: PhysicalParams,
    barrier: Barrier,
    E_max: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    """``int_0^E_max h(E) / sqrt(2 m (V0 - E)) dE`` via ``u = sqrt(2 m (V0 - E))``.

    ``h`` is a vectorised function of energy.  After the substitution the
    integrand is ``h(E(u)) / m`` on ``[p_E, p_0]``, free of the inverse
    square-root endpoint behaviour at ``E = V0``.
    """
    if not 0 < E_max < barrier.V0:
        raise DomainError(f"need 0 < E_max < V0, got E_max={E_max}, V0={barrier.V0}")
    m = params.m
    p0 = math.sqrt(2.0 * m * barrier.V0)
    pE = math.sqrt(2.0 * m * (barrier.V0 - E_max))

    def g(u):
        return np.asarray(h(barrier.V0 - u * u / (2.0 * m)), dtype=complex) / m

    return integrate_complex(g, pE, p0, settings).value


def central_difference(
    f: Callable[[np.ndarray], np.ndarray],
    E: np.ndarray,
    step: float,
    lo: float,
    hi: float,
    breaks: Sequence[float] = (),
) -> np.ndarray:
    """Second-order derivative estimate of ``f`` on ``E``.

    Stencils never cross ``lo``, ``hi`` or any of ``breaks``; near those the
    three-point one-sided formula is used instead.
    """
    E = np.asarray(E, dtype=float)
    edges = np.array(sorted({lo, hi, *[b for b in breaks if lo < b < hi]}))
    seg = np.clip(np.searchsorted(edges, E, side="right") - 1, 0, len(edges) - 2)
    left, right = edges[seg], edges[seg + 1]
    h = np.full_like(E, step)

    out = np.empty(E.shape, dtype=complex)
    centre = (E - h >= left) & (E + h <= right)
    fwd = ~centre & (E - h < left)
    bwd = ~centre & ~fwd

    if centre.any():
        e = E[centre]
        up, dn = e + step, e - step
        out[centre] = (f(up) - f(dn)) / (up - dn)
    if fwd.any():
        e = E[fwd]
        e1, e2 = e + step, e + 2 * step
        out[fwd] = (-3 * f(e) + 4 * f(e1) - f(e2)) / (e2 - e)
    if bwd.any():
        e = E[bwd]
        e1, e2 = e - step, e - 2 * step
        out[bwd] = (3 * f(e) - 4 * f(e1) + f(e2)) / (e - e2)
    return out


ORACLE_NOISE_FLOOR = 1e-7


def _noisy_integral(f, a, b, settings, breaks) -> complex:
    res = integrate_complex(f, a, b, settings, breaks, strict=False)
    if not res.converged and res.error > max(settings.abs_tol, ORACLE_NOISE_FLOOR * abs(res.value)):
        raise QuadratureError(f"oracle integral error {res.error:.3e} above noise floor", res.value, res.error)
    return res.value


def oracle_expectation_time(packet, geometry, x: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> complex:
    """Brute-force ``<T>(x)`` with every energy derivative taken numerically.

    ``N = 2 pi i hbar^2 sum_r int C G d/dE[C G]*`` and
    ``D = 2 pi hbar sum_r int |C G|^2``; returns ``N / D``.  Writing
    ``C G = C exp(Phi)``, both ``C`` and the exponent ``Phi`` are
    differentiated by central differences with a step of ``1e-6`` window
    widths.  Differencing ``Phi`` rather than ``G`` keeps the rounding noise
    proportional to the phase, which matters as ``x -> 0``.

    On narrow windows the difference quotient carries relative noise of
    order ``eps * V0 / (1e-6 * width)``, which the quadrature cannot beat;
    results within ``ORACLE_NOISE_FLOOR`` relative error are accepted.

    A momentum branch point inside the window (``E = 0`` for ``x`` outside
    the barrier, ``E = V0`` above the top) makes the fixed-step difference
    quotient of the phase inaccurate to roughly ``sqrt(step / width)``.
    """
    from .solver import action, log_scale

    params, barrier = geometry
    win = packet.window
    hb = params.hbar
    step = 1e-6 * win.width
    shift = log_scale(packet, geometry, x)
    breaks = packet.breakpoints(barrier)

    num = 0j
    den = 0.0
    for sign, dist in packet.components():

        def exponent(E, sign=sign):
            S, _ = action(E, params, barrier, x)
            return sign * 1j * S / hb - shift

        def n_integrand(E, exponent=exponent, dist=dist):
            C = dist(E)
            G = np.exp(exponent(E))
            dphi = central_difference(exponent, E, step, win.E_lo, win.E_hi, breaks)
            dC = central_difference(dist, E, step, win.E_lo, win.E_hi, breaks)
            return C * G * np.conj((dC + C * dphi) * G)

        def d_integrand(E, exponent=exponent, dist=dist):
            return np.abs(dist(E) * np.exp(exponent(E))) ** 2 + 0j

        num += _noisy_integral(n_integrand, win.E_lo, win.E_hi, settings, breaks)
        den += _noisy_integral(d_integrand, win.E_lo, win.E_hi, settings, breaks).real

    N = 2.0 * math.pi * 1j * hb * hb * num
    D = 2.0 * math.pi * hb * den
    if D == 0.0:
        raise DomainError(f"particle never found at any time at x={x}")
    return complex(N / D)
