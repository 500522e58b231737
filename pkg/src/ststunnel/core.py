"""Units, barrier geometry and the momentum branch convention.

Every complex momentum in the package goes through :func:`momentum`, which
uses the principal square root with ``sqrt(-a) = +i sqrt(a)``.  With that
choice ``exp(+i p x / hbar)`` decays for ``x > 0`` inside a classically
forbidden region.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Input lies outside the domain where a formula is defined."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, value: complex = complex("nan"), error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class PhysicalParams:
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if not (self.m > 0 and math.isfinite(self.m)):
            raise DomainError(f"mass must be positive and finite, got {self.m!r}")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise DomainError(f"hbar must be positive and finite, got {self.hbar!r}")


@dataclass(frozen=True)
class Barrier:
    """Rectangular barrier of height ``V0`` on ``0 < x < L``."""

    V0: float
    L: float = 1.0

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise DomainError(f"barrier length must be positive, got {self.L!r}")
        if not (self.V0 >= 0 and math.isfinite(self.V0)):
            raise DomainError(f"barrier height must be non-negative, got {self.V0!r}")

    @classmethod
    def from_strength(cls, k0L: float, params: PhysicalParams, L: float = 1.0) -> "Barrier":
        """Barrier whose dimensionless strength ``k0 * L`` equals ``k0L``."""
        k0 = k0L / L
        return cls(V0=(params.hbar * k0) ** 2 / (2.0 * params.m), L=L)


@dataclass(frozen=True)
class EnergyWindow:
    E_lo: float
    E_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.E_lo) and math.isfinite(self.E_hi)):
            raise DomainError("energy window bounds must be finite")
        if not self.E_lo < self.E_hi:
            raise DomainError(f"empty energy window [{self.E_lo}, {self.E_hi}]")

    @property
    def width(self) -> float:
        return self.E_hi - self.E_lo


def momentum(E: float, V: float, params: PhysicalParams) -> complex:
    """Return ``sqrt(2 m (E - V))`` with non-negative imaginary part."""
    kin = 2.0 * params.m * (E - V)
    if kin >= 0:
        return complex(math.sqrt(kin), 0.0)
    return complex(0.0, math.sqrt(-kin))


def momentum_array(E, V: float, params: PhysicalParams) -> np.ndarray:
    """Vectorised :func:`momentum`."""
    kin = 2.0 * params.m * (np.asarray(E, dtype=float) - V)
    root = np.sqrt(np.abs(kin))
    return np.where(kin >= 0, root + 0j, 1j * root)


def branch_sqrt(z: complex) -> complex:
    """Principal square root, but with ``sqrt(-a) = +i sqrt(a)`` regardless of signed zeros."""
    z = complex(z)
    if z.imag == 0.0:
        return complex(math.sqrt(z.real), 0.0) if z.real >= 0 else complex(0.0, math.sqrt(-z.real))
    return cmath.sqrt(z)


def wavenumbers(params: PhysicalParams, barrier: Barrier, E: float) -> tuple[float, float, complex]:
    """Return ``(k, k0, kappa)`` with ``kappa**2 = k0**2 - k**2``."""
    if E < 0:
        raise DomainError(f"wavenumbers need E >= 0, got {E}")
    hb = params.hbar
    k = math.sqrt(2.0 * params.m * E) / hb
    k0 = math.sqrt(2.0 * params.m * barrier.V0) / hb
    kappa = branch_sqrt(k0 * k0 - k * k)
    return k, k0, kappa


def tau0(params: PhysicalParams, barrier: Barrier) -> float:
    """Characteristic barrier time ``m L / (hbar k0)``."""
    if barrier.V0 <= 0:
        raise DomainError("characteristic time undefined for V0 = 0")
    return params.m * barrier.L / math.sqrt(2.0 * params.m * barrier.V0)
