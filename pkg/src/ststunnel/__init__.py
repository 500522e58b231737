"""Tunnelling times from a time operator in a spacetime-symmetric extension
of nonrelativistic quantum mechanics, for constant-potential barriers."""

from .core import (
    Barrier,
    DomainError,
    EnergyWindow,
    PhysicalParams,
    QuadratureError,
    momentum,
    tau0,
    wavenumbers,
)
from .quadrature import QuadratureSettings, integrate_complex, oracle_expectation_time
from .reference import TimeFamily, classical_crossing_time, friction_coefficient, table1_times
from .solver import (
    Distribution,
    WavePacketSpec,
    classical_energy_avg_time,
    connect_barrier,
    density_grid,
    density_rho,
    expectation_time,
    spatial_wave,
    tunneling_time,
    tunneling_time_closed,
    tunneling_time_series,
    weak_travel_time,
)

__version__ = "0.1.0"
