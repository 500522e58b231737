import math

import numpy as np
import pytest

from ststunnel import (
    Barrier,
    DomainError,
    PhysicalParams,
    classical_crossing_time,
    friction_coefficient,
    table1_times,
    tau0,
    tunneling_time_closed,
    tunneling_time_series,
)
from ststunnel.reference import opaque_limits


def test_table_arithmetic(unit, tall_barrier):
    fam = table1_times(unit, tall_barrier, 50.0)
    assert fam.tau_larmor == pytest.approx(0.1, rel=1e-15)
    assert fam.tau_dwell == pytest.approx(2 * 10 / (10 * 200), rel=1e-15)
    assert fam.tau_phase == pytest.approx(1 / 50, rel=1e-15)
    assert fam.tau_bl == pytest.approx(math.sqrt(0.1 ** 2 + 0.01 ** 2), rel=1e-15)
    assert fam.tau_bl == pytest.approx(0.100499, abs=1e-6)
    assert fam.tau_complex.imag == -fam.tau_larmor
    assert fam.tau_complex.real == fam.tau_dwell


@pytest.mark.parametrize("E", [0.0, -1.0, 100.0, 120.0])
def test_table_domain(unit, tall_barrier, E):
    with pytest.raises(DomainError):
        table1_times(unit, tall_barrier, E)


def test_stochastic_time(unit, tall_barrier):
    fam = table1_times(unit, tall_barrier, 50.0, friction=0.0)
    assert fam.tau_stochastic == 1j * fam.tau_larmor
    a = 0.25 + 0.5j
    fam = table1_times(unit, tall_barrier, 50.0, friction=a)
    assert fam.tau_stochastic == pytest.approx(a * 0.01 + 0.1j, rel=1e-14)


def test_friction_coefficient(unit, tall_barrier):
    assert friction_coefficient(unit, tall_barrier, 0.0) == 0
    assert friction_coefficient(unit, tall_barrier, 10.0) == pytest.approx(1j / 12, rel=1e-15)
    with pytest.raises(DomainError):
        friction_coefficient(unit, Barrier(0.0), 1.0)


@pytest.mark.parametrize("m", [1.0, 2.5])
def test_friction_matches_series_term(m, tall_barrier):
    params = PhysicalParams(m, 0.7)
    E = 0.3
    p0 = math.sqrt(2 * m * tall_barrier.V0)
    a = friction_coefficient(params, tall_barrier, E)
    second = tunneling_time_series(params, tall_barrier, E) - tunneling_time_series(params, tall_barrier, E, order=1)
    l2_term = 1j * m * tall_barrier.L ** 2 / (24 * params.hbar) * (E / tall_barrier.V0) ** 2
    assert a * (tall_barrier.L / p0) ** 2 == pytest.approx(l2_term, rel=1e-14)
    # the remaining second-order piece is i m L / (8 p0) (E / V0)^2
    rest = second - l2_term
    assert rest == pytest.approx(1j * m * tall_barrier.L / (8 * p0) * (E / tall_barrier.V0) ** 2, rel=1e-9)


def test_crossing_time(unit, tall_barrier):
    p0 = math.sqrt(200)
    assert classical_crossing_time(unit, tall_barrier, 200.0) == pytest.approx(1 / p0, rel=1e-15)
    assert classical_crossing_time(unit, tall_barrier, 0.0) == pytest.approx(-1j / p0, rel=1e-15)
    with pytest.raises(DomainError):
        classical_crossing_time(unit, tall_barrier, 100.0)


def test_opaque_convergence_is_monotone(unit, tall_barrier):
    ratios = np.logspace(-1, -4, 25)
    lim_err = {"tau_phase": [], "tau_larmor": [], "tau_dwell": []}
    for r in ratios:
        E = r * tall_barrier.V0
        fam = table1_times(unit, tall_barrier, E)
        lim = opaque_limits(unit, tall_barrier, E)
        lim_err["tau_phase"].append(abs(fam.tau_phase / lim.tau_phase - 1))
        lim_err["tau_larmor"].append(abs(fam.tau_larmor / lim.tau_larmor - 1))
        lim_err["tau_dwell"].append(fam.tau_dwell / fam.tau_larmor)
    for name, errs in lim_err.items():
        assert all(a > b for a, b in zip(errs, errs[1:])), name
    assert lim_err["tau_larmor"][-1] < 1e-4


def test_sts_meets_larmor_at_low_energy(unit):
    for k0L in (math.pi / 10, 3 * math.pi, 30 * math.pi):
        b = Barrier.from_strength(k0L, unit)
        sts = tunneling_time_closed(unit, b, 1e-10 * b.V0).imag
        assert sts == pytest.approx(tau0(unit, b), rel=1e-8)
        assert opaque_limits(unit, b, 1e-10 * b.V0).tau_larmor == pytest.approx(tau0(unit, b), rel=1e-15)


def test_bl_dominated_by_larmor_for_strong_barrier(unit):
    b = Barrier.from_strength(30 * math.pi, unit)
    for r in np.linspace(0.1, 0.8, 15):
        fam = table1_times(unit, b, b.V0 * r * r)
        assert abs(fam.tau_bl / fam.tau_larmor - 1) < 0.01
