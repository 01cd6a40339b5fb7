"""Energies, balance residuals, monitors and the 2-D structure checks."""

import math

import numpy as np
import pytest

from fracchemo.diagnostics import (
    dissipation,
    energy,
    irrotational_checks,
    monitor_monotone,
    residual_energy_balance,
    residual_h1_1d,
    residual_h1_2d,
    residual_h2_1d,
)
from fracchemo.dynamics import ModelParams, State
from fracchemo.integrator import simulate
from fracchemo.scenario import parse_config
from fracchemo.spectral import Grid, SpectralField, VectorField, gradient

from test_spectral import random_band_limited


def cos_sin_state(n=32):
    g = Grid(1, n)
    u = SpectralField.from_function(g, np.cos)
    q = VectorField((SpectralField.from_function(g, np.sin),))
    return State(0.0, u, q)


class TestEnergyDissipation:
    def test_e0(self):
        assert energy(cos_sin_state(), 0.0) == pytest.approx(2 * np.pi, abs=1e-13)

    def test_e1_single_mode(self):
        assert energy(cos_sin_state(), 1.0) == pytest.approx(2 * np.pi, abs=1e-13)

    def test_d1_planche_arithmetic(self):
        # u = cos 2x, alpha = 1, beta = 1: (2 pi) * 2^3 * (1/4 + 1/4) = 8 pi
        g = Grid(1, 32)
        s = State(
            0.0,
            SpectralField.from_function(g, lambda x: np.cos(2 * x)),
            VectorField.zeros(g),
        )
        assert dissipation(s, 1.0, 1.0) == pytest.approx(8 * np.pi, abs=1e-12)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            energy(cos_sin_state(), -1.0)
        with pytest.raises(ValueError):
            dissipation(cos_sin_state(), -0.5, 1.0)


STEADY = """
[model]
d = 1
alpha = 1.5
n = 32

[integrator]
t_end = 0.5
dt_max = 0.05
sample_every = 2

[initial]
u0 = 0.4
q0 = 0
"""

LINEAR_ONLY_1D = """
[model]
d = 1
alpha = 1.2
n = 32

[integrator]
t_end = 0.25
dt_max = 1e-05
sample_every = 5000
mode = linear_only

[initial]
u0 = 0.1*cos(1)
q0 = 0.1*sin(1)
"""

FULL_1D = """
[model]
d = 1
alpha = 1.6
n = 128

[integrator]
t_end = 0.25
dt_max = %r
sample_every = 50

[initial]
u0 = 0.1*cos(1)
q0 = 0.1*sin(1)
"""

LINEAR_ONLY_2D = """
[model]
d = 2
alpha = 1.0
n = 16

[integrator]
t_end = 0.25
dt_max = 1e-05
sample_every = 2500
mode = linear_only

[initial]
u0 = 0.1 + 0.05*cos(1,0)
q0 = grad(0.05*sin(1,0))

[hypotheses]
irrotational = true
"""

QUICK_2D = """
[model]
d = 2
alpha = 1.5
n = 16

[integrator]
t_end = 0.1
dt_max = 0.002
sample_every = 10

[initial]
u0 = 0.1 + 0.05*cos(1,0)
q0 = grad(0.05*sin(1,0))

[hypotheses]
irrotational = true
"""


@pytest.fixture(scope="module")
def steady_tr():
    return simulate(parse_config(STEADY))


@pytest.fixture(scope="module")
def linear_only_2d_tr():
    return simulate(parse_config(LINEAR_ONLY_2D))


@pytest.fixture(scope="module")
def quick_2d_tr():
    return simulate(parse_config(QUICK_2D))


class TestResiduals:
    def test_steady_zero(self, steady_tr):
        assert residual_energy_balance(steady_tr) <= 1e-13
        assert residual_h1_1d(steady_tr) <= 1e-13
        assert residual_h2_1d(steady_tr) <= 1e-13

    def test_linear_only_pure_diffusion_balance(self):
        tr = simulate(parse_config(LINEAR_ONLY_1D))
        assert residual_energy_balance(tr) <= 1e-10
        assert residual_h1_1d(tr) <= 1e-10
        assert residual_h2_1d(tr) <= 1e-10

    def test_full_run_residual_and_convergence(self):
        r_coarse = residual_energy_balance(simulate(parse_config(FULL_1D % 1e-3)))
        r_fine = residual_energy_balance(simulate(parse_config(FULL_1D % 5e-4)))
        assert r_coarse <= 1e-6
        assert r_coarse / r_fine >= 3.0  # O(dt^2)

    def test_linear_only_2d_balance(self, linear_only_2d_tr):
        assert residual_energy_balance(linear_only_2d_tr) <= 1e-10
        assert residual_h1_2d(linear_only_2d_tr) <= 1e-10

    def test_dimension_gates(self, steady_tr, quick_2d_tr):
        with pytest.raises(ValueError):
            residual_h1_2d(steady_tr)
        with pytest.raises(ValueError):
            residual_h1_1d(quick_2d_tr)
        with pytest.raises(ValueError):
            residual_h2_1d(quick_2d_tr)

    def test_irrotational_gate(self):
        cfg = parse_config(QUICK_2D.replace("irrotational = true", "irrotational = false"))
        tr = simulate(cfg)
        with pytest.raises(ValueError):
            residual_h1_2d(tr)

    def test_requires_two_rows(self):
        tr = simulate(parse_config(STEADY))  # fresh copy; rows get truncated
        tr.rows = tr.rows[:1]
        with pytest.raises(ValueError):
            residual_energy_balance(tr)


class TestMonitors:
    def test_steady_passes_all(self, steady_tr):
        for which in ("E0", "E_half_alpha", "E1_full"):
            rep = monitor_monotone(steady_tr, which)
            assert rep.passed
            assert rep.max_increment <= rep.tolerance

    def test_e0_on_full_run(self):
        tr = simulate(parse_config(FULL_1D % 1e-3))
        rep = monitor_monotone(tr, "E0")
        assert rep.passed

    def test_unknown_monitor_rejected(self, steady_tr):
        with pytest.raises(ValueError):
            monitor_monotone(steady_tr, "E3")

    def test_2d_monitor_needs_2d(self, steady_tr):
        with pytest.raises(ValueError):
            monitor_monotone(steady_tr, "H1_divq_2d")

    def test_increasing_series_fails(self):
        tr = simulate(parse_config(STEADY))
        for i, row in enumerate(tr.rows):
            row.E0 = 1.0 + 0.1 * i
        rep = monitor_monotone(tr, "E0")
        assert not rep.passed
        assert rep.max_increment == pytest.approx(0.1, abs=1e-12)


class TestIrrotationalChecks:
    def test_gradient_field_values(self):
        g = Grid(2, 32)
        x, y = g.meshes()
        phi = SpectralField.from_samples(g, np.sin(x + y))
        s = State(0.0, SpectralField.zeros(g), gradient(phi))
        rep = irrotational_checks(s)
        norm_sin = np.pi * np.sqrt(2.0)  # ||sin(x+y)||_L2 on the 2-torus
        assert rep.curl_norm <= 1e-13
        assert rep.div_q_norm == pytest.approx(2 * norm_sin, rel=1e-12)
        assert rep.grad_q_norm == pytest.approx(2 * norm_sin, rel=1e-12)
        assert rep.poincare_ratio > 0

    def test_rotational_field_has_curl(self):
        g = Grid(2, 32)
        x, y = g.meshes()
        q = VectorField(
            (
                SpectralField.from_samples(g, np.cos(y)),
                SpectralField.from_samples(g, np.cos(x)),
            )
        )
        rep = irrotational_checks(State(0.0, SpectralField.zeros(g), q))
        assert rep.curl_norm > 1.0

    def test_random_curl_free_equality(self):
        rng = np.random.default_rng(30)
        g = Grid(2, 24)
        phi = random_band_limited(g, rng, kmax=7)
        s = State(0.0, SpectralField.zeros(g), gradient(phi))
        rep = irrotational_checks(s)
        assert abs(rep.grad_q_norm - rep.div_q_norm) <= 1e-12 * max(rep.div_q_norm, 1.0)

    def test_rejects_1d(self):
        g = Grid(1, 16)
        s = State(0.0, SpectralField.zeros(g), VectorField.zeros(g))
        with pytest.raises(ValueError):
            irrotational_checks(s)


class TestRowContents:
    def test_2d_rows_have_structure_norms(self, quick_2d_tr):
        tr = quick_2d_tr
        for row in tr.rows:
            assert math.isfinite(row.curl_norm)
            assert math.isfinite(row.div_q_norm)
            assert math.isfinite(row.grad_q_norm)
            assert math.isnan(row.R_2)  # no H2 line identity in 2-D

    def test_1d_rows_curl_is_nan(self, steady_tr):
        tr = steady_tr
        for row in tr.rows:
            assert math.isnan(row.curl_norm)
            assert math.isfinite(row.R_2)

    def test_energies_nonnegative(self):
        tr = simulate(parse_config(FULL_1D % 1e-3))
        for row in tr.rows:
            for val in (row.E0, row.Ehalf, row.E1, row.E2, row.D0, row.D1, row.D2):
                assert val >= 0.0
