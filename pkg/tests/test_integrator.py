"""Time stepping: exactness, order, CFL, the run loop and blow-up handling."""

import numpy as np
import pytest

from fracchemo.dynamics import ModelParams, State
from fracchemo.integrator import (
    BlowUpError,
    IntegratorSettings,
    cfl_dt,
    simulate,
    step_ifrk2,
)
from fracchemo.scenario import parse_config
from fracchemo.spectral import Grid, SpectralField, VectorField, curl2d, sobolev_norm

from test_dynamics import random_state


def make_scenario(text):
    return parse_config(text)


class TestStepExactness:
    @pytest.mark.parametrize("dt", [0.05, 0.37, 1.7])
    def test_linear_only_exact_multiplier(self, dt):
        g = Grid(1, 32)
        u = SpectralField.from_function(g, lambda x: np.cos(2 * x))
        q = VectorField((SpectralField.from_function(g, np.sin),))
        s = State(0.0, u, q)
        p = ModelParams(d=1, alpha=1.0)
        out = step_ifrk2(s, p, dt, mode="linear_only")
        expected = np.exp(-2.0 * dt) * np.cos(2 * g.nodes())
        assert np.max(np.abs(out.u.values() - expected)) < 1e-13
        for qa, qb in zip(s.q, out.q):
            assert np.array_equal(qa.coeffs, qb.coeffs)

    @pytest.mark.parametrize("dt", [0.01, 0.5])
    def test_constant_state_fixed_point(self, dt):
        g = Grid(1, 32)
        s = State(
            0.0,
            SpectralField.from_samples(g, np.full(32, 0.9)),
            VectorField.zeros(g),
        )
        p = ModelParams(d=1, alpha=1.5)
        out = step_ifrk2(s, p, dt)
        assert np.max(np.abs(out.u.coeffs - s.u.coeffs)) < 1e-16
        assert np.max(np.abs(out.q[0].coeffs)) < 1e-16

    def test_one_step_richardson_ratio(self):
        # one step of dt vs two of dt/2 differ at third order: halving dt
        # shrinks the difference by ~8 once |k|^alpha dt is small
        rng = np.random.default_rng(20)
        from test_spectral import random_band_limited

        g = Grid(1, 64)
        u = random_band_limited(g, rng, kmax=4, scale=0.1)
        q = VectorField((random_band_limited(g, rng, kmax=4, scale=0.1),))
        s = State(0.0, u, q)
        p = ModelParams(d=1, alpha=1.5)

        def defect(dt):
            one = step_ifrk2(s, p, dt)
            half = step_ifrk2(step_ifrk2(s, p, dt / 2), p, dt / 2)
            return np.max(np.abs(one.u.coeffs - half.u.coeffs))

        defects = [defect(dt) for dt in (2e-2, 1e-2, 5e-3)]
        assert defects[0] > defects[1] > defects[2]
        ratio = defects[1] / defects[2]
        assert 6.5 < ratio < 9.5

    def test_rejects_nonpositive_dt(self):
        rng = np.random.default_rng(21)
        s = random_state(Grid(1, 32), rng)
        p = ModelParams(d=1, alpha=1.5)
        with pytest.raises(ValueError):
            step_ifrk2(s, p, 0.0)

    def test_rejects_nonfinite_state(self):
        g = Grid(1, 32)
        c = np.zeros(32, dtype=np.complex128)
        c[1] = np.inf
        c[-1] = np.inf
        s = State(0.0, SpectralField(g, c), VectorField.zeros(g))
        p = ModelParams(d=1, alpha=1.5)
        with pytest.raises(BlowUpError):
            step_ifrk2(s, p, 0.1)


class TestCfl:
    def test_zero_state_gives_dt_max(self):
        g = Grid(1, 32)
        s = State(0.0, SpectralField.zeros(g), VectorField.zeros(g))
        p = ModelParams(d=1, alpha=1.5)
        settings = IntegratorSettings(dt_max=0.05, t_end=1.0)
        assert cfl_dt(s, p, settings) == 0.05

    def test_formula_value(self):
        g = Grid(1, 128)
        s = State(
            0.0,
            SpectralField.zeros(g),
            VectorField((SpectralField.from_function(g, np.sin),)),
        )
        p = ModelParams(d=1, alpha=1.5)
        settings = IntegratorSettings(dt_max=10.0, t_end=1.0, cfl=0.4)
        got = cfl_dt(s, p, settings)
        expected = 0.4 * (2 * np.pi / 128)  # max|q| = 1, max|u| = 0
        assert abs(got - expected) <= 1e-10 * expected

    def test_amplitude_homogeneity(self):
        g = Grid(1, 128)
        p = ModelParams(d=1, alpha=1.5)
        settings = IntegratorSettings(dt_max=10.0, t_end=1.0)

        def dt_for(amp):
            q = VectorField(
                (SpectralField.from_function(g, lambda x: amp * np.sin(x)),)
            )
            s = State(0.0, SpectralField.zeros(g), q)
            return cfl_dt(s, p, settings)

        assert dt_for(2.0) == pytest.approx(dt_for(1.0) / 2, rel=1e-6)


STEADY = """
[scenario]
name = steady

[model]
d = 1
alpha = 1.5
n = 32

[integrator]
t_end = 1.0
dt_max = 0.05
sample_every = 4

[initial]
u0 = 0.7
q0 = 0
"""


class TestSimulate:
    def test_steady_state(self):
        tr = simulate(make_scenario(STEADY))
        assert not tr.blown_up
        assert tr.rows[0].t == 0.0
        times = tr.times()
        assert all(b > a for a, b in zip(times, times[1:]))
        for row in tr.rows:
            assert row.E0 == pytest.approx(tr.rows[0].E0, abs=1e-13)
            assert row.R_low <= 1e-13
            assert row.R_1 <= 1e-13
            assert row.R_2 <= 1e-13

    def test_linear_only_matches_closed_form(self):
        cfg = make_scenario(
            """
[model]
d = 1
alpha = 1.6
n = 64

[integrator]
t_end = 1.0
dt_max = 0.02
mode = linear_only

[initial]
u0 = 0.4*cos(1) + 0.3*cos(4) + 0.2*sin(9)
q0 = 0.1*sin(1)
"""
        )
        tr = simulate(cfg)
        u0 = cfg.build_initial_state().u
        g = u0.grid
        # independent oracle: damp each mode by hand
        expected = np.exp(-g.k_abs**1.6 * 1.0) * u0.coeffs
        diff = np.max(np.abs(tr.final_state().u.coeffs - expected))
        assert diff <= 1e-10

    def test_mean_conservation(self):
        cfg = make_scenario(
            """
[model]
d = 1
alpha = 1.4
n = 64

[integrator]
t_end = 0.5
dt_max = 0.002
sample_every = 25

[initial]
u0 = 0.3 + 0.1*cos(1) + 0.05*sin(2)
q0 = 0.1*sin(1) + 0.05*cos(3)
"""
        )
        tr = simulate(cfg)
        mean0 = tr.rows[0].mean_u
        for row in tr.rows:
            assert abs(row.mean_u - mean0) <= 1e-12
        for st in tr.states:
            for qi in st.q:
                assert abs(np.real(qi.coeffs[0])) <= 1e-12

    def test_2d_curl_free_propagation(self):
        cfg = make_scenario(
            """
[model]
d = 2
alpha = 1.5
n = 32

[integrator]
t_end = 0.2
dt_max = 0.002
sample_every = 20

[initial]
u0 = 0.1 + 0.05*cos(1,1)
q0 = grad(0.05*sin(1,0) + 0.03*sin(0,1))

[hypotheses]
irrotational = true
"""
        )
        tr = simulate(cfg)
        assert not tr.blown_up
        for st in tr.states:
            qn = np.sqrt(sum(sobolev_norm(qi, 0.0) ** 2 for qi in st.q))
            cn = sobolev_norm(curl2d(st.q), 0.0)
            assert cn <= 1e-12 * max(qn, 1e-14)

    def test_blow_up_flagged_not_raised(self):
        # cap sits just above the initial sup norm, so the aggregation
        # transient trips it within a few steps
        cfg = make_scenario(
            """
[model]
d = 1
alpha = 0.6
n = 32

[integrator]
t_end = 5.0
dt_max = 0.05
sample_every = 1

[initial]
u0 = 2000.0 + 1000.0*cos(1)
q0 = 800.0*sin(1)

[output]
blowup_cap = 3500.0
"""
        )
        tr = simulate(cfg)
        assert tr.blown_up
        assert tr.rows[-1].flags == "blowup"
        assert tr.rows[-1].t < 5.0
        assert tr.blowup_reason

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            IntegratorSettings(dt_max=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            IntegratorSettings(dt_max=0.1, t_end=1.0, cfl=1.5)
        with pytest.raises(ValueError):
            IntegratorSettings(dt_max=0.1, t_end=1.0, sample_every=0)
        with pytest.raises(ValueError):
            IntegratorSettings(dt_max=0.1, t_end=1.0, mode="implicit")
