"""Energies, dissipations, identity residuals and monotonicity monitors.

Each exact balance satisfied by smooth solutions is checked in its
Gronwall (time-integrated) form: the instantaneous energy plus the running
dissipation integral minus the running coupling-work integral must equal
the initial energy.  Time integrals are accumulated trapezoidally at step
boundaries, so every residual converges to zero at the integrator's order.

The coupling-work integrands are cubic in the fields and are integrated on
a 3/2-padded grid, which makes them exact for band-limited states; combined
with 2/3-rule dealiasing in the dynamics the balances then hold exactly at
the semi-discrete level and the reported residuals isolate the time error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ModelParams, State
from .spectral import SpectralField, curl2d, divergence, gradient, quadrature_size

__all__ = [
    "DiagnosticsRow",
    "MonitorReport",
    "IrrotationalReport",
    "RunningIntegrals",
    "compute_row",
    "energy",
    "dissipation",
    "residual_energy_balance",
    "residual_h1_1d",
    "residual_h2_1d",
    "residual_h1_2d",
    "monitor_monotone",
    "irrotational_checks",
    "CSV_COLUMNS",
    "MONITORS",
]

RESIDUAL_FLOOR = 1e-14
MONITORS = ("E0", "E_half_alpha", "E1_full", "H1_divq_2d")

CSV_COLUMNS = (
    "t",
    "E0",
    "Ehalf",
    "E1",
    "E2",
    "D0",
    "D1",
    "D2",
    "mean_u",
    "min_u",
    "max_u",
    "curl_norm",
    "div_q",
    "grad_q",
    "R_low",
    "R_1",
    "R_2",
    "flags",
)


def _hs_sq(f, s):
    """Squared homogeneous Sobolev norm by direct Fourier summation."""
    g = f.grid
    return float(
        (2.0 * np.pi) ** g.d * np.sum(g.hs_weights(s) * np.abs(f.coeffs) ** 2)
    )


def energy(s: State, beta) -> float:
    """E_beta: squared order-beta seminorm of u plus all components of q."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return _hs_sq(s.u, beta) + sum(_hs_sq(qi, beta) for qi in s.q)


def dissipation(s: State, beta, alpha) -> float:
    """D_beta: squared seminorm of u at order beta + alpha/2."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return _hs_sq(s.u, beta + 0.5 * alpha)


def _padded(f, m):
    return f.values_on(m)


def _quad_weight(grid, m):
    return (2.0 * np.pi / m) ** grid.d


def _coupling_1d_all(s: State):
    """I, J1, J2 with shared padded evaluations of the derivative fields."""
    g = s.grid
    m = quadrature_size(g.n)
    k = g.wavevectors[0].astype(np.float64)
    ux = _padded(SpectralField(g, 1j * k * s.u.coeffs), m)
    uxx = _padded(SpectralField(g, -(k**2) * s.u.coeffs), m)
    qx = _padded(SpectralField(g, 1j * k * s.q[0].coeffs), m)
    qxx = _padded(SpectralField(g, -(k**2) * s.q[0].coeffs), m)
    w = _quad_weight(g, m)
    i1 = 1.5 * float(np.sum(qx * ux * ux)) * w
    j1 = 2.5 * float(np.sum(qx * uxx * uxx)) * w
    j2 = 5.0 * float(np.sum(qxx * uxx * ux)) * w
    return i1, j1, j2


def coupling_work_h1_1d(s: State) -> float:
    """(3/2) * integral of q_x (u_x)^2, the H1-level coupling work (d=1)."""
    return _coupling_1d_all(s)[0]


def coupling_work_h2_1d(s: State):
    """The two H2-level coupling integrals (d=1):

    (5/2) * integral q_x (u_xx)^2   and   5 * integral q_xx u_xx u_x.
    """
    _, j1, j2 = _coupling_1d_all(s)
    return j1, j2


def coupling_work_h1_2d(s: State) -> float:
    """integral of (-grad u . q) lap u + |grad u|^2 div q   (d=2)."""
    g = s.grid
    m = quadrature_size(g.n)
    k1, k2 = (ki.astype(np.float64) for ki in g.wavevectors)
    ux = _padded(gradient(s.u)[0], m)
    uy = _padded(gradient(s.u)[1], m)
    lap = _padded(SpectralField(g, -(k1**2 + k2**2) * s.u.coeffs), m)
    q1 = _padded(s.q[0], m)
    q2 = _padded(s.q[1], m)
    dq = _padded(divergence(s.q), m)
    w = _quad_weight(g, m)
    return float(np.sum(-(ux * q1 + uy * q2) * lap + (ux * ux + uy * uy) * dq)) * w


@dataclass
class RunningIntegrals:
    """Trapezoidal accumulators advanced at every step boundary.

    In ``linear_only`` mode the coupling terms are absent from the dynamics,
    so their work integrands are identically zero and the pure-diffusion
    balances hold with zero coupling integrals.
    """

    params: ModelParams
    mode: str
    int_D0: float = 0.0
    int_D1: float = 0.0
    int_D2: float = 0.0
    int_I: float = 0.0
    int_J1: float = 0.0
    int_J2: float = 0.0
    int_N2: float = 0.0
    ref: dict = field(default_factory=dict)
    _prev: dict = field(default_factory=dict)

    @classmethod
    def start(cls, state, params, mode):
        acc = cls(params=params, mode=mode)
        acc.ref = {
            "E0": energy(state, 0.0),
            "E1": energy(state, 1.0),
            "E2": energy(state, 2.0),
        }
        if params.d == 2:
            acc.ref["M1"] = _hs_sq(state.u, 1.0) + _hs_sq(divergence(state.q), 0.0)
        acc._prev = acc._integrands(state)
        return acc

    def _integrands(self, s):
        a = self.params.alpha
        vals = {
            "D0": dissipation(s, 0.0, a),
            "D1": dissipation(s, 1.0, a),
            "D2": dissipation(s, 2.0, a),
        }
        if self.mode == "linear_only":
            vals.update(I=0.0, J1=0.0, J2=0.0, N2=0.0)
        elif self.params.d == 1:
            i1, j1, j2 = _coupling_1d_all(s)
            vals.update(I=i1, J1=j1, J2=j2, N2=0.0)
        else:
            vals.update(I=0.0, J1=0.0, J2=0.0, N2=coupling_work_h1_2d(s))
        return vals

    def advance(self, state, dt):
        cur = self._integrands(state)
        prev = self._prev
        h = 0.5 * dt
        self.int_D0 += h * (prev["D0"] + cur["D0"])
        self.int_D1 += h * (prev["D1"] + cur["D1"])
        self.int_D2 += h * (prev["D2"] + cur["D2"])
        self.int_I += h * (prev["I"] + cur["I"])
        self.int_J1 += h * (prev["J1"] + cur["J1"])
        self.int_J2 += h * (prev["J2"] + cur["J2"])
        self.int_N2 += h * (prev["N2"] + cur["N2"])
        self._prev = cur


@dataclass
class DiagnosticsRow:
    """Everything monitored at one sampling instant."""

    t: float
    E0: float
    Ehalf: float
    E1: float
    E2: float
    D0: float
    Dhalf: float
    D1: float
    D2: float
    mean_u: float
    min_u: float
    max_u: float
    curl_norm: float
    div_q_norm: float
    grad_q_norm: float
    u_l2_sq: float
    u_h1_sq: float
    int_D0: float
    int_D1: float
    int_D2: float
    int_I: float
    int_J1: float
    int_J2: float
    int_N2: float
    R_low: float
    R_1: float
    R_2: float
    flags: str = ""

    def csv_values(self):
        return (
            self.t,
            self.E0,
            self.Ehalf,
            self.E1,
            self.E2,
            self.D0,
            self.D1,
            self.D2,
            self.mean_u,
            self.min_u,
            self.max_u,
            self.curl_norm,
            self.div_q_norm,
            self.grad_q_norm,
            self.R_low,
            self.R_1,
            self.R_2,
            self.flags,
        )


def _rel(err, ref):
    return abs(err) / max(ref, RESIDUAL_FLOOR)


def compute_row(state, params, acc, flags="") -> DiagnosticsRow:
    """Evaluate one diagnostics row from the state and the accumulators."""
    a = params.alpha
    uv = state.u.values()
    e0 = energy(state, 0.0)
    ehalf = energy(state, 0.5 * a)
    e1 = energy(state, 1.0)
    e2 = energy(state, 2.0)
    u_l2 = _hs_sq(state.u, 0.0)
    u_h1 = _hs_sq(state.u, 1.0)

    div_q = math.sqrt(_hs_sq(divergence(state.q), 0.0))
    grad_q = math.sqrt(sum(_hs_sq(qi, 1.0) for qi in state.q))
    curl = math.sqrt(_hs_sq(curl2d(state.q), 0.0)) if params.d == 2 else math.nan

    r_low = _rel(0.5 * e0 + acc.int_D0 - 0.5 * acc.ref["E0"], 0.5 * acc.ref["E0"])
    if params.d == 1:
        r1 = _rel(
            0.5 * e1 + acc.int_D1 - acc.int_I - 0.5 * acc.ref["E1"],
            0.5 * acc.ref["E1"],
        )
        r2 = _rel(
            0.5 * e2 + acc.int_D2 - acc.int_J1 - acc.int_J2 - 0.5 * acc.ref["E2"],
            0.5 * acc.ref["E2"],
        )
    else:
        m1 = u_h1 + div_q**2
        r1 = _rel(0.5 * m1 + acc.int_D1 - acc.int_N2 - 0.5 * acc.ref["M1"], 0.5 * acc.ref["M1"])
        r2 = math.nan

    return DiagnosticsRow(
        t=state.t,
        E0=e0,
        Ehalf=ehalf,
        E1=e1,
        E2=e2,
        D0=dissipation(state, 0.0, a),
        Dhalf=dissipation(state, 0.5 * a, a),
        D1=dissipation(state, 1.0, a),
        D2=dissipation(state, 2.0, a),
        mean_u=float(np.real(state.u.coeffs[(0,) * params.d])),
        min_u=float(np.min(uv)),
        max_u=float(np.max(uv)),
        curl_norm=curl,
        div_q_norm=div_q,
        grad_q_norm=grad_q,
        u_l2_sq=u_l2,
        u_h1_sq=u_h1,
        int_D0=acc.int_D0,
        int_D1=acc.int_D1,
        int_D2=acc.int_D2,
        int_I=acc.int_I,
        int_J1=acc.int_J1,
        int_J2=acc.int_J2,
        int_N2=acc.int_N2,
        R_low=r_low,
        R_1=r1,
        R_2=r2,
        flags=flags,
    )


def _require_rows(tr):
    if len(tr.rows) < 2:
        raise ValueError("trajectory must have at least two sampled rows")


def residual_energy_balance(tr) -> float:
    """Worst relative defect of the L2 balance over the sampled trajectory."""
    _require_rows(tr)
    return max(row.R_low for row in tr.rows)


def residual_h1_1d(tr) -> float:
    """Worst relative defect of the 1-D H1-level balance."""
    _require_rows(tr)
    if tr.params.d != 1:
        raise ValueError("the H1 line-identity residual is defined for d=1")
    return max(row.R_1 for row in tr.rows)


def residual_h2_1d(tr) -> float:
    """Worst relative defect of the 1-D H2-level balance."""
    _require_rows(tr)
    if tr.params.d != 1:
        raise ValueError("the H2 line-identity residual is defined for d=1")
    return max(row.R_2 for row in tr.rows)


def residual_h1_2d(tr) -> float:
    """Worst relative defect of the 2-D H1/div-q balance.

    Only meaningful on runs declared irrotational (curl-free drift data with
    the gradient-form update).
    """
    _require_rows(tr)
    if tr.params.d != 2:
        raise ValueError("the 2-D identity residual is defined for d=2")
    if not tr.irrotational:
        raise ValueError("the 2-D identity residual requires an irrotational run")
    return max(row.R_1 for row in tr.rows)


@dataclass
class MonitorReport:
    """Verdict of one monotonicity monitor over a trajectory."""

    name: str
    initial: float
    max_increment: float
    tolerance: float
    passed: bool
    d: int
    alpha: float

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"monitor {self.name}: max increment {self.max_increment:.3e} "
            f"(tol {self.tolerance:.3e}, d={self.d}, alpha={self.alpha}) -> {verdict}"
        )


def _monitor_series(tr, which):
    if which == "E0":
        return [row.E0 for row in tr.rows]
    if which == "E_half_alpha":
        return [row.Ehalf for row in tr.rows]
    if which == "E1_full":
        return [row.E0 + row.E1 for row in tr.rows]
    if which == "H1_divq_2d":
        if tr.params.d != 2:
            raise ValueError("monitor H1_divq_2d is defined for d=2")
        return [row.u_l2_sq + row.u_h1_sq + row.div_q_norm**2 for row in tr.rows]
    raise ValueError(f"unknown monitor {which!r}; use one of {MONITORS}")


def monitor_monotone(tr, which, rel_tol=1e-9) -> MonitorReport:
    """Check non-increase of a conserved-energy monitor between samples.

    The tolerance is ``rel_tol`` times the initial value of the monitored
    quantity (default 1e-9: rounding plus quadrature drift per interval).
    """
    if not tr.rows:
        raise ValueError("empty trajectory")
    series = _monitor_series(tr, which)
    increments = [b - a for a, b in zip(series, series[1:])]
    max_inc = max(increments, default=0.0)
    tol = rel_tol * max(series[0], RESIDUAL_FLOOR)
    return MonitorReport(
        name=which,
        initial=series[0],
        max_increment=max_inc,
        tolerance=tol,
        passed=max_inc <= tol,
        d=tr.params.d,
        alpha=tr.params.alpha,
    )


@dataclass
class IrrotationalReport:
    """Scalar summaries of the 2-D drift-field structure."""

    curl_norm: float
    grad_q_norm: float
    div_q_norm: float
    poincare_ratio: float


def irrotational_checks(s: State) -> IrrotationalReport:
    """Curl, gradient and divergence norms of q, plus the Poincare ratio.

    For curl-free mean-zero q the gradient and divergence norms coincide;
    the ratio ``||q|| / ||div q||`` is reported but never asserted since the
    inequality constant is not pinned down.
    """
    if s.grid.d != 2:
        raise ValueError("irrotational checks are defined for d=2")
    curl = math.sqrt(_hs_sq(curl2d(s.q), 0.0))
    grad_q = math.sqrt(sum(_hs_sq(qi, 1.0) for qi in s.q))
    div = math.sqrt(_hs_sq(divergence(s.q), 0.0))
    q_l2 = math.sqrt(sum(_hs_sq(qi, 0.0) for qi in s.q))
    ratio = q_l2 / div if div > 0 else math.inf
    return IrrotationalReport(curl, grad_q, div, ratio)
