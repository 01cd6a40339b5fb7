"""Command-line batch runner.

Subcommands:

    run           execute a scenario config; CSV, snapshots and figures
    verify        run the bundled residual/monitor smoke suite
    sweep         amplitude x diffusion-strength matrix from a config
    scaling-test  zoom-symmetry discrepancy for a base scenario
    sobolev       lower-bound search for the quartic embedding constant
    bench         steps/second and FFT share at standard sizes

Exit codes: 0 success, 1 configuration or runtime error, 2 run flagged as
blown up (for ``run``) or a failed check (for ``verify``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from . import spectral
from .diagnostics import (
    CSV_COLUMNS,
    monitor_monotone,
    residual_energy_balance,
    residual_h1_1d,
    residual_h1_2d,
    residual_h2_1d,
)
from .integrator import simulate
from .scenario import (
    ConfigError,
    Scenario,
    parse_config,
    parse_scaling_lambda,
    parse_sweep_spec,
    write_snapshot,
)
from .verification import (
    SWEEP_COLUMNS,
    criticality_sweep,
    estimate_sobolev_constant,
    exact_linear_terminal,
    recompute_sobolev_ratio,
    scaling_symmetry_check,
)

__all__ = ["main"]


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def _csv_line(values):
    return ",".join(_fmt(v) for v in values) + "\n"


class _RunWriter:
    """Streams diagnostics rows to CSV and snapshots as they are sampled."""

    def __init__(self, scenario: Scenario, outdir):
        self.sc = scenario
        self.outdir = outdir
        name = scenario.name
        self.csv_path = os.path.join(outdir, scenario.csv_name or f"{name}.csv")
        self.fh = open(self.csv_path, "w", buffering=1)
        self.fh.write(_csv_line(CSV_COLUMNS))

    def __call__(self, index, row, state):
        self.fh.write(_csv_line(row.csv_values()))
        self.fh.flush()
        every = self.sc.snapshot_every
        if every > 0 and index > 0 and index % every == 0:
            path = os.path.join(self.outdir, f"{self.sc.name}_s{index:05d}.snap")
            write_snapshot(path, state, self.sc.params.alpha, self.sc.params.kinetics)

    def close(self):
        self.fh.close()


def _execute_run(scenario: Scenario, outdir, figures=True):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, f"{scenario.name}.config.txt"), "w") as fh:
        fh.write(scenario.to_config_text())
    writer = _RunWriter(scenario, outdir)
    try:
        trajectory = simulate(scenario, on_row=writer)
    finally:
        writer.close()
    if scenario.snapshot_every > 0:
        write_snapshot(
            os.path.join(outdir, f"{scenario.name}_final.snap"),
            trajectory.final_state(),
            scenario.params.alpha,
            scenario.params.kinetics,
        )
    if figures and scenario.figures:
        from .report import render_field_figure, render_run_figures

        prefix = os.path.join(outdir, scenario.name)
        render_run_figures(trajectory.rows, prefix)
        render_field_figure(trajectory.final_state(), f"{prefix}_field.png")
    return trajectory


def _cmd_run(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        text = fh.read()
    scenario = parse_config(text, strict=args.strict)
    if args.seed is not None:
        scenario.seed = args.seed
    trajectory = _execute_run(scenario, args.out, figures=not args.no_figures)
    for which in scenario.monitors:
        report = monitor_monotone(trajectory, which)
        print(report)
    if trajectory.blown_up:
        print(f"blow-up: {trajectory.blowup_reason} at t={trajectory.rows[-1].t!r}")
        return 2
    print(f"completed: {len(trajectory.rows)} rows -> {os.path.join(args.out, scenario.csv_name or scenario.name + '.csv')}")
    return 0


# ---------------------------------------------------------------------------
# verify: bundled smoke suite

_SMOKE_1D = """
[scenario]
name = verify1d

[model]
d = 1
alpha = 1.6
n = 128

[integrator]
t_end = 0.5
dt_max = 0.00025
sample_every = 100

[initial]
u0 = 0.1*cos(1)
q0 = 0.1*sin(1)

[hypotheses]
monitors = E0
"""

_SMOKE_2D = """
[scenario]
name = verify2d

[model]
d = 2
alpha = 2.0
n = 64

[integrator]
t_end = 0.25
dt_max = 0.001
sample_every = 25

[initial]
u0 = 0.05 + 0.025*cos(1,1) + 0.025*cos(1,-1)
q0 = grad(0.02*sin(1,0) + 0.02*sin(0,1))

[hypotheses]
irrotational = true
nonnegative_u0 = true
monitors = E0
"""

_SMOKE_SMALL = """
[scenario]
name = verifysmall

[model]
d = 1
alpha = 1.25
n = 128

[integrator]
t_end = 0.5
dt_max = 0.001
sample_every = 10

[initial]
u0 = 0.0126156626101008*cos(1)
q0 = 0.0126156626101008*sin(1)

[hypotheses]
monitors = E0,E_half_alpha
"""


def _verify_checks(outdir=None):
    """Yield (name, value, tolerance, passed) for the bundled smoke set."""
    checks = []

    tr1 = simulate(parse_config(_SMOKE_1D))
    checks.append(("energy_balance_1d", residual_energy_balance(tr1), 1e-8))
    checks.append(("h1_identity_1d", residual_h1_1d(tr1), 1e-7))
    checks.append(("h2_identity_1d", residual_h2_1d(tr1), 1e-6))
    m = monitor_monotone(tr1, "E0")
    checks.append(("monitor_E0_1d", max(m.max_increment, 0.0), m.tolerance))

    tr2 = simulate(parse_config(_SMOKE_2D))
    checks.append(("identity_2d", residual_h1_2d(tr2), 1e-6))
    curl_rel = max(
        row.curl_norm / max(math.sqrt(row.E0), 1e-14) for row in tr2.rows
    )
    checks.append(("curl_free_2d", curl_rel, 1e-12))
    gd = max(
        abs(row.grad_q_norm - row.div_q_norm) / max(row.div_q_norm, 1e-14)
        for row in tr2.rows
    )
    checks.append(("grad_eq_div_2d", gd, 1e-12))

    # exact linear decay across the diffusion-strength range
    from .spectral import SpectralField, sobolev_norm

    worst = 0.0
    for alpha in (0.6, 1.0, 1.5, 2.0):
        cfg = parse_config(
            "[model]\nd = 1\nalpha = %r\nn = 64\n"
            "[integrator]\nt_end = 1.0\ndt_max = 0.01\nmode = linear_only\n"
            "[initial]\nu0 = 0.3*cos(1) + 0.2*cos(3) + 0.1*sin(7)\nq0 = 0.1*sin(2)\n" % alpha
        )
        tr = simulate(cfg)
        exact = exact_linear_terminal(cfg.build_initial_state().u, alpha, 1.0)
        diff = SpectralField(exact.grid, tr.final_state().u.coeffs - exact.coeffs)
        worst = max(worst, sobolev_norm(diff, 0.0))
    checks.append(("linear_oracle", worst, 1e-10))

    tr3 = simulate(parse_config(_SMOKE_SMALL))
    m3 = monitor_monotone(tr3, "E_half_alpha")
    checks.append(("monitor_small_data", max(m3.max_increment, 0.0), m3.tolerance))

    if outdir is not None:
        from .report import render_run_figures

        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "verify_summary.csv"), "w") as fh:
            fh.write("check,value,tolerance,passed\n")
            for name, value, tol in checks:
                fh.write(f"{name},{value!r},{tol!r},{str(value <= tol).lower()}\n")
        render_run_figures(tr1.rows, os.path.join(outdir, "verify1d"))
        render_run_figures(tr2.rows, os.path.join(outdir, "verify2d"))

    return checks


def _cmd_verify(args):
    checks = _verify_checks(outdir=args.out)
    failed = 0
    for name, value, tol in checks:
        ok = value <= tol
        failed += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (tol {tol:.1e})")
    if failed:
        print(f"{failed} of {len(checks)} checks failed")
        return 2
    print(f"all {len(checks)} checks passed")
    return 0


def _cmd_sweep(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        text = fh.read()
    base = parse_config(text, strict=args.strict)
    alphas, amplitudes = parse_sweep_spec(text, strict=args.strict)
    table = criticality_sweep(alphas, amplitudes, base, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{base.name}_sweep.csv")
    with open(path, "w") as fh:
        fh.write(_csv_line(SWEEP_COLUMNS))
        for row in table:
            fh.write(_csv_line([row[c] for c in SWEEP_COLUMNS]))
    from .report import render_sweep_figure

    render_sweep_figure(table, os.path.join(args.out, f"{base.name}_sweep.png"))
    print(f"{len(table)} sweep cells -> {path}")
    return 0


def _cmd_scaling(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        text = fh.read()
    base = parse_config(text, strict=args.strict)
    lam = args.lam if args.lam is not None else parse_scaling_lambda(text, strict=args.strict)
    disc = scaling_symmetry_check(base, lam)
    print(f"lambda {lam}: relative terminal discrepancy {disc:.6e}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{base.name}_scaling.csv"), "w") as fh:
            fh.write("lambda,discrepancy\n")
            fh.write(f"{lam},{disc!r}\n")
    return 0


def _cmd_sobolev(args):
    est = estimate_sobolev_constant(args.budget, args.seed)
    recomputed = recompute_sobolev_ratio(est)
    print(f"C_S lower bound  {est.ratio!r}")
    print(f"threshold 4/(9C^2)  {est.threshold!r}")
    print(f"recomputed from snapshot  {recomputed!r}")
    print(f"evaluations used  {est.evaluations}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sobolev.csv"), "w") as fh:
            fh.write("ratio,threshold,evaluations,seed\n")
            fh.write(f"{est.ratio!r},{est.threshold!r},{est.evaluations},{est.seed}\n")
        from .report import render_sobolev_figure

        render_sobolev_figure(est, os.path.join(args.out, "sobolev_maximizer.png"))
    return 0


_BENCH_CASES = ((1, 128), (1, 256), (1, 512), (2, 64), (2, 128))


def _bench_case(d, n, steps):
    from .dynamics import Kinetics, ModelParams, State
    from .integrator import IntegratorSettings, run_loop, step_ifrk2, _ExpCache
    from .spectral import Grid, SpectralField, VectorField, gradient

    grid = Grid(d, n)
    params = ModelParams(d=d, alpha=1.5)
    if d == 1:
        u = SpectralField.from_modes(grid, [("const", (0,), 0.2), ("cos", (1,), 0.1)])
        q = VectorField((SpectralField.from_modes(grid, [("sin", (1,), 0.1)]),))
    else:
        u = SpectralField.from_modes(
            grid, [("const", (0, 0), 0.2), ("cos", (1, 1), 0.05)]
        )
        q = gradient(SpectralField.from_modes(grid, [("sin", (1, 0), 0.05)]))
    dt = 1e-4
    settings = IntegratorSettings(
        dt_max=dt, t_end=steps * dt, cfl=1.0, sample_every=10**9
    )
    state = State(0.0, u, q)
    exp = _ExpCache(grid, params.alpha)
    spectral.reset_fft_seconds()
    t0 = time.perf_counter()
    run_loop(
        state,
        params,
        settings,
        1e6,
        False,
        step_fn=lambda s, h: step_ifrk2(s, params, h, "full", _exp=exp),
        dt_fn=lambda s: dt,
    )
    wall = time.perf_counter() - t0
    fft = spectral.fft_seconds()
    return steps / wall, fft / wall


def _cmd_bench(args):
    lines = []
    for d, n in _BENCH_CASES:
        steps = 400 if d == 1 else (80 if n <= 64 else 40)
        sps, share = _bench_case(d, n, steps)
        lines.append((f"d{d}_n{n}_steps_per_sec", f"{sps:.1f}"))
        lines.append((f"d{d}_n{n}_fft_share", f"{share:.3f}"))
    width = max(len(k) for k, _ in lines)
    for key, value in lines:
        print(f"{key:<{width}} {value}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fracchemo",
        description="Pseudo-spectral simulator and verification harness for "
        "the fractional-diffusion chemotaxis system on the torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument(
            "--strict",
            action="store_true",
            default=True,
            help="reject unknown config keys (default: on)",
        )

    p_run = sub.add_parser("run", help="execute one scenario")
    add_common(p_run)
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the bundled smoke suite")
    p_verify.add_argument("--out", default=None, help="write summary CSV and figures here")
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="criticality sweep from a config")
    add_common(p_sweep)
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_scale = sub.add_parser("scaling-test", help="zoom-symmetry discrepancy")
    add_common(p_scale)
    p_scale.add_argument("--lam", type=int, default=None, help="integer zoom factor")
    p_scale.set_defaults(func=_cmd_scaling)

    p_sob = sub.add_parser("sobolev", help="embedding-constant lower bound")
    p_sob.add_argument("--budget", type=int, default=10000, help="ratio evaluations")
    p_sob.add_argument("--seed", type=int, default=0)
    p_sob.add_argument("--out", default=None, help="write CSV and figure here")
    p_sob.set_defaults(func=_cmd_sobolev)

    p_bench = sub.add_parser("bench", help="throughput and FFT share")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
