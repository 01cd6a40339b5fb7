"""Run descriptions: config parsing, initial-data recipes, snapshots.

Configs are INI-style ``key = value`` lines under bracketed sections, parsed
strictly: unknown keys, missing required keys and hypothesis violations are
rejected with the offending key and line number.  Initial data comes from a
mode-list recipe (sums of ``amp*cos(k)`` / ``amp*sin(k)`` terms and
constants), a named preset, or a binary snapshot written by a previous run.

Recipes keep theorem hypotheses checkable in closed form: gradient-form
drift data is curl free by construction and component means are read off
the term list.
"""

from __future__ import annotations

import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import Kinetics, ModelParams, State
from .integrator import IntegratorSettings
from .spectral import Grid, SpectralField, VectorField, curl2d, gradient, sobolev_norm

__all__ = [
    "ConfigError",
    "ModeTerm",
    "ScalarRecipe",
    "GradRecipe",
    "Scenario",
    "parse_config",
    "parse_scalar_recipe",
    "parse_sweep_spec",
    "parse_scaling_lambda",
    "write_snapshot",
    "read_snapshot",
    "INITIAL_PRESETS",
    "SNAPSHOT_FORMAT_VERSION",
]

SNAPSHOT_FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Configuration rejected; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        prefix = ""
        if key is not None:
            prefix += f"key {key!r}"
        if line is not None:
            prefix += f" (line {line})"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key = key
        self.line = line


# ---------------------------------------------------------------------------
# recipes


@dataclass(frozen=True)
class ModeTerm:
    kind: str  # 'cos' | 'sin' | 'const'
    k: tuple
    amp: float

    def text(self):
        if self.kind == "const":
            return repr(self.amp)
        ks = ",".join(str(ki) for ki in self.k)
        return f"{self.amp!r}*{self.kind}({ks})"


@dataclass(frozen=True)
class ScalarRecipe:
    """Sum of constant and single-mode terms defining one scalar field."""

    terms: tuple

    def to_field(self, grid) -> SpectralField:
        return SpectralField.from_modes(
            grid, [(t.kind, t.k, t.amp) for t in self.terms]
        )

    def mean_value(self):
        m = 0.0
        for t in self.terms:
            if t.kind == "const":
                m += t.amp
            elif t.kind == "cos" and all(ki == 0 for ki in t.k):
                m += t.amp
        return m

    def max_wavenumber(self):
        return max(
            (max(abs(ki) for ki in t.k) for t in self.terms if t.kind != "const"),
            default=0,
        )

    def text(self):
        return " + ".join(t.text() for t in self.terms) if self.terms else "0"


@dataclass(frozen=True)
class GradRecipe:
    """Drift data given as the gradient of a scalar recipe (curl free)."""

    potential: ScalarRecipe

    def text(self):
        return f"grad({self.potential.text()})"


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]+)"
    r"|(?P<sym>[+\-*(),]))"
)


def _tokenize(text, key, line):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(
                f"cannot parse recipe near {text[pos:pos+12]!r}", key=key, line=line
            )
        if m.group("num") is not None:
            out.append(("num", float(m.group("num"))))
        elif m.group("name") is not None:
            out.append(("name", m.group("name")))
        else:
            out.append((m.group("sym"), m.group("sym")))
        pos = m.end()
    return out


class _TokenStream:
    def __init__(self, tokens, key, line):
        self.tokens = tokens
        self.i = 0
        self.key = key
        self.line = line

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            self.fail(f"expected {kind!r}, found {tok[1]!r}")
        return tok

    def fail(self, msg):
        raise ConfigError(msg, key=self.key, line=self.line)


def _parse_int(ts):
    sign = 1
    if ts.peek()[0] in ("+", "-"):
        sign = -1 if ts.next()[0] == "-" else 1
    tok = ts.expect("num")
    v = tok[1]
    if v != int(v):
        ts.fail(f"wavenumbers must be integers, found {v}")
    return sign * int(v)


def _parse_basis(ts, d, amp):
    name = ts.expect("name")[1]
    if name not in ("cos", "sin"):
        ts.fail(f"unknown basis {name!r}; use cos or sin")
    ts.expect("(")
    ks = [_parse_int(ts)]
    while ts.peek()[0] == ",":
        ts.next()
        ks.append(_parse_int(ts))
    ts.expect(")")
    if len(ks) != d:
        ts.fail(f"{name} takes {d} wavenumber(s) for d={d}, found {len(ks)}")
    return ModeTerm(name, tuple(ks), amp)


def _parse_term(ts, d, sign):
    kind, val = ts.peek()
    if kind == "num":
        ts.next()
        amp = sign * val
        if ts.peek()[0] == "*":
            ts.next()
            return _parse_basis(ts, d, amp)
        return ModeTerm("const", (0,) * d, amp)
    if kind == "name":
        return _parse_basis(ts, d, sign * 1.0)
    ts.fail(f"expected a term, found {val!r}")


def _parse_expr(ts, d) -> ScalarRecipe:
    if ts.peek()[0] is None:
        ts.fail("empty recipe")
    terms = []
    sign = 1.0
    if ts.peek()[0] in ("+", "-"):
        sign = -1.0 if ts.next()[0] == "-" else 1.0
    terms.append(_parse_term(ts, d, sign))
    while ts.peek()[0] is not None:
        op = ts.next()
        if op[0] not in ("+", "-"):
            ts.fail(f"expected + or - between terms, found {op[1]!r}")
        sign = -1.0 if op[0] == "-" else 1.0
        terms.append(_parse_term(ts, d, sign))
    return ScalarRecipe(tuple(terms))


def parse_scalar_recipe(text, d, key=None, line=None) -> ScalarRecipe:
    """Parse ``amp*cos(k1[,k2]) + ... + const`` into a ScalarRecipe."""
    return _parse_expr(_TokenStream(_tokenize(text, key, line), key, line), d)


def _parse_q_recipe(text, d, key, line):
    stripped = text.strip()
    if not stripped.startswith("grad"):
        return parse_scalar_recipe(text, d, key=key, line=line)
    ts = _TokenStream(_tokenize(stripped, key, line), key, line)
    ts.expect("name")
    ts.expect("(")
    inner_tokens = []
    depth = 1
    while True:
        kind, val = ts.next()
        if kind is None:
            ts.fail("unbalanced parentheses in grad(...)")
        if kind == "(":
            depth += 1
        elif kind == ")":
            depth -= 1
            if depth == 0:
                break
        inner_tokens.append((kind, val))
    if ts.peek()[0] is not None:
        ts.fail("trailing input after grad(...)")
    return GradRecipe(_parse_expr(_TokenStream(inner_tokens, key, line), d))


# initial-data presets, resolved per dimension
INITIAL_PRESETS = {
    "smallwave": {
        1: {"u0": "0.1*cos(1)", "q0": "0.1*sin(1)"},
        2: {
            "u0": "0.05 + 0.025*cos(1,1) + 0.025*cos(1,-1)",
            "q0": "grad(0.02*sin(1,0) + 0.02*sin(0,1))",
        },
    },
    "steady": {
        1: {"u0": "0.5", "q0": "0"},
        2: {"u0": "0.5", "q0": "grad(0)"},
    },
}


# ---------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    """Fully validated description of one run."""

    name: str
    n: int
    params: ModelParams
    settings: IntegratorSettings
    u0: Optional[ScalarRecipe] = None
    q0: object = None  # ScalarRecipe (d=1), GradRecipe, or tuple of ScalarRecipe
    snapshot_path: Optional[str] = None
    irrotational: bool = False
    nonnegative_u0: bool = False
    monitors: tuple = ()
    seed: int = 0
    blowup_cap: float = 1e6
    csv_name: Optional[str] = None
    snapshot_every: int = 0
    figures: bool = True
    initial_override: Optional[State] = field(default=None, repr=False)

    def grid(self) -> Grid:
        return Grid(self.params.d, self.n)

    def build_initial_state(self) -> State:
        if self.initial_override is not None:
            return self.initial_override
        grid = self.grid()
        if self.snapshot_path is not None:
            state, header = read_snapshot(self.snapshot_path)
            if header["d"] != self.params.d or header["n"] != self.n:
                raise ConfigError(
                    f"snapshot grid d={header['d']}, n={header['n']} does not match "
                    f"the scenario (d={self.params.d}, n={self.n})",
                    key="snapshot",
                )
            state = State(0.0, state.u, state.q)
            self._check_state_hypotheses(state)
            return state
        u = self.u0.to_field(grid)
        if self.params.d == 1:
            q = VectorField((self.q0.to_field(grid),))
        elif isinstance(self.q0, GradRecipe):
            q = gradient(self.q0.potential.to_field(grid))
        else:
            q = VectorField(tuple(r.to_field(grid) for r in self.q0))
        state = State(0.0, u, q)
        self._check_state_hypotheses(state)
        return state

    def _check_state_hypotheses(self, state):
        if self.nonnegative_u0:
            umin = float(np.min(state.u.values()))
            if umin < -1e-12:
                raise ConfigError(
                    f"u0 declared nonnegative but attains {umin:.3e} on the grid",
                    key="nonnegative_u0",
                )
        if self.irrotational and self.params.d == 2:
            qn = math.sqrt(sum(sobolev_norm(qi, 0.0) ** 2 for qi in state.q))
            cn = sobolev_norm(curl2d(state.q), 0.0)
            if cn > 1e-12 * max(qn, 1.0):
                raise ConfigError(
                    f"q0 declared irrotational but curl norm is {cn:.3e}",
                    key="irrotational",
                )

    def to_config_text(self) -> str:
        """Normalized dump with every default materialized."""
        out = io.StringIO()

        def sec(name, pairs):
            out.write(f"[{name}]\n")
            for k, v in pairs:
                out.write(f"{k} = {v}\n")
            out.write("\n")

        sec("scenario", [("name", self.name), ("seed", self.seed)])
        sec(
            "model",
            [
                ("d", self.params.d),
                ("alpha", repr(self.params.alpha)),
                ("n", self.n),
                ("kinetics", self.params.kinetics.value),
                ("dealias", str(self.params.dealias).lower()),
            ],
        )
        sec(
            "integrator",
            [
                ("t_end", repr(self.settings.t_end)),
                ("dt_max", repr(self.settings.dt_max)),
                ("cfl", repr(self.settings.cfl)),
                ("sample_every", self.settings.sample_every),
                ("mode", self.settings.mode),
            ],
        )
        if self.snapshot_path is not None:
            sec("initial", [("snapshot", self.snapshot_path)])
        else:
            if self.params.d == 1 or isinstance(self.q0, GradRecipe):
                qpairs = [("q0", self.q0.text())]
            else:
                qpairs = [("q0x", self.q0[0].text()), ("q0y", self.q0[1].text())]
            sec("initial", [("u0", self.u0.text())] + qpairs)
        sec(
            "hypotheses",
            [
                ("irrotational", str(self.irrotational).lower()),
                ("nonnegative_u0", str(self.nonnegative_u0).lower()),
                ("monitors", ",".join(self.monitors) if self.monitors else ""),
            ],
        )
        sec(
            "output",
            [
                ("csv", self.csv_name or f"{self.name}.csv"),
                ("snapshot_every", self.snapshot_every),
                ("blowup_cap", repr(self.blowup_cap)),
                ("figures", str(self.figures).lower()),
            ],
        )
        return out.getvalue()


# ---------------------------------------------------------------------------
# config text parsing

_SCHEMA = {
    "scenario": {"name": str, "seed": int},
    "model": {"d": int, "alpha": float, "n": int, "kinetics": str, "dealias": bool},
    "integrator": {
        "t_end": float,
        "dt_max": float,
        "cfl": float,
        "sample_every": int,
        "mode": str,
    },
    "initial": {
        "u0": str,
        "q0": str,
        "q0x": str,
        "q0y": str,
        "snapshot": str,
        "preset": str,
    },
    "hypotheses": {"irrotational": bool, "nonnegative_u0": bool, "monitors": str},
    "output": {
        "csv": str,
        "snapshot_every": int,
        "blowup_cap": float,
        "figures": bool,
    },
    "sweep": {"alphas": str, "amplitudes": str},
    "scaling": {"lambda": int},
}

_DEFAULTS = {
    ("scenario", "name"): "run",
    ("scenario", "seed"): 0,
    ("model", "kinetics"): "quadratic",
    ("model", "dealias"): True,
    ("integrator", "dt_max"): 1e-3,
    ("integrator", "cfl"): 0.4,
    ("integrator", "sample_every"): 10,
    ("integrator", "mode"): "full",
    ("hypotheses", "irrotational"): False,
    ("hypotheses", "nonnegative_u0"): False,
    ("hypotheses", "monitors"): "",
    ("output", "csv"): None,
    ("output", "snapshot_every"): 0,
    ("output", "blowup_cap"): 1e6,
    ("output", "figures"): True,
}

_REQUIRED = (("model", "d"), ("model", "alpha"), ("model", "n"), ("integrator", "t_end"))

_BOOL_WORDS = {
    "true": True,
    "yes": True,
    "on": True,
    "1": True,
    "false": False,
    "no": False,
    "off": False,
    "0": False,
}


def _convert(raw, typ, key, line):
    if typ is str:
        return raw
    if typ is bool:
        v = _BOOL_WORDS.get(raw.strip().lower())
        if v is None:
            raise ConfigError(f"expected a boolean, found {raw!r}", key=key, line=line)
        return v
    try:
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        return typ(raw)
    except ValueError:
        raise ConfigError(
            f"expected {typ.__name__}, found {raw!r}", key=key, line=line
        )


def _read_sections(text, strict):
    values = {}
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in _SCHEMA:
                if strict:
                    raise ConfigError(
                        f"unknown section [{section}]", key=section, line=lineno
                    )
                section = None
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"expected key = value, found {stripped!r}", line=lineno
            )
        if section is None:
            raise ConfigError(
                "key outside any recognized section", line=lineno
            )
        key, _, raw_val = stripped.partition("=")
        key = key.strip()
        val = raw_val.strip()
        if key not in _SCHEMA[section]:
            if strict:
                raise ConfigError(
                    f"unknown key in section [{section}]", key=key, line=lineno
                )
            continue
        full = (section, key)
        if full in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        values[full] = val
        lines[full] = lineno
    return values, lines


def parse_config(text, strict=True) -> Scenario:
    """Parse and fully validate a scenario config.

    Every key is type checked, defaults are materialized, recipes are parsed
    and checked against the declared hypotheses; the error message names the
    failing key and line.
    """
    raw, lines = _read_sections(text, strict)

    def get(section, key, default=None):
        full = (section, key)
        if full in raw:
            return _convert(raw[full], _SCHEMA[section][key], key, lines[full])
        if full in _DEFAULTS:
            return _DEFAULTS[full]
        return default

    def line_of(section, key):
        return lines.get((section, key))

    for section, key in _REQUIRED:
        if (section, key) not in raw:
            raise ConfigError(f"missing required key in [{section}]", key=key)

    d = get("model", "d")
    if d not in (1, 2):
        raise ConfigError(f"d must be 1 or 2, got {d}", key="d", line=line_of("model", "d"))
    alpha = get("model", "alpha")
    if not 0.0 < alpha <= 2.0:
        raise ConfigError(
            f"alpha must be in (0, 2], got {alpha}", key="alpha", line=line_of("model", "alpha")
        )
    n = get("model", "n")
    if n < 8 or n % 2 != 0:
        raise ConfigError(
            f"n must be even and >= 8, got {n}", key="n", line=line_of("model", "n")
        )
    try:
        kin = Kinetics.parse(get("model", "kinetics"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="kinetics", line=line_of("model", "kinetics")) from exc
    params = ModelParams(d=d, alpha=alpha, kinetics=kin, dealias=get("model", "dealias"))

    try:
        settings = IntegratorSettings(
            dt_max=get("integrator", "dt_max"),
            t_end=get("integrator", "t_end"),
            cfl=get("integrator", "cfl"),
            sample_every=get("integrator", "sample_every"),
            mode=get("integrator", "mode"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key="integrator", line=line_of("integrator", "t_end")) from exc

    # initial data: exactly one of recipe / snapshot / preset
    has_recipe = ("initial", "u0") in raw
    has_snapshot = ("initial", "snapshot") in raw
    has_preset = ("initial", "preset") in raw
    if sum([has_recipe, has_snapshot, has_preset]) != 1:
        raise ConfigError(
            "provide exactly one of u0/q0 recipes, snapshot, or preset in [initial]",
            key="initial",
        )

    u0 = q0 = None
    snapshot_path = None
    if has_preset:
        pname = get("initial", "preset")
        if pname not in INITIAL_PRESETS:
            raise ConfigError(
                f"unknown preset {pname!r}; available: {sorted(INITIAL_PRESETS)}",
                key="preset",
                line=line_of("initial", "preset"),
            )
        spec = INITIAL_PRESETS[pname][d]
        u0 = parse_scalar_recipe(spec["u0"], d, key="preset")
        q0 = _parse_q_recipe(spec["q0"], d, key="preset", line=None)
    elif has_snapshot:
        snapshot_path = get("initial", "snapshot")
    else:
        u0 = parse_scalar_recipe(
            raw[("initial", "u0")], d, key="u0", line=line_of("initial", "u0")
        )
        if d == 1:
            if ("initial", "q0") not in raw:
                raise ConfigError("missing q0 recipe", key="q0")
            q0 = parse_scalar_recipe(
                raw[("initial", "q0")], d, key="q0", line=line_of("initial", "q0")
            )
        else:
            if ("initial", "q0") in raw:
                q0 = _parse_q_recipe(
                    raw[("initial", "q0")], d, key="q0", line=line_of("initial", "q0")
                )
                if not isinstance(q0, GradRecipe):
                    raise ConfigError(
                        "2-D q0 must be grad(...) or given per component as q0x/q0y",
                        key="q0",
                        line=line_of("initial", "q0"),
                    )
            else:
                if ("initial", "q0x") not in raw or ("initial", "q0y") not in raw:
                    raise ConfigError(
                        "2-D drift data needs q0 = grad(...) or both q0x and q0y",
                        key="q0x",
                    )
                q0 = (
                    parse_scalar_recipe(
                        raw[("initial", "q0x")], d, key="q0x", line=line_of("initial", "q0x")
                    ),
                    parse_scalar_recipe(
                        raw[("initial", "q0y")], d, key="q0y", line=line_of("initial", "q0y")
                    ),
                )

    irrot = get("hypotheses", "irrotational")
    nonneg = get("hypotheses", "nonnegative_u0")
    monitors_raw = get("hypotheses", "monitors")
    monitors = tuple(m.strip() for m in monitors_raw.split(",") if m.strip())
    from .diagnostics import MONITORS

    for m in monitors:
        if m not in MONITORS:
            raise ConfigError(
                f"unknown monitor {m!r}; available: {MONITORS}",
                key="monitors",
                line=line_of("hypotheses", "monitors"),
            )

    if irrot and d != 2:
        raise ConfigError(
            "the irrotational hypothesis applies to d=2 only",
            key="irrotational",
            line=line_of("hypotheses", "irrotational"),
        )
    if "H1_divq_2d" in monitors and not (d == 2 and irrot):
        raise ConfigError(
            "monitor H1_divq_2d needs d=2 and the irrotational hypothesis",
            key="monitors",
            line=line_of("hypotheses", "monitors"),
        )
    if irrot and q0 is not None and not isinstance(q0, GradRecipe):
        raise ConfigError(
            "irrotational declared but the q0 recipe is not grad(...)",
            key="q0",
            line=line_of("hypotheses", "irrotational"),
        )

    theorem_monitors = {"E_half_alpha", "E1_full", "H1_divq_2d"}
    if q0 is not None and theorem_monitors & set(monitors):
        comps = (
            [q0]
            if isinstance(q0, ScalarRecipe)
            else (list(q0) if isinstance(q0, tuple) else [])
        )
        for comp in comps:
            if abs(comp.mean_value()) > 1e-14:
                raise ConfigError(
                    "the declared monitors require mean-zero drift data",
                    key="monitors",
                    line=line_of("hypotheses", "monitors"),
                )

    # recipe modes must fit in the evolved band
    band = n // 3 if params.dealias else n // 2 - 1
    for label, rec in (("u0", u0), ("q0", q0)):
        if rec is None:
            continue
        recs = (
            [rec.potential]
            if isinstance(rec, GradRecipe)
            else (list(rec) if isinstance(rec, tuple) else [rec])
        )
        kmax = max(r.max_wavenumber() for r in recs)
        if kmax > band:
            raise ConfigError(
                f"recipe uses wavenumber {kmax} outside the evolved band "
                f"(|k| <= {band} at n={n})",
                key=label,
                line=line_of("initial", label),
            )

    scenario = Scenario(
        name=get("scenario", "name"),
        n=n,
        params=params,
        settings=settings,
        u0=u0,
        q0=q0,
        snapshot_path=snapshot_path,
        irrotational=irrot,
        nonnegative_u0=nonneg,
        monitors=monitors,
        seed=get("scenario", "seed"),
        blowup_cap=get("output", "blowup_cap"),
        csv_name=get("output", "csv"),
        snapshot_every=get("output", "snapshot_every"),
        figures=get("output", "figures"),
    )
    if scenario.blowup_cap <= 0:
        raise ConfigError(
            "blowup_cap must be positive",
            key="blowup_cap",
            line=line_of("output", "blowup_cap"),
        )
    if scenario.snapshot_every < 0:
        raise ConfigError(
            "snapshot_every must be >= 0",
            key="snapshot_every",
            line=line_of("output", "snapshot_every"),
        )
    # hypothesis checks that need the grid (u0 sign, snapshot curl)
    if snapshot_path is None:
        scenario.build_initial_state()
    return scenario


def _parse_float_list(raw, key, line):
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(float(part))
        except ValueError:
            raise ConfigError(f"expected a float list, found {part!r}", key=key, line=line)
    if not out:
        raise ConfigError("empty list", key=key, line=line)
    return out


def parse_sweep_spec(text, strict=True):
    """Extract the [sweep] alphas/amplitudes lists from a config."""
    raw, lines = _read_sections(text, strict)
    for key in ("alphas", "amplitudes"):
        if ("sweep", key) not in raw:
            raise ConfigError("missing key in [sweep]", key=key)
    alphas = _parse_float_list(raw[("sweep", "alphas")], "alphas", lines[("sweep", "alphas")])
    amps = _parse_float_list(
        raw[("sweep", "amplitudes")], "amplitudes", lines[("sweep", "amplitudes")]
    )
    for a in alphas:
        if not 0.0 < a <= 2.0:
            raise ConfigError(
                f"sweep alpha {a} outside (0, 2]", key="alphas", line=lines[("sweep", "alphas")]
            )
    return alphas, amps


def parse_scaling_lambda(text, strict=True, default=2):
    """Extract the [scaling] lambda value from a config, if present."""
    raw, lines = _read_sections(text, strict)
    if ("scaling", "lambda") not in raw:
        return default
    lam = _convert(raw[("scaling", "lambda")], int, "lambda", lines[("scaling", "lambda")])
    if lam < 1:
        raise ConfigError(
            f"lambda must be a positive integer, got {lam}",
            key="lambda",
            line=lines[("scaling", "lambda")],
        )
    return lam


# ---------------------------------------------------------------------------
# snapshots: one JSON header line + raw little-endian float64 node values


def write_snapshot(path, state: State, alpha, kinetics) -> None:
    """Write the state as a header line plus u-then-q node samples."""
    g = state.grid
    order = ["u"] + [f"q{i+1}" for i in range(g.d)]
    header = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "d": g.d,
        "n": g.n,
        "alpha": alpha,
        "t": state.t,
        "kinetics": kinetics.value if isinstance(kinetics, Kinetics) else str(kinetics),
        "field_order": order,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(state.u.values(), dtype="<f8").tobytes())
        for qi in state.q:
            fh.write(np.ascontiguousarray(qi.values(), dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; the payload samples become the fields' cached values.

    Returns ``(state, header)``.  Because the raw samples are kept verbatim,
    writing the state straight back produces a byte-identical file.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format_version") != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(
            f"unsupported snapshot format version {header.get('format_version')!r}"
        )
    d, n = int(header["d"]), int(header["n"])
    grid = Grid(d, n)
    count = grid.npoints
    expected = (1 + d) * count * 8
    if len(payload) != expected:
        raise ValueError(
            f"snapshot payload has {len(payload)} bytes, expected {expected}"
        )
    arrays = np.frombuffer(payload, dtype="<f8").reshape((1 + d,) + grid.shape)
    fields = []
    for values in arrays:
        f = SpectralField.from_samples(grid, np.asarray(values, dtype=np.float64))
        f._with_cached_values(values)
        fields.append(f)
    state = State(float(header["t"]), fields[0], VectorField(tuple(fields[1:])))
    return state, header
