"""Spectral fields and Fourier-multiplier calculus on the 1-D/2-D torus.

Fields live on ``[-pi, pi]^d`` with periodic boundary conditions and are
stored as Fourier coefficients over integer wavevectors, with the convention

    u(x) = sum_k  uhat(k) exp(i k . x),

so the zero mode is the mean of the field and Parseval reads
``||u||_L2^2 = (2 pi)^d sum_k |uhat(k)|^2``.  Coefficients are kept in numpy
``fftfreq`` layout; the extra ``(-1)^(k1+...+kd)`` phase below anchors the
collocation nodes at ``x_j = -pi + j * (2 pi / n)``.

All fields are real valued: coefficient arrays are Hermitian symmetric and
the Nyquist modes (``|k_i| = n/2``) are forced to zero on construction so
that derivative multipliers stay skew symmetric.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "forward_transform",
    "fractional_laplacian",
    "gradient",
    "divergence",
    "curl2d",
    "sobolev_norm",
    "lp_norm",
    "dealias",
    "mean",
    "l2_inner",
    "integrate_product",
    "fft_seconds",
    "reset_fft_seconds",
]

# Wall time spent inside FFT calls, for the bench report.
_fft_seconds = 0.0
_fft_calls = 0


def fft_seconds():
    """Total wall time spent in forward/inverse FFTs since the last reset."""
    return _fft_seconds


def reset_fft_seconds():
    global _fft_seconds, _fft_calls
    _fft_seconds = 0.0
    _fft_calls = 0


def _fftn(a):
    global _fft_seconds, _fft_calls
    t0 = time.perf_counter()
    out = np.fft.fftn(a)
    _fft_seconds += time.perf_counter() - t0
    _fft_calls += 1
    return out


def _ifftn(a):
    global _fft_seconds, _fft_calls
    t0 = time.perf_counter()
    out = np.fft.ifftn(a)
    _fft_seconds += time.perf_counter() - t0
    _fft_calls += 1
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid on the d-torus ``[-pi, pi]^d``.

    Parameters
    ----------
    d : int
        Dimension, 1 or 2.
    n : int
        Points per dimension; must be even and >= 8.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def spacing(self):
        return 2.0 * np.pi / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def npoints(self):
        return self.n**self.d

    def nodes(self):
        """1-D array of node coordinates along one axis."""
        return -np.pi + self.spacing * np.arange(self.n)

    def meshes(self):
        """Tuple of d coordinate arrays of shape ``grid.shape`` ('ij' order)."""
        x = self.nodes()
        if self.d == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    @cached_property
    def k_axis(self):
        """Integer wavenumbers along one axis in fftfreq order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def wavevectors(self):
        """Tuple of d integer wavenumber arrays of shape ``grid.shape``."""
        k = self.k_axis
        if self.d == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    @cached_property
    def k_abs(self):
        """|k| per mode."""
        ksq = sum(ki.astype(np.float64) ** 2 for ki in self.wavevectors)
        return np.sqrt(ksq)

    @cached_property
    def phase(self):
        """(-1)^(k1+...+kd); maps fft output to coefficients on [-pi, pi)."""
        s = sum(np.abs(ki) for ki in self.wavevectors)
        return np.where(s % 2 == 0, 1.0, -1.0)

    @cached_property
    def nyquist_mask(self):
        """True on modes with any |k_i| = n/2."""
        m = np.zeros(self.shape, dtype=bool)
        for ki in self.wavevectors:
            m |= np.abs(ki) == self.n // 2
        return m

    @cached_property
    def dealias_drop_mask(self):
        """True on modes with any |k_i| > n/3 (2/3-rule discard set)."""
        m = np.zeros(self.shape, dtype=bool)
        for ki in self.wavevectors:
            m |= 3 * np.abs(ki) > self.n
        return m

    @cached_property
    def _hs_weight_cache(self):
        return {}

    def hs_weights(self, s):
        """|k|^(2s) per mode, with the 0^0 = 1 convention so s=0 is L2."""
        s = float(s)
        w = self._hs_weight_cache.get(s)
        if w is None:
            if s == 0.0:
                w = np.ones(self.shape)
            else:
                w = self.k_abs**(2.0 * s)
            w.flags.writeable = False
            self._hs_weight_cache[s] = w
        return w


@dataclass
class SpectralField:
    """Real scalar field on a :class:`Grid`, stored as Fourier coefficients.

    Coefficient arrays are Hermitian symmetric with zero Nyquist modes;
    construction enforces both.  Instances are treated as immutable values;
    physical samples are computed lazily and cached.
    """

    grid: Grid
    coeffs: np.ndarray
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid shape {self.grid.shape}"
            )
        if np.any(c[self.grid.nyquist_mask] != 0):
            c = c.copy()
            c[self.grid.nyquist_mask] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_samples(cls, grid, samples):
        """Build a field from real samples at the grid nodes (forward FFT)."""
        v = np.asarray(samples, dtype=np.float64)
        if v.shape != grid.shape:
            raise ValueError(
                f"sample shape {v.shape} does not match grid shape {grid.shape}"
            )
        c = grid.phase * _fftn(v) / grid.npoints
        c[grid.nyquist_mask] = 0.0
        return cls(grid, c)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(*grid.meshes())`` and transform."""
        return cls.from_samples(grid, fn(*grid.meshes()))

    @classmethod
    def from_modes(cls, grid, terms):
        """Synthesize from a list of ``(kind, kvec, amp)`` mode terms.

        ``kind`` is ``'cos'``, ``'sin'`` or ``'const'``; ``kvec`` is a length-d
        integer tuple (ignored for ``'const'``).  cos(k.x) contributes amp/2
        at +-k, sin(k.x) contributes -+(i amp/2).
        """
        c = np.zeros(grid.shape, dtype=np.complex128)
        for kind, kvec, amp in terms:
            if kind == "const":
                c[(0,) * grid.d] += amp
                continue
            k = tuple(int(ki) for ki in kvec)
            if len(k) != grid.d:
                raise ValueError(f"mode {k} has wrong dimension for d={grid.d}")
            if any(abs(ki) >= grid.n // 2 for ki in k):
                raise ValueError(f"mode {k} does not fit on an n={grid.n} grid")
            idx = tuple(ki % grid.n for ki in k)
            cidx = tuple((-ki) % grid.n for ki in k)
            if kind == "cos":
                c[idx] += amp / 2.0
                c[cidx] += amp / 2.0
            elif kind == "sin":
                c[idx] += -0.5j * amp
                c[cidx] += 0.5j * amp
            else:
                raise ValueError(f"unknown mode kind {kind!r}")
        return cls(grid, c)

    def values(self):
        """Real samples at the grid nodes (inverse FFT, cached)."""
        if self._values is None:
            v = np.real(_ifftn(self.coeffs * self.grid.phase)) * self.grid.npoints
            v.flags.writeable = False
            object.__setattr__(self, "_values", v)
        return self._values

    def _with_cached_values(self, samples):
        """Force the physical-sample cache (snapshot reload path)."""
        v = np.asarray(samples, dtype=np.float64)
        v.flags.writeable = False
        object.__setattr__(self, "_values", v)
        return self

    def values_on(self, m):
        """Samples on a refined m-point-per-axis grid via zero padding.

        Exact for any m >= n; used for de-aliased quadrature of products.
        """
        g = self.grid
        if m < g.n:
            raise ValueError("refinement must not truncate the spectrum")
        if m == g.n:
            return self.values()
        fine = Grid(g.d, m)
        cf = np.zeros(fine.shape, dtype=np.complex128)
        h = g.n // 2
        if g.d == 1:
            cf[:h] = self.coeffs[:h]
            cf[m - h + 1 :] = self.coeffs[g.n - h + 1 :]
        else:
            lo, hi = slice(0, h), slice(g.n - h + 1, g.n)
            flo, fhi = slice(0, h), slice(m - h + 1, m)
            cf[flo, flo] = self.coeffs[lo, lo]
            cf[flo, fhi] = self.coeffs[lo, hi]
            cf[fhi, flo] = self.coeffs[hi, lo]
            cf[fhi, fhi] = self.coeffs[hi, hi]
        return np.real(_ifftn(cf * fine.phase)) * fine.npoints


@dataclass
class VectorField:
    """d spectral components sharing one grid (the drift field q)."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        g = comps[0].grid
        if any(c.grid != g for c in comps):
            raise ValueError("vector field components must share one grid")
        if len(comps) != g.d:
            raise ValueError(
                f"expected {g.d} components on a d={g.d} grid, got {len(comps)}"
            )
        object.__setattr__(self, "components", comps)

    @property
    def grid(self):
        return self.components[0].grid

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    @classmethod
    def zeros(cls, grid):
        return cls(tuple(SpectralField.zeros(grid) for _ in range(grid.d)))


def forward_transform(grid, samples):
    """Forward FFT of real node samples; round trips with ``values()``."""
    return SpectralField.from_samples(grid, samples)


def fractional_laplacian(f, alpha):
    """Apply the Fourier multiplier |k|^alpha (nonlocal diffusion operator).

    ``alpha`` must lie in (0, 2]; the zero mode is annihilated.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must be in (0, 2], got {alpha}")
    g = f.grid
    mult = g.k_abs**alpha
    return SpectralField(g, mult * f.coeffs)


def gradient(f):
    """Gradient as a VectorField: component i multiplies by i*k_i."""
    g = f.grid
    comps = tuple(
        SpectralField(g, 1j * ki.astype(np.float64) * f.coeffs) for ki in g.wavevectors
    )
    return VectorField(comps)


def divergence(v):
    """Divergence of a vector field (adjoint pairing with the gradient)."""
    g = v.grid
    c = np.zeros(g.shape, dtype=np.complex128)
    for ki, comp in zip(g.wavevectors, v.components):
        c += 1j * ki.astype(np.float64) * comp.coeffs
    return SpectralField(g, c)


def curl2d(v):
    """Scalar curl d(q2)/dx - d(q1)/dy of a 2-D vector field."""
    g = v.grid
    if g.d != 2:
        raise ValueError("curl2d requires a 2-D field")
    k1, k2 = g.wavevectors
    c = 1j * k1.astype(np.float64) * v[1].coeffs - 1j * k2.astype(np.float64) * v[0].coeffs
    return SpectralField(g, c)


def sobolev_norm(f, s, homogeneous=True):
    """Sobolev norm of order ``s >= 0`` by direct Fourier summation.

    Homogeneous: ``sqrt((2 pi)^d sum |k|^(2s) |uhat(k)|^2)``.  The full norm
    adds the L2 part in quadrature.
    """
    if s < 0:
        raise ValueError(f"Sobolev order must be >= 0, got {s}")
    g = f.grid
    scale = (2.0 * np.pi) ** g.d
    p2 = np.abs(f.coeffs) ** 2
    hom_sq = scale * np.sum(g.hs_weights(s) * p2)
    if homogeneous:
        return np.sqrt(hom_sq)
    return np.sqrt(hom_sq + scale * np.sum(p2))


def lp_norm(f, p):
    """L^p norm for p in {2, 4, inf} by node quadrature (rectangle rule)."""
    v = f.values()
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(v)))
    if p not in (2, 4):
        raise ValueError(f"unsupported p={p}; use 2, 4 or inf")
    w = f.grid.spacing**f.grid.d
    return float((np.sum(np.abs(v) ** p) * w) ** (1.0 / p))


def dealias(f):
    """Zero every mode with any |k_i| > n/3 (2/3 rule); idempotent."""
    g = f.grid
    drop = g.dealias_drop_mask
    if not np.any(f.coeffs[drop]):
        return f
    c = f.coeffs.copy()
    c[drop] = 0.0
    return SpectralField(g, c)


def mean(f):
    """Torus average of the field, i.e. the k=0 coefficient."""
    return float(np.real(f.coeffs[(0,) * f.grid.d]))


def l2_inner(f, g):
    """L2 inner product of two fields by Parseval."""
    if f.grid != g.grid:
        raise ValueError("inner product of fields on different grids")
    scale = (2.0 * np.pi) ** f.grid.d
    return float(scale * np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def quadrature_size(n):
    """Smallest even m >= 3n/2; de-aliases triple products of n-grid fields."""
    m = (3 * n + 1) // 2
    return m + (m % 2)


def integrate_product(*fields):
    """Integrate a pointwise product of fields over the torus.

    The product is evaluated on a 3/2-padded grid so that cubic integrands of
    band-limited fields are integrated exactly (no quadrature aliasing).
    """
    g = fields[0].grid
    if any(f.grid != g for f in fields):
        raise ValueError("product factors must share one grid")
    m = quadrature_size(g.n) if len(fields) > 1 else g.n
    prod = fields[0].values_on(m)
    for f in fields[1:]:
        prod = prod * f.values_on(m)
    return float(np.sum(prod) * (2.0 * np.pi / m) ** g.d)
