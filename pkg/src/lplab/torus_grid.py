"""Uniform discretization of a periodic box with spectrally exact calculus.

The domain is the torus [0, L)^d sampled on N points per axis.  Frequencies
live on the dual lattice xi(m) = (2 pi / L) m with integer coordinates
m in {-N/2, ..., N/2 - 1}, stored in FFT layout so multipliers line up with
transform output without any shifting.

Normalization convention (Riemann-sum approximation of the continuum pair):

    forward:  coeffs(xi) = h^d * sum_x f(x) exp(-i xi . x),   h = L / N
    inverse:  f(x) = L^{-d} * sum_xi coeffs(xi) exp(i xi . x)

so Parseval reads  h^d sum_x |f|^2 = L^{-d} sum_xi |coeffs|^2, and a single
unit coefficient at xi inverts to the normalized plane wave L^{-d} e^{i xi x}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

from .errors import GridMismatchError, ZeroModeSingularityError

DEFAULT_SIZE_CAP = 2**24

ZERO_MODE_RTOL = 1e-10


def abs_squared(values: np.ndarray) -> np.ndarray:
    """|z|^2 computed as re^2 + im^2, avoiding the sqrt round trip of abs()**2."""
    v = np.asarray(values)
    if np.iscomplexobj(v):
        return v.real**2 + v.imag**2
    return v * v


@dataclass(frozen=True)
class TorusGrid:
    """Geometry of the sampled torus [0, box_length)^dimension.

    Attributes
    ----------
    dimension : int
        Spatial dimension, restricted to 1, 2 or 3.
    box_length : float
        Side length L of the periodic box.
    points_per_axis : int
        Samples per axis N; must be a power of two and at least 8 so that
        the dyadic frequency decomposition has room for several blocks.
    size_cap : int
        Upper bound on the total number of grid points N^d.  Guards against
        accidentally requesting more than desk scale.
    """

    dimension: int
    box_length: float
    points_per_axis: int
    size_cap: int = DEFAULT_SIZE_CAP

    def __post_init__(self) -> None:
        d, length, n = self.dimension, self.box_length, self.points_per_axis
        if d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
        if not length > 0:
            raise ValueError(f"box_length must be positive, got {length}")
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        if n**d > self.size_cap:
            raise ValueError(
                f"grid of {n}^{d} = {n**d} points exceeds the size cap {self.size_cap}"
            )

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def volume(self) -> float:
        return self.box_length**self.dimension

    @property
    def zero_mode_index(self) -> tuple[int, ...]:
        return (0,) * self.dimension

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        x = self.spacing * np.arange(self.points_per_axis)
        x.flags.writeable = False
        return x

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        """Lattice frequencies of one axis in FFT order: 0, ..., max, -max, ..., -min."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)
        xi.flags.writeable = False
        return xi

    @cached_property
    def coordinate_grids(self) -> tuple[np.ndarray, ...]:
        grids = np.meshgrid(*(self.axis_coordinates,) * self.dimension, indexing="ij")
        for g in grids:
            g.flags.writeable = False
        return tuple(grids)

    @cached_property
    def frequency_grids(self) -> tuple[np.ndarray, ...]:
        grids = np.meshgrid(*(self.axis_frequencies,) * self.dimension, indexing="ij")
        for g in grids:
            g.flags.writeable = False
        return tuple(grids)

    @cached_property
    def frequency_stack(self) -> np.ndarray:
        stack = np.stack(self.frequency_grids)
        stack.flags.writeable = False
        return stack

    @cached_property
    def frequency_norms_squared(self) -> np.ndarray:
        nsq = np.zeros(self.shape)
        for component in self.frequency_grids:
            nsq = nsq + component**2
        nsq.flags.writeable = False
        return nsq

    @cached_property
    def frequency_norms(self) -> np.ndarray:
        norms = np.sqrt(self.frequency_norms_squared)
        norms.flags.writeable = False
        return norms

    def mode_index(self, mode: Sequence[int]) -> tuple[int, ...]:
        """Array index of the lattice mode m (integer coordinates, negatives allowed)."""
        mode = tuple(int(m) for m in mode)
        if len(mode) != self.dimension:
            raise GridMismatchError(
                f"mode {mode} has {len(mode)} coordinates, grid is {self.dimension}-dimensional"
            )
        n = self.points_per_axis
        half = n // 2
        for m in mode:
            if not -half <= m < half:
                raise GridMismatchError(f"mode coordinate {m} outside [-{half}, {half})")
        return tuple(m % n for m in mode)

    def integrate(self, values: np.ndarray):
        """Quadrature h^d * sum over the grid."""
        return self.cell_volume * np.asarray(values).sum()


@dataclass
class GridFunction:
    """Function sampled on the physical grid points of a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {self.values.shape} do not fit grid shape {self.grid.shape}"
            )


@dataclass
class SpectrumFunction:
    """Fourier coefficients on the frequency lattice, in FFT layout."""

    grid: TorusGrid
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        self.coefficients = np.asarray(self.coefficients)
        if self.coefficients.shape != self.grid.shape:
            raise GridMismatchError(
                f"coefficients of shape {self.coefficients.shape} do not fit grid shape {self.grid.shape}"
            )


def forward_transform(f: GridFunction) -> SpectrumFunction:
    """Forward transform with integral normalization, coeffs = h^d * FFT(values)."""
    coeffs = np.fft.fftn(f.values) * f.grid.cell_volume
    return SpectrumFunction(f.grid, coeffs)


def inverse_transform(spectrum: SpectrumFunction) -> GridFunction:
    """Inverse of forward_transform; exact round trip up to float rounding."""
    values = np.fft.ifftn(spectrum.coefficients) / spectrum.grid.cell_volume
    return GridFunction(spectrum.grid, values)


def lp_norm(f: GridFunction, p: float) -> float:
    """Quadrature L^p norm (h^d sum |f|^p)^(1/p) for p > 0.

    For p < 1 this is the usual quasinorm; no triangle inequality is implied.
    """
    p = float(p)
    if not p > 0:
        raise ValueError(f"lp_norm requires p > 0, got {p}")
    mag = np.abs(f.values)
    return float((f.grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def inner_product(f: GridFunction, g: GridFunction):
    """Quadrature pairing h^d sum conj(f) g (conjugate-linear in the first slot)."""
    if f.grid != g.grid:
        raise GridMismatchError("inner_product requires both functions on the same grid")
    return complex(f.grid.cell_volume * np.sum(np.conj(f.values) * g.values))


SymbolLike = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def apply_symbol(f: GridFunction, symbol: SymbolLike) -> GridFunction:
    """Apply a Fourier multiplier.

    ``symbol`` is either an array tabulated on the frequency lattice (same
    shape as the grid, FFT layout) or a callable evaluated on the stacked
    frequency lattice of shape (dimension,) + grid.shape.
    """
    grid = f.grid
    if callable(symbol):
        table = np.asarray(symbol(grid.frequency_stack))
    else:
        table = np.asarray(symbol)
    if table.shape != grid.shape:
        raise GridMismatchError(
            f"symbol table of shape {table.shape} does not fit grid shape {grid.shape}"
        )
    spectrum = forward_transform(f)
    return inverse_transform(SpectrumFunction(grid, table * spectrum.coefficients))


def kinetic_form(u: GridFunction, power: float) -> float:
    """Quadratic form of the fractional Laplacian, L^{-d} sum |xi|^(2 power) |coeffs|^2.

    power > 0: the frequency-zero mode contributes nothing.
    power = 0: the zero mode is included, so the form equals the squared L^2 norm.
    power < 0: requires the zero-mode coefficient to vanish (relative tolerance
    1e-10), otherwise the negative power is singular there.
    """
    power = float(power)
    grid = u.grid
    coeffs = forward_transform(u).coefficients
    energy = abs_squared(coeffs)
    nsq = grid.frequency_norms_squared
    zero = grid.zero_mode_index
    if power < 0:
        total = float(np.sqrt(energy.sum()))
        if total == 0.0:
            return 0.0
        if np.sqrt(energy[zero]) > ZERO_MODE_RTOL * total:
            raise ZeroModeSingularityError(
                "zero-mode singularity: negative Laplacian power applied to a "
                "function whose frequency-zero coefficient does not vanish"
            )
        weights = np.zeros(grid.shape)
        mask = nsq > 0
        weights[mask] = nsq[mask] ** power
    else:
        # 0**power is 0 for power > 0 and 1 for power == 0, which is exactly
        # the required zero-mode convention in both cases.
        weights = nsq**power
    return float(np.sum(weights * energy) / grid.volume)


def plane_wave(grid: TorusGrid, mode: Sequence[int], amplitude: complex = 1.0) -> GridFunction:
    """The lattice plane wave amplitude * exp(i xi(mode) . x)."""
    idx = grid.mode_index(mode)  # validates the mode
    phase = np.zeros(grid.shape)
    for axis, m_idx in enumerate(idx):
        xi = grid.axis_frequencies[m_idx]
        phase = phase + xi * grid.coordinate_grids[axis]
    return GridFunction(grid, amplitude * np.exp(1j * phase))


def constant_function(grid: TorusGrid, value: complex = 1.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.shape, value, dtype=complex))
