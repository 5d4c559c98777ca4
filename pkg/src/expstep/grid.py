"""Uniform periodic grid, discrete L2 geometry, and Fourier-diagonal operators.

All spatial discretization lives here: a power-of-two grid on [-L, L), the
discrete inner product dx * sum(conj(f) * g), and the transform pair

    to_frequency(f)[m] = dx * sum_n f[n] * exp(-i k_m x_n)
    to_space  = exact inverse,

with wavenumbers k_m = pi*m/L for m = -M/2 .. M/2-1 stored in FFT ordering.
With x_n = -L + n*dx this reduces to dx * (-1)^m * fft(f), which is how it is
implemented.  Operators diagonal in this basis (the free kinetic flow and its
phi-function relatives) are applied by transform, multiply, inverse transform;
periodic convolution against a sampled kernel is a single Fourier multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .phi import phi_values

__all__ = [
    "UniformGrid",
    "GridFunction",
    "DiagonalPropagator",
    "kinetic_propagator",
    "imaginary_time_propagator",
    "inner",
    "to_frequency",
    "to_space",
    "apply_exp",
    "phi_apply",
    "convolve_potential",
    "spectral_derivative",
]


@dataclass(frozen=True)
class UniformGrid:
    """Equispaced periodic grid with M points on [-L, L).

    M must be a power of two and at least 8; dx * M == 2 * L holds exactly
    in floating point because dx is obtained by dividing by a power of two.
    """

    num_points: int
    half_length: float

    def __post_init__(self) -> None:
        m = self.num_points
        if m < 8 or (m & (m - 1)) != 0:
            raise ValueError(f"num_points must be a power of two >= 8, got {m}")
        if not (self.half_length > 0 and math.isfinite(self.half_length)):
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.num_points

    @cached_property
    def points(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.num_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_m = pi*m/L in FFT ordering (0, 1, .., M/2-1, -M/2, .., -1)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.num_points, d=self.spacing)

    @cached_property
    def _transform_phase(self) -> np.ndarray:
        # exp(+i k_m L) = (-1)^m, same value for m and m - M since M is even
        return np.where(np.arange(self.num_points) % 2 == 0, 1.0, -1.0)


class GridFunction:
    """Complex-valued function sampled on a UniformGrid.

    Behaves as a vector in the discrete L2 space: addition, scalar
    multiplication, and the norm induced by inner().  Mixing grids raises.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: UniformGrid, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.num_points,):
            raise ValueError(
                f"values shape {values.shape} does not match grid size {grid.num_points}"
            )
        self.grid = grid
        self.values = values

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def norm(self) -> float:
        return math.sqrt(self.grid.spacing * float(np.sum(np.abs(self.values) ** 2)))

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def _check_same_grid(self, other: "GridFunction") -> None:
        if self.grid != other.grid:
            raise ValueError("grid mismatch between operands")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "GridFunction":
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)


def inner(f: GridFunction, g: GridFunction) -> complex:
    """Discrete L2 inner product dx * sum(conj(f) * g), conjugate-linear in f."""
    f._check_same_grid(g)
    return f.grid.spacing * complex(np.vdot(f.values, g.values))


def to_frequency(f: GridFunction) -> np.ndarray:
    """Fourier coefficients c_m = dx * sum_n f_n exp(-i k_m x_n), FFT ordering."""
    g = f.grid
    return g.spacing * g._transform_phase * np.fft.fft(f.values)


def to_space(grid: UniformGrid, coefficients: np.ndarray) -> GridFunction:
    """Inverse of to_frequency."""
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != (grid.num_points,):
        raise ValueError("coefficient vector does not match grid size")
    values = np.fft.ifft(grid._transform_phase * coefficients / grid.spacing)
    return GridFunction(grid, values)


class DiagonalPropagator:
    """Linear operator diagonal in the Fourier basis of a UniformGrid.

    Holds the eigenvalue symbol lam[m] and applies exp(t*A) and phi_k(h*A) by
    pointwise multiplication in frequency space.  Multiplier arrays are cached
    keyed by the exact float bit pattern of the time argument, so repeated
    fixed-step application costs two FFTs and one multiply per call.
    """

    def __init__(self, grid: UniformGrid, eigenvalues: np.ndarray):
        eigenvalues = np.asarray(eigenvalues, dtype=complex)
        if eigenvalues.shape != (grid.num_points,):
            raise ValueError("eigenvalue vector does not match grid size")
        self.grid = grid
        self.eigenvalues = eigenvalues
        self._cache: dict[tuple, np.ndarray] = {}

    def exp_multiplier(self, t: float) -> np.ndarray:
        key = ("exp", float(t))
        mult = self._cache.get(key)
        if mult is None:
            mult = np.exp(t * self.eigenvalues)
            self._cache[key] = mult
        return mult

    def phi_multiplier(self, k: int, h: float) -> np.ndarray:
        key = ("phi", int(k), float(h))
        mult = self._cache.get(key)
        if mult is None:
            mult = phi_values(k, h * self.eigenvalues)
            self._cache[key] = mult
        return mult

    def apply_exp_values(self, t: float, values: np.ndarray) -> np.ndarray:
        """exp(t*A) applied along the last axis of `values`."""
        return np.fft.ifft(self.exp_multiplier(t) * np.fft.fft(values, axis=-1), axis=-1)

    def apply_phi_values(self, k: int, h: float, values: np.ndarray) -> np.ndarray:
        """phi_k(h*A) applied along the last axis of `values`."""
        return np.fft.ifft(self.phi_multiplier(k, h) * np.fft.fft(values, axis=-1), axis=-1)

    def apply_generator_values(self, values: np.ndarray) -> np.ndarray:
        """A itself (multiplication by the symbol), for dense right-hand sides."""
        return np.fft.ifft(self.eigenvalues * np.fft.fft(values, axis=-1), axis=-1)


def kinetic_propagator(grid: UniformGrid) -> DiagonalPropagator:
    """Free flow of u' = (i/2) u_xx, i.e. symbol lam_m = -i k_m^2 / 2.

    This is the A-part of i u_t = -u_xx/2 + ... written with the i absorbed
    into the generator, so exp(t*A) is the exact unitary kinetic flow.
    """
    return DiagonalPropagator(grid, -0.5j * grid.wavenumbers**2)


def imaginary_time_propagator(grid: UniformGrid) -> DiagonalPropagator:
    """Decaying kinetic flow exp(-t k^2/2), used for ground-state relaxation."""
    return DiagonalPropagator(grid, -0.5 * grid.wavenumbers**2 + 0.0j)


def apply_exp(propagator: DiagonalPropagator, t: float, f: GridFunction) -> GridFunction:
    if f.grid != propagator.grid:
        raise ValueError("grid mismatch between propagator and function")
    return GridFunction(f.grid, propagator.apply_exp_values(t, f.values))


def phi_apply(propagator: DiagonalPropagator, k: int, h: float, f: GridFunction) -> GridFunction:
    if f.grid != propagator.grid:
        raise ValueError("grid mismatch between propagator and function")
    return GridFunction(f.grid, propagator.apply_phi_values(k, h, f.values))


def spectral_derivative(f: GridFunction) -> GridFunction:
    """d/dx by Fourier multiplication with i*k."""
    g = f.grid
    return GridFunction(g, np.fft.ifft(1j * g.wavenumbers * np.fft.fft(f.values)))


def convolve_potential(kernel: GridFunction, density: GridFunction) -> GridFunction:
    """Periodic convolution g(x_m) = dx * sum_n V(x_m - y_n) rho(y_n).

    The kernel is sampled on the same grid and extended 2L-periodically; the
    lag x_m - y_n = (m - n) dx maps to sample index (m - n + M/2) mod M, which
    is an index-0-centred reordering of the kernel (ifftshift).
    """
    kernel._check_same_grid(density)
    g = kernel.grid
    kernel_hat = np.fft.fft(np.fft.ifftshift(kernel.values))
    values = g.spacing * np.fft.ifft(kernel_hat * np.fft.fft(density.values))
    return GridFunction(g, values)


def convolution_multiplier(kernel: GridFunction) -> np.ndarray:
    """Precomputed frequency-space factor so that repeated convolutions against
    a fixed kernel cost one forward and one inverse FFT each."""
    return kernel.grid.spacing * np.fft.fft(np.fft.ifftshift(kernel.values))
