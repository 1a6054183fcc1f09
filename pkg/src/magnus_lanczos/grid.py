"""Periodic grids, unitary FFTs and differentiation on them."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    pass


class _TransformCounter:
    """Monotone count of forward + inverse transforms."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n=1):
        with self._lock:
            self._count += n

    def reset(self):
        with self._lock:
            self._count = 0

    @property
    def value(self):
        return self._count


_COUNTER = _TransformCounter()


def fft_counter() -> int:
    """Number of FFTs executed since the last :func:`reset_fft_counter`."""
    return _COUNTER.value


def reset_fft_counter() -> None:
    _COUNTER.reset()


def fft(v):
    _COUNTER.add()
    return np.fft.fft(v, norm="ortho")


def ifft(v):
    _COUNTER.add()
    return np.fft.ifft(v, norm="ortho")


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform mesh on ``[a, b)`` with periodic wrap-around.

    The right endpoint is excluded: ``x_j = a + j*dx`` for ``j = 0..M-1``.
    """

    a: float
    b: float
    n_points: int
    _symbols: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_points

    @property
    def length(self) -> float:
        return self.b - self.a

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies in FFT layout (0, 1, ..., M/2-1, -M/2, ..., -1) * 2pi/L."""
        w = 2 * np.pi * np.fft.fftfreq(self.n_points, d=1.0 / self.n_points) / self.length
        w.flags.writeable = False
        return w

    def symbol(self, k: int) -> np.ndarray:
        """Fourier symbol ``(i w)^k`` of the k-th derivative.

        For odd ``k`` the Nyquist entry is zeroed so that the differentiation
        matrix stays exactly real skew-symmetric.
        """
        if k < 0:
            raise GridError(f"derivative order must be nonnegative, got {k}")
        c = self._symbols.get(k)
        if c is None:
            c = (1j * self.frequencies) ** k
            if k == 0:
                c = np.ones(self.n_points, dtype=complex)
            elif k % 2 == 1:
                c[self.n_points // 2] = 0.0
            c.flags.writeable = False
            self._symbols[k] = c
        return c

    def same_as(self, other: "PeriodicGrid") -> bool:
        return self is other or (
            self.n_points == other.n_points and self.a == other.a and self.b == other.b
        )

    def check(self, *arrays) -> None:
        for v in arrays:
            if np.ndim(v) != 1 or len(v) != self.n_points:
                raise GridError(
                    f"grid function of shape {np.shape(v)} does not match grid with {self.n_points} points"
                )


def make_grid(a: float, b: float, m: int) -> PeriodicGrid:
    """Build a periodic grid with ``m`` points on ``[a, b)``.

    ``m`` must be even and at least 4.
    """
    if not b > a:
        raise GridError(f"need b > a, got a={a}, b={b}")
    if int(m) != m or m < 4 or m % 2:
        raise GridError(f"number of points must be an even integer >= 4, got {m}")
    return PeriodicGrid(float(a), float(b), int(m))


def spectral_derivative(grid: PeriodicGrid, g, k: int) -> np.ndarray:
    """k-th spectral derivative ``F^{-1}(c_k * F g)``; costs two FFTs."""
    grid.check(g)
    if k == 0:
        return np.asarray(g, dtype=complex).copy()
    return ifft(grid.symbol(k) * fft(g))


def spectral_derivative_real(grid: PeriodicGrid, g, k: int) -> np.ndarray:
    """Spectral derivative of real data, returned as a real array."""
    return spectral_derivative(grid, g, k).real


# Central periodic stencils, keyed by (derivative, accuracy). Offsets run
# symmetrically from -p..p; coefficients are divided by dx**k on use.
_FD_STENCILS = {
    (1, 2): np.array([-1 / 2, 0, 1 / 2]),
    (1, 4): np.array([1 / 12, -2 / 3, 0, 2 / 3, -1 / 12]),
    (2, 2): np.array([1, -2, 1]),
    (2, 4): np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    (3, 2): np.array([-1 / 2, 1, 0, -1, 1 / 2]),
    (3, 4): np.array([1 / 8, -1, 13 / 8, 0, -13 / 8, 1, -1 / 8]),
    (4, 2): np.array([1, -4, 6, -4, 1]),
    (4, 4): np.array([-1 / 6, 2, -13 / 2, 28 / 3, -13 / 2, 2, -1 / 6]),
}


def fd_derivative(grid: PeriodicGrid, g, k: int, order: int = 4) -> np.ndarray:
    """Periodic central finite-difference derivative of accuracy ``order``.

    Orders 2 and 4 are available for ``k = 1..4``; a request for order 3 is
    served with order 4.
    """
    grid.check(g)
    if order == 3:
        order = 4
    try:
        stencil = _FD_STENCILS[(k, order)]
    except KeyError:
        raise GridError(f"no periodic central stencil for derivative {k} at order {order}") from None
    g = np.asarray(g)
    p = len(stencil) // 2
    out = np.zeros_like(g, dtype=np.result_type(g, float))
    for offset, c in zip(range(-p, p + 1), stencil):
        if c != 0:
            out += c * np.roll(g, -offset)
    return out / grid.dx**k


def pointwise_multiply(grid: PeriodicGrid, f, g) -> np.ndarray:
    grid.check(f, g)
    return np.asarray(f) * np.asarray(g)


def differentiation_matrix(grid: PeriodicGrid, k: int) -> np.ndarray:
    """Dense spectral differentiation matrix ``K_k`` (real)."""
    if grid.n_points > 1024:
        raise GridError("dense differentiation matrix requested for a very large grid")
    m = grid.n_points
    eye = np.eye(m)
    # column j is K_k e_j; no counter traffic for dense set-up
    cols = np.fft.ifft(grid.symbol(k)[:, None] * np.fft.fft(eye, axis=0), axis=0)
    return cols.real
