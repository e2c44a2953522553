"""Planar Beltrami equation on a periodic FFT grid.

Grid functions live on ``[-R, R)^2`` with ``M`` nodes per side; row ``i``
is ``y = -R + i h`` and column ``j`` is ``x = -R + j h`` with ``h = 2R/M``.
With ``xi = xi1 + i xi2`` the Fourier symbols are ``(i/2) xi`` for
``d/dzbar``, ``(i/2) conj(xi)`` for ``d/dz`` and ``conj(xi)/xi`` for the
Beurling transform ``Pi = d/dz (d/dzbar)^-1``; every symbol is set to 0 at
``xi = 0``.

The whole-plane solution ``f = z + q`` with ``q`` decaying is replaced by
``f = z + pbar zbar + q`` with ``q`` periodic, ``pbar`` being the grid mean
of ``dbar f``: a periodic ``q`` can only carry a mean-zero ``dbar q``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DivergenceError, InvalidInput, SingularComposition

COMPOSE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class ComplexGrid:
    values: np.ndarray
    R: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        m = v.shape[0]
        if v.ndim != 2 or v.shape[1] != m or m < 8 or m & (m - 1):
            raise InvalidInput("grid must be M x M with M a power of two")
        if not self.R > 0 or not np.all(np.isfinite(v)):
            raise InvalidInput("grid values must be finite and R positive")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 2 * self.R / self.M

    @property
    def z(self) -> np.ndarray:
        return coordinates(self.M, self.R)

    def like(self, values) -> "ComplexGrid":
        return ComplexGrid(values, self.R)

    def inner_half(self) -> np.ndarray:
        return inner_mask(self.M, self.R)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.h ** 2))

    def sup(self) -> float:
        return float(np.abs(self.values).max())


@lru_cache(maxsize=8)
def coordinates(M: int, R: float) -> np.ndarray:
    x = -R + 2 * R * np.arange(M) / M
    z = x[None, :] + 1j * x[:, None]
    z.setflags(write=False)
    return z


@lru_cache(maxsize=8)
def inner_mask(M: int, R: float) -> np.ndarray:
    z = coordinates(M, R)
    m = (np.abs(z.real) <= R / 2) & (np.abs(z.imag) <= R / 2)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=8)
def _xi(M: int, R: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(M, d=2 * R / M)
    xi = k[None, :] + 1j * k[:, None]
    xi.setflags(write=False)
    return xi


@lru_cache(maxsize=8)
def _symbols(M: int, R: float):
    xi = _xi(M, R)
    safe = np.where(xi == 0, 1.0, xi)
    beurling = np.where(xi == 0, 0.0, np.conj(xi) / safe)
    dz = 0.5j * np.conj(xi)
    dzbar = 0.5j * xi
    inv_dzbar = np.where(xi == 0, 0.0, 1.0 / (0.5j * safe))
    out = (beurling, dz, dzbar, inv_dzbar)
    for a in out:
        a.setflags(write=False)
    return out


def _apply(symbol, values):
    return np.fft.ifft2(symbol * np.fft.fft2(values))


def d_z(u: ComplexGrid) -> ComplexGrid:
    return u.like(_apply(_symbols(u.M, u.R)[1], u.values))


def d_zbar(u: ComplexGrid) -> ComplexGrid:
    return u.like(_apply(_symbols(u.M, u.R)[2], u.values))


def beurling_transform(u: ComplexGrid) -> ComplexGrid:
    """Fourier multiplier ``conj(xi)/xi`` (unit modulus, zero at the origin)."""
    return u.like(_apply(_symbols(u.M, u.R)[0], u.values))


def cauchy_transform(p: ComplexGrid) -> ComplexGrid:
    """Periodic ``q`` with ``dq/dzbar = p - mean(p)``."""
    return p.like(_apply(_symbols(p.M, p.R)[3], p.values))


@dataclass(frozen=True, eq=False)
class BeltramiGrid(ComplexGrid):
    """Beltrami coefficient: sup norm below 1.

    ``padded`` records whether the support lies in the inner half-square,
    which solve_beltrami requires so that periodic images do not interact.
    """

    padded: bool = field(init=False)

    def __post_init__(self):
        super().__post_init__()
        if not self.sup() < 1:
            raise InvalidInput(f"Beltrami coefficient needs sup < 1, got {self.sup():.6g}")
        outside = np.abs(self.values[~self.inner_half()])
        object.__setattr__(self, "padded", bool(outside.size == 0 or outside.max() == 0.0))

    def like(self, values) -> ComplexGrid:
        return ComplexGrid(values, self.R)


def dilatation(mu) -> float:
    """``(1 + |mu|_inf) / (1 - |mu|_inf)``."""
    s = mu.sup() if isinstance(mu, ComplexGrid) else float(np.max(np.abs(mu)))
    if not s < 1:
        raise InvalidInput("dilatation needs sup |mu| < 1")
    return (1 + s) / (1 - s)


@dataclass(frozen=True, eq=False)
class BeltramiSolution:
    map: ComplexGrid
    residual: float
    terms_used: int
    term_norms: np.ndarray
    zbar_coefficient: complex = 0j
    residuals: np.ndarray | None = None

    @property
    def affine(self) -> tuple[complex, complex]:
        return (1.0, self.zbar_coefficient)

    @property
    def term_ratios(self) -> np.ndarray:
        t = self.term_norms
        return t[1:] / t[:-1]


def _map_from_series(p, z, R):
    M = p.shape[0]
    pbar = p.mean()
    q = _apply(_symbols(M, R)[3], p)
    f = z + pbar * np.conj(z) + q
    return f, pbar, q


def beltrami_residual(f: ComplexGrid, mu: ComplexGrid, affine=(1.0, 0.0)) -> float:
    """``max |f_zbar - mu f_z|`` on the inner half-square.

    ``f`` is ``a z + b zbar + periodic`` with ``affine = (a, b)``; the affine
    part is differentiated exactly, the rest spectrally.
    """
    a, b = affine
    z = f.z
    periodic = f.values - a * z - b * np.conj(z)
    fz = a + d_z(f.like(periodic)).values
    fzb = b + d_zbar(f.like(periodic)).values
    return float(np.abs(fzb - mu.values * fz)[f.inner_half()].max())


def solve_beltrami(mu: BeltramiGrid, k_max: int = 30, tol: float = 1e-10,
                   track_residuals: bool = False) -> BeltramiSolution:
    """Normalised solution of ``f_zbar = mu f_z`` by the Neumann series.

    ``p = sum_k (mu Pi)^k mu`` is summed until the L2 norm of a term drops
    to ``tol`` or ``k_max`` terms were used; the map is then
    ``z + mean(p) zbar + cauchy_transform(p)``.
    """
    if not mu.padded:
        raise InvalidInput("Beltrami coefficient must vanish outside the inner half-square")
    if k_max < 1 or not tol > 0:
        raise InvalidInput("need k_max >= 1 and tol > 0")
    M, R = mu.M, mu.R
    beurling = _symbols(M, R)[0]
    z = coordinates(M, R)
    h2 = mu.h ** 2
    term = mu.values.copy()
    p = np.zeros_like(term)
    norms, residuals = [], []
    for k in range(k_max):
        p += term
        norms.append(float(np.sqrt(np.sum(np.abs(term) ** 2) * h2)))
        if track_residuals:
            f, pbar, _ = _map_from_series(p, z, R)
            residuals.append(beltrami_residual(ComplexGrid(f, R), mu, (1.0, pbar)))
        if norms[-1] <= tol:
            break
        if len(norms) >= 3 and norms[-1] > norms[-2] > norms[-3] and norms[-1] > norms[0]:
            raise DivergenceError("Neumann series terms are growing", mu.sup())
        term = mu.values * _apply(beurling, term)
    terms_used = len(norms)
    f, pbar, _ = _map_from_series(p, z, R)
    fmap = ComplexGrid(f, R)
    residual = beltrami_residual(fmap, mu, (1.0, pbar))
    return BeltramiSolution(fmap, residual, terms_used, np.array(norms), complex(pbar),
                            np.array(residuals) if track_residuals else None)


def jacobian(f: ComplexGrid, affine=(1.0, 0.0)) -> np.ndarray:
    """``|f_z|^2 - |f_zbar|^2`` with the affine part differentiated exactly."""
    a, b = affine
    z = f.z
    periodic = f.like(f.values - a * z - b * np.conj(z))
    fz = a + d_z(periodic).values
    fzb = b + d_zbar(periodic).values
    return np.abs(fz) ** 2 - np.abs(fzb) ** 2


def compose_beltrami(mu_f: ComplexGrid, mu_g: ComplexGrid, f_z: ComplexGrid) -> ComplexGrid:
    """Beltrami coefficient of ``g o f^-1`` at the points ``f(z)``:
    ``(mu_g - mu_f) / (1 - conj(mu_f) mu_g) * f_z / conj(f_z)``."""
    a, b, fz = mu_f.values, mu_g.values, f_z.values
    den = 1 - np.conj(a) * b
    if np.abs(den).min() < COMPOSE_FLOOR or np.abs(fz).min() < COMPOSE_FLOOR:
        raise SingularComposition("composition denominator below 1e-6")
    out = (b - a) / den * (fz / np.conj(fz))
    return BeltramiGrid(out, mu_f.R)


def smooth_cutoff(M: int, R: float, inner: float, outer: float) -> np.ndarray:
    """C-infinity radial function: 1 on ``|z| <= inner``, 0 on ``|z| >= outer``."""
    if not 0 <= inner < outer <= R / 2:
        raise InvalidInput("need 0 <= inner < outer <= R/2")
    s = np.clip((np.abs(coordinates(M, R)) - inner) / (outer - inner), 0.0, 1.0)

    def g(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    return g(1 - s) / (g(1 - s) + g(s))


def smooth_plateau(M: int, R: float, amplitude: float, inner: float, outer: float,
                   phase: float = 0.0) -> BeltramiGrid:
    """``amplitude e^{i phase}`` on ``|z| <= inner``, smooth decay to 0 at ``outer``."""
    return BeltramiGrid(amplitude * np.exp(1j * phase) * smooth_cutoff(M, R, inner, outer), R)


def swirl_bump(M: int, R: float, amplitude: float, rho: float,
               inner: float | None = None, outer: float | None = None) -> BeltramiGrid:
    """``amplitude (z/rho)^2 exp(1 - |z/rho|^2)`` times a smooth cutoff.

    The sup norm is ``amplitude`` (reached on ``|z| = rho``).  The angular
    dependence ``e^{2i theta}`` is undone by the Beurling transform, so the
    Neumann terms keep their shape and decay at close to ``amplitude`` per
    step.
    """
    inner = 1.75 * rho if inner is None else inner
    outer = R / 2 if outer is None else outer
    if not rho < inner:
        raise InvalidInput("cutoff must start outside the peak radius")
    z = coordinates(M, R)
    v = amplitude * (z / rho) ** 2 * np.exp(1 - np.abs(z / rho) ** 2)
    return BeltramiGrid(v * smooth_cutoff(M, R, inner, outer), R)


_HEADER = struct.Struct("<dd")


def write_grid(path, grid: ComplexGrid) -> None:
    """Little-endian: float64 M, float64 R, then M*M complex128 row-major."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(float(grid.M), float(grid.R)))
        fh.write(np.ascontiguousarray(grid.values, dtype="<c16").tobytes())


def read_grid(path) -> ComplexGrid:
    with open(path, "rb") as fh:
        m, r = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<c16")
    m = int(m)
    if m != float(m) or data.size != m * m:
        raise InvalidInput("grid file size does not match its header")
    return ComplexGrid(data.reshape(m, m).copy(), r)
