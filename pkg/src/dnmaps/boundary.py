"""Spectral calculus on a boundary circle sampled uniformly in arclength.

Fourier conventions: for ``N`` samples on a circle of length ``L`` the
wavenumbers are ``kt = 2 pi k / L``.  The L2 norm is the one of
``L2(Gamma, dl)``: ``||f||^2 = (L / N) sum f_j^2``.  The Nyquist mode of
odd multipliers (derivative, antiderivative) is set to zero.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    samples: np.ndarray
    length: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", s)
        n = len(s)
        if n < 8 or n % 2:
            raise InvalidInput("boundary functions need an even sample count >= 8")
        if not np.all(np.isfinite(s)) or not self.length > 0:
            raise InvalidInput("samples must be finite and length positive")

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def nodes(self) -> np.ndarray:
        return self.length * np.arange(self.n) / self.n

    def __add__(self, other):
        other = other.samples if isinstance(other, BoundaryFunction) else other
        return BoundaryFunction(self.samples + other, self.length)

    def __sub__(self, other):
        other = other.samples if isinstance(other, BoundaryFunction) else other
        return BoundaryFunction(self.samples - other, self.length)


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Dense operator on samples of a boundary of length ``length``."""

    matrix: np.ndarray
    length: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, f: BoundaryFunction) -> BoundaryFunction:
        _same_grid(self, f)
        return BoundaryFunction(self.matrix @ f.samples, self.length)

    def __matmul__(self, other: "BoundaryOperator") -> "BoundaryOperator":
        _same_grid(self, other)
        return BoundaryOperator(self.matrix @ other.matrix, self.length)

    def __sub__(self, other: "BoundaryOperator") -> "BoundaryOperator":
        _same_grid(self, other)
        return BoundaryOperator(self.matrix - other.matrix, self.length)

    def __add__(self, other: "BoundaryOperator") -> "BoundaryOperator":
        _same_grid(self, other)
        return BoundaryOperator(self.matrix + other.matrix, self.length)


def _same_grid(a, b):
    if a.n != b.n or not np.isclose(a.length, b.length, rtol=1e-12):
        raise InvalidInput(f"grid mismatch: N={a.n}, L={a.length} vs N={b.n}, L={b.length}")


def wavenumbers(n: int, length: float) -> np.ndarray:
    """Angular wavenumbers of the ``rfft`` bins (0 .. n/2)."""
    return 2 * np.pi * np.arange(n // 2 + 1) / length


def _multiplier(f, symbol):
    n = len(f)
    return np.fft.irfft(symbol * np.fft.rfft(f, axis=0), n=n, axis=0)


def _odd(symbol):
    symbol = symbol.astype(complex)
    symbol[-1] = 0.0
    return symbol


def fourier_derivative(f: BoundaryFunction) -> BoundaryFunction:
    k = wavenumbers(f.n, f.length)
    return BoundaryFunction(_multiplier(f.samples, _odd(1j * k)), f.length)


def _antiderivative_symbol(n, length):
    k = wavenumbers(n, length)
    sym = np.zeros(len(k), dtype=complex)
    sym[1:] = 1.0 / (1j * k[1:])
    sym[-1] = 0.0
    return sym


def fourier_antiderivative(f: BoundaryFunction) -> BoundaryFunction:
    """Inverse of the derivative on mean-zero functions; kills constants."""
    return BoundaryFunction(_multiplier(f.samples, _antiderivative_symbol(f.n, f.length)),
                            f.length)


def multiplier_matrix(n: int, symbol) -> np.ndarray:
    """Real circulant matrix of an even-or-odd Fourier multiplier on rfft bins."""
    return _multiplier(np.eye(n), np.asarray(symbol)[:, None])


def derivative_matrix(n: int, length: float) -> np.ndarray:
    return multiplier_matrix(n, _odd(1j * wavenumbers(n, length)))


def antiderivative_matrix(n: int, length: float) -> np.ndarray:
    return multiplier_matrix(n, _antiderivative_symbol(n, length))


def sobolev_weight(n: int, length: float, s: float) -> np.ndarray:
    """Sample-space matrix of the multiplier ``(1 + kt^2)^(s/2)``."""
    k = wavenumbers(n, length)
    return multiplier_matrix(n, (1 + k ** 2) ** (s / 2))


def band_projector(n: int, max_mode: int | None = None, keep_mean: bool = False) -> np.ndarray:
    """Orthogonal projector onto Fourier modes ``|k| <= max_mode``.

    ``max_mode=None`` keeps everything below Nyquist; the mean is removed
    unless ``keep_mean``.
    """
    top = n // 2 - 1 if max_mode is None else min(int(max_mode), n // 2)
    sym = np.zeros(n // 2 + 1)
    sym[: top + 1] = 1.0
    if not keep_mean:
        sym[0] = 0.0
    return multiplier_matrix(n, sym)


def sobolev_norm(f: BoundaryFunction, s: float) -> float:
    """``(L sum_k (1 + kt^2)^s |fhat_k|^2)^(1/2)`` with ``fhat = fft / N``."""
    n = f.n
    c = np.fft.fft(f.samples) / n
    k = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / f.length
    return float(np.sqrt(f.length * np.sum((1 + k ** 2) ** s * np.abs(c) ** 2)))


def l2_norm(f: BoundaryFunction) -> float:
    return float(np.sqrt(f.length / f.n * np.sum(f.samples ** 2)))


def operator_norm(A: BoundaryOperator, s_in: float, s_out: float) -> float:
    """Discrete ``B(H^s_in, H^s_out)`` norm: top singular value of
    ``W_out A W_in^-1``."""
    n, L = A.n, A.length
    w_out = sobolev_weight(n, L, s_out)
    w_in_inv = sobolev_weight(n, L, -s_in)
    return float(np.linalg.norm(w_out @ A.matrix @ w_in_inv, 2))


def osc_norm(f) -> float:
    """Oscillation ``max f - min f`` (norm on functions modulo constants)."""
    s = np.asarray(getattr(f, "samples", f))
    return float(s.max() - s.min())


def resample_matrix(n_old: int, n_new: int) -> np.ndarray:
    """Trigonometric interpolation from ``n_old`` to ``n_new`` samples.

    Exact on modes ``|k| < min(n_old, n_new) / 2``.  When upsampling the old
    Nyquist mode is split evenly between ``+-k``; when downsampling the new
    Nyquist bin collects the cosine part of the two.
    """
    if n_old % 2 or n_new % 2:
        raise InvalidInput("sample counts must be even")
    c = np.fft.rfft(np.eye(n_old), axis=0)
    m = min(n_old, n_new) // 2
    out = np.zeros((n_new // 2 + 1, n_old), dtype=complex)
    out[:m] = c[:m] * (n_new / n_old)
    if n_new > n_old:
        out[m] = c[m] * (n_new / n_old) / 2
    elif n_new < n_old:
        out[m] = 2 * (n_new / n_old) * c[m].real
    else:
        out[m] = c[m]
    return np.fft.irfft(out, n=n_new, axis=0)


def resample(f: BoundaryFunction, n_new: int) -> BoundaryFunction:
    return BoundaryFunction(resample_matrix(f.n, n_new) @ f.samples, f.length)


def resample_operator(A: BoundaryOperator, n_new: int) -> BoundaryOperator:
    """Conjugate ``A`` by trigonometric interpolation onto ``n_new`` samples."""
    up = resample_matrix(n_new, A.n)
    down = resample_matrix(A.n, n_new)
    return BoundaryOperator(down @ A.matrix @ up, A.length)


def shift_matrix(n: int, shift: float) -> np.ndarray:
    """``f -> f(. - shift)`` on trigonometric interpolants (shift in samples)."""
    k = np.arange(n // 2 + 1)
    sym = np.exp(-2j * np.pi * k * shift / n)
    sym[-1] = sym[-1].real
    return multiplier_matrix(n, sym)


def write_csv(path, f: BoundaryFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "value"])
        for j, v in enumerate(f.samples):
            w.writerow([j, f"{v:.17g}"])


def read_csv(path, length: float) -> BoundaryFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return BoundaryFunction(np.array([float(r[1]) for r in rows]), length)


def write_operator_csv(path, A: BoundaryOperator) -> None:
    with open(path, "w") as fh:
        fh.write(f"N={A.n} L={A.length:.17g}\n")
        for row in A.matrix:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_operator_csv(path) -> BoundaryOperator:
    with open(path) as fh:
        header = fh.readline().split()
        fields = dict(h.split("=") for h in header)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (int(fields["N"]),) * 2:
        raise InvalidInput("operator CSV shape does not match its header")
    return BoundaryOperator(data, float(fields["L"]))
