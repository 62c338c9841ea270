"""Mode algebra for the d'Alembert operator L = d_tt - d_xx on [0, 2pi] x [0, pi].

A real field is stored as complex amplitudes u_jk of sin(jx) e^{ikt} for 1 <= j <= J and
0 <= k <= K. Negative k is implied by u_{j,-k} = conj(u_jk), so every sum "over all modes" below
counts a stored k >= 1 column twice.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft

from ._config import get_fft_workers
from .exceptions import AliasedGrid, SpectrumCollision, TruncationMismatch, UserError

PI_SQ = math.pi**2


@dataclass(frozen=True)
class ModeIndex:
    """A Fourier mode sin(jx) e^{ikt}."""

    j: int
    """Spatial index, j >= 1."""

    k: int
    """Temporal index, any integer."""

    def __post_init__(self) -> None:
        if self.j < 1:
            raise UserError(f"spatial index j must be >= 1, got {self.j}")

    @property
    def eigenvalue(self) -> int:
        return self.j * self.j - self.k * self.k


class ModeClass(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    KERNEL = "kernel"


@dataclass(frozen=True)
class Truncation:
    """The rectangular Galerkin cut {(j, k): 1 <= j <= J, |k| <= K}."""

    J: int
    """Largest spatial index."""

    K: int
    """Largest temporal index |k|."""

    def __post_init__(self) -> None:
        if self.J < 1 or self.K < 0:
            raise UserError(f"invalid truncation J={self.J}, K={self.K}; need J >= 1, K >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.J, self.K + 1)

    @property
    def real_size(self) -> int:
        """Number of real unknowns of one field: J real k=0 values plus J*K complex values."""
        return self.J * (2 * self.K + 1)

    def modes(self) -> Iterator[ModeIndex]:
        """All modes in lexicographic (j, k) order, negative k included."""
        for j in range(1, self.J + 1):
            for k in range(-self.K, self.K + 1):
                yield ModeIndex(j, k)

    def fits_in(self, other: Truncation) -> bool:
        return self.J <= other.J and self.K <= other.K

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        j = np.arange(1, self.J + 1)[:, None]
        k = np.arange(0, self.K + 1)[None, :]
        return j * j - k * k

    @cached_property
    def kernel_mask(self) -> np.ndarray:
        j = np.arange(1, self.J + 1)[:, None]
        k = np.arange(0, self.K + 1)[None, :]
        return np.broadcast_to(j == k, self.shape)

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """How often each stored column appears in a sum over all k: 1 for k = 0, else 2."""
        weights = np.full(self.shape, 2.0)
        weights[:, 0] = 1.0
        return weights


@dataclass(frozen=True)
class SpectralGapInfo:
    b: float
    """Mass-squared parameter."""

    eta: float
    """Spectral gap: the minimum of |j^2 - k^2 + b| over every mode."""

    kappa: float
    """Embedding constant max(1/eta, 1) of ||u||_{L2}^2 <= kappa ||u||_H^2."""

    in_spectrum: bool
    """Whether -b is an eigenvalue of L. Always False on an instance returned by spectral_gap."""


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated coefficients of one real scalar field, u = sum u_jk sin(jx) e^{ikt}."""

    trunc: Truncation
    coeffs: np.ndarray
    """Complex array of shape (J, K + 1); column k holds u_{j,k} for k >= 0."""

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.shape != self.trunc.shape:
            raise UserError(
                f"coefficient array has shape {coeffs.shape}, truncation needs {self.trunc.shape}"
            )
        # u_{j,0} = conj(u_{j,0})
        coeffs[:, 0] = coeffs[:, 0].real
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, trunc: Truncation) -> SpectralField:
        return cls(trunc, np.zeros(trunc.shape, dtype=np.complex128))

    @classmethod
    def from_coefficients(
        cls, trunc: Truncation, coefficients: Mapping[tuple[int, int], complex]
    ) -> SpectralField:
        """Build a field from {(j, k): u_jk}. An entry with k < 0 is stored as the conjugate of
        its mirror; giving both (j, k) and (j, -k) is an error unless they are conjugate."""
        data = np.zeros(trunc.shape, dtype=np.complex128)
        seen: dict[tuple[int, int], complex] = {}
        for (j, k), value in coefficients.items():
            if not (1 <= j <= trunc.J and abs(k) <= trunc.K):
                raise UserError(f"mode ({j}, {k}) lies outside truncation {trunc}")
            stored = complex(value) if k >= 0 else complex(value).conjugate()
            key = (j, abs(k))
            if key in seen and not np.isclose(seen[key], stored):
                raise UserError(f"coefficients of ({j}, {k}) and ({j}, {-k}) are not conjugate")
            seen[key] = stored
            data[j - 1, abs(k)] = stored
        return cls(trunc, data)

    @classmethod
    def mode(cls, trunc: Truncation, j: int, k: int, amplitude: float = 1.0) -> SpectralField:
        """The real L2-normalised mode: amplitude * sin(jx) when k = 0, otherwise
        amplitude * sqrt(2) * sin(jx) cos(kt). Its L2 norm is pi * |amplitude|."""
        if not (1 <= j <= trunc.J and abs(k) <= trunc.K):
            raise UserError(f"mode ({j}, {k}) lies outside truncation {trunc}")
        data = np.zeros(trunc.shape, dtype=np.complex128)
        data[j - 1, abs(k)] = amplitude if k == 0 else amplitude / math.sqrt(2.0)
        return cls(trunc, data)

    @classmethod
    def from_terms(cls, trunc: Truncation, terms: Iterable[TrigTerm]) -> SpectralField:
        data = np.zeros(trunc.shape, dtype=np.complex128)
        for term in terms:
            if not (1 <= term.j <= trunc.J and abs(term.k) <= trunc.K):
                raise UserError(f"term sin({term.j}x)*{term.phase}({term.k}t) exceeds {trunc}")
            k = abs(term.k)
            if term.phase == "cos":
                data[term.j - 1, k] += term.amplitude if k == 0 else term.amplitude / 2
            elif k != 0:
                # sin(kt) = (e^{ikt} - e^{-ikt}) / 2i, and sin(-kt) = -sin(kt)
                sign = 1.0 if term.k > 0 else -1.0
                data[term.j - 1, k] += -0.5j * sign * term.amplitude
        return cls(trunc, data)

    def coeff(self, j: int, k: int) -> complex:
        value = complex(self.coeffs[j - 1, abs(k)])
        return value if k >= 0 else value.conjugate()

    def resize(self, trunc: Truncation) -> SpectralField:
        """Zero-pad to a larger truncation or drop modes outside a smaller one."""
        data = np.zeros(trunc.shape, dtype=np.complex128)
        J = min(trunc.J, self.trunc.J)
        K = min(trunc.K, self.trunc.K)
        data[:J, : K + 1] = self.coeffs[:J, : K + 1]
        return SpectralField(trunc, data)

    def masked(self, mask: np.ndarray) -> SpectralField:
        return SpectralField(self.trunc, np.where(mask, self.coeffs, 0.0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def to_real_vector(self) -> np.ndarray:
        """Pack into J(2K+1) reals: the k=0 column, then real and imaginary parts of k >= 1."""
        rest = self.coeffs[:, 1:]
        return np.concatenate([self.coeffs[:, 0].real, rest.real.ravel(), rest.imag.ravel()])

    @classmethod
    def from_real_vector(cls, trunc: Truncation, vector: np.ndarray) -> SpectralField:
        J, K = trunc.J, trunc.K
        if vector.shape != (trunc.real_size,):
            raise UserError(f"vector of length {vector.shape} does not match {trunc}")
        data = np.zeros(trunc.shape, dtype=np.complex128)
        data[:, 0] = vector[:J]
        n = J * K
        data[:, 1:] = (vector[J : J + n] + 1j * vector[J + n :]).reshape(J, K)
        return cls(trunc, data)

    def _check_same(self, other: SpectralField) -> None:
        if other.trunc != self.trunc:
            raise TruncationMismatch(f"truncations differ: {self.trunc} vs {other.trunc}")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check_same(other)
        return SpectralField(self.trunc, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check_same(other)
        return SpectralField(self.trunc, self.coeffs - other.coeffs)

    def __neg__(self) -> SpectralField:
        return SpectralField(self.trunc, -self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.trunc, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> SpectralField:
        return SpectralField(self.trunc, self.coeffs / scalar)

    def __repr__(self) -> str:
        nonzero = int(np.count_nonzero(np.abs(self.coeffs) > 0))
        return f"SpectralField(J={self.trunc.J}, K={self.trunc.K}, nonzero={nonzero})"


@dataclass(frozen=True)
class TrigTerm:
    """amplitude * sin(j x) * cos(k t) or amplitude * sin(j x) * sin(k t)."""

    j: int
    k: int
    amplitude: float = 1.0
    phase: Literal["cos", "sin"] = "cos"


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples on N_t uniform points t_n = 2 pi n / N_t and N_x interior points
    x_m = pi m / (N_x + 1)."""

    values: np.ndarray
    """Array of shape (N_t, N_x)."""

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            if np.max(np.abs(values.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(values))):
                raise UserError("grid values must be real")
            values = values.real
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2:
            raise UserError(f"grid values must be 2-D, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.nt) / self.nt

    @property
    def x(self) -> np.ndarray:
        return math.pi * np.arange(1, self.nx + 1) / (self.nx + 1)

    @property
    def cell_area(self) -> float:
        """Quadrature weight of one node: (2 pi / N_t) * (pi / (N_x + 1))."""
        return (2 * math.pi / self.nt) * (math.pi / (self.nx + 1))

    def integrate(self, values: np.ndarray | None = None) -> float:
        """Tensor trapezoid over the full domain. Boundary nodes x = 0, pi are omitted, which is
        exact for integrands vanishing there."""
        data = self.values if values is None else values
        return float(np.sum(data) * self.cell_area)

    @classmethod
    def sample(cls, func, nt: int, nx: int) -> GridField:
        """Sample func(t, x) (broadcasting over a (N_t, N_x) mesh)."""
        t = 2 * math.pi * np.arange(nt) / nt
        x = math.pi * np.arange(1, nx + 1) / (nx + 1)
        return cls(np.broadcast_to(func(t[:, None], x[None, :]), (nt, nx)))


def eigenvalue(m: ModeIndex) -> int:
    return m.eigenvalue


def _achieving_mode(n: int, search_bound: int) -> tuple[int, int] | None:
    """A mode (j, k) with j <= search_bound and j^2 - k^2 = n, if any."""
    for j in range(1, search_bound + 1):
        k_sq = j * j - n
        if k_sq < 0:
            continue
        k = math.isqrt(k_sq)
        if k * k == k_sq:
            return (j, k)
    return None


def is_achievable(n: int) -> bool:
    """Whether the integer n is an eigenvalue of L. Writing n = (j - k)(j + k) bounds j by
    (|n| + 1) / 2, so the search is finite."""
    return _achieving_mode(n, abs(n) + 1) is not None


def _check_b(b: float) -> None:
    if not (b > 0 and math.isfinite(b)):
        raise UserError(f"b must be a positive finite number, got {b}")


def spectrum_membership(b: float, search_bound: int | None = None) -> bool:
    """True iff j^2 - k^2 = -b for some integer j >= 1 and k. Only integer b can collide."""
    _check_b(b)
    bound = math.ceil(b) + 1
    if search_bound is None:
        search_bound = bound
    elif search_bound < bound:
        raise UserError(f"search_bound must be >= ceil(b) + 1 = {bound}, got {search_bound}")
    if not float(b).is_integer():
        return False
    return _achieving_mode(-int(b), search_bound) is not None


def _collision_witness(b: float) -> tuple[int, int] | None:
    if not float(b).is_integer():
        return None
    return _achieving_mode(-int(b), math.ceil(b) + 1)


def spectral_gap(b: float, trunc: Truncation | None = None) -> SpectralGapInfo:
    """The global gap eta = min |lambda_jk + b| over every mode, not only those in `trunc`.
    The minimum is attained by an achievable lambda in [-ceil(b) - 2, ceil(b) + 2]."""
    _check_b(b)
    witness = _collision_witness(b)
    if witness is not None:
        raise SpectrumCollision(b, witness)
    top = math.ceil(b) + 2
    eta = min(abs(n + b) for n in range(-top, top + 1) if is_achievable(n))
    return SpectralGapInfo(b=b, eta=eta, kappa=max(1.0 / eta, 1.0), in_spectrum=False)


def classify(m: ModeIndex, b: float) -> ModeClass:
    _check_b(b)
    lam = m.eigenvalue
    if lam == -b:
        raise SpectrumCollision(b, (m.j, m.k))
    if m.j == abs(m.k):
        return ModeClass.KERNEL
    return ModeClass.PLUS if lam > -b else ModeClass.MINUS


def class_masks(trunc: Truncation, b: float) -> dict[ModeClass, np.ndarray]:
    """Boolean masks over the stored coefficients, one per class. Rejects b in the spectrum."""
    spectral_gap(b)
    lam = trunc.eigenvalues
    kernel = np.array(trunc.kernel_mask)
    return {
        ModeClass.PLUS: (lam > -b) & ~kernel,
        ModeClass.MINUS: lam < -b,
        ModeClass.KERNEL: kernel,
    }


def split(u: SpectralField, b: float) -> tuple[SpectralField, SpectralField, SpectralField]:
    """u = u^+ + u^- + y with u^+ in H_b^+, u^- in H_b^-, y in ker L."""
    masks = class_masks(u.trunc, b)
    return (
        u.masked(masks[ModeClass.PLUS]),
        u.masked(masks[ModeClass.MINUS]),
        u.masked(masks[ModeClass.KERNEL]),
    )


def kernel_part(u: SpectralField) -> SpectralField:
    return u.masked(u.trunc.kernel_mask)


def range_part(u: SpectralField) -> SpectralField:
    return u.masked(~u.trunc.kernel_mask)


def _weighted_square_sum(u: SpectralField, weights: np.ndarray | float = 1.0) -> float:
    return float(PI_SQ * np.sum(u.trunc.multiplicity * weights * np.abs(u.coeffs) ** 2))


def h_weights(trunc: Truncation, b: float) -> np.ndarray:
    """Weights of the H-norm: |lambda + b| off the kernel, 1 on it."""
    spectral_gap(b)
    return np.where(trunc.kernel_mask, 1.0, np.abs(trunc.eigenvalues + b))


def h_norm(u: SpectralField, b: float) -> float:
    return math.sqrt(_weighted_square_sum(u, h_weights(u.trunc, b)))


def l2_inner(u: SpectralField, v: SpectralField) -> float:
    """pi^2 sum u_jk conj(v_jk) over all modes; real because both fields are real."""
    if u.trunc != v.trunc:
        raise TruncationMismatch(f"truncations differ: {u.trunc} vs {v.trunc}")
    return float(PI_SQ * np.sum(u.trunc.multiplicity * (u.coeffs * np.conj(v.coeffs)).real))


def l2_norm(u: SpectralField) -> float:
    return math.sqrt(_weighted_square_sum(u))


def apply_L_plus_b(u: SpectralField, b: float) -> SpectralField:
    return SpectralField(u.trunc, u.coeffs * (u.trunc.eigenvalues + b))


def invert_L_plus_b(h: SpectralField, b: float) -> SpectralField:
    spectral_gap(b)
    return SpectralField(h.trunc, h.coeffs / (h.trunc.eigenvalues + b))


def quadratic_form(u: SpectralField, b: float) -> float:
    """<(L + b) u, u>."""
    return l2_inner(apply_L_plus_b(u, b), u)


def grid_shape(trunc: Truncation) -> tuple[int, int]:
    """The smallest alias-free grid (N_t, N_x) for a truncation."""
    return (2 * trunc.K + 2, trunc.J + 1)


def dealiased_grid_shape(trunc: Truncation, p: float) -> tuple[int, int]:
    """Grid on which a pointwise nonlinearity of degree p is projected without aliasing.
    Integer p oversamples by p + 1; other p by max(4, ceil(p + 1)), which still leaves the
    non-polynomial tail of |u|^{p-1} u to alias."""
    if float(p).is_integer():
        factor = int(p) + 1
    else:
        factor = max(4, math.ceil(p + 1))
    return (factor * (2 * trunc.K + 1) + 1, factor * trunc.J + 1)


def _check_alias_free(trunc: Truncation, nt: int, nx: int) -> None:
    min_nt, min_nx = grid_shape(trunc)
    if nt < min_nt or nx < min_nx:
        raise AliasedGrid(
            f"grid ({nt}, {nx}) aliases truncation J={trunc.J}, K={trunc.K}; "
            f"need N_t >= {min_nt} and N_x >= {min_nx}"
        )


def to_grid(u: SpectralField, nt: int, nx: int) -> GridField:
    """Synthesise u on the (N_t, N_x) grid: inverse real FFT in t, DST-I in x."""
    _check_alias_free(u.trunc, nt, nx)
    workers = get_fft_workers()
    J, K = u.trunc.J, u.trunc.K
    spectrum = np.zeros((nt // 2 + 1, nx), dtype=np.complex128)
    spectrum[: K + 1, :J] = u.coeffs.T
    # irfft carries a 1/N_t normalisation
    by_mode = scipy.fft.irfft(spectrum, n=nt, axis=0, workers=workers) * nt
    values = scipy.fft.dst(by_mode, type=1, axis=1, workers=workers) / 2
    return GridField(values)


def from_grid(g: GridField, trunc: Truncation) -> SpectralField:
    """Discrete projection of grid samples onto a truncation. On an alias-free grid this inverts
    to_grid exactly."""
    _check_alias_free(trunc, g.nt, g.nx)
    workers = get_fft_workers()
    by_mode = scipy.fft.dst(g.values, type=1, axis=1, workers=workers) / (g.nx + 1)
    spectrum = scipy.fft.rfft(by_mode, axis=0, workers=workers) / g.nt
    return SpectralField(trunc, spectrum[: trunc.K + 1, : trunc.J].T)


def evaluate(u: SpectralField, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Pointwise spectral evaluation at arbitrary (broadcast) points, t taken mod 2 pi."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    j = np.arange(1, u.trunc.J + 1)
    k = np.arange(0, u.trunc.K + 1)
    sines = np.sin(x[..., None] * j)
    phases = np.exp(1j * t[..., None] * k) * u.trunc.multiplicity[0]
    temporal = phases @ u.coeffs.T
    return np.sum(sines * temporal.real, axis=-1)


def lr_norm(u: SpectralField, r: float) -> float:
    """||u||_{L^r} by quadrature on a grid fine enough for |u|^r."""
    if r < 1:
        raise UserError(f"r must be >= 1, got {r}")
    nt, nx = dealiased_grid_shape(u.trunc, r)
    grid = to_grid(u, nt, nx)
    return grid.integrate(np.abs(grid.values) ** r) ** (1.0 / r)


def embedding_ratio(u: SpectralField, b: float, r: float) -> float:
    """Empirical ||u||_{L^r} / ||u||_H. The constant of the L^r embedding is never asserted."""
    norm = h_norm(u, b)
    return 0.0 if norm == 0.0 else lr_norm(u, r) / norm


@dataclass(frozen=True)
class SpectrumRow:
    j: int
    k: int
    eigenvalue: int
    mode_class: ModeClass


def spectrum_table(b: float, trunc: Truncation) -> list[SpectrumRow]:
    spectral_gap(b)
    return [SpectrumRow(m.j, m.k, m.eigenvalue, classify(m, b)) for m in trunc.modes()]
