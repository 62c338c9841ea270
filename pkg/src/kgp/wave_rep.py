"""Kernel and range of the scalar d'Alembertian L = d_tt - d_xx on (t, x) in [0, 2 pi) x [0, pi].

A real field splits into w = w1 + w0 with w0 in ker L and w1 in its orthogonal complement,
the range of L. Kernel elements are travelling-wave differences w0(t, x) = p(t + x) - p(t - x)
with p 2 pi-periodic and of zero mean. A source h lies in the range exactly when

    V(t) = int_0^pi [h(t + x, x) - h(t - x, x)] dx

vanishes for every t. A solution of L w = h is then given by the characteristic double
integral below, and w1 is its component orthogonal to ker L:

    w(t, x) = -1/2 int_x^pi dxi int_{t+x-xi}^{t-x+xi} h(tau, xi) dtau
              + (pi - x)/(2 pi) int_0^pi dxi int_{t-xi}^{t+xi} h(tau, xi) dtau.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.fft
import scipy.optimize

from ._config import get_fft_workers
from .exceptions import NotInRange, NotKernel, UserError
from .functional import FieldPair
from .logger import logger
from .nonlinearity import Nonlinearity
from .spectral import (
    GridField,
    SpectralField,
    Truncation,
    dealiased_grid_shape,
    evaluate,
    from_grid,
    grid_shape,
    kernel_part,
    l2_norm,
    range_part,
    to_grid,
)

RANGE_TOLERANCE = 1e-8
KERNEL_TOLERANCE = 1e-12
DEFAULT_QUAD_NODES = 64
RESOLVED_TAIL = 1e-10


def _as_spectral(h: SpectralField | GridField) -> SpectralField:
    if isinstance(h, SpectralField):
        return h
    # The largest truncation a grid resolves without aliasing.
    trunc = Truncation(max(h.nx - 1, 1), max((h.nt - 2) // 2, 0))
    return from_grid(h, trunc)


@dataclass(frozen=True)
class RangeConditionResult:
    t: np.ndarray
    trace: np.ndarray
    """V(t) at the sample times."""
    sup_violation: float

    def rows(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.t, self.trace)]


def range_condition(h: SpectralField | GridField, nt_samples: int = 64) -> RangeConditionResult:
    """Sample V(t) on `nt_samples` uniform times. The x-integral is a composite trapezoid whose
    node count exceeds the highest frequency of the integrand, so it is exact for a truncated
    field up to rounding. The integrand vanishes at both ends."""
    if nt_samples < 1:
        raise UserError(f"nt_samples must be positive, got {nt_samples}")
    field_ = _as_spectral(h)
    trunc = field_.trunc
    n = max(64, 2 * (trunc.J + trunc.K) + 2)
    x = np.linspace(0.0, math.pi, n + 1)
    weights = np.full(n + 1, math.pi / n)
    weights[[0, -1]] /= 2
    t = 2 * math.pi * np.arange(nt_samples) / nt_samples
    tt, xx = t[:, None], x[None, :]
    integrand = evaluate(field_, tt + xx, xx) - evaluate(field_, tt - xx, xx)
    trace = integrand @ weights
    sup = float(np.max(np.abs(trace), initial=0.0))
    return RangeConditionResult(t=t, trace=trace, sup_violation=sup)


@dataclass(frozen=True, eq=False)
class RangeSolution:
    w1_grid: GridField
    """w1 on the output grid."""
    w1: SpectralField
    """w1 on the source truncation."""
    source: SpectralField
    sup_violation: float
    kernel_leak: float
    """L2 norm of the ker L component the double integral carried before it was removed."""
    quad_nodes: int

    def rows(self) -> list[tuple[float, float, float]]:
        """(t, x, w1) in t-major order."""
        g = self.w1_grid
        return [
            (float(t), float(x), float(g.values[i, m]))
            for i, t in enumerate(g.t)
            for m, x in enumerate(g.x)
        ]


def _characteristic_kernel(j: np.ndarray, k: np.ndarray, x: float, quad_nodes: int) -> np.ndarray:
    """I_jk(x) = int_x^pi sin(j xi) S_k(xi - x) dxi, where S_k(s) = 2 sin(ks)/k (2s for k = 0)
    is the exact tau-integral of e^{ik tau} over [t - s, t + s] divided by e^{ikt}. The
    xi-integral uses Gauss-Legendre with `quad_nodes` points per unit length."""
    length = math.pi - x
    if length <= 0.0:
        return np.zeros((j.size, k.size))
    n = max(8, math.ceil(quad_nodes * length))
    nodes, weights = np.polynomial.legendre.leggauss(n)
    xi = x + (nodes + 1.0) * length / 2
    weights = weights * length / 2
    s = (xi - x)[None, :]
    kk = k[:, None]
    s_k = np.where(kk == 0, 2 * s, 2 * np.sin(kk * s) / np.where(kk == 0, 1, kk))
    sines = np.sin(j[:, None] * xi[None, :])
    return (sines * weights) @ s_k.T


def represent_w1(
    h: SpectralField | GridField,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    nt: int | None = None,
    nx: int | None = None,
) -> RangeSolution:
    """Solve L w1 = h in the range of L by the characteristic integral representation.

    The tau-integrals are taken exactly for each temporal Fourier mode and the xi-integrals by
    Gauss-Legendre quadrature. The double integral solves L w = h but may carry kernel modes
    sin(|k|x) e^{ikt}; they are projected out so that w1 is orthogonal to ker L. The result
    is sampled on the (nt, nx) grid, by default the smallest alias-free grid that also holds
    those kernel modes.

    Raises:
        NotInRange: if the range condition sup exceeds 1e-8.
    """
    if quad_nodes < 1:
        raise UserError(f"quad_nodes must be positive, got {quad_nodes}")
    source = _as_spectral(h)
    check = range_condition(source)
    if check.sup_violation >= RANGE_TOLERANCE:
        raise NotInRange(check.sup_violation, RANGE_TOLERANCE)

    trunc = source.trunc
    work = Truncation(max(trunc.J, trunc.K), trunc.K)
    default_nt, default_nx = grid_shape(work)
    nt = nt or default_nt
    nx = nx or default_nx
    j = np.arange(1, trunc.J + 1)
    k = np.arange(0, trunc.K + 1)
    grid_t = 2 * math.pi * np.arange(nt) / nt
    grid_x = math.pi * np.arange(1, nx + 1) / (nx + 1)

    at_origin = _characteristic_kernel(j, k, 0.0, quad_nodes)
    phases = np.exp(1j * grid_t[:, None] * k[None, :]) * trunc.multiplicity[0]
    values = np.empty((nt, nx))
    for m, x in enumerate(grid_x):
        g = -0.5 * _characteristic_kernel(j, k, x, quad_nodes) + (math.pi - x) / (2 * math.pi) * at_origin
        # sum_j sum_k h_jk e^{ikt} G_jk(x); G is even in k so the k >= 0 storage suffices
        values[:, m] = (phases @ (source.coeffs * g).T).real.sum(axis=1)

    solution = from_grid(GridField(values), work)
    w1_work = range_part(solution)
    return RangeSolution(
        w1_grid=to_grid(w1_work, nt, nx),
        w1=w1_work.resize(trunc),
        source=source,
        sup_violation=check.sup_violation,
        kernel_leak=l2_norm(kernel_part(solution)),
        quad_nodes=quad_nodes,
    )


@dataclass(frozen=True, eq=False)
class KernelProfile:
    """A 2 pi-periodic zero-mean profile p(s) = sum_k p_k e^{iks}, stored for k >= 0 with
    p_0 = 0 and p_{-k} = conj(p_k)."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        data = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if data.size == 0:
            data = np.zeros(1, dtype=np.complex128)
        data[0] = 0.0
        data.setflags(write=False)
        object.__setattr__(self, "coeffs", data)

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zeros(cls, K: int = 0) -> KernelProfile:
        return cls(np.zeros(K + 1))

    @classmethod
    def from_field(cls, y: SpectralField) -> KernelProfile:
        return kernel_profile(y)

    @classmethod
    def from_samples(cls, samples: Sequence[float] | np.ndarray, K: int | None = None) -> KernelProfile:
        """From values p(2 pi n / N), n = 0..N-1. The mean is removed."""
        values = np.asarray(samples, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise UserError("profile samples must be a non-empty 1-D array")
        mean = float(values.mean())
        if abs(mean) > KERNEL_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
            logger.warning(f"profile samples have mean {mean:.3e}; removing it")
        spectrum = scipy.fft.rfft(values - mean, workers=get_fft_workers()) / values.size
        K = spectrum.size - 1 if K is None else K
        out = np.zeros(K + 1, dtype=np.complex128)
        n = min(K + 1, spectrum.size)
        out[:n] = spectrum[:n]
        return cls(out)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> KernelProfile:
        entries = [(int(r[0]), complex(r[1], r[2])) for r in rows]
        K = max((k for k, _ in entries), default=0)
        out = np.zeros(K + 1, dtype=np.complex128)
        for k, value in entries:
            if k < 0:
                raise UserError(f"profile rows use k >= 0, got {k}")
            out[k] = value
        return cls(out)

    def evaluate(self, s: np.ndarray | float) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        k = np.arange(1, self.K + 1)
        if k.size == 0:
            return np.zeros_like(s)
        return 2 * (np.exp(1j * s[..., None] * k) @ self.coeffs[1:]).real

    def to_field(self, trunc: Truncation) -> SpectralField:
        """y(t, x) = p(t + x) - p(t - x) = sum_k 2i p_k sin(kx) e^{ikt} on the kernel modes
        (k, k) of `trunc`; modes beyond min(J, K) are dropped."""
        data = np.zeros(trunc.shape, dtype=np.complex128)
        for k in range(1, min(self.K, trunc.J, trunc.K) + 1):
            data[k - 1, k] = 2j * self.coeffs[k]
        return SpectralField(trunc, data)

    def tail(self) -> float:
        """2 |p_K|, the size of the last retained mode."""
        return 2 * float(abs(self.coeffs[-1])) if self.K > 0 else 0.0

    def rows(self) -> list[tuple[int, float, float]]:
        return [(k, float(c.real), float(c.imag)) for k, c in enumerate(self.coeffs)]


def kernel_profile(y: SpectralField) -> KernelProfile:
    """Recover p from a kernel field y(t, x) = p(t + x) - p(t - x): p_k = y_kk / (2i).

    Raises:
        NotKernel: if y carries a non-kernel coefficient above 1e-12.
    """
    trunc = y.trunc
    off_kernel = np.abs(np.where(trunc.kernel_mask, 0.0, y.coeffs))
    worst = float(np.max(off_kernel, initial=0.0))
    if worst > KERNEL_TOLERANCE:
        j, k = np.unravel_index(int(np.argmax(off_kernel)), off_kernel.shape)
        raise NotKernel(
            f"field has non-kernel content {worst:.3e} at mode ({j + 1}, {k}); "
            f"tolerance {KERNEL_TOLERANCE:g}"
        )
    K = min(trunc.J, trunc.K)
    out = np.zeros(K + 1, dtype=np.complex128)
    for k in range(1, K + 1):
        out[k] = y.coeffs[k - 1, k] / 2j
    return KernelProfile(out)


def orthogonality_check(p: KernelProfile, q: KernelProfile, n: int | None = None) -> float:
    """int_0^pi int_0^{2 pi} p(t + x) q(t - x) dt dx by uniform quadrature, exact for
    trigonometric profiles once n exceeds their combined degree. Zero for zero-mean p, q."""
    n = n or max(16, 2 * (p.K + q.K) + 2)
    t = 2 * math.pi * np.arange(n) / n
    x = math.pi * np.arange(n) / n
    tt, xx = t[:, None], x[None, :]
    values = p.evaluate(tt + xx) * q.evaluate(tt - xx)
    return float(np.sum(values) * (2 * math.pi / n) * (math.pi / n))


@dataclass(frozen=True)
class ContinuityReport:
    shifts: list[float]
    sup_diff: list[float]
    tail: float
    """2 |p_K| of the profile; the truncation's resolution floor."""
    resolved: bool
    """The tail is negligible against the profile, so no resolution floor applies."""
    monotone: bool
    passed: bool

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.shifts, self.sup_diff))

    def to_dict(self) -> dict[str, Any]:
        return {
            "shifts": list(self.shifts),
            "sup_diff": list(self.sup_diff),
            "tail": self.tail,
            "resolved": self.resolved,
            "monotone": self.monotone,
            "passed": self.passed,
        }


def _sup_shift_difference(p: KernelProfile, h: float, n: int) -> float:
    s = 2 * math.pi * np.arange(n) / n
    diff = np.abs(p.evaluate(s + h) - p.evaluate(s))
    i = int(np.argmax(diff))
    best = float(diff[i])
    cell = 2 * math.pi / n
    refined = scipy.optimize.minimize_scalar(
        lambda t: -abs(float(p.evaluate(t + h)) - float(p.evaluate(t))),
        bounds=(s[i] - cell, s[i] + cell),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return max(best, -float(refined.fun))


def continuity_report(p: KernelProfile, shifts: Sequence[float]) -> ContinuityReport:
    """sup_t |p(t + h) - p(t)| for each shift h in (0, 1/4). The verdict passes when the values
    decrease monotonically as h shrinks and the smallest shift ends below ten times the
    truncation tail 2 |p_K|. A profile whose tail vanishes to 1e-10 of its size is resolved by
    the truncation and needs only the monotone decrease."""
    values = [float(h) for h in shifts]
    for h in values:
        if not 0.0 < h < 0.25:
            raise UserError(f"shifts must lie in (0, 1/4), got {h}")
    n = max(2048, 64 * (p.K + 1))
    sup = [_sup_shift_difference(p, h, n) for h in values]

    ordered = sorted(zip(values, sup), reverse=True)
    monotone = all(b <= a + 1e-14 for (_, a), (_, b) in zip(ordered, ordered[1:]))
    tail = p.tail()
    resolved = tail <= RESOLVED_TAIL * 2 * float(np.sum(np.abs(p.coeffs)))
    final = ordered[-1][1] if ordered else 0.0
    passed = monotone and (resolved or final < 10 * tail)
    return ContinuityReport(
        shifts=values, sup_diff=sup, tail=tail, resolved=resolved, monotone=monotone, passed=passed
    )


@dataclass(frozen=True)
class LinfReport:
    norm_u1_inf: float
    norm_v1_inf: float
    ratio_u: float
    """||u1||_inf / ||h1||_{L1}, with h1 = b u + eps v + f(u)."""
    ratio_v: float
    norm_y_inf: float
    norm_z_inf: float
    norm_h1_l1: float
    norm_h2_l1: float

    def to_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return math.inf if den == 0.0 else num / den


def _effective_sources(
    state: FieldPair, nl_f: Nonlinearity, nl_g: Nonlinearity, nt: int, nx: int
) -> tuple[GridField, GridField, GridField, GridField]:
    """(u, v, h1, h2) on the grid, where h1 = b u + eps v + f(u) and h2 = b v + eps u + g(v) are
    the sources the two range parts answer to."""
    u = to_grid(state.u, nt, nx)
    v = to_grid(state.v, nt, nx)
    t, x = u.t[:, None], u.x[None, :]
    h1 = state.b * u.values + state.eps * v.values
    h2 = state.b * v.values + state.eps * u.values
    if not nl_f.is_zero:
        h1 = h1 + nl_f.f(t, x, u.values)
    if not nl_g.is_zero:
        h2 = h2 + nl_g.f(t, x, v.values)
    return u, v, GridField(h1), GridField(h2)


def _default_grid(state: FieldPair, nl_f: Nonlinearity, nl_g: Nonlinearity) -> tuple[int, int]:
    return dealiased_grid_shape(state.trunc, max(nl_f.grid_degree, nl_g.grid_degree))


def _sup(field_: SpectralField, nt: int, nx: int) -> float:
    return float(np.max(np.abs(to_grid(field_, nt, nx).values), initial=0.0))


def linf_report(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    nt: int | None = None,
    nx: int | None = None,
) -> LinfReport:
    """Sup norms of the range parts u1, v1 and kernel parts y, z on a grid, and the ratios of
    the range sup norms to the L1 norms of their effective sources. No bound is asserted."""
    default_nt, default_nx = _default_grid(state, nl_f, nl_g)
    nt, nx = nt or default_nt, nx or default_nx
    _, _, h1, h2 = _effective_sources(state, nl_f, nl_g, nt, nx)
    norm_u1 = _sup(range_part(state.u), nt, nx)
    norm_v1 = _sup(range_part(state.v), nt, nx)
    h1_l1 = h1.integrate(np.abs(h1.values))
    h2_l1 = h2.integrate(np.abs(h2.values))
    return LinfReport(
        norm_u1_inf=norm_u1,
        norm_v1_inf=norm_v1,
        ratio_u=_ratio(norm_u1, h1_l1),
        ratio_v=_ratio(norm_v1, h2_l1),
        norm_y_inf=_sup(kernel_part(state.u), nt, nx),
        norm_z_inf=_sup(kernel_part(state.v), nt, nx),
        norm_h1_l1=h1_l1,
        norm_h2_l1=h2_l1,
    )


@dataclass(frozen=True)
class LipschitzReport:
    lip_u1: float
    """Largest difference quotient of u1 over neighbouring grid nodes, in t and in x."""
    lip_v1: float
    ratio_u: float
    """lip_u1 / ||h1||_inf."""
    ratio_v: float
    norm_h1_inf: float
    norm_h2_inf: float

    def to_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _difference_quotient(values: np.ndarray, dt: float, dx: float) -> float:
    along_t = np.abs(np.roll(values, -1, axis=0) - values) / dt
    # Pad with the Dirichlet zeros at x = 0 and x = pi.
    padded = np.pad(values, ((0, 0), (1, 1)))
    along_x = np.abs(np.diff(padded, axis=1)) / dx
    return float(max(np.max(along_t, initial=0.0), np.max(along_x, initial=0.0)))


def lipschitz_report(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    nt: int | None = None,
    nx: int | None = None,
) -> LipschitzReport:
    """Discrete Lipschitz constants of the range parts, reported against ||h||_inf of their
    effective sources. No bound is asserted."""
    default_nt, default_nx = _default_grid(state, nl_f, nl_g)
    nt, nx = nt or default_nt, nx or default_nx
    _, _, h1, h2 = _effective_sources(state, nl_f, nl_g, nt, nx)
    dt, dx = 2 * math.pi / nt, math.pi / (nx + 1)
    lip_u = _difference_quotient(to_grid(range_part(state.u), nt, nx).values, dt, dx)
    lip_v = _difference_quotient(to_grid(range_part(state.v), nt, nx).values, dt, dx)
    h1_inf = float(np.max(np.abs(h1.values), initial=0.0))
    h2_inf = float(np.max(np.abs(h2.values), initial=0.0))
    return LipschitzReport(
        lip_u1=lip_u,
        lip_v1=lip_v,
        ratio_u=_ratio(lip_u, h1_inf),
        ratio_v=_ratio(lip_v, h2_inf),
        norm_h1_inf=h1_inf,
        norm_h2_inf=h2_inf,
    )
