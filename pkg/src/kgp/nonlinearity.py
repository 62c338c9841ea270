"""Forcing nonlinearities f(t, x, xi) with their primitives F, and sampling-based checks of the
growth and monotonicity hypotheses the existence theory needs.

Every callable here broadcasts: `t`, `x` and `xi` may be arrays of any mutually broadcastable
shapes.
"""

from __future__ import annotations

import json
import math
import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Annotated, Any, Literal, Union

import numpy as np
import scipy.integrate
from pydantic import BaseModel, Field, TypeAdapter, field_validator

from .exceptions import NonPositiveAmplitude, UserError
from .logger import logger
from .tracing import hypothesis_check_span
from .util._json import validate_json

ArrayFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

_AMPLITUDE_RE = re.compile(r"^\s*(const|cos_t)\s*:\s*([^,]+?)\s*(?:,\s*([^,]+?)\s*)?$")


@dataclass(frozen=True)
class Amplitude:
    """a(t, x) = mean + cos_t * cos(t)."""

    mean: float
    cos_t: float = 0.0

    @property
    def lower_bound(self) -> float:
        return self.mean - abs(self.cos_t)

    @property
    def upper_bound(self) -> float:
        return self.mean + abs(self.cos_t)

    def __call__(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return self.mean + self.cos_t * np.cos(t)

    def describe(self) -> str:
        if self.cos_t == 0.0:
            return f"const:{self.mean!r}"
        return f"cos_t:{self.mean!r},{self.cos_t!r}"

    @classmethod
    def parse(cls, text: str) -> Amplitude:
        """Parse `const:a` or `cos_t:a,b`. Raises UserError on malformed text and
        NonPositiveAmplitude when the amplitude is not bounded below by a positive constant."""
        match = _AMPLITUDE_RE.match(text)
        if match is None:
            raise UserError(f"amplitude must look like 'const:a' or 'cos_t:a,b', got {text!r}")
        kind, first, second = match.groups()
        try:
            mean = float(first)
            cos_t = float(second) if second is not None else 0.0
        except ValueError as e:
            raise UserError(f"amplitude {text!r} has a non-numeric parameter") from e
        if kind == "const" and second is not None:
            raise UserError(f"'const' amplitude takes one parameter, got {text!r}")
        amplitude = cls(mean, cos_t)
        amplitude.validate()
        return amplitude

    def validate(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.cos_t)):
            raise NonPositiveAmplitude(f"amplitude {self.describe()} is not finite")
        if self.lower_bound <= 0:
            raise NonPositiveAmplitude(
                f"amplitude {self.describe()} has lower bound {self.lower_bound:g}; it must stay "
                "above a positive constant"
            )


@dataclass(frozen=True)
class Nonlinearity:
    """A forcing term f together with its primitive F(t, x, xi) = int_0^xi f(t, x, s) ds."""

    name: str
    f: ArrayFn
    F: ArrayFn
    p: float
    """Growth exponent of |f| <= c0 (1 + |xi|^p)."""

    c0: float
    """Growth constant."""

    df: ArrayFn | None = None
    """df/dxi, when known in closed form. Enables the exact Newton Jacobian."""

    degree: float | None = None
    """Polynomial degree in xi used to size dealiasing grids; defaults to p."""

    descriptor: dict[str, Any] = field(default_factory=dict, compare=False)
    """JSON-compatible description, echoed into reports."""

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise UserError(f"growth exponent p must exceed 1, got {self.p}")
        if not self.c0 > 0:
            raise UserError(f"growth constant c0 must be positive, got {self.c0}")

    @property
    def grid_degree(self) -> float:
        return self.p if self.degree is None else self.degree

    @property
    def is_zero(self) -> bool:
        return self.descriptor.get("kind") == "zero"


def _amplitude_callable(amplitude: Amplitude | float | Callable) -> tuple[Callable, float, dict]:
    if isinstance(amplitude, (int, float)):
        amplitude = Amplitude(float(amplitude))
    if isinstance(amplitude, Amplitude):
        amplitude.validate()
        return amplitude, amplitude.upper_bound, {"amplitude": amplitude.describe()}
    samples = HypothesisSamples.default()
    values = np.asarray(amplitude(samples.t, samples.x), dtype=float)
    if not np.all(np.isfinite(values)) or np.min(values) <= 0:
        raise NonPositiveAmplitude(
            f"amplitude callable reaches {np.min(values):g} on the sample grid; it must stay "
            "above a positive constant"
        )
    return amplitude, float(np.max(values)), {"amplitude": "callable"}


def power_law(p: float, amplitude: Amplitude | float | Callable = 1.0) -> Nonlinearity:
    """f = a(t, x) |xi|^{p-1} xi and F = a |xi|^{p+1} / (p + 1).

    (p + 1) F = f xi holds with equality, and c0 = sup a."""
    if not p > 1:
        raise UserError(f"power_law exponent must exceed 1, got {p}")
    a, a_max, extra = _amplitude_callable(amplitude)

    def f(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        return a(t, x) * np.abs(xi) ** (p - 1) * xi

    def F(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        return a(t, x) * np.abs(xi) ** (p + 1) / (p + 1)

    def df(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        return p * a(t, x) * np.abs(xi) ** (p - 1)

    return Nonlinearity(
        name=f"power_law(p={p:g})",
        f=f,
        F=F,
        p=float(p),
        c0=a_max,
        df=df,
        descriptor={"kind": "power_law", "p": float(p), **extra},
    )


def polynomial(
    coefficients: Sequence[float], p: float | None = None, c0: float | None = None
) -> Nonlinearity:
    """f = sum_n c_n xi^n with F = sum_n c_n xi^{n+1} / (n + 1).

    `p` defaults to the degree and must exceed 1, so a linear f needs an explicit p. `c0`
    defaults to sum |c_n|, which satisfies the growth bound whenever the degree is <= p."""
    coeffs = np.asarray(list(coefficients), dtype=float)
    nonzero = np.flatnonzero(coeffs)
    degree = int(nonzero[-1]) if nonzero.size else 0
    if p is None:
        p = float(degree)
    if c0 is None:
        c0 = float(np.sum(np.abs(coeffs))) or 1.0
    powers = np.arange(coeffs.size)
    primitive = coeffs / (powers + 1)
    derivative = coeffs[1:] * powers[1:]

    def f(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.polynomial.polynomial.polyval(xi, coeffs)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(t), np.shape(x), xi.shape))

    def F(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        out = xi * np.polynomial.polynomial.polyval(xi, primitive)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(t), np.shape(x), xi.shape))

    def df(t, x, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.polynomial.polynomial.polyval(xi, derivative) if derivative.size else 0.0 * xi
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(t), np.shape(x), xi.shape))

    terms = " + ".join(f"{c:g}*xi^{n}" for n, c in enumerate(coeffs) if c != 0) or "0"
    return Nonlinearity(
        name=f"polynomial({terms})",
        f=f,
        F=F,
        p=float(p),
        c0=float(c0),
        df=df,
        degree=float(max(degree, 1)),
        descriptor={"kind": "polynomial", "coefficients": coeffs.tolist(), "p": float(p)},
    )


def zero() -> Nonlinearity:
    """f = 0. Reported with p = 2 and c0 = 1 so the growth checks are well defined."""

    def vanish(t, x, xi):
        return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(xi)))

    return Nonlinearity(
        name="zero",
        f=vanish,
        F=vanish,
        p=2.0,
        c0=1.0,
        df=vanish,
        degree=1.0,
        descriptor={"kind": "zero"},
    )


def from_function(
    f: ArrayFn,
    p: float,
    c0: float,
    df: ArrayFn | None = None,
    F: ArrayFn | None = None,
    name: str = "user",
) -> Nonlinearity:
    """Wrap a user f. Without a closed-form F the primitive is computed by adaptive quadrature
    from 0 to xi, one point at a time."""
    if F is None:

        def _primitive_at(t: float, x: float, xi: float) -> float:
            value, _ = scipy.integrate.quad(
                lambda s: float(f(t, x, s)), 0.0, xi, epsabs=1e-13, epsrel=1e-10, limit=200
            )
            return value

        vectorized = np.vectorize(_primitive_at, otypes=[float])

        def F(t, x, xi):
            return vectorized(t, x, xi)

    return Nonlinearity(
        name=name,
        f=f,
        F=F,
        p=float(p),
        c0=float(c0),
        df=df,
        descriptor={"kind": "function", "name": name, "p": float(p)},
    )


class PowerLawDescriptor(BaseModel):
    kind: Literal["power_law"]
    p: float = Field(gt=1)
    amplitude: str = "const:1.0"

    @field_validator("amplitude")
    @classmethod
    def _amplitude_syntax(cls, value: str) -> str:
        if _AMPLITUDE_RE.match(value) is None:
            raise ValueError("amplitude must look like 'const:a' or 'cos_t:a,b'")
        return value


class PolynomialDescriptor(BaseModel):
    kind: Literal["polynomial"]
    coefficients: list[float] = Field(min_length=1)
    p: float | None = Field(default=None, gt=1)
    c0: float | None = Field(default=None, gt=0)


class ZeroDescriptor(BaseModel):
    kind: Literal["zero"]


NonlinearityDescriptor = Annotated[
    Union[PowerLawDescriptor, PolynomialDescriptor, ZeroDescriptor], Field(discriminator="kind")
]

_descriptor_adapter: TypeAdapter[NonlinearityDescriptor] = TypeAdapter(NonlinearityDescriptor)


def build(descriptor: PowerLawDescriptor | PolynomialDescriptor | ZeroDescriptor) -> Nonlinearity:
    if isinstance(descriptor, PowerLawDescriptor):
        return power_law(descriptor.p, Amplitude.parse(descriptor.amplitude))
    if isinstance(descriptor, PolynomialDescriptor):
        return polynomial(descriptor.coefficients, p=descriptor.p, c0=descriptor.c0)
    return zero()


def parse_descriptor(data: str | bytes | dict[str, Any]) -> Nonlinearity:
    """Build a Nonlinearity from a JSON descriptor such as
    `{"kind": "power_law", "p": 3.0, "amplitude": "cos_t:1.0,0.5"}`."""
    if isinstance(data, dict):
        data = json.dumps(data)
    return build(validate_json(data, _descriptor_adapter, "nonlinearity descriptor"))


# ---------------------------------------------------------------------------------------------
# Hypothesis checks
# ---------------------------------------------------------------------------------------------

HypothesisStatus = Literal["pass", "fail", "unchecked"]

_H2_PROBES = 10.0 ** -np.arange(1, 7)
_H3_RTOL = 1e-9
_MONOTONE_ATOL = 1e-12


@dataclass(frozen=True)
class HypothesisSamples:
    """Points (t_i, x_i) of the domain and a sorted set of xi values.

    The default set is a 17 x 17 tensor grid in (t, x) and 41 log-spaced |xi| in [1e-6, 10]
    with sign reflection; a seed appends uniformly random (t, x) points."""

    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray

    @classmethod
    def default(
        cls,
        seed: int | None = None,
        n_tx: int = 17,
        n_xi: int = 41,
        xi_min: float = 1e-6,
        xi_max: float = 10.0,
        n_random: int = 64,
    ) -> HypothesisSamples:
        t_axis = 2 * math.pi * np.arange(n_tx) / n_tx
        x_axis = np.linspace(0.0, math.pi, n_tx)
        t, x = (a.ravel() for a in np.meshgrid(t_axis, x_axis, indexing="ij"))
        if seed is not None:
            rng = np.random.default_rng(seed)
            t = np.concatenate([t, rng.uniform(0.0, 2 * math.pi, n_random)])
            x = np.concatenate([x, rng.uniform(0.0, math.pi, n_random)])
        magnitudes = np.logspace(math.log10(xi_min), math.log10(xi_max), n_xi)
        xi = np.concatenate([-magnitudes[::-1], magnitudes])
        return cls(t=t, x=x, xi=xi)

    @property
    def count(self) -> int:
        return self.t.size * self.xi.size

    def mesh(self, xi: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        values = self.xi if xi is None else np.asarray(xi, dtype=float)
        return self.t[:, None], self.x[:, None], values[None, :]


@dataclass(frozen=True)
class Witness:
    t: float
    x: float
    xi: float
    xi_other: float | None = None
    """Second point of a monotonicity witness pair."""

    def to_dict(self) -> dict[str, float | None]:
        return {"t": self.t, "x": self.x, "xi": self.xi, "xi_other": self.xi_other}


@dataclass(frozen=True)
class HypothesisEntry:
    name: str
    status: HypothesisStatus
    magnitude: float
    """Worst violation; <= 0 (or the ratio that decided a limit check) on a pass."""

    samples: int
    witness: Witness | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status,
            "magnitude": self.magnitude,
            "samples": self.samples,
            "witness": self.witness.to_dict() if self.witness else None,
            "details": self.details,
        }


@dataclass(frozen=True)
class GrowthConstantsReport:
    """Empirical constants of the growth consequences F >= c1 |xi|^{p+1} - c2,
    F >= c3 |xi|^{p+1} for |xi| >= r_bar, and |F| <= nu xi^2 + C_nu |xi|^{p+1}."""

    status: HypothesisStatus
    nu: float
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    r_bar: float | None = None
    c_nu: float | None = None
    degenerate: bool = False
    note: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "r_bar": self.r_bar,
            "nu": self.nu,
            "c_nu": self.c_nu,
            "degenerate": self.degenerate,
            "note": self.note,
        }


@dataclass
class HypothesisReport:
    nonlinearity: str
    h1: HypothesisEntry
    h2: HypothesisEntry
    h3: HypothesisEntry
    h4: HypothesisEntry
    growth_constants: GrowthConstantsReport
    extras: dict[str, HypothesisEntry] = field(default_factory=dict)

    @property
    def entries(self) -> dict[str, HypothesisEntry]:
        return {"h1": self.h1, "h2": self.h2, "h3": self.h3, "h4": self.h4}

    @property
    def passed(self) -> bool:
        """h1 to h4 all pass. Extras and the growth-constant fit are informational."""
        return all(entry.passed for entry in self.entries.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "nonlinearity": self.nonlinearity,
            "passed": self.passed,
            **{name: entry.to_dict() for name, entry in self.entries.items()},
            "growth_constants": self.growth_constants.to_dict(),
            "extras": {name: entry.to_dict() for name, entry in self.extras.items()},
        }


def _witness_at(samples: HypothesisSamples, xi: np.ndarray, flat_index: int) -> Witness:
    i, j = np.unravel_index(flat_index, (samples.t.size, xi.size))
    return Witness(t=float(samples.t[i]), x=float(samples.x[i]), xi=float(xi[j]))


def _resolve(samples: HypothesisSamples | None) -> HypothesisSamples:
    return HypothesisSamples.default() if samples is None else samples


def check_h1(nl: Nonlinearity, samples: HypothesisSamples | None = None) -> HypothesisEntry:
    """|f| <= c0 (1 + |xi|^p) at every sample."""
    samples = _resolve(samples)
    t, x, xi = samples.mesh()
    f = np.broadcast_to(nl.f(t, x, xi), (samples.t.size, samples.xi.size))
    bound = nl.c0 * (1.0 + np.abs(xi) ** nl.p)
    excess = np.abs(f) - bound
    worst = int(np.argmax(excess / bound))
    magnitude = float(excess.flat[worst])
    status: HypothesisStatus = "pass" if np.all(excess <= 1e-12 * bound) else "fail"
    return HypothesisEntry(
        name="h1",
        status=status,
        magnitude=magnitude,
        samples=samples.count,
        witness=_witness_at(samples, samples.xi, worst),
        details={"c0": nl.c0, "p": nl.p, "max_ratio": float(np.max(np.abs(f) / bound))},
    )


def _limit_trend(ratios: np.ndarray) -> tuple[bool, float | None]:
    """Whether a positive sequence sampled at xi = 1e-1 .. 1e-6 tends to zero: it must not
    increase, and either end below 1e-3 or still be falling like a positive power of xi."""
    nonincreasing = bool(np.all(np.diff(ratios) <= 1e-12 * np.maximum(ratios[:-1], 1e-300)))
    final = float(ratios[-1])
    if final < 1e-3:
        return nonincreasing, None
    slope = float(math.log10(ratios[-2] / final))  # decades of ratio per decade of xi
    return nonincreasing and slope > 1e-3, slope


def check_h2(nl: Nonlinearity, samples: HypothesisSamples | None = None) -> HypothesisEntry:
    """f = o(|xi|) and F = o(xi^2) as xi -> 0, uniformly in (t, x)."""
    samples = _resolve(samples)
    probes = np.concatenate([-_H2_PROBES, _H2_PROBES])
    t, x, xi = samples.mesh(probes)
    shape = (samples.t.size, probes.size)
    f_ratio = np.abs(np.broadcast_to(nl.f(t, x, xi), shape)) / np.abs(xi)
    F_ratio = np.abs(np.broadcast_to(nl.F(t, x, xi), shape)) / xi**2

    half = _H2_PROBES.size

    def per_probe(ratio: np.ndarray) -> np.ndarray:
        return np.maximum(ratio[:, :half].max(axis=0), ratio[:, half:].max(axis=0))

    f_trend, F_trend = per_probe(f_ratio), per_probe(F_ratio)
    f_ok, f_slope = _limit_trend(f_trend)
    F_ok, F_slope = _limit_trend(F_trend)
    status: HypothesisStatus = "pass" if f_ok and F_ok else "fail"
    decisive = F_ratio if f_ok and not F_ok else f_ratio
    i = int(np.argmax(decisive[:, [half - 1, -1]].max(axis=1)))
    witness = Witness(float(samples.t[i]), float(samples.x[i]), float(_H2_PROBES[-1]))
    return HypothesisEntry(
        name="h2",
        status=status,
        magnitude=float(max(f_trend[-1], F_trend[-1])),
        samples=samples.t.size * probes.size,
        witness=witness,
        details={
            "f_over_xi": f_trend.tolist(),
            "F_over_xi2": F_trend.tolist(),
            "f_slope": f_slope,
            "F_slope": F_slope,
        },
    )


def check_h3(nl: Nonlinearity, samples: HypothesisSamples | None = None) -> HypothesisEntry:
    """(p + 1) F <= f xi at every sample, to relative tolerance 1e-9."""
    samples = _resolve(samples)
    t, x, xi = samples.mesh()
    shape = (samples.t.size, samples.xi.size)
    F = np.broadcast_to(nl.F(t, x, xi), shape)
    f_xi = np.broadcast_to(nl.f(t, x, xi), shape) * xi
    violation = (nl.p + 1) * F - f_xi
    scale = np.maximum(1.0, np.abs(f_xi))
    worst = int(np.argmax(violation / scale))
    status: HypothesisStatus = "pass" if np.all(violation <= _H3_RTOL * scale) else "fail"
    return HypothesisEntry(
        name="h3",
        status=status,
        magnitude=float(violation.flat[worst]),
        samples=samples.count,
        witness=_witness_at(samples, samples.xi, worst),
        details={"p": nl.p},
    )


def _sorted_with_zero(xi: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate([xi, [0.0]]))


def _increments(nl: Nonlinearity, samples: HypothesisSamples) -> tuple[np.ndarray, np.ndarray]:
    xi = _sorted_with_zero(samples.xi)
    t, x, grid = samples.mesh(xi)
    f = np.broadcast_to(nl.f(t, x, grid), (samples.t.size, xi.size))
    return xi, np.diff(f, axis=1)


def _pair_witness(samples: HypothesisSamples, xi: np.ndarray, flat_index: int) -> Witness:
    i, j = np.unravel_index(flat_index, (samples.t.size, xi.size - 1))
    return Witness(
        t=float(samples.t[i]), x=float(samples.x[i]), xi=float(xi[j]), xi_other=float(xi[j + 1])
    )


def check_h4(nl: Nonlinearity, samples: HypothesisSamples | None = None) -> HypothesisEntry:
    """f nondecreasing in xi: on the sorted xi grid (0 included) no increment is negative."""
    samples = _resolve(samples)
    xi, increments = _increments(nl, samples)
    worst = int(np.argmin(increments))
    status: HypothesisStatus = "pass" if increments.flat[worst] >= -_MONOTONE_ATOL else "fail"
    return HypothesisEntry(
        name="h4",
        status=status,
        magnitude=float(-increments.flat[worst]),
        samples=samples.t.size * xi.size,
        witness=_pair_witness(samples, xi, worst),
    )


def check_strictly_increasing(
    nl: Nonlinearity, samples: HypothesisSamples | None = None
) -> HypothesisEntry:
    """f strictly increasing in xi, the extra assumption of the continuity result."""
    samples = _resolve(samples)
    xi, increments = _increments(nl, samples)
    worst = int(np.argmin(increments))
    status: HypothesisStatus = "pass" if increments.flat[worst] > 0 else "fail"
    return HypothesisEntry(
        name="strictly_increasing",
        status=status,
        magnitude=float(-increments.flat[worst]),
        samples=samples.t.size * xi.size,
        witness=_pair_witness(samples, xi, worst),
    )


def check_primitive_nonnegative(
    nl: Nonlinearity, samples: HypothesisSamples | None = None
) -> HypothesisEntry:
    samples = _resolve(samples)
    t, x, xi = samples.mesh()
    F = np.broadcast_to(nl.F(t, x, xi), (samples.t.size, samples.xi.size))
    worst = int(np.argmin(F))
    status: HypothesisStatus = "pass" if F.flat[worst] >= -_MONOTONE_ATOL else "fail"
    return HypothesisEntry(
        name="primitive_nonnegative",
        status=status,
        magnitude=float(-F.flat[worst]),
        samples=samples.count,
        witness=_witness_at(samples, samples.xi, worst),
    )


def check_primitive_consistency(
    nl: Nonlinearity, n_points: int = 500, seed: int = 0
) -> HypothesisEntry:
    """Central differences of F against f at random points with 0.1 <= |xi| <= 10, step
    1e-5 max(1, |xi|); passes at relative error 1e-6."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 2 * math.pi, n_points)
    x = rng.uniform(0.0, math.pi, n_points)
    xi = rng.uniform(0.1, 10.0, n_points) * rng.choice([-1.0, 1.0], n_points)
    delta = 1e-5 * np.maximum(1.0, np.abs(xi))
    fd = (nl.F(t, x, xi + delta) - nl.F(t, x, xi - delta)) / (2 * delta)
    f = np.broadcast_to(nl.f(t, x, xi), xi.shape)
    error = np.abs(fd - f) / np.maximum(np.abs(f), 1e-12)
    worst = int(np.argmax(error))
    status: HypothesisStatus = "pass" if error[worst] <= 1e-6 else "fail"
    return HypothesisEntry(
        name="primitive_consistency",
        status=status,
        magnitude=float(error[worst]),
        samples=n_points,
        witness=Witness(float(t[worst]), float(x[worst]), float(xi[worst])),
    )


def check_growth_constants(
    nl: Nonlinearity, samples: HypothesisSamples | None = None, nu: float = 0.1
) -> GrowthConstantsReport:
    """Fit c1, c2 of F >= c1 |xi|^{p+1} - c2 (c1 from |xi| >= 1), the threshold r_bar beyond
    which F >= (c1 / 2) |xi|^{p+1}, and C_nu of |F| <= nu xi^2 + C_nu |xi|^{p+1}. Fails only
    when no positive finite constants fit."""
    samples = _resolve(samples)
    t, x, xi = samples.mesh()
    F = np.broadcast_to(nl.F(t, x, xi), (samples.t.size, samples.xi.size))
    power = np.broadcast_to(np.abs(xi) ** (nl.p + 1), F.shape)
    abs_xi = np.broadcast_to(np.abs(xi), F.shape)

    if not np.any(F != 0.0):
        return GrowthConstantsReport(
            status="pass",
            nu=nu,
            c_nu=0.0,
            degenerate=True,
            note="F vanishes identically: c1 is undefined and the superlinear bound holds "
            "only trivially",
        )

    large = abs_xi >= 1.0
    if not np.any(large):
        return GrowthConstantsReport(status="unchecked", nu=nu, note="no samples with |xi| >= 1")

    c1 = float(np.min(F[large] / power[large]))
    c_nu = float(max(0.0, np.max((np.abs(F) - nu * abs_xi**2) / power)))
    if not (c1 > 0 and math.isfinite(c1) and math.isfinite(c_nu)):
        return GrowthConstantsReport(
            status="fail",
            nu=nu,
            c1=c1,
            c_nu=c_nu,
            note="no positive c1 fits F >= c1 |xi|^{p+1} - c2 on the samples",
        )

    c2 = float(max(0.0, np.max(c1 * power - F)))
    c3 = c1 / 2
    # smallest sampled |xi| from which the lower bound holds at every larger sample
    magnitudes = np.unique(abs_xi)
    holds = np.array([np.all((F >= c3 * power)[abs_xi >= r]) for r in magnitudes])
    r_bar = float(magnitudes[np.argmax(holds)]) if np.any(holds) else None
    return GrowthConstantsReport(
        status="pass", nu=nu, c1=c1, c2=c2, c3=c3, r_bar=r_bar, c_nu=c_nu
    )


check_remark12 = check_growth_constants
"""Alias of `check_growth_constants`."""


def check_all(
    nl: Nonlinearity, samples: HypothesisSamples | None = None, seed: int | None = None
) -> HypothesisReport:
    """Run h1 to h4, the growth-constant fit and the extra checks, each in its own span."""
    if samples is None:
        samples = HypothesisSamples.default(seed=seed)

    checks: dict[str, Callable[[], HypothesisEntry]] = {
        "h1": lambda: check_h1(nl, samples),
        "h2": lambda: check_h2(nl, samples),
        "h3": lambda: check_h3(nl, samples),
        "h4": lambda: check_h4(nl, samples),
        "primitive_nonnegative": lambda: check_primitive_nonnegative(nl, samples),
        "strictly_increasing": lambda: check_strictly_increasing(nl, samples),
        "primitive_consistency": lambda: check_primitive_consistency(
            nl, seed=0 if seed is None else seed
        ),
    }
    results: dict[str, HypothesisEntry] = {}
    for name, run in checks.items():
        with hypothesis_check_span(name) as span:
            entry = run()
            span.span_data.status = entry.status
            span.span_data.samples = entry.samples
        results[name] = entry
        if entry.status == "fail" and name.startswith("h"):
            logger.warning(f"{nl.name}: hypothesis {name} fails at {entry.witness}")

    with hypothesis_check_span("growth_constants") as span:
        growth = check_growth_constants(nl, samples)
        span.span_data.status = growth.status

    return HypothesisReport(
        nonlinearity=nl.name,
        h1=results.pop("h1"),
        h2=results.pop("h2"),
        h3=results.pop("h3"),
        h4=results.pop("h4"),
        growth_constants=growth,
        extras=results,
    )
