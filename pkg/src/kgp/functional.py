"""The indefinite energy of the coupled system, its gradient and the residual norms.

    Phi(u, v) = -1/2 <(L+b)u, u> - 1/2 <(L+b)v, v> - eps int uv - int F(u) - int G(v)
                - int h1 u - int h2 v

Critical points of Phi are the weak time-periodic solutions. Nonlinear terms are evaluated on a
dealiased grid and projected back; the energy uses the same grid so that the gradient is the
exact derivative of the discrete energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _debug
from .exceptions import TruncationMismatch
from .logger import logger
from .nonlinearity import Nonlinearity
from .spectral import (
    PI_SQ,
    GridField,
    SpectralField,
    Truncation,
    apply_L_plus_b,
    dealiased_grid_shape,
    from_grid,
    h_norm,
    l2_inner,
    l2_norm,
    quadratic_form,
    spectral_gap,
    split,
    to_grid,
)


@dataclass(frozen=True, eq=False)
class FieldPair:
    """The state (u, v) of the coupled system together with its parameters b and eps."""

    u: SpectralField
    v: SpectralField
    b: float
    eps: float

    def __post_init__(self) -> None:
        if self.u.trunc != self.v.trunc:
            raise TruncationMismatch(
                f"u and v live on different truncations: {self.u.trunc} vs {self.v.trunc}"
            )
        spectral_gap(self.b)

    @property
    def trunc(self) -> Truncation:
        return self.u.trunc

    @classmethod
    def zeros(cls, trunc: Truncation, b: float, eps: float) -> FieldPair:
        return cls(SpectralField.zeros(trunc), SpectralField.zeros(trunc), b, eps)

    def with_fields(self, u: SpectralField, v: SpectralField) -> FieldPair:
        return FieldPair(u, v, self.b, self.eps)

    def with_eps(self, eps: float) -> FieldPair:
        return FieldPair(self.u, self.v, self.b, eps)

    def resize(self, trunc: Truncation) -> FieldPair:
        return FieldPair(self.u.resize(trunc), self.v.resize(trunc), self.b, self.eps)

    def l2_distance(self, other: FieldPair) -> float:
        return math.hypot(l2_norm(self.u - other.u), l2_norm(self.v - other.v))


@dataclass(frozen=True, eq=False)
class Forcing:
    """Source terms (h1, h2) added to the two equations. Missing terms are zero."""

    h1: SpectralField | None = None
    h2: SpectralField | None = None

    @classmethod
    def none(cls) -> Forcing:
        return cls()

    @property
    def is_zero(self) -> bool:
        return all(h is None or h.max_abs() == 0.0 for h in (self.h1, self.h2))

    def fields(self, trunc: Truncation) -> tuple[SpectralField, SpectralField]:
        out = []
        for h in (self.h1, self.h2):
            if h is None:
                out.append(SpectralField.zeros(trunc))
            elif h.trunc != trunc:
                raise TruncationMismatch(f"forcing lives on {h.trunc}, state on {trunc}")
            else:
                out.append(h)
        return out[0], out[1]

    def resize(self, trunc: Truncation) -> Forcing:
        return Forcing(
            None if self.h1 is None else self.h1.resize(trunc),
            None if self.h2 is None else self.h2.resize(trunc),
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    u_plus: float
    """-1/2 ||u^+||_H^2"""
    u_minus: float
    """+1/2 ||u^-||_H^2"""
    u_kernel: float
    """-(b/2) ||y||_{L2}^2"""
    v_plus: float
    v_minus: float
    v_kernel: float
    coupling: float
    """-eps int uv"""
    potential_f: float
    """-int F(u)"""
    potential_g: float
    forcing: float
    """-int h1 u - int h2 v"""
    undecomposed_total: float | None = None
    """The same energy from <(L+b)u, u> without splitting, when the cross-check ran."""

    def parts(self) -> dict[str, float]:
        return {
            "u_plus": self.u_plus,
            "u_minus": self.u_minus,
            "u_kernel": self.u_kernel,
            "v_plus": self.v_plus,
            "v_minus": self.v_minus,
            "v_kernel": self.v_kernel,
            "coupling": self.coupling,
            "potential_f": self.potential_f,
            "potential_g": self.potential_g,
            "forcing": self.forcing,
        }

    def to_dict(self) -> dict[str, Any]:
        return {"total": self.total, **self.parts(), "undecomposed_total": self.undecomposed_total}


@dataclass(frozen=True)
class ResidualNorms:
    l2: float
    dual_H: float
    """Residual with mode (j, k) weighted by |lambda + b|^{-1/2} off the kernel and 1 on it."""

    def to_dict(self) -> dict[str, float]:
        return {"l2": self.l2, "dual_H": self.dual_H}


@dataclass(frozen=True)
class DecompositionReport:
    u_plus_H: float
    u_minus_H: float
    v_plus_H: float
    v_minus_H: float
    y_L2: float
    z_L2: float
    E_norm: float
    """||(u, v)||_E computed directly from the H-norms of u and v."""

    def components(self) -> dict[str, float]:
        return {
            "u_plus_H": self.u_plus_H,
            "u_minus_H": self.u_minus_H,
            "v_plus_H": self.v_plus_H,
            "v_minus_H": self.v_minus_H,
            "y_L2": self.y_L2,
            "z_L2": self.z_L2,
        }

    def to_dict(self) -> dict[str, float]:
        return {**self.components(), "E_norm": self.E_norm}


@dataclass
class GridEvaluation:
    """One field sampled on the dealiased grid of its nonlinearity. Newton keeps one per
    iterate and reuses it for every Jacobian product."""

    source: SpectralField
    nl: Nonlinearity
    grid: GridField = field(init=False)
    t: np.ndarray = field(init=False)
    x: np.ndarray = field(init=False)
    _slope: np.ndarray | None = field(init=False, default=None)

    def __post_init__(self) -> None:
        nt, nx = nonlinear_grid_shape(self.source.trunc, self.nl)
        self.grid = to_grid(self.source, nt, nx)
        self.t = self.grid.t[:, None]
        self.x = self.grid.x[None, :]

    def potential(self) -> float:
        return self.grid.integrate(self.nl.F(self.t, self.x, self.grid.values))

    def projected_f(self) -> SpectralField:
        values = self.nl.f(self.t, self.x, self.grid.values)
        return from_grid(GridField(values), self.source.trunc)

    def linearized(self, direction: SpectralField) -> SpectralField:
        """P[df(u) w]: the derivative of the projected nonlinearity along w."""
        if self.nl.df is None:
            raise ValueError(f"{self.nl.name} has no closed-form derivative")
        if self._slope is None:
            self._slope = np.asarray(self.nl.df(self.t, self.x, self.grid.values))
        w = to_grid(direction, self.grid.nt, self.grid.nx)
        return from_grid(GridField(self._slope * w.values), self.source.trunc)


def nonlinear_grid_shape(trunc: Truncation, nl: Nonlinearity) -> tuple[int, int]:
    return dealiased_grid_shape(trunc, nl.grid_degree)


def potential(u: SpectralField, nl: Nonlinearity) -> float:
    """int F(t, x, u) over the domain, by tensor trapezoid on the dealiased grid."""
    if nl.is_zero:
        return 0.0
    return GridEvaluation(u, nl).potential()


def project_nonlinearity(u: SpectralField, nl: Nonlinearity) -> SpectralField:
    """Galerkin projection of f(t, x, u) onto the truncation of u."""
    if nl.is_zero:
        return SpectralField.zeros(u.trunc)
    return GridEvaluation(u, nl).projected_f()


def _half_h_squares(w: SpectralField, b: float) -> tuple[float, float, float]:
    plus, minus, kernel = split(w, b)
    return (
        -0.5 * h_norm(plus, b) ** 2,
        0.5 * h_norm(minus, b) ** 2,
        -0.5 * b * l2_norm(kernel) ** 2,
    )


def energy(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
) -> EnergyBreakdown:
    """Phi in split form, each quadratic part taken class by class."""
    forcing = forcing or Forcing.none()
    h1, h2 = forcing.fields(state.trunc)
    u_plus, u_minus, u_kernel = _half_h_squares(state.u, state.b)
    v_plus, v_minus, v_kernel = _half_h_squares(state.v, state.b)
    coupling = -state.eps * l2_inner(state.u, state.v)
    potential_f = -potential(state.u, nl_f)
    potential_g = -potential(state.v, nl_g)
    forcing_term = -l2_inner(h1, state.u) - l2_inner(h2, state.v)

    total = (
        u_plus + u_minus + u_kernel + v_plus + v_minus + v_kernel
        + coupling + potential_f + potential_g + forcing_term
    )

    undecomposed = None
    if _debug.CHECK_ENERGY_FORMS:
        undecomposed = (
            -0.5 * quadratic_form(state.u, state.b)
            - 0.5 * quadratic_form(state.v, state.b)
            + coupling + potential_f + potential_g + forcing_term
        )
        scale = max(1.0, abs(total), abs(u_plus) + abs(u_minus) + abs(v_plus) + abs(v_minus))
        if abs(undecomposed - total) > 1e-10 * scale:
            logger.warning(
                f"Energy forms disagree: split {total!r} vs undecomposed {undecomposed!r}"
            )

    return EnergyBreakdown(
        total=total,
        u_plus=u_plus,
        u_minus=u_minus,
        u_kernel=u_kernel,
        v_plus=v_plus,
        v_minus=v_minus,
        v_kernel=v_kernel,
        coupling=coupling,
        potential_f=potential_f,
        potential_g=potential_g,
        forcing=forcing_term,
        undecomposed_total=undecomposed,
    )


def gradient(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
) -> tuple[SpectralField, SpectralField]:
    """Representers (R_u, R_v) of Phi'(u, v):

        R_u = -[(L+b)u + eps v + P f(u) + h1],  R_v = -[(L+b)v + eps u + P g(v) + h2]
    """
    forcing = forcing or Forcing.none()
    h1, h2 = forcing.fields(state.trunc)
    r_u = apply_L_plus_b(state.u, state.b) + state.eps * state.v
    r_u = r_u + project_nonlinearity(state.u, nl_f) + h1
    r_v = apply_L_plus_b(state.v, state.b) + state.eps * state.u
    r_v = r_v + project_nonlinearity(state.v, nl_g) + h2
    return -r_u, -r_v


def dual_weights(trunc: Truncation, b: float) -> np.ndarray:
    spectral_gap(b)
    return np.where(trunc.kernel_mask, 1.0, 1.0 / np.abs(trunc.eigenvalues + b))


def _norms(fields: tuple[SpectralField, ...], b: float) -> ResidualNorms:
    l2_sq = 0.0
    dual_sq = 0.0
    for r in fields:
        squares = r.trunc.multiplicity * np.abs(r.coeffs) ** 2
        l2_sq += PI_SQ * float(np.sum(squares))
        dual_sq += PI_SQ * float(np.sum(dual_weights(r.trunc, b) * squares))
    return ResidualNorms(l2=math.sqrt(l2_sq), dual_H=math.sqrt(dual_sq))


def residual_norms(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
) -> ResidualNorms:
    return _norms(gradient(state, nl_f, nl_g, forcing), state.b)


def decoupled_residual_norms(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
) -> tuple[ResidualNorms, ResidualNorms]:
    """Residuals of the two scalar equations with the coupling dropped, each on its own."""
    decoupled = state.with_eps(0.0)
    r_u, r_v = gradient(decoupled, nl_f, nl_g, forcing)
    return _norms((r_u,), state.b), _norms((r_v,), state.b)


def tail_residual(
    state: FieldPair,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
    factor: int = 2,
) -> ResidualNorms:
    """Residual of the state embedded in a truncation `factor` times larger, restricted to the
    modes the working truncation leaves out. A small value is evidence, not proof, that the
    Galerkin solution also solves the untruncated problem."""
    trunc = state.trunc
    fine = Truncation(factor * trunc.J, factor * trunc.K)
    fine_forcing = (forcing or Forcing.none()).resize(fine)
    r_u, r_v = gradient(state.resize(fine), nl_f, nl_g, fine_forcing)
    inside = np.zeros(fine.shape, dtype=bool)
    inside[: trunc.J, : trunc.K + 1] = True
    return _norms((r_u.masked(~inside), r_v.masked(~inside)), state.b)


def manufactured_forcing(
    u_star: SpectralField,
    v_star: SpectralField,
    b: float,
    eps: float,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
) -> Forcing:
    """The forcing for which (u_star, v_star) is an exact Galerkin zero of the residual."""
    target = FieldPair(u_star, v_star, b, eps)
    r_u, r_v = gradient(target, nl_f, nl_g, Forcing.none())
    return Forcing(r_u, r_v)


def decomposition_report(state: FieldPair) -> DecompositionReport:
    b = state.b
    u_plus, u_minus, y = split(state.u, b)
    v_plus, v_minus, z = split(state.v, b)
    return DecompositionReport(
        u_plus_H=h_norm(u_plus, b),
        u_minus_H=h_norm(u_minus, b),
        v_plus_H=h_norm(v_plus, b),
        v_minus_H=h_norm(v_minus, b),
        y_L2=l2_norm(y),
        z_L2=l2_norm(z),
        E_norm=math.hypot(h_norm(state.u, b), h_norm(state.v, b)),
    )
