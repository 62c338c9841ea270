from __future__ import annotations

import math

import numpy as np
import pytest

from kgp import _debug
from kgp.exceptions import SpectrumCollision, TruncationMismatch
from kgp.functional import (
    FieldPair,
    Forcing,
    decomposition_report,
    decoupled_residual_norms,
    energy,
    gradient,
    manufactured_forcing,
    potential,
    project_nonlinearity,
    residual_norms,
    tail_residual,
)
from kgp.nonlinearity import Amplitude, power_law, zero
from kgp.spectral import SpectralField, Truncation, l2_inner, l2_norm

from .fields import random_field

TRUNC = Truncation(4, 4)


def _state(rng, b=0.5, eps=0.2, scale=0.3) -> FieldPair:
    return FieldPair(random_field(rng, TRUNC, scale), random_field(rng, TRUNC, scale), b, eps)


def test_field_pair_rejects_mixed_truncations():
    with pytest.raises(TruncationMismatch):
        FieldPair(SpectralField.zeros(Truncation(2, 2)), SpectralField.zeros(TRUNC), 1.0, 0.0)


def test_field_pair_rejects_b_in_spectrum():
    with pytest.raises(SpectrumCollision):
        FieldPair.zeros(TRUNC, 3.0, 0.0)


def test_forcing_must_match_the_state():
    forcing = Forcing(SpectralField.zeros(Truncation(2, 2)))
    with pytest.raises(TruncationMismatch):
        forcing.fields(TRUNC)
    h1, h2 = forcing.resize(TRUNC).fields(TRUNC)
    assert h1.trunc == TRUNC and h2.max_abs() == 0.0
    assert Forcing.none().is_zero


def test_energy_of_single_modes():
    b = 0.5
    plus = SpectralField.mode(TRUNC, 2, 1, 0.7)  # lambda = 3
    minus = SpectralField.mode(TRUNC, 1, 3, 0.4)  # lambda = -8
    kernel = SpectralField.mode(TRUNC, 2, 2, 0.9)
    nl = zero()

    result = energy(FieldPair(plus, minus, b, 0.0), nl, nl)
    assert result.u_plus == pytest.approx(-0.5 * 3.5 * math.pi**2 * 0.49)
    assert result.v_minus == pytest.approx(0.5 * 7.5 * math.pi**2 * 0.16)
    assert result.u_minus == 0.0 and result.v_plus == 0.0

    result = energy(FieldPair(kernel, SpectralField.zeros(TRUNC), b, 0.0), nl, nl)
    assert result.u_kernel == pytest.approx(-0.5 * b * math.pi**2 * 0.81)
    assert result.total == pytest.approx(result.u_kernel)


def test_potential_of_power_law_mode():
    # u = 0.5 sin(x): int F = (1/4) * 2 pi * int_0^pi (0.5 sin x)^4 dx
    u = SpectralField.mode(TRUNC, 1, 0, 0.5)
    expected = 0.25 * 2 * math.pi * 0.5**4 * 3 * math.pi / 8
    assert potential(u, power_law(3)) == pytest.approx(expected, rel=1e-12)


def test_projection_of_cubic_is_exact():
    # sin^3 x = (3 sin x - sin 3x) / 4
    u = SpectralField.mode(TRUNC, 1, 0, 1.0)
    projected = project_nonlinearity(u, power_law(3))
    assert projected.coeff(1, 0) == pytest.approx(0.75, abs=1e-13)
    assert projected.coeff(3, 0) == pytest.approx(-0.25, abs=1e-13)
    assert projected.coeff(2, 0) == pytest.approx(0.0, abs=1e-13)


def test_split_and_undecomposed_energy_agree(rng, monkeypatch):
    monkeypatch.setattr(_debug, "CHECK_ENERGY_FORMS", True)
    nl = power_law(3, Amplitude(1.0, 0.5))
    for b in (0.5, 1.0, 2.5):
        state = _state(rng, b=b)
        h1, h2 = random_field(rng, TRUNC, 0.1), random_field(rng, TRUNC, 0.1)
        result = energy(state, nl, nl, Forcing(h1, h2))
        assert result.undecomposed_total == pytest.approx(result.total, rel=1e-10, abs=1e-10)
        assert sum(result.parts().values()) == pytest.approx(result.total)


def test_energy_cross_check_can_be_skipped(rng, monkeypatch):
    monkeypatch.setattr(_debug, "CHECK_ENERGY_FORMS", False)
    result = energy(_state(rng), zero(), zero())
    assert result.undecomposed_total is None
    assert result.to_dict()["undecomposed_total"] is None


def test_gradient_matches_directional_derivative(rng):
    nl_f = power_law(3, Amplitude(1.0, 0.5))
    nl_g = power_law(2.5)
    state = _state(rng)
    forcing = Forcing(random_field(rng, TRUNC, 0.1), random_field(rng, TRUNC, 0.1))
    r_u, r_v = gradient(state, nl_f, nl_g, forcing)

    for _ in range(3):
        du, dv = random_field(rng, TRUNC), random_field(rng, TRUNC)
        step = 1e-5
        forward = energy(state.with_fields(state.u + du * step, state.v + dv * step), nl_f, nl_g, forcing)
        backward = energy(state.with_fields(state.u - du * step, state.v - dv * step), nl_f, nl_g, forcing)
        fd = (forward.total - backward.total) / (2 * step)
        exact = l2_inner(r_u, du) + l2_inner(r_v, dv)
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-8)


def test_manufactured_forcing_zeroes_the_residual(rng):
    nl = power_law(3)
    u_star, v_star = random_field(rng, TRUNC, 0.3), random_field(rng, TRUNC, 0.3)
    forcing = manufactured_forcing(u_star, v_star, 1.0, 0.05, nl, nl)
    residual = residual_norms(FieldPair(u_star, v_star, 1.0, 0.05), nl, nl, forcing)
    assert residual.l2 < 1e-12
    assert residual.dual_H < 1e-12


def test_residual_of_coupling_only():
    u = SpectralField.mode(TRUNC, 1, 0, 1.0)
    v = SpectralField.mode(TRUNC, 2, 1, 0.5)
    forcing = manufactured_forcing(u, v, 1.0, 0.0, zero(), zero())
    state = FieldPair(u, v, 1.0, 0.3)

    coupled = residual_norms(state, zero(), zero(), forcing)
    assert coupled.l2 == pytest.approx(0.3 * math.hypot(l2_norm(u), l2_norm(v)))

    res_u, res_v = decoupled_residual_norms(state, zero(), zero(), forcing)
    assert res_u.l2 < 1e-14 and res_v.l2 < 1e-14


def test_dual_norm_weights():
    # residual of u = mode(2, 0) with b = 0.5 is -(4.5) u: dual weight 1/4.5
    u = SpectralField.mode(TRUNC, 2, 0, 1.0)
    residual = residual_norms(FieldPair(u, SpectralField.zeros(TRUNC), 0.5, 0.0), zero(), zero())
    assert residual.l2 == pytest.approx(4.5 * math.pi)
    assert residual.dual_H == pytest.approx(math.sqrt(4.5) * math.pi)


def test_tail_residual():
    u = SpectralField.mode(TRUNC, 2, 1, 0.5)
    v = SpectralField.mode(TRUNC, 1, 0, 0.5)
    linear = manufactured_forcing(u, v, 1.0, 0.1, zero(), zero())
    assert tail_residual(FieldPair(u, v, 1.0, 0.1), zero(), zero(), linear).l2 < 1e-14

    cubic = power_law(3)
    forcing = manufactured_forcing(u, v, 1.0, 0.1, cubic, cubic)
    state = FieldPair(u, v, 1.0, 0.1)
    assert residual_norms(state, cubic, cubic, forcing).l2 < 1e-12
    # u^3 reaches sin(6x) cos(3t), outside J = 4
    assert tail_residual(state, cubic, cubic, forcing).l2 > 1e-3


def test_decomposition_report(rng):
    state = _state(rng, b=2.5)
    report = decomposition_report(state)
    squares = sum(value**2 for value in report.components().values())
    assert report.E_norm == pytest.approx(math.sqrt(squares))
    assert set(report.to_dict()) == {
        "u_plus_H",
        "u_minus_H",
        "v_plus_H",
        "v_minus_H",
        "y_L2",
        "z_L2",
        "E_norm",
    }


def test_zero_state_has_zero_energy():
    state = FieldPair.zeros(TRUNC, 1.0, 0.4)
    assert energy(state, power_law(3), power_law(3)).total == 0.0
    r_u, r_v = gradient(state, power_law(3), power_law(3))
    assert np.all(r_u.coeffs == 0) and np.all(r_v.coeffs == 0)
