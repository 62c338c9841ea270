from __future__ import annotations

import math

import numpy as np
import pytest

from kgp.exceptions import MaxIterations, SpectrumCollision, UserError
from kgp.functional import FieldPair, Forcing, manufactured_forcing, residual_norms
from kgp.io import read_coefficients, write_coefficients
from kgp.lifecycle import SolveHooks
from kgp.nonlinearity import from_function, power_law, zero
from kgp.report import SolveReport
from kgp.solver import (
    InitialGuess,
    SolveConfig,
    SolveOverrides,
    fixed_point_solve,
    newton_solve,
)
from kgp.spectral import SpectralField, TrigTerm, Truncation, l2_norm
from kgp.tracing import trace

from .testing_processor import fetch_ordered_spans, fetch_span_types, fetch_traces


def _target(trunc: Truncation, scale: float = 1.0) -> tuple[SpectralField, SpectralField]:
    u = SpectralField.from_terms(
        trunc, [TrigTerm(2, 1, 0.3 * scale), TrigTerm(1, 0, 0.2 * scale, "cos")]
    )
    v = SpectralField.from_terms(trunc, [TrigTerm(1, 0, 0.2 * scale), TrigTerm(3, 2, 0.1 * scale, "sin")])
    return u, v


def _error(report: SolveReport, target: tuple[SpectralField, SpectralField]) -> float:
    u, v = target
    return math.hypot(l2_norm(report.state.u - u), l2_norm(report.state.v - v))


def test_recovers_manufactured_solution():
    trunc = Truncation(8, 8)
    nl = power_law(3)
    target = _target(trunc)
    forcing = manufactured_forcing(*target, 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-11)

    report = newton_solve(cfg, nl, nl, forcing)

    assert report.converged
    assert report.iterations <= 10
    assert _error(report, target) < 1e-9
    assert report.residual_history[0] > report.residual_history[-1]
    assert report.residuals.dual_H <= 1e-11
    assert report.nontrivial
    assert not report.eps_warning
    assert report.usage.jacobian_products > 0
    assert report.usage.krylov_iterations > 0


def test_newton_tail_is_superlinear():
    trunc = Truncation(8, 8)
    nl = power_law(3)
    forcing = manufactured_forcing(*_target(trunc), 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-11)

    history = newton_solve(cfg, nl, nl, forcing).residual_history

    tail = [(r, r_next) for r, r_next in zip(history, history[1:]) if r < 0.1]
    assert tail
    for r, r_next in tail:
        # 1e-13 is the round-off floor of the residual
        assert r_next <= 10.0 * r**1.5 + 1e-13


def test_saved_solution_reloads_and_restarts(tmp_path):
    trunc = Truncation(8, 8)
    nl = power_law(3)
    forcing = manufactured_forcing(*_target(trunc), 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-11)
    report = newton_solve(cfg, nl, nl, forcing)

    path = write_coefficients(tmp_path / "solution.csv", report.state.u, report.state.v, cfg.b, cfg.eps)
    loaded = read_coefficients(path)
    reloaded = FieldPair(loaded.u, loaded.v, loaded.b, loaded.eps)
    assert residual_norms(reloaded, nl, nl, forcing).dual_H <= cfg.tol_residual

    warm = SolveConfig(
        b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-11, initial_guess=InitialGuess.from_file(path)
    )
    restart = newton_solve(warm, nl, nl, forcing)
    assert restart.converged
    assert restart.iterations <= 2


def test_decoupled_solve_meets_the_joint_tolerance():
    trunc = Truncation(6, 6)
    nl_f, nl_g = power_law(3), power_law(2.5)
    target = _target(trunc)
    forcing = manufactured_forcing(*target, 2.5, 0.0, nl_f, nl_g)
    cfg = SolveConfig(b=2.5, eps=0.0, trunc=trunc, tol_residual=1e-10)

    report = newton_solve(cfg, nl_f, nl_g, forcing)

    assert report.converged
    assert report.residuals.dual_H <= 1e-10
    assert _error(report, target) < 1e-8


def test_max_iterations_carries_the_partial_report():
    trunc = Truncation(8, 8)
    nl = power_law(3)
    target = _target(trunc, scale=3.0)
    forcing = manufactured_forcing(*target, 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, max_newton=1)

    with pytest.raises(MaxIterations) as exc_info:
        newton_solve(cfg, nl, nl, forcing)

    report = exc_info.value.report
    assert report is not None
    assert not report.converged
    assert report.iterations == 1
    assert len(report.residual_history) == 2


def test_unforced_zero_state_is_a_solution():
    cfg = SolveConfig(b=1.0, eps=0.2, trunc=Truncation(4, 4))
    report = newton_solve(cfg, power_law(3), power_law(3))
    assert report.converged
    assert report.iterations == 0
    assert report.state.u.max_abs() == 0.0
    assert not report.nontrivial
    assert report.energy.total == 0.0


def test_finite_difference_jacobian():
    trunc = Truncation(5, 5)
    nl = power_law(3)
    target = _target(trunc)
    forcing = manufactured_forcing(*target, 1.0, 0.05, nl, nl)
    cfg = SolveConfig(
        b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-10, jacobian="finite_difference"
    )
    report = newton_solve(cfg, nl, nl, forcing)
    assert report.converged
    assert _error(report, target) < 1e-8


def test_missing_derivative_falls_back_to_finite_differences():
    trunc = Truncation(3, 3)
    nl = from_function(lambda t, x, xi: np.asarray(xi) ** 3, p=3, c0=1)
    u = SpectralField.mode(trunc, 1, 0, 0.2)
    v = SpectralField.mode(trunc, 2, 1, 0.2)
    forcing = manufactured_forcing(u, v, 1.0, 0.1, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.1, trunc=trunc, tol_residual=1e-10)

    report = newton_solve(cfg, nl, nl, forcing)

    assert report.converged
    assert any("finite-difference" in w for w in report.warnings)
    assert math.hypot(l2_norm(report.state.u - u), l2_norm(report.state.v - v)) < 1e-8


def test_fixed_point_on_a_contraction():
    trunc = Truncation(6, 6)
    nl = power_law(3)
    target = _target(trunc, scale=0.3)
    forcing = manufactured_forcing(*target, 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-11, max_newton=200)

    report = fixed_point_solve(cfg, nl, nl, forcing)

    assert report.method == "fixed_point"
    assert report.converged
    assert _error(report, target) < 1e-9


def test_fixed_point_divergence_stops_early():
    trunc = Truncation(3, 3)
    cfg = SolveConfig(
        b=1.0,
        eps=5.0,
        trunc=trunc,
        max_newton=500,
        initial_guess=InitialGuess.single_mode(1, 1, 1.0),
    )
    with pytest.raises(MaxIterations) as exc_info:
        fixed_point_solve(cfg, zero(), zero())

    report = exc_info.value.report
    assert report is not None
    assert report.iterations < 500
    assert any("diverged" in w for w in report.warnings)
    assert report.eps_warning


def test_fixed_point_fails_on_a_large_cubic_solution():
    trunc = Truncation(6, 6)
    nl = power_law(3)
    target = _target(trunc, scale=10.0)
    forcing = manufactured_forcing(*target, 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, tol_residual=1e-9, max_newton=200)

    with pytest.raises(MaxIterations) as exc_info:
        fixed_point_solve(cfg, nl, nl, forcing)

    report = exc_info.value.report
    assert report is not None
    assert not report.converged
    assert report.method == "fixed_point"
    assert not report.residuals.dual_H <= cfg.tol_residual


def test_eps_warning_threshold():
    cfg = SolveConfig(b=1.0, eps=0.3, trunc=Truncation(2, 2))
    assert cfg.eps_threshold == 0.5
    assert not cfg.eps_warning
    assert SolveConfig(b=1.0, eps=-0.5, trunc=Truncation(2, 2)).eps_warning
    # b = 0.25 has eta = 0.25
    assert SolveConfig(b=0.25, eps=0.0, trunc=Truncation(2, 2)).eps_threshold == 0.125


def test_eps_warning_is_reported_not_raised():
    cfg = SolveConfig(b=1.0, eps=0.6, trunc=Truncation(3, 3))
    report = newton_solve(cfg, power_law(3), power_law(3))
    assert report.converged
    assert report.eps_warning
    assert any("existence is not guaranteed" in w for w in report.warnings)


@pytest.mark.parametrize(
    "overrides",
    [
        {"tol_residual": 0.0},
        {"max_newton": -1},
        {"krylov_tol": 1.0},
        {"krylov_maxit": 0},
        {"eps": math.inf},
        {"linesearch": "armijo"},
        {"jacobian": "broyden"},
    ],
)
def test_solve_config_validation(overrides):
    kwargs = {"b": 1.0, "eps": 0.0, "trunc": Truncation(2, 2)} | overrides
    with pytest.raises(UserError):
        SolveConfig(**kwargs)


def test_solve_config_rejects_b_in_spectrum():
    with pytest.raises(SpectrumCollision):
        SolveConfig(b=3.0, eps=0.0, trunc=Truncation(2, 2))


def test_resolve_overlays_non_none_values():
    base = SolveConfig(b=1.0, eps=0.1, trunc=Truncation(2, 2), max_newton=7)
    assert base.resolve(None) is base
    resolved = base.resolve(SolveOverrides(eps=0.2, trunc=Truncation(3, 3)))
    assert resolved.eps == 0.2
    assert resolved.trunc == Truncation(3, 3)
    assert resolved.max_newton == 7
    assert resolved.b == 1.0


def test_initial_guesses(tmp_path):
    trunc = Truncation(3, 3)
    u, v = InitialGuess.single_mode(2, 1, 0.5).build(trunc)
    assert u.coeff(2, 1) == pytest.approx(0.5 / math.sqrt(2))
    assert v.coeff(2, 1) == u.coeff(2, 1)

    small = Truncation(2, 2)
    w = SpectralField.mode(small, 1, 1, 0.7)
    path = write_coefficients(tmp_path / "guess.csv", w, -w, 1.0, 0.0)
    u, v = InitialGuess.from_file(path).build(trunc)
    assert u.trunc == trunc
    assert u.coeff(1, 1) == w.coeff(1, 1)
    assert v.coeff(1, 1) == -w.coeff(1, 1)

    state = FieldPair(w, w, 1.0, 0.0)
    u, _ = InitialGuess.from_state(state).build(trunc)
    assert u.coeff(1, 1) == w.coeff(1, 1)

    with pytest.raises(UserError):
        InitialGuess(kind="from_file").build(trunc)


def test_solve_spans():
    trunc = Truncation(4, 4)
    nl = power_law(3)
    forcing = manufactured_forcing(*_target(trunc), 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc)

    with trace("test"):
        report = newton_solve(cfg, nl, nl, forcing)

    types = fetch_span_types()
    assert types[0] == "solve"
    assert types.count("newton_step") == report.iterations
    solve = fetch_ordered_spans()[0]
    assert solve.span_data.converged
    assert solve.span_data.iterations == report.iterations
    assert solve.error is None
    assert [t.name for t in fetch_traces()] == ["test"]


def test_solve_opens_its_own_trace():
    cfg = SolveConfig(b=1.0, eps=0.0, trunc=Truncation(2, 2))
    newton_solve(cfg, zero(), zero())
    assert [t.name for t in fetch_traces()] == ["kgp solve"]


def test_failed_solve_marks_its_span():
    trunc = Truncation(4, 4)
    nl = power_law(3)
    forcing = manufactured_forcing(*_target(trunc), 1.0, 0.05, nl, nl)
    cfg = SolveConfig(b=1.0, eps=0.05, trunc=trunc, max_newton=0)

    with pytest.raises(MaxIterations):
        newton_solve(cfg, nl, nl, forcing)

    solve = next(s for s in fetch_ordered_spans() if s.span_data.type == "solve")
    assert solve.error is not None
    assert solve.error["message"] == "Max iterations exceeded"


class RecordingHooks(SolveHooks):
    def __init__(self) -> None:
        self.events: list[str] = []
        self.residuals: list[float] = []

    def on_solve_start(self, config, method):
        self.events.append(f"start:{method}")

    def on_iteration(self, iteration, residual):
        self.events.append(f"iteration:{iteration}")
        self.residuals.append(residual)

    def on_solve_end(self, report):
        self.events.append("end")


def test_hooks_follow_the_iteration():
    trunc = Truncation(4, 4)
    nl = power_law(3)
    forcing = manufactured_forcing(*_target(trunc), 1.0, 0.05, nl, nl)
    hooks = RecordingHooks()

    report = newton_solve(SolveConfig(b=1.0, eps=0.05, trunc=trunc), nl, nl, forcing, hooks)

    assert hooks.events[0] == "start:newton"
    assert hooks.events[-1] == "end"
    assert hooks.events[1:-1] == [f"iteration:{i}" for i in range(1, report.iterations + 1)]
    assert hooks.residuals == report.residual_history[1:]


def test_report_export_is_json_ready():
    cfg = SolveConfig(b=1.0, eps=0.1, trunc=Truncation(2, 2))
    exported = newton_solve(cfg, zero(), zero(), Forcing.none()).export()
    assert exported["method"] == "newton"
    assert exported["converged"] is True
    assert exported["J"] == 2 and exported["K"] == 2
    assert set(exported["usage"]) == {"residual_evaluations", "jacobian_products", "krylov_iterations"}
