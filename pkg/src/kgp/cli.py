"""The `kgp` command line.

    kgp check     --config run.json        # hypotheses on f and g, spectrum of L at b
    kgp solve     --config run.json        # one solve, a refinement schedule or a search
    kgp sweep     --config run.json        # continuation in eps down to eps = 0
    kgp represent --config run.json        # range condition, w1 and the kernel profile
    kgp spectrum  --config run.json        # mode table of L + b on the truncation

Every command writes `report.json` to the output directory. Exit codes: 0 success,
1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from .continuation import SWEEP_COLUMNS, continuation_in_epsilon, nontrivial_search, refine
from .exceptions import (
    KGPException,
    LinearSolveBreakdown,
    MaxIterations,
    NonPositiveAmplitude,
    NotInRange,
    SpectrumCollision,
    UserError,
)
from .functional import FieldPair, tail_residual
from .io import read_coefficients, write_coefficients, write_csv, write_json
from .logger import logger
from .nonlinearity import check_all
from .report import SolveReport
from .run_config import RunConfig, load_run_config
from .solver import fixed_point_solve, newton_solve
from .spectral import ModeClass, kernel_part, l2_norm, spectral_gap, spectrum_table
from .tracing import trace
from .util._logging import configure_logging
from .version import __version__
from .wave_rep import (
    continuity_report,
    kernel_profile,
    linf_report,
    lipschitz_report,
    range_condition,
    represent_w1,
)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

_CONFIG_ERRORS = (UserError, SpectrumCollision, NonPositiveAmplitude)


def _summary(text: str) -> None:
    print(text, flush=True)


def _write_solution(out: Path, report: SolveReport, name: str = "solution.csv") -> Path:
    state = report.state
    return write_coefficients(out / name, state.u, state.v, state.b, state.eps)


def cmd_check(config: RunConfig, out: Path, seed: int | None) -> int:
    nl_f, nl_g = config.nonlinearities()
    gap = spectral_gap(config.b)
    threshold = min(gap.eta, config.b) / 2
    eps_values = [config.eps, *(config.eps_list or [])]
    eps_warning = any(abs(e) >= threshold for e in eps_values)

    reports = {"f": check_all(nl_f, seed=seed), "g": check_all(nl_g, seed=seed)}
    passed = all(r.passed for r in reports.values())
    if eps_warning:
        logger.warning(f"|eps| >= {threshold:.6g} in {eps_values}; beyond the smallness condition")

    payload = {
        "passed": passed,
        "f": reports["f"].to_dict(),
        "g": reports["g"].to_dict(),
        "spectrum": {
            "b": gap.b,
            "eta": gap.eta,
            "kappa": gap.kappa,
            "in_spectrum": gap.in_spectrum,
        },
        "eps_threshold": threshold,
        "eps_warning": eps_warning,
    }
    write_json(out / "hypotheses.json", payload)
    write_json(out / "report.json", {"command": "check", "passed": passed, "eps_warning": eps_warning})

    for name, report in reports.items():
        failed = [key for key, entry in report.entries.items() if not entry.passed]
        _summary(f"{name}: {report.nonlinearity}: " + ("pass" if not failed else "fail " + ",".join(failed)))
    _summary(f"eta={gap.eta:g} kappa={gap.kappa:g} eps_threshold={threshold:g}")
    return EXIT_OK if passed else EXIT_NUMERICAL


def _solve_once(config: RunConfig, nl_f, nl_g, forcing) -> SolveReport:
    cfg = config.solve_config()
    schedule = config.schedule()
    if schedule is not None:
        return refine(schedule, cfg, nl_f, nl_g, forcing)[-1]
    if config.solver.method == "fixed_point":
        return fixed_point_solve(cfg, nl_f, nl_g, forcing)
    return newton_solve(cfg, nl_f, nl_g, forcing)


def _search(config: RunConfig, out: Path, nl_f, nl_g) -> int:
    if config.forcing.kind != "none":
        raise UserError("solver.search looks for unforced solutions; set forcing to none")
    found = nontrivial_search(config.solve_config(), nl_f, nl_g, config.solver.search or 0)
    for index, report in enumerate(found):
        _write_solution(out, report, f"solution_{index}.csv")
    write_json(
        out / "report.json",
        {"command": "solve", "search": True, "found": len(found), "states": [r.export() for r in found]},
    )
    _summary(f"search: {len(found)} nontrivial state(s)")
    return EXIT_OK


def cmd_solve(config: RunConfig, out: Path, seed: int | None) -> int:
    nl_f, nl_g = config.nonlinearities()
    if config.solver.search is not None:
        return _search(config, out, nl_f, nl_g)

    forcing, target = config.build_forcing(nl_f, nl_g)
    try:
        report = _solve_once(config, nl_f, nl_g, forcing)
    except MaxIterations as e:
        if e.report is not None:
            _write_solution(out, e.report)
            payload = {"command": "solve", **e.report.export(), "error": e.message}
        else:
            payload = {"command": "solve", "converged": False, "error": e.message}
        write_json(out / "report.json", payload)
        raise
    except LinearSolveBreakdown as e:
        write_json(out / "report.json", {"command": "solve", "converged": False, "error": e.message})
        raise

    _write_solution(out, report)
    payload: dict[str, Any] = {"command": "solve", **report.export()}
    payload["tail_residual"] = tail_residual(report.state, nl_f, nl_g, forcing).to_dict()
    if target is not None:
        u_star, v_star = target
        payload["target_error_l2"] = math.hypot(
            l2_norm(report.state.u - u_star), l2_norm(report.state.v - v_star)
        )
    write_json(out / "report.json", payload)
    _summary(
        f"converged in {report.iterations} iterations: dual_H={report.residuals.dual_H:.3e} "
        f"Phi={report.energy.total:.12g}"
    )
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def cmd_sweep(config: RunConfig, out: Path, seed: int | None) -> int:
    if not config.eps_list:
        raise UserError("sweep needs a non-empty 'eps_list'")
    nl_f, nl_g = config.nonlinearities()
    forcing, _ = config.build_forcing(nl_f, nl_g, default_eps=0.0)
    sweep = continuation_in_epsilon(config.eps_list, config.solve_config(), nl_f, nl_g, forcing)

    write_csv(out / "sweep.csv", SWEEP_COLUMNS, [row.as_tuple() for row in sweep.rows])
    write_json(out / "report.json", {"command": "sweep", **sweep.export()})
    _summary(
        f"sweep: {len(sweep.rows)} stage(s), "
        + ("completed" if sweep.completed else f"stopped at {sweep.failure}")
    )
    return EXIT_OK if sweep.completed else EXIT_NUMERICAL


def cmd_represent(config: RunConfig, out: Path, seed: int | None) -> int:
    source = config.represent_source()
    opts = config.represent
    assert opts is not None

    check = range_condition(source, nt_samples=opts.nt_samples)
    write_csv(out / "range_condition.csv", ("t", "V"), check.rows())
    profile = kernel_profile(kernel_part(source))
    write_csv(out / "profile_p.csv", ("k", "re_p", "im_p"), profile.rows())

    payload: dict[str, Any] = {
        "command": "represent",
        "sup_violation": check.sup_violation,
        "profile_K": profile.K,
        "profile_tail": profile.tail(),
    }
    if opts.shifts:
        continuity = continuity_report(profile, opts.shifts)
        write_csv(out / "modulus.csv", ("h", "sup_diff"), continuity.rows())
        payload["continuity"] = continuity.to_dict()
    if opts.input is not None:
        loaded = read_coefficients(opts.input)
        state = FieldPair(loaded.u, loaded.v, loaded.b, loaded.eps)
        nl_f, nl_g = config.nonlinearities()
        payload["linf"] = linf_report(state, nl_f, nl_g).to_dict()
        payload["lipschitz"] = lipschitz_report(state, nl_f, nl_g).to_dict()

    if opts.w1:
        try:
            solution = represent_w1(source, quad_nodes=opts.quad_nodes)
        except NotInRange as e:
            payload["range_ok"] = False
            payload["error"] = e.message
            write_json(out / "report.json", payload)
            raise
        write_csv(out / "w1.csv", ("t", "x", "w1"), solution.rows())
        payload["range_ok"] = True
        payload["kernel_leak"] = solution.kernel_leak
        payload["w1_l2"] = l2_norm(solution.w1)
    write_json(out / "report.json", payload)
    _summary(f"range condition sup={check.sup_violation:.6g}")
    return EXIT_OK


def cmd_spectrum(config: RunConfig, out: Path, seed: int | None) -> int:
    trunc = config.trunc
    gap = spectral_gap(config.b)
    rows = spectrum_table(config.b, trunc)
    kernel_count = sum(1 for row in rows if row.mode_class is ModeClass.KERNEL)
    write_csv(
        out / "spectrum.csv",
        ("j", "k", "lambda", "class"),
        [(r.j, r.k, r.eigenvalue, r.mode_class.value) for r in rows],
        comment=f"eta={gap.eta!r}, kappa={gap.kappa!r}, kernel_modes={kernel_count}",
    )
    write_json(
        out / "report.json",
        {
            "command": "spectrum",
            "b": config.b,
            "J": trunc.J,
            "K": trunc.K,
            "eta": gap.eta,
            "kappa": gap.kappa,
            "kernel_modes": kernel_count,
        },
    )
    _summary(f"eta={gap.eta:g} kappa={gap.kappa:g} kernel_modes={kernel_count}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig, Path, int | None], int]] = {
    "check": cmd_check,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "represent": cmd_represent,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgp", description="Time-periodic solutions of coupled Klein-Gordon equations"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    parent_parser = argparse.ArgumentParser(add_help=False)
    parent_parser.add_argument("--config", required=True, help="Path to the JSON run config")
    parent_parser.add_argument("--out", help="Output directory (default: config output_dir or .)")
    parent_parser.add_argument("--seed", type=int, help="Seed for hypothesis sampling")
    parent_parser.add_argument("--log-level", default="WARNING", help="Logging level")
    parent_parser.add_argument("--log-file", help="Also write logs to this file")

    subparsers.add_parser("check", help="Check hypotheses and the spectrum", parents=[parent_parser])
    subparsers.add_parser("solve", help="Solve the coupled system", parents=[parent_parser])
    subparsers.add_parser("sweep", help="Continuation in eps down to 0", parents=[parent_parser])
    subparsers.add_parser("represent", help="Range condition, w1 and kernel profile", parents=[parent_parser])
    subparsers.add_parser("spectrum", help="Mode table of L + b", parents=[parent_parser])
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level, log_file=args.log_file)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = load_run_config(args.config)
        seed = args.seed if args.seed is not None else config.seed
        if seed is not None and seed < 0:
            raise UserError(f"seed must be non-negative, got {seed}")
        out = Path(args.out or config.output_dir or ".")
        with trace(f"kgp {args.command}", metadata={"config": str(args.config)}):
            return COMMANDS[args.command](config, out, seed)
    except _CONFIG_ERRORS as e:
        logger.error(f"kgp {args.command}: {e.message}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except KGPException as e:
        logger.error(f"kgp {args.command}: {e.message}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
