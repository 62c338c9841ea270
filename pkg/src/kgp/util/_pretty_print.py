from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..report import SolveReport


def _indent(text: str, indent_level: int) -> str:
    indent_string = "  " * indent_level
    return "\n".join(f"{indent_string}{line}" for line in text.splitlines())


def _key_values(values: dict[str, float]) -> str:
    return "\n".join(f"{key}: {value:.6g}" for key, value in values.items())


def pretty_print_report(report: "SolveReport") -> str:
    trunc = report.state.trunc
    output = "SolveReport:"
    output += f"\n- Method: {report.method} (J={trunc.J}, K={trunc.K})"
    output += f"\n- b={report.state.b:g}, eps={report.state.eps:g}"
    status = "converged" if report.converged else "not converged"
    output += f"\n- {status} after {report.iterations} iteration(s), tol={report.tol:g}"
    output += (
        f"\n- Residual: dual_H={report.residuals.dual_H:.3e}, l2={report.residuals.l2:.3e}"
    )
    output += f"\n- Energy: {report.energy.total:.12g}"
    output += f"\n- Decomposition:\n{_indent(_key_values(report.decomposition.to_dict()), 2)}"
    output += f"\n- Nontrivial: {report.nontrivial}"
    if report.stage_increment is not None:
        output += f"\n- Stage increment: {report.stage_increment:.3e}"
    if report.eps_warning:
        output += "\n- Warning: |eps| is above the smallness threshold"
    output += f"\n- {len(report.warnings)} warning(s)"
    output += "\n(See `SolveReport` for more details)"
    return output
