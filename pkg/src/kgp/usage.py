from dataclasses import dataclass


@dataclass
class SolveUsage:
    residual_evaluations: int = 0
    """Full residual evaluations, line-search trials included."""

    jacobian_products: int = 0
    """Jacobian-vector products, exact or finite-difference."""

    krylov_iterations: int = 0
    """Inner GMRES iterations, summed over all Newton steps."""

    def add(self, other: "SolveUsage") -> None:
        self.residual_evaluations += other.residual_evaluations
        self.jacobian_products += other.jacobian_products
        self.krylov_iterations += other.krylov_iterations
