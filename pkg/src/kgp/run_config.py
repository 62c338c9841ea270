"""The JSON configuration read by the `kgp` command line.

A minimal solve config::

    {
      "b": 1.0,
      "eps": 0.05,
      "truncation": {"J": 8, "K": 8},
      "f": {"kind": "power_law", "p": 3},
      "g": {"kind": "power_law", "p": 3},
      "forcing": {"kind": "manufactured",
                  "u": [{"j": 2, "k": 1, "amplitude": 0.3}],
                  "v": [{"j": 1, "k": 0, "amplitude": 0.2}]}
    }

Validation happens before any computation; field errors name the offending JSON location.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

from .continuation import RefinementSchedule
from .exceptions import UserError
from .functional import Forcing, manufactured_forcing
from .io import read_coefficients
from .nonlinearity import (
    Nonlinearity,
    NonlinearityDescriptor,
    PowerLawDescriptor,
    build,
)
from .solver import InitialGuess, SolveConfig
from .spectral import SpectralField, TrigTerm, Truncation, spectral_gap
from .util._json import validate_json


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TruncationModel(_Model):
    J: int = Field(ge=1)
    K: int = Field(ge=0)

    def build(self) -> Truncation:
        return Truncation(self.J, self.K)


class TermModel(_Model):
    """amplitude * sin(j x) * cos(k t), or sin(k t) with phase "sin"."""

    j: int = Field(ge=1)
    k: int = 0
    amplitude: float
    phase: Literal["cos", "sin"] = "cos"

    def build(self) -> TrigTerm:
        return TrigTerm(self.j, self.k, self.amplitude, self.phase)


def _field_from_terms(trunc: Truncation, terms: list[TermModel]) -> SpectralField:
    return SpectralField.from_terms(trunc, [t.build() for t in terms])


class NoForcingModel(_Model):
    kind: Literal["none"]


class ManufacturedForcingModel(_Model):
    """Forcing for which the target (u*, v*) is an exact Galerkin solution."""

    kind: Literal["manufactured"]
    u: list[TermModel] = Field(default_factory=list)
    v: list[TermModel] = Field(default_factory=list)
    eps: float | None = None
    """Coupling at which the target is exact. Defaults to `eps`, or 0 for a sweep, which keeps
    the forcing independent of the swept coupling."""


class FileForcingModel(_Model):
    """h1 and h2 read from the u and v columns of a coefficient file."""

    kind: Literal["file"]
    path: str


ForcingModel = Annotated[
    Union[NoForcingModel, ManufacturedForcingModel, FileForcingModel], Field(discriminator="kind")
]


class ZeroGuessModel(_Model):
    kind: Literal["zero"]


class SingleModeGuessModel(_Model):
    kind: Literal["single_mode"]
    j: int = Field(ge=1)
    k: int = 0
    amplitude: float = 1.0


class FileGuessModel(_Model):
    kind: Literal["from_file"]
    path: str


GuessModel = Annotated[
    Union[ZeroGuessModel, SingleModeGuessModel, FileGuessModel], Field(discriminator="kind")
]


class SolverOptions(_Model):
    method: Literal["newton", "fixed_point"] = "newton"
    tol_residual: float = Field(default=1e-9, gt=0)
    max_newton: int = Field(default=50, ge=0)
    linesearch: Literal["none", "backtracking"] = "backtracking"
    jacobian: Literal["exact", "finite_difference"] = "exact"
    krylov_tol: float = Field(default=1e-12, gt=0, lt=1)
    krylov_maxit: int | None = Field(default=None, ge=1)
    initial_guess: GuessModel = Field(default_factory=lambda: ZeroGuessModel(kind="zero"))
    refine: list[TruncationModel] | None = None
    """Solve on these truncations first, warm-starting each from the previous one; the main
    truncation is appended as the last stage."""
    search: int | None = Field(default=None, ge=0)
    """Run a nontrivial multistart search for up to this many states instead of one solve."""


class RepresentOptions(_Model):
    input: str | None = None
    """Coefficient file whose u column is the source h."""
    terms: list[TermModel] | None = None
    """Analytic source on the main truncation, used when `input` is absent."""
    quad_nodes: int = Field(default=64, ge=1)
    nt_samples: int = Field(default=64, ge=1)
    w1: bool = True
    """Represent the range part; requires the range condition."""
    shifts: list[float] | None = None
    """Shifts h in (0, 1/4) for the modulus of continuity of the kernel profile."""

    @field_validator("shifts")
    @classmethod
    def _shifts_in_range(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and any(not 0.0 < h < 0.25 for h in value):
            raise ValueError("every shift must lie in (0, 1/4)")
        return value

    @model_validator(mode="after")
    def _one_source(self) -> RepresentOptions:
        if self.input is None and self.terms is None:
            raise ValueError("set either 'input' or 'terms'")
        return self


def _default_descriptor() -> PowerLawDescriptor:
    return PowerLawDescriptor(kind="power_law", p=3.0)


class RunConfig(_Model):
    b: float = Field(gt=0)
    eps: float = 0.0
    eps_list: list[float] | None = None
    truncation: TruncationModel
    f: NonlinearityDescriptor = Field(default_factory=_default_descriptor)
    g: NonlinearityDescriptor = Field(default_factory=_default_descriptor)
    forcing: ForcingModel = Field(default_factory=lambda: NoForcingModel(kind="none"))
    solver: SolverOptions = Field(default_factory=SolverOptions)
    represent: RepresentOptions | None = None
    output_dir: str | None = None
    seed: int | None = Field(default=None, ge=0)

    @field_validator("b", "eps")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @property
    def trunc(self) -> Truncation:
        return self.truncation.build()

    def validate_domain(self) -> None:
        """Checks that need the numerics: -b outside the spectrum of L."""
        spectral_gap(self.b)

    def nonlinearities(self) -> tuple[Nonlinearity, Nonlinearity]:
        return build(self.f), build(self.g)

    def initial_guess(self) -> InitialGuess:
        guess = self.solver.initial_guess
        if isinstance(guess, SingleModeGuessModel):
            return InitialGuess.single_mode(guess.j, guess.k, guess.amplitude)
        if isinstance(guess, FileGuessModel):
            return InitialGuess.from_file(guess.path)
        return InitialGuess.zero()

    def solve_config(self, eps: float | None = None) -> SolveConfig:
        opts = self.solver
        return SolveConfig(
            b=self.b,
            eps=self.eps if eps is None else eps,
            trunc=self.trunc,
            tol_residual=opts.tol_residual,
            max_newton=opts.max_newton,
            linesearch=opts.linesearch,
            initial_guess=self.initial_guess(),
            jacobian=opts.jacobian,
            krylov_tol=opts.krylov_tol,
            krylov_maxit=opts.krylov_maxit,
        )

    def schedule(self) -> RefinementSchedule | None:
        if not self.solver.refine:
            return None
        stages = [t.build() for t in self.solver.refine]
        if stages[-1] != self.trunc:
            stages.append(self.trunc)
        return RefinementSchedule(tuple(stages))

    def build_forcing(
        self, nl_f: Nonlinearity, nl_g: Nonlinearity, default_eps: float | None = None
    ) -> tuple[Forcing, tuple[SpectralField, SpectralField] | None]:
        """The forcing and, for a manufactured one, its target state."""
        trunc = self.trunc
        model = self.forcing
        if isinstance(model, ManufacturedForcingModel):
            u_star = _field_from_terms(trunc, model.u)
            v_star = _field_from_terms(trunc, model.v)
            eps = model.eps if model.eps is not None else (self.eps if default_eps is None else default_eps)
            return manufactured_forcing(u_star, v_star, self.b, eps, nl_f, nl_g), (u_star, v_star)
        if isinstance(model, FileForcingModel):
            loaded = read_coefficients(model.path)
            return Forcing(loaded.u.resize(trunc), loaded.v.resize(trunc)), None
        return Forcing.none(), None

    def represent_source(self) -> SpectralField:
        if self.represent is None:
            raise UserError("config has no 'represent' section")
        if self.represent.input is not None:
            return read_coefficients(self.represent.input).u
        return _field_from_terms(self.trunc, self.represent.terms or [])


_run_config_adapter: TypeAdapter[RunConfig] = TypeAdapter(RunConfig)


def parse_run_config(text: str | bytes, source: str = "<config>") -> RunConfig:
    config = validate_json(text, _run_config_adapter, source)
    config.validate_domain()
    return config


def load_run_config(path: str | Path) -> RunConfig:
    """Read and validate a config file.

    Raises:
        UserError: if the file is unreadable or fails validation.
        SpectrumCollision: if -b is an eigenvalue of L.
    """
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as e:
        raise UserError(f"cannot read config {path}: {e}") from e
    return parse_run_config(text, str(path))
