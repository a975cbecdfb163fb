"""Run configuration files (TOML in, JSON snapshots out) and their validation."""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from rosenau_fem.errors import ConfigError
from rosenau_fem.stepper import SolverConfig

ProblemName = Literal["example1", "example2_case1", "example2_case2", "example3", "example4"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(_Section):
    name: ProblemName
    beta: Annotated[float, Field(gt=0.0)] = 1.0
    alpha: Annotated[float, Field(gt=0.0)] = 1.0
    nonlinear: bool = True
    time_profile: Literal["exponential", "linear"] = "exponential"


class MeshSection(_Section):
    kind: Literal["interval", "rect", "file"]
    n: Optional[Annotated[int, Field(ge=1)]] = None
    nx: Optional[Annotated[int, Field(ge=1)]] = None
    ny: Optional[Annotated[int, Field(ge=1)]] = None
    bounds: Optional[List[float]] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def _complete(self) -> "MeshSection":
        if self.kind == "file" and not self.path:
            raise ValueError("mesh.kind = 'file' needs mesh.path")
        if self.kind == "interval" and self.n is None:
            raise ValueError("mesh.kind = 'interval' needs mesh.n")
        if self.kind == "rect" and self.n is None and (self.nx is None or self.ny is None):
            raise ValueError("mesh.kind = 'rect' needs mesh.n or both mesh.nx and mesh.ny")
        expected = {"interval": 2, "rect": 4}.get(self.kind)
        if self.bounds is not None and len(self.bounds) != expected:
            raise ValueError(f"mesh.bounds for kind {self.kind!r} needs {expected} numbers")
        return self


class DiscretizationSection(_Section):
    u_degree: Literal[1, 2] = 2
    p_degree: Literal[1, 2] = 1
    k: Annotated[float, Field(gt=0.0)]
    T: Annotated[float, Field(gt=0.0)] = 1.0


class SolverSection(_Section):
    newton_tol: Annotated[float, Field(gt=0.0)] = 1e-11
    newton_max_iter: Annotated[int, Field(ge=1)] = 25
    picard_max_iter: Annotated[int, Field(ge=0)] = 50
    initializer: Literal["interpolate", "ritz"] = "interpolate"
    p_initializer: Literal["discrete", "interpolate"] = "discrete"
    jacobian: Literal["newton", "chord"] = "newton"


class OutputSection(_Section):
    table: Optional[str] = None
    field: Optional[str] = None
    energy: Optional[str] = None
    matrix_dump: Optional[str] = None
    record_cpu_time: bool = True


class StudyLevelSection(_Section):
    n: Annotated[int, Field(ge=1)]
    k: Annotated[float, Field(gt=0.0)]


class StudySection(_Section):
    axis: Literal["h", "k", "hk"] = "h"
    levels: List[StudyLevelSection] = Field(default_factory=list)
    parallel: bool = False


class VerifySection(_Section):
    problems: List[ProblemName] = Field(default_factory=lambda: ["example1", "example3", "example4"])
    sample_count: Annotated[int, Field(ge=1)] = 200
    forcing_tol: Annotated[float, Field(gt=0.0)] = 1e-6
    # added to every manufactured forcing; nonzero values must make the forcing checks fail
    forcing_offset: float = 0.0
    jacobian_tol: Annotated[float, Field(gt=0.0)] = 1e-6
    energy_n: Annotated[int, Field(ge=1)] = 8
    energy_k: Annotated[float, Field(gt=0.0)] = 0.01
    energy_steps: Annotated[int, Field(ge=1)] = 100
    energy_rtol: Annotated[float, Field(gt=0.0)] = 1e-10


class RunConfig(_Section):
    problem: Optional[ProblemSection] = None
    mesh: Optional[MeshSection] = None
    discretization: Optional[DiscretizationSection] = None
    solver: SolverSection = Field(default_factory=SolverSection)
    output: OutputSection = Field(default_factory=OutputSection)
    study: Optional[StudySection] = None
    verify: Optional[VerifySection] = None

    def solver_config(self, k: Optional[float] = None) -> SolverConfig:
        if self.discretization is None:
            raise ConfigError("config needs a [discretization] section")
        d = self.discretization
        try:
            return SolverConfig(
                k=k if k is not None else d.k,
                T=d.T,
                u_degree=d.u_degree,
                p_degree=d.p_degree,
                **self.solver.model_dump(),
            )
        except ValidationError as exc:
            raise ConfigError(f"invalid solver settings: {_format_errors(exc)}") from None

    def resolve_paths(self, base: Path) -> "RunConfig":
        """Copy with relative file paths anchored at `base`."""

        def anchor(p: Optional[str]) -> Optional[str]:
            return None if p is None else str((base / p).resolve()) if not Path(p).is_absolute() else p

        out = self.output.model_copy(
            update={name: anchor(getattr(self.output, name)) for name in ("table", "field", "energy", "matrix_dump")}
        )
        mesh = self.mesh.model_copy(update={"path": anchor(self.mesh.path)}) if self.mesh is not None else None
        return self.model_copy(update={"output": out, "mesh": mesh})


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_errors(exc)}") from None


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_run_config(data).resolve_paths(path.resolve().parent)


def dumps_run_config(config: RunConfig) -> str:
    return config.model_dump_json(indent=2, exclude_none=True)


def dump_run_config(config: RunConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_run_config(config), encoding="utf-8")
    return path
