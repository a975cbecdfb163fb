import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from rosenau_fem.config import AppConfig, load_config
from rosenau_fem.errors import (
    ConfigError,
    InvalidArgumentError,
    InvalidMeshError,
    MeshParseError,
    MissingExactSolutionError,
    RosenauError,
)
from rosenau_fem.logging_setup import setup_logging

load_dotenv()

logger = logging.getLogger("rosenau_fem")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# errors caused by the input rather than by the computation
INPUT_ERRORS = (ConfigError, MeshParseError, InvalidMeshError, MissingExactSolutionError, InvalidArgumentError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rosenau-fem",
        description="Mixed finite element solver for the Rosenau-Burgers equation (CLI)",
    )

    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="Path to a TOML run configuration.",
    )

    parser.add_argument(
        "--out-dir",
        type=str,
        default=None,
        help="Directory for output files not named in the config (default: ROSENAU_OUT_DIR or ./out).",
    )

    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug logging.",
    )

    parser.add_argument(
        "command",
        choices=["solve", "converge", "verify", "config"],
        help="Command to run: solve | converge | verify | config",
    )
    return parser


def _require_config(args: argparse.Namespace):
    from rosenau_fem.schema import load_run_config

    if not args.config:
        raise ConfigError(f"--config is required for {args.command}")
    return load_run_config(args.config)


def _entry(cfg):
    from rosenau_fem.problems import make_example

    p = cfg.problem
    if p is None:
        raise ConfigError("config needs a [problem] section")
    return make_example(p.name, beta=p.beta, alpha=p.alpha, nonlinear=p.nonlinear, time_profile=p.time_profile)


def _mesh(section, entry, n: Optional[int] = None):
    from rosenau_fem.mesh import generate_interval_mesh, generate_rect_mesh, read_mesh

    if section is None:
        raise ConfigError("config needs a [mesh] section")
    bounds = tuple(section.bounds) if section.bounds is not None else entry.domain.bounds
    if section.kind == "file":
        if n is not None:
            raise ConfigError("a study cannot refine a mesh read from a file; use kind = 'interval' or 'rect'")
        mesh = read_mesh(section.path)
    elif section.kind == "interval":
        mesh = generate_interval_mesh(n or section.n, *bounds)
    else:
        mesh = generate_rect_mesh(n or section.nx or section.n, n or section.ny or section.n, bounds)
    if mesh.dim != entry.dim:
        raise ConfigError(f"{entry.name} is a {entry.dim}D problem but the mesh is {mesh.dim}D")
    return mesh


def _out_path(configured: Optional[str], out_dir: Path, default_name: str) -> Path:
    return Path(configured) if configured else out_dir / default_name


def cmd_solve(cfg, out_dir: Path) -> int:
    from rosenau_fem.output import write_energy_csv, write_vtk
    from rosenau_fem.stepper import run

    entry = _entry(cfg)
    mesh = _mesh(cfg.mesh, entry)
    solver = cfg.solver_config()
    dump = Path(cfg.output.matrix_dump) if cfg.output.matrix_dump else None

    result = run(entry.problem, mesh, solver, keep_history=False, jacobian_dump=dump)

    field_path = write_vtk(
        _out_path(cfg.output.field, out_dir, f"{entry.name}.vtk"), mesh, result.u(), result.p(),
        title=f"{entry.name} t={result.final.t:g}",
    )
    energy_path = write_energy_csv(_out_path(cfg.output.energy, out_dir, f"{entry.name}_energy.csv"), result.energy, solver.k)

    iters = result.newton_iterations
    fallbacks = sum(1 for r in result.reports if r.method != "newton")
    print(f"Problem: {entry.name} | mesh: {mesh.n_cells} cells, h={mesh.h:.4g} | P{solver.u_degree} x P{solver.p_degree}")
    print(f"Steps: {solver.n_steps} (k={solver.k:g}, T={solver.T:g})")
    print(f"Newton iterations: total={sum(iters)} max/step={max(iters)} mean/step={sum(iters) / len(iters):.2f}")
    if fallbacks:
        print(f"Picard fallbacks: {fallbacks}")
    print(f"Wall time: {result.wall_seconds:.2f}s")
    print(f"Field: {field_path}")
    print(f"Energy: {energy_path}")
    return EXIT_OK


def cmd_converge(cfg, out_dir: Path, app: AppConfig) -> int:
    from rosenau_fem.analysis import StudyLevel, convergence_study
    from rosenau_fem.output import render_markdown, write_table_csv, write_table_markdown

    if cfg.study is None:
        raise ConfigError("config needs a [study] section for converge")
    entry = _entry(cfg)
    entry.require_exact()
    levels = [StudyLevel(level.n, level.k) for level in cfg.study.levels]
    meshes = [_mesh(cfg.mesh, entry, n=level.n) for level in levels] if len(levels) >= 2 else None

    table = convergence_study(
        entry,
        levels,
        cfg.solver_config(k=levels[0].k if levels else None),
        axis=cfg.study.axis,
        meshes=meshes,
        parallel=cfg.study.parallel,
        max_workers=app.threads,
    )

    record_cpu = cfg.output.record_cpu_time
    csv_path = write_table_csv(_out_path(cfg.output.table, out_dir, f"{entry.name}_{cfg.study.axis}.csv"), table, record_cpu)
    md_path = write_table_markdown(csv_path.with_suffix(".md"), table, record_cpu)

    print(render_markdown(table, record_cpu))
    print(f"Table: {csv_path}")
    print(f"Markdown: {md_path}")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    from rosenau_fem import verify
    from rosenau_fem.schema import VerifySection

    settings = cfg.verify if cfg is not None and cfg.verify is not None else VerifySection()
    return verify.main(settings)


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    config = load_config()

    log_level = "DEBUG" if args.debug else config.log_level
    setup_logging(log_level, None if args.debug else config.solver_log_level)

    logger.info("Starting rosenau-fem %s", args.command)
    logger.debug("Args: %s", vars(args))

    out_dir = Path(args.out_dir or config.out_dir)

    try:
        """
        python main.py solve --config configs/example2_case1.toml --out-dir out
        """
        if args.command == "solve":
            return cmd_solve(_require_config(args), out_dir)

        """
        python main.py converge --config configs/example1.toml
        """
        if args.command == "converge":
            return cmd_converge(_require_config(args), out_dir, config)

        """
        python main.py verify
        python main.py verify --config configs/verify.toml
        """
        if args.command == "verify":
            from rosenau_fem.schema import load_run_config

            return cmd_verify(load_run_config(args.config) if args.config else None)

        """
        python main.py config --config configs/example1.toml
        """
        if args.command == "config":
            print("AppConfig:")
            print(f"  log_level = {config.log_level}")
            print(f"  threads   = {config.threads}")
            print(f"  out_dir   = {config.out_dir}")
            print(f"  solver_log_level = {config.solver_log_level or config.log_level}")
            if args.config:
                from rosenau_fem.schema import dumps_run_config

                print("\nRunConfig:")
                print(dumps_run_config(_require_config(args)))
            return EXIT_OK
    except INPUT_ERRORS as exc:
        logger.debug("Input error", exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RosenauError as exc:
        logger.debug("Run failed", exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    return EXIT_USAGE
