import json
from pathlib import Path

import pytest

from rosenau_fem.errors import ConfigError
from rosenau_fem.schema import (
    RunConfig,
    VerifySection,
    dump_run_config,
    dumps_run_config,
    load_run_config,
    parse_run_config,
)

from conftest import CONFIG_DIR

MINIMAL = {
    "problem": {"name": "example1"},
    "mesh": {"kind": "interval", "n": 8},
    "discretization": {"k": 0.1, "T": 1.0},
}


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_run_config(path)
    assert isinstance(config, RunConfig)
    if config.discretization is not None:
        assert config.solver_config().n_steps >= 1


def test_defaults():
    config = parse_run_config(MINIMAL)
    assert config.discretization.u_degree == 2 and config.discretization.p_degree == 1
    assert config.solver.newton_tol == 1e-11
    assert config.output.record_cpu_time is True
    assert config.study is None


def test_unknown_key_is_rejected():
    data = {**MINIMAL, "solver": {"newton_tolerance": 1e-8}}
    with pytest.raises(ConfigError, match="solver.newton_tolerance"):
        parse_run_config(data)


def test_unknown_problem_is_rejected():
    with pytest.raises(ConfigError):
        parse_run_config({**MINIMAL, "problem": {"name": "example7"}})


def test_time_profile_option():
    assert parse_run_config(MINIMAL).problem.time_profile == "exponential"
    config = parse_run_config({**MINIMAL, "problem": {"name": "example4", "time_profile": "linear"}})
    assert config.problem.time_profile == "linear"
    with pytest.raises(ConfigError):
        parse_run_config({**MINIMAL, "problem": {"name": "example4", "time_profile": "cubic"}})


@pytest.mark.parametrize(
    "mesh",
    [{"kind": "interval"}, {"kind": "file"}, {"kind": "rect", "nx": 4}, {"kind": "interval", "n": 4, "bounds": [0, 1, 2]}],
)
def test_incomplete_mesh_sections(mesh):
    with pytest.raises(ConfigError):
        parse_run_config({**MINIMAL, "mesh": mesh})


def test_step_count_must_be_whole():
    config = parse_run_config({**MINIMAL, "discretization": {"k": 0.3, "T": 1.0}})
    with pytest.raises(ConfigError, match="integer multiple"):
        config.solver_config()


def test_solver_config_override_k():
    config = parse_run_config(MINIMAL)
    assert config.solver_config(k=0.05).n_steps == 20


def test_missing_discretization():
    with pytest.raises(ConfigError):
        parse_run_config({"problem": {"name": "example1"}}).solver_config()


def test_round_trip_through_json_snapshot(tmp_path):
    data = {
        **MINIMAL,
        "solver": {"jacobian": "chord", "initializer": "ritz"},
        "output": {"table": "t.csv", "record_cpu_time": False},
        "study": {"axis": "hk", "levels": [{"n": 4, "k": 0.25}, {"n": 8, "k": 0.125}], "parallel": True},
        "verify": {"problems": ["example3"], "forcing_offset": 0.5},
    }
    config = parse_run_config(data)
    path = dump_run_config(config, tmp_path / "cfg" / "run.json")
    assert parse_run_config(json.loads(path.read_text())) == config
    assert json.loads(dumps_run_config(config))["study"]["axis"] == "hk"


def test_relative_paths_are_anchored_at_the_config(tmp_path):
    (tmp_path / "runs").mkdir()
    path = tmp_path / "runs" / "run.toml"
    path.write_text(
        '[problem]\nname = "example1"\n'
        '[mesh]\nkind = "file"\npath = "../meshes/a.mesh"\n'
        '[discretization]\nk = 0.1\n'
        '[output]\nfield = "out/u.vtk"\nenergy = "/abs/e.csv"\n',
        encoding="utf-8",
    )
    config = load_run_config(path)
    assert Path(config.mesh.path) == (tmp_path / "meshes" / "a.mesh").resolve()
    assert Path(config.output.field) == (tmp_path / "runs" / "out" / "u.vtk").resolve()
    assert config.output.energy == "/abs/e.csv"
    assert config.output.table is None


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[problem\nname = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_run_config(bad)


def test_verify_section_defaults():
    settings = VerifySection()
    assert settings.problems == ["example1", "example3", "example4"]
    assert settings.forcing_tol == 1e-6
    assert settings.forcing_offset == 0.0
