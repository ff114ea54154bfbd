import math

import pytest
import yaml

from wettix.config import load_config, load_config_dict
from wettix.dumps import read_csv, read_field, read_polylines, read_slope
from wettix.errors import ConfigError
from wettix.harness import (
    audit_conservation,
    build_stencils,
    converge,
    equilibrium,
    initial_state,
    kernel_dump,
    kernel_metadata,
    mobility_insensitivity_study,
    relative_differences,
    run,
)
from wettix.vls_stepper import StepReport


@pytest.fixture
def ladder_raw(small_raw):
    small_raw["time"]["levels"] = [[1, 16], [2, 32], [4, 64]]
    small_raw["shapes"]["droplets"] = [{"kind": "rectangle", "center": [0.5, 0.6], "width": 0.3, "height": 0.2}]
    small_raw["reference"] = {"kind": "finest-self"}
    return small_raw


def test_initial_state(small_raw):
    state = initial_state(load_config_dict(small_raw))
    assert state.target_area == pytest.approx(0.03, abs=2e-3)
    state.check()
    small_raw["shapes"]["area"] = 0.05
    assert initial_state(load_config_dict(small_raw)).target_area == 0.05


def test_kernel_metadata(small_raw):
    cfg = load_config_dict(small_raw)
    meta = kernel_metadata(cfg, build_stencils(cfg))
    assert meta["kernel_mode"] == "two-circle"
    assert meta["contact_angle"] == pytest.approx(math.pi / 2)
    assert meta["triangle_ok"]
    assert set(meta["interfaces"]) == {"VL", "LS", "VS"}
    assert meta["interfaces"]["VL"]["min_weight"] == pytest.approx(1 / 21)


def test_run_writes_the_run_directory(small_raw, tmp_path):
    small_raw["time"]["snapshots"] = [0.001]
    cfg = load_config_dict(small_raw)
    res = run(cfg, tmp_path / "run", progress=False)
    d = res.run_dir
    assert d == tmp_path / "run"
    assert yaml.safe_load((d / "config.snapshot").read_text())["grid"]["n"] == 32
    assert "interfaces" in yaml.safe_load((d / "metadata.yaml").read_text())
    steps = read_csv(d / "steps.csv")
    assert [int(r["step"]) for r in steps] == [1, 2, 3, 4]
    assert len(read_csv(d / "energy.csv")) == 4
    components = read_csv(d / "components.csv")
    assert len(components) == 5
    assert all(r["components"] == "1" for r in components)
    for tag in ("T0.001", "T0.002"):
        assert read_field(d / f"phiL_{tag}.fld").grid.n == 32
        assert (d / f"phiV_{tag}.fld").is_file()
        (contour,) = read_polylines(d / f"contour_{tag}.xy")
        assert contour.closed
    assert audit_conservation(res.reports, res.state.target_area, 2.0 / cfg.n**2) == []


def test_audit_conservation():
    reports = [StepReport(1, 0.0, 0.100, 3, 0.01), StepReport(2, 0.0, 0.102, 3, 0.01)]
    assert audit_conservation(reports, 0.1, 1e-3) == [2]


def test_relative_differences():
    assert relative_differences([1.0, 0.0, 2.0], [0.5, 0.0, 2.0]) == [0.5, 0.0, 0.0]


def test_kernel_dump(tmp_path):
    cfg = load_config("four_fold_kernel")
    d = kernel_dump(cfg, tmp_path)
    for iface in ("VL", "LS", "VS"):
        rows = read_csv(d / f"kernel_{iface}.csv")
        assert list(rows[0]) == ["theta", "w1", "w2"]
        assert len(rows) == 1024
    assert (d / "metadata.yaml").is_file()


def test_converge_needs_three_levels_and_a_reference(ladder_raw, tmp_path):
    two = dict(ladder_raw, time=dict(ladder_raw["time"], levels=[[1, 16], [2, 32]]))
    with pytest.raises(ConfigError, match="at least 3"):
        converge(load_config_dict(two), tmp_path, progress=False)
    ladder_raw["reference"] = {"kind": "none"}
    with pytest.raises(ConfigError, match="needs a reference"):
        converge(load_config_dict(ladder_raw), tmp_path, progress=False)


def test_converge_against_the_finest_level(ladder_raw, tmp_path):
    res = converge(load_config_dict(ladder_raw), tmp_path, progress=False)
    assert [r.steps for r in res.rows] == [1, 2]
    assert all(r.l1 >= 0 for r in res.rows)
    assert [(lv.steps, lv.inv_dx) for lv in res.levels] == [(1, 16), (2, 32), (4, 64)]
    assert (tmp_path / "level_4_64" / "steps.csv").is_file()
    assert len(read_csv(tmp_path / "errors.csv")) == 2
    assert read_slope(tmp_path / "errors.csv") == pytest.approx(res.slope)


def test_identical_ladders_show_no_difference(ladder_raw, tmp_path):
    cfg = load_config_dict(ladder_raw)
    res = mobility_insensitivity_study(cfg, cfg, tmp_path, progress=False)
    assert res.relative_differences == [0.0, 0.0]
    assert len(read_csv(tmp_path / "insensitivity.csv")) == 2


def test_insensitivity_configs_must_differ_only_in_vs_mobility(ladder_raw, tmp_path):
    first = load_config_dict(ladder_raw)
    other = dict(ladder_raw, tensions={"LS": 1.2})
    with pytest.raises(ConfigError, match="mobilities.VS"):
        mobility_insensitivity_study(first, load_config_dict(other), tmp_path, progress=False)


def test_equilibrium_against_winterbottom(small_raw, tmp_path):
    small_raw["reference"] = {"kind": "winterbottom"}
    res = equilibrium(load_config_dict(small_raw), tmp_path, progress=False)
    assert 0 < res.l1 < 0.06
    assert res.linf > 0
    (reference,) = read_polylines(tmp_path / "reference.xy")
    assert reference.closed
    assert read_csv(tmp_path / "equilibrium.csv")[0]["l1"] == repr(res.l1)
