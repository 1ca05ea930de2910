import math

import pytest

from emikit.config import RunConfig, load_config, resolve_preset
from emikit.core import ConfigurationError

GOOD = """
preset = "exp2"

[schedule]
rows = [[0.4, 10], [0.28, 20]]
t0 = 0.25
t_end = 7.0

[output]
dir = "out"
formats = ["csv"]

[solver]
exp3_boundary = "exact"

[export]
spacing = 0.0625
times = [0.0, 1.0]
"""

CUSTOM_FAMILY = """
[schedule]
t0 = 0.0
t_end = 2.0
rows = [[0.2, 4], [0.1, 8]]

[family]
kind = "single_cell"
v0 = 7.0

[family.params]
sigma_i = 2.0
sigma_e = 2.0
v_rest = 0.0

[family.geometry]
r_core = 3.0
r_membrane = 5.0
r_outer = 6.0

[family.coef_a]
kind = "constant"
value = 0.0

[family.coef_a2]
kind = "constant"
value = 0.0
"""


def test_load_full_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(GOOD)
    cfg = load_config(path)
    assert cfg.preset == "exp2"
    assert cfg.schedule_rows == [(0.4, 10), (0.28, 20)]
    assert cfg.t0 == 0.25 and cfg.t_end == 7.0
    assert cfg.output_dir == "out" and cfg.formats == ("csv",)
    assert cfg.exp3_boundary == "exact"
    assert cfg.export_spacing == 0.0625
    preset = resolve_preset(cfg)
    assert preset.name == "exp2"


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(GOOD + "\n[extra]\nfoo = 1\n")
    with pytest.raises(ConfigurationError, match="unknown configuration key"):
        load_config(path)
    path.write_text("preset = 'exp1'\n[schedule]\nstep = 3\n")
    with pytest.raises(ConfigurationError, match="schedule.step"):
        load_config(path)


def test_custom_single_cell_family(tmp_path):
    path = tmp_path / "fam.toml"
    path.write_text(CUSTOM_FAMILY)
    cfg = load_config(path)
    preset = resolve_preset(cfg)
    assert preset.name == "custom-single_cell"
    sol = preset.solution
    # pure RC decay with zero coefficients
    assert sol.v(1, 1.0) == pytest.approx(7.0 * math.exp(-1.0), abs=1e-12)
    assert sol.u_e_profile(5.5, 2.0) == 0.0
    assert preset.schedule == ((0.2, 4), (0.1, 8))


def test_custom_family_runs_through_harness(tmp_path):
    path = tmp_path / "fam.toml"
    path.write_text(CUSTOM_FAMILY)
    preset = resolve_preset(load_config(path))
    from emikit.verify import run_case
    result = run_case(preset, 0.2, 4)
    assert set(result.errors) == {"u_e", "u_i1", "v1"}
    assert result.errors["u_e"] < 1e-10          # field is identically zero
    assert result.errors["v1"] < 0.05


def test_flags_override_config(tmp_path, capsys):
    path = tmp_path / "run.toml"
    path.write_text(GOOD)
    from emikit.cli import main
    code = main(["--config", str(path), "run", "--preset", "exp1",
                 "--cl", "0.4", "--nf", "7"])
    out, _ = capsys.readouterr()
    assert code == 0
    assert "preset=exp1" in out      # flag preset wins over the file's exp2


def test_resolve_needs_something():
    with pytest.raises(ConfigurationError):
        resolve_preset(RunConfig())
    with pytest.raises(ConfigurationError):
        resolve_preset(RunConfig(), "exp9")


def test_bad_signal_kind(tmp_path):
    path = tmp_path / "fam.toml"
    path.write_text(CUSTOM_FAMILY.replace('kind = "constant"', 'kind = "sawtooth"', 1))
    with pytest.raises(ConfigurationError, match="signal kind"):
        resolve_preset(load_config(path))
