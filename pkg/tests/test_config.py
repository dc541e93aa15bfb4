"""Config grammar: resolution to defaults, rendering, error catalog."""

import warnings

import pytest

from haptoviro.config import FitSpec, RunConfig, parse_config, render_config
from haptoviro.errors import ConfigError
from haptoviro.runs import CosineProfile

CANONICAL_INI = "configs/canonical.ini"


def write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def test_empty_document_resolves_to_defaults(tmp_path):
    empty = parse_config(write(tmp_path, ""))
    assert empty == parse_config(CANONICAL_INI)
    bare = RunConfig()
    assert (empty.parameters, empty.grid, empty.solver) \
        == (bare.parameters, bare.grid, bare.solver)
    assert empty.solver.t_end == 60.0
    assert empty.grid.nx == 128
    assert empty.profile_name == "canonical"
    assert empty.snapshot_times == (0.0, 10.0, 60.0)
    assert empty.output_dir == "out"


def test_render_parse_identity(tmp_path):
    docs = [
        "",
        "[solver]\nscheme = direct-upwind\ndt_override = 0.00048828125\n"
        "t_end = 3.5\n",
        "[parameters]\nbeta = 0.25\ndelta_z = 0.3\n[grid]\nnx = 64\nny = 32\n"
        "Ly = 0.5\n",
        "[initial]\nprofile = homogeneous(0.4, 0.9, 0.1, 0.3)\n",
        "[initial]\nprofile = cosine\nu_const = 1.0\nu_amp = 0.25\nu_kx = 2\n"
        "v_const = 0.5\n",
        "[fit]\nt_lo = 2.0\nt_hi = 4.0\n[solver]\nt_end = 4.0\n",
        "[output]\ndirectory = elsewhere\nsnapshot_times = 0, 1.5, end\n",
    ]
    for text in docs:
        cfg = parse_config(write(tmp_path, text))
        again = parse_config(write(tmp_path, render_config(cfg)))
        assert again == cfg, text


def test_scheme_alias_and_dt_none(tmp_path):
    cfg = parse_config(write(
        tmp_path, "[solver]\nscheme = direct\ndt_override = none\n"))
    assert cfg.solver.scheme == "direct-upwind"
    assert cfg.solver.dt_override is None


def test_cosine_initial_resolves_profiles(tmp_path):
    cfg = parse_config(write(
        tmp_path,
        "[initial]\nprofile = cosine\nu_const = 1.0\nu_amp = -0.5\n"
        "w_const = 0.2\nw_ky = 1\nw_amp = 0.1\n"))
    assert cfg.profile_name == "cosine"
    spec = cfg.initial_spec()
    assert spec.u == CosineProfile(1.0, -0.5)
    assert spec.w == CosineProfile(0.2, 0.1, 0, 1)
    assert spec.v == CosineProfile(0.0)


def test_snapshot_time_handling(tmp_path):
    cfg = parse_config(write(
        tmp_path,
        "[solver]\nt_end = 4\n[output]\nsnapshot_times = end, 1, 1, 0\n"))
    assert cfg.snapshot_times == (0.0, 1.0, 4.0)
    with pytest.raises(ConfigError, match="outside"):
        parse_config(write(
            tmp_path, "[solver]\nt_end = 4\n[output]\nsnapshot_times = 5\n"))
    # the built-in default list adapts to short horizons instead of failing
    short = parse_config(write(tmp_path, "[solver]\nt_end = 4\n"))
    assert short.snapshot_times == (0.0, 4.0)


def test_fit_window_section(tmp_path):
    cfg = parse_config(write(
        tmp_path, "[fit]\nt_lo = 10\nt_hi = 50\n"))
    assert cfg.fit == FitSpec(10.0, 50.0)
    assert cfg.fit.window(0.0, 60.0) == (10.0, 50.0)
    assert RunConfig().fit.window(0.0, 60.0) == (30.0, 60.0)


@pytest.mark.parametrize("text,needle", [
    ("[turbulence]\n", "unknown section '\\[turbulence\\]'"),
    ("[parameters]\nDu = 0.1\n", "unknown key 'parameters.Du'"),
    ("[solver]\nstep = 4\n", "unknown key 'solver.step'"),
    ("[parameters]\nbeta = -1\n", "beta must be positive"),
    ("[parameters]\nmu_u = nan\n", "must be finite"),
    ("[grid]\nnx = 4.5\n", "expected an integer"),
    ("[solver]\nscheme = spectral\n", "unknown scheme"),
    ("[solver]\nt_end = fast\n", "expected a decimal number"),
    ("[initial]\nprofile = vortex\n", "unknown initial profile"),
    ("[initial]\nprofile = cosine\nq_const = 1\n", "unknown key 'initial.q_const'"),
    ("[initial]\nprofile = canonical\nu_amp = 0.5\n",
     "initial.u_amp only applies to profile = cosine"),
])
def test_error_catalog(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(write(tmp_path, text))


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        parse_config(str(tmp_path / "absent.ini"))


def test_beta_above_one_warns_but_parses(tmp_path):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = parse_config(write(tmp_path, "[parameters]\nbeta = 1.5\n"))
    assert cfg.parameters.beta == 1.5
    assert any("decay regime" in str(w.message) for w in caught)
    assert "outside the guaranteed decay regime" in render_config(cfg)
