import csv
import json
import os
import textwrap

import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import bounds as B
from llt_lab import cli
from llt_lab import distributions as D
from llt_lab.errors import ConfigError, LabError
from llt_lab.runner import (CHECK_GROUPS, DEFAULT_TOLERANCES, emit_cf_error_series,
                            emit_plot_data, fmt, load_config, parse_config, run)

SMALL = textwrap.dedent("""\
    checks: [isotropy, cf_norms, theorems, rates]
    experiments:
      - name: unif
        family: uniform-interval
        n_list: [4, 8, 16]
        mode: symmetric
      - name: expo
        family: centered-exponential
        n_list: [4, 8, 16]
""")


def _parse_error(text):
    with pytest.raises(ConfigError) as info:
        parse_config(textwrap.dedent(text))
    return info.value


def test_minimal_config_defaults():
    cfg = load_config("configs/minimal.yaml")
    (exp,) = cfg.experiments
    assert exp.n_list == (4, 16)
    assert exp.mode == "general"
    assert exp.C == B.DEFAULT_C and exp.c == B.DEFAULT_c
    assert exp.dim == 1
    assert cfg.checks == frozenset(CHECK_GROUPS)
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_default_config_parses():
    cfg = load_config("configs/default.yaml")
    assert len(cfg.experiments) == 11
    assert {e.dim for e in cfg.experiments} == {1, 2, 3}


def test_unknown_key_reports_line():
    err = _parse_error("""\
        family: gaussian
        n_list: [4]
        colour: blue
    """)
    assert err.line == 3
    assert "colour" in str(err)


def test_grid_points_must_be_power_of_two():
    err = _parse_error("""\
        family: gaussian
        n_list: [4]
        grid:
          N: 1000
    """)
    assert err.line == 4


def test_symmetric_mode_rejects_skewed_family():
    err = _parse_error("""\
        experiments:
          - family: centered-exponential
            n_list: [4, 8]
            mode: symmetric
    """)
    assert err.line == 4
    assert "third moments" in str(err)


@pytest.mark.parametrize("text,line", [
    ("family: nope\nn_list: [4]\n", 1),
    ("family: gaussian\nn_list: []\n", 2),
    ("family: gaussian\nn_list: [8, 4]\n", 2),
    ("family: gaussian\nn_list: [4]\nC: -1\n", 3),
    ("family: gaussian\nn_list: [4]\ntolerances: {bogus: 1}\n", 3),
    ("family: gaussian\nn_list: [4]\nchecks: [isotropy, magic]\n", 3),
    ("experiments:\n  - {family: gaussian, n_list: [4]}\n  - {family: gaussian, n_list: [8]}\n",
     None),
])
def test_parse_errors(text, line):
    err = _parse_error(text)
    if line is not None:
        assert err.line == line


def test_malformed_yaml_has_line():
    err = _parse_error("family: gaussian\nn_list: [4,\n")
    assert err.line is not None


def test_families_list_and_params():
    cfg = parse_config(textwrap.dedent("""\
        families: [uniform-interval, {family: centered-exponential, sigma: 2.0}]
        n_list: [4]
    """))
    (exp,) = cfg.experiments
    specs = exp.experiment().families
    assert [s.family_id for s in specs] == ["uniform-interval", "centered-exponential"]
    assert specs[1].sigma == pytest.approx(2.0)


@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_fmt_roundtrip(v):
    s = fmt(v)
    assert float(s) == pytest.approx(v, rel=1e-11, abs=0.0)
    assert len(s.split("e")[0].replace("-", "").replace(".", "")) == 12


def test_fmt_special_values():
    assert fmt(None) == ""
    assert fmt(True) == "true"
    assert fmt(3) == "3"
    assert fmt(float("nan")) == "nan"
    assert fmt(float("-inf")) == "-inf"


def test_emit_plot_data(tmp_path, uniform):
    rep = B.verify_bound(B.Experiment([uniform], [4, 8, 16, 32, 64], mode="symmetric"))
    path = emit_plot_data(rep, tmp_path / "rate.csv")
    rows = list(csv.reader(path.open()))
    assert len(rows) == 1 + 5
    empty = B.BoundReport("x", 1, "general", 3.0, 0.1, [], None, None, {})
    with pytest.raises(LabError):
        emit_plot_data(empty, tmp_path / "empty.csv")


def test_emit_cf_series(tmp_path, exponential):
    rec = B.cf_product_error_check(B.Experiment([exponential], [8]), 8)
    path = emit_cf_error_series(rec, tmp_path / "cf.csv")
    assert len(list(csv.reader(path.open()))) == 1 + len(rec.t)


def _csv_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*.csv"))}


def test_run_writes_reports_and_is_deterministic(tmp_path):
    cfg = parse_config(SMALL)
    a = run(cfg, out_dir=tmp_path / "a")
    b = run(cfg, out_dir=tmp_path / "b", jobs=2)
    assert a.exit_code == 0, a.failures
    for name in ("bounds.csv", "functionals.csv", "separation.csv", "checks.csv",
                 "summary.json"):
        assert (tmp_path / "a" / name).exists()
    assert _csv_bytes(tmp_path / "a") == _csv_bytes(tmp_path / "b")
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["failed"] == 0 and summary["passed"] == a.total
    bounds = list(csv.DictReader((tmp_path / "a" / "bounds.csv").open()))
    assert len(bounds) == 6
    assert set(a.rates) == {"unif", "expo"}


def test_cli_families(capsys):
    assert cli.main(["families"]) == 0
    out = capsys.readouterr().out
    for fid in D.FAMILIES:
        assert fid in out


def test_cli_run_minimal(tmp_path):
    assert cli.main(["run", "configs/minimal.yaml", "--out", str(tmp_path), "-q",
                     "--checks", "isotropy,theorems"]) == 0
    assert (tmp_path / "bounds.csv").exists()


def test_cli_run_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("family: gaussian\nn_list: [4]\ngrid: {N: 1000}\n")
    assert cli.main(["run", str(bad)]) == 2
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 2
    assert cli.main(["run", "configs/minimal.yaml", "--checks", "nonsense"]) == 2


@pytest.mark.skipif(os.geteuid() == 0, reason="permission bits are not enforced for root")
def test_cli_unwritable_output(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert cli.main(["run", "configs/minimal.yaml", "--out", str(locked), "-q"]) != 0
    finally:
        locked.chmod(0o700)


def test_cli_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "configs/minimal.yaml", "--out", str(blocker / "sub"), "-q"]) == 3


def test_failed_check_gives_exit_one(tmp_path):
    # an impossible rate tolerance forces the rate check to fail
    cfg = parse_config(textwrap.dedent("""\
        checks: [rates]
        tolerances: {rate_slack: 1.0e-6}
        family: centered-exponential
        n_list: [4, 8, 16]
    """))
    summary = run(cfg, out_dir=tmp_path)
    assert summary.exit_code == 1
    assert summary.failures[0]["check"].startswith("rates")
