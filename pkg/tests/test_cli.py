"""Command-line client: exit codes, output formats, config, determinism."""

import json

import pytest

from grav1d import verify
from grav1d.cli import main
from grav1d.series import Series

SMALL = ["--kmax", "3", "--dmax", "4", "--gmax", "2"]


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_verify_single_suite_passes(capsys):
    code, out, err = run(
        capsys, ["verify", "--suite", "partition", *SMALL]
    )
    assert code == 0
    data = json.loads(out)
    assert data["ok"] is True
    assert data["suites"] == ["partition"]


def test_verify_empty_suite_is_usage_error(capsys):
    code, _out, err = run(capsys, ["verify", "--suite", "", *SMALL])
    assert code == 2
    assert "error" in err


def test_verify_unknown_suite_is_usage_error(capsys):
    code, _out, err = run(capsys, ["verify", "--suite", "bogus", *SMALL])
    assert code == 2


def test_unknown_series_name_is_usage_error(capsys):
    code, _out, err = run(
        capsys, ["series", "--which", "bogus", *SMALL]
    )
    assert code == 2


def test_unknown_flag_is_usage_error(capsys):
    assert main(["verify", "--frobnicate"]) == 2


def test_injected_failure_exits_one_and_names_the_check(capsys, monkeypatch):
    def bad_suite(ctx):
        # deliberate sign error: a nonzero residual
        yield "injected_sign_error", Series.coupling(ctx.spec, 0)

    monkeypatch.setitem(verify.SUITES, "partition", bad_suite)
    code, out, err = run(
        capsys, ["verify", "--suite", "partition", *SMALL]
    )
    assert code == 1
    assert "partition.injected_sign_error" in err
    assert "t0" in err  # offending monomial is reported
    data = json.loads(out)
    assert data["ok"] is False


def test_series_csv_header(capsys):
    code, out, _ = run(
        capsys, ["series", "--which", "I0", "--format", "csv", *SMALL]
    )
    assert code == 0
    assert out.splitlines()[0] == "t_exponents,l,coefficient"


def test_series_json_roundtrip_and_determinism(capsys):
    argv = ["series", "--which", "Z", "--format", "json", *SMALL]
    code, first, _ = run(capsys, argv)
    assert code == 0
    payload = json.loads(first)["payload"]
    Z = Series.from_dict(payload)
    assert Z.to_dict() == payload
    code, second, _ = run(capsys, argv)
    assert code == 0
    assert first == second  # identical config, byte-identical output


def test_correlators_markdown_table(capsys):
    code, out, _ = run(
        capsys, ["correlators", "--format", "md", *SMALL]
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "| indices | genus | value |"
    assert any("0 0" in line and "1/1" in line for line in lines)


def test_npoint_csv_has_slot_column(capsys):
    code, out, _ = run(
        capsys,
        ["npoint", "--n", "1", "--order", "2", "--format", "csv", *SMALL],
    )
    assert code == 0
    assert out.splitlines()[0] == "slot_exponents,t_exponents,l,coefficient"


def test_config_file_sets_scale_and_flags_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scale\nkmax=2\ndmax=3\n")
    code, out, _ = run(
        capsys,
        ["--config", str(cfg), "series", "--which", "Z", "--gmax", "1"],
    )
    assert code == 0
    trunc = json.loads(out)["payload"]["trunc"]
    assert trunc["kmax"] == 2 and trunc["dmax"] == 3
    # explicit flag wins over the file
    code, out, _ = run(
        capsys,
        ["--config", str(cfg), "series", "--which", "Z", "--kmax", "3",
         "--gmax", "1"],
    )
    assert json.loads(out)["payload"]["trunc"]["kmax"] == 3


def test_out_writes_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(
        capsys,
        ["verify", "--suite", "partition", "--out", str(target), *SMALL],
    )
    assert code == 0
    assert out == ""  # nothing on stdout when --out is given
    assert json.loads(target.read_text())["ok"] is True


def test_bad_config_file_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("kmax 2\n")
    code, _out, err = run(
        capsys, ["--config", str(cfg), "verify", "--suite", "partition"]
    )
    assert code == 2
    assert "error" in err
