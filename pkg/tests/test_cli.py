import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screenalg.cli import RunConfig, emit, main, run_verify
from screenalg.diffalg import from_json
from screenalg.errors import ConfigError


def schema(name):
    return json.loads(resources.files("screenalg").joinpath("schemas", name).read_text())


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def test_verify_a1_all(capsys):
    status, out, _ = run(capsys, "verify", "--algebra", "A1", "--suite", "all")
    assert status == 0
    report = json.loads(out)
    jsonschema.validate(report, schema("verify.schema.json"))
    assert report["ok"] and set(report["suites"]) == {"screening", "sepvar", "zerocurv",
                                                      "conserved", "freefield", "properties"}
    assert report["caps"]["flows"] == 4


def test_verify_unsupported_algebra(capsys):
    status, out, err = run(capsys, "verify", "--algebra", "B2")
    assert status == 2
    assert "unsupported" in err
    assert json.loads(out)["ok"] is False


def test_verify_bad_cap():
    status, report = run_verify(RunConfig(flows=0))
    assert status == 2 and "flows" in report["error"]


def test_verify_zerocurv_golden(capsys):
    status, out, _ = run(capsys, "verify", "--suite", "zerocurv", "--flows", "2")
    assert status == 0
    names = {c["name"]: c for c in json.loads(out)["suites"]["zerocurv"]["checks"]}
    for n in ("makns2_p_golden", "makns2_q_golden", "akns2_golden", "nls_text"):
        assert names[n]["ok"] is True
    assert names["makns2_q_printed"]["ok"] is None
    assert names["makns2_q_printed"]["q2p1_coefficient"] == "-2"


def test_mathematical_failure_exit_code(monkeypatch):
    from screenalg import cli
    monkeypatch.setitem(cli.RUNNERS, "properties", lambda rs, cfg: [cli._check("forced", False)])
    status, report = run_verify(RunConfig(suite="properties"))
    assert status == 1 and report["ok"] is False


def test_emit_hierarchy_latex(capsys):
    status, out, _ = run(capsys, "emit", "hierarchy", "--flows", "2", "--format", "latex")
    assert status == 0
    assert r"\partial_{\tau_{2}} E = E'' - 2 E^{2} F" in out
    assert r"\partial_{\tau_{2}} F = -F'' + 2 E F^{2}" in out


def test_emit_character_order_zero(capsys):
    status, out, _ = run(capsys, "emit", "character", "--order", "0")
    assert status == 0 and out == "1\n"


def test_emit_unknown_target(capsys):
    status, _, err = run(capsys, "emit", "plots")
    assert status == 2 and "unknown target" in err


@pytest.mark.parametrize("target", ["hierarchy", "nonlocal", "kernel", "b-polys", "ope",
                                    "character", "conserved"])
def test_emit_is_deterministic(target, capsys):
    s1, o1, _ = run(capsys, "emit", target, "--flows", "2", "--max-spin", "2")
    s2, o2, _ = run(capsys, "emit", target, "--flows", "2", "--max-spin", "2")
    assert s1 == s2 == 0 and o1 == o2 and o1


def test_emit_kernel_json_parses():
    status, text = emit(RunConfig(format="json"), "kernel")
    doc = json.loads(text)
    d = schema("density.schema.json")
    for v in doc["generators"].values():
        jsonschema.validate(v, d)
    assert from_json(doc["generators"]["e_1"], 1).terms


def test_hierarchy_and_conserved_commands(capsys):
    status, out, _ = run(capsys, "hierarchy", "--algebra", "A1", "--flows", "3", "--format", "json")
    assert status == 0 and set(json.loads(out)["flows"]) == {"1", "2", "3"}
    status, out, _ = run(capsys, "conserved", "--algebra", "A1", "--max-spin", "4", "--format", "json")
    assert status == 0 and [c["spin"] for c in json.loads(out)["candidates"]] == [1, 2, 3, 4]


@pytest.mark.parametrize("check", ["relations", "screening"])
@pytest.mark.parametrize("fmt", ["text", "json"])
def test_wakimoto(check, fmt, capsys):
    status, out, _ = run(capsys, "wakimoto", "--check", check, "--format", fmt)
    assert status == 0
    if fmt == "json":
        assert json.loads(out)["ok"] is True
    else:
        assert out.strip().endswith("overall: ok")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# caps\nalgebra = A1\norder = 0\nflows = 2\n")
    status, out, _ = run(capsys, "emit", "character", "--config", str(cfg))
    assert status == 0 and out == "1\n"
    status, out, _ = run(capsys, "emit", "character", "--config", str(cfg), "--order", "1")
    assert out == "1 + q*u^-1 + q + q*u\n"


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    status, _, err = run(capsys, "verify", "--config", str(cfg))
    assert status == 2 and "unknown config key" in err


def test_out_directory(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SCREENALG_OUT", str(tmp_path))
    status, out, _ = run(capsys, "emit", "character", "--order", "0")
    assert status == 0 and (tmp_path / "character.txt").read_text() == out


@given(st.builds(RunConfig, algebra=st.sampled_from(["A1", "A2", "A3"]),
                 max_order=st.integers(1, 9), degree=st.integers(1, 9), order=st.integers(0, 9),
                 t_window=st.integers(1, 9), flows=st.integers(1, 9), modes=st.integers(1, 9),
                 max_spin=st.integers(1, 9), format=st.sampled_from(["", "json", "latex", "text"]),
                 suite=st.sampled_from(["all", "zerocurv", "screening,sepvar"]),
                 seed=st.integers(0, 10 ** 6), out=st.sampled_from(["", "reports"])))
def test_config_round_trip(cfg):
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg
    back.validate()


def test_config_rejects_non_integer():
    with pytest.raises(ConfigError):
        RunConfig.from_text("flows = many\n")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "screenalg", "emit", "character", "--order", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "1\n"
