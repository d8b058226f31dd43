import hashlib
import json
from pathlib import Path

import pytest

from conftest import I2C, I2C_SOURCES

from keysig.assertions import AuthError
from keysig.config import RunConfig
from keysig.pipeline import PipelineError, run_pipeline
from keysig.slicing import load_slice


def i2c_config(out, **kw):
    base = dict(
        sources=[str(p) for p in I2C_SOURCES],
        output_dir=str(out),
        generate=True,
        mock_dir=str(I2C / "mock"),
        overview=str(I2C / "overview.txt"),
    )
    base.update(kw)
    return RunConfig(**base)


def tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_full_run_artifacts(tmp_path):
    res = run_pipeline(i2c_config(tmp_path / "out"))
    out = tmp_path / "out"
    for name in ("config.json", "graph.json", "graph.dot", "ranking.json", "ranking.txt", "run_report.json"):
        assert (out / name).is_file(), name
    selected = [r.qualified_name for r in res.selected]
    assert len(selected) == 3
    slice_dirs = sorted(p.name for p in (out / "slices").iterdir())
    assert slice_dirs == sorted(selected)
    for d in (out / "slices").iterdir():
        assert load_slice(d).root == d.name
    assert len(res.records) == 3
    for r in res.records:
        assert r.status == "Accepted" and len(r.attempts) == 3
        assert [bool(a.assertions) and any(v.passed for _, v in a.assertions) for a in r.attempts] == [False, False, True]
    report = json.loads((out / "run_report.json").read_text())
    assert report["accepted"] == 3 and report["skipped"] == 0 and report["requests"] == 9
    assert sorted(p.stem for p in (out / "assertions").iterdir()) == sorted(selected)


def test_reruns_are_byte_identical(tmp_path):
    run_pipeline(i2c_config(tmp_path / "out"))
    first = tree_digest(tmp_path / "out")
    run_pipeline(i2c_config(tmp_path / "out"))
    assert tree_digest(tmp_path / "out") == first


def test_output_does_not_depend_on_source_order(tmp_path):
    a = run_pipeline(i2c_config(tmp_path / "a", generate=False))
    b = run_pipeline(i2c_config(tmp_path / "b", generate=False, sources=[str(p) for p in reversed(I2C_SOURCES)]))
    assert (tmp_path / "a" / "ranking.json").read_bytes() == (tmp_path / "b" / "ranking.json").read_bytes()
    assert [r.qualified_name for r in a.selected] == [r.qualified_name for r in b.selected]


def test_config_echo_replays(tmp_path):
    run_pipeline(i2c_config(tmp_path / "out", k=2, theta=0.3))
    echoed = RunConfig.load(tmp_path / "out" / "config.json").validate()
    assert echoed.k == 2 and echoed.theta == 0.3
    echoed.output_dir = str(tmp_path / "replay")
    run_pipeline(echoed)
    for name in ("graph.json", "ranking.json"):
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "replay" / name).read_bytes()
    a, b = tree_digest(tmp_path / "out" / "slices"), tree_digest(tmp_path / "replay" / "slices")
    assert a == b


def test_minimal_single_module(tmp_path):
    src = tmp_path / "m.v"
    src.write_text(
        "module m(input clk, input d, output reg q);\n"
        "    always @(posedge clk) q <= d;\n"
        "endmodule\n"
    )
    mock = tmp_path / "mock"
    mock.mkdir()
    (mock / "default.txt").write_text("```\nassert property (@(posedge clk) q == $past(d));\n```\n")
    res = run_pipeline(RunConfig(sources=[str(src)], output_dir=str(tmp_path / "o"), k=1, generate=True, mock_dir=str(mock)))
    assert [r.qualified_name for r in res.selected] == ["m.q"]
    assert (tmp_path / "o" / "slices" / "m.q" / "slice.v").is_file()
    assert (tmp_path / "o" / "assertions" / "m.q.json").is_file()
    assert res.records[0].status == "Accepted" and len(res.records[0].attempts) == 1


def test_k_zero_fails_before_work(tmp_path):
    with pytest.raises(PipelineError) as ei:
        run_pipeline(i2c_config(tmp_path / "out", k=0))
    assert ei.value.stage == "config"
    assert not (tmp_path / "out").exists()


def test_parse_error_stage(tmp_path):
    bad = tmp_path / "bad.v"
    bad.write_text("module m(input a)\n  assign\nendmodule\n")
    with pytest.raises(PipelineError) as ei:
        run_pipeline(RunConfig(sources=[str(bad)], output_dir=str(tmp_path / "o")))
    assert ei.value.stage == "parse"
    assert (tmp_path / "o" / "config.json").is_file()


def test_missing_source_is_parse_stage(tmp_path):
    with pytest.raises(PipelineError) as ei:
        run_pipeline(RunConfig(sources=[str(tmp_path / "none.v")], output_dir=str(tmp_path / "o")))
    assert ei.value.stage == "parse"


def test_rank_stage_error_keeps_graph(tmp_path):
    src = tmp_path / "c.v"
    src.write_text("module c(input clk, input rst); endmodule\n")
    with pytest.raises(PipelineError) as ei:
        run_pipeline(RunConfig(sources=[str(src)], output_dir=str(tmp_path / "o")))
    assert ei.value.stage == "rank"
    assert (tmp_path / "o" / "graph.json").is_file()


def test_generate_failure_keeps_earlier_artifacts(tmp_path):
    with pytest.raises(PipelineError) as ei:
        run_pipeline(i2c_config(tmp_path / "out", template=str(tmp_path / "missing.txt")))
    assert ei.value.stage == "generate"
    out = tmp_path / "out"
    assert (out / "ranking.json").is_file() and len(list((out / "slices").iterdir())) == 3


def test_auth_error_is_generate_stage(tmp_path, monkeypatch):
    monkeypatch.delenv("KEYSIG_TEST_MISSING", raising=False)
    cfg = i2c_config(tmp_path / "out", mock_dir=None, api_key_env="KEYSIG_TEST_MISSING")
    with pytest.raises(PipelineError) as ei:
        run_pipeline(cfg)
    assert ei.value.stage == "generate" and isinstance(ei.value.cause, AuthError)


def test_without_generation(tmp_path):
    res = run_pipeline(i2c_config(tmp_path / "out", generate=False))
    assert res.records == [] and res.report is None
    assert not (tmp_path / "out" / "assertions").exists()


def test_stale_slices_removed(tmp_path):
    run_pipeline(i2c_config(tmp_path / "out", generate=False, k=3))
    run_pipeline(i2c_config(tmp_path / "out", generate=False, k=1))
    assert len(list((tmp_path / "out" / "slices").iterdir())) == 1
