"""Command-line interface: subcommands, reports, exit codes, determinism."""

import json

import pytest

from kepsolver.cli import instance_digest, main, parse_report
from kepsolver.instances import (InstanceFormatError, generate_random,
                                 parse_native, write_native)
from kepsolver.oracle import optimal_by_enumeration

EDGE_SAMPLE = """\
# weighted directed edges
3,1
1,2,1.0
2,3,1.0
3,1,2.0
4,1,1.5
"""


def write_instance(tmp_path, name="inst.kep", **kw):
    params = dict(n_pdps=8, n_ndds=1, density=0.35,
                  weight_mode="uniform-int(1,10)", seed=11, K=3, L=2)
    params.update(kw)
    inst = generate_random(**params)
    path = tmp_path / name
    path.write_text(write_native(inst), encoding="utf-8")
    return inst, path


def test_gen_writes_parseable_instance(tmp_path):
    out = tmp_path / "g.kep"
    rc = main(["gen", "--pdps", "6", "--ndds", "1", "--density", "0.4",
               "--seed", "3", "--output", str(out)])
    assert rc == 0
    inst = parse_native(out.read_text(encoding="utf-8"))
    assert len(inst.pdps) == 6 and len(inst.ndds) == 1

    out2 = tmp_path / "g2.kep"
    main(["gen", "--pdps", "6", "--ndds", "1", "--density", "0.4",
          "--seed", "3", "--output", str(out2)])
    assert out.read_bytes() == out2.read_bytes()


def test_solve_report_contents(tmp_path):
    inst, path = write_instance(tmp_path)
    out = tmp_path / "report.json"
    rc = main(["solve", "--instance", str(path), "--output", str(out)])
    assert rc == 0
    doc = parse_report(out.read_text(encoding="utf-8"))
    assert doc["instance_digest"] == instance_digest(inst)
    assert doc["config"]["K"] == 3 and doc["config"]["L"] == 2
    sol = doc["solution"]
    opt, _ = optimal_by_enumeration(inst)
    assert sol["status"] == "optimal"
    assert abs(sol["objective"] - opt) < 1e-9
    assert doc["bounds"]["lp"] >= sol["objective"] - 1e-9
    assert doc["bounds"]["infinite_relaxation"] >= doc["bounds"]["lp"] - 1e-6
    assert doc["search"]["nodes"] >= 1
    assert "times" not in doc


def test_solve_byte_identical_reruns(tmp_path):
    _, path = write_instance(tmp_path, seed=12)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--instance", str(path), "--output", str(a)]) == 0
    assert main(["solve", "--instance", str(path), "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_times_flag_adds_times(tmp_path):
    _, path = write_instance(tmp_path)
    out = tmp_path / "t.json"
    assert main(["solve", "--instance", str(path), "--times",
                 "--output", str(out)]) == 0
    doc = parse_report(out.read_text(encoding="utf-8"))
    assert "times" in doc


def test_solve_cap_overrides(tmp_path):
    inst, path = write_instance(tmp_path, seed=5)
    out = tmp_path / "o.json"
    assert main(["solve", "--instance", str(path), "--L", "0",
                 "--output", str(out)]) == 0
    doc = parse_report(out.read_text(encoding="utf-8"))
    assert doc["config"]["L"] == 0
    assert doc["solution"]["chains"] == []

    assert main(["solve", "--instance", str(path), "--L", "inf",
                 "--output", str(out)]) == 0
    doc = parse_report(out.read_text(encoding="utf-8"))
    assert doc["config"]["L"] is None


def test_oracle_report(tmp_path):
    inst, path = write_instance(tmp_path, n_pdps=6, seed=4)
    out = tmp_path / "oracle.json"
    assert main(["oracle", "--instance", str(path),
                 "--output", str(out)]) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["kind"] == "oracle_report"
    assert abs(doc["optimal"] - doc["ieef"]) < 1e-6
    opt, _ = optimal_by_enumeration(inst)
    assert abs(doc["optimal"] - opt) < 1e-9


def test_compare_passes_and_exits_zero(tmp_path, capsys):
    rc = main(["compare", "--n", "6", "--pdps", "6", "--ndds", "1",
               "--density", "0.35", "--seed", "2"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_mdd_stats_prints_table(tmp_path, capsys):
    _, path = write_instance(tmp_path)
    assert main(["mdd-stats", "--instance", str(path)]) == 0
    out = capsys.readouterr().out
    assert "nodes" in out and "paths" in out


def test_convert_infers_and_declares_ndds(tmp_path, capsys):
    src = tmp_path / "edges.csv"
    src.write_text(EDGE_SAMPLE, encoding="utf-8")
    assert main(["convert", "--instance", str(src)]) == 0
    inst = parse_native(capsys.readouterr().out)
    assert inst.ndds == (4,) and inst.pdps == (1, 2, 3)

    assert main(["convert", "--instance", str(src), "--ndd-ids", "4",
                 "--L", "2"]) == 0
    inst2 = parse_native(capsys.readouterr().out)
    assert inst2.ndds == (4,) and inst2.L == 2


def test_missing_instance_file_exits_one(tmp_path, capsys):
    rc = main(["solve", "--instance", str(tmp_path / "nope.kep")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_bad_document_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.kep"
    bad.write_text("this is not an instance\n", encoding="utf-8")
    rc = main(["solve", "--instance", str(bad)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_solve_without_instance_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_parse_report_rejects_other_documents():
    with pytest.raises(InstanceFormatError):
        parse_report(json.dumps({"kind": "oracle_report", "version": 1}))
