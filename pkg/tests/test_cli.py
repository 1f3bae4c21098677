import json
import subprocess
import sys

import pytest

from chipdiffusion import errors
from chipdiffusion.cli import main, parse_graph_spec, parse_init_spec
from chipdiffusion.engine import Configuration
from chipdiffusion.errors import InvalidParams
from chipdiffusion.graph import generate, read_edge_list

# the middle vertex gains two chips past the int64 maximum on the first step
BIG = f"{2**63 - 1} {2**63 - 2} {2**63 - 1}"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def field(out, name):
    for line in out.splitlines():
        if line.startswith(name + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"{name} missing from output:\n{out}")


def test_run_path3(capsys):
    code, out, _ = run(capsys, "run", "--graph", "path:3", "--init", "0 5 0")
    assert code == 0
    assert field(out, "transient") == "1" and field(out, "period") == "2"


def test_run_star_fixed_point(capsys):
    code, out, _ = run(capsys, "run", "--graph", "star:4", "--init", "7 7 7 7")
    assert code == 0
    assert field(out, "transient") == "0" and field(out, "period") == "1"


def test_run_self_loop_file(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n1 2\n2 2\n")
    code, _, err = run(capsys, "run", "--graph", f"file:{bad}", "--init", "0 0 0")
    assert code == errors.SelfLoop.exit_code != 0
    assert "SelfLoop" in err and len(err.strip().splitlines()) == 1


def test_run_output_and_trace(tmp_path, capsys):
    report, tr = tmp_path / "r.jsonl", tmp_path / "t.jsonl"
    code, _, _ = run(capsys, "run", "--graph", "path:3", "--init", "0 5 0", "--id", "p3",
                     "--output", str(report), "--trace", str(tr), "--record", "labelings")
    assert code == 0
    rec = json.loads(report.read_text())
    assert rec["instance_id"] == "p3" and (rec["transient"], rec["period"]) == (1, 2)
    assert rec["final_potential"] == "7/1"
    rows = [json.loads(line) for line in tr.read_text().splitlines()]
    assert rows[0] == {"t": 0, "w": [0, 5, 0], "P": "15/1", "labels": [[1, 2, -1, -1], [2, 3, 1, 1]]}
    assert rows[1]["w"] == [1, 3, 1] and rows[1]["P"] == "7/1"
    assert rows[-1]["P"] is None


def test_verify_rational_k2(capsys):
    code, out, _ = run(capsys, "verify", "--graph", "complete:2", "--init", "1/2 0")
    assert code == 0
    assert field(out, "period") in ("1", "2")
    assert "FAIL" not in out


def test_verify_random_instance(capsys):
    code, out, _ = run(capsys, "verify", "--graph", "gnp:25,0.3", "--init", "random:-100,100", "--seed", "4")
    assert code == 0
    assert out.count("PASS") >= 9


@pytest.mark.parametrize(
    "argv, want",
    [
        (["verify", "--graph", "path:3", "--init", "0 x 0"], errors.MalformedLine.exit_code),
        (["run", "--graph", "path:3", "--init", "0 5"], errors.LengthMismatch.exit_code),
        (["run", "--graph", "path:3", "--init", "1/2 0 0", "--mode", "int64"], errors.InvalidParams.exit_code),
        (["run", "--graph", "torus:3", "--init", "0 0 0"], errors.InvalidParams.exit_code),
        (["run", "--graph", "path", "--init", "0"], errors.InvalidParams.exit_code),
        (["run", "--graph", "file:/nonexistent/g.txt", "--init", "0"], errors.IO_ERROR),
        (["run", "--graph", "path:30", "--init", "random:0,50", "--cap", "1"], errors.CapExceeded.exit_code),
        (["run", "--graph", "path:3", "--init", BIG], errors.ArithmeticOverflow.exit_code),
        (["search-fn", "--n", "5", "--strategy", "random", "--budget", "0"], errors.InvalidParams.exit_code),
        (["scan", "--family", "gnp", "--n", "5", "--p", "0.5", "--count", "0"], errors.InvalidParams.exit_code),
    ],
)
def test_exit_codes(capsys, argv, want):
    code, _, err = run(capsys, *argv)
    assert code == want
    assert err.startswith("error:")


def test_bigint_mode_avoids_overflow(capsys):
    code, out, _ = run(capsys, "run", "--graph", "path:3", "--init", BIG, "--mode", "bigint")
    assert code == 0 and field(out, "period") == "2"


def test_exit_codes_are_distinct():
    codes = [cls.exit_code for cls in (
        errors.MalformedLine, errors.SelfLoop, errors.IndexOutOfRange, errors.CountMismatch,
        errors.InvalidParams, errors.LengthMismatch, errors.ArithmeticOverflow, errors.CapExceeded,
        errors.TraceTooShort, errors.SinkWriteFailure)]
    codes += [errors.IO_ERROR, errors.CHECK_FAILED, errors.USAGE, 0]
    assert len(set(codes)) == len(codes)


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--init", "0"])
    assert exc.value.code == errors.USAGE


def test_help_lists_exit_codes(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert "exit codes:" in out and "CHIPDIFFUSION_JOBS" in out


def test_search_fn(tmp_path, capsys):
    stream = tmp_path / "best.jsonl"
    code, out, _ = run(capsys, "search-fn", "--n", "4", "--strategy", "exhaustive", "--K", "2",
                       "--jobs", "1", "--output", str(stream))
    assert code == 0
    assert int(field(out, "best_offset")) >= 2
    offsets = [json.loads(line)["offset"] for line in stream.read_text().splitlines()]
    assert offsets == sorted(offsets) and offsets[-1] == int(field(out, "best_offset"))


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert run(capsys, "gen", "--family", "gnp", "--n", "10", "--p", "0.5", "--seed", "1",
                   "--output", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_edge_list(a) == generate("gnp", 10, p=0.5, seed=1)


def test_gen_stdout(capsys):
    code, out, _ = run(capsys, "gen", "--family", "path", "--n", "3")
    assert code == 0 and out == "3 2\n1 2\n2 3\n"


def test_scan_flags(tmp_path, capsys):
    out_path, csv_path = tmp_path / "scan.jsonl", tmp_path / "summary.csv"
    code, out, _ = run(capsys, "scan", "--family", "gnp", "--n", "20", "--p", "0.3", "--count", "100",
                       "--seed", "7", "--jobs", "1", "--output", str(out_path),
                       "--summary-csv", str(csv_path))
    assert code == 0
    recs = [json.loads(line) for line in out_path.read_text().splitlines()]
    assert len(recs) == 100
    assert {r["period"] for r in recs} <= {1, 2}
    assert all(r["checks_passed"] for r in recs)
    header, row = csv_path.read_text().splitlines()
    assert header == "n,m_mean,transient_max,period_counts,offset_max"
    assert row.startswith("20,")


def test_scan_config_file(tmp_path, capsys):
    cfg = tmp_path / "star.cfg"
    cfg.write_text("family = star\nn = 5\nlabels = 1 0 0 0 0\ncount = 1\nseed = 3\n")
    out_path = tmp_path / "scan.jsonl"
    code, out, _ = run(capsys, "scan", "--config", str(cfg), "--output", str(out_path), "--jobs", "1")
    assert code == 0
    assert json.loads(out_path.read_text())["required_offset"] == 3
    assert field(out, "max required offset") == "3"


def test_scan_needs_family(capsys):
    code, _, _ = run(capsys, "scan", "--n", "5")
    assert code == errors.InvalidParams.exit_code


def test_scan_byte_identical_across_jobs(tmp_path, capsys):
    paths = [tmp_path / f"s{j}.jsonl" for j in (1, 2)]
    for jobs, path in zip((1, 2), paths):
        assert run(capsys, "scan", "--family", "random_multi", "--n", "8", "--p", "0.5", "--max-mult", "3",
                   "--count", "30", "--seed", "2", "--jobs", str(jobs), "--output", str(path))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_parse_graph_spec():
    assert parse_graph_spec("random_multi:10,0.5,3", seed=2) == generate("random_multi", 10, p=0.5, max_mult=3, seed=2)
    with pytest.raises(InvalidParams):
        parse_graph_spec("gnp:x,0.3")


def test_parse_init_spec(tmp_path):
    assert parse_init_spec("0 5 0", 3, "auto") == Configuration([0, 5, 0])
    assert parse_init_spec("1/2 0", 2, "rational").denominator == 2
    assert parse_init_spec("1 2", 2, "bigint").wide
    path = tmp_path / "w.txt"
    path.write_text("3 4\n")
    assert parse_init_spec(f"file:{path}", 2, "auto") == Configuration([3, 4])
    a = parse_init_spec("random:-5,5", 6, "auto", seed=8)
    assert a == parse_init_spec("random:-5,5", 6, "auto", seed=8)
    assert all(-5 <= x <= 5 for x in a.numerators.tolist())
    for bad in ("random:5,1", "random:1"):
        with pytest.raises(InvalidParams):
            parse_init_spec(bad, 3, "auto")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "chipdiffusion", "run", "--graph", "path:3", "--init", "0 5 0"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "period: 2" in res.stdout
