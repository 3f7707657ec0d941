import json

import click
import pytest
import typer
from chi_verify.cli import EXIT_SIGNALS, USAGE_ERRORS, Method, RunConfig, combined_exit_code, main
from chi_verify.data import Verdict, VerdictKind
from chi_verify.exceptions import CapabilityError, ContractViolation


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    with capsys.disabled():
        print(out.out, out.err)
    return code, out.out


def verdicts(out):
    return [json.loads(line) for line in out.splitlines() if line.startswith("{")]


def test_verify_both(capsys, tmp_path):
    code, out = run(capsys, "verify", "--n", "3", "--method", "both", "--cache-dir", str(tmp_path), "--workers", "1")
    assert code == 0
    results = verdicts(out)
    assert [r["method"] for r in results] == ["cancel", "valuations"]
    assert all(r["verdict"] == "ProvedEqual" for r in results)
    assert list(results[0]) == ["n", "method", "verdict", "residual_terms", "witness", "elapsed_ms", "stats", "message"]


def test_verify_refuses_large_valuations(capsys, tmp_path):
    code, _ = run(capsys, "verify", "--n", "7", "--method", "valuations", "--cache-dir", str(tmp_path))
    assert code == 64


def test_verify_emit_terms(capsys, tmp_path):
    path = tmp_path / "out.jsonl"
    code, out = run(
        capsys,
        "verify",
        "--n",
        "2",
        "--emit-terms",
        str(path),
        "--cache-dir",
        str(tmp_path),
        "--workers",
        "1",
    )
    assert code == 0
    (result,) = verdicts(out)
    lines = path.read_text().splitlines()
    assert len(lines) == result["stats"]["lhs_terms"] == 3
    assert all(json.loads(line)["n"] == 2 for line in lines)


def test_verify_is_deterministic(capsys, tmp_path):
    outputs = []
    for _ in range(2):
        code, out = run(capsys, "verify", "--n", "3", "--cache-dir", str(tmp_path), "--workers", "1")
        assert code == 0
        (result,) = verdicts(out)
        result.pop("elapsed_ms")
        outputs.append(result)
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["verify"],
        ["verify", "--n", "2", "--bogus"],
        ["verify", "--n", "0"],
        ["verify", "--n", "2", "--method", "guess"],
        ["verify", "--n", "2", "--workers", "0"],
    ],
)
def test_usage_errors(capsys, tmp_path, argv):
    code, _ = run(capsys, *argv, "--cache-dir", str(tmp_path))
    assert code == 64


def test_usage_error_classes_follow_typer():
    """Test that typer's own exception classes are caught, bundled click or not."""
    assert issubclass(typer.BadParameter, USAGE_ERRORS)
    assert issubclass(typer.Exit, EXIT_SIGNALS)
    assert click.UsageError in USAGE_ERRORS


def test_cache_warm_and_stats(capsys, tmp_path):
    d = str(tmp_path)
    code, out = run(capsys, "cache", "warm", "--n", "3", "--cache-dir", d, "--workers", "1")
    assert code == 0
    first = out.strip()

    code, out = run(capsys, "cache", "warm", "--n", "3", "--cache-dir", d, "--workers", "1")
    assert code == 0
    entries = first.split()[1]
    assert out.strip() == f"entries: {entries} (+0)"

    code, out = run(capsys, "cache", "stats", "--cache-dir", d)
    assert code == 0
    assert f"entries: {entries}" in out

    code, out = run(capsys, "cache", "verify-integrity", "--cache-dir", d)
    assert code == 0
    assert "ok" in out


def test_cache_integrity_catches_planted_fault(capsys, tmp_path):
    (tmp_path / "zero-cache.txt").write_text("3;3,5;1\n")
    code, out = run(capsys, "cache", "verify-integrity", "--cache-dir", str(tmp_path))
    assert code == 1
    assert "mismatch" in out


def test_corrupt_cache_exits_65(capsys, tmp_path):
    (tmp_path / "zero-cache.txt").write_text("3;3,5;0\nnot a line\n")
    code, _ = run(capsys, "cache", "stats", "--cache-dir", str(tmp_path))
    assert code == 65


def test_conjecture(capsys, tmp_path):
    code, out = run(capsys, "conjecture", "--n", "2", "--cache-dir", str(tmp_path))
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 2
    assert all("pass" in r for r in rows)

    code, _ = run(capsys, "conjecture", "--n", "6", "--cache-dir", str(tmp_path))
    assert code == 64


def test_numeric_check(capsys):
    code, out = run(capsys, "numeric-check", "--n", "1", "--supports", "3/2", "--grid", "32")
    assert code == 0
    assert "gap" in out

    code, _ = run(capsys, "numeric-check", "--n", "2", "--supports", "1/2")
    assert code == 64
    code, _ = run(capsys, "numeric-check", "--n", "1", "--supports", "3/2", "--grid", "48")
    assert code == 64


def test_run_config(tmp_path):
    cfg = RunConfig("verify", n=6, method=Method.both, cache_dir=tmp_path, workers=2)
    assert cfg.methods == ["cancel", "valuations"]
    assert cfg.config.cache_file == tmp_path / "zero-cache.txt"
    assert cfg.config.workers == 2
    with pytest.raises(CapabilityError):
        RunConfig("verify", n=7, method=Method.valuations)
    with pytest.raises(ContractViolation):
        RunConfig("verify", n=0)


def test_combined_exit_code():
    equal = Verdict(3, "cancel", VerdictKind.PROVED_EQUAL)
    unsure = Verdict(3, "cancel", VerdictKind.INCONCLUSIVE)
    wrong = Verdict(3, "valuations", VerdictKind.NOT_EQUAL)
    assert combined_exit_code([equal, unsure]) == 0
    assert combined_exit_code([unsure]) == 2
    assert combined_exit_code([equal, wrong]) == 1
