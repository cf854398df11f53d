"""Tests for the command line front end and the report rendering."""

import pytest

from cli import EXIT_OK, EXIT_UNREADABLE, EXIT_USAGE, main
from data_model import BenchmarkReport, RunRecord
from render_report import render_csv, render_report, render_success_grid
from upgrade import load_instance


def _run(n, solver_seed, instance_seed, outcome="success", **extra):
    return RunRecord(
        mode="noise",
        n_segments=n,
        solver_seed=solver_seed,
        instance_seed=instance_seed,
        outcome=outcome,
        **extra,
    )


@pytest.fixture
def report():
    return BenchmarkReport(
        mode="noise",
        sigma=1e-6,
        runs=[
            _run(9, 1, 0, error=2e-7, max_residual=1e-6, basis_size=120, multi_reductions=40, precision_bits=1088),
            _run(9, 0, 1, outcome="no-real-solution", precision_bits=1088),
            _run(9, 0, 0, error=4e-7, max_residual=2e-6, basis_size=100, multi_reductions=30, precision_bits=1088),
            _run(9, 1, 1, outcome="zero-division", precision_bits=1088),
        ],
    )


@pytest.mark.parametrize(
    "argv",
    [
        ["gen-solver", "--n", "8"],
        ["bench", "--n", "9", "8"],
        ["frobnicate"],
        ["gen-instance", "--n", "9", "--sigma", "-1"],
        ["bench", "--jobs", "0"],
        ["solve", "a.json", "b.json", "--precision-bits", "32"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_missing_files_are_unreadable(tmp_path):
    assert main(["solve", str(tmp_path / "t.json"), str(tmp_path / "i.json")]) == EXIT_UNREADABLE


def test_broken_template_is_unreadable(tmp_path):
    template = tmp_path / "t.json"
    template.write_text("{}", encoding="utf-8")
    instance = tmp_path / "i.json"
    instance.write_text("{}", encoding="utf-8")
    assert main(["solve", str(template), str(instance)]) == EXIT_UNREADABLE


def test_gen_instance_writes_to_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("UPGRADE_OUTPUT_DIR", str(tmp_path / "out"))
    assert main(["gen-instance", "--n", "9", "--seed", "2"]) == EXIT_OK
    instance = load_instance(str(tmp_path / "out" / "instance_real_n9_s2.json"))
    assert instance.kind == "real" and instance.seed == 2


def test_gen_instance_template_kind_with_noise_flag_ignored(tmp_path):
    out = tmp_path / "template.json"
    assert main(["gen-instance", "--kind", "template", "--n", "9", "--out", str(out), "--sigma", "0.1"]) == EXIT_OK
    instance = load_instance(str(out))
    assert instance.kind == "integer" and instance.noise_sigma == 0


def test_gen_instance_with_noise(tmp_path):
    out = tmp_path / "noisy.json"
    assert main(["gen-instance", "--n", "9", "--sigma", "1e-6", "--out", str(out)]) == EXIT_OK
    assert load_instance(str(out)).noise_sigma == 1e-6


def test_csv_is_sorted_and_reproducible(report):
    lines = render_csv(report).splitlines()
    assert lines[0].split(",") == [
        "mode", "n_segments", "solver_seed", "instance_seed", "outcome", "error",
        "max_residual", "basis_size", "multi_reductions", "precision_bits",
    ]
    assert [tuple(line.split(",")[2:4]) for line in lines[1:]] == [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
    assert lines[1].split(",")[5] == "4e-07"
    assert render_csv(report) == render_csv(BenchmarkReport(mode="noise", sigma=1e-6, runs=list(reversed(report.runs))))


def test_csv_timings_column(report):
    assert render_csv(report, timings=True).splitlines()[0].endswith(",wall_seconds")


def test_aggregate(report):
    (row,) = report.aggregate()
    assert (row.runs, row.successes, row.success_rate) == (4, 2, 0.5)
    assert row.mean_error == pytest.approx(3e-7)
    assert row.mean_basis_size == 110
    assert row.precision_bits == 1088


def test_markdown_report(report):
    markdown = render_report(report)
    assert markdown.startswith("## Benchmark: noise (sigma = 1e-06)")
    assert "| 9 | 4 | 50% |" in markdown
    assert "wall s" not in markdown


def test_success_grid(report):
    grid = render_success_grid(report, 9)
    assert "| 0 | x | . |" in grid
    assert "| 1 | x | . |" in grid
