import pytest

from stackiqa.evalkit import (
    CvConfig,
    SubsetResult,
    SupporterCell,
    SupporterMatrix,
    cross_validate,
    subset_search,
    supporter_matrix,
)
from stackiqa.report import (
    emit_report,
    write_baselines_csv,
    write_cv_report_csv,
    write_subset_csv,
    write_subset_scatter_svg,
    write_supporter_heatmap_svg,
    write_supporters_csv,
)
from stackiqa.stacker import FeatureSpec

from _synth import synthetic_dataset


@pytest.fixture(scope="module")
def small_results():
    pairs, cache = synthetic_dataset(n_pairs=60, seed=21)
    cv = CvConfig(cycles=2, seed=7)
    results = subset_search(["pieapp", "niqe"], [1, 2], pairs, cache, cv, jobs=1)
    matrix = supporter_matrix(["pieapp", "niqe", "topiq"], pairs, cache)
    report = cross_validate(pairs, FeatureSpec(metric_ids=("pieapp", "niqe")), cache, cv)
    return results, matrix, report


def test_baselines_header(tmp_path):
    path = write_baselines_csv([("psnr", 0.75, 4)], tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "metric_id,accuracy,n"
    assert lines[1] == "psnr,0.75,4"


def test_cv_report_format(tmp_path, small_results):
    _, _, report = small_results
    path = write_cv_report_csv(report, tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cycle,accuracy,n_train,n_test"
    assert lines[-1].startswith("median,")
    assert len(lines) == 2 + len(report.cycles)


def test_subset_csv_format(tmp_path, small_results):
    results, _, _ = small_results
    path = write_subset_csv(results, tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "size,metric_ids,median_accuracy"
    assert len(lines) == 1 + len(results)
    assert lines[1].startswith("1,pieapp,")
    # multi-id cell is comma-joined, hence quoted
    assert '"pieapp,niqe"' in lines[3]


def test_supporters_csv_format(tmp_path, small_results):
    _, matrix, _ = small_results
    path = write_supporters_csv(matrix, tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "supported,supporter,accuracy,count"
    assert len(lines) == 1 + len(matrix.cells)


def test_svg_outputs_deterministic(tmp_path, small_results):
    results, matrix, _ = small_results
    d1, d2 = tmp_path / "one", tmp_path / "two"
    for out in (d1, d2):
        write_subset_scatter_svg(results, out)
        write_supporter_heatmap_svg(matrix, out)
        write_subset_csv(results, out)
        write_supporters_csv(matrix, out)
    for name in (
        "subset_scatter.svg",
        "supporter_heatmap.svg",
        "subset_search.csv",
        "supporters.csv",
    ):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_svg_well_formed(tmp_path, small_results):
    import xml.etree.ElementTree as ET

    results, matrix, _ = small_results
    for path in (
        write_subset_scatter_svg(results, tmp_path),
        write_supporter_heatmap_svg(matrix, tmp_path),
    ):
        ET.parse(path)


def test_emit_report_dispatch(tmp_path, small_results):
    results, matrix, report = small_results
    wrote = emit_report(report, tmp_path / "a")
    wrote += emit_report(matrix, tmp_path / "b")
    wrote += emit_report(results, tmp_path / "c")
    assert all(p.exists() for p in wrote)
    names = sorted(p.name for p in wrote)
    assert names == [
        "cv_report.csv",
        "subset_scatter.svg",
        "subset_search.csv",
        "supporter_heatmap.svg",
        "supporters.csv",
    ]


def test_single_size_scatter(tmp_path):
    results = [SubsetResult(metric_ids=("a",), median_accuracy=0.7)]
    path = write_subset_scatter_svg(results, tmp_path)
    assert path.exists()


def test_heatmap_with_missing_cells(tmp_path):
    matrix = SupporterMatrix(
        metric_ids=("x", "y"),
        cells={("x", "y"): SupporterCell(accuracy=1.0, count=3)},
    )
    path = write_supporter_heatmap_svg(matrix, tmp_path)
    assert "1.00" in path.read_text()
