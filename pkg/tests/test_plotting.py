import pytest

from wc4dvar.plotting import render_svg


def test_render_is_deterministic_and_counts_series():
    series = [("a", [0, 1, 2], [3.0, 2.0, 1.0]), ("b", [0, 1, 2], [2.5, 1.5, 0.5])]
    svg = render_svg(series, title="t", xlabel="x", ylabel="y")
    assert svg == render_svg(series, title="t", xlabel="x", ylabel="y")
    assert svg.count("<polyline") == 2
    assert "</svg>" in svg


def test_scatter_and_log_axis():
    svg = render_svg([("s", [1, 2, 3], [1.0, 10.0, 100.0])], logy=True, scatter=True)
    assert "<circle" in svg and "<polyline" not in svg


def test_render_errors():
    with pytest.raises(ValueError):
        render_svg([])
    with pytest.raises(ValueError):
        render_svg([("s", [1, 2], [1.0, 0.0])], logy=True)
