import pytest

from siq import BBox
from siq.engine import BoxInfo, QueryResult
from siq.render import frame_svg, render_results


def _info(name, label, box):
    return BoxInfo(name, label, 0.9, box)


def test_frame_svg_viewport_and_rects():
    svg = frame_svg([
        _info("BB#1-1", "person", BBox(100, 50, 150, 90)),
        _info("BB#1-2", "car", BBox(90, 40, 200, 120)),
    ])
    assert 'viewBox="80 30 130 100"' in svg
    assert '<rect x="100" y="50" width="50" height="40"' in svg
    assert "BB#1-2 car 0.90" in svg


def test_frame_svg_escapes_labels():
    svg = frame_svg([_info("BB#1-1", "a<b>&c", BBox(0, 0, 10, 10))])
    assert "a&lt;b&gt;&amp;c" in svg


def test_frame_svg_requires_boxes():
    with pytest.raises(ValueError):
        frame_svg([])


def test_render_results_dedupes_and_sanitises(tmp_path):
    info_a = _info("BB#x/1-1", "person", BBox(0, 0, 10, 10))
    info_b = _info("BB#x/1-2", "car", BBox(5, 5, 20, 20))
    result = QueryResult(
        frames={"x/1": [{"$a": info_a, "$b": info_b}, {"$a": info_a, "$b": info_b}]},
        log=[], groundings={object()},  # type: ignore[arg-type]
    )
    written = render_results(result, tmp_path)
    assert [p.name for p in written] == ["frame_x_1.svg"]
    content = written[0].read_text(encoding="utf-8")
    assert content.count("<rect") == 2  # duplicates collapse


def test_render_results_naming_collision(tmp_path):
    info = _info("BB#a-1", "dog", BBox(0, 0, 5, 5))
    result = QueryResult(
        frames={"a/1": [{"$x": info}], "a_1": [{"$x": info}]},
        log=[], groundings={object()},  # type: ignore[arg-type]
    )
    written = render_results(result, tmp_path)
    assert sorted(p.name for p in written) == ["frame_a_1.svg", "frame_a_1~2.svg"]
