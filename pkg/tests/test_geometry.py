import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usq.geometry import (
    BOTTOM,
    LEFT,
    RIGHT,
    TOP,
    Rect,
    Vec2,
    closest_border_point,
    closest_edge,
    dist_to_rect_border,
    distance,
    edges_at,
    polyline_exit_point,
    rects_intersect,
    segment_rect_exit_point,
    vec2,
)

R10 = Rect(0, 0, 10, 10)
coord = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)


@pytest.mark.parametrize("a,b,expected", [
    ((0, 0), (3, 4), 5.0),
    ((1, 1), (1, 1), 0.0),
    ((0, 0), (0.6, 0.8), 1.0),
])
def test_distance_examples(a, b, expected):
    assert distance(a, b) == pytest.approx(expected, abs=1e-12)


@given(point, point, point)
def test_distance_is_a_metric(a, b, c):
    assert distance(a, b) >= 0
    assert distance(a, a) == 0
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@pytest.mark.parametrize("p,expected", [((1, 1), 1.0), ((5, 5), 5.0), ((9.5, 2), 0.5)])
def test_dist_to_rect_border_examples(p, expected):
    assert dist_to_rect_border(p, R10) == pytest.approx(expected)


def test_dist_to_rect_border_rejects_outside_points():
    with pytest.raises(ValueError):
        dist_to_rect_border((11, 5), R10)
    # the closed max edge is still measurable
    assert dist_to_rect_border((10, 5), R10) == 0.0


@pytest.mark.parametrize("p0,p1,expected", [
    ((5, 5), (15, 5), (10, 5)),
    ((5, 5), (6, 6), None),
    ((9, 9), (11, 11), (10, 10)),
])
def test_segment_exit_examples(p0, p1, expected):
    got = segment_rect_exit_point(p0, p1, R10)
    if expected is None:
        assert got is None
    else:
        assert got == pytest.approx(expected, abs=1e-9)


def test_segment_exit_stationary_and_backwards():
    assert segment_rect_exit_point((5, 5), (5, 5), R10) is None
    assert segment_rect_exit_point((1, 5), (-1, 5), R10) == (0, 5)
    assert segment_rect_exit_point((5, 1), (5, -3), R10) == (5, 0)


@given(st.floats(0.01, 9.99), st.floats(0.01, 9.99), point)
def test_segment_exit_lies_on_border(x, y, p1):
    hit = segment_rect_exit_point((x, y), p1, R10)
    if hit is None:
        assert R10.contains_closed(p1)
        return
    on_x = min(abs(hit[0] - 0), abs(hit[0] - 10)) <= 1e-9 and -1e-9 <= hit[1] <= 10 + 1e-9
    on_y = min(abs(hit[1] - 0), abs(hit[1] - 10)) <= 1e-9 and -1e-9 <= hit[0] <= 10 + 1e-9
    assert on_x or on_y


def test_polyline_exit_uses_second_segment():
    assert polyline_exit_point([(5, 5), (9, 5), (11, 5)], R10) == (10, 5)
    assert polyline_exit_point([(5, 5), (6, 5), (7, 5)], R10) is None


@pytest.mark.parametrize("p,expected", [((1, 5), (0, 5)), ((5, 5), (0, 5)), ((5, 9), (5, 10))])
def test_closest_border_point_examples(p, expected):
    assert closest_border_point(p, R10) == expected


def test_closest_edge_tie_priority():
    # right/top tie resolves to right, bottom/top tie to bottom
    assert closest_edge((9, 9), R10) == RIGHT
    assert closest_edge((10, 5), Rect(0, 0, 20, 10)) == BOTTOM


def test_edges_at():
    assert edges_at((10, 10), R10) == [RIGHT, TOP]
    assert edges_at((0, 3), R10) == [LEFT]
    assert edges_at((5, 5), R10) == []


@pytest.mark.parametrize("a,b,expected", [
    (Rect(0, 0, 1, 1), Rect(0.5, 0.5, 2, 2), True),
    (Rect(0, 0, 1, 1), Rect(2, 2, 3, 3), False),
    (Rect(0, 0, 1, 1), Rect(1, 0, 2, 1), False),
])
def test_rects_intersect_examples(a, b, expected):
    assert rects_intersect(a, b) is expected
    assert rects_intersect(b, a) is expected


@pytest.mark.parametrize("bad", [
    (0, 0, 0, 1), (0, 0, 1, 0), (1, 0, 0, 1), (0, 0, math.nan, 1), (0, 0, math.inf, 1),
])
def test_rect_rejects_degenerate(bad):
    with pytest.raises(ValueError):
        Rect(*bad)


def test_vec2_rejects_non_finite():
    with pytest.raises(ValueError):
        vec2(math.nan, 0)
    assert vec2(1, 2) == Vec2(1.0, 2.0)


def test_rect_half_open_membership():
    assert R10.contains((0, 0))
    assert not R10.contains((10, 5))
    assert R10.contains((10, 5), close_x=True)
    assert not R10.contains((5, 10), close_x=True)
    assert R10.contains((10, 10), close_x=True, close_y=True)


@settings(max_examples=300)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.5, 50), st.floats(0.5, 50),
       st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_quadrants_partition_points(x0, y0, w, h, u, v):
    r = Rect(x0, y0, x0 + w, y0 + h)
    p = (x0 + u * w, y0 + v * h)
    if not r.contains(p):
        return  # rounding pushed the sample onto the max edge
    assert sum(q.contains(p) for q in r.quadrants()) == 1


def test_quadrant_order_is_nw_ne_sw_se():
    nw, ne, sw, se = R10.quadrants()
    assert nw == Rect(0, 5, 5, 10)
    assert ne == Rect(5, 5, 10, 10)
    assert sw == Rect(0, 0, 5, 5)
    assert se == Rect(5, 0, 10, 5)


def test_clip():
    assert R10.clip(Rect(5, 5, 20, 20)) == Rect(5, 5, 10, 10)
    assert R10.clip(Rect(10, 0, 20, 10)) is None
