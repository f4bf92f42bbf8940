import xml.etree.ElementTree as ET
from fractions import Fraction

import numpy as np
import pytest

from birkhoff_kit.domain_geometry import PoleDiskDomain, ResonanceTubeDomain
from birkhoff_kit.errors import ValidationError
from birkhoff_kit.exact_algebra import ExactScalar, TruncatedSeries
from birkhoff_kit.tracer import (
    Polyline,
    emit_plot,
    format_csv,
    grid_eval,
    hausdorff,
    marching_squares,
    parse_csv,
    poincare_curve,
    residual_ratios,
)

X, Y = TruncatedSeries.variable(0, 2), TruncatedSeries.variable(1, 2)
BOX = (-1, 1, -1, 1)


def trace(P, window=BOX, res=(64, 64), threads=1):
    g = grid_eval(P, window, res, threads)
    return g, marching_squares(g)


def test_grid_values_are_exact_rounded():
    P = X ** 2 - Y.scale(3) + Fraction(1, 7)
    g = grid_eval(P, (0, 1, 0, 2), (5, 3))
    for j, y in enumerate(g.y_nodes):
        for i, x in enumerate(g.x_nodes):
            assert g.values[j, i] == float(x * x - 3 * y + Fraction(1, 7))


def test_no_sign_change_gives_no_curves():
    _, lines = trace(1 + X ** 2 + Y ** 2)
    assert lines == []


def test_horizontal_line():
    g, lines = trace(Y - Fraction(1, 3), res=(33, 33))
    assert len(lines) == 1 and not lines[0].closed
    pts = lines[0].as_array()
    assert np.allclose(pts[:, 1], 1 / 3, atol=1e-12)
    assert pts[:, 0].min() == -1 and pts[:, 0].max() == 1


def test_circle_is_closed_and_sound():
    P = X ** 2 + Y ** 2 - Fraction(1, 4)
    g, lines = trace(P)
    assert len(lines) == 1 and lines[0].closed
    r = np.hypot(*lines[0].as_array().T)
    assert np.abs(r - 0.5).max() < g.cell_diagonal
    assert residual_ratios(g, lines).max() <= 4


def test_two_components():
    P = (X ** 2 + Y ** 2 - Fraction(1, 16)) * ((X - Fraction(1, 2)) ** 2 + Y ** 2 - Fraction(1, 64))
    _, lines = trace(P, res=(128, 128))
    assert len(lines) == 2 and all(l.closed for l in lines)


def test_saddle_cells_separate_crossing_lines():
    # the two branches of a hyperbola pass near the saddle at the origin
    g, lines = trace(X * Y - Fraction(1, 100), res=(40, 40))
    assert len(lines) == 2
    assert all(not l.closed for l in lines)


def test_poincare_p2_values_are_finite():
    g, lines = trace(poincare_curve(2), res=(128, 128))
    assert np.isfinite(g.values).all()
    assert lines and residual_ratios(g, lines).max() <= 4


def test_degenerate_window():
    with pytest.raises(ValidationError):
        grid_eval(X, (0, 0, -1, 1), (10, 10))
    with pytest.raises(ValidationError):
        grid_eval(X, BOX, (1, 10))
    with pytest.raises(ValidationError):
        grid_eval(X + ExactScalar(0, 1), BOX, (10, 10))


def test_threads_do_not_change_values():
    P = poincare_curve(4)
    a = grid_eval(P, BOX, (65, 65), 1)
    b = grid_eval(P, BOX, (65, 65), 4)
    assert np.array_equal(a.values, b.values)


def test_csv_roundtrip():
    _, lines = trace(X ** 2 + Y ** 2 - Fraction(1, 4), res=(16, 16))
    _, more = trace(Y - Fraction(1, 3), res=(8, 8))
    lines = lines + more
    text = format_csv(lines)
    assert text.startswith("polyline_id,x,y\n")
    assert parse_csv(text) == lines
    with pytest.raises(ValidationError):
        parse_csv("a,b\n")


def test_svg_is_deterministic(tmp_path):
    outs = []
    for threads in (1, 3):
        _, lines = trace(poincare_curve(3), res=(96, 96), threads=threads)
        p = emit_plot(lines, tmp_path / f"t{threads}.svg", PoleDiskDomain(Fraction(1, 2), 1, 3, 3), window=BOX)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    root = ET.fromstring(outs[0])
    assert root.tag.endswith("svg")


def test_empty_svg_is_valid(tmp_path):
    p = emit_plot([], tmp_path / "empty.svg")
    ET.fromstring(p.read_text())
    p = emit_plot([], tmp_path / "empty.csv")
    assert p.read_text() == "polyline_id,x,y\n"


def test_tube_shading_needs_two_variables(tmp_path):
    emit_plot([], tmp_path / "t.svg", ResonanceTubeDomain(2, 3), window=BOX)
    with pytest.raises(ValidationError):
        emit_plot([], tmp_path / "t.svg", ResonanceTubeDomain(3, 3), window=BOX)
    with pytest.raises(ValidationError):
        emit_plot([], tmp_path / "t.txt", fmt="png")


def test_curve_hugs_the_poles():
    # near x = 0 the y-branches of P_n sit close to y = -1/k
    n = 4
    g, lines = trace(poincare_curve(n), (-0.05, 0.05, -1.1, 0.1), (64, 512))
    pts = np.concatenate([l.as_array() for l in lines])
    near_axis = pts[np.abs(pts[:, 0]) < 0.01]
    for k in range(2, n + 1):
        assert np.abs(near_axis[:, 1] + 1 / k).min() < 0.02


def test_hausdorff_basic():
    a = [Polyline(((0.0, 0.0), (1.0, 0.0)))]
    b = [Polyline(((0.0, 0.5), (1.0, 0.5)))]
    assert hausdorff(a, b) == 0.5
    assert hausdorff([], []) == 0
    assert hausdorff(a, []) == np.inf


@pytest.mark.parametrize("n", [4, 5])
def test_successive_truncations_agree_away_from_poles(n):
    window = (-0.4, 0.4, 0.05, 0.6)
    g, a = trace(poincare_curve(n), window, (128, 128))
    _, b = trace(poincare_curve(n + 1), window, (128, 128))
    assert hausdorff(a, b) <= 10 * g.cell_diagonal
