import math
import xml.etree.ElementTree as ET

from fa_lawn.harness import SweepRow, SweepTable
from fa_lawn.svgplot import render


def table(axis, values):
    rows = []
    for i, arch in enumerate(("FPA", "FA(5λ)", "FA(10λ)")):
        rows += [SweepRow(axis, v, arch, 10.0 - i + 0.1 * j, 0.1, 1.0) for j, v in enumerate(values)]
    return SweepTable(rows)


def test_one_polyline_per_architecture():
    root = ET.fromstring(render(table("rate", [1, 2, 3])))
    lines = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert len(lines) == 3
    assert all(len(p.get("points").split()) == 3 for p in lines)


def test_log_axis_for_cost_ceiling():
    svg = render(table("lqr_cost", [1.0, 2.0, 4.0]))
    root = ET.fromstring(svg)
    xs = [float(pt.split(",")[0]) for pt in root.find("{http://www.w3.org/2000/svg}polyline").get("points").split()]
    assert math.isclose(xs[1] - xs[0], xs[2] - xs[1])
    assert "log scale" in svg


def test_infeasible_points_skipped():
    t = table("rate", [1, 2])
    t.rows[0] = SweepRow("rate", 1, "FPA", math.nan, math.nan, 0.0)
    root = ET.fromstring(render(t))
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")[0].get("points").split()) == 1
