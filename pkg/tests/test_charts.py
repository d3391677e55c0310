import json

import numpy as np
import pytest

from curvcheck import charts as CH
from curvcheck import models as M
from curvcheck.errors import ChartError, NonPositiveDefiniteError

from conftest import rel_err


def test_chart_validation():
    with pytest.raises(ChartError):
        CH.Chart(("a", "b", "c"), ((0, 1),) * 4)
    with pytest.raises(ChartError):
        CH.Chart(("a", "b", "c", "d"), ((0, 1), (1, 0), (0, 1), (0, 1)))
    with pytest.raises(ChartError):
        CH.Chart(("a", "b", "c", "d"), ((0.5, 1),) * 4)  # face not at 0


def test_point_sample_consistency():
    ch = CH.Chart(("a", "b", "c", "d"), ((0, 1),) * 4)
    p = CH.PointSample.of(ch, [0.0, 0.5, 0.5, 0.5])
    assert p.is_boundary
    q = CH.PointSample.of(ch, [0.2, 0.5, 0.5, 0.5])
    assert not q.is_boundary
    with pytest.raises(ChartError):
        CH.PointSample.of(ch, [0.2, 0.5, 0.5, 0.5], is_boundary=True)
    with pytest.raises(ChartError):
        CH.PointSample.of(ch, [0.0, 2.0, 0.5, 0.5])


def test_metric_at_flat_identity():
    flat = M.builtin_model("flat_half")
    pt = CH.PointSample.of(flat.chart, [0.3, 0.4, 0.5, 0.6])
    g = CH.metric_at(flat, pt, 2)
    for i in range(4):
        for j in range(4):
            expect = 1.0 if i == j else 0.0
            assert abs(g[i, j].value - expect) < 1e-15
            assert np.max(np.abs(g[i, j].coeffs[1:])) < 1e-15


def test_metric_at_hemisphere_boundary_is_round():
    hemi = M.builtin_model("hemisphere")
    pt = CH.PointSample.of(hemi.chart, [0.0, 1.1, 1.3, 2.2])
    g = CH.metric_at(hemi, pt, 2)
    assert abs(g[0, 0].value - 1.0) < 1e-15
    assert abs(g[1, 1].value - 1.0) < 1e-15
    assert abs(g[2, 2].value - np.sin(1.1) ** 2) < 1e-15
    assert abs(g[3, 3].value - np.sin(1.1) ** 2 * np.sin(1.3) ** 2) < 1e-15


def test_metric_not_spd_raises():
    ch = CH.Chart(("a", "b", "c", "d"), ((0, 1),) * 4)
    bad = CH.ExprMetricPatch(
        ch,
        [["-1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
    )
    with pytest.raises(NonPositiveDefiniteError) as err:
        bad.metric_jets(np.array([0.5, 0.5, 0.5, 0.5]), 1)
    assert err.value.eigenvalues is not None


def test_invert_metric_identity_and_diag():
    flat = M.builtin_model("flat_half")
    pt = CH.PointSample.of(flat.chart, [0.3, 0.4, 0.5, 0.6])
    g = CH.metric_at(flat, pt, 2)
    gi = CH.invert_metric(g)
    for i in range(4):
        assert abs(gi[i, i].value - 1.0) < 1e-14

    ch = CH.Chart(("a", "b", "c", "d"), ((0, 1),) * 4)
    c2 = CH.ExprMetricPatch(
        ch,
        [["1", "0", "0", "0"], ["0", "9", "0", "0"], ["0", "0", "9", "0"], ["0", "0", "0", "9"]],
    )
    gq = CH.metric_at(c2, CH.PointSample.of(ch, [0.1, 0.1, 0.1, 0.1]), 2)
    gqi = CH.invert_metric(gq)
    assert abs(gqi[1, 1].value - 1.0 / 9.0) < 1e-14


def test_invert_metric_self_consistency_hemisphere():
    hemi = M.builtin_model("hemisphere")
    pt = CH.PointSample.of(hemi.chart, [0.3, 1.1, 1.3, 2.2])
    g = hemi.metric_jets(pt.coords, 3)
    from curvcheck.jets import jc_matrix_inverse, jc_mul, jet_space

    sp = jet_space(4, 3)
    gi = jc_matrix_inverse(sp, g)
    prod = np.zeros_like(g)
    for i in range(4):
        for j in range(4):
            for k in range(4):
                prod[i, j] += jc_mul(sp, g[i, k], gi[k, j])
    eye = np.zeros_like(g)
    for i in range(4):
        eye[i, i, 0] = 1.0
    assert np.max(np.abs(prod - eye)) < 1e-12
    # double inversion returns the original jets
    gii = jc_matrix_inverse(sp, gi)
    assert np.max(np.abs(gii - g)) < 1e-11


def test_metric_file_round_trip(tmp_path):
    doc = {
        "name": "stretched",
        "coords": ["u", "x", "y", "z"],
        "domain": [[0, 1]] * 4,
        "g": [
            ["1", "0", "0", "0"],
            ["0", "1 + u^2", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
        ],
        "boundary_axis": 0,
    }
    path = tmp_path / "metric.json"
    path.write_text(json.dumps(doc))
    patch = M.load_metric_file(path)
    assert patch.name == "stretched"
    g = patch.component_values(np.array([0.5, 0, 0, 0]))
    assert abs(g[1, 1] - 1.25) < 1e-15


def test_metric_file_rejects_asymmetric(tmp_path):
    doc = {
        "name": "bad",
        "coords": ["u", "x", "y", "z"],
        "domain": [[0, 1]] * 4,
        "g": [
            ["1", "u", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
        ],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ChartError, match="symmetric"):
        M.load_metric_file(path)


def test_metric_file_model_reference(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"model": "hemisphere"}))
    patch = M.load_metric_file(path)
    assert patch.name == "hemisphere"


def test_normal_form_detection():
    assert CH.is_normal_form(M.builtin_model("hemisphere"))
    assert CH.is_normal_form(M.builtin_model("perturbed_flat_geodesic"))
    assert not CH.is_normal_form(M.builtin_model("perturbed_flat"))
    sheared = M.shear_patch(M.builtin_model("flat_half"), (0.3, 0.0, 0.0))
    assert not CH.is_normal_form(sheared)
