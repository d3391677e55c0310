import numpy as np
import pytest

from curvcheck import boundary as B
from curvcheck import models as M
from curvcheck.charts import sample_points
from curvcheck.errors import ConfigError, NonPositiveDefiniteError


def grid_points(chart, n):
    axes = [np.linspace(lo, hi, n) for lo, hi in chart.domain]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)


@pytest.mark.parametrize(
    "name,params",
    [
        ("flat_half", {}),
        ("flat_ball_collar", {}),
        ("flat_ball_collar", {"full_ball": True}),
        ("hemisphere", {}),
        ("warped_umbilic", {}),
        ("warped_umbilic", {"k": "generic"}),
        ("perturbed_flat", {}),
        ("perturbed_flat_geodesic", {}),
    ],
)
def test_catalog_spd_on_grid(name, params):
    patch = M.builtin_model(name, **params)
    pts = grid_points(patch.chart, 17)
    g = patch.component_values(pts)
    from curvcheck.charts import _check_spd

    _check_spd(g, pts)  # raises on failure


def test_unknown_model():
    with pytest.raises(ConfigError, match="unknown model"):
        M.builtin_model("klein_bottle")


def test_perturbed_flat_spd_violation_for_large_eps():
    # a suitable seed makes eps = 0.5 lose positive definiteness
    raised = False
    for seed in range(6):
        try:
            M.builtin_model("perturbed_flat", eps=0.5, seed=seed)
        except NonPositiveDefiniteError:
            raised = True
            break
    assert raised


def test_warped_umbilic_is_umbilic(rng):
    for params in ({}, {"k": "generic"}, {"psi": "0.2*r*cos(t2) + 0.1*sin(t1)"}):
        patch = M.builtin_model("warped_umbilic", **params)
        bpts = sample_points(patch.chart, 12, rng, inset=0.08, boundary=True)
        assert B.umbilicity_residual(patch, bpts) < 1e-10


def test_perturbed_flat_is_generic_nonumbilic(rng):
    patch = M.builtin_model("perturbed_flat")
    bpts = sample_points(patch.chart, 12, rng, inset=0.08, boundary=True)
    assert B.umbilicity_residual(patch, bpts) > 1e-3


def test_perturbed_flat_geodesic_boundary(rng):
    patch = M.builtin_model("perturbed_flat_geodesic")
    bpts = sample_points(patch.chart, 12, rng, inset=0.08, boundary=True)
    sd = B.shape_operator(patch, bpts)
    assert np.max(np.abs(sd.second_fundamental)) < 1e-12


def test_hemisphere_ground_truth(rng):
    """Boundary data of the round hemisphere: P = g/2, intrinsic
    P = h/2, H = 0, W = 0."""
    from curvcheck import curvature as C

    patch = M.builtin_model("hemisphere")
    bpts = sample_points(patch.chart, 10, rng, inset=0.08, boundary=True)
    fr = C.CurvatureFrame.from_patch(patch, bpts, 2)
    g = C.values(fr.metric(0))
    assert np.max(np.abs(C.values(fr.schouten(0)) - 0.5 * g)) < 1e-9
    assert np.max(np.abs(C.values(fr.weyl(0)))) < 1e-9
    sd = B.shape_operator(patch, bpts)
    assert np.max(np.abs(sd.mean_curvature)) < 1e-9
    intr = B.intrinsic_curvature(patch, bpts)
    assert np.max(np.abs(intr.schouten - 0.5 * intr.induced_metric)) < 1e-9


def test_flat_ball_ground_truth(rng):
    """Flat-ball boundary data: P = 0, intrinsic P = h/2, H = 3, W = 0."""
    from curvcheck import curvature as C

    patch = M.builtin_model("flat_ball_collar")
    bpts = sample_points(patch.chart, 10, rng, inset=0.08, boundary=True)
    fr = C.CurvatureFrame.from_patch(patch, bpts, 2)
    assert np.max(np.abs(C.values(fr.schouten(0)))) < 1e-9
    assert np.max(np.abs(C.values(fr.weyl(0)))) < 1e-9
    sd = B.shape_operator(patch, bpts)
    assert np.max(np.abs(sd.mean_curvature - 3.0)) < 1e-9
    intr = B.intrinsic_curvature(patch, bpts)
    assert np.max(np.abs(intr.schouten - 0.5 * intr.induced_metric)) < 1e-9


def test_hemisphere_and_ball_are_w_and_s_flat(rng):
    for name in ("hemisphere", "flat_ball_collar"):
        patch = M.builtin_model(name)
        bpts = sample_points(patch.chart, 8, rng, inset=0.08, boundary=True)
        s = B.s_tensor(patch, bpts, order=3)
        assert np.max(np.abs(s.components)) < 1e-9


def test_shear_preserves_boundary_metric(rng):
    hemi = M.builtin_model("hemisphere")
    sheared = M.shear_patch(hemi, (0.1, -0.08, 0.05))
    bpts = sample_points(sheared.chart, 6, rng, inset=0.1, boundary=True)
    g0 = hemi.component_values(bpts)
    g1 = sheared.component_values(bpts)
    assert np.max(np.abs(g0[..., 1:, 1:] - g1[..., 1:, 1:])) < 1e-13
    assert np.max(np.abs(g1[..., 0, 1:])) > 1e-3  # genuinely not normal form
