import json
import math

import numpy as np
import pytest

import focalspec as fsp


SCENE = {
    "width": 96,
    "height": 8,
    "num_views": 121,
    "u_ref": 60,
    "seed": 5,
    "primitives": [
        {"kind": "textured_plane", "x": 0, "x_end": 96, "disparity": 0.0, "texel_size": 3},
        {"kind": "textured_plane", "x": 30, "x_end": 60, "disparity": 0.5, "texel_size": 2},
    ],
}


def point_epi(n, w, x0, d, u_ref=None):
    u_ref = n // 2 if u_ref is None else u_ref
    epi = np.zeros((n, w), np.float32)
    for u in range(n):
        x = x0 - d * (u - u_ref)
        i = math.floor(x)
        t = x - i
        epi[u, i] += 1 - t
        epi[u, i + 1] += t
    return epi


def test_default_config_has_199_layers():
    cfg = fsp.RefocusConfig()
    assert cfg.layer_count == 199
    assert cfg.focal_axis[0] == pytest.approx(-1.0)
    assert cfg.focal_axis[-1] == pytest.approx(0.98)


def test_render_and_refocus_shapes():
    lf = fsp.render_scene(json.dumps(SCENE))
    assert lf.array().shape == (121, 8, 96, 1)
    sparse = lf.downsample(15)
    assert sparse.num_views == 9 and sparse.baseline_unit == 15.0
    stack = fsp.refocus(sparse)
    assert stack.array().shape == (199, 8, 96, 1)
    assert stack.row(3).shape == (199, 96)


def test_fss_symmetry_and_round_trip():
    rng = np.random.default_rng(0)
    s = rng.random((199, 64), dtype=np.float32)
    spec = fsp.fss_forward(s)
    assert spec.dtype == np.complex128 and spec.shape == (199, 64)
    assert fsp.conj_symmetry_residual(spec) <= 1e-6
    # unitary: Parseval and numpy agree up to the centering
    assert np.sum(np.abs(spec) ** 2) == pytest.approx(np.sum(s.astype(np.float64) ** 2), rel=1e-9)
    ref = np.fft.fftshift(np.fft.fft2(s.astype(np.float64))) / math.sqrt(s.size)
    assert np.allclose(spec, ref, atol=1e-9)
    back = fsp.fss_inverse(spec)
    assert np.allclose(back["slice"], s, atol=1e-6)
    assert not back["symmetry_warning"]


def test_nine_view_point_has_nine_lines():
    cfg = fsp.RefocusConfig.with_layers(-4.0, 0.01, 800)
    slice_ = fsp.refocus_epi(point_epi(9, 64, 32.3, 0.0), 4, 1.0, cfg)
    lines = fsp.detect_spectral_lines(fsp.fss_forward(slice_), 0.01)
    assert len(lines) == 9


def test_point_energy_on_predicted_lines():
    slice_ = fsp.refocus_epi(point_epi(9, 128, 64.3, 0.3), 4)
    spec = fsp.fss_forward(slice_)
    mask = fsp.line_mask(spec.shape[0], spec.shape[1], 0.01, 9, 4)
    assert mask.dtype == bool
    assert fsp.energy_concentration(spec, mask) >= 0.95
    full = np.ones_like(mask)
    assert fsp.energy_concentration(spec, full) == pytest.approx(1.0)


def test_support_mask_invariant_under_downsampling():
    dense = fsp.support_mask(199, 128, 0.01, 121, 60, 1.0)
    sparse = fsp.support_mask(199, 128, 0.01, 9, 4, 15.0)
    assert np.array_equal(dense, sparse)
    assert fsp.apex_angle(0.01, 121) == pytest.approx(2 * math.atan(0.6))


def test_analytic_antialias_beats_aliased_input():
    dense = fsp.render_scene(json.dumps(SCENE))
    sparse = dense.downsample(15)
    gt = fsp.refocus(dense)
    aliased = fsp.refocus(sparse)
    out = fsp.antialias(sparse, op="analytic", m=14)
    report = fsp.evaluate_stack(out, gt, aliased)
    assert report["mean_rel_psnr"] > 1.0
    assert len(report["layers"]) == 199
    part = fsp.antialias(sparse, op="lowpass", cutoff=0.2, rows=(2, 4))
    assert part.height == 2


def test_input_errors_raise_value_error():
    sparse = fsp.render_scene(json.dumps(SCENE)).downsample(15)
    with pytest.raises(fsp.InputError):
        fsp.antialias(sparse, op="neural")
    with pytest.raises(ValueError):
        fsp.antialias(sparse, rows=(5, 50))
    with pytest.raises(ValueError):
        fsp.render_scene('{"width": 10}')
    with pytest.raises(ValueError):
        fsp.RefocusConfig(d_min=1.0, d_max=0.0)


def test_metrics():
    a = np.full((16, 16), 0.5, np.float32)
    assert fsp.psnr(a, a) == math.inf
    assert fsp.psnr(a + 0.1, a) == pytest.approx(20.0, abs=1e-4)
    assert fsp.ssim(a, a) == pytest.approx(1.0)


def test_fstk_round_trip(tmp_path):
    sparse = fsp.render_scene(json.dumps(SCENE)).downsample(15)
    stack = fsp.refocus(sparse, fsp.RefocusConfig.with_layers(-0.5, 0.05, 8))
    path = tmp_path / "s.fstk"
    fsp.write_fstk(path, stack)
    back = fsp.read_fstk(path)
    assert np.array_equal(back.array(), stack.array())
    assert back.focal_axis == pytest.approx(stack.focal_axis)


def test_lightfield_from_numpy(tmp_path):
    views = np.random.default_rng(1).random((5, 4, 20), dtype=np.float32)
    lf = fsp.LightField(views, u_ref=2)
    assert lf.epi(1).shape == (5, 20, 1)
    fsp.save_lightfield(tmp_path, lf)
    back = fsp.load_lightfield(tmp_path)
    assert np.allclose(back.array()[..., 0], views, atol=1 / 65535)
